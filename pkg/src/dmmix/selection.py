"""Mixture-order selection by penalized divergence with repeated data splits.

Each candidate order is scored on a selection half of the data by the
minimized divergence (best of a few restarts) plus a dimension penalty;
the other half is reserved for estimation at the selected order.  Repeating
the split and majority-voting the per-split choices stabilizes the order,
and parameters are averaged across the splits that agree with the vote.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .engine import FitConfig, FitResult, fit
from .mixtures import MixtureSpec, canonicalize, family_dim

PenaltyRule = Union[str, float, Callable[[int], float]]


@dataclass(frozen=True)
class SelectionConfig:
    """Controls the candidate orders, the penalty, and the split schedule."""

    k_max: int = 3
    penalty: PenaltyRule = "bic_half_log"
    splits: int = 5
    split_ratio: float = 0.5
    seed: int = 0
    restarts: int = 3
    fit_config: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.splits < 1:
            raise ValueError("splits must be at least 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must lie in (0, 1)")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if isinstance(self.penalty, str) and self.penalty != "bic_half_log":
            raise ValueError(f"unknown penalty rule {self.penalty!r}")


@dataclass(frozen=True)
class SelectionResult:
    per_split_k: tuple[int, ...]
    k_hat: int
    final_estimate: MixtureSpec
    gdic_table: tuple[dict[int, tuple[float, float, float]], ...]


def param_dim(k: int, family: str) -> int:
    """Free-parameter count at order k: (k - 1) weights plus k component blocks."""
    if k < 1:
        raise ValueError("order must be at least 1")
    return (k - 1) + k * family_dim(family)


def penalty_weight(penalty: PenaltyRule, n1: int) -> float:
    if penalty == "bic_half_log":
        return 0.5 * np.log(n1)
    if callable(penalty):
        return float(penalty(n1))
    return float(penalty)


def _sub_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1)[0] % 2**31)


def _best_fit(
    data: np.ndarray, family: str, k: int, config: SelectionConfig, base_seed: int
) -> tuple[float, FitResult | None]:
    """Best-of-restarts fit; (+inf, None) when every restart fails."""
    best_risk, best = np.inf, None
    for r in range(config.restarts):
        cfg = dataclasses.replace(config.fit_config, seed=_sub_seed(base_seed, k, r),
                                  init="kmeans", theta0=None)
        try:
            res = fit(data, family, k, cfg)
        except (FloatingPointError, RuntimeError):
            continue
        risk = float(res.objective_trace[-1])
        if np.isfinite(risk) and risk < best_risk:
            best_risk, best = risk, res
    return best_risk, best


def gdic_row(
    k: int, selection_data: np.ndarray, family: str, config: SelectionConfig,
    base_seed: int | None = None,
) -> tuple[float, float, float]:
    """(risk, penalty, gdic) for one candidate order on the selection data."""
    data = np.asarray(selection_data, dtype=float)
    n1 = data.shape[0]
    risk, _ = _best_fit(data, family, k, config,
                        config.seed if base_seed is None else base_seed)
    pen = penalty_weight(config.penalty, n1) / n1 * param_dim(k, family)
    return risk, pen, risk + pen


def gdic(k: int, selection_data: np.ndarray, family: str, config: SelectionConfig) -> float:
    """Penalized selection score; lower is better, +inf when no fit succeeds."""
    return gdic_row(k, selection_data, family, config)[2]


def majority_vote(votes) -> int:
    """Most frequent order; ties resolve toward the smaller order."""
    votes = list(votes)
    if not votes:
        raise ValueError("no votes to aggregate")
    counts = Counter(votes)
    top = max(counts.values())
    return min(k for k, c in counts.items() if c == top)


def split_select_estimate(data, family: str, config: SelectionConfig) -> SelectionResult:
    """Select the order on one half, estimate on the other, vote across splits."""
    data = np.asarray(data, dtype=float).ravel()
    n = data.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations to split")
    rng = np.random.default_rng(config.seed)

    per_split_k: list[int] = []
    tables: list[dict[int, tuple[float, float, float]]] = []
    estimates: list[tuple[int, MixtureSpec | None]] = []
    for c in range(config.splits):
        perm = rng.permutation(n)
        n1 = min(max(int(round(n * config.split_ratio)), 1), n - 1)
        d_select, d_estimate = data[perm[:n1]], data[perm[n1:]]

        rows = {
            k: gdic_row(k, d_select, family, config, base_seed=_sub_seed(config.seed, 11, c))
            for k in range(1, config.k_max + 1)
        }
        k_c = min(rows, key=lambda k: (rows[k][2], k))
        _, res = _best_fit(d_estimate, family, k_c, config,
                           base_seed=_sub_seed(config.seed, 23, c))
        per_split_k.append(k_c)
        tables.append(rows)
        estimates.append((k_c, canonicalize(res.theta_hat) if res is not None else None))

    k_hat = majority_vote(per_split_k)
    agreeing = [th for kc, th in estimates if kc == k_hat and th is not None]
    if agreeing:
        weights = np.mean([th.weights for th in agreeing], axis=0)
        params = np.mean([th.params for th in agreeing], axis=0)
        final = canonicalize(MixtureSpec(family, weights, params))
    else:
        _, res = _best_fit(data, family, k_hat, config, base_seed=_sub_seed(config.seed, 37))
        if res is None:
            raise RuntimeError("no fit succeeded at the voted order")
        final = canonicalize(res.theta_hat)
    return SelectionResult(tuple(per_split_k), k_hat, final, tuple(tables))


def dimension_match(estimate: MixtureSpec, truth: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Embed both parameter vectors in the larger order by zero-padding."""
    if estimate.family != truth.family:
        raise ValueError("dimension matching requires a common family")
    block = 1 + family_dim(estimate.family)
    k = max(estimate.n_components, truth.n_components)

    def pad(spec: MixtureSpec) -> np.ndarray:
        out = np.zeros(k * block)
        v = spec.flat()
        out[: v.size] = v
        return out

    return pad(estimate), pad(truth)
