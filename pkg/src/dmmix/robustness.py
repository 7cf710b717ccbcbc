"""Contamination experiments, empirical influence, and breakdown probes.

The sample-level tools (contaminate, bias_curve) inject gross errors into
simulated data and track how each fitting method's estimates drift.  The
population-level tools (empirical_influence, breakdown_probe) replace the
data with an exact model table mixed with a contaminant, so the limits they
probe carry no Monte Carlo noise.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .density import DensityEstimate
from .engine import FitConfig, fit
from .mixtures import (
    MixtureSpec,
    canonicalize,
    family_param_names,
    is_count_family,
    mixture_density,
    sample,
    support_window,
)

MECHANISMS = ("point_mass", "replace_fraction", "density")


@dataclass(frozen=True)
class ContaminationSpec:
    epsilon: float
    mechanism: str = "point_mass"
    value: float = 50.0
    contaminant: MixtureSpec | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if self.mechanism == "density" and self.contaminant is None:
            raise ValueError("density mechanism needs a contaminant MixtureSpec")


def contaminate(data, spec: ContaminationSpec) -> np.ndarray:
    """Replace part of the sample with gross errors; untouched entries are kept bit-identical."""
    out = np.array(data, dtype=float).ravel()
    n = out.shape[0]
    if spec.epsilon == 0.0 or n == 0:
        return out
    rng = np.random.default_rng(spec.seed)
    if spec.mechanism == "point_mass":
        flags = rng.random(n) < spec.epsilon
        out[flags] = spec.value
    elif spec.mechanism == "replace_fraction":
        m = int(round(spec.epsilon * n))
        idx = rng.choice(n, size=m, replace=False)
        out[idx] = spec.value
    else:
        flags = rng.random(n) < spec.epsilon
        m = int(flags.sum())
        if m:
            out[flags] = sample(spec.contaminant, m, rng)
    return out


def _flat_names(family: str, k: int) -> list[str]:
    names = []
    for i in range(1, k + 1):
        names.append(f"weight_{i}")
        names.extend(f"{p}_{i}" for p in family_param_names(family))
    return names


def bias_curve(
    truth: MixtureSpec,
    family: str,
    methods,
    eps_grid,
    n: int,
    reps: int,
    seed: int = 0,
    fit_config: FitConfig | None = None,
    value: float = 50.0,
) -> list[dict]:
    """Monte Carlo parameter drift under point-mass contamination.

    methods is a sequence of (divergence, pi_update) pairs; the returned tidy
    rows carry (method, eps, parameter, mean, sd, n_converged) per canonical
    coordinate, with non-converged replications excluded from the averages.
    """
    base = fit_config if fit_config is not None else FitConfig()
    rows: list[dict] = []
    k = truth.n_components
    names = _flat_names(family, k)
    for div, pi_mode in methods:
        method = f"{div}/{pi_mode}"
        for eps in eps_grid:
            flats, n_conv = [], 0
            for rep in range(reps):
                # replications share data across methods at equal eps
                rng = np.random.default_rng((seed, int(round(eps * 1e6)), rep))
                data = sample(truth, n, rng)
                data = contaminate(
                    data,
                    ContaminationSpec(epsilon=float(eps), value=value,
                                      seed=int(rng.integers(2**31))),
                )
                cfg = dataclasses.replace(base, divergence=div, pi_update=pi_mode, seed=rep)
                res = fit(data, family, k, cfg)
                if res.converged:
                    n_conv += 1
                    flats.append(canonicalize(res.theta_hat).flat())
            if flats:
                mat = np.asarray(flats)
                means, sds = mat.mean(axis=0), mat.std(axis=0, ddof=1 if len(flats) > 1 else 0)
            else:
                means = sds = np.full(len(names), np.nan)
            for j, name in enumerate(names):
                rows.append({
                    "method": method, "eps": float(eps), "parameter": name,
                    "mean": float(means[j]), "sd": float(sds[j]), "n_converged": n_conv,
                })
    return rows


def _population_table(theta: MixtureSpec, tail: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    if theta.is_count:
        _, hi = support_window(theta, tail)
        grid = np.arange(0, hi + 1)
    else:
        means = theta.component_means()
        sds = np.sqrt(theta.component_variances())
        lo = int(np.floor(np.min(means - 9.0 * sds)))
        hi = int(np.ceil(np.max(means + 9.0 * sds)))
        grid = np.arange(lo, hi + 1)
    return grid, mixture_density(theta, grid)


def _contaminated_estimate(
    theta_star: MixtureSpec, family: str, div, eps: float, y0: int, cfg: FitConfig
) -> MixtureSpec:
    grid, mass = _population_table(theta_star)
    y0 = int(y0)
    lo, hi = min(int(grid[0]), y0), max(int(grid[-1]), y0)
    support = np.arange(lo, hi + 1)
    full = np.zeros(support.shape[0])
    full[np.searchsorted(support, grid)] = mass
    full *= 1.0 - eps
    full[np.searchsorted(support, y0)] += eps
    g_eps = DensityEstimate(kind="discrete_pmf", support=support, mass=full)
    res = fit(g_eps, family, theta_star.n_components,
              dataclasses.replace(cfg, divergence=div, init="user", theta0=theta_star))
    return canonicalize(res.theta_hat)


def empirical_influence(
    theta_star: MixtureSpec, family: str, div, y0, eps: float = 1e-3,
    fit_config: FitConfig | None = None,
) -> np.ndarray:
    """Finite-eps influence of a point mass at y0 on the population-level fit."""
    if not 0.0 < eps <= 0.05:
        raise ValueError("eps must lie in (0, 0.05]")
    if is_count_family(family) and (y0 < 0 or float(y0) != int(y0)):
        raise ValueError("count families need a nonnegative integer contamination point")
    cfg = fit_config if fit_config is not None else FitConfig(max_iters=500, tol=1e-12)
    at_model = _contaminated_estimate(theta_star, family, div, 0.0, int(round(y0)), cfg)
    perturbed = _contaminated_estimate(theta_star, family, div, eps, int(round(y0)), cfg)
    return (perturbed.flat() - at_model.flat()) / eps


def breakdown_probe(
    truth: MixtureSpec,
    family: str,
    div,
    contaminant_values,
    eps_grid,
    fit_config: FitConfig | None = None,
    threshold: float | None = None,
    calibration_n: int = 400,
    calibration_reps: int = 12,
    seed: int = 0,
) -> dict:
    """Population-level estimate drift across a contaminant grid.

    Returns {"rows": [...], "breakdown_eps": {(div, value): eps or nan}}, where
    each row holds the fitted parameters and their distance from truth at one
    (divergence, value, eps) cell.  The blow-up threshold defaults to 10x the
    interquartile spread of clean sample-level fit distances.
    """
    divs = [div] if isinstance(div, str) else list(div)
    values = list(contaminant_values)
    eps_list = [float(e) for e in eps_grid]
    if not values or not eps_list:
        raise ValueError("contaminant and epsilon grids must be nonempty")
    cfg = fit_config if fit_config is not None else FitConfig(max_iters=200, tol=1e-10)
    flat_star = canonicalize(truth).flat()

    if threshold is None:
        dists = []
        for rep in range(calibration_reps):
            rng = np.random.default_rng((seed, rep))
            res = fit(sample(truth, calibration_n, rng), family, truth.n_components,
                      dataclasses.replace(cfg, seed=rep))
            dists.append(np.linalg.norm(canonicalize(res.theta_hat).flat() - flat_star))
        q75, q25 = np.percentile(dists, [75, 25])
        threshold = 10.0 * max(q75 - q25, 1e-8)

    rows: list[dict] = []
    breakdown: dict = {}
    for d in divs:
        for v in values:
            first = np.nan
            for eps in eps_list:
                est = _contaminated_estimate(truth, family, d, eps, int(v), cfg)
                dist = float(np.linalg.norm(est.flat() - flat_star))
                rows.append({"divergence": d, "value": float(v), "eps": eps,
                             "distance": dist, "estimate": est})
                if np.isnan(first) and dist > threshold:
                    first = eps
            breakdown[(d, float(v))] = first
    return {"rows": rows, "breakdown_eps": breakdown, "threshold": float(threshold)}
