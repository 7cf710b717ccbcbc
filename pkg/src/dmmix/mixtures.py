"""Component families, mixture densities, responsibilities, canonical order.

Four observation families are supported, each parameterized per component:

* poisson(lam)                    counts, mean lam
* poisson_gamma(alpha, beta)      counts; Poisson rate mixed over a
                                  Gamma(shape alpha, rate beta) law, whose
                                  marginal is the negative-binomial pmf
* poisson_lognormal(mu, sigma2)   counts; rate mixed over a lognormal law,
                                  marginal evaluated by Gauss-Hermite
                                  quadrature (no closed form)
* normal(mu, sigma2)              real line, sigma2 is the variance

A MixtureSpec is the full parameter vector theta = (weights, params) of a
K-component mixture with one shared family.  Canonical order sorts components
by nondecreasing weight, breaking ties by nondecreasing component mean, which
makes estimates comparable across runs and replications.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp, roots_hermite

FAMILIES = ("poisson", "poisson_gamma", "poisson_lognormal", "normal")

_PARAM_NAMES = {
    "poisson": ("lam",),
    "poisson_gamma": ("alpha", "beta"),
    "poisson_lognormal": ("mu", "sigma2"),
    "normal": ("mu", "sigma2"),
}

# which parameter slots must be strictly positive
_POSITIVE = {
    "poisson": (True,),
    "poisson_gamma": (True, True),
    "poisson_lognormal": (False, True),
    "normal": (False, True),
}

DEFAULT_GH_NODES = 500


def family_dim(family: str) -> int:
    """Number of free parameters per component."""
    _check_family(family)
    return len(_PARAM_NAMES[family])


def family_param_names(family: str) -> tuple[str, ...]:
    _check_family(family)
    return _PARAM_NAMES[family]


def is_count_family(family: str) -> bool:
    _check_family(family)
    return family != "normal"


def _check_family(family: str) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def validate_params(family: str, params: np.ndarray) -> None:
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] != family_dim(family):
        raise ValueError(f"{family} components take {family_dim(family)} parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("component parameters must be finite")
    for j, must_pos in enumerate(_POSITIVE[family]):
        if must_pos and np.any(params[:, j] <= 0.0):
            raise ValueError(f"{family} parameter {_PARAM_NAMES[family][j]!r} must be > 0")


@lru_cache(maxsize=8)
def _gh_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    # scipy's rule stays stable at large n where the numpy one overflows.
    # Extreme nodes whose weights underflow to exactly zero are dropped;
    # log-weights let the quadrature sum run fully on the log scale.
    nodes, weights = roots_hermite(n)
    keep = weights > 0.0
    return nodes[keep], np.log(weights[keep])


def _check_count_support(y: np.ndarray) -> None:
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise ValueError("count families are supported on nonnegative integers")


def component_log_pmf(family: str, params, y, gh_nodes: int = DEFAULT_GH_NODES) -> np.ndarray:
    """log h(y; phi) for each observation x each component.

    params: array (K, d) or (d,); y: array of observations.
    Returns an array of shape (len(y), K).
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    validate_params(family, params)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if family == "poisson":
        _check_count_support(y)
        lam = params[:, 0]
        return y[:, None] * np.log(lam)[None, :] - lam[None, :] - gammaln(y + 1.0)[:, None]
    if family == "poisson_gamma":
        _check_count_support(y)
        alpha, beta = params[:, 0], params[:, 1]
        return (
            gammaln(y[:, None] + alpha[None, :])
            - gammaln(alpha)[None, :]
            - gammaln(y + 1.0)[:, None]
            + alpha[None, :] * (np.log(beta) - np.log1p(beta))[None, :]
            - y[:, None] * np.log1p(beta)[None, :]
        )
    if family == "poisson_lognormal":
        _check_count_support(y)
        nodes, log_weights = _gh_nodes(gh_nodes)
        mu, sigma2 = params[:, 0], params[:, 1]
        sigma = np.sqrt(sigma2)
        # lam = exp(mu + sigma*sqrt(2)*t) turns the mixing integral into a
        # Gauss-Hermite sum with weight 1/sqrt(pi)
        log_lam = mu[:, None] + np.sqrt(2.0) * sigma[:, None] * nodes[None, :]  # (K, n)
        log_terms = (
            y[:, None, None] * log_lam[None, :, :]
            - np.exp(log_lam)[None, :, :]
            - gammaln(y + 1.0)[:, None, None]
            + log_weights[None, None, :]
        )
        return logsumexp(log_terms, axis=2) - 0.5 * np.log(np.pi)
    # normal
    mu, sigma2 = params[:, 0], params[:, 1]
    return -0.5 * (y[:, None] - mu[None, :]) ** 2 / sigma2[None, :] - 0.5 * np.log(2.0 * np.pi * sigma2)[None, :]


def component_pmf(family: str, params, y, gh_nodes: int = DEFAULT_GH_NODES):
    """h(y; phi): pmf for count families, density for normal.

    Scalar params + scalar y give a float; otherwise an array shaped like
    (len(y),) for one component or (len(y), K) for a parameter matrix.
    """
    scalar = np.ndim(y) == 0 and np.ndim(params) <= 1
    out = np.exp(component_log_pmf(family, params, y, gh_nodes))
    if scalar:
        return float(out[0, 0])
    if np.ndim(params) <= 1:
        return out[:, 0]
    return out


@dataclass(frozen=True)
class MixtureSpec:
    """theta = (weights, params) for a K-component mixture of one family."""

    family: str
    weights: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        _check_family(self.family)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        p = np.atleast_2d(np.asarray(self.params, dtype=float))
        if p.shape[0] != w.shape[0]:
            raise ValueError(f"{w.shape[0]} weights but {p.shape[0]} component parameter rows")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("mixing weights must be strictly positive and finite")
        if abs(w.sum() - 1.0) > 1e-8:
            raise ValueError(f"mixing weights must sum to 1, got {w.sum()!r}")
        validate_params(self.family, p)
        w = w / w.sum()
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "params", p)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def is_count(self) -> bool:
        return is_count_family(self.family)

    def component_means(self) -> np.ndarray:
        p = self.params
        if self.family == "poisson":
            return p[:, 0].copy()
        if self.family == "poisson_gamma":
            return p[:, 0] / p[:, 1]
        if self.family == "poisson_lognormal":
            return np.exp(p[:, 0] + 0.5 * p[:, 1])
        return p[:, 0].copy()

    def component_variances(self) -> np.ndarray:
        p = self.params
        if self.family == "poisson":
            return p[:, 0].copy()
        if self.family == "poisson_gamma":
            m = p[:, 0] / p[:, 1]
            return m * (1.0 + 1.0 / p[:, 1])
        if self.family == "poisson_lognormal":
            m = np.exp(p[:, 0] + 0.5 * p[:, 1])
            return m + m**2 * np.expm1(p[:, 1])
        return p[:, 1].copy()

    def flat(self) -> np.ndarray:
        """Parameter vector as per-component blocks (weight, params...) concatenated."""
        return np.column_stack([self.weights, self.params]).reshape(-1)

    def permuted(self, order) -> "MixtureSpec":
        order = np.asarray(order, dtype=int)
        return MixtureSpec(self.family, self.weights[order], self.params[order])


def mixture_density(spec: MixtureSpec, y, gh_nodes: int = DEFAULT_GH_NODES):
    """f(y; theta) = sum_k weight_k h(y; phi_k).

    Components are accumulated in a sorted order that depends only on the
    parameter values, so specs that are permutations of each other return
    bitwise-identical densities.
    """
    scalar = np.ndim(y) == 0
    order = np.lexsort(tuple(spec.params.T) + (spec.weights,))
    h = np.exp(component_log_pmf(spec.family, spec.params[order], y, gh_nodes))
    out = h @ spec.weights[order]
    return float(out[0]) if scalar else out


def responsibilities(spec: MixtureSpec, y, gh_nodes: int = DEFAULT_GH_NODES) -> np.ndarray:
    """Posterior component membership w_k(y; theta), rows summing to 1.

    Computed on the log scale so that far-tail observations with underflowing
    densities still get well-defined memberships; an observation where every
    component has exactly zero density raises.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    log_h = component_log_pmf(spec.family, spec.params, y_arr, gh_nodes)
    log_num = log_h + np.log(spec.weights)[None, :]
    log_tot = logsumexp(log_num, axis=1)
    if np.any(np.isneginf(log_tot)):
        bad = y_arr[np.isneginf(log_tot)][0]
        raise ValueError(f"mixture density is zero at y={bad!r}; responsibilities undefined")
    out = np.exp(log_num - log_tot[:, None])
    return out[0] if np.ndim(y) == 0 else out


def canonicalize(spec: MixtureSpec) -> MixtureSpec:
    """Sort components by weight, ties by component mean; density is untouched."""
    means = spec.component_means()
    order = np.lexsort((means, spec.weights))
    return spec.permuted(order)


def support_window(spec: MixtureSpec, tail_mass: float = 1e-10) -> tuple[int, int]:
    """Smallest [0, y_max] whose complement holds mixture mass < tail_mass."""
    if not spec.is_count:
        raise ValueError("support_window applies to count families only")
    if not 0.0 < tail_mass < 1.0:
        raise ValueError("tail_mass must lie in (0, 1)")
    means = spec.component_means()
    sds = np.sqrt(spec.component_variances())
    cap = int(np.ceil(np.max(means + 12.0 * sds))) + 30
    for _ in range(40):
        grid = np.arange(0, cap + 1)
        cum = np.cumsum(mixture_density(spec, grid))
        hit = np.nonzero(1.0 - cum < tail_mass)[0]
        if hit.size:
            return (0, int(hit[0]))
        cap *= 2
    raise RuntimeError("support_window failed to cover the requested tail mass")


def sample(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n observations; counts come back as integer-valued floats."""
    comp = rng.choice(spec.n_components, size=n, p=spec.weights)
    p = spec.params[comp]
    if spec.family == "poisson":
        return rng.poisson(p[:, 0]).astype(float)
    if spec.family == "poisson_gamma":
        lam = rng.gamma(shape=p[:, 0], scale=1.0 / p[:, 1])
        return rng.poisson(lam).astype(float)
    if spec.family == "poisson_lognormal":
        lam = np.exp(rng.normal(p[:, 0], np.sqrt(p[:, 1])))
        return rng.poisson(lam).astype(float)
    return rng.normal(p[:, 0], np.sqrt(p[:, 1]))
