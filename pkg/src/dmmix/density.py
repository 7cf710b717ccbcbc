"""Nonparametric plug-in density estimates and the ISE diagnostic.

Discrete estimates place mass on a contiguous integer window: either raw
empirical frequencies or an associated-kernel smoother

    g_n(y) = (1/n) sum_i K_{y,c}(Y_i)

where K_{y,c} is a pmf centered at y with bandwidth c.  Four associated
kernels are provided (triangular, poisson, binomial, negbinomial) plus the
degenerate empirical kernel.  Continuous samples get an Epanechnikov kernel
density estimate.  Smoothed estimates are renormalized over the evaluation
window so every discrete estimate is a proper pmf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import iqr as _iqr

from .mixtures import MixtureSpec, mixture_density, support_window

DISCRETE_KERNELS = ("empirical", "triangular", "poisson", "binomial", "negbinomial")

_TAIL = 1e-12  # truncation mass for infinite-support kernels


@dataclass(frozen=True)
class DensityEstimate:
    """A fitted g_n: either a discrete pmf table or a continuous evaluator."""

    kind: str  # "discrete_pmf" | "continuous_kde"
    support: np.ndarray | None = None  # contiguous integers, discrete only
    mass: np.ndarray | None = None
    sample: np.ndarray | None = None  # continuous only
    kernel: str | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind == "discrete_pmf":
            support = np.asarray(self.support, dtype=int)
            mass = np.asarray(self.mass, dtype=float)
            if support.ndim != 1 or support.shape != mass.shape or support.size == 0:
                raise ValueError("support and mass must be matching nonempty 1-d arrays")
            if np.any(np.diff(support) != 1):
                raise ValueError("support must be a contiguous integer range")
            if np.any(mass < 0.0) or not np.all(np.isfinite(mass)):
                raise ValueError("masses must be finite and nonnegative")
            if abs(mass.sum() - 1.0) > 1e-9:
                raise ValueError(f"masses sum to {mass.sum()!r}, not 1 within 1e-9")
            support.setflags(write=False)
            mass.setflags(write=False)
            object.__setattr__(self, "support", support)
            object.__setattr__(self, "mass", mass)
        elif self.kind == "continuous_kde":
            sample = np.asarray(self.sample, dtype=float)
            if sample.ndim != 1 or sample.size == 0 or not np.all(np.isfinite(sample)):
                raise ValueError("sample must be a nonempty finite 1-d array")
            if self.kernel != "epanechnikov":
                raise ValueError(f"unknown continuous kernel {self.kernel!r}")
            if not (np.isfinite(self.bandwidth) and self.bandwidth > 0.0):
                raise ValueError("bandwidth must be a positive real")
            sample.setflags(write=False)
            object.__setattr__(self, "sample", sample)
        else:
            raise ValueError(f"unknown estimate kind {self.kind!r}")

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete_pmf"

    def pmf(self, y) -> np.ndarray:
        """Mass at integer points y; zero off the stored window."""
        if not self.is_discrete:
            raise ValueError("pmf is defined for discrete estimates only")
        y = np.atleast_1d(np.asarray(y))
        idx = np.asarray(np.round(y), dtype=int) - int(self.support[0])
        ok = (y == np.round(y)) & (idx >= 0) & (idx < self.support.size)
        out = np.zeros(y.shape, dtype=float)
        out[ok] = self.mass[idx[ok]]
        return out

    def density(self, x) -> np.ndarray:
        """Epanechnikov KDE evaluated at real points x."""
        if self.is_discrete:
            raise ValueError("density is defined for continuous estimates only")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u = (x[:, None] - self.sample[None, :]) / self.bandwidth
        bumps = 0.75 * np.maximum(1.0 - u * u, 0.0)
        return bumps.mean(axis=1) / self.bandwidth

    def evaluate(self, y) -> np.ndarray:
        return self.pmf(y) if self.is_discrete else self.density(y)


def empirical_pmf(data) -> DensityEstimate:
    """Raw relative frequencies on [min(data), max(data)]."""
    y = _as_int_data(data)
    lo, hi = int(y.min()), int(y.max())
    counts = np.bincount(y - lo, minlength=hi - lo + 1).astype(float)
    return DensityEstimate(
        kind="discrete_pmf", support=np.arange(lo, hi + 1), mass=counts / y.size
    )


def _as_int_data(data) -> np.ndarray:
    y = np.asarray(data)
    if y.size == 0:
        raise ValueError("data must be nonempty")
    if not np.all(np.isfinite(np.asarray(y, dtype=float))) or np.any(y != np.floor(y)):
        raise ValueError("data must be finite integers")
    return np.asarray(y, dtype=int).ravel()


def _check_kernel(kernel: str, a: int | None, c: float) -> None:
    if kernel not in DISCRETE_KERNELS:
        raise ValueError(f"unknown discrete kernel {kernel!r}; expected one of {DISCRETE_KERNELS}")
    if not (np.isfinite(c) and c > 0.0) and kernel != "empirical":
        raise ValueError("bandwidth c must be a positive real")
    if kernel == "binomial" and not 0.0 < c <= 1.0:
        raise ValueError("binomial kernel requires c in (0, 1]")
    if kernel == "triangular":
        if a is None or a != int(a) or a < 1:
            raise ValueError("triangular kernel requires a positive integer arm a")


def _kernel_row(kernel: str, center: int, c: float, a: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Full (truncated, renormalized) kernel pmf as (x values, masses)."""
    y = int(center)
    if kernel == "empirical":
        return np.array([y]), np.array([1.0])
    if y < 0:
        raise ValueError("count kernels are centered on nonnegative integers")
    if kernel == "triangular":
        arm = int(a)
        x = np.arange(y - arm, y + arm + 1)
        p_norm = (2 * arm + 1) * (arm + 1.0) ** c - 2.0 * np.sum(np.arange(arm + 1) ** c)
        return x, ((arm + 1.0) ** c - np.abs(x - y) ** c) / p_norm
    if kernel == "binomial":
        n_tr = y + 1
        x = np.arange(n_tr + 1)
        if c == 1.0:  # success probability is exactly 1
            mass = np.zeros(n_tr + 1)
            mass[-1] = 1.0
            return x, mass
        log_mass = (
            gammaln(n_tr + 1.0) - gammaln(x + 1.0) - gammaln(n_tr - x + 1.0)
            + x * np.log((y + c) / n_tr)
            + (n_tr - x) * np.log((1.0 - c) / n_tr)
        )
        return x, np.exp(log_mass)
    # poisson / negbinomial: truncate once the remaining tail drops below _TAIL,
    # then renormalize so the row is a proper pmf
    if kernel == "poisson":
        mean = y + c
        log_pmf = lambda x: x * np.log(mean) - mean - gammaln(x + 1.0)
    else:  # negbinomial
        r = y + 1.0
        logq = np.log((y + c) / (2.0 * y + 1.0 + c))
        logp = np.log(r / (2.0 * y + 1.0 + c))
        log_pmf = lambda x: gammaln(x + r) - gammaln(r) - gammaln(x + 1.0) + x * logq + r * logp
    hi = int(np.ceil(y + c + 10.0 * np.sqrt(y + c + 1.0) + 20.0))
    while True:
        x = np.arange(hi + 1)
        mass = np.exp(log_pmf(x.astype(float)))
        if 1.0 - mass.sum() < _TAIL:
            return x, mass / mass.sum()
        hi *= 2


def discrete_kernel_pmf(kernel: str, center: int, c: float, x, a: int | None = None):
    """K_{center,c}(x) for one associated kernel; zero off the kernel support."""
    _check_kernel(kernel, a, c)
    xs, mass = _kernel_row(kernel, int(center), c, a)
    x_arr = np.atleast_1d(np.asarray(x))
    idx = np.asarray(np.round(x_arr), dtype=int) - int(xs[0])
    ok = (x_arr == np.round(x_arr)) & (idx >= 0) & (idx < xs.size)
    out = np.zeros(x_arr.shape, dtype=float)
    out[ok] = mass[idx[ok]]
    return float(out[0]) if np.ndim(x) == 0 else out


def kernel_moments(kernel: str, center: int, c: float, a: int | None = None) -> tuple[float, float]:
    """Mean and variance of the (truncated) kernel row."""
    _check_kernel(kernel, a, c)
    xs, mass = _kernel_row(kernel, int(center), c, a)
    mean = float(np.sum(xs * mass))
    return mean, float(np.sum((xs - mean) ** 2 * mass))


def smoothed_pmf(data, kernel: str, c: float, a: int | None = None) -> DensityEstimate:
    """Associated-kernel smoother over a window covering the data plus reach.

    The raw smoother values are renormalized over the window so the result is
    a proper pmf; windows never extend below zero because the kernels are
    count-data smoothers.
    """
    _check_kernel(kernel, a, c)
    y = _as_int_data(data)
    if kernel == "empirical":
        return empirical_pmf(y)
    if np.any(y < 0):
        raise ValueError("count kernels require nonnegative data")
    values, counts = np.unique(y, return_counts=True)
    weights = counts / y.size
    if kernel == "triangular":
        reach = int(a)
    elif kernel == "binomial":
        reach = 1
    else:
        reach = int(np.ceil(10.0 * np.sqrt(values.max() + c + 1.0) + 10.0))
    lo = max(0, int(values.min()) - reach)
    hi = int(values.max()) + reach
    while True:
        centers = np.arange(lo, hi + 1)
        rows = np.stack([discrete_kernel_pmf(kernel, g, c, values, a=a) for g in centers])
        raw = rows @ weights
        # for the two infinite-reach kernels, grow the window until both edges
        # carry negligible mass relative to the peak
        if kernel in ("triangular", "binomial"):
            break
        grew = False
        if raw[-1] > 1e-13 * raw.max():
            hi += reach
            grew = True
        if lo > 0 and raw[0] > 1e-13 * raw.max():
            lo = max(0, lo - reach)
            grew = True
        if not grew:
            break
    return DensityEstimate(kind="discrete_pmf", support=centers, mass=raw / raw.sum())


def continuous_kde(data, bandwidth: float) -> DensityEstimate:
    """Epanechnikov kernel density estimate with a fixed bandwidth."""
    sample = np.asarray(data, dtype=float).ravel()
    if sample.size == 0:
        raise ValueError("data must be nonempty")
    if not (np.isfinite(bandwidth) and bandwidth > 0.0):
        raise ValueError("bandwidth must be a positive real")
    return DensityEstimate(
        kind="continuous_kde", sample=sample, kernel="epanechnikov", bandwidth=float(bandwidth)
    )


def moment_bandwidth(n: int, c0: float = 1.0) -> float:
    """Default discrete bandwidth c0 * n^(-2/5); a placeholder rule, not a claim."""
    if n < 1 or c0 <= 0.0:
        raise ValueError("n must be >= 1 and c0 > 0")
    return c0 * float(n) ** (-0.4)


def epanechnikov_bandwidth(data) -> float:
    """Plug-in rate-optimal bandwidth 2.345 * min(sd, iqr/1.349) * n^(-1/5)."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two observations")
    spread = min(float(np.std(x, ddof=1)), float(_iqr(x)) / 1.349)
    if spread <= 0.0:
        raise ValueError("data have zero spread")
    return 2.345 * spread * x.size ** (-0.2)


def ise(estimate: DensityEstimate, truth: MixtureSpec) -> float:
    """Integrated squared error sum_y (g_n(y) - f(y))^2 over the union window."""
    if not estimate.is_discrete:
        raise ValueError("ise compares a discrete estimate against a count mixture")
    if not truth.is_count:
        raise ValueError("truth must be a count-family mixture")
    _, w_hi = support_window(truth, 1e-10)
    lo = min(int(estimate.support[0]), 0)
    hi = max(int(estimate.support[-1]), w_hi)
    grid = np.arange(lo, hi + 1)
    g = estimate.pmf(grid)
    f = np.zeros(grid.shape)
    nonneg = grid >= 0
    f[nonneg] = mixture_density(truth, grid[nonneg])
    return float(np.sum((g - f) ** 2))
