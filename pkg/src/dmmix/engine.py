"""Mixture fitting by iterative minimization of a divergence surrogate.

Each sweep majorizes the mixture-level divergence

    D_n(theta) = sum_y G(g_n(y)/f(y;theta) - 1) f(y;theta)

by the component-separable surrogate

    Q(theta'|theta) = sum_k sum_y G(delta_k(y)) pi'_k h(y;phi'_k),
    delta_k(y) = g_n(y) w_k(y;theta) / (pi'_k h(y;phi'_k)) - 1,

minimizes the surrogate in each phi_k (closed form when available, else a
bounded 1-d or simplex search), then updates the weights by one of six rules.
Every candidate move is accepted only if it does not increase the surrogate,
so the objective trace is nonincreasing by construction, not by luck.

All sums run over one working grid fixed at the start of a run (the union of
the g_n support and the initial model's tail window), which makes the
majorization and tangency identities hold exactly in floating point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .density import DensityEstimate, continuous_kde, empirical_pmf, epanechnikov_bandwidth
from .divergence import DivergenceSpec, divergence
from .mixtures import (
    MixtureSpec,
    canonicalize,
    component_log_pmf,
    component_pmf,
    family_dim,
    is_count_family,
    mixture_density,
    support_window,
)

PI_UPDATES = (
    "generic_phi",
    "hmix_squared",
    "hmix_dmmix",
    "vned_weighted",
    "closed_form_em",
    "nelmix",
)
OPTIMIZERS = ("auto", "golden_section", "nelder_mead")

_FLOOR = 1e-300  # below this a density is treated as numerically zero


def matched_pi_update(div: DivergenceSpec | str) -> str:
    """Weight-update mode whose fixed points are stationary for the divergence."""
    label = div if isinstance(div, str) else div.label
    return {
        "kl": "closed_form_em",
        "kl_calibrated": "closed_form_em",
        "hd": "hmix_squared",
        "vned": "vned_weighted",
    }.get(label, "generic_phi")


@dataclass(frozen=True)
class FitConfig:
    """Knobs for one fit run."""

    divergence: DivergenceSpec | str = "kl"
    max_iters: int = 500
    tol: float = 1e-8
    optimizer: str = "auto"  # golden_section (1-param) / nelder_mead (2-param)
    optimizer_iters: int = 200
    pi_update: str = "generic_phi"
    init: str = "kmeans"
    theta0: MixtureSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.divergence, str):
            object.__setattr__(self, "divergence", divergence(self.divergence))
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.optimizer_iters < 1:
            raise ValueError("optimizer_iters must be >= 1")
        if self.pi_update not in PI_UPDATES:
            raise ValueError(f"pi_update must be one of {PI_UPDATES}")
        if self.init not in ("kmeans", "user"):
            raise ValueError("init must be 'kmeans' or 'user'")
        if self.init == "user" and self.theta0 is None:
            raise ValueError("init='user' requires theta0")


@dataclass(frozen=True)
class FitResult:
    theta_hat: MixtureSpec
    objective_trace: np.ndarray  # D_n(theta_m), m = 0..iters
    q_trace: np.ndarray  # Q(theta_m | theta_m)
    iters: int
    converged: bool
    descent_violations: int


@dataclass(frozen=True)
class _Grid:
    """Fixed evaluation grid: points, uniform quadrature weight, g_n values."""

    points: np.ndarray
    quad: float
    g: np.ndarray


def _model_reach(theta: MixtureSpec) -> float:
    if theta.is_count:
        return float(support_window(theta, 1e-10)[1])
    means = theta.component_means()
    sds = np.sqrt(theta.component_variances())
    return float(np.max(means + 10.0 * sds))


def _build_grid(g_n: DensityEstimate, thetas: tuple[MixtureSpec, ...]) -> _Grid:
    family_count = thetas[0].is_count
    if g_n.is_discrete:
        lo = min(int(g_n.support[0]), 0)
        if family_count and lo < 0:
            raise ValueError("count families cannot cover negative support points")
        hi = max(int(g_n.support[-1]), int(np.ceil(max(_model_reach(t) for t in thetas))))
        # headroom past the largest mean the M-step can visit, so objective
        # sums keep their full tails and grid argmins stay unbiased
        hi += int(np.ceil(12.0 * np.sqrt(hi + 25.0))) + 25
        if not family_count:
            lo = min(
                lo,
                int(np.floor(min(np.min(t.component_means() - 10.0 * np.sqrt(t.component_variances())) for t in thetas))),
            )
        points = np.arange(lo, hi + 1, dtype=float)
        return _Grid(points=points, quad=1.0, g=g_n.pmf(points))
    if family_count:
        raise ValueError("continuous g_n cannot drive a count-family fit")
    lo = float(g_n.sample.min()) - 4.0 * g_n.bandwidth
    hi = float(g_n.sample.max()) + 4.0 * g_n.bandwidth
    for t in thetas:
        means, sds = t.component_means(), np.sqrt(t.component_variances())
        lo = min(lo, float(np.min(means - 10.0 * sds)))
        hi = max(hi, float(np.max(means + 10.0 * sds)))
    points = np.linspace(lo, hi, 2001)
    quad = float(points[1] - points[0])
    return _Grid(points=points, quad=quad, g=g_n.density(points))


def _delta_from(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # where the denominator is numerically zero the ratio is defined as 1,
    # so the point contributes G(0) = 0
    safe = np.where(den > _FLOOR, den, 1.0)
    return np.where(den > _FLOOR, num / safe, 1.0) - 1.0


def _resp_lenient(theta: MixtureSpec, points: np.ndarray) -> np.ndarray:
    """Responsibilities with uniform fallback where every component underflows."""
    log_h = component_log_pmf(theta.family, theta.params, points)
    log_num = log_h + np.log(theta.weights)[None, :]
    top = log_num.max(axis=1, keepdims=True)
    dead = np.isneginf(top[:, 0])
    top = np.where(np.isneginf(top), 0.0, top)
    raw = np.exp(log_num - top)
    tot = raw.sum(axis=1, keepdims=True)
    out = raw / tot
    if np.any(dead):
        out[dead, :] = 1.0 / theta.n_components
    return out


def _d_on_grid(theta: MixtureSpec, grid: _Grid, div: DivergenceSpec) -> float:
    f = mixture_density(theta, grid.points)
    delta = _delta_from(grid.g, f)
    return float(np.sum(div.g(delta) * f) * grid.quad)


def _q_on_grid(
    weights: np.ndarray,
    params: np.ndarray,
    family: str,
    resp_cur: np.ndarray,
    grid: _Grid,
    div: DivergenceSpec,
) -> float:
    h = component_pmf(family, params, grid.points)
    den = h * weights[None, :]
    num = grid.g[:, None] * resp_cur
    delta = _delta_from(num, den)
    return float(np.sum(div.g(delta) * den) * grid.quad)


def divergence_d(theta: MixtureSpec, g_n: DensityEstimate, div: DivergenceSpec | str) -> float:
    """D_n(theta) summed over the union of g_n support and the model window."""
    div = divergence(div) if isinstance(div, str) else div
    return _d_on_grid(theta, _build_grid(g_n, (theta,)), div)


def surrogate_q(
    theta_next: MixtureSpec,
    theta_cur: MixtureSpec,
    g_n: DensityEstimate,
    div: DivergenceSpec | str,
) -> float:
    """Q(theta_next | theta_cur); majorizes D_n and touches it at equal arguments."""
    div = divergence(div) if isinstance(div, str) else div
    if theta_next.family != theta_cur.family or theta_next.n_components != theta_cur.n_components:
        raise ValueError("surrogate requires matching family and component count")
    grid = _build_grid(g_n, (theta_cur, theta_next))
    resp = _resp_lenient(theta_cur, grid.points)
    return _q_on_grid(theta_next.weights, theta_next.params, theta_next.family, resp, grid, div)


def _component_objective(family, phi_row, weight, num_k, grid, div) -> float:
    h = component_pmf(family, np.asarray(phi_row, dtype=float).reshape(1, -1), grid.points)[:, 0]
    den = weight * h
    delta = _delta_from(num_k, den)
    return float(np.sum(div.g(delta) * den) * grid.quad)


def _golden_section(fn, lo: float, hi: float, iters: int) -> float:
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = fn(d)
    return c if fc <= fd else d


# parameter transforms keeping each family inside its box during the search
def _to_free(family: str, phi: np.ndarray) -> np.ndarray:
    if family == "poisson":
        return np.array([np.log(phi[0])])
    if family == "poisson_gamma":
        return np.log(phi)
    return np.array([phi[0], np.log(phi[1])])  # poisson_lognormal / normal


def _from_free(family: str, z: np.ndarray) -> np.ndarray:
    if family == "poisson":
        return np.array([np.exp(np.clip(z[0], -18.0, 21.0))])
    if family == "poisson_gamma":
        return np.exp(np.clip(z, -18.0, 21.0))
    return np.array([np.clip(z[0], -1e8, 1e8), np.exp(np.clip(z[1], -23.0, 23.0))])


def _closed_form_phi(family: str, num_k: np.ndarray, grid: _Grid, phi_cur: np.ndarray):
    """Exact surrogate argmin for the uncalibrated-KL generator, when known."""
    total = float(np.sum(num_k))
    if total <= _FLOOR:
        return None
    if family == "poisson":
        lam = float(np.sum(num_k * grid.points)) / total
        return np.array([max(lam, 1e-10)])
    if family == "normal":
        mu = float(np.sum(num_k * grid.points)) / total
        var = float(np.sum(num_k * (grid.points - mu) ** 2)) / total
        return np.array([mu, max(var, 1e-10)])
    return None


def nelmix_rate_step(
    lam: float, weight: float, num_k: np.ndarray, grid: _Grid
) -> float:
    """One fixed-point update of a Poisson rate under the vNED surrogate."""
    h = component_pmf("poisson", np.array([[lam]]), grid.points)[:, 0]
    den = weight * h
    expo = np.where(num_k > _FLOOR, den / np.where(num_k > _FLOOR, num_k, 1.0), np.inf)
    w_yk = np.exp(-expo) * den
    total = float(np.sum(w_yk))
    if total <= _FLOOR:
        return lam
    return float(np.sum(w_yk * grid.points)) / total


def _m_step_on_grid(
    k: int,
    theta_cur: MixtureSpec,
    resp: np.ndarray,
    grid: _Grid,
    div: DivergenceSpec,
    optimizer: str,
    optimizer_iters: int,
    pi_mode: str,
    allow_closed_form: bool = True,
) -> tuple[np.ndarray, bool]:
    family = theta_cur.family
    phi_cur = np.asarray(theta_cur.params[k], dtype=float)
    weight = float(theta_cur.weights[k])
    num_k = grid.g * resp[:, k]
    obj = lambda phi: _component_objective(family, phi, weight, num_k, grid, div)

    if pi_mode == "nelmix":
        cand = np.array([nelmix_rate_step(phi_cur[0], weight, num_k, grid)])
    elif allow_closed_form and div.kind == "kl":
        cand = _closed_form_phi(family, num_k, grid, phi_cur)
        if cand is not None and np.all(np.isfinite(cand)):
            # exact argmin of the component surrogate; an objective comparison
            # at float precision could only veto it on noise
            return cand, False
    else:
        cand = None

    if cand is None:
        dim = family_dim(family)
        use = optimizer
        if use == "auto":
            use = "golden_section" if dim == 1 else "nelder_mead"
        if use == "golden_section":
            if dim != 1:
                raise ValueError("golden_section applies to 1-parameter families only")
            z0 = _to_free(family, phi_cur)[0]
            lo = np.log(1e-8)
            hi = np.log(float(grid.points.max()) + 10.0)
            z_hat = _golden_section(lambda z: obj(_from_free(family, np.array([z]))), lo, hi, optimizer_iters)
            cand = _from_free(family, np.array([z_hat]))
        else:
            res = minimize(
                lambda z: obj(_from_free(family, z)),
                _to_free(family, phi_cur),
                method="Nelder-Mead",
                options={"maxiter": optimizer_iters, "xatol": 1e-10, "fatol": 1e-14},
            )
            cand = _from_free(family, res.x)

    q_cur, q_new = obj(phi_cur), obj(cand)
    if not np.isfinite(q_new) or q_new > q_cur:
        return phi_cur, True
    if q_new == q_cur and tuple(cand) >= tuple(phi_cur):
        return phi_cur, False  # equal objectives: keep the lexicographically smaller
    return cand, False


def m_step_component(
    k: int,
    theta_cur: MixtureSpec,
    g_n: DensityEstimate,
    div: DivergenceSpec | str,
    optimizer: str = "auto",
    optimizer_iters: int = 200,
    allow_closed_form: bool = True,
    pi_mode: str = "generic_phi",
) -> tuple[np.ndarray, bool]:
    """New parameters for component k plus a flag set when the search fell back."""
    div = divergence(div) if isinstance(div, str) else div
    grid = _build_grid(g_n, (theta_cur,))
    resp = _resp_lenient(theta_cur, grid.points)
    return _m_step_on_grid(
        k, theta_cur, resp, grid, div, optimizer, optimizer_iters, pi_mode, allow_closed_form
    )


def _pi_update_on_grid(
    params_new: np.ndarray,
    theta_cur: MixtureSpec,
    resp: np.ndarray,
    grid: _Grid,
    div: DivergenceSpec,
    mode: str,
) -> tuple[np.ndarray, bool]:
    """Candidate weights plus a degeneracy flag (True means keep the old ones)."""
    pi_cur = np.asarray(theta_cur.weights, dtype=float)
    K = pi_cur.size
    if K == 1:
        return np.array([1.0]), False
    h_new = component_pmf(theta_cur.family, params_new, grid.points)
    num = grid.g[:, None] * resp

    if mode == "closed_form_em":
        cand = num.sum(axis=0) * grid.quad
    elif mode == "generic_phi":
        den = pi_cur[None, :] * h_new
        tau = np.where(den > _FLOOR, num / np.where(den > _FLOOR, den, 1.0), 1.0)
        cand = -pi_cur * np.sum(h_new * div.b_weight(tau), axis=0) * grid.quad
    elif mode in ("hmix_squared", "hmix_dmmix"):
        hd_k = np.sum(np.sqrt(num * h_new), axis=0) * grid.quad
        cand = hd_k**2 if mode == "hmix_squared" else np.sqrt(pi_cur) * hd_k
    else:  # vned_weighted / nelmix share the exponential-weight rule
        den = pi_cur[None, :] * h_new
        expo = np.where(num > _FLOOR, den / np.where(num > _FLOOR, num, 1.0), np.inf)
        cand = np.sum(np.exp(-expo) * den, axis=0) * grid.quad

    if not np.all(np.isfinite(cand)) or np.any(cand <= 0.0):
        return pi_cur, True
    return cand / cand.sum(), False


def pi_update(
    theta_phi_new: MixtureSpec,
    theta_cur: MixtureSpec,
    g_n: DensityEstimate,
    div: DivergenceSpec | str,
    mode: str = "generic_phi",
) -> np.ndarray:
    """New mixing weights; on a degenerate update the old weights are returned."""
    div = divergence(div) if isinstance(div, str) else div
    if mode not in PI_UPDATES:
        raise ValueError(f"mode must be one of {PI_UPDATES}")
    grid = _build_grid(g_n, (theta_cur, theta_phi_new))
    resp = _resp_lenient(theta_cur, grid.points)
    cand, degenerate = _pi_update_on_grid(
        np.asarray(theta_phi_new.params), theta_cur, resp, grid, div, mode
    )
    if degenerate:
        warnings.warn("degenerate weight update; keeping current weights", RuntimeWarning)
    return cand


def _coerce_gn(data, family: str) -> tuple[DensityEstimate, np.ndarray | None]:
    if isinstance(data, DensityEstimate):
        return data, None
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("data must be nonempty")
    if is_count_family(family):
        if np.any(arr < 0) or np.any(arr != np.floor(arr)):
            raise ValueError("count families need nonnegative integer data")
        return empirical_pmf(arr.astype(int)), arr
    return continuous_kde(arr, epanechnikov_bandwidth(arr)), arr


def fit(data, family: str, n_components: int, config: FitConfig | None = None) -> FitResult:
    """Run safeguarded surrogate-descent sweeps until |dQ| < tol or max_iters.

    `data` is either raw observations or a prebuilt DensityEstimate.  The final
    estimate is canonicalized; traces cover every visited iterate including
    the initial one.
    """
    config = config or FitConfig()
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    div = config.divergence
    if config.pi_update == "nelmix" and (family != "poisson" or div.kind != "vned"):
        raise ValueError("nelmix mode is defined for the poisson family under vned")
    g_n, raw = _coerce_gn(data, family)

    if config.init == "user":
        theta = config.theta0
        if theta.family != family or theta.n_components != n_components:
            raise ValueError("theta0 does not match the requested family/K")
    elif raw is not None:
        theta = kmeans_init(raw, family, n_components, seed=config.seed)
    elif g_n.is_discrete:
        theta = kmeans_init(
            g_n.support.astype(float), family, n_components,
            seed=config.seed, weights=g_n.mass,
        )
    else:
        theta = kmeans_init(g_n.sample, family, n_components, seed=config.seed)

    grid = _build_grid(g_n, (theta,))
    resp = _resp_lenient(theta, grid.points)
    d_trace = [_d_on_grid(theta, grid, div)]
    q_trace = [_q_on_grid(theta.weights, theta.params, family, resp, grid, div)]
    converged = False
    iters = 0
    warned_degenerate = False

    for _ in range(config.max_iters):
        if not warned_degenerate and np.any((grid.g[:, None] * resp).sum(axis=0) < 1e-12):
            warnings.warn(
                "a component carries numerically zero responsibility; continuing without flooring",
                RuntimeWarning,
            )
            warned_degenerate = True

        params_new = theta.params.copy()
        for k in range(n_components):
            phi_k, _ = _m_step_on_grid(
                k, theta, resp, grid, div,
                config.optimizer, config.optimizer_iters, config.pi_update,
            )
            params_new[k] = phi_k

        pi_cand, _ = _pi_update_on_grid(params_new, theta, resp, grid, div, config.pi_update)
        if config.pi_update == "closed_form_em" and div.kind == "kl":
            # exact simplex argmin of the surrogate; never compare on noise
            weights_new = pi_cand
        else:
            q_keep = _q_on_grid(theta.weights, params_new, family, resp, grid, div)
            q_move = _q_on_grid(pi_cand, params_new, family, resp, grid, div)
            weights_new = pi_cand if q_move <= q_keep else theta.weights

        theta_next = MixtureSpec(family, weights_new, params_new)
        step = float(np.max(np.abs(theta_next.flat() - theta.flat())))
        theta = theta_next
        resp = _resp_lenient(theta, grid.points)
        d_trace.append(_d_on_grid(theta, grid, div))
        q_trace.append(_q_on_grid(theta.weights, theta.params, family, resp, grid, div))
        iters += 1
        if abs(q_trace[-1] - q_trace[-2]) < config.tol or step < 1e-10:
            converged = True
            break

    d_arr = np.asarray(d_trace)
    violations = int(np.sum(np.diff(d_arr) > 1e-10))
    return FitResult(
        theta_hat=canonicalize(theta),
        objective_trace=d_arr,
        q_trace=np.asarray(q_trace),
        iters=iters,
        converged=converged,
        descent_violations=violations,
    )


def _moment_match(family: str, mean: float, var: float) -> np.ndarray:
    mean = max(mean, 1e-3)
    if family == "poisson":
        return np.array([mean])
    if family == "normal":
        return np.array([mean, max(var, 1e-6)])
    var = max(var, mean * (1.0 + 1e-3) + 1e-6)  # overdispersion floor
    if family == "poisson_gamma":
        beta = mean / (var - mean)
        return np.array([mean * beta, beta])
    # poisson_lognormal: match mean and variance on the log scale
    sigma2 = np.log1p((var - mean) / mean**2)
    sigma2 = max(sigma2, 1e-6)
    return np.array([np.log(mean) - sigma2 / 2.0, sigma2])


def kmeans_init(
    data, family: str, n_components: int, seed: int = 0, weights=None
) -> MixtureSpec:
    """Lloyd's clustering followed by per-family moment matching."""
    y = np.asarray(data, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("data must be nonempty")
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != y.shape or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative and match the data")
    K = int(n_components)
    rng = np.random.default_rng(seed)
    pick = rng.choice(y.size, size=K, replace=y.size < K, p=w / w.sum())
    centers = y[pick].astype(float)

    assign = np.full(y.size, -1)
    for _ in range(100):
        dist = np.abs(y[:, None] - centers[None, :])
        new_assign = np.argmin(dist, axis=1)
        for k in range(K):
            mask = new_assign == k
            if not np.any(w[mask] > 0):
                far = np.argmax(np.min(dist, axis=1) * (w > 0))
                centers[k] = y[far]
                new_assign[far] = k
                mask = new_assign == k
            centers[k] = np.average(y[mask], weights=w[mask])
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    pis = np.empty(K)
    params = np.empty((K, family_dim(family)))
    for k in range(K):
        mask = assign == k
        wk = w[mask]
        pis[k] = wk.sum() / w.sum()
        mean = float(np.average(y[mask], weights=wk))
        var = float(np.average((y[mask] - mean) ** 2, weights=wk))
        params[k] = _moment_match(family, mean, var)
    return MixtureSpec(family, pis, params)
