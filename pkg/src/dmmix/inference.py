"""Finite-step inference: Fisher information, sandwich covariance, deviance.

All derivatives are central finite differences taken in an unconstrained
parameterization (additive log-ratio for the weights, log for positive
component parameters) and pulled back to the natural coordinates

    (pi_1, ..., pi_{K-1}, phi_1, ..., phi_K)

so reported matrices follow the usual parameter conventions.  The pull-back
of second derivatives drops the gradient term, which is why curvature is
only offered at stationary points.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .density import (
    DensityEstimate,
    continuous_kde,
    empirical_pmf,
    epanechnikov_bandwidth,
)
from .divergence import DivergenceSpec, divergence
from .engine import FitConfig, _build_grid, _d_on_grid, fit
from .mixtures import (
    MixtureSpec,
    canonicalize,
    family_param_names,
    is_count_family,
    mixture_density,
    sample,
    support_window,
)

_REL_STEP = 1e-5
_BOUNDARY = 1e-8

# positive parameters walk on the log scale; location parameters walk directly
_LOG_SCALE = {
    "poisson": (True,),
    "poisson_gamma": (True, True),
    "poisson_lognormal": (False, True),
    "normal": (False, True),
}


@dataclass(frozen=True)
class InferenceReport:
    theta_hat: MixtureSpec
    fisher: np.ndarray
    sandwich: np.ndarray
    wilks_stat: float
    mc_summary: dict | None = None


def coord_names(theta: MixtureSpec) -> list[str]:
    names = [f"weight_{k + 1}" for k in range(theta.n_components - 1)]
    for k in range(theta.n_components):
        names.extend(f"{p}_{k + 1}" for p in family_param_names(theta.family))
    return names


def natural_coords(theta: MixtureSpec) -> np.ndarray:
    """(pi_1..pi_{K-1}, phi rows flattened); the last weight is implied."""
    return np.concatenate([theta.weights[:-1], theta.params.ravel()])


def _check_interior(theta: MixtureSpec) -> None:
    if np.any(theta.weights <= _BOUNDARY):
        raise ValueError("weights sit on the simplex boundary; scores are undefined there")


def _to_z(theta: MixtureSpec) -> np.ndarray:
    w = theta.weights
    z_w = np.log(w[:-1]) - np.log(w[-1])
    cols = _LOG_SCALE[theta.family]
    blocks = [np.log(row[j]) if cols[j] else row[j]
              for row in theta.params for j in range(len(cols))]
    return np.concatenate([z_w, np.asarray(blocks, dtype=float)])


def _from_z(z: np.ndarray, family: str, k: int) -> MixtureSpec:
    ew = np.exp(z[: k - 1])
    weights = np.concatenate([ew, [1.0]]) / (1.0 + ew.sum())
    cols = _LOG_SCALE[family]
    d = len(cols)
    vals = z[k - 1 :].reshape(k, d).copy()
    for j in range(d):
        if cols[j]:
            vals[:, j] = np.exp(vals[:, j])
    return MixtureSpec(family, weights, vals)


def _pullback_matrix(theta: MixtureSpec) -> np.ndarray:
    """dz/dc as a dense matrix; maps z-space gradients to natural-space ones."""
    k = theta.n_components
    cols = _LOG_SCALE[theta.family]
    p = (k - 1) + k * len(cols)
    jac = np.zeros((p, p))
    if k > 1:
        w = theta.weights
        jac[: k - 1, : k - 1] = np.diag(1.0 / w[:-1]) + 1.0 / w[-1]
    diag = []
    for row in theta.params:
        for j, on_log in enumerate(cols):
            diag.append(1.0 / row[j] if on_log else 1.0)
    jac[k - 1 :, k - 1 :] = np.diag(diag)
    return jac


def _eval_grid(theta: MixtureSpec) -> tuple[np.ndarray, float]:
    if theta.is_count:
        _, hi = support_window(theta, 1e-12)
        return np.arange(0, hi + 1, dtype=float), 1.0
    means = theta.component_means()
    sds = np.sqrt(theta.component_variances())
    pts = np.linspace(float(np.min(means - 10.0 * sds)),
                      float(np.max(means + 10.0 * sds)), 4001)
    return pts, float(pts[1] - pts[0])


def _score_matrix(theta: MixtureSpec, y: np.ndarray) -> np.ndarray:
    """u(y; theta) in natural coordinates, one row per evaluation point."""
    z = _to_z(theta)
    k, fam = theta.n_components, theta.family
    cols = np.empty((y.shape[0], z.shape[0]))
    for j in range(z.shape[0]):
        h = _REL_STEP * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        fp = mixture_density(_from_z(zp, fam, k), y)
        fm = mixture_density(_from_z(zm, fam, k), y)
        cols[:, j] = (np.log(fp) - np.log(fm)) / (2.0 * h)
    return cols @ _pullback_matrix(theta)


def score_and_fisher(theta: MixtureSpec, family: str):
    """Score evaluator u(y) in natural coordinates and I = sum u u' f."""
    if family != theta.family:
        raise ValueError("family does not match the mixture argument")
    _check_interior(theta)

    def score(y):
        arr = np.atleast_1d(np.asarray(y, dtype=float))
        u = _score_matrix(theta, arr)
        return u[0] if np.ndim(y) == 0 else u

    pts, quad = _eval_grid(theta)
    u = _score_matrix(theta, pts)
    f = mixture_density(theta, pts)
    fisher = (u.T * (f * quad)) @ u
    return score, fisher


def psi_gradient(
    theta: MixtureSpec, g, family: str, div: DivergenceSpec | str
) -> np.ndarray:
    """Numeric gradient of the divergence objective in natural coordinates."""
    div = divergence(div) if isinstance(div, str) else div
    g_est = _as_estimate(g)
    _check_interior(theta)
    grid = _build_grid(g_est, (theta,))
    z = _to_z(theta)
    k, fam = theta.n_components, theta.family
    out = np.empty(z.shape[0])
    for j in range(z.shape[0]):
        h = _REL_STEP * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        dp = _d_on_grid(_from_z(zp, fam, k), grid, div)
        dm = _d_on_grid(_from_z(zm, fam, k), grid, div)
        out[j] = (dp - dm) / (2.0 * h)
    return _pullback_matrix(theta).T @ out


def _as_estimate(g) -> DensityEstimate:
    if isinstance(g, DensityEstimate):
        return g
    if isinstance(g, MixtureSpec):
        if not g.is_count:
            raise ValueError("pass continuous references as a DensityEstimate")
        _, hi = support_window(g, 1e-12)
        pts = np.arange(0, hi + 1)
        return DensityEstimate(kind="discrete_pmf", support=pts, mass=mixture_density(g, pts))
    raise TypeError("g must be a DensityEstimate or a MixtureSpec")


def _require_stationary(theta: MixtureSpec, g_est, family: str, div: DivergenceSpec) -> None:
    grad = psi_gradient(theta, g_est, family, div)
    if np.max(np.abs(grad)) > 1e-6:
        raise ValueError(
            f"theta is not stationary (|gradient| = {np.max(np.abs(grad)):.3e} > 1e-6)"
        )


def curvature_matrix(
    theta_dagger: MixtureSpec, g, family: str, div: DivergenceSpec | str
) -> np.ndarray:
    """Second derivative of the divergence objective in natural coordinates.

    Only valid at a stationary point: the pull-back from the unconstrained
    walking coordinates drops the gradient term.
    """
    div = divergence(div) if isinstance(div, str) else div
    if family != theta_dagger.family:
        raise ValueError("family does not match the mixture argument")
    _check_interior(theta_dagger)
    g_est = _as_estimate(g)
    _require_stationary(theta_dagger, g_est, family, div)

    grid = _build_grid(g_est, (theta_dagger,))
    z = _to_z(theta_dagger)
    k, fam = theta_dagger.n_components, theta_dagger.family
    p = z.shape[0]

    def d_at(zv: np.ndarray) -> float:
        return _d_on_grid(_from_z(zv, fam, k), grid, div)

    steps = np.array([_REL_STEP * max(1.0, abs(z[j])) for j in range(p)])
    h_z = np.empty((p, p))
    d_center = d_at(z)
    for i in range(p):
        zp, zm = z.copy(), z.copy()
        zp[i] += steps[i]
        zm[i] -= steps[i]
        h_z[i, i] = (d_at(zp) - 2.0 * d_center + d_at(zm)) / steps[i] ** 2
        for j in range(i + 1, p):
            zpp, zpm, zmp, zmm = z.copy(), z.copy(), z.copy(), z.copy()
            zpp[i] += steps[i]
            zpp[j] += steps[j]
            zmm[i] -= steps[i]
            zmm[j] -= steps[j]
            zpm[i] += steps[i]
            zpm[j] -= steps[j]
            zmp[i] -= steps[i]
            zmp[j] += steps[j]
            h_z[i, j] = h_z[j, i] = (
                d_at(zpp) - d_at(zpm) - d_at(zmp) + d_at(zmm)
            ) / (4.0 * steps[i] * steps[j])
    jac = _pullback_matrix(theta_dagger)
    return jac.T @ h_z @ jac


def sandwich_cov(
    theta_dagger: MixtureSpec, g, family: str, div: DivergenceSpec | str
) -> np.ndarray:
    """H^{-1} V H^{-1} for the divergence functional at a stationary point."""
    div = divergence(div) if isinstance(div, str) else div
    if family != theta_dagger.family:
        raise ValueError("family does not match the mixture argument")
    _check_interior(theta_dagger)
    g_est = _as_estimate(g)
    h_nat = curvature_matrix(theta_dagger, g_est, family, div)

    grid = _build_grid(g_est, (theta_dagger,))
    f = mixture_density(theta_dagger, grid.points)
    live = (grid.g > 0) & (f > 1e-300)
    delta = grid.g[live] / f[live] - 1.0
    u = _score_matrix(theta_dagger, grid.points[live])
    m = u * div.raf_prime(delta)[:, None]
    gw = grid.g[live] * grid.quad
    mu = gw @ m
    v = (m.T * gw) @ m - np.outer(mu, mu)

    cond = np.linalg.cond(h_nat)
    if not np.isfinite(cond) or cond > 1e8:
        raise ValueError(f"curvature matrix is singular (condition number {cond:.3e})")
    h_inv = np.linalg.inv(h_nat)
    return h_inv @ v @ h_inv


def wilks_stat(
    theta_ref: MixtureSpec,
    theta_hat: MixtureSpec,
    g_n,
    family: str,
    div: DivergenceSpec | str,
    n: int,
) -> float:
    """Deviance 2n (D(theta_ref) - D(theta_hat)) on a shared evaluation grid."""
    div = divergence(div) if isinstance(div, str) else div
    if theta_ref.family != family or theta_hat.family != family:
        raise ValueError("family does not match the mixture arguments")
    grid = _build_grid(_as_estimate(g_n), (theta_ref, theta_hat))
    return 2.0 * n * (_d_on_grid(theta_ref, grid, div) - _d_on_grid(theta_hat, grid, div))


def m_n_rule(n: int, c: float = 6.0) -> int:
    """Finite-step sweep budget: ceil(c * log10(n))."""
    return int(np.ceil(c * np.log10(max(n, 2))))


def clt_harness(
    truth: MixtureSpec,
    family: str,
    div: DivergenceSpec | str,
    n_grid,
    reps: int,
    m_rule: float = 6.0,
    seed: int = 0,
    fit_config: FitConfig | None = None,
) -> dict:
    """Monte Carlo check of the finite-step normal limit.

    For each n, runs m_n = ceil(m_rule * log10 n) sweeps per replication and
    reports per-coordinate means/variances of I(truth)^{1/2} sqrt(n) (est - truth)
    and 95% Wald coverage, plus the raw standardized draws.
    """
    if reps < 50:
        raise ValueError("need at least 50 replications for a meaningful summary")
    div = divergence(div) if isinstance(div, str) else div
    base = fit_config if fit_config is not None else FitConfig()
    star = canonicalize(truth)
    c_star = natural_coords(star)
    _, fisher = score_and_fisher(star, family)
    evals, evecs = np.linalg.eigh(fisher)
    root = evecs @ np.diag(np.sqrt(np.maximum(evals, 0.0))) @ evecs.T
    wald_sd = np.sqrt(np.diag(np.linalg.inv(fisher)))

    summary: dict = {}
    for n in n_grid:
        m_n = m_n_rule(n, m_rule)
        draws, covered = [], []
        for rep in range(reps):
            rng = np.random.default_rng((seed, n, rep))
            data = sample(star, n, rng)
            cfg = dataclasses.replace(base, divergence=div, max_iters=m_n,
                                      tol=1e-300, seed=rep)
            est = canonicalize(fit(data, family, star.n_components, cfg).theta_hat)
            diff = natural_coords(est) - c_star
            draws.append(np.sqrt(n) * (root @ diff))
            covered.append(np.abs(diff) <= 1.96 * wald_sd / np.sqrt(n))
        draws = np.asarray(draws)
        covered = np.asarray(covered, dtype=float)
        summary[int(n)] = {
            "m_n": m_n,
            "mean": draws.mean(axis=0),
            "variance": draws.var(axis=0, ddof=1),
            "coverage": covered.mean(axis=0),
            "draws": draws,
        }
    return summary


def build_report(
    data,
    family: str,
    n_components: int,
    div: DivergenceSpec | str,
    fit_config: FitConfig | None = None,
    theta_ref: MixtureSpec | None = None,
) -> InferenceReport:
    """Fit, then assemble Fisher, sandwich, and the deviance against a reference."""
    div = divergence(div) if isinstance(div, str) else div
    cfg = dataclasses.replace(
        fit_config if fit_config is not None else FitConfig(), divergence=div.label
    )
    arr = np.asarray(data, dtype=float).ravel()
    res = fit(arr, family, n_components, cfg)
    theta_hat = res.theta_hat
    _, fisher = score_and_fisher(theta_hat, family)

    if is_count_family(family):
        g_n = empirical_pmf(arr)
    else:
        g_n = continuous_kde(arr, bandwidth=epanechnikov_bandwidth(arr))
    sandwich = sandwich_cov(theta_hat, g_n, family, div)
    wilks = 0.0
    if theta_ref is not None:
        wilks = wilks_stat(theta_ref, theta_hat, g_n, family, div, arr.shape[0])
    return InferenceReport(theta_hat=theta_hat, fisher=fisher,
                           sandwich=sandwich, wilks_stat=wilks)
