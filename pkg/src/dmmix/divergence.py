"""Disparity generators and residual-adjustment machinery.

A divergence between a target density g and a model density f is built from a
convex generator G applied to the Pearson residual delta = g/f - 1:

    D_G(g, f) = sum_y G(delta(y)) f(y)

Every generator here is convex and thrice differentiable on (-1, inf).  A
generator is called *calibrated* when G(0) = 0, G'(0) = 0 and G''(0) = 1;
calibration pins the curvature at a perfect fit so that different divergences
become comparable and the sandwich covariance collapses to the inverse Fisher
information at the model.

Two derived objects drive the fitting engine:

* the residual-adjustment function  A(delta) = (1 + delta) G'(delta) - G(delta),
  whose boundedness governs robustness to outliers, and
* the mixing-weight integrand  B(tau) = G(tau - 1) - tau G'(tau - 1), the
  partial derivative of the per-component surrogate with respect to a mixing
  weight, used by the Lagrangian weight update.

Everything evaluates G at the residual delta = tau - 1 (never at the raw
ratio), one convention throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import xlogy

KINDS = ("kl", "kl_calibrated", "hd", "ned", "vned", "bwhd", "cr", "pd")


class RafEnvelope(NamedTuple):
    a_max: float
    a_prime_max: float


def _as_array(x, lower: float, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < lower):
        raise ValueError(f"{name} must be >= {lower} and not NaN")
    return arr


def _ret(arr: np.ndarray, template) -> float | np.ndarray:
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class DivergenceSpec:
    """A disparity generator selected by string id plus optional parameters.

    kind: one of "kl", "kl_calibrated", "hd", "ned", "vned", "bwhd", "cr", "pd".
    tau:   blend weight for "bwhd", in [0, 1].
    alpha: power for "cr" / "pd", excluding 0 and -1.

    "kl" is the uncalibrated form G(d) = (1+d) log(1+d) whose weight update
    collapses to EM's; "kl_calibrated" subtracts the linear term d.  "cr" is
    the raw power-divergence form with G'(0) = 1/alpha; "pd" is the same
    family recentered by that linear term, hence calibrated.
    """

    kind: str
    tau: float = 1.0 / 3.0
    alpha: float = -0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown divergence kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "bwhd" and not 0.0 <= self.tau <= 1.0:
            raise ValueError("bwhd blend tau must lie in [0, 1]")
        if self.kind in ("cr", "pd") and self.alpha in (0.0, -1.0):
            raise ValueError("cr/pd power alpha must avoid 0 and -1")

    @property
    def label(self) -> str:
        if self.kind == "bwhd":
            return f"bwhd({self.tau:g})"
        if self.kind in ("cr", "pd"):
            return f"{self.kind}({self.alpha:g})"
        return self.kind

    # ------------------------------------------------------------------
    # generator and derivatives
    # ------------------------------------------------------------------
    def g(self, delta) -> float | np.ndarray:
        d = _as_array(delta, -1.0, "delta")
        return _ret(self._g(d), delta)

    def g_prime(self, delta) -> float | np.ndarray:
        d = _as_array(delta, -1.0, "delta")
        return _ret(self._g_prime(d), delta)

    def g_second(self, delta) -> float | np.ndarray:
        d = _as_array(delta, -1.0, "delta")
        return _ret(self._g_second(d), delta)

    def raf(self, delta) -> float | np.ndarray:
        """Residual-adjustment function A(delta) = (1+delta) G'(delta) - G(delta)."""
        d = _as_array(delta, -1.0, "delta")
        return _ret(self._raf(d), delta)

    def raf_prime(self, delta) -> float | np.ndarray:
        """A'(delta), which equals (1+delta) G''(delta) identically."""
        d = _as_array(delta, -1.0, "delta")
        return _ret((1.0 + d) * self._g_second(d), delta)

    def b_weight(self, tau_ratio) -> float | np.ndarray:
        """Weight-update integrand B(tau) = G(tau-1) - tau G'(tau-1).

        tau_ratio is the conditional ratio (target mass over component mass),
        not the residual.  At tau = 0 the tau*G' term vanishes in the limit for
        every kind here, so B(0) = G(-1).
        """
        t = _as_array(tau_ratio, 0.0, "tau_ratio")
        d = t - 1.0
        # g_prime can diverge at the left edge d = -1, reached only when t = 0
        # where the product is 0 in the limit; evaluate at a safe point there.
        d_safe = np.where(t > 0.0, d, 0.0)
        out = self._g(d) - np.where(t > 0.0, t * self._g_prime(d_safe), 0.0)
        return _ret(out, tau_ratio)

    def raf_envelope(self) -> RafEnvelope:
        """Analytic sup of |A| and |A'| over [-1, inf).

        ned:  A = 2 - (2+delta) e^{-delta} increases from 2-e to the limit 2;
              A' = (1+delta) e^{-delta} peaks at delta=0 with value 1.
        vned: A = e^{1 - 1/(1+delta)} - 1 ranges over [-1, e-1);
              A' = e^{1-u} u^2 with u = 1/(1+delta) peaks at u=2 with 4/e.
        kl / kl_calibrated: A = 1+delta resp. delta (unbounded), A' = 1.
        hd, bwhd, cr, pd: |A| or |A'| diverges at delta -> -1 or infinity.
        """
        inf = math.inf
        table = {
            "kl": (inf, 1.0),
            "kl_calibrated": (inf, 1.0),
            "hd": (inf, inf),
            "ned": (2.0, 1.0),
            "vned": (math.e - 1.0, 4.0 / math.e),
            "bwhd": (inf, inf),
            "cr": (inf, inf),
            "pd": (inf, inf),
        }
        return RafEnvelope(*table[self.kind])

    def calibrated(self) -> "DivergenceSpec":
        """The same divergence with the linear term G'(0)*delta removed.

        Recentering does not move the minimizer when target and model carry
        equal mass, but it zeroes G'(0): kl -> kl_calibrated and cr -> pd;
        every other kind is already calibrated.
        """
        if self.kind == "kl":
            return DivergenceSpec("kl_calibrated")
        if self.kind == "cr":
            return DivergenceSpec("pd", alpha=self.alpha)
        return self

    # ------------------------------------------------------------------
    # per-kind formulas
    # ------------------------------------------------------------------
    def _g(self, d: np.ndarray) -> np.ndarray:
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if k == "kl":
                return xlogy(1.0 + d, 1.0 + d)
            if k == "kl_calibrated":
                return xlogy(1.0 + d, 1.0 + d) - d
            if k == "hd":
                return 2.0 * np.square(np.sqrt(1.0 + d) - 1.0)
            if k == "ned":
                return np.expm1(-d) + d
            if k == "vned":
                u = np.divide(1.0, 1.0 + d)
                val = np.exp(1.0 - u) * (1.0 + d) - (2.0 * d + 1.0)
                return np.where(np.isinf(u), 1.0, val)
            if k == "bwhd":
                den = self.tau * np.sqrt(1.0 + d) + (1.0 - self.tau)
                return 0.5 * np.square(np.divide(d, den))
            a = self.alpha
            if k == "cr":
                return (np.power(1.0 + d, a + 1.0) - 1.0) / (a * (a + 1.0))
            # pd: cr recentered by its slope at zero
            return (np.power(1.0 + d, a + 1.0) - 1.0 - (a + 1.0) * d) / (a * (a + 1.0))

    def _g_prime(self, d: np.ndarray) -> np.ndarray:
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if k == "kl":
                return np.log1p(d) + 1.0
            if k == "kl_calibrated":
                return np.log1p(d)
            if k == "hd":
                return 2.0 * (1.0 - np.divide(1.0, np.sqrt(1.0 + d)))
            if k == "ned":
                return -np.expm1(-d)
            if k == "vned":
                u = np.divide(1.0, 1.0 + d)
                val = np.exp(1.0 - u) * (u + 1.0) - 2.0
                return np.where(np.isinf(u), -2.0, val)
            if k == "bwhd":
                s = np.sqrt(1.0 + d)
                den = self.tau * s + (1.0 - self.tau)
                dden = np.divide(self.tau, 2.0 * s)
                return np.divide(d, den**2) - np.square(d) * np.divide(dden, den**3)
            a = self.alpha
            if k == "cr":
                return np.power(1.0 + d, a) / a
            return (np.power(1.0 + d, a) - 1.0) / a

    def _g_second(self, d: np.ndarray) -> np.ndarray:
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if k in ("kl", "kl_calibrated"):
                return np.divide(1.0, 1.0 + d)
            if k == "hd":
                return np.power(1.0 + d, -1.5)
            if k == "ned":
                return np.exp(-d)
            if k == "vned":
                u = np.divide(1.0, 1.0 + d)
                return np.where(np.isinf(u), 0.0, np.exp(1.0 - u) * u**3)
            if k == "bwhd":
                s = np.sqrt(1.0 + d)
                den = self.tau * s + (1.0 - self.tau)
                d1 = np.divide(self.tau, 2.0 * s)
                d2 = -np.divide(self.tau, 4.0 * np.power(1.0 + d, 1.5))
                return (
                    np.divide(1.0, den**2)
                    - 4.0 * d * d1 / den**3
                    - np.square(d) * d2 / den**3
                    + 3.0 * np.square(d * d1) / den**4
                )
            return np.power(1.0 + d, self.alpha - 1.0)

    def _raf(self, d: np.ndarray) -> np.ndarray:
        # Closed forms where they are clean; bwhd falls back to the identity.
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if k == "kl":
                return 1.0 + d
            if k == "kl_calibrated":
                return d.copy()
            if k == "hd":
                return 2.0 * (np.sqrt(1.0 + d) - 1.0)
            if k == "ned":
                return 2.0 - (2.0 + d) * np.exp(-d)
            if k == "vned":
                u = np.divide(1.0, 1.0 + d)
                return np.where(np.isinf(u), -1.0, np.exp(1.0 - u) - 1.0)
            a = self.alpha
            if k == "cr":
                return np.power(1.0 + d, a + 1.0) / (a + 1.0) + 1.0 / (a * (a + 1.0))
            if k == "pd":
                return (np.power(1.0 + d, a + 1.0) - 1.0) / (a + 1.0)
            return (1.0 + d) * self._g_prime(d) - self._g(d)


def divergence(kind: str, **params) -> DivergenceSpec:
    """Build a DivergenceSpec from a string id and optional parameter map."""
    return DivergenceSpec(kind, **params)


def eval_generator(spec: DivergenceSpec, delta) -> float | np.ndarray:
    return spec.g(delta)


def eval_raf(spec: DivergenceSpec, delta) -> float | np.ndarray:
    return spec.raf(delta)


def eval_b_weight(spec: DivergenceSpec, tau_ratio) -> float | np.ndarray:
    return spec.b_weight(tau_ratio)


def raf_envelope(spec: DivergenceSpec) -> RafEnvelope:
    return spec.raf_envelope()
