"""Component pmf values, mixture evaluation, canonical order, support windows."""

import math

import numpy as np
from scipy.integrate import trapezoid
import pytest

from dmmix.mixtures import (
    MixtureSpec,
    canonicalize,
    component_pmf,
    family_dim,
    mixture_density,
    responsibilities,
    sample,
    support_window,
)

from oracles import nb_pmf, pl_pmf_trapezoid, poisson_pmf

TWO_POISSON = MixtureSpec("poisson", [0.4, 0.6], [[0.5], [10.0]])


def test_poisson_pmf_value():
    assert component_pmf("poisson", [0.5], 0) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_poisson_gamma_equals_negative_binomial():
    # marginal of the gamma-mixed rate is the NB closed form
    assert component_pmf("poisson_gamma", [1.0, 2.0], 0) == pytest.approx(2.0 / 3.0, abs=1e-12)
    y = np.arange(0, 201)
    for alpha in (0.5, 1.0, 10.0):
        for beta in (0.5, 1.0, 2.0):
            ours = component_pmf("poisson_gamma", [alpha, beta], y)
            ref = nb_pmf(y, alpha, beta)
            assert np.max(np.abs(ours - ref)) <= 1e-12


def test_poisson_lognormal_quadrature_against_trapezoid_oracle():
    # frozen from oracles.pl_pmf_trapezoid (1e6-point log-rate grid)
    assert component_pmf("poisson_lognormal", [1.0, 0.25], 0) == pytest.approx(
        0.09799904611137063, rel=1e-6
    )
    assert component_pmf("poisson_lognormal", [1.0, 0.25], 3) == pytest.approx(
        0.16961278109784744, rel=1e-6
    )
    assert component_pmf("poisson_lognormal", [2.0, 1.0], 7) == pytest.approx(
        0.05278004908190324, rel=1e-6
    )


@pytest.mark.parametrize("mu,sigma", [(0.0, 0.25), (1.5, 0.5), (3.0, 1.0)])
def test_poisson_lognormal_quadrature_sweep(mu, sigma):
    ys = [0, 1, 5, 20, 50]
    ours = component_pmf("poisson_lognormal", [mu, sigma**2], np.array(ys))
    for y, v in zip(ys, ours):
        ref = pl_pmf_trapezoid(y, mu, sigma**2, n_grid=200_000)
        if ref > 1e-290:
            assert v == pytest.approx(ref, rel=1e-6)


def test_mixture_density_values():
    # K=1 degenerates to the component pmf
    single = MixtureSpec("poisson", [1.0], [[2.0]])
    assert mixture_density(single, 3) == pytest.approx(component_pmf("poisson", [2.0], 3), abs=1e-15)
    assert mixture_density(TWO_POISSON, 0) == pytest.approx(0.2426395038429109, abs=1e-12)
    # label-redundant mixture equals the single component
    dup = MixtureSpec("poisson", [0.3, 0.7], [[2.0], [2.0]])
    assert mixture_density(dup, 4) == pytest.approx(component_pmf("poisson", [2.0], 4), abs=1e-15)


def test_component_pmf_sums_to_one_over_window():
    specs = [
        MixtureSpec("poisson", [1.0], [[7.0]]),
        MixtureSpec("poisson_gamma", [1.0], [[2.0, 0.5]]),
        MixtureSpec("poisson_lognormal", [1.0], [[1.0, 0.5]]),
    ]
    for spec in specs:
        _, y_max = support_window(spec, 1e-10)
        total = mixture_density(spec, np.arange(0, y_max + 1)).sum()
        assert total == pytest.approx(1.0, abs=1e-8)


def test_normal_density_integrates_to_one():
    grid = np.linspace(-30.0, 30.0, 40001)
    dens = component_pmf("normal", [1.0, 4.0], grid)
    assert trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)


def test_responsibilities():
    r = responsibilities(TWO_POISSON, 0)
    assert r.shape == (2,)
    assert r.sum() == pytest.approx(1.0, abs=1e-12)
    assert r[0] == pytest.approx(0.9998877348600451, abs=1e-10)
    # K=1 and symmetric cases
    single = MixtureSpec("poisson", [1.0], [[2.0]])
    assert responsibilities(single, 5) == pytest.approx([1.0])
    dup = MixtureSpec("poisson", [0.5, 0.5], [[2.0], [2.0]])
    assert responsibilities(dup, 3) == pytest.approx([0.5, 0.5], abs=1e-13)


def test_responsibilities_far_tail_stable():
    # both components underflow in linear space at y=400 but membership is defined
    r = responsibilities(TWO_POISSON, 400)
    assert np.isfinite(r).all()
    assert r.sum() == pytest.approx(1.0, abs=1e-12)
    assert r[1] > 0.999


def test_canonicalize():
    messy = MixtureSpec("poisson", [0.6, 0.4], [[10.0], [0.5]])
    tidy = canonicalize(messy)
    assert tidy.weights == pytest.approx([0.4, 0.6])
    assert tidy.params[:, 0] == pytest.approx([0.5, 10.0])
    # idempotent and exactly density-preserving
    again = canonicalize(tidy)
    assert np.array_equal(again.weights, tidy.weights)
    y = np.arange(0, 30)
    assert np.array_equal(mixture_density(messy, y), mixture_density(tidy, y))
    # tied weights break by component mean
    tied = MixtureSpec("poisson", [0.5, 0.5], [[10.0], [0.5]])
    assert canonicalize(tied).params[:, 0] == pytest.approx([0.5, 10.0])


def test_support_window():
    lo, hi = support_window(MixtureSpec("poisson", [1.0], [[0.5]]), 1e-12)
    assert lo == 0 and hi <= 20
    _, hi2 = support_window(TWO_POISSON, 1e-10)
    assert 35 <= hi2 <= 45
    # cumulative-cdf oracle: smallest y with upper tail below one half
    _, med = support_window(MixtureSpec("poisson", [1.0], [[10.0]]), 0.5)
    assert med == 10
    with pytest.raises(ValueError):
        support_window(MixtureSpec("normal", [1.0], [[0.0, 1.0]]), 1e-6)


def test_validation_errors():
    with pytest.raises(ValueError):
        MixtureSpec("poisson", [0.5, 0.6], [[1.0], [2.0]])  # weights exceed 1
    with pytest.raises(ValueError):
        MixtureSpec("poisson", [1.0], [[-1.0]])  # domain
    with pytest.raises(ValueError):
        MixtureSpec("poisson_gamma", [1.0], [[1.0]])  # wrong arity
    with pytest.raises(ValueError):
        component_pmf("poisson", [1.0], -3)
    with pytest.raises(ValueError):
        component_pmf("poisson", [1.0], 2.5)
    with pytest.raises(ValueError):
        family_dim("weibull")


def test_sampling_moments():
    rng = np.random.default_rng(7)
    draws = sample(TWO_POISSON, 200_000, rng)
    mean_true = 0.4 * 0.5 + 0.6 * 10.0
    assert draws.mean() == pytest.approx(mean_true, abs=0.05)
    pg = MixtureSpec("poisson_gamma", [1.0], [[10.0, 1.0]])
    draws = sample(pg, 200_000, rng)
    assert draws.mean() == pytest.approx(10.0, abs=0.1)
    assert draws.var() == pytest.approx(10.0 * 2.0, rel=0.05)
