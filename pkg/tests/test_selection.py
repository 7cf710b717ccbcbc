"""Tests for penalized order selection and split-select-estimate."""

import numpy as np
import pytest

from dmmix.engine import FitConfig
from dmmix.mixtures import MixtureSpec, sample
from dmmix.selection import (
    SelectionConfig,
    dimension_match,
    gdic,
    gdic_row,
    majority_vote,
    param_dim,
    penalty_weight,
    split_select_estimate,
)

EM_CFG = FitConfig(divergence="kl", pi_update="closed_form_em", tol=1e-9)


def test_param_dim_formula():
    assert param_dim(2, "poisson") == 3
    assert param_dim(2, "poisson_gamma") == 5
    assert param_dim(1, "poisson") == 1
    assert param_dim(1, "poisson_gamma") == 2
    assert param_dim(1, "poisson_lognormal") == 2
    assert param_dim(1, "normal") == 2
    assert param_dim(4, "normal") == 11
    with pytest.raises(ValueError):
        param_dim(0, "poisson")


def test_penalty_rules():
    assert penalty_weight("bic_half_log", 100) == pytest.approx(0.5 * np.log(100))
    assert penalty_weight(2.5, 100) == 2.5
    assert penalty_weight(lambda n: np.log(n), 100) == pytest.approx(np.log(100))
    with pytest.raises(ValueError):
        SelectionConfig(penalty="aic")


def test_gdic_penalty_example():
    # K=2 Poisson at n1=100 under the default rule: 3 * (ln(100)/2) / 100
    rng = np.random.default_rng(0)
    data = rng.poisson(5.0, 100)
    cfg = SelectionConfig(k_max=2, fit_config=EM_CFG)
    risk, pen, score = gdic_row(2, data, "poisson", cfg)
    assert pen == pytest.approx(0.0690776, abs=1e-7)
    assert score == pytest.approx(risk + pen, rel=1e-15)
    assert gdic(2, data, "poisson", cfg) == pytest.approx(score, rel=1e-15)


def test_gdic_penalty_strictly_increasing_in_k():
    pens = [penalty_weight("bic_half_log", 500) / 500 * param_dim(k, "poisson_gamma")
            for k in range(1, 6)]
    assert np.all(np.diff(pens) > 0)


def test_gdic_prefers_true_single_component():
    cfg = SelectionConfig(k_max=2, fit_config=EM_CFG)
    for seed in (1, 2, 3):
        data = np.random.default_rng(seed).poisson(5.0, 400)
        assert gdic(1, data, "poisson", cfg) < gdic(2, data, "poisson", cfg)


def test_risk_nonincreasing_in_k():
    rng = np.random.default_rng(11)
    truth = MixtureSpec("poisson", [0.4, 0.6], [[2.0], [9.0]])
    data = sample(truth, 300, rng)
    for fit_cfg in (EM_CFG,
                    FitConfig(divergence="hd", pi_update="hmix_squared",
                              max_iters=80, tol=1e-9, optimizer_iters=100)):
        cfg = SelectionConfig(k_max=3, fit_config=fit_cfg)
        risks = [gdic_row(k, data, "poisson", cfg)[0] for k in (1, 2, 3)]
        assert risks[1] <= risks[0] + 1e-4
        assert risks[2] <= risks[1] + 1e-4


def test_risk_at_truth_shrinks_with_n():
    rng = np.random.default_rng(7)
    truth = MixtureSpec("poisson", [0.4, 0.6], [[2.0], [9.0]])
    cfg = SelectionConfig(
        k_max=2,
        fit_config=FitConfig(divergence="hd", pi_update="hmix_squared",
                             max_iters=80, tol=1e-9, optimizer_iters=100),
    )
    small = gdic_row(2, sample(truth, 150, rng), "poisson", cfg)[0]
    large = gdic_row(2, sample(truth, 3000, rng), "poisson", cfg)[0]
    assert large < small


def test_majority_vote_rules():
    assert majority_vote([2, 2, 3, 2, 2]) == 2
    assert majority_vote([1]) == 1
    assert majority_vote([1, 2]) == 1
    assert majority_vote([3, 3, 2, 2]) == 2
    with pytest.raises(ValueError):
        majority_vote([])


def test_split_select_estimate_poisson_truth_two():
    rng = np.random.default_rng(4)
    truth = MixtureSpec("poisson", [0.4, 0.6], [[2.0], [9.0]])
    data = sample(truth, 800, rng)
    res = split_select_estimate(
        data, "poisson", SelectionConfig(k_max=3, splits=5, seed=4, fit_config=EM_CFG)
    )
    assert len(res.per_split_k) == 5
    assert res.k_hat == 2
    assert res.final_estimate.n_components == 2
    means = np.sort(res.final_estimate.component_means())
    assert means[0] == pytest.approx(2.0, abs=0.5)
    assert means[1] == pytest.approx(9.0, abs=0.5)
    for rows in res.gdic_table:
        assert sorted(rows) == [1, 2, 3]
        for risk, pen, score in rows.values():
            assert score == pytest.approx(risk + pen, rel=1e-12)


def test_split_select_estimate_pg_unknown_k():
    # 0.3 PG(10,1) + 0.7 PG(1,2): order 2 recovered, means near 10 and 0.5
    rng = np.random.default_rng(3)
    truth = MixtureSpec("poisson_gamma", [0.3, 0.7], [[10.0, 1.0], [1.0, 2.0]])
    data = sample(truth, 4000, rng)
    cfg = SelectionConfig(
        k_max=2, splits=1, seed=5, restarts=2,
        fit_config=FitConfig(divergence="kl", pi_update="closed_form_em",
                             max_iters=60, tol=1e-7, optimizer_iters=150),
    )
    res = split_select_estimate(data, "poisson_gamma", cfg)
    assert res.k_hat == 2
    means = np.sort(res.final_estimate.component_means())
    assert means[0] == pytest.approx(0.5, abs=0.15)
    assert means[1] == pytest.approx(10.0, abs=0.8)
    small = res.final_estimate.weights[np.argmax(res.final_estimate.component_means())]
    assert small == pytest.approx(0.3, abs=0.05)


def test_split_select_estimate_kmax_one():
    data = np.random.default_rng(0).poisson(4.0, 60)
    res = split_select_estimate(
        data, "poisson", SelectionConfig(k_max=1, splits=3, fit_config=EM_CFG)
    )
    assert res.per_split_k == (1, 1, 1)
    assert res.k_hat == 1
    assert res.final_estimate.n_components == 1


def test_split_select_estimate_needs_two_points():
    with pytest.raises(ValueError):
        split_select_estimate([3], "poisson", SelectionConfig(fit_config=EM_CFG))


def test_selection_rate_improves_with_n():
    # reduced-size check of the consistency trend under a separated truth
    truth = MixtureSpec("poisson", [0.4, 0.6], [[0.5], [10.0]])
    cfg = SelectionConfig(k_max=3, splits=1, restarts=2, fit_config=EM_CFG)
    rates = []
    for n in (250, 1000):
        rng = np.random.default_rng(1000 + n)
        hits = 0
        reps = 20
        for rep in range(reps):
            data = sample(truth, n, rng)
            res = split_select_estimate(
                data, "poisson",
                SelectionConfig(k_max=3, splits=1, seed=rep, restarts=2, fit_config=EM_CFG),
            )
            hits += res.k_hat == 2
        rates.append(hits / reps)
    assert rates[1] >= rates[0]
    assert rates[1] >= 0.9


def test_single_outlier_does_not_change_selection():
    # bounded-influence selectors keep their order when one wild point lands
    # in the selection data
    truth = MixtureSpec("poisson", [0.4, 0.6], [[0.5], [10.0]])
    cfg = SelectionConfig(
        k_max=2, restarts=1,
        fit_config=FitConfig(divergence="ned", pi_update="generic_phi",
                             max_iters=50, tol=1e-8, optimizer_iters=80),
    )
    for seed in (1, 2, 3):
        rng = np.random.default_rng(seed)
        d1 = sample(truth, 500, rng)
        clean = min((gdic(k, d1, "poisson", cfg), k) for k in (1, 2))[1]
        dirty = np.append(d1, 50.0)
        spiked = min((gdic(k, dirty, "poisson", cfg), k) for k in (1, 2))[1]
        assert spiked == clean


def test_dimension_match_cases():
    est1 = MixtureSpec("poisson", [1.0], [[5.0]])
    tru2 = MixtureSpec("poisson", [0.4, 0.6], [[2.0], [9.0]])
    a, b = dimension_match(est1, tru2)
    assert a == pytest.approx([1.0, 5.0, 0.0, 0.0])
    assert b == pytest.approx([0.4, 2.0, 0.6, 9.0])

    est3 = MixtureSpec("poisson", [0.2, 0.3, 0.5], [[1.0], [4.0], [9.0]])
    a, b = dimension_match(est3, tru2)
    assert a == pytest.approx(est3.flat())
    assert b == pytest.approx([0.4, 2.0, 0.6, 9.0, 0.0, 0.0])

    a, b = dimension_match(tru2, tru2)
    assert np.array_equal(a, tru2.flat()) and np.array_equal(b, tru2.flat())

    pg = MixtureSpec("poisson_gamma", [1.0], [[2.0, 1.0]])
    with pytest.raises(ValueError):
        dimension_match(est1, pg)
    assert dimension_match(pg, pg)[0].size == 3
