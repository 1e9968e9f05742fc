"""Tests for the transmission-estimation bounds and their reductions."""

import math

import numpy as np
import pytest

from qcrbench.bounds import (
    BoundPoint,
    LossBudget,
    advantage_ratio,
    build_chain,
    conjugate_factor,
    conjugate_factor_distributed,
    distributed_norm,
    distributed_reduction,
    mixing_rate,
    qcrb_coherent,
    qcrb_distributed,
    qcrb_numeric_gaussian,
    qcrb_pure_btmss,
    qcrb_ultimate,
)
from qcrbench.source import SourceParams

PARAMS = SourceParams(s=2.04, T_a=0.71)
BUDGET = LossBudget(T_p=0.973, eta_p=0.945, eta_c=0.919)
GRID = np.round(0.10 + 0.05 * np.arange(16), 12)


class TestConjugateFactor:
    def test_unit_conjugate_transmission(self):
        assert conjugate_factor(1.0, 1.3) == pytest.approx(1.0, rel=1e-14)

    def test_half_transmission_kills_advantage(self):
        assert conjugate_factor(0.5, 2.0) == 0.0
        assert conjugate_factor_distributed(0.5, 1.7, 0.8) == 0.0

    def test_distributed_form_reduces_at_unit_internal_transmission(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            eta_c = rng.uniform(0.0, 1.0)
            s = rng.uniform(0.0, 3.0)
            assert conjugate_factor_distributed(eta_c, s, 1.0) == pytest.approx(
                conjugate_factor(eta_c, s), rel=1e-12, abs=1e-12
            )

    def test_unit_eta_c_gives_one(self):
        for s, ta in ((0.5, 0.9), (2.04, 0.71), (3.0, 0.5)):
            assert conjugate_factor_distributed(1.0, s, ta) == pytest.approx(1.0, rel=1e-12)

    def test_reference_value_against_pure_form(self):
        # eta_c = 0.919, s = 2.04: the distributed factor at T_a = 1 is the
        # pure-source factor
        assert conjugate_factor_distributed(0.919, 2.04, 1.0) == pytest.approx(
            conjugate_factor(0.919, 2.04), rel=1e-12
        )


class TestRates:
    def test_lossless_mixing_rate(self):
        assert mixing_rate(1.2, 1.0) == pytest.approx(4.8, rel=1e-14)

    def test_lossless_norm(self):
        s = 0.9
        assert distributed_norm(s, 1.0) == pytest.approx(
            16.0 * s * s * math.cosh(2.0 * s), rel=1e-12
        )

    def test_mixing_rate_includes_absorption(self):
        assert mixing_rate(0.0, 0.5) == pytest.approx(abs(math.log(0.5)), rel=1e-14)

    def test_reduction_limits(self):
        assert distributed_reduction(0.0, 0.8) == 0.0
        for s in (0.4, 1.0, 2.5):
            assert distributed_reduction(s, 1.0) == pytest.approx(
                1.0 - 1.0 / math.cosh(2.0 * s), rel=1e-12
            )

    def test_bad_internal_transmission_rejected(self):
        with pytest.raises(ValueError):
            mixing_rate(1.0, 0.0)


class TestClosedFormBounds:
    def test_pure_at_zero_squeezing_equals_coherent_exactly(self):
        for t in GRID:
            pure = qcrb_pure_btmss(float(t), 1.0, 0.0, BUDGET)
            coherent = qcrb_coherent(float(t), 1.0, BUDGET.eta_p)
            assert pure.var_n == coherent.var_n

    def test_pure_at_half_conjugate_equals_coherent(self):
        budget = LossBudget(T_p=0.973, eta_p=0.945, eta_c=0.5)
        for s in (0.5, 2.0, 10.0):
            assert qcrb_pure_btmss(0.6, 1.0, s, budget).var_n == pytest.approx(
                qcrb_coherent(0.6, 1.0, budget.eta_p).var_n, rel=1e-14
            )

    def test_ideal_pure_bound_vanishes_at_full_transmission(self):
        lossless = LossBudget(T_p=1.0, eta_p=1.0, eta_c=1.0)
        assert qcrb_pure_btmss(1.0, 1.0, 20.0, lossless).var_n == pytest.approx(0.0, abs=1e-15)

    def test_coherent_values(self):
        assert qcrb_coherent(0.84, 1.0, 0.945).var_n == pytest.approx(0.84 / 0.945, rel=1e-14)
        assert qcrb_coherent(0.0, 1.0, 0.945).var_n == 0.0
        assert qcrb_coherent(1.0, 1.0, 1.0).var_n == 1.0

    def test_coherent_is_linear(self):
        a = qcrb_coherent(0.2, 1.0, 0.945).var_n
        b = qcrb_coherent(0.4, 1.0, 0.945).var_n
        c = qcrb_coherent(0.6, 1.0, 0.945).var_n
        assert b - a == pytest.approx(c - b, rel=1e-12)

    def test_ultimate_values(self):
        assert qcrb_ultimate(1.0, 1.0, BUDGET, lossless=True).var_n == 0.0
        assert qcrb_ultimate(0.84, 1.0, BUDGET).var_n == pytest.approx(
            0.84 / 0.945 - 0.84**2 * 0.973, rel=1e-12
        )

    def test_distributed_reduces_to_pure(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            t = rng.uniform(0.05, 1.0)
            s = rng.uniform(0.0, 3.0)
            budget = LossBudget(
                T_p=rng.uniform(0.5, 1.0), eta_p=rng.uniform(0.5, 1.0), eta_c=rng.uniform(0.0, 1.0)
            )
            dist = qcrb_distributed(t, 1.0, SourceParams(s=s, T_a=1.0), budget).var_n
            pure = qcrb_pure_btmss(t, 1.0, s, budget).var_n
            assert dist == pytest.approx(pure, rel=1e-9, abs=1e-12)

    def test_distributed_at_zero_squeezing_is_coherent(self):
        point = qcrb_distributed(0.5, 1.0, SourceParams(s=0.0, T_a=0.71), BUDGET)
        assert point.var_n == qcrb_coherent(0.5, 1.0, BUDGET.eta_p).var_n

    def test_distributed_approaches_lossy_ultimate_at_high_squeezing(self):
        budget = LossBudget(T_p=0.973, eta_p=0.945, eta_c=1.0)
        params = SourceParams(s=20.0, T_a=1.0)
        for t in GRID:
            dist = qcrb_distributed(float(t), 1.0, params, budget).var_n
            ult = qcrb_ultimate(float(t), 1.0, budget).var_n
            assert dist == pytest.approx(ult, rel=1e-6)

    def test_ordering_over_grid(self):
        for t in GRID:
            coherent = qcrb_coherent(float(t), 1.0, BUDGET.eta_p).var_n
            dist = qcrb_distributed(float(t), 1.0, PARAMS, BUDGET).var_n
            ult = qcrb_ultimate(float(t), 1.0, BUDGET).var_n
            assert ult <= dist <= coherent


class TestNumericGaussianBound:
    def test_coherent_chain_matches_closed_form(self):
        params = SourceParams(s=0.0, T_a=1.0)
        chain = build_chain(params, BUDGET)
        for t in (0.1, 0.45, 0.84):
            numeric = qcrb_numeric_gaussian(t, params, BUDGET, chain=chain).var_n
            assert numeric == pytest.approx(qcrb_coherent(t, 1.0, BUDGET.eta_p).var_n, rel=1e-9)

    def test_pure_chain_matches_closed_form(self):
        params = SourceParams(s=2.04, T_a=1.0)
        chain = build_chain(params, BUDGET)
        for t in GRID:
            numeric = qcrb_numeric_gaussian(float(t), params, BUDGET, chain=chain).var_n
            closed = qcrb_pure_btmss(float(t), 1.0, 2.04, BUDGET).var_n
            assert numeric == pytest.approx(closed, rel=1e-6)

    def test_distributed_chain_matches_closed_form(self):
        chain = build_chain(PARAMS, BUDGET)
        for t in GRID:
            numeric = qcrb_numeric_gaussian(float(t), PARAMS, BUDGET, chain=chain).var_n
            closed = qcrb_distributed(float(t), 1.0, PARAMS, BUDGET).var_n
            assert numeric == pytest.approx(closed, rel=1e-6)

    def test_var_n_is_seed_independent(self):
        a = qcrb_numeric_gaussian(0.5, PARAMS, BUDGET).var_n
        rich = SourceParams(s=2.04, T_a=0.71, seed_photons=4e8)
        b = qcrb_numeric_gaussian(0.5, rich, BUDGET).var_n
        assert a == pytest.approx(b, rel=1e-11)

    def test_doubling_photons_halves_variance(self):
        one = qcrb_numeric_gaussian(0.5, PARAMS, BUDGET, n_r=1e6)
        two = qcrb_numeric_gaussian(0.5, PARAMS, BUDGET, n_r=2e6)
        assert one.var_n == two.var_n
        assert one.variance == pytest.approx(2.0 * two.variance, rel=1e-12)

    def test_dim_seed_rejected(self):
        with pytest.raises(ValueError):
            build_chain(SourceParams(s=1.0, T_a=0.9, seed_photons=100.0), BUDGET)

    def test_zero_transmission_rejected(self):
        with pytest.raises(ValueError):
            qcrb_numeric_gaussian(0.0, PARAMS, BUDGET)


class TestAdvantage:
    def test_no_advantage_without_squeezing(self):
        assert advantage_ratio(0.5, SourceParams(s=0.0, T_a=0.71), BUDGET) == 1.0

    def test_reference_advantage(self):
        assert advantage_ratio(0.84, PARAMS, BUDGET) == pytest.approx(2.6, abs=0.1)

    def test_advantage_fades_at_low_transmission(self):
        assert advantage_ratio(1e-4, PARAMS, BUDGET) == pytest.approx(1.0, abs=1e-3)


class TestBoundPoint:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BoundPoint(T=0.5, var_n=0.1, bound_kind="nonsense")

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            LossBudget(T_p=1.2, eta_p=0.9, eta_c=0.9)
