"""Rate-function and tail-sum oracles, plus weight-law tail checks."""

import math

import numpy as np
import pytest

from exptrees import (
    Constant,
    FitnessSpec,
    LogStretchedDegree,
    LogStretchedExp,
    NonSummableError,
    ParetoLike,
    PolyLogDegree,
    PowerLawDegree,
    PowerLawPlus,
    StretchedExp,
    TableDegree,
    ToleranceError,
    TwoType,
    UnsupportedVariantError,
    WeightFunctionPair,
    fitness,
    mu_asymptotic,
    mu_exact,
    sample_weight,
)
from exptrees.rng import replica_generator

PI2_6 = math.pi ** 2 / 6


def spec_power(p=2.0, weights=None):
    return FitnessSpec(degree=PowerLawDegree(p), weights=weights or WeightFunctionPair.pure())


class TestFitness:
    def test_power_mixed(self):
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.mixed())
        assert fitness(spec, 1, 0.0) == 4.0

    def test_power_additive(self):
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.additive())
        assert fitness(spec, 0, 3.0) == 4.0

    def test_polylog_at_zero(self):
        spec = FitnessSpec(degree=PolyLogDegree(3.0))
        assert fitness(spec, 0, 0.0) == pytest.approx(2.0 * math.log(2.0) ** 3, rel=1e-14)

    def test_vectorized_agrees_with_scalar(self):
        spec = FitnessSpec(degree=LogStretchedDegree(0.5), weights=WeightFunctionPair.additive())
        idx = np.arange(5)
        vals = fitness(spec, idx, 2.0)
        for i in idx:
            assert vals[i] == pytest.approx(float(fitness(spec, int(i), 2.0)))

    def test_minimiser_at_zero_weight(self):
        spec = FitnessSpec(degree=PowerLawDegree(1.5), weights=WeightFunctionPair.mixed(0.5, 1.0))
        for i in (0, 3, 17):
            base = fitness(spec, i, 0.0)
            for w in (0.1, 1.0, 42.0):
                assert fitness(spec, i, w) >= base


class TestMuExact:
    def test_basel_value(self):
        assert mu_exact(spec_power(), 0, 0.0, tol=1e-9) == pytest.approx(PI2_6, abs=1e-8)

    def test_shift_by_one(self):
        assert mu_exact(spec_power(), 1, 0.0, tol=1e-9) == pytest.approx(PI2_6 - 1.0, abs=1e-8)

    def test_mixed_weight_scales_terms(self):
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.mixed())
        assert mu_exact(spec, 0, 1.0, tol=1e-10) == pytest.approx(PI2_6 / 2.0, abs=1e-9)

    def test_tail_monotone_and_vanishing(self):
        spec = spec_power(1.5)
        vals = [mu_exact(spec, n, 0.0, tol=1e-10) for n in (0, 1, 2, 5, 20, 200, 2000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.2

    def test_weight_never_increases_tail(self):
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.additive())
        for n in (0, 3, 10):
            base = mu_exact(spec, n, 0.0, tol=1e-10)
            for w in (0.5, 2.0, 100.0):
                assert mu_exact(spec, n, w, tol=1e-10) <= base + 2e-10

    def test_tolerances_agree(self):
        spec = spec_power(1.2)
        t1, t2 = 1e-4, 1e-7
        a = mu_exact(spec, 0, 0.0, tol=t1)
        b = mu_exact(spec, 0, 0.0, tol=t2)
        assert abs(a - b) <= t1 + t2

    def test_slow_exponent_feasible(self):
        # near-critical exponent: certified bracket still reachable
        spec = spec_power(1.01)
        val = mu_exact(spec, 0, 0.0, tol=1e-3)
        assert val == pytest.approx(100.5773, rel=1e-3)  # 1/(p-1) + small correction

    def test_table_degree(self):
        deg = TableDegree(values=(1.0, 4.0, 9.0), tail_p=2.0, tail_coeff=1.0)
        spec = FitnessSpec(degree=deg)
        # matches the pure power law when the table equals (i+1)^2
        assert mu_exact(spec, 0, 0.0, tol=1e-9) == pytest.approx(PI2_6, abs=1e-8)

    def test_table_requires_summable_tail(self):
        with pytest.raises(NonSummableError):
            TableDegree(values=(1.0, 2.0), tail_p=1.0)

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(ToleranceError):
            mu_exact(spec_power(1.01), 0, 0.0, tol=1e-12, max_terms=1 << 16)


class TestMuAsymptotic:
    def test_power_law_formula(self):
        spec = spec_power()
        val = mu_asymptotic(spec, 1000, 0.0)
        assert val == pytest.approx(1000 / 1001.0 ** 2, rel=1e-12)
        assert val == pytest.approx(1e-3, rel=5e-3)

    def test_polylog_formula(self):
        spec = FitnessSpec(degree=PolyLogDegree(3.0))
        n = round(math.e ** 10)
        assert mu_asymptotic(spec, n, 0.0) == pytest.approx(0.005, rel=1e-5)

    def test_ratio_approaches_one(self):
        spec = spec_power()
        ratios = [mu_exact(spec, n, 0.0, tol=1e-12) / mu_asymptotic(spec, n, 0.0)
                  for n in (10 ** 3, 10 ** 4, 10 ** 5)]
        deviations = [abs(r - 1.0) for r in ratios]
        assert deviations[0] > deviations[1] > deviations[2]
        assert deviations[-1] < 0.01

    def test_log_stretched_tracks_exact(self):
        # the o(1) correction decays only logarithmically: check the trend
        spec = FitnessSpec(degree=LogStretchedDegree(0.5))
        ratios = [mu_exact(spec, n, 0.0, tol=1e-7) / mu_asymptotic(spec, n, 0.0)
                  for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)]
        assert all(a > b for a, b in zip(ratios, ratios[1:]))
        assert all(1.0 < r < 1.5 for r in ratios)

    def test_table_unsupported(self):
        spec = FitnessSpec(degree=TableDegree(values=(1.0,), tail_p=2.0))
        with pytest.raises(UnsupportedVariantError):
            mu_asymptotic(spec, 10, 0.0)


def _tail_check(dist, probes, n=10 ** 6, seed=99):
    rng = replica_generator(seed, 0)
    draws = sample_weight(dist, rng, n)
    for x in probes:
        p = float(dist.tail(x))
        emp = float(np.mean(draws >= x))
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(emp - p) <= 3 * sigma + 1e-9, (x, emp, p)


class TestWeightDistributions:
    def test_constant(self):
        rng = replica_generator(1, 0)
        assert sample_weight(Constant(2.0), rng) == 2.0
        assert np.all(sample_weight(Constant(2.0), rng, 10) == 2.0)

    def test_pareto_tail(self):
        _tail_check(ParetoLike(alpha=2.0, scale=1.0), [2.0, 5.0, 10.0])

    def test_log_stretched_exp_tail(self):
        _tail_check(LogStretchedExp(nu=3.0, c=1.0), [1.5, 2.5, 4.0])

    def test_stretched_exp_tail(self):
        _tail_check(StretchedExp(kappa=0.7, c=1.0), [0.5, 1.5, 3.0])

    def test_power_law_plus_tails(self):
        _tail_check(PowerLawPlus(tau=0.5, c=1.0), [5.0, 20.0, 100.0])
        _tail_check(PowerLawPlus(tau=0.5, c=1.0, heavy=True), [10.0, 50.0, 400.0])

    def test_tail_normalization_and_monotonicity(self):
        xs = np.linspace(0.0, 50.0, 400)
        for dist in (ParetoLike(1.5), LogStretchedExp(2.0), StretchedExp(0.5),
                     PowerLawPlus(0.3), PowerLawPlus(0.3, heavy=True), Constant(3.0)):
            t = np.asarray(dist.tail(xs), dtype=float)
            assert t[0] == pytest.approx(1.0)
            assert np.all(np.diff(t) <= 1e-12)
            assert dist.tail(1e12) < 1e-3

    def test_two_type_coin(self):
        dist = TwoType(r_dist=ParetoLike(1.5), coin=0.5)
        rng = replica_generator(7, 0)
        draws = sample_weight(dist, rng, 10 ** 6)
        assert draws.shape == (10 ** 6, 2)
        frac = float(np.mean(draws[:, 1]))
        assert abs(frac - 0.5) <= 3 * 0.5 / 1000.0
        assert np.all(draws[:, 0] >= 1.0)
