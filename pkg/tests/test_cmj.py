"""Inter-birth laws, discrete/continuous equivalence, explosion estimates."""

import math

import numpy as np
import pytest

from exptrees import (
    Beta,
    Constant,
    Exponential,
    FitnessSpec,
    Gamma,
    ParetoLike,
    PowerLawDegree,
    Rayleigh,
    WeightFunctionPair,
    explosion_estimate,
    simulate_births,
)
from exptrees.cmj import law_from_string
from exptrees.grower import enumerate_shape_distribution
from exptrees.rng import replica_generator

SPEC2 = FitnessSpec(degree=PowerLawDegree(2.0))
CONST = Constant(0.0)


class TestInterBirthLaws:
    @pytest.mark.parametrize("law", [Exponential(), Gamma(k=2.5), Beta(a=2.0, b=0.5),
                                     Rayleigh()])
    def test_mean_is_reciprocal_rate(self, law):
        # i-th inter-birth time of a weight-w node has mean 1/f(i-1, w)
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.mixed())
        rng = replica_generator(404, 0)
        n = 20000
        for i in (1, 2, 6):
            for w in (0.0, 1.0):
                rate = float(spec.fitness(i - 1, w))
                draws = np.array([law.draw(rate, rng) for _ in range(n)])
                se = draws.std(ddof=1) / math.sqrt(n)
                assert abs(draws.mean() - 1.0 / rate) <= 3 * se

    def test_beta_parameter_ranges(self):
        with pytest.raises(Exception):
            Beta(a=0.5, b=0.5)
        with pytest.raises(Exception):
            Beta(a=2.0, b=1.5)

    def test_law_parsing(self):
        assert isinstance(law_from_string("exponential"), Exponential)
        assert law_from_string("gamma:2").k == 2.0
        beta = law_from_string("beta:3,0.5")
        assert (beta.a, beta.b) == (3.0, 0.5)
        assert isinstance(law_from_string("rayleigh"), Rayleigh)


class TestSimulateBirths:
    def test_single_birth(self):
        rng = replica_generator(3, 0)
        state, times = simulate_births(SPEC2, CONST, Exponential(), rng, births=1)
        assert state.n == 2
        assert state.parent[1] == 0
        assert len(times) == 1 and times[0] > 0

    def test_times_strictly_increasing(self):
        for law in (Exponential(), Gamma(k=0.5), Beta(2.0, 0.5), Rayleigh()):
            rng = replica_generator(5, 0)
            _, times = simulate_births(SPEC2, CONST, law, rng, births=500)
            assert np.all(np.diff(times) > 0)

    def test_time_stop(self):
        rng = replica_generator(6, 0)
        state, times = simulate_births(SPEC2, CONST, Exponential(), rng, time=0.5)
        assert np.all(times <= 0.5)
        assert state.n == len(times) + 1

    def _shape_tv(self, law, replicas, seed):
        exact = enumerate_shape_distribution(lambda d: float((d + 1) ** 2), 4)
        counts = {}
        for i in range(replicas):
            rng = replica_generator(seed, i)
            state, _ = simulate_births(SPEC2, CONST, law, rng, births=3)
            key = state.parent_tuple()
            counts[key] = counts.get(key, 0) + 1
        return 0.5 * sum(abs(counts.get(k, 0) / replicas - p) for k, p in exact.items())

    def test_exponential_embeds_discrete_law(self):
        # memoryless property: shape law equals the attachment process
        assert self._shape_tv(Exponential(), 20000, 777) < 0.02

    def test_gamma_one_reduces_to_exponential(self):
        assert self._shape_tv(Gamma(k=1.0), 20000, 778) < 0.02

    def test_weights_flow_into_tree(self):
        dist = ParetoLike(alpha=2.0)
        spec = FitnessSpec(degree=PowerLawDegree(2.0), weights=WeightFunctionPair.mixed())
        rng = replica_generator(9, 0)
        state, times = simulate_births(spec, dist, Exponential(), rng, births=200)
        assert np.all(state.weight[:state.n] >= 1.0)
        assert int(np.sum(state.outdeg[:state.n])) == 200


class TestExplosionEstimate:
    def test_first_birth_mean(self):
        # tau_1 is a single Exp(f(0, w)) draw
        rng = replica_generator(12, 0)
        n = 5000
        taus = []
        for i in range(n):
            r = replica_generator(12, i)
            _, times = simulate_births(SPEC2, CONST, Exponential(), r, births=1)
            taus.append(times[0])
        taus = np.array(taus)
        se = taus.std(ddof=1) / math.sqrt(n)
        assert abs(taus.mean() - 1.0) <= 3 * se

    def test_estimate_stable_under_doubling(self):
        means = []
        for k_max in (1000, 2000):
            vals = [explosion_estimate(SPEC2, CONST, Exponential(), k_max,
                                       replica_generator(100 + k_max, i)).estimate
                    for i in range(300)]
            means.append(float(np.mean(vals)))
        assert abs(means[1] - means[0]) / means[0] < 0.05

    def test_slow_exponent_explodes_later(self):
        fast = explosion_estimate(SPEC2, CONST, Exponential(), 1000,
                                  replica_generator(55, 0)).estimate
        slow_spec = FitnessSpec(degree=PowerLawDegree(1.01))
        slow = explosion_estimate(slow_spec, CONST, Exponential(), 1000,
                                  replica_generator(55, 1), mu_tol=1e-3).estimate
        assert slow > fast
