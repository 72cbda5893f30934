import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from bridge_stein.chain_dynamics import Hypercube, Lattice, in_scheme_support
from bridge_stein.config_space import LatticeConfig
from bridge_stein.exact_oracles import (IntegerLaw, bessel_I0, bessel_I0_quadrature,
                                        exact_w1_integer, hypercube_pair_law,
                                        poisson_diag_law, poisson_diag_pmf,
                                        sample_bridge_exact, sample_nonhomogeneous_bridge_mh,
                                        sample_scheme_bridge_exact,
                                        scheme_acceptance_probability,
                                        solve_birth_death_stein)
from bridge_stein.rates import RateFamily, log_density_M


class TestBessel:
    def test_zero(self):
        assert bessel_I0(0.0) == 1.0

    def test_two(self):
        assert bessel_I0(2.0) == pytest.approx(2.2795853023360673, rel=1e-15)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 4.0, 8.0, 20.0])
    def test_against_oracles(self, x):
        assert abs(bessel_I0(x) - bessel_I0_quadrature(x)) <= 1e-10 * bessel_I0(x)
        assert abs(bessel_I0(x) - float(mpmath.besseli(0, x))) <= 1e-13 * bessel_I0(x)

    def test_negative(self):
        with pytest.raises(ValueError):
            bessel_I0(-1.0)


class TestPmf:
    def test_value(self):
        assert poisson_diag_pmf(1.0, 0) == pytest.approx(1 / 2.2795853023360673, rel=1e-14)

    def test_normalisation(self):
        assert abs(sum(poisson_diag_pmf(1.0, n) for n in range(41)) - 1) < 1e-12

    @pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
    def test_ratio(self, lam):
        for n in range(10):
            assert poisson_diag_pmf(lam, n + 1) / poisson_diag_pmf(lam, n) == pytest.approx(
                lam / (n + 1) ** 2, rel=1e-12)

    def test_law_tail(self):
        law = poisson_diag_law(4.0)
        assert law.tail_bound <= 1e-12
        assert abs(law.pmf.sum() - 1) <= 1e-12

    def test_integer_law_validation(self):
        with pytest.raises(ValueError):
            IntegerLaw(np.array([0.5, 0.4]))


class TestExactSamplers:
    def test_lattice_counts_chi_square(self):
        draws = sample_bridge_exact(Lattice(1.0, 1.0), 0, 100000)
        counts = np.bincount([len(c.up) for c in draws])
        pmf = poisson_diag_law(1.0).pmf
        k = 4  # pool the tail
        obs = np.append(counts[:k], counts[k:].sum())
        exp = np.append(pmf[:k], pmf[k:].sum()) * len(draws)
        assert stats.chisquare(obs, exp).pvalue > 0.001

    def test_hypercube_counts(self):
        draws = sample_bridge_exact(Hypercube(1.0), 1, 20000)
        counts = np.bincount([len(c) // 2 for c in draws])
        pmf = hypercube_pair_law(1.0).pmf
        obs = np.append(counts[:2], counts[2:].sum())
        exp = np.append(pmf[:2], pmf[2:].sum()) * len(draws)
        assert stats.chisquare(obs, exp).pvalue > 0.001

    def test_hypercube_tiny_alpha_empty(self):
        assert all(len(c) == 0 for c in sample_bridge_exact(Hypercube(1e-6), 0, 1000))

    def test_reproducible(self):
        assert sample_bridge_exact(Lattice(1, 1), 5, 10) == sample_bridge_exact(Lattice(1, 1), 5, 10)

    def test_scheme_support_and_mean(self):
        N = 10
        draws = sample_scheme_bridge_exact(N, 0, 5000)
        assert all(in_scheme_support(c, N) for c in draws)
        sizes = np.array([len(c.up) for c in draws])
        assert sizes.mean() <= 1 / (1 - 2 / N) + 3 * sizes.std(ddof=1) / math.sqrt(len(sizes))

    def test_scheme_acceptance_limit(self):
        limit = math.exp(-2) * bessel_I0(2.0)
        assert scheme_acceptance_probability(100000) == pytest.approx(limit, abs=1e-4)
        assert 0 < scheme_acceptance_probability(3) < 1

    def test_scheme_acceptance_exact_small(self):
        N = 4
        p = sum(math.comb(N, m) * math.comb(N - m, m) * N ** (-2 * m) * (1 - 2 / N) ** (N - 2 * m)
                for m in range(N // 2 + 1))
        assert scheme_acceptance_probability(N) == pytest.approx(p, rel=1e-12)


class TestMH:
    def test_unit_rates_accept_all(self):
        run = sample_nonhomogeneous_bridge_mh(RateFamily.unit(), 1000, 0, burn_in=10, thin=1)
        assert run.acceptance_rate == 1.0

    def test_constant_speed_accepts(self):
        run = sample_nonhomogeneous_bridge_mh(RateFamily.constant_speed_alternating(4.0),
                                              2000, 1, burn_in=100)
        assert 0 < run.acceptance_rate < 1

    def test_log_ratios_match_density(self):
        rates = RateFamily.reversible_step(0.5)
        run = sample_nonhomogeneous_bridge_mh(rates, 1000, 2, burn_in=0, thin=1)
        # each retained state is either the previous state or an accepted
        # proposal; every accepted move satisfies the recorded ratio
        prev = LatticeConfig()
        for state, ratio in zip(run.samples, run.log_ratios):
            if state is not prev:
                expected = log_density_M(state, rates) - log_density_M(prev, rates)
                assert abs(expected - ratio) < 1e-12
            prev = state

    def test_too_few_iterations(self):
        with pytest.raises(ValueError):
            sample_nonhomogeneous_bridge_mh(RateFamily.unit(), 10, 0)


class TestExactW1:
    def test_identical(self):
        law = poisson_diag_law(1.0)
        assert exact_w1_integer(law, law)[0] == 0.0

    def test_shift(self):
        law = poisson_diag_law(1.0)
        assert exact_w1_integer(law, law.shifted(1))[0] == pytest.approx(1.0, abs=1e-12)

    def test_lemma_pair(self):
        w, tail = exact_w1_integer(poisson_diag_law(1.0), poisson_diag_law(1.2))
        assert w <= 1.8 and tail <= 2e-12


class TestStein:
    def test_zero_function(self):
        assert np.all(solve_birth_death_stein(1.0, lambda n: 0.0, 30) == 0)

    @pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
    def test_residual(self, lam):
        g = lambda n: min(n, 20)
        df = solve_birth_death_stein(lam, g, 30)
        pi = poisson_diag_law(lam).pmf
        eg = sum(p * g(n) for n, p in enumerate(pi))
        for n in range(1, 25):
            assert abs(lam * df[n] - n * n * df[n - 1] - (g(n) - eg)) < 1e-10
        assert abs(lam * df[0] - (g(0) - eg)) < 1e-10

    def test_n_max_too_small(self):
        with pytest.raises(ValueError):
            solve_birth_death_stein(4.0, lambda n: n, 2)
