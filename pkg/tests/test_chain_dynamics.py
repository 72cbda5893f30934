import math

import numpy as np
import pytest
from scipy import stats

from bridge_stein.chain_dynamics import (ChainParams, Hypercube, Lattice, MajorantViolation,
                                         PoissonDiag, holding_rate,
                                         in_scheme_support, run_ensemble,
                                         scheme_free_area, simulate,
                                         simulate_hypercube_chain, simulate_lattice_chain,
                                         simulate_nonhomogeneous_chain,
                                         simulate_poisson_diag_chain, simulate_scheme_chain)
from bridge_stein.config_space import HypercubeConfig, LatticeConfig, apply_move
from bridge_stein.rates import RateFamily, density_ratio_H


def _consistent(traj):
    times = traj.event_times
    assert all(a < b for a, b in zip(times, times[1:]))
    assert all(t <= traj.t_end for t in times)
    prev = traj.initial_state
    for op, (r, s), state in zip(traj.ops, traj.moves, traj.states):
        if isinstance(prev, int):
            assert state == prev + op
        else:
            assert apply_move(prev, r, s) == state
            assert len(state) - len(prev) == (op if isinstance(state, LatticeConfig) else 2 * op)
        prev = state


class TestRates:
    def test_holding_rates(self):
        assert holding_rate(Hypercube(1.0), HypercubeConfig((0.1, 0.2, 0.3, 0.4))) == 6.5
        assert holding_rate(Lattice(2.0, 3.0), LatticeConfig()) == 6.0
        assert holding_rate(PoissonDiag(2.0), 3) == 11.0

    def test_scheme_free_area(self):
        assert scheme_free_area(LatticeConfig(), 10) == pytest.approx(1 - 1 / 10)


class TestTrajectories:
    def test_reproducible(self):
        a = simulate_lattice_chain(LatticeConfig(), 1.0, 1.0, 10.0, 3)
        b = simulate_lattice_chain(LatticeConfig(), 1.0, 1.0, 10.0, 3)
        assert a == b

    @pytest.mark.parametrize("seed", range(5))
    def test_consistency(self, seed):
        _consistent(simulate_hypercube_chain(HypercubeConfig(), 1.5, 10.0, seed))
        _consistent(simulate_lattice_chain(LatticeConfig(), 1.2, 0.8, 10.0, seed))
        _consistent(simulate_poisson_diag_chain(0, 1.0, 10.0, seed))
        _consistent(simulate_scheme_chain(LatticeConfig(), 10, 10.0, seed))
        _consistent(simulate_nonhomogeneous_chain(
            LatticeConfig(), RateFamily.constant_speed_alternating(2.0), 5.0, seed))

    def test_tiny_alpha_no_births(self):
        traj = simulate_hypercube_chain(HypercubeConfig(), 1e-12, 10.0, 0)
        assert traj.n_events == 0 and traj.final_state == HypercubeConfig()

    def test_single_pair_death(self):
        for seed in range(20):
            traj = simulate_lattice_chain(LatticeConfig((0.2,), (0.7,)), 1e-9, 1e-9, 50.0, seed)
            assert traj.states[0] == LatticeConfig()

    def test_integer_chain_first_move_is_birth(self):
        for seed in range(20):
            traj = simulate_poisson_diag_chain(0, 0.5, 50.0, seed)
            assert traj.ops[0] == 1

    def test_state_at(self):
        traj = simulate_lattice_chain(LatticeConfig(), 1.0, 1.0, 10.0, 1)
        assert traj.state_at(0.0) == LatticeConfig()
        assert traj.state_at(traj.event_times[0]) == traj.states[0]
        assert traj.state_at(10.0) == traj.final_state

    def test_dispatch(self):
        p = ChainParams(Lattice(1.0, 1.0), 5.0, 9)
        assert simulate(p, LatticeConfig()) == simulate_lattice_chain(
            LatticeConfig(), 1.0, 1.0, 5.0, 9)

    def test_jsonl(self):
        traj = simulate_lattice_chain(LatticeConfig(), 1.0, 1.0, 5.0, 2)
        assert len(traj.to_jsonl().splitlines()) == traj.n_events


class TestHoldingTimes:
    @pytest.mark.parametrize("variant,state", [
        (Hypercube(1.0), HypercubeConfig((0.1, 0.2, 0.3, 0.4))),
        (Lattice(2.0, 3.0), LatticeConfig((0.1,), (0.5,))),
        (PoissonDiag(2.0), 3),
    ])
    def test_ks_against_exponential(self, variant, state):
        rate = holding_rate(variant, state)
        first = []
        for k in range(10000):
            traj = simulate(ChainParams(variant, 5.0, k), state)
            first.append(traj.event_times[0])
        p = stats.kstest(first, "expon", args=(0, 1 / rate)).pvalue
        assert p > 0.001


class TestScheme:
    def test_support_preserved(self):
        for seed in range(10):
            traj = simulate_scheme_chain(LatticeConfig(), 10, 20.0, seed)
            assert all(in_scheme_support(s, 10) for s in traj.states)

    def test_rejects_bad_start(self):
        with pytest.raises(ValueError):
            simulate_scheme_chain(LatticeConfig((0.11,), (0.12,)), 10, 1.0, 0)


class TestNonhomogeneous:
    def test_unit_rates_accept_everything(self):
        traj = simulate_nonhomogeneous_chain(LatticeConfig(), RateFamily.unit(), 10.0, 0)
        _consistent(traj)
        assert traj.n_events > 0

    def test_majorant_violation(self):
        rates = RateFamily.constant_speed_alternating(4.0)
        with pytest.raises(MajorantViolation):
            simulate_nonhomogeneous_chain(LatticeConfig(), rates, 50.0, 0, rate_sup=0.3)

    def test_accepted_births_within_envelope(self):
        rates = RateFamily.constant_speed_alternating(2.0)
        mu, nu = rates.params["mu"], rates.params["nu"]
        traj = simulate_nonhomogeneous_chain(LatticeConfig(), rates, 20.0, 1)
        prev = traj.initial_state
        for op, (r, s), state in zip(traj.ops, traj.moves, traj.states):
            if op > 0:
                h = density_ratio_H(prev, r, s, rates)
                m = len(prev.up)
                assert nu * (nu / mu) ** m * (1 - 1e-12) <= h <= mu * (mu / nu) ** m * (1 + 1e-12)
            prev = state


class TestEnsemble:
    def test_matches_single_runs(self):
        p = ChainParams(Lattice(1.0, 1.0), 5.0, 4)
        s = run_ensemble(p, LatticeConfig(), 20, keep_states=True)
        from bridge_stein.rng import replica_generator
        for k in (0, 7, 19):
            single = simulate(ChainParams(p.variant, 5.0, replica_generator(4, k)), LatticeConfig())
            assert single.final_state == s.final_states[k]
            assert single.n_events == s.n_events[k]

    def test_workers_do_not_change_result(self):
        p = ChainParams(Hypercube(1.0), 5.0, 2)
        a = run_ensemble(p, HypercubeConfig(), 40, workers=1)
        b = run_ensemble(p, HypercubeConfig(), 40, workers=2)
        assert np.array_equal(a.sizes, b.sizes) and np.array_equal(a.n_events, b.n_events)

    def test_csv_header(self):
        s = run_ensemble(ChainParams(PoissonDiag(1.0), 2.0, 0), 0, 3)
        s.header = {"seed": 0}
        lines = s.to_csv().splitlines()
        assert lines[0].startswith("# provenance:") and len(lines) == 5

    def test_lattice_stationary_mean(self):
        s = run_ensemble(ChainParams(Lattice(1.0, 1.0), 20.0, 0), LatticeConfig(), 4000)
        from bridge_stein.exact_oracles import poisson_diag_law
        mean = poisson_diag_law(1.0).mean()
        se = s.sizes.std(ddof=1) / math.sqrt(len(s.sizes))
        assert abs(s.sizes.mean() - mean) < 4 * se
