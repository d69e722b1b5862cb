import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gtinfluence.diffusion import (
    StagePlan,
    ThresholdAssignment,
    compose_cdfs,
    inverse_cdf_thresholds,
    reflect_thresholds,
    run,
    run_antisense,
    run_batch,
    run_lazy,
    sample_thresholds,
    stage_slot,
    states_to_masks,
)
from gtinfluence.errors import NetworkError
from gtinfluence.generators import random_network
from gtinfluence.influence import ExactOracle, tv_distance
from gtinfluence.network import LinearActivation, SocialNetwork, TableActivation, ThresholdCdf, zero_activation
from gtinfluence.streams import generator


def theta(*vals):
    return ThresholdAssignment(tuple(vals))


class TestThresholds:
    def test_empty(self, rng):
        assert sample_thresholds(0, rng).theta == ()

    def test_deterministic(self):
        a = sample_thresholds(3, generator(7, 0))
        b = sample_thresholds(3, generator(7, 0))
        assert a == b

    def test_range_and_mean(self):
        x = np.array(sample_thresholds(10**6, generator(1, 0)).theta)
        assert x.min() > 0.0 and x.max() <= 1.0
        assert abs(x.mean() - 0.5) < 0.002

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            theta(0.0, 0.5)
        with pytest.raises(ValueError):
            theta(1.2)


class TestStagePlan:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlapping"):
            StagePlan((0b011, 0b010))

    def test_tail_must_be_disjoint(self):
        with pytest.raises(ValueError):
            StagePlan((0b001,), antisense_tail=0b001)


class TestRun:
    def test_chain(self, chain):
        traj = run(chain, 0b001, theta(1.0, 0.4, 0.9))
        assert traj.terminal == 0b011
        assert traj.sets == (0b001, 0b011)

    def test_empty_seed(self, rng):
        for _ in range(10):
            net = random_network(5, rng)
            assert run(net, 0, sample_thresholds(5, rng)).terminal == 0

    def test_full_seed(self, chain, rng):
        traj = run(chain, chain.full, sample_thresholds(3, rng))
        assert traj.sets == (chain.full,)

    def test_literal_padding(self, chain):
        traj = run(chain, StagePlan((0b001, 0b100)), theta(1.0, 0.4, 0.9), literal=True)
        L = stage_slot(3)
        assert len(traj.sets) == 2 * L
        assert traj.stage_boundaries == (0, L)
        assert traj.sets[L - 1] == 0b011 and traj.terminal == 0b111

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_batch_matches_scalar(self, seed, n):
        rng = np.random.default_rng(seed)
        net = random_network(n, rng)
        th = 1.0 - rng.random((30, n))
        stages = tuple(int(x) for x in rng.permutation([1 << v for v in range(n)])[: rng.integers(0, n + 1)])
        plan = StagePlan(stages or (0,))
        got = states_to_masks(run_batch(net, plan, th))
        want = [run(net, plan, ThresholdAssignment(tuple(row))).terminal for row in th]
        np.testing.assert_array_equal(got, want)


class TestLazy:
    def test_chain_first_step(self, chain):
        # b activates at step 1 with probability 0.5
        hits = 0
        R = 40000
        for r in range(R):
            traj = run_lazy(chain, 0b001, generator(3, 1, r))
            hits += len(traj.sets) > 1 and traj.sets[1] >> 1 & 1
        assert abs(hits / R - 0.5) < 5 * np.sqrt(0.25 / R)

    def test_no_change_no_activation(self):
        net = SocialNetwork(("u", "v"), (zero_activation(), LinearActivation((0,), (0.0,))))
        for r in range(100):
            assert run_lazy(net, 0b01, generator(0, 1, r)).terminal == 0b01

    def test_full_value_always_activates(self):
        net = SocialNetwork(("u", "v"), (zero_activation(), LinearActivation((0,), (1.0,))))
        for r in range(100):
            assert run_lazy(net, 0b01, generator(0, 1, r)).terminal == 0b11

    def test_distribution_matches_oracle(self, rng):
        net = random_network(4, rng)
        plan = StagePlan((0b0001, 0b0100))
        R = 20000
        counts: dict[int, float] = {}
        for r in range(R):
            t = run_lazy(net, plan, generator(9, 1, r)).terminal
            counts[t] = counts.get(t, 0) + 1 / R
        assert tv_distance(counts, ExactOracle(net).distribution(plan)) < 0.03


class TestAntisense:
    def test_empty_tail_adds_nothing_below_one(self, rng):
        for _ in range(20):
            net = random_network(5, rng)
            th = ThresholdAssignment(tuple(min(x, 0.999) for x in sample_thresholds(5, rng).theta))
            X = run(net, 0b00011, th).terminal
            assert run_antisense(net, StagePlan((0b00011,), antisense_tail=0), th).terminal == X

    def test_chain_hand_trace(self, chain):
        traj = run_antisense(chain, StagePlan((0b001,), antisense_tail=0b100), theta(1.0, 0.6, 0.5))
        assert traj.terminal == 0b101

    def test_full_increment(self):
        net = SocialNetwork(("u", "v"), (zero_activation(), TableActivation((0,), [0.0, 1.0])))
        for t in (0.01, 0.5, 1.0):
            assert run_antisense(net, StagePlan((0,), antisense_tail=0b01), theta(0.5, t)).terminal == 0b11

    def test_reflected_thresholds_reproduce_phase(self, rng):
        for _ in range(30):
            net = random_network(5, rng)
            th = sample_thresholds(5, rng)
            X = run(net, 0b00001, th).terminal
            tail = 0b00100 & ~X
            anti = run_antisense(net, StagePlan((0b00001,), antisense_tail=tail), th).terminal
            refl = reflect_thresholds(net, th, X)
            # the ordinary rule with theta' reproduces the antisense phase
            cur = X | tail
            while True:
                new = 0
                for v in range(net.n):
                    if not cur >> v & 1 and net.f(v, cur) >= refl.reflected[v]:
                        new |= 1 << v
                if not new:
                    break
                cur |= new
            assert cur == anti

    def test_batch_matches_scalar(self, rng):
        for _ in range(10):
            net = random_network(5, rng)
            th = 1.0 - rng.random((40, 5))
            plan = StagePlan((0b00001,), antisense_tail=0b00110)
            got = states_to_masks(run_batch(net, plan, th))
            want = [run_antisense(net, plan, ThresholdAssignment(tuple(r))).terminal for r in th]
            np.testing.assert_array_equal(got, want)


class TestCompose:
    def test_identity(self, chain):
        net = compose_cdfs(chain, [ThresholdCdf.identity()] * 3)
        for v in range(3):
            for S in range(8):
                assert net.f(v, S) == chain.f(v, S)

    def test_square(self, chain):
        net = compose_cdfs(chain, {1: [(0, 0), (0.5, 0.25), (1, 1)]})
        assert net.f(1, 0b001) == pytest.approx(0.25)

    def test_step_like(self, chain):
        step = ThresholdCdf([(0, 0), (0.99, 0.001), (1, 1)])
        net = compose_cdfs(chain, [step] * 3)
        for v in range(3):
            for S in range(7):
                assert net.f(v, S) < 0.01

    def test_length_mismatch(self, chain):
        with pytest.raises(NetworkError):
            compose_cdfs(chain, [ThresholdCdf.identity()])

    def test_inverse_cdf_draws_match_composed_oracle(self, chain):
        # Non-uniform thresholds on the original net equal uniform ones on the composed net.
        cdfs = [ThresholdCdf([(0, 0), (0.5, 0.25), (1, 1)])] * 3
        composed = compose_cdfs(chain, cdfs)
        rng = generator(4, 0)
        R = 40000
        hits = np.zeros(8)
        for _ in range(R):
            th = inverse_cdf_thresholds(cdfs, 1.0 - rng.random(3))
            hits[run(chain, 0b001, th).terminal] += 1 / R
        exact = ExactOracle(composed).distribution(0b001)
        assert tv_distance(dict(enumerate(hits)), exact) < 0.02
