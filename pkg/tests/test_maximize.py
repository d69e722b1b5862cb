import itertools
import math

import pytest

from gtinfluence.errors import CapExceeded
from gtinfluence.generators import random_network, random_weight, star_network
from gtinfluence.influence import exact_sigma
from gtinfluence.maximize import (
    ExactEvaluator,
    MCEvaluator,
    degree_ranking,
    distance_ranking,
    exhaustive_opt,
    greedy,
    heuristic_baseline,
    influence_curve,
)
from gtinfluence.network import SocialNetwork, mask_of, zero_activation
from gtinfluence.streams import generator


class TestGreedy:
    def test_chain_k1(self, chain):
        res = greedy(chain, 1)
        assert res.chosen == (0,)
        assert res.value == pytest.approx(1.75)

    def test_chain_singletons(self, chain):
        ev = ExactEvaluator(chain)
        assert [ev(1 << v) for v in range(3)] == pytest.approx([1.75, 1.5, 1.0])

    def test_k0(self, chain):
        res = greedy(chain, 0)
        assert res.chosen == () and res.value == 0.0
        assert res.to_json(chain)["chosen"] == []

    def test_k_equals_n(self, rng):
        net = random_network(5, rng).with_weight(random_weight(5, rng))
        res = greedy(net, 5)
        assert res.seeds == net.full
        assert res.value == pytest.approx(net.weight(net.full))

    def test_tie_goes_to_smallest_id(self):
        net = SocialNetwork(("a", "b", "c"), (zero_activation(),) * 3)
        assert greedy(net, 2).chosen == (0, 1)

    def test_gains_sum(self, rng):
        net = random_network(6, rng)
        res = greedy(net, 3)
        assert sum(res.gains) == pytest.approx(res.value - exact_sigma(net, 0).sigma)

    def test_bad_k(self, chain):
        with pytest.raises(ValueError):
            greedy(chain, 4)


class TestExhaustive:
    def test_chain(self, chain):
        assert exhaustive_opt(chain, 1).chosen == (0,)
        assert exhaustive_opt(chain, 0).chosen == ()
        assert exhaustive_opt(chain, 3).value == 3.0

    def test_brute_force(self, rng):
        net = random_network(5, rng)
        ev = ExactEvaluator(net)
        for k in range(6):
            best = max(ev(mask_of(c)) for c in itertools.combinations(range(5), k))
            assert exhaustive_opt(net, k, ev).value == best

    def test_budget(self, rng):
        with pytest.raises(CapExceeded):
            exhaustive_opt(random_network(10, rng), 5, budget=100)

    def test_greedy_ratio(self, rng):
        for _ in range(5):
            net = random_network(7, rng).with_weight(random_weight(7, rng))
            ev = ExactEvaluator(net)
            base = ev(0)
            for k in (1, 2, 3):
                g = greedy(net, k, ev).value - base
                o = exhaustive_opt(net, k, ev).value - base
                assert g >= (1 - 1 / math.e) * o - 1e-9


class TestHeuristics:
    def test_chain_degree_tie(self, chain):
        assert heuristic_baseline(chain, "degree", 1).chosen == (0,)

    def test_star(self):
        net = star_network(4)
        assert heuristic_baseline(net, "degree", 1).chosen == (0,)
        assert distance_ranking(net)[0] == 0

    def test_distance_chain(self, chain):
        # a reaches b at 1 and c at 2; b reaches c at 1, a never (counts as n=3)
        assert distance_ranking(chain) == [0, 1, 2]

    def test_degree_ranking_order(self, chain):
        assert degree_ranking(chain) == [0, 1, 2]

    def test_random_reproducible(self, rng):
        net = random_network(8, rng)
        a = heuristic_baseline(net, "random", 3, rng=generator(4, 2))
        b = heuristic_baseline(net, "random", 3, rng=generator(4, 2))
        assert a == b

    def test_random_needs_rng(self, chain):
        with pytest.raises(ValueError):
            heuristic_baseline(chain, "random", 1)


class TestMCEvaluator:
    def test_default_budget(self, chain):
        ev = MCEvaluator(chain)
        assert ev.replicates == 738
        assert ev.half_width == pytest.approx(3 * 0.05, rel=1e-2)

    def test_common_random_numbers(self, chain):
        ev = MCEvaluator(chain, replicates=5000, seed=1)
        # same draws for every seed set, so adding a seed never lowers the estimate
        vals = [ev(S) for S in range(8)]
        for S in range(8):
            for v in range(3):
                assert vals[S | 1 << v] >= vals[S]

    def test_close_to_exact(self, chain):
        ev = MCEvaluator(chain, replicates=200_000, seed=2)
        assert abs(ev(0b001) - 1.75) < 0.02

    def test_workers_invariant(self, rng):
        net = random_network(6, rng)
        a = greedy(net, 3, MCEvaluator(net, seed=3, workers=1))
        b = greedy(net, 3, MCEvaluator(net, seed=3, workers=3))
        assert a == b


class TestCurve:
    def test_rows(self, chain):
        rows = influence_curve(chain, 3, ["greedy-exact", "degree", "exhaustive"], ExactEvaluator(chain))
        assert len(rows) == 12
        assert {r["method"] for r in rows} == {"greedy-exact", "degree", "exhaustive"}
        greedy_vals = [r["value"] for r in rows if r["method"] == "greedy-exact"]
        assert greedy_vals == pytest.approx([0.0, 1.75, 2.5, 3.0])

    def test_curve_monotone(self, rng):
        net = random_network(6, rng)
        rows = influence_curve(net, 6, ["random"], ExactEvaluator(net), rng=generator(0, 2))
        vals = [r["value"] for r in rows]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_plot(self, chain, tmp_path):
        from gtinfluence.plotting import plot_influence_curve

        rows = influence_curve(chain, 3, ["greedy-exact", "random"], ExactEvaluator(chain), rng=generator(0, 2))
        path = plot_influence_curve(rows, tmp_path / "curve.png")
        assert path.stat().st_size > 1000
