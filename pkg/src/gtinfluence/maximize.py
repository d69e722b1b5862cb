"""Seed-set selection: greedy, exhaustive optimum, centrality baselines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import networkx as nx
import numpy as np

from .errors import CapExceeded
from .influence import DEFAULT_CAP, ExactOracle, estimate_mc, hoeffding_radius, required_replicates
from .network import SocialNetwork, WeightFunction, derive_graph, mask_of

TIE_TOL = 1e-12
EXHAUSTIVE_BUDGET = 200_000


class ExactEvaluator:
    """``sigma_w`` from the exact oracle, cached per seed set."""

    half_width = 0.0

    def __init__(self, net: SocialNetwork, w: WeightFunction | None = None, cap: int = DEFAULT_CAP):
        self.oracle = ExactOracle(net, cap)
        self.w = w or net.weight
        self.calls = 0

    def __call__(self, S: int) -> float:
        self.calls += 1
        return self.oracle.sigma(S, self.w)


class MCEvaluator:
    """Monte Carlo ``sigma_w`` with a fixed replicate budget per seed set.

    ``epsilon`` is the target Hoeffding radius as a fraction of the weight
    range ``w(V) - w(empty)``.  All seed sets are scored on the same
    threshold draws (common random numbers).
    """

    def __init__(self, net: SocialNetwork, w: WeightFunction | None = None, replicates: int | None = None,
                 epsilon: float = 0.05, confidence: float = 0.95, seed: int = 0, workers: int = 1):
        self.net = net
        self.w = w or net.weight
        self.replicates = replicates or required_replicates(1.0, epsilon, confidence)
        self.confidence = confidence
        self.seed = seed
        self.workers = workers
        self.calls = 0
        self._cache: dict[int, float] = {}
        self.half_width = hoeffding_radius(self.w.span, self.replicates, confidence)

    def __call__(self, S: int) -> float:
        self.calls += 1
        if S not in self._cache:
            est = estimate_mc(self.net, S, self.w, self.replicates, self.confidence, self.seed, self.workers)
            self._cache[S] = est.mean
        return self._cache[S]


Evaluator = Callable[[int], float]


@dataclass(frozen=True)
class MaximizationResult:
    chosen: tuple[int, ...]
    value: float
    gains: tuple[float, ...]
    method: str
    evaluations: int
    ci: float = 0.0

    @property
    def seeds(self) -> int:
        return mask_of(self.chosen)

    def to_json(self, net: SocialNetwork) -> dict:
        return {"chosen": [net.labels[v] for v in self.chosen], "value": self.value,
                "gains": list(self.gains), "method": self.method,
                "evaluations": self.evaluations, "ci": self.ci}


def _check_k(net: SocialNetwork, k: int) -> None:
    if not 0 <= k <= net.n:
        raise ValueError(f"k={k} must lie in [0, n={net.n}]")


def greedy(net: SocialNetwork, k: int, evaluator: Evaluator | None = None, method: str = "greedy") -> MaximizationResult:
    """Add, k times, the node with the largest estimated ``sigma_w(S + v)``.

    Ties (within 1e-12) go to the smallest node id.
    """
    _check_k(net, k)
    ev = evaluator or ExactEvaluator(net)
    S, value = 0, ev(0)
    chosen, gains = [], []
    evals = 1
    for _ in range(k):
        best_v, best = None, -math.inf
        for v in range(net.n):
            if S >> v & 1:
                continue
            x = ev(S | 1 << v)
            evals += 1
            if x > best + TIE_TOL:
                best_v, best = v, x
        chosen.append(best_v)
        gains.append(best - value)
        S |= 1 << best_v
        value = best
    return MaximizationResult(tuple(chosen), value, tuple(gains), method, evals,
                              getattr(ev, "half_width", 0.0))


def exhaustive_opt(net: SocialNetwork, k: int, evaluator: Evaluator | None = None,
                   budget: int = EXHAUSTIVE_BUDGET) -> MaximizationResult:
    """Best k-subset by brute force; ties go to the lexicographically first subset."""
    _check_k(net, k)
    if math.comb(net.n, k) > budget:
        raise CapExceeded(f"C({net.n},{k}) subsets exceed the budget of {budget}")
    ev = evaluator or ExactEvaluator(net)
    best_set, best = (), -math.inf
    evals = 0
    for combo in itertools.combinations(range(net.n), k):
        x = ev(mask_of(combo))
        evals += 1
        if x > best + TIE_TOL:
            best_set, best = combo, x
    return MaximizationResult(best_set, best, (), "exhaustive", evals, getattr(ev, "half_width", 0.0))


def degree_ranking(net: SocialNetwork) -> list[int]:
    g = derive_graph(net)
    return sorted(range(net.n), key=lambda v: (-g.out_degree(v), v))


def distance_ranking(net: SocialNetwork) -> list[int]:
    """Nodes by mean shortest-path distance to all others; unreachable counts as ``n``."""
    g = derive_graph(net)
    n = net.n
    score = {}
    for v in range(n):
        if n == 1:
            score[v] = 0.0
            continue
        dist = nx.single_source_shortest_path_length(g, v)
        score[v] = sum(dist.get(u, n) for u in range(n) if u != v) / (n - 1)
    return sorted(range(n), key=lambda v: (score[v], v))


def random_ranking(net: SocialNetwork, rng: np.random.Generator) -> list[int]:
    return [int(v) for v in rng.permutation(net.n)]


def _ranking(net, kind, rng):
    if kind == "degree":
        return degree_ranking(net)
    if kind == "distance":
        return distance_ranking(net)
    if kind == "random":
        if rng is None:
            raise ValueError("random baseline needs an rng")
        return random_ranking(net, rng)
    raise ValueError(f"unknown heuristic {kind!r}")


def _scored_prefix(net, order: Sequence[int], ev, method) -> MaximizationResult:
    values = [ev(mask_of(order[:i])) for i in range(len(order) + 1)]
    gains = tuple(b - a for a, b in zip(values, values[1:]))
    return MaximizationResult(tuple(order), values[-1], gains, method, len(values),
                              getattr(ev, "half_width", 0.0))


def heuristic_baseline(net: SocialNetwork, kind: str, k: int, rng: np.random.Generator | None = None,
                       evaluator: Evaluator | None = None) -> MaximizationResult:
    """Top-k by out-degree, by distance centrality, or a uniform random k-subset."""
    _check_k(net, k)
    order = _ranking(net, kind, rng)[:k]
    return _scored_prefix(net, order, evaluator or ExactEvaluator(net), kind)


def influence_curve(net: SocialNetwork, k_max: int, methods: Sequence[str], evaluator: Evaluator,
                    rng: np.random.Generator | None = None) -> list[dict]:
    """Rows ``{k, method, value, ci}`` for ``k = 0..k_max`` and each method.

    Greedy and the rankings are prefix-consistent, so one run per method
    covers every ``k``; ``exhaustive`` is solved separately for each ``k``.
    """
    _check_k(net, k_max)
    rows = []
    ci = getattr(evaluator, "half_width", 0.0)
    for method in methods:
        if method == "exhaustive":
            for k in range(k_max + 1):
                rows.append({"k": k, "method": method, "value": exhaustive_opt(net, k, evaluator).value, "ci": ci})
            continue
        if method.startswith("greedy"):
            order = list(greedy(net, k_max, evaluator).chosen)
        else:
            order = _ranking(net, method, rng)[:k_max]
        for k in range(k_max + 1):
            rows.append({"k": k, "method": method, "value": evaluator(mask_of(order[:k])), "ci": ci})
    return rows
