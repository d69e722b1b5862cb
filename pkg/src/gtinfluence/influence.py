"""Influence ``sigma_w(S) = E[w(terminal set)]``: exact and Monte Carlo.

Two exact routes are provided and kept independent of each other:

* :class:`ExactOracle` branches over the need-to-know transition
  probabilities, memoized on ``(previous set, current set, remaining stages)``.
* :func:`threshold_integration` partitions threshold space into boxes on
  which the eager run is constant and runs one representative per box.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .diffusion import PlanLike, as_plan, run_batch, states_to_masks
from .errors import CapExceeded, InvariantViolation
from .network import SocialNetwork, WeightFunction
from .streams import block_sizes, threshold_block

DEFAULT_CAP = 14
MASS_TOL = 1e-12


@dataclass(frozen=True)
class ExactResult:
    distribution: dict[int, float]
    sigma: float

    def to_json(self, net: SocialNetwork) -> dict:
        rows = sorted(([net.format_set(F), p] for F, p in self.distribution.items()), key=lambda r: r[0])
        return {"distribution": rows, "sigma": self.sigma}


@dataclass(frozen=True)
class InfluenceEstimate:
    mean: float
    half_width: float
    replicates: int
    confidence: float

    def to_json(self) -> dict:
        return {"sigma": self.mean, "ci": self.half_width,
                "replicates": self.replicates, "confidence": self.confidence}


class ExactOracle:
    """Exact terminal distributions of the threshold process on one network.

    Memo tables live on the instance, so reusing one oracle across many seed
    sets shares work.  Activations are assumed monotone, which makes the last
    survival level of every inactive node equal to ``f_v(previous set)``.
    """

    def __init__(self, net: SocialNetwork, cap: int = DEFAULT_CAP):
        if net.n > cap:
            raise CapExceeded(f"exact evaluation capped at n={cap}, network has n={net.n}")
        self.net = net
        self._fcache: dict[tuple[int, int], float] = {}
        self._trans: dict[tuple[int, int], list[tuple[float, int]]] = {}
        self._dist: dict[tuple, dict[int, float]] = {}
        self._values: dict[int, tuple[WeightFunction, dict]] = {}

    def _f(self, v: int, S: int) -> float:
        key = (v, S)
        val = self._fcache.get(key)
        if val is None:
            val = self._fcache[key] = self.net.f(v, S)
        return val

    def transitions(self, prev: int, cur: int) -> list[tuple[float, int]]:
        """``(probability, next set)`` pairs for one step out of ``(prev, cur)``."""
        key = (prev, cur)
        out = self._trans.get(key)
        if out is not None:
            return out
        always = 0
        branch = []
        for v in range(self.net.n):
            if cur >> v & 1:
                continue
            hi, lo = self._f(v, cur), self._f(v, prev)
            if hi <= lo:
                continue
            if 1.0 - lo <= 0.0:
                raise InvariantViolation(f"inactive node {v} survived f_v = 1")
            q = (hi - lo) / (1.0 - lo)
            if q >= 1.0:
                always |= 1 << v
            else:
                branch.append((1 << v, q))
        out = [(1.0, cur | always)]
        for bit, q in branch:
            out = [(p * (1.0 - q), m) for p, m in out] + [(p * q, m | bit) for p, m in out]
        self._trans[key] = out
        return out

    def _walk(self, prev, cur, rest):
        key = (prev, cur, rest)
        hit = self._dist.get(key)
        if hit is not None:
            return hit
        if prev == cur:
            if not rest:
                out = {cur: 1.0}
            else:
                out = self._walk(cur, cur | rest[0], rest[1:])
        else:
            out = {}
            for p, nxt in self.transitions(prev, cur):
                if p == 0.0:
                    continue
                for F, q in self._walk(cur, nxt, rest).items():
                    out[F] = out.get(F, 0.0) + p * q
        self._dist[key] = out
        return out

    def distribution(self, plan: PlanLike) -> dict[int, float]:
        plan = as_plan(plan)
        if plan.antisense_tail is not None:
            raise ValueError("the exact oracle takes plans without an antisense tail")
        if not plan.stages:
            return {0: 1.0}
        return dict(sorted(self._walk(0, plan.stages[0], plan.stages[1:]).items()))

    def _value(self, prev, cur, rest, w, memo):
        key = (prev, cur, rest)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if prev == cur:
            out = w(cur) if not rest else self._value(cur, cur | rest[0], rest[1:], w, memo)
        else:
            out = 0.0
            for p, nxt in self.transitions(prev, cur):
                if p:
                    out += p * self._value(cur, nxt, rest, w, memo)
        memo[key] = out
        return out

    def sigma(self, plan: PlanLike, w: WeightFunction | None = None) -> float:
        """Expected weight, computed without materializing the distribution."""
        plan = as_plan(plan)
        w = w or self.net.weight
        if id(w) not in self._values:
            self._values[id(w)] = (w, {})
        memo = self._values[id(w)][1]
        if not plan.stages:
            return w(0)
        return self._value(0, plan.stages[0], plan.stages[1:], w, memo)


def exact_sigma(net: SocialNetwork, plan: PlanLike, w: WeightFunction | None = None,
                cap: int = DEFAULT_CAP, oracle: ExactOracle | None = None) -> ExactResult:
    oracle = oracle or ExactOracle(net, cap)
    w = w or net.weight
    dist = oracle.distribution(plan)
    mass = sum(dist.values())
    if abs(mass - 1.0) > MASS_TOL:
        raise InvariantViolation(f"terminal distribution has mass {mass!r}")
    return ExactResult(dist, sum(p * w(F) for F, p in dist.items()))


def sigma_table(net: SocialNetwork, w: WeightFunction | None = None,
                oracle: ExactOracle | None = None) -> np.ndarray:
    """Exact ``sigma_w`` for every seed set, indexed by bitmask."""
    oracle = oracle or ExactOracle(net)
    return np.array([oracle.sigma(S, w) for S in range(1 << net.n)])


def sigma_violations(sig: np.ndarray, n: int, tol: float = 1e-9):
    """First monotonicity and submodularity violations of a sigma table.

    Monotonicity is checked on single-element steps ``(S, v)``; submodularity
    on every pair ``A < B`` of seed sets.  Each entry is ``None`` or a tuple.
    """
    masks = np.arange(1 << n)
    mono = None
    for S in range(1 << n):
        for v in range(n):
            if not S >> v & 1 and sig[S] - sig[S | 1 << v] > tol:
                mono = (S, v, float(sig[S]), float(sig[S | 1 << v]))
                break
        if mono:
            break
    sub = None
    for A in range(1 << n):
        B = masks[A + 1:]
        slack = sig[A] + sig[B] - sig[A & B] - sig[A | B]
        bad = np.nonzero(slack < -tol)[0]
        if bad.size:
            b = int(B[bad[0]])
            sub = (A, b, float(sig[A] + sig[b]), float(sig[A & b] + sig[A | b]))
            break
    return mono, sub


def min_submodular_slack(sig: np.ndarray, n: int) -> float:
    masks = np.arange(1 << n)
    A = masks[:, None]
    B = masks[None, :]
    return float(np.min(sig[A] + sig[B] - sig[A & B] - sig[A | B]))


# ---------------------------------------------------------------------------
# threshold-space integration
# ---------------------------------------------------------------------------


def _breakpoints(net: SocialNetwork, antisense: bool) -> list[np.ndarray]:
    out = []
    for act in net.activations:
        vals = np.unique(act.table())
        pts = set(vals.tolist())
        if antisense:
            diffs = vals[:, None] - vals[None, :]
            pts |= set((1.0 - diffs[diffs >= 0]).tolist())
        out.append(np.array(sorted(p for p in pts if 0.0 < p < 1.0)))
    return out


def threshold_integration(net: SocialNetwork, plan: PlanLike, max_boxes: int = 2_000_000,
                          chunk: int = 1 << 16) -> dict[int, float]:
    """Exact terminal distribution of the eager (or antisense) run.

    Every comparison the run makes is ``theta_v`` against a value drawn from
    a finite set per node, so the run is constant on boxes of threshold
    space.  Each box is run once at its midpoint and weighted by its volume.
    """
    plan = as_plan(plan)
    n = net.n
    if n > 20:
        raise CapExceeded("threshold integration limited to 20 nodes")
    edges = [np.concatenate(([0.0], bp, [1.0])) for bp in _breakpoints(net, plan.antisense_tail is not None)]
    mids = [(e[:-1] + e[1:]) / 2 for e in edges]
    lens = [np.diff(e) for e in edges]
    sizes = [len(m) for m in mids]
    total = math.prod(sizes)
    if total > max_boxes:
        raise CapExceeded(f"{total} threshold boxes exceed the cap of {max_boxes}")
    mass = np.zeros(1 << n)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk))
        theta = np.empty((idx.size, n))
        vol = np.ones(idx.size)
        rem = idx.copy()
        for v in range(n - 1, -1, -1):
            digit = rem % sizes[v]
            rem //= sizes[v]
            theta[:, v] = mids[v][digit]
            vol *= lens[v][digit]
        masks = states_to_masks(run_batch(net, plan, theta))
        mass += np.bincount(masks, weights=vol, minlength=1 << n)
    return {int(F): float(mass[F]) for F in np.nonzero(mass)[0]}


def tv_distance(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def hoeffding_radius(span: float, replicates: int, confidence: float) -> float:
    return span * math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * replicates))


def required_replicates(span: float, epsilon: float, confidence: float) -> int:
    """Smallest replicate count whose Hoeffding radius is at most ``epsilon``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if span <= 0 or epsilon >= span:
        return 1
    R = math.ceil(span * span * math.log(2.0 / (1.0 - confidence)) / (2.0 * epsilon * epsilon))
    while R > 1 and hoeffding_radius(span, R - 1, confidence) <= epsilon:
        R -= 1
    while hoeffding_radius(span, R, confidence) > epsilon:
        R += 1
    return R


def _map_blocks(fn, replicates: int, workers: int):
    jobs = list(enumerate(block_sizes(replicates)))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(b, size) for b, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def estimate_mc(net: SocialNetwork, plan: PlanLike, w: WeightFunction | None = None,
                replicates: int = 10_000, confidence: float = 0.95, seed: int = 0,
                workers: int = 1) -> InfluenceEstimate:
    """Average ``w`` over eager replicates with a Hoeffding confidence radius.

    Blocks of replicates may run on several threads; their sums are combined
    in block order so the result does not depend on ``workers``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    plan = as_plan(plan)
    w = w or net.weight

    def block(b, size):
        theta = threshold_block(seed, b, size, net.n)
        return float(np.sum(w.batch(run_batch(net, plan, theta))))

    total = 0.0
    for s in _map_blocks(block, replicates, workers):
        total += s
    return InfluenceEstimate(total / replicates, hoeffding_radius(w.span, replicates, confidence),
                             replicates, confidence)


def mc_distribution(net: SocialNetwork, plan: PlanLike, replicates: int, seed: int = 0,
                    workers: int = 1) -> dict[int, float]:
    """Empirical terminal distribution over ``replicates`` eager runs."""
    plan = as_plan(plan)

    def block(b, size):
        theta = threshold_block(seed, b, size, net.n)
        masks = states_to_masks(run_batch(net, plan, theta))
        return np.unique(masks, return_counts=True)

    counts: dict[int, int] = {}
    for keys, cnt in _map_blocks(block, replicates, workers):
        for k, c in zip(keys.tolist(), cnt.tolist()):
            counts[k] = counts.get(k, 0) + c
    return {k: c / replicates for k, c in sorted(counts.items())}
