"""Cascade models and their equivalence with the threshold model.

A general cascade assigns each node ``v`` the probability ``p_v(w, S)`` that
neighbor ``w`` activates it after the neighbors in ``S`` already tried and
failed.  Each newly active node gets one attempt per inactive out-neighbor.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import CapExceeded, NetworkError
from .network import (
    MAX_CASCADE_TABLE_NEIGHBORS,
    SATURATED,
    TOL,
    CascadeActivation,
    SocialNetwork,
    members,
)

ORDER_CHECK_CAP = 8


@dataclass(frozen=True, eq=False)
class CascadeNode:
    """Success probabilities for one node.

    ``probs`` has shape ``(m,)`` when they do not depend on the failed set,
    otherwise ``(m, 2**m)`` indexed by local bitmask over ``neighbors``
    (entries with bit ``i`` set are ``nan``).  ``unreachable`` flags failed
    sets that already force activation, so the cascade can never sit there.
    """

    neighbors: tuple[int, ...]
    probs: np.ndarray
    unreachable: np.ndarray | None = None

    @property
    def tabulated(self) -> bool:
        return self.probs.ndim == 2

    def p(self, i: int, failed_local: int) -> float:
        if self.tabulated:
            return float(self.probs[i, failed_local])
        return float(self.probs[i])


@dataclass(frozen=True, eq=False)
class CascadeSpec:
    labels: tuple[str, ...]
    nodes: tuple[CascadeNode, ...]

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ICSpec:
    """Independent cascade: edge ``(w, v, p)`` is live with probability ``p``."""

    labels: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    @property
    def n(self) -> int:
        return len(self.labels)


# ---------------------------------------------------------------------------
# the equivalence maps
# ---------------------------------------------------------------------------


def threshold_to_cascade(net: SocialNetwork, cap: int = MAX_CASCADE_TABLE_NEIGHBORS) -> CascadeSpec:
    """``p_v(w, S) = (f_v(S + w) - f_v(S)) / (1 - f_v(S))`` for every node."""
    nodes = []
    for v, act in enumerate(net.activations):
        m = act.degree
        if m > cap:
            raise CapExceeded(f"node {net.labels[v]!r} has {m} neighbors, cap is {cap}")
        vals = act.table()
        masks = np.arange(1 << m)
        probs = np.full((m, 1 << m), np.nan)
        unreachable = np.zeros((m, 1 << m), dtype=bool)
        for i in range(m):
            S = masks[(masks >> i & 1) == 0]
            den = 1.0 - vals[S]
            sat = den <= SATURATED
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.where(sat, 1.0, (vals[S | 1 << i] - vals[S]) / np.where(sat, 1.0, den))
            if np.any(p < -SATURATED):
                raise NetworkError(f"activation of {net.labels[v]!r} is not monotone")
            probs[i, S] = np.clip(p, 0.0, 1.0)
            unreachable[i, S] = sat
        nodes.append(CascadeNode(act.neighbors, probs, unreachable))
    return CascadeSpec(net.labels, tuple(nodes))


def cascade_to_threshold(spec: Union[CascadeSpec, ICSpec], check_order: bool = True,
                         order_cap: int = ORDER_CHECK_CAP) -> SocialNetwork:
    """``f_v(S) = 1 - prod_i (1 - p_v(w_i, S_{i-1}))`` in canonical neighbor order."""
    if isinstance(spec, ICSpec):
        spec = ic_to_cascade(spec)
    acts = []
    for v, node in enumerate(spec.nodes):
        act = CascadeActivation(node.neighbors, node.probs)
        if check_order and act.tabulated:
            if act.degree > order_cap:
                raise CapExceeded(f"order-independence check capped at {order_cap} neighbors")
            gap = act.order_dependence()
            if gap > TOL:
                raise NetworkError(f"order-dependence detected at node {spec.labels[v]!r} (spread {gap:.3g})")
        acts.append(act)
    return SocialNetwork(spec.labels, tuple(acts))


def ic_to_cascade(ic: ICSpec) -> CascadeSpec:
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(ic.n)]
    for w, v, p in ic.edges:
        nbrs[v].append((w, p))
    nodes = []
    for lst in nbrs:
        lst.sort()
        nodes.append(CascadeNode(tuple(w for w, _ in lst), np.array([p for _, p in lst], dtype=float)))
    return CascadeSpec(ic.labels, tuple(nodes))


def decreasing_witness(node: CascadeNode, tol: float = TOL):
    """First ``(i, S, T)`` in local terms with ``p(w_i, S) < p(w_i, T)``, ``S < T``, or ``None``.

    Single-element steps suffice since reachability is closed under
    shrinking the failed set.
    """
    if not node.tabulated:
        return None
    m = len(node.neighbors)
    masks = np.arange(1 << m)
    reach = ~node.unreachable if node.unreachable is not None else np.ones(node.probs.shape, bool)
    for i in range(m):
        for u in range(m):
            if u == i:
                continue
            S = masks[(masks & (1 << i | 1 << u)) == 0]
            T = S | 1 << u
            bad = reach[i, S] & reach[i, T] & (node.probs[i, T] - node.probs[i, S] > tol)
            hit = np.nonzero(bad)[0]
            if hit.size:
                return i, int(S[hit[0]]), int(T[hit[0]])
    return None


def check_decreasing(spec: CascadeSpec, tol: float = TOL):
    """Is ``p_v(w, S) >= p_v(w, T)`` for all ``S <= T`` on reachable entries?

    Returns ``(ok, witness)`` with witness ``(v, w, S, T, p_S, p_T)`` in
    global ids and masks.
    """
    for v, node in enumerate(spec.nodes):
        hit = decreasing_witness(node, tol)
        if hit is None:
            continue
        i, s, t = hit
        glob = lambda L: sum(1 << node.neighbors[j] for j in members(L))
        return False, (v, node.neighbors[i], glob(s), glob(t),
                       float(node.probs[i, s]), float(node.probs[i, t]))
    return True, None


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _attempt_order(spec: CascadeSpec) -> list[list[int]]:
    """Per node, neighbor indices sorted by neighbor id."""
    return [sorted(range(len(nd.neighbors)), key=lambda i, nd=nd: nd.neighbors[i]) for nd in spec.nodes]


def run_cascade(spec: CascadeSpec, seeds: int, rng: np.random.Generator) -> int:
    """Terminal set of one cascade run; attempts within a step go by node id."""
    if isinstance(spec, ICSpec):
        spec = ic_to_cascade(spec)
    order = _attempt_order(spec)
    active = frontier = seeds
    while frontier:
        newly = 0
        for v, node in enumerate(spec.nodes):
            if active >> v & 1:
                continue
            failed = 0
            for i, w in enumerate(node.neighbors):
                if (active & ~frontier) >> w & 1:
                    failed |= 1 << i
            for i in order[v]:
                if not frontier >> node.neighbors[i] & 1:
                    continue
                if rng.random() < node.p(i, failed):
                    newly |= 1 << v
                    break
                failed |= 1 << i
        active |= newly
        frontier = newly
    return active


def exact_cascade_distribution(spec: CascadeSpec, seeds: int) -> dict[int, float]:
    """Terminal distribution of :func:`run_cascade` by branching on every attempt."""
    if isinstance(spec, ICSpec):
        spec = ic_to_cascade(spec)
    order = _attempt_order(spec)
    memo: dict[tuple[int, int], dict[int, float]] = {}

    def activation_prob(v, active, frontier):
        node = spec.nodes[v]
        failed = 0
        for i, w in enumerate(node.neighbors):
            if (active & ~frontier) >> w & 1:
                failed |= 1 << i
        reach, success = 1.0, 0.0
        for i in order[v]:
            if not frontier >> node.neighbors[i] & 1:
                continue
            p = node.p(i, failed)
            success += reach * p
            reach *= 1.0 - p
            failed |= 1 << i
        return success

    def walk(active, frontier):
        if not frontier:
            return {active: 1.0}
        key = (active, frontier)
        if key in memo:
            return memo[key]
        outcomes = [(1.0, 0)]
        for v in range(spec.n):
            if active >> v & 1:
                continue
            q = activation_prob(v, active, frontier)
            if q == 0.0:
                continue
            outcomes = [(p * (1.0 - q), m) for p, m in outcomes] + [(p * q, m | 1 << v) for p, m in outcomes]
        out: dict[int, float] = {}
        for p, newly in outcomes:
            if p == 0.0:
                continue
            for F, r in walk(active | newly, newly).items():
                out[F] = out.get(F, 0.0) + p * r
        memo[key] = out
        return out

    return dict(sorted(walk(seeds, seeds).items()))


def _reach(n: int, live_edges, seeds: int) -> int:
    adj: list[list[int]] = [[] for _ in range(n)]
    for w, v in live_edges:
        adj[w].append(v)
    seen = seeds
    queue = deque(members(seeds))
    while queue:
        w = queue.popleft()
        for v in adj[w]:
            if not seen >> v & 1:
                seen |= 1 << v
                queue.append(v)
    return seen


def run_live_edge_ic(ic: ICSpec, seeds: int, rng: np.random.Generator) -> int:
    """Sample every edge live independently, return the set reachable from ``seeds``."""
    draws = rng.random(len(ic.edges))
    live = [(w, v) for (w, v, p), u in zip(ic.edges, draws) if u < p]
    return _reach(ic.n, live, seeds)


def exact_live_edge_distribution(ic: ICSpec, seeds: int, cap: int = 20) -> dict[int, float]:
    """Enumerate all live-edge subgraphs (at most ``2**cap`` of them)."""
    E = len(ic.edges)
    if E > cap:
        raise CapExceeded(f"{E} edges exceed the enumeration cap of {cap}")
    out: dict[int, float] = {}
    for live in range(1 << E):
        prob = 1.0
        chosen = []
        for j, (w, v, p) in enumerate(ic.edges):
            if live >> j & 1:
                prob *= p
                chosen.append((w, v))
            else:
                prob *= 1.0 - p
        if prob:
            F = _reach(ic.n, chosen, seeds)
            out[F] = out.get(F, 0.0) + prob
    return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------


def load_cascade(document: Union[str, Path, Mapping]) -> Union[CascadeSpec, ICSpec]:
    """Parse a ``cascade-spec`` or ``ic`` document.

    In ``cascade-spec`` documents, the neighbors of ``v`` are the keys of
    ``probs[v]`` in document order and each bitmask is local to that list.
    A bare number stands for a probability that ignores the failed set.
    """
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise NetworkError(f"parse error: {e}") from None
    labels = document.get("nodes", [])
    index = {lab: i for i, lab in enumerate(labels)}
    if len(index) != len(labels):
        raise NetworkError("node labels must be unique")

    def ref(lab):
        if lab not in index:
            raise NetworkError(f"unknown node reference {lab!r}")
        return index[lab]

    kind = document.get("type")
    if kind == "ic":
        edges = []
        for w, v, p in document.get("edges", []):
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise NetworkError("edge probabilities must lie in [0,1]")
            edges.append((ref(w), ref(v), p))
        return ICSpec(tuple(labels), tuple(edges))
    if kind != "cascade-spec":
        raise NetworkError(f"unknown cascade document type {kind!r}")
    nodes = [CascadeNode((), np.zeros(0)) for _ in labels]
    for vlab, table in (document.get("probs") or {}).items():
        names = list(table)
        nbrs = tuple(ref(x) for x in names)
        m = len(nbrs)
        if all(not isinstance(table[x], Mapping) for x in names):
            probs = np.array([float(table[x]) for x in names])
        else:
            if m > MAX_CASCADE_TABLE_NEIGHBORS:
                raise CapExceeded("tabulated cascade limited to 16 neighbors")
            probs = np.full((m, 1 << m), np.nan)
            for i, x in enumerate(names):
                for S in range(1 << m):
                    if S >> i & 1:
                        continue
                    entry = table[x]
                    if isinstance(entry, Mapping):
                        if str(S) not in entry:
                            raise NetworkError(f"missing p entry for {vlab!r} <- {x!r}, failed set {S}")
                        probs[i, S] = float(entry[str(S)])
                    else:
                        probs[i, S] = float(entry)
        live = probs[~np.isnan(probs)]
        if np.any((live < 0.0) | (live > 1.0)):
            raise NetworkError("cascade probabilities must lie in [0,1]")
        nodes[ref(vlab)] = CascadeNode(nbrs, probs)
    return CascadeSpec(tuple(labels), tuple(nodes))


def cascade_document(spec: Union[CascadeSpec, ICSpec]) -> dict:
    if isinstance(spec, ICSpec):
        return {"type": "ic", "nodes": list(spec.labels),
                "edges": [[spec.labels[w], spec.labels[v], p] for w, v, p in spec.edges]}
    probs = {}
    for v, node in enumerate(spec.nodes):
        if not node.neighbors:
            continue
        names = [spec.labels[u] for u in node.neighbors]
        if not node.tabulated:
            probs[spec.labels[v]] = {x: float(p) for x, p in zip(names, node.probs)}
            continue
        m = len(names)
        probs[spec.labels[v]] = {x: {str(S): float(node.probs[i, S]) for S in range(1 << m) if not S >> i & 1}
                                 for i, x in enumerate(names)}
    return {"type": "cascade-spec", "nodes": list(spec.labels), "probs": probs}
