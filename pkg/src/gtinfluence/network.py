"""Social networks: activation functions, weight functions, structural checks.

Node sets are plain ``int`` bitmasks throughout the package (bit ``i`` is
node ``i``).  Activation tables are indexed by *local* bitmasks over the
node's ordered neighbor list, so bit ``i`` of a local mask is
``neighbors[i]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import networkx as nx
import numpy as np

from .errors import CapExceeded, NetworkError

TOL = 1e-9
MAX_TABLE_NEIGHBORS = 20
MAX_CASCADE_TABLE_NEIGHBORS = 16
SATURATED = 1e-12  # 1 - f below this counts as f == 1


def mask_of(ids: Iterable[int]) -> int:
    out = 0
    for i in ids:
        out |= 1 << int(i)
    return out


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _local_index(states: np.ndarray, neighbors: Sequence[int]) -> np.ndarray:
    idx = np.zeros(states.shape[0], dtype=np.int64)
    for i, u in enumerate(neighbors):
        idx |= states[:, u].astype(np.int64) << i
    return idx


def _check_unit(x: float, what: str) -> None:
    if not (0.0 <= x <= 1.0) or x != x:
        raise NetworkError(f"{what} must lie in [0,1], got {x!r}")


# ---------------------------------------------------------------------------
# threshold CDFs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThresholdCdf:
    """Piecewise-linear CDF on [0,1] given by ordered breakpoints."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise NetworkError("cdf needs at least two breakpoints")
        if pts[0] != (0.0, 0.0) or pts[-1] != (1.0, 1.0):
            raise NetworkError("cdf must start at (0,0) and end at (1,1)")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if not x1 > x0:
                raise NetworkError("cdf breakpoints must have increasing x")
            if y1 < y0:
                raise NetworkError("cdf must be non-decreasing")
        object.__setattr__(self, "_xs", np.array([p[0] for p in pts]))
        object.__setattr__(self, "_ys", np.array([p[1] for p in pts]))

    @classmethod
    def identity(cls) -> "ThresholdCdf":
        return cls(((0.0, 0.0), (1.0, 1.0)))

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self._xs, self._ys))

    def batch(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self._xs, self._ys)

    def inverse(self, u: float) -> float:
        """Generalized inverse ``inf{x : F(x) >= u}`` by segment search."""
        if u <= 0.0:
            return 0.0
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            if y1 >= u:
                if y0 >= u:
                    return x0
                return x0 + (u - y0) * (x1 - x0) / (y1 - y0)
        return 1.0

    def to_json(self) -> dict:
        return {"points": [list(p) for p in self.points]}


# ---------------------------------------------------------------------------
# activation functions
# ---------------------------------------------------------------------------


class Activation:
    """A [0,1]-valued set function of a node's neighbors, ``f(empty) = 0``."""

    kind: str = ""
    neighbors: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    def local_mask(self, S: int) -> int:
        out = 0
        for i, u in enumerate(self.neighbors):
            if S >> u & 1:
                out |= 1 << i
        return out

    def global_mask(self, local: int) -> int:
        return mask_of(self.neighbors[i] for i in members(local))

    def __call__(self, S: int) -> float:
        return self.local_value(self.local_mask(S))

    def local_value(self, local: int) -> float:
        raise NotImplementedError

    def batch(self, states: np.ndarray) -> np.ndarray:
        """Evaluate on each row of a boolean ``(R, n)`` state matrix."""
        return self.table()[_local_index(states, self.neighbors)]

    def table(self) -> np.ndarray:
        """Values on every local mask, ``len == 2**degree``."""
        if self.degree > MAX_TABLE_NEIGHBORS:
            raise CapExceeded(f"cannot tabulate {self.degree} neighbors")
        return np.array([self.local_value(m) for m in range(1 << self.degree)])

    def to_json(self, labels: Sequence[str]) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearActivation(Activation):
    neighbors: tuple[int, ...]
    weights: tuple[float, ...]
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(int(u) for u in self.neighbors))
        object.__setattr__(self, "weights", tuple(float(b) for b in self.weights))
        if len(self.weights) != len(self.neighbors):
            raise NetworkError("one weight per neighbor required")
        if any(b < 0 or b != b for b in self.weights):
            raise NetworkError("linear weights must be nonnegative")
        if sum(self.weights) > 1.0 + TOL:
            raise NetworkError(f"linear weights sum to {sum(self.weights)!r} > 1")

    # summation runs in neighbor order everywhere so scalar and batch agree bit-for-bit
    def local_value(self, local: int) -> float:
        s = 0.0
        for i, b in enumerate(self.weights):
            if local >> i & 1:
                s += b
        return s

    def batch(self, states: np.ndarray) -> np.ndarray:
        s = np.zeros(states.shape[0])
        for u, b in zip(self.neighbors, self.weights):
            s = s + np.where(states[:, u], b, 0.0)
        return s

    def table(self) -> np.ndarray:
        if self.degree > MAX_TABLE_NEIGHBORS:
            raise CapExceeded(f"cannot tabulate {self.degree} neighbors")
        masks = np.arange(1 << self.degree)
        s = np.zeros(masks.size)
        for i, b in enumerate(self.weights):
            s = s + np.where(masks >> i & 1, b, 0.0)
        return s

    def to_json(self, labels):
        return {"type": "linear",
                "weights": {labels[u]: b for u, b in zip(self.neighbors, self.weights)}}


@dataclass(frozen=True, eq=False)
class TableActivation(Activation):
    neighbors: tuple[int, ...]
    values: np.ndarray
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(int(u) for u in self.neighbors))
        if len(self.neighbors) > MAX_TABLE_NEIGHBORS:
            raise CapExceeded(f"table activation limited to {MAX_TABLE_NEIGHBORS} neighbors")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (1 << len(self.neighbors),):
            raise NetworkError(f"table needs {1 << len(self.neighbors)} values, got {vals.size}")
        if vals[0] != 0.0:
            raise NetworkError("empty-set value must be 0")
        if np.any(~((vals >= 0.0) & (vals <= 1.0))):
            raise NetworkError("table values must lie in [0,1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def local_value(self, local):
        return float(self.values[local])

    def batch(self, states):
        return self.values[_local_index(states, self.neighbors)]

    def table(self):
        return self.values

    def to_json(self, labels):
        return {"type": "table", "neighbors": [labels[u] for u in self.neighbors],
                "values": [float(x) for x in self.values]}


@dataclass(frozen=True, eq=False)
class CascadeActivation(Activation):
    """Threshold view of a cascade: ``f(S) = 1 - prod(1 - p(w_i, S_{i-1}))``.

    ``probs`` is either shape ``(m,)`` (success probability independent of the
    failed set, any degree) or ``(m, 2**m)`` where ``probs[i, S]`` is the
    success probability of ``neighbors[i]`` after the local set ``S`` failed.
    The product runs over ``S`` in canonical neighbor order.
    """

    neighbors: tuple[int, ...]
    probs: np.ndarray
    kind = "cascade"

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(int(u) for u in self.neighbors))
        m = len(self.neighbors)
        p = np.array(self.probs, dtype=float)
        if p.shape not in ((m,), (m, 1 << m)):
            raise NetworkError(f"cascade probs must have shape ({m},) or ({m}, {1 << m})")
        if p.ndim == 2:
            if m > MAX_CASCADE_TABLE_NEIGHBORS:
                raise CapExceeded(f"tabulated cascade limited to {MAX_CASCADE_TABLE_NEIGHBORS} neighbors")
            for i in range(m):
                p[i, (np.arange(1 << m) >> i & 1) == 1] = np.nan  # w never fails before itself
        live = p[~np.isnan(p)]
        if np.any((live < 0.0) | (live > 1.0)):
            raise NetworkError("cascade probabilities must lie in [0,1]")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if p.ndim == 2:
            object.__setattr__(self, "_table", self._tabulate())

    @property
    def tabulated(self) -> bool:
        return self.probs.ndim == 2

    def _tabulate(self) -> np.ndarray:
        m = self.degree
        masks = np.arange(1 << m)
        prod = np.ones(masks.size)
        for i in range(m):
            on = (masks >> i & 1) == 1
            factor = np.ones(masks.size)
            factor[on] = 1.0 - self.probs[i, masks[on] & ((1 << i) - 1)]
            prod = prod * factor
        return 1.0 - prod

    def success_prob(self, i: int, failed_local: int) -> float:
        if self.tabulated:
            return float(self.probs[i, failed_local])
        return float(self.probs[i])

    def local_value(self, local):
        if self.tabulated:
            return float(self._table[local])
        prod = 1.0
        for i, p in enumerate(self.probs):
            if local >> i & 1:
                prod *= 1.0 - p
        return 1.0 - prod

    def batch(self, states):
        if self.tabulated:
            return self._table[_local_index(states, self.neighbors)]
        prod = np.ones(states.shape[0])
        for u, p in zip(self.neighbors, self.probs):
            prod = prod * np.where(states[:, u], 1.0 - p, 1.0)
        return 1.0 - prod

    def table(self):
        if self.tabulated:
            return self._table
        return super().table()

    def order_dependence(self) -> float:
        """Largest spread of ``1 - prod`` over all activation orders of any subset.

        Dynamic programming over subsets keeps the min and max product over
        every ordering, which covers all ``|S|!`` orders exactly.
        """
        m = self.degree
        if not self.tabulated or m == 0:
            return 0.0
        lo = np.ones(1 << m)
        hi = np.ones(1 << m)
        for S in range(1, 1 << m):
            best_lo, best_hi = np.inf, -np.inf
            for i in members(S):
                prev = S & ~(1 << i)
                fac = 1.0 - self.probs[i, prev]
                best_lo = min(best_lo, lo[prev] * fac)
                best_hi = max(best_hi, hi[prev] * fac)
            lo[S], hi[S] = best_lo, best_hi
        return float(np.max(hi - lo))

    def to_json(self, labels):
        names = [labels[u] for u in self.neighbors]
        if not self.tabulated:
            return {"type": "cascade", "neighbors": names,
                    "probs": {names[i]: float(p) for i, p in enumerate(self.probs)}}
        probs = {}
        for i, name in enumerate(names):
            probs[name] = {str(S): float(self.probs[i, S])
                           for S in range(1 << self.degree) if not S >> i & 1}
        return {"type": "cascade", "neighbors": names, "probs": probs}


@dataclass(frozen=True, eq=False)
class ComposedActivation(Activation):
    """``F(inner(S))`` for a threshold CDF ``F``."""

    inner: Activation
    cdf: ThresholdCdf
    kind = "composed"

    @property
    def neighbors(self):
        return self.inner.neighbors

    def local_value(self, local):
        return self.cdf(self.inner.local_value(local))

    def batch(self, states):
        return self.cdf.batch(self.inner.batch(states))

    def table(self):
        return self.cdf.batch(self.inner.table())

    def to_json(self, labels):
        return {"type": "composed", "inner": self.inner.to_json(labels), "cdf": self.cdf.to_json()}


def zero_activation() -> Activation:
    return LinearActivation((), ())


# ---------------------------------------------------------------------------
# weight functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Nonnegative set function on V scoring a terminal active set.

    ``kind`` is ``cardinality``, ``linear`` (``params`` holds per-node weights)
    or ``table`` (``params`` holds one value per global bitmask).
    """

    kind: str
    n: int
    params: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "cardinality":
            return
        p = np.asarray(self.params, dtype=float)
        if self.kind == "linear":
            if p.shape != (self.n,):
                raise NetworkError("linear weight function needs one weight per node")
        elif self.kind == "table":
            if self.n > MAX_TABLE_NEIGHBORS:
                raise CapExceeded("table weight functions are limited to 20 nodes")
            if p.shape != (1 << self.n,):
                raise NetworkError(f"weight table needs {1 << self.n} values")
        else:
            raise NetworkError(f"unknown weight function type {self.kind!r}")
        if np.any(~(p >= 0.0)):
            raise NetworkError("weights must be nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    @classmethod
    def cardinality(cls, n: int) -> "WeightFunction":
        return cls("cardinality", n)

    @property
    def neighbors(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def __call__(self, S: int) -> float:
        if self.kind == "cardinality":
            return float(popcount(S))
        if self.kind == "linear":
            s = 0.0
            for i in members(S):
                s += self.params[i]
            return float(s)
        return float(self.params[S])

    def batch(self, states: np.ndarray) -> np.ndarray:
        if self.kind == "cardinality":
            return states.sum(axis=1).astype(float)
        if self.kind == "linear":
            s = np.zeros(states.shape[0])
            for i, b in enumerate(self.params):
                s = s + np.where(states[:, i], b, 0.0)
            return s
        return self.params[_local_index(states, range(self.n))]

    def table(self) -> np.ndarray:
        if self.n > MAX_TABLE_NEIGHBORS:
            raise CapExceeded("cannot tabulate weight function beyond 20 nodes")
        if self.kind == "table":
            return self.params
        return np.array([self(S) for S in range(1 << self.n)])

    @property
    def span(self) -> float:
        """``w(V) - w(empty)``, the range a monotone ``w`` can take."""
        return self((1 << self.n) - 1) - self(0)

    def global_mask(self, local: int) -> int:
        return local

    def to_json(self, labels: Sequence[str]) -> dict:
        if self.kind == "cardinality":
            return {"type": "cardinality"}
        if self.kind == "linear":
            return {"type": "linear", "weights": {labels[i]: float(b) for i, b in enumerate(self.params)}}
        return {"type": "table", "values": [float(x) for x in self.params]}


# ---------------------------------------------------------------------------
# the network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SocialNetwork:
    labels: tuple[str, ...]
    activations: tuple[Activation, ...]
    weight: WeightFunction = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(set(labels)) != len(labels):
            raise NetworkError("node labels must be unique")
        if len(self.activations) != len(labels):
            raise NetworkError("exactly one activation per node required")
        n = len(labels)
        for v, act in enumerate(self.activations):
            if len(set(act.neighbors)) != act.degree:
                raise NetworkError(f"duplicate neighbor for node {labels[v]!r}")
            for u in act.neighbors:
                if not 0 <= u < n:
                    raise NetworkError(f"unknown neighbor id {u} for node {labels[v]!r}")
                if u == v:
                    raise NetworkError(f"node {labels[v]!r} cannot be its own neighbor")
            if act(0) != 0.0:
                raise NetworkError(f"empty-set value must be 0 (node {labels[v]!r})")
        if self.weight is None:
            object.__setattr__(self, "weight", WeightFunction.cardinality(n))
        elif self.weight.n != n:
            raise NetworkError("weight function size does not match node count")
        object.__setattr__(self, "index", {lab: i for i, lab in enumerate(labels)})

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def f(self, v: int, S: int) -> float:
        return self.activations[v](S)

    def mask(self, labels: Iterable[str]) -> int:
        try:
            return mask_of(self.index[lab] for lab in labels)
        except KeyError as e:
            raise NetworkError(f"unknown node label {e.args[0]!r}") from None

    def labels_of(self, S: int) -> list[str]:
        return sorted(self.labels[i] for i in members(S))

    def format_set(self, S: int) -> str:
        return "|".join(self.labels_of(S))

    def with_activations(self, activations: Sequence[Activation]) -> "SocialNetwork":
        return SocialNetwork(self.labels, tuple(activations), self.weight)

    def with_weight(self, weight: WeightFunction) -> "SocialNetwork":
        return SocialNetwork(self.labels, self.activations, weight)

    def to_document(self) -> dict:
        return {
            "nodes": list(self.labels),
            "activations": {self.labels[v]: a.to_json(self.labels)
                            for v, a in enumerate(self.activations) if a.degree},
            "weight_function": self.weight.to_json(self.labels),
        }


def chain_network() -> SocialNetwork:
    """The three-node chain a -> b -> c with both weights 0.5."""
    return SocialNetwork(
        ("a", "b", "c"),
        (zero_activation(), LinearActivation((0,), (0.5,)), LinearActivation((1,), (0.5,))),
    )


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _parse_activation(spec: Mapping, index: Mapping[str, int], strict: bool) -> Activation:
    if not isinstance(spec, Mapping) or "type" not in spec:
        raise NetworkError("activation must be an object with a 'type'")

    def ids(names):
        try:
            return tuple(index[x] for x in names)
        except KeyError as e:
            raise NetworkError(f"unknown node reference {e.args[0]!r}") from None

    kind = spec["type"]
    if kind == "linear":
        weights = spec.get("weights", {})
        return LinearActivation(ids(weights.keys()), tuple(float(b) for b in weights.values()))
    if kind == "table":
        act = TableActivation(ids(spec.get("neighbors", [])), spec.get("values", [0.0]))
        if strict:
            report = check_properties(act)
            if not report.monotone:
                raise NetworkError("table activation is not monotone")
        return act
    if kind == "cascade":
        nbrs = list(spec.get("neighbors", []))
        m = len(nbrs)
        probs = spec.get("probs", {})
        if set(probs) != set(nbrs):
            raise NetworkError("cascade probs must list every neighbor")
        if all(not isinstance(probs[w], Mapping) for w in nbrs):
            p = np.array([float(probs[w]) for w in nbrs])
        else:
            if m > MAX_CASCADE_TABLE_NEIGHBORS:
                raise CapExceeded("tabulated cascade limited to 16 neighbors")
            p = np.full((m, 1 << m), np.nan)
            for i, w in enumerate(nbrs):
                entry = probs[w]
                for S in range(1 << m):
                    if S >> i & 1:
                        continue
                    if isinstance(entry, Mapping):
                        if str(S) not in entry:
                            raise NetworkError(f"missing p entry for neighbor {w!r}, failed set {S}")
                        p[i, S] = float(entry[str(S)])
                    else:
                        p[i, S] = float(entry)
        act = CascadeActivation(ids(nbrs), p)
        if strict and act.tabulated and act.degree <= 8 and act.order_dependence() > TOL:
            raise NetworkError("cascade activation is order-dependent")
        return act
    if kind == "composed":
        if "inner" not in spec or "cdf" not in spec:
            raise NetworkError("composed activation needs 'inner' and 'cdf'")
        return ComposedActivation(_parse_activation(spec["inner"], index, strict),
                                  ThresholdCdf(tuple(tuple(p) for p in spec["cdf"]["points"])))
    raise NetworkError(f"unknown activation type {kind!r}")


def _parse_weight(spec: Mapping | None, index: Mapping[str, int]) -> WeightFunction:
    n = len(index)
    if spec is None or spec.get("type", "cardinality") == "cardinality":
        return WeightFunction.cardinality(n)
    kind = spec["type"]
    if kind == "linear":
        w = np.zeros(n)
        for lab, b in spec.get("weights", {}).items():
            if lab not in index:
                raise NetworkError(f"unknown node reference {lab!r}")
            w[index[lab]] = float(b)
        return WeightFunction("linear", n, w)
    if kind == "table":
        return WeightFunction("table", n, np.asarray(spec.get("values", []), dtype=float))
    raise NetworkError(f"unknown weight function type {kind!r}")


def load_network(document: Union[str, Path, Mapping], strict: bool = True) -> SocialNetwork:
    """Build a validated network from a JSON document (text, path or parsed).

    With ``strict`` on, table activations must be monotone and tabulated
    cascade activations order-independent.
    """
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise NetworkError(f"parse error: {e}") from None
    if not isinstance(document, Mapping):
        raise NetworkError("network document must be a JSON object")
    labels = document.get("nodes", [])
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise NetworkError("'nodes' must be an array of string labels")
    if len(set(labels)) != len(labels):
        raise NetworkError("node labels must be unique")
    index = {lab: i for i, lab in enumerate(labels)}
    acts: list[Activation] = [zero_activation() for _ in labels]
    for lab, spec in (document.get("activations") or {}).items():
        if lab not in index:
            raise NetworkError(f"unknown node reference {lab!r}")
        acts[index[lab]] = _parse_activation(spec, index, strict)
    weight = _parse_weight(document.get("weight_function"), index)
    return SocialNetwork(tuple(labels), tuple(acts), weight)


def eval_activation(net: SocialNetwork, v: int, S: int) -> float:
    return net.f(v, S)


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Violation found by :func:`check_properties`, in global node terms.

    ``S`` and ``T = S | {extra}`` are global masks and ``v`` the node whose
    addition misbehaves; ``margins`` holds the two compared quantities.
    """

    S: int
    T: int
    v: int | None
    margins: tuple[float, float]


@dataclass(frozen=True)
class PropertyReport:
    monotone: bool
    submodular: bool
    normalized_submodular: bool
    monotone_witness: Witness | None = None
    submodular_witness: Witness | None = None
    normalized_witness: Witness | None = None

    @property
    def all_ok(self) -> bool:
        return self.monotone and self.submodular and self.normalized_submodular


def _first(cands):
    cands = [c for c in cands if c is not None]
    return min(cands) if cands else None


def _ratio(vals, S, i_bit):
    den = 1.0 - vals[S]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (vals[S | i_bit] - vals[S]) / den


def check_table(vals: np.ndarray, m: int, tol: float = TOL):
    """Brute-force property check of a table over ``m`` local elements.

    Returns ``(monotone, submodular, normalized)`` first violations in local
    terms, each ``None`` or ``(S, u, v, margin_a, margin_b)``.  Checks use
    single-element steps, which is equivalent to the all-pairs definitions.
    """
    vals = np.asarray(vals, dtype=float)
    masks = np.arange(1 << m)
    mono = []
    for i in range(m):
        bit = 1 << i
        S = masks[(masks & bit) == 0]
        bad = np.nonzero(vals[S] - vals[S | bit] > tol)[0]
        if bad.size:
            s = int(S[bad[0]])
            mono.append((s, i, i, float(vals[s]), float(vals[s | bit])))
    sub = []
    for u in range(m):
        for v in range(u + 1, m):
            bu, bv = 1 << u, 1 << v
            S = masks[(masks & (bu | bv)) == 0]
            small = vals[S | bv] - vals[S]
            large = vals[S | bu | bv] - vals[S | bu]
            bad = np.nonzero(large - small > tol)[0]
            if bad.size:
                k = bad[0]
                sub.append((int(S[k]), u, v, float(small[k]), float(large[k])))
    norm = []
    for u in range(m):
        for i in range(m):
            bu, bi = 1 << u, 1 << i
            S = masks[(masks & (bu | bi)) == 0]
            T = S | bu
            live = (1.0 - vals[S] > SATURATED) & (1.0 - vals[T] > SATURATED)
            rS = _ratio(vals, S, bi)
            rT = np.zeros(S.size) if u == i else _ratio(vals, T, bi)
            bad = np.nonzero(live & (rT - rS > tol))[0]
            if bad.size:
                k = bad[0]
                norm.append((int(S[k]), u, i, float(rS[k]), float(rT[k])))
    return _first(mono), _first(sub), _first(norm)


def check_properties(f: Union[Activation, WeightFunction], tol: float = TOL) -> PropertyReport:
    """Exhaustively check monotonicity, submodularity and normalized submodularity."""
    m = len(f.neighbors)
    if m > MAX_TABLE_NEIGHBORS:
        raise CapExceeded(f"domain of size {m} exceeds the brute-force cap of {MAX_TABLE_NEIGHBORS}")
    mono, sub, norm = check_table(f.table(), m, tol)

    def witness(hit):
        if hit is None:
            return None
        S, u, v, a, b = hit
        return Witness(f.global_mask(S), f.global_mask(S | 1 << u),
                       f.neighbors[v], (a, b))

    return PropertyReport(mono is None, sub is None, norm is None,
                          witness(mono), witness(sub), witness(norm))


def gensubmod_violation(vals: np.ndarray, m: int, tol: float = TOL):
    """Search all ``S <= S2``, ``T <= T2`` for ``f(S|T2)-f(S) < f(S2|T)-f(S2)``.

    Returns the first offending quadruple ``(S, S2, T, T2)`` or ``None``.
    """
    if m > 6:
        raise CapExceeded("quadruple search limited to 6 elements")
    full = 1 << m
    for S2 in range(full):
        for S in _submasks(S2):
            for T2 in range(full):
                lhs_base = vals[S | T2] - vals[S]
                for T in _submasks(T2):
                    if lhs_base < vals[S2 | T] - vals[S2] - tol:
                        return S, S2, T, T2
    return None


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def derive_graph(net: SocialNetwork) -> nx.DiGraph:
    """Influence graph: ``w -> v`` iff adding ``w`` changes ``f_v`` for some set."""
    g = nx.DiGraph()
    g.add_nodes_from((v, {"label": lab}) for v, lab in enumerate(net.labels))
    for v, act in enumerate(net.activations):
        for i, w in enumerate(act.neighbors):
            if _influences(act, i):
                g.add_edge(w, v)
    return g


def _influences(act: Activation, i: int) -> bool:
    if isinstance(act, LinearActivation):
        return act.weights[i] > 0.0
    if isinstance(act, CascadeActivation) and not act.tabulated:
        return act.probs[i] > 0.0
    if act.degree > MAX_TABLE_NEIGHBORS:
        if isinstance(act, ComposedActivation):
            return _influences(act.inner, i)
        raise CapExceeded("cannot derive edges beyond 20 neighbors")
    vals = act.table()
    masks = np.arange(1 << act.degree)
    S = masks[(masks >> i & 1) == 0]
    return bool(np.any(vals[S | 1 << i] != vals[S]))
