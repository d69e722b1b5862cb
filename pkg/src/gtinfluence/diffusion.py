"""The progressive threshold process in its four guises.

* eager: all thresholds fixed up front (:func:`run`)
* lazy, need-to-know: thresholds revealed only as far as each step needs
  (:func:`run_lazy`)
* staged: seeds injected stage by stage under shared thresholds
  (any :class:`StagePlan` with several stages)
* antisense: a final stage where the remaining threshold interval of each
  node is filled from its far end (:func:`run_antisense`)

Every stage runs to its fixed point.  Pass ``literal=True`` to pad each
stage to exactly ``n`` recorded sets instead, which lines trajectories of
different processes up step for step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import InvariantViolation, NetworkError
from .network import ComposedActivation, SocialNetwork, ThresholdCdf
from .streams import uniform_open_closed


@dataclass(frozen=True)
class ThresholdAssignment:
    theta: tuple[float, ...]
    reflected: tuple[float, ...] | None = None

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        if any(not 0.0 < t <= 1.0 for t in theta):
            raise ValueError("thresholds must lie in (0, 1]")
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return len(self.theta)


@dataclass(frozen=True)
class StagePlan:
    """Disjoint seed stages plus an optional antisense tail (all bitmasks)."""

    stages: tuple[int, ...]
    antisense_tail: int | None = None

    def __post_init__(self):
        stages = tuple(int(s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        seen = 0
        for s in stages:
            if s & seen:
                raise ValueError("overlapping stages")
            seen |= s
        if self.antisense_tail is not None and self.antisense_tail & seen:
            raise ValueError("antisense tail intersects the stages")

    @property
    def seeds(self) -> int:
        out = 0
        for s in self.stages:
            out |= s
        return out

    @property
    def K(self) -> int:
        return len(self.stages)


PlanLike = Union[StagePlan, int, Sequence[int]]


def as_plan(plan: PlanLike) -> StagePlan:
    if isinstance(plan, StagePlan):
        return plan
    if isinstance(plan, (int, np.integer)):
        return StagePlan((int(plan),))
    return StagePlan(tuple(plan))


@dataclass(frozen=True)
class Trajectory:
    sets: tuple[int, ...]
    stage_boundaries: tuple[int, ...]

    @property
    def terminal(self) -> int:
        return self.sets[-1] if self.sets else 0


def sample_thresholds(n: int, rng: np.random.Generator) -> ThresholdAssignment:
    return ThresholdAssignment(tuple(uniform_open_closed(rng, n)))


def _theta(thresholds) -> Sequence[float]:
    if isinstance(thresholds, ThresholdAssignment):
        return thresholds.theta
    return thresholds


def stage_slot(n: int) -> int:
    """Entries per stage in a literal trace.

    A stage injects its seeds and then adds at least one node per step, so
    ``n + 1`` entries always suffice.  The antisense rule with ``theta_v = 1``
    fires on a zero increment, so an empty ``X`` and tail can still need all
    ``n`` steps.
    """
    return n + 1


def _eager_stage(net, cur, theta, sets, literal, base=None):
    """Advance ``cur`` to its fixed point, appending each new set to ``sets``."""
    n = net.n
    start = len(sets) - 1
    while True:
        new = 0
        for v in range(n):
            if cur >> v & 1:
                continue
            fv = net.f(v, cur)
            if base is None:
                hit = fv >= theta[v]
            else:
                hit = fv - base[v] >= 1.0 - theta[v]
            if hit:
                new |= 1 << v
        if not new:
            break
        cur |= new
        sets.append(cur)
    if literal:
        if len(sets) - start > stage_slot(n):
            raise InvariantViolation("stage did not settle within n steps")
        sets.extend([cur] * (start + stage_slot(n) - len(sets)))
    return cur


def run(net: SocialNetwork, plan: PlanLike, thresholds, literal: bool = False) -> Trajectory:
    """Deterministic staged run ``Q(S^(1), ..., S^(K) | theta)``."""
    plan = as_plan(plan)
    if plan.antisense_tail is not None:
        raise ValueError("use run_antisense for plans with an antisense tail")
    theta = _theta(thresholds)
    sets: list[int] = []
    bounds: list[int] = []
    cur = 0
    for stage in plan.stages:
        cur |= stage
        bounds.append(len(sets))
        sets.append(cur)
        cur = _eager_stage(net, cur, theta, sets, literal)
    return Trajectory(tuple(sets), tuple(bounds))


def run_antisense(net: SocialNetwork, plan: StagePlan, thresholds, literal: bool = False) -> Trajectory:
    """``Q_-(S^(1), ..., S^(K); T | theta)``: staged run, then the antisense phase.

    After the stages settle at ``X``, the tail is added and an inactive node
    ``v`` joins once ``f_v(current) - f_v(X) >= 1 - theta_v``.
    """
    if plan.antisense_tail is None:
        raise ValueError("plan has no antisense tail")
    theta = _theta(thresholds)
    head = run(net, StagePlan(plan.stages), theta, literal=literal)
    sets = list(head.sets)
    X = head.terminal
    base = [net.f(v, X) for v in range(net.n)]
    cur = X | plan.antisense_tail
    bounds = list(head.stage_boundaries) + [len(sets)]
    sets.append(cur)
    _eager_stage(net, cur, theta, sets, literal, base=base)
    return Trajectory(tuple(sets), tuple(bounds))


def reflect_thresholds(net: SocialNetwork, thresholds, boundary: int) -> ThresholdAssignment:
    """Attach ``theta'_v = f_v(boundary) + 1 - theta_v`` for nodes outside ``boundary``.

    An ordinary run of the last stage under ``theta'`` reproduces the
    antisense phase started from ``boundary``.
    """
    theta = _theta(thresholds)
    refl = tuple(theta[v] if boundary >> v & 1 else net.f(v, boundary) + 1.0 - theta[v]
                 for v in range(net.n))
    return ThresholdAssignment(tuple(theta), refl)


def run_lazy(net: SocialNetwork, plan: PlanLike, rng: np.random.Generator) -> Trajectory:
    """Need-to-know run: thresholds are never drawn, only conditioned on.

    Each inactive node remembers the largest ``f_v`` it has survived; when
    ``f_v`` rises from ``lo`` to ``hi`` it activates with probability
    ``(hi - lo) / (1 - lo)``.  Survival levels persist across stages.
    """
    plan = as_plan(plan)
    if plan.antisense_tail is not None:
        raise ValueError("lazy runs do not take an antisense tail")
    n = net.n
    level = [0.0] * n
    sets: list[int] = []
    bounds: list[int] = []
    cur = 0
    for stage in plan.stages:
        cur |= stage
        bounds.append(len(sets))
        sets.append(cur)
        while True:
            new = 0
            for v in range(n):
                if cur >> v & 1:
                    continue
                hi, lo = net.f(v, cur), level[v]
                if hi <= lo:
                    continue
                if 1.0 - lo <= 0.0:
                    raise InvariantViolation(f"inactive node {v} survived f_v = 1")
                q = (hi - lo) / (1.0 - lo)
                if q >= 1.0 or rng.random() < q:
                    new |= 1 << v
                else:
                    level[v] = hi
            if not new:
                break
            cur |= new
            sets.append(cur)
    return Trajectory(tuple(sets), tuple(bounds))


def compose_cdfs(net: SocialNetwork, cdfs: Union[Sequence[ThresholdCdf], Mapping[int, ThresholdCdf]]) -> SocialNetwork:
    """Fold per-node threshold CDFs into the activations as ``F_v o f_v``."""
    if not isinstance(cdfs, Mapping):
        if len(cdfs) != net.n:
            raise NetworkError("one cdf per node required")
        cdfs = dict(enumerate(cdfs))
    acts = list(net.activations)
    for v, F in cdfs.items():
        if not isinstance(F, ThresholdCdf):
            F = ThresholdCdf(F)
        acts[v] = ComposedActivation(acts[v], F)
    return net.with_activations(acts)


def inverse_cdf_thresholds(cdfs: Sequence[ThresholdCdf], uniforms: Sequence[float]) -> ThresholdAssignment:
    """``theta_v = F_v^{-1}(U_v)``; values at 0 are nudged to the smallest positive float."""
    vals = [max(F.inverse(u), np.nextafter(0.0, 1.0)) for F, u in zip(cdfs, uniforms)]
    return ThresholdAssignment(tuple(vals))


# ---------------------------------------------------------------------------
# batch runners: one row per replicate
# ---------------------------------------------------------------------------


def _batch_fixpoint(net: SocialNetwork, state: np.ndarray, theta: np.ndarray, base=None) -> None:
    live = np.ones(state.shape[0], dtype=bool)
    acts = net.activations
    while live.any():
        rows = np.nonzero(live)[0]
        sub = state[rows]
        new = np.zeros_like(sub)
        for v, act in enumerate(acts):
            if base is None and act.degree == 0:
                continue
            cand = ~sub[:, v]
            if not cand.any():
                continue
            fv = act.batch(sub[cand])
            th = theta[rows[cand], v]
            if base is None:
                hit = fv >= th
            else:
                hit = fv - base[rows[cand], v] >= 1.0 - th
            new[cand, v] = hit
        changed = new.any(axis=1)
        state[rows] = sub | new
        live[rows] = changed


def _stage_masks(plan: StagePlan, n: int) -> list[np.ndarray]:
    return [np.array([bool(s >> v & 1) for v in range(n)], dtype=bool) for s in plan.stages]


def run_batch(net: SocialNetwork, plan: PlanLike, theta: np.ndarray) -> np.ndarray:
    """Terminal states (boolean ``(R, n)``) of eager runs, one per threshold row."""
    plan = as_plan(plan)
    theta = np.asarray(theta, dtype=float)
    state = np.zeros(theta.shape, dtype=bool)
    for seed in _stage_masks(plan, net.n):
        state |= seed
        _batch_fixpoint(net, state, theta)
    if plan.antisense_tail is not None:
        base = np.column_stack([a.batch(state) for a in net.activations]) if net.n else np.zeros(theta.shape)
        tail = np.array([bool(plan.antisense_tail >> v & 1) for v in range(net.n)], dtype=bool)
        state |= tail
        _batch_fixpoint(net, state, theta, base=base)
    return state


def states_to_masks(states: np.ndarray) -> np.ndarray:
    """Pack boolean rows into integer bitmasks (n <= 62)."""
    if states.shape[1] > 62:
        raise ValueError("too many nodes to pack into int64 masks")
    weights = np.left_shift(np.int64(1), np.arange(states.shape[1], dtype=np.int64))
    return states.astype(np.int64) @ weights
