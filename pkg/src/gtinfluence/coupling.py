"""The four-process coupling behind global submodularity.

Under one shared threshold vector the processes

    A ~ Q(A&B, A-B, {})          B ~ Q_-(A&B, {}; B-A)
    C ~ Q(A&B, {}, {})           D ~ Q_-(A&B, A-B; B-A)

are run side by side for ``3n`` steps.  When every activation function is
monotone and submodular, ``C_t <= A_t & B_t`` and ``D_t <= A_t | B_t`` hold at
every step, which after taking expectations gives
``sigma(A) + sigma(B) >= sigma(A&B) + sigma(A|B)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    StagePlan,
    ThresholdAssignment,
    run,
    run_antisense,
    run_batch,
    sample_thresholds,
    stage_slot,
)
from .errors import NetworkError
from .influence import ExactOracle
from .network import TOL, SocialNetwork, TableActivation, WeightFunction, members, zero_activation


def coupled_plans(A: int, B: int) -> dict[str, StagePlan]:
    C = A & B
    return {
        "A": StagePlan((C, A & ~B, 0)),
        "B": StagePlan((C, 0), antisense_tail=B & ~A),
        "C": StagePlan((C, 0, 0)),
        "D": StagePlan((C, A & ~B), antisense_tail=B & ~A),
    }


@dataclass(frozen=True)
class CouplingTrace:
    A_seed: int
    B_seed: int
    thresholds: ThresholdAssignment
    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]
    D: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.thresholds)

    @property
    def steps(self) -> int:
        return len(self.A)

    def to_json(self, net: SocialNetwork) -> dict:
        return {
            "A": net.labels_of(self.A_seed),
            "B": net.labels_of(self.B_seed),
            "theta": list(self.thresholds.theta),
            "phase_boundaries": [stage_slot(net.n), 2 * stage_slot(net.n)],
            "steps": [[net.labels_of(s) for s in sets] for sets in zip(self.A, self.B, self.C, self.D)],
        }


def run_coupled(net: SocialNetwork, A: int, B: int, rng: np.random.Generator | None = None,
                thresholds: ThresholdAssignment | None = None) -> CouplingTrace:
    """Run the four coupled processes under one threshold draw."""
    if thresholds is None:
        thresholds = sample_thresholds(net.n, rng)
    plans = coupled_plans(A, B)
    sets = {}
    for name, plan in plans.items():
        runner = run_antisense if plan.antisense_tail is not None else run
        sets[name] = runner(net, plan, thresholds, literal=True).sets
    return CouplingTrace(A, B, thresholds, sets["A"], sets["B"], sets["C"], sets["D"])


def run_coupled_batch(net: SocialNetwork, A: int, B: int, theta: np.ndarray) -> dict[str, np.ndarray]:
    """Terminal states of the four processes, one row per threshold vector."""
    return {name: run_batch(net, plan, theta) for name, plan in coupled_plans(A, B).items()}


@dataclass(frozen=True)
class Violation:
    t: int
    check: str
    node: int | None
    sets: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CouplingReport:
    containment_ok: tuple[bool, ...]
    phase_ok: tuple[bool, ...]
    omega1_ok: tuple[bool, ...]
    omega2_ok: tuple[bool, ...]
    witness: Violation | None

    @property
    def ok(self) -> bool:
        return self.witness is None


def verify_trace(trace: CouplingTrace, net: SocialNetwork, tol: float = TOL) -> CouplingReport:
    """Check the containments, the phase equalities and both induction conditions."""
    n = net.n
    L = stage_slot(n)
    if trace.n != n or any(len(s) != 3 * L for s in (trace.A, trace.B, trace.C, trace.D)):
        raise ValueError("trace does not match the network")
    A, B, C, D = trace.A, trace.B, trace.C, trace.D
    found: list[Violation] = []

    def flag(v: Violation):
        if not found:
            found.append(v)

    containment, phase = [], []
    for t in range(3 * L):
        inter_ok = C[t] & ~(A[t] & B[t]) == 0
        union_ok = D[t] & ~(A[t] | B[t]) == 0
        containment.append(inter_ok and union_ok)
        if not inter_ok:
            flag(Violation(t, "C_t <= A_t & B_t", members(C[t] & ~(A[t] & B[t]))[0],
                           {"A": A[t], "B": B[t], "C": C[t]}))
        if not union_ok:
            flag(Violation(t, "D_t <= A_t | B_t", members(D[t] & ~(A[t] | B[t]))[0],
                           {"A": A[t], "B": B[t], "D": D[t]}))
        if t < 2 * L:
            eq = B[t] == C[t] and D[t] == A[t]
            phase.append(eq)
            if not eq:
                flag(Violation(t, "B_t = C_t and D_t = A_t", None,
                               {"A": A[t], "B": B[t], "C": C[t], "D": D[t]}))

    omega1, omega2 = [], []
    b0, d0 = B[2 * L - 1], D[2 * L - 1]
    outside = [v for v in range(n) if not D[2 * L] >> v & 1]
    base_b = {v: net.f(v, b0) for v in outside}
    base_d = {v: net.f(v, d0) for v in outside}
    for t in range(2 * L, 3 * L):
        extra = (D[t] & ~d0) & ~(B[t] & ~b0)
        omega1.append(extra == 0)
        if extra:
            flag(Violation(t, "Omega1", members(extra)[0], {"B": B[t], "D": D[t], "B0": b0, "D0": d0}))
        ok2 = True
        for v in outside:
            if net.f(v, B[t]) - base_b[v] < net.f(v, D[t]) - base_d[v] - tol:
                ok2 = False
                flag(Violation(t, "Omega2", v, {"B": B[t], "D": D[t], "B0": b0, "D0": d0}))
                break
        omega2.append(ok2)
    return CouplingReport(tuple(containment), tuple(phase), tuple(omega1), tuple(omega2),
                          found[0] if found else None)


# ---------------------------------------------------------------------------
# theta-grid mode
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridResult:
    points: int
    classes: int
    failure: tuple[ThresholdAssignment, CouplingReport] | None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _grid_classes(net: SocialNetwork, grid: np.ndarray) -> list[list[tuple[float, int]]]:
    """Per node, one representative grid value per comparison signature and its multiplicity.

    The coupled runs compare ``theta_v`` only against values ``f_v(S)`` and
    ``1 - theta_v`` only against differences ``f_v(S) - f_v(S')``, so two
    grid values with the same outcomes on all of those produce identical
    traces.
    """
    out = []
    for act in net.activations:
        vals = np.unique(act.table())
        diffs = np.unique((vals[:, None] - vals[None, :]).ravel())
        groups: dict[tuple, list] = {}
        for th in grid:
            sig = tuple(vals >= th) + tuple(diffs >= 1.0 - th)
            if sig in groups:
                groups[sig][1] += 1
            else:
                groups[sig] = [float(th), 1]
        out.append([(g[0], g[1]) for g in groups.values()])
    return out


def verify_theta_grid(net: SocialNetwork, A: int, B: int, step: float = 1e-2) -> GridResult:
    """Check the coupling for every threshold vector on the grid ``{step, 2 step, ..., 1}^n``."""
    N = int(round(1.0 / step))
    grid = np.arange(1, N + 1) / N
    classes = _grid_classes(net, grid)
    covered = 0
    count = 0
    for combo in itertools.product(*classes):
        theta = ThresholdAssignment(tuple(th for th, _ in combo))
        report = verify_trace(run_coupled(net, A, B, thresholds=theta), net)
        count += 1
        mult = 1
        for _, c in combo:
            mult *= c
        covered += mult
        if not report.ok:
            return GridResult(covered, count, (theta, report))
    return GridResult(covered, count, None)


# ---------------------------------------------------------------------------
# necessity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    network: SocialNetwork
    A: int
    B: int
    sigma: dict[str, float]

    @property
    def lhs(self) -> float:
        return self.sigma["A"] + self.sigma["B"]

    @property
    def rhs(self) -> float:
        return self.sigma["A&B"] + self.sigma["A|B"]

    def to_json(self) -> dict:
        net = self.network
        return {"A": net.labels_of(self.A), "B": net.labels_of(self.B), "sigma": self.sigma,
                "lhs": self.lhs, "rhs": self.rhs, "strict": self.lhs < self.rhs,
                "network": net.to_document()}


def build_counterexample(values, labels, A: int, B: int, extra_label: str = "v*",
                         tol: float = TOL) -> Counterexample:
    """Network on ``V + {v*}`` whose influence is not submodular at ``(A, B)``.

    ``values`` tabulates ``f`` over bitmasks of ``labels``.  The extra node
    uses ``f`` as its activation; every original node has ``f_v = 0`` so
    nothing propagates inside ``V`` and ``sigma(S) = |S| + f(S)``.
    """
    values = np.asarray(values, dtype=float)
    m = len(labels)
    if values.shape != (1 << m,):
        raise NetworkError(f"f needs {1 << m} values")
    if values[A] + values[B] >= values[A & B] + values[A | B] - tol:
        raise ValueError("no violation: f is submodular at this pair")
    if extra_label in labels:
        raise NetworkError(f"label {extra_label!r} already used")
    acts = [zero_activation() for _ in range(m)] + [TableActivation(tuple(range(m)), values)]
    net = SocialNetwork(tuple(labels) + (extra_label,), tuple(acts), WeightFunction.cardinality(m + 1))
    oracle = ExactOracle(net)
    sigma = {name: oracle.sigma(S) for name, S in
             (("A", A), ("B", B), ("A&B", A & B), ("A|B", A | B))}
    return Counterexample(net, A, B, sigma)
