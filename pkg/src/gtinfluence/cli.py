"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 a verification check
failed, 3 an internal invariant was violated.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (
    cascade_to_threshold,
    decreasing_witness,
    exact_cascade_distribution,
    run_cascade,
    threshold_to_cascade,
)
from .coupling import build_counterexample, run_coupled, verify_theta_grid, verify_trace
from .diffusion import StagePlan, run, run_antisense, run_lazy, sample_thresholds
from .errors import CapExceeded, InvariantViolation, NetworkError
from .generators import and_function
from .influence import (
    DEFAULT_CAP,
    ExactOracle,
    estimate_mc,
    exact_sigma,
    mc_distribution,
    required_replicates,
    sigma_table,
    sigma_violations,
    threshold_integration,
    tv_distance,
)
from .maximize import (
    ExactEvaluator,
    MCEvaluator,
    exhaustive_opt,
    greedy,
    heuristic_baseline,
    influence_curve,
)
from .network import SocialNetwork, check_properties, load_network, members
from .streams import SELECTION, SIMULATION, generator

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3

CHECKS = ("submodular-local", "submodular-global", "coupling", "piecemeal", "antisense", "cascade-equivalence")
METHODS = ("exact", "mc", "greedy-exact", "greedy-mc", "degree", "distance", "random", "exhaustive")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _read_network(args) -> tuple[SocialNetwork, str]:
    if not args.network:
        raise UsageError("--network is required")
    path = Path(args.network)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    raw = path.read_bytes()
    return load_network(raw.decode("utf-8"), strict=not args.lenient), hashlib.sha256(raw).hexdigest()


def _labels(text: str | None) -> list[str]:
    if not text:
        return []
    return [x.strip() for x in text.split(",") if x.strip()]


def _set(net: SocialNetwork, text: str | None) -> int:
    return net.mask(_labels(text))


def _stages(net: SocialNetwork, args) -> tuple[int, ...]:
    if getattr(args, "stages", None):
        return tuple(net.mask(_labels(group)) for group in args.stages.split(";"))
    return (_set(net, args.seeds),)


def _meta(args, digest) -> dict:
    return {"tool": "gtinfluence", "version": __version__, "command": args.command,
            "rng_seed": args.rng_seed, "network_sha256": digest}


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, digest, body: dict) -> None:
    body = dict(body)
    body["meta"] = _meta(args, digest)
    _emit(args, json.dumps(body, indent=2) + "\n")


def _evaluator(net, args, kind=None):
    kind = kind or args.eval or ("exact" if net.n <= DEFAULT_CAP else "mc")
    if kind == "exact":
        return ExactEvaluator(net)
    return MCEvaluator(net, replicates=args.replicates, epsilon=args.epsilon, confidence=args.confidence,
                       seed=args.rng_seed, workers=args.workers)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    net, digest = _read_network(args)
    rng = generator(args.rng_seed, SIMULATION)
    stages = _stages(net, args)
    body: dict = {"mode": args.mode}
    if args.mode == "cascade":
        seeds = 0
        for s in stages:
            seeds |= s
        body["terminal"] = net.labels_of(run_cascade(threshold_to_cascade(net), seeds, rng))
        _emit_json(args, digest, body)
        return EXIT_OK
    if args.mode == "lazy":
        traj = run_lazy(net, StagePlan(stages), rng)
    else:
        theta = sample_thresholds(net.n, rng)
        body["theta"] = list(theta.theta)
        if args.mode == "antisense":
            tail = _set(net, args.tail)
            traj = run_antisense(net, StagePlan(stages, antisense_tail=tail), theta)
        else:
            traj = run(net, StagePlan(stages), theta)
    body.update({"trajectory": [net.labels_of(S) for S in traj.sets],
                 "stage_boundaries": list(traj.stage_boundaries),
                 "terminal": net.labels_of(traj.terminal)})
    _emit_json(args, digest, body)
    return EXIT_OK


def cmd_influence(args) -> int:
    net, digest = _read_network(args)
    plan = StagePlan(_stages(net, args))
    method = args.method or ("exact" if net.n <= DEFAULT_CAP else "mc")
    if method == "exact":
        body = exact_sigma(net, plan).to_json(net)
    elif method == "mc":
        R = args.replicates or required_replicates(1.0, args.epsilon, args.confidence)
        body = estimate_mc(net, plan, replicates=R, confidence=args.confidence, seed=args.rng_seed,
                           workers=args.workers).to_json()
    else:
        raise UsageError(f"influence takes --method exact|mc, not {method}")
    _emit_json(args, digest, body)
    return EXIT_OK


def cmd_maximize(args) -> int:
    net, digest = _read_network(args)
    method = args.method or "greedy-exact"
    k = args.k
    if k is None or not 0 <= k <= net.n:
        raise UsageError(f"--k must lie in [0, {net.n}]")
    if method == "greedy-exact":
        res = greedy(net, k, ExactEvaluator(net), method=method)
    elif method == "greedy-mc":
        res = greedy(net, k, _evaluator(net, args, "mc"), method=method)
    elif method == "exhaustive":
        res = exhaustive_opt(net, k, ExactEvaluator(net))
    elif method in ("degree", "distance", "random"):
        res = heuristic_baseline(net, method, k, rng=generator(args.rng_seed, SELECTION),
                                 evaluator=_evaluator(net, args))
    else:
        raise UsageError(f"maximize does not take --method {method}")
    _emit_json(args, digest, res.to_json(net))
    return EXIT_OK


def cmd_curve(args) -> int:
    net, digest = _read_network(args)
    methods = _labels(args.method) or ["greedy-exact", "degree", "distance", "random"]
    k_max = net.n if args.k_max is None else args.k_max
    if not 0 <= k_max <= net.n:
        raise UsageError(f"--k-max must lie in [0, {net.n}]")
    rows = []
    for method in methods:
        if method not in ("greedy-exact", "greedy-mc", "degree", "distance", "random", "exhaustive"):
            raise UsageError(f"curve does not take method {method}")
        kind = "exact" if method in ("greedy-exact", "exhaustive") else ("mc" if method == "greedy-mc" else None)
        ev = _evaluator(net, args, kind)
        rng = generator(args.rng_seed, SELECTION)
        for row in influence_curve(net, k_max, [method], ev, rng=rng):
            rows.append(row)
    if args.format == "json":
        _emit_json(args, digest, {"rows": rows})
    else:
        buf = io.StringIO()
        for key, val in _meta(args, digest).items():
            buf.write(f"# {key}: {val}\n")
        writer = csv.DictWriter(buf, fieldnames=["k", "method", "value", "ci"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        _emit(args, buf.getvalue())
    figure = args.figure or (str(Path(args.out).with_suffix(".png")) if args.out and not args.no_figure else None)
    if figure:
        from .plotting import plot_influence_curve
        plot_influence_curve(rows, figure, title=Path(args.network).stem)
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if args.function:
        raw = Path(args.function).read_bytes()
        doc = json.loads(raw)
        labels, values = tuple(doc["nodes"]), np.asarray(doc["values"], dtype=float)
        digest = hashlib.sha256(raw).hexdigest()
    else:
        labels, values = and_function()
        digest = "builtin:and"
    index = {lab: i for i, lab in enumerate(labels)}

    def pick(text, default):
        names = _labels(text) if text else default
        try:
            return sum(1 << index[x] for x in names)
        except KeyError as e:
            raise UsageError(f"unknown label {e.args[0]!r}") from None

    A = pick(args.seeds, [labels[0]])
    B = pick(args.seeds_b, [labels[1]] if len(labels) > 1 else [])
    try:
        cx = build_counterexample(values, labels, A, B)
    except ValueError as e:
        if "no violation" in str(e):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        raise
    if args.network_out:
        Path(args.network_out).write_text(json.dumps(cx.network.to_document(), indent=2) + "\n")
    _emit_json(args, digest, cx.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check_local(net, args):
    nodes, witness = {}, None
    for v, act in enumerate(net.activations):
        rep = check_properties(act)
        nodes[net.labels[v]] = {"monotone": rep.monotone, "submodular": rep.submodular,
                                "normalized_submodular": rep.normalized_submodular}
        if witness is None and not (rep.monotone and rep.submodular):
            wit, prop = (rep.monotone_witness, "monotone") if not rep.monotone else (rep.submodular_witness, "submodular")
            witness = {"node": net.labels[v], "property": prop, "S": net.labels_of(wit.S),
                       "T": net.labels_of(wit.T), "v": net.labels[wit.v], "margins": list(wit.margins)}
    wrep = check_properties(net.weight)
    if witness is None and not (wrep.monotone and wrep.submodular):
        wit = wrep.monotone_witness or wrep.submodular_witness
        witness = {"node": None, "property": "weight", "S": net.labels_of(wit.S),
                   "T": net.labels_of(wit.T), "v": net.labels[wit.v], "margins": list(wit.margins)}
    return witness is None, {"nodes": nodes, "witness": witness}


def _check_global(net, args):
    sig = sigma_table(net)
    mono, sub = sigma_violations(sig, net.n)
    witness = None
    if sub is not None:
        A, B, lhs, rhs = sub
        witness = {"property": "submodular", "A": net.labels_of(A), "B": net.labels_of(B), "lhs": lhs, "rhs": rhs}
    elif mono is not None:
        S, v, a, b = mono
        witness = {"property": "monotone", "S": net.labels_of(S), "v": net.labels[v], "sigma_S": a, "sigma_Sv": b}
    return witness is None, {"pairs_checked": (1 << net.n) ** 2, "witness": witness}


def _check_coupling(net, args):
    rng = generator(args.rng_seed, SIMULATION)
    fixed = args.seeds is not None or args.seeds_b is not None
    A0, B0 = _set(net, args.seeds), _set(net, args.seeds_b)
    traces = args.replicates or 1000
    for i in range(traces):
        if fixed:
            A, B = A0, B0
        else:
            A = int(sum(1 << v for v in np.nonzero(rng.random(net.n) < 0.5)[0]))
            B = int(sum(1 << v for v in np.nonzero(rng.random(net.n) < 0.5)[0]))
        trace = run_coupled(net, A, B, rng)
        rep = verify_trace(trace, net)
        if not rep.ok:
            w = rep.witness
            return False, {"traces": i + 1, "witness": {
                "A": net.labels_of(A), "B": net.labels_of(B), "t": w.t, "check": w.check,
                "node": None if w.node is None else net.labels[w.node],
                "theta": list(trace.thresholds.theta), "trace": trace.to_json(net)}}
    body = {"traces": traces}
    if net.n <= 4:
        pairs = [(A0, B0)] if fixed else [(A, B) for A in range(1 << net.n) for B in range(1 << net.n)]
        if fixed or net.n <= 3:
            classes = 0
            for A, B in pairs:
                res = verify_theta_grid(net, A, B, args.grid_step)
                classes += res.classes
                if not res.ok:
                    theta, rep = res.failure
                    return False, {"traces": traces, "grid_step": args.grid_step, "witness": {
                        "A": net.labels_of(A), "B": net.labels_of(B), "t": rep.witness.t,
                        "check": rep.witness.check, "theta": list(theta.theta)}}
            body.update({"grid_step": args.grid_step, "grid_pairs": len(pairs), "grid_classes": classes})
    return True, body


def _check_piecemeal(net, args):
    S = _set(net, args.seeds) if args.seeds else net.full
    elems = members(S)
    if len(elems) > 8:
        raise UsageError("piecemeal check enumerates 3^|S| partitions; use at most 8 seeds")
    oracle = ExactOracle(net)
    base = oracle.distribution(S)
    worst, count, witness = 0.0, 0, None
    for K in (1, 2, 3):
        for assign in itertools.product(range(K), repeat=len(elems)):
            stages = [0] * K
            for v, k in zip(elems, assign):
                stages[k] |= 1 << v
            tv = tv_distance(base, oracle.distribution(StagePlan(tuple(stages))))
            count += 1
            if tv > worst:
                worst = tv
            if tv > 1e-9 and witness is None:
                witness = {"stages": [net.labels_of(s) for s in stages], "tv": tv}
    return witness is None, {"partitions": count, "max_tv": worst, "witness": witness}


def _check_antisense(net, args):
    stages = _stages(net, args)
    seeds = 0
    for s in stages:
        seeds |= s
    tail = _set(net, args.tail) if args.tail else net.full & ~seeds
    minus = StagePlan(stages, antisense_tail=tail)
    direct = StagePlan(stages + (tail,))
    try:
        p = threshold_integration(net, minus)
        q = ExactOracle(net).distribution(direct)
        tv, tol, route = tv_distance(p, q), 1e-9, "exact"
    except CapExceeded:
        R = args.replicates or 1_000_000
        p = mc_distribution(net, minus, R, seed=args.rng_seed, workers=args.workers)
        q = mc_distribution(net, direct, R, seed=args.rng_seed + 1, workers=args.workers)
        tv, tol, route = tv_distance(p, q), 0.01, "monte-carlo"
    return tv <= tol, {"route": route, "tv": tv, "tolerance": tol, "tail": net.labels_of(tail)}


def _check_cascade(net, args):
    spec = threshold_to_cascade(net)
    back = cascade_to_threshold(spec, check_order=all(len(nd.neighbors) <= 8 for nd in spec.nodes))
    problems = []
    f_gap = max((float(np.max(np.abs(a.table() - b.table()))) for a, b in zip(net.activations, back.activations)
                 if a.degree), default=0.0)
    if f_gap > 1e-9:
        problems.append({"roundtrip_f_gap": f_gap})
    again = threshold_to_cascade(back)
    p_gap = 0.0
    for x, y in zip(spec.nodes, again.nodes):
        if x.neighbors:
            live = ~x.unreachable & ~np.isnan(x.probs)
            if live.any():
                p_gap = max(p_gap, float(np.max(np.abs(x.probs[live] - y.probs[live]))))
    if p_gap > 1e-9:
        problems.append({"roundtrip_p_gap": p_gap})
    for v, (act, node) in enumerate(zip(net.activations, spec.nodes)):
        norm = check_properties(act).normalized_submodular
        dec = decreasing_witness(node) is None
        if norm != dec:
            problems.append({"node": net.labels[v], "normalized": norm, "decreasing": dec})
    seeds_list = [_set(net, args.seeds)] if args.seeds else [1 << v for v in range(net.n)]
    oracle = ExactOracle(net)
    tv = 0.0
    for S in seeds_list:
        tv = max(tv, tv_distance(exact_cascade_distribution(spec, S), oracle.distribution(S)))
    if tv > 1e-9:
        problems.append({"distribution_tv": tv})
    return not problems, {"roundtrip_f_gap": f_gap, "roundtrip_p_gap": p_gap, "max_tv": tv,
                          "problems": problems}


VERIFIERS = {
    "submodular-local": _check_local,
    "submodular-global": _check_global,
    "coupling": _check_coupling,
    "piecemeal": _check_piecemeal,
    "antisense": _check_antisense,
    "cascade-equivalence": _check_cascade,
}


def cmd_verify(args) -> int:
    net, digest = _read_network(args)
    passed, body = VERIFIERS[args.check](net, args)
    _emit_json(args, digest, {"check": args.check, "passed": passed, **body})
    return EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--network", help="network JSON document")
    common.add_argument("--seeds", help="comma-separated seed labels")
    common.add_argument("--rng-seed", type=int, default=0, help="master RNG seed (default 0)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--method", help="one of: " + ", ".join(METHODS))
    common.add_argument("--replicates", type=int)
    common.add_argument("--confidence", type=float, default=0.95)
    common.add_argument("--epsilon", type=float, default=0.05,
                        help="Hoeffding radius as a fraction of the weight range")
    common.add_argument("--k", type=int)
    common.add_argument("--k-max", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--eval", choices=("exact", "mc"), help="evaluator for baselines")
    common.add_argument("--lenient", action="store_true", help="skip monotonicity / order checks on load")

    parser = _Parser(prog="gtinfluence", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="one diffusion run")
    p.add_argument("--mode", choices=("eager", "lazy", "antisense", "cascade"), default="eager")
    p.add_argument("--stages", help="seed stages, groups separated by ';'")
    p.add_argument("--tail", help="antisense tail labels")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("influence", parents=[common], help="sigma_w of a seed set")
    p.add_argument("--stages", help="seed stages, groups separated by ';'")
    p.set_defaults(handler=cmd_influence)

    p = sub.add_parser("maximize", parents=[common], help="choose k seeds")
    p.set_defaults(handler=cmd_maximize)

    p = sub.add_parser("verify", parents=[common], help="run one property suite")
    p.add_argument("--check", choices=CHECKS, required=True)
    p.add_argument("--seeds-b", help="second seed set (coupling)")
    p.add_argument("--stages", help="seed stages, groups separated by ';'")
    p.add_argument("--tail", help="antisense tail labels")
    p.add_argument("--grid-step", type=float, default=1e-2)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("counterexample", parents=[common], help="non-submodular influence from a non-submodular f")
    p.add_argument("--function", help='JSON {"nodes": [...], "values": [...]}; default AND on x,y')
    p.add_argument("--seeds-b", help="second set B")
    p.add_argument("--network-out", help="also write the constructed network document here")
    p.set_defaults(handler=cmd_counterexample)

    p = sub.add_parser("curve", parents=[common], help="influence against k, as CSV plus a figure")
    p.add_argument("--figure", help="figure path (default: next to --out, .png)")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(handler=cmd_curve, format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.handler(args)
    except InvariantViolation as e:
        print(f"internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UsageError, NetworkError, CapExceeded, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
