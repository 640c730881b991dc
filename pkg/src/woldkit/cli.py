"""Command-line front end: ``woldkit check|decompose|fixture|verify``.

Exit codes: 0 accepted, 2 rejected at the gate, 3 unreadable input,
4 unresolved or failed verification, 5 resource cap exceeded.
"""

import argparse
import sys
import time
from itertools import combinations

import numpy as np

from . import manifest as io
from .exceptions import (
    ConsistencyError,
    DecompositionError,
    DomainError,
    GateError,
    InputError,
    ResourceError,
    WoldkitError,
)
from .fixtures import (
    FixtureSpec,
    build_fixture,
    check_equivalence_conditions,
    polydisc_spec,
    random_spec,
    truncated_shift,
)
from .multi import (
    compare_decompositions,
    decompose_direct,
    decompose_recursive,
    format_label,
    generalized_wandering_identity,
    partial_depth_agreement,
    wandering_intersection,
)
from .operators import IsometryTuple, check_gate, reducing_defect
from .subspace import intersect, orthonormalize, subspace_distance
from .wold import wandering_subspace, wold_decompose

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_PARSE = 3
EXIT_UNRESOLVED = 4
EXIT_RESOURCE = 5

STATUS_EXIT = {"accepted": EXIT_OK, "rejected": EXIT_REJECTED, "unresolved": EXIT_UNRESOLVED}

PRESETS = ("polydisc", "slocinski-mixed", "shift-unitary", "all-unitary", "random", "jordan-pair")


def _r(x):
    """Round a residual to 4 significant digits so reports diff cleanly."""
    return float(f"{float(x):.4g}")


def _emit(args, doc, lines):
    for line in lines:
        print(line)
    if getattr(args, "json", None):
        io.atomic_write(args.json, io.dumps(doc))


def _load(args):
    t, overrides = io.load_manifest(args.manifest)
    cfg = io.config_from(overrides)
    cfg = cfg.with_overrides(
        rank_tol=args.rank_tol, residual_tol=args.residual_tol, max_power=args.max_power
    )
    return t, cfg


def _defects_doc(t):
    d = t.defects
    return {
        "isometry_defect": [_r(x) for x in d.isometry_defect],
        "interior_isometry_defect": [_r(x) for x in d.interior_isometry_defect],
        "commutation_defect": _r(d.commutation_defect),
        "double_commutation_defect": _r(d.double_commutation_defect),
    }


def _defect_lines(t, cfg):
    d = t.defects
    lines = [f"{'operator':<10}{'isometry':>14}{'interior':>14}"]
    for i, (a, b) in enumerate(zip(d.isometry_defect, d.interior_isometry_defect), start=1):
        lines.append(f"{'V_' + str(i):<10}{a:>14.3e}{b:>14.3e}")
    lines.append(f"commutation defect        {d.commutation_defect:.3e}")
    lines.append(f"double commutation defect {d.double_commutation_defect:.3e}")
    return lines


def cmd_check(args):
    t, cfg = _load(args)
    reasons = t.defects.gate_failures(cfg)
    status = "rejected" if reasons else "accepted"
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "check",
        "status": status,
        "n": t.n,
        "ambient_dim": t.dim,
        "defects": _defects_doc(t),
        "reasons": reasons,
    }
    lines = _defect_lines(t, cfg) + [f"status: {status}"] + [f"  {r}" for r in reasons]
    _emit(args, doc, lines)
    return STATUS_EXIT[status]


def _block_rows(res):
    rows = []
    for A, b in res.blocks.items():
        rows.append({
            "label": list(A),
            "dim": b.dim,
            "classification": list(b.classification) if b.classification else None,
            "residuals": {k: _r(v) for k, v in b.residuals.items()},
        })
    return rows


def _block_lines(res):
    lines = [f"{'label':<12}{'dim':>6}  {'classification':<28}{'reducing':>10}"]
    for A, b in res.blocks.items():
        cls = ",".join(b.classification) if b.classification else "-"
        lines.append(f"{format_label(A):<12}{b.dim:>6}  {cls:<28}{b.residuals['reducing']:>10.2e}")
    return lines


def _check_oracle(res, path):
    expected = io.load_oracle(path)
    got = res.dims()
    mismatches = [
        {"label": list(A), "expected": expected.get(A, 0), "computed": got.get(A, 0)}
        for A in sorted(set(expected) | set(got))
        if expected.get(A, 0) != got.get(A, 0)
    ]
    return {"match": not mismatches, "mismatches": mismatches}


def cmd_decompose(args):
    t, cfg = _load(args)
    m = args.depth if args.depth is not None else t.n
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "decompose",
        "n": t.n,
        "ambient_dim": t.dim,
        "depth": m,
        "method": args.method,
        "defects": _defects_doc(t),
    }
    started = time.perf_counter()
    try:
        check_gate(t, cfg)
    except GateError as exc:
        doc["status"] = "rejected"
        doc["messages"] = [str(exc)]
        _emit(args, doc, _defect_lines(t, cfg) + [f"status: rejected ({exc})"])
        return EXIT_REJECTED
    methods = ["direct", "recursive"] if args.method == "both" else [args.method]
    results, messages = {}, []
    status = "accepted"
    for name in methods:
        fn = decompose_direct if name == "direct" else decompose_recursive
        try:
            results[name] = fn(t, m, cfg)
        except (DecompositionError, ConsistencyError, DomainError) as exc:
            status = "unresolved"
            messages.append(f"{name}: {exc}")
            continue
        if results[name].status != "accepted":
            status = "unresolved"
            messages.extend(f"{name}: {msg}" for msg in results[name].failures)
    lines = _defect_lines(t, cfg)
    if results:
        primary = results[methods[0]] if methods[0] in results else next(iter(results.values()))
        doc["blocks"] = _block_rows(primary)
        doc["global_residuals"] = {
            k: (v if isinstance(v, int) else _r(v)) for k, v in primary.residuals.items()
        }
        doc["marginal_rank"] = list(primary.marginal)
        lines += [""] + _block_lines(primary)
        lines += [f"marginal rank decision: {note}" for note in primary.marginal]
        if len(results) == 2:
            angles = compare_decompositions(results["direct"], results["recursive"])
            doc["agreement"] = [{"label": list(A), "max_angle": _r(a)} for A, a in angles.items()]
            worst = max(angles.values())
            lines.append(f"direct vs recursive: max principal angle {worst:.2e}")
            if worst > cfg.residual_tol:
                status = "unresolved"
                messages.append(f"methods disagree (max angle {worst:.3e})")
        if args.oracle:
            check = _check_oracle(primary, args.oracle)
            doc["oracle"] = check
            lines.append(f"oracle: {'match' if check['match'] else 'MISMATCH'}")
            if not check["match"]:
                status = "unresolved"
                messages.append("block dimensions differ from the oracle")
    doc["status"] = status
    doc["messages"] = messages
    if args.timing:
        doc["timing_seconds"] = time.perf_counter() - started
    lines.append(f"status: {status}")
    lines += [f"  {msg}" for msg in messages]
    _emit(args, doc, lines)
    return STATUS_EXIT[status]


def _jordan_pair():
    J = truncated_shift(3)
    return IsometryTuple((J, J), np.diag([1.0, 1.0, 0.0]))


def _fixture_spec(args):
    seed = args.seed
    if args.spec:
        spec = FixtureSpec.from_dict(io.load_json(args.spec))
        if seed is not None:
            spec = FixtureSpec(spec.n, spec.blocks, seed, spec.max_dim)
        return spec
    preset = args.preset
    if preset == "polydisc":
        return polydisc_spec(args.e, args.D, args.n or 2, scramble_seed=seed)
    if preset == "slocinski-mixed":
        return FixtureSpec.simple(
            2, {(1, 2): 1, (1,): 1, (2,): 1, (): 1}, depths=(2, 2), unitary_dims=(1, 1),
            scramble_seed=seed,
        )
    if preset == "shift-unitary":
        return FixtureSpec.simple(2, {(1,): 1}, depths=(3, 3), unitary_dims=(3, 3), scramble_seed=seed)
    if preset == "all-unitary":
        n = args.n or 2
        return FixtureSpec.simple(n, {(): 1}, unitary_dims=(3,) * n, scramble_seed=seed)
    if preset == "random":
        return random_spec(args.n or 3, seed if seed is not None else 0, scramble=True)
    raise InputError(f"unknown preset {preset!r}")


def cmd_fixture(args):
    if args.preset == "jordan-pair":
        t, oracle, cfg = _jordan_pair(), None, None
    else:
        spec = _fixture_spec(args)
        if args.max_dim is not None:
            spec = FixtureSpec(spec.n, spec.blocks, spec.scramble_seed, args.max_dim)
        t, oracle = build_fixture(spec)
        cfg = spec.tolerances().with_overrides(rank_tol=args.rank_tol, residual_tol=args.residual_tol,
                                               max_power=args.max_power)
    io.write_manifest(args.out, t, io.tolerance_dict(cfg) if cfg else None, args.mtx)
    if args.oracle:
        if oracle is None:
            raise InputError("the jordan-pair preset has no oracle")
        io.write_oracle(args.oracle, oracle)
    print(f"wrote {args.out} (n={t.n}, ambient_dim={t.dim})")
    if oracle is not None:
        for A, d in oracle.block_dims.items():
            print(f"  {format_label(A):<12}{d:>6}")
    return EXIT_OK


def _row(name, passed, value=None, informational=False):
    return {"check": name, "passed": bool(passed),
            "value": None if value is None else _r(value), "informational": informational}


def _suite_wold(t, cfg):
    rows = []
    for i, V in enumerate(t.operators, start=1):
        try:
            wd = wold_decompose(V, cfg, interior=t.interior)
            rows.append(_row(
                f"Wold V_{i}: {wd.classification} dim H_s={wd.shift_part.dim} "
                f"dim H_u={wd.unitary_part.dim} multiplicity={wd.multiplicity}",
                wd.status == "accepted",
                max(v for k, v in wd.residuals.items() if k != "isometry_defect"),
            ))
        except WoldkitError as exc:
            rows.append(_row(f"Wold V_{i}: {exc}", False))
    return rows


def _suite_multi(t, cfg):
    rows = []
    full = {}
    for name, fn in (("direct", decompose_direct), ("recursive", decompose_recursive)):
        try:
            full[name] = fn(t, t.n, cfg)
            rows.append(_row(f"{name} decomposition (m={t.n})", full[name].status == "accepted",
                             full[name].residuals["orthogonality"]))
        except WoldkitError as exc:
            rows.append(_row(f"{name} decomposition: {exc}", False))
    if len(full) == 2:
        for A, angle in compare_decompositions(full["direct"], full["recursive"]).items():
            rows.append(_row(f"direct = recursive on {format_label(A)}", angle <= cfg.residual_tol, angle))
    if "direct" in full:
        for m in range(2, t.n):
            try:
                coarse = decompose_direct(t, m, cfg)
            except WoldkitError as exc:
                rows.append(_row(f"depth {m} decomposition: {exc}", False))
                continue
            for A, (d1, d2, angle) in partial_depth_agreement(coarse, full["direct"], cfg).items():
                rows.append(_row(f"depth {m} block {format_label(A)} = join of depth {t.n} blocks",
                                 d1 == d2 and angle <= cfg.residual_tol, angle))
    return rows


def _suite_identities(t, cfg):
    rows = []
    coords = range(1, t.n + 1)
    labels = [A for r in range(1, t.n + 1) for A in combinations(coords, r)]
    W = {i: wandering_subspace(t[i - 1], cfg) for i in coords}
    for A in labels:
        if len(A) > 1:
            product = np.eye(t.dim)
            for i in A:
                product = product @ (np.eye(t.dim) - t[i - 1] @ t[i - 1].conj().T)
            angle = subspace_distance(orthonormalize(product, cfg, scale=1.0),
                                      intersect([W[i] for i in A], cfg))
            rows.append(_row(f"ran prod(I - V_iV_i*) = & W_i for {format_label(A)}",
                             angle <= cfg.residual_tol, angle))
    for A in labels:
        try:
            W_A = wandering_intersection(t, A, cfg)
        except ConsistencyError as exc:
            rows.append(_row(f"W_{format_label(A)}: {exc}", False))
            continue
        for j in coords:
            if j in A:
                continue
            defect = reducing_defect(t[j - 1], W_A)
            rows.append(_row(f"W_{format_label(A)} reduces V_{j}", defect <= cfg.residual_tol, defect))
            try:
                rep = generalized_wandering_identity(t, A, j, cfg)
                rows.append(_row(f"W_{format_label(A)} - V_{j}W_{format_label(A)} = W_{format_label(A)} & W_{j}",
                                 rep.max_angle <= cfg.residual_tol, rep.max_angle))
            except WoldkitError as exc:
                rows.append(_row(f"generalized wandering identity {format_label(A)}, j={j}: {exc}", False))
    eq = check_equivalence_conditions(t, cfg)
    rows.append(_row("joint wandering subspace generates H (pure joint shift)",
                     eq.conditions["iv"].passed, informational=True))
    return rows


def _suite_equivalence(t, cfg):
    eq = check_equivalence_conditions(t, cfg)
    rows = [_row(f"condition ({k})", c.passed, informational=True) for k, c in eq.conditions.items()]
    rows.append(_row("conditions (i)-(v) all hold or all fail", eq.consistent))
    return rows


SUITES = {
    "wold": _suite_wold,
    "multi": _suite_multi,
    "identities": _suite_identities,
    "equivalence": _suite_equivalence,
}


def cmd_verify(args):
    t, cfg = _load(args)
    doc = {"schema_version": io.SCHEMA_VERSION, "command": "verify", "suite": args.suite,
           "defects": _defects_doc(t)}
    try:
        check_gate(t, cfg)
    except GateError as exc:
        doc.update(status="rejected", rows=[], messages=[str(exc)])
        _emit(args, doc, [f"status: rejected ({exc}); suite skipped"])
        return EXIT_REJECTED
    rows = SUITES[args.suite](t, cfg)
    failed = [r for r in rows if not r["passed"] and not r["informational"]]
    status = "unresolved" if failed else "accepted"
    doc.update(status=status, rows=rows)
    lines = [f"{'result':<8}{'value':>11}  check"]
    for r in rows:
        mark = ("pass" if r["passed"] else "fail") + ("*" if r["informational"] else "")
        value = "" if r["value"] is None else f"{r['value']:.2e}"
        lines.append(f"{mark:<8}{value:>11}  {r['check']}")
    lines.append("(* informational: expected outcome depends on the tuple)")
    lines.append(f"status: {status}")
    _emit(args, doc, lines)
    return STATUS_EXIT[status]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=None, help="relative singular-value cutoff")
    common.add_argument("--residual-tol", type=float, default=None, help="residual acceptance threshold")
    common.add_argument("--max-power", type=int, default=None, help="budget on operator powers")
    common.add_argument("--seed", type=int, default=None, help="seed for scrambling / random presets")
    common.add_argument("--json", metavar="PATH", default=None, help="write the machine report here")
    common.add_argument("--oracle", metavar="PATH", default=None, help="oracle file (read or written)")

    parser = argparse.ArgumentParser(
        prog="woldkit", description="Wold decompositions of doubly commuting isometries."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="report isometry and commutation defects")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", parents=[common], help="compute the 2^m block decomposition")
    p.add_argument("manifest")
    p.add_argument("--depth", "-m", type=int, default=None, help="decompose w.r.t. V_1..V_m (default n)")
    p.add_argument("--method", choices=("direct", "recursive", "both"), default="direct")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON report")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fixture", parents=[common], help="write a fixture manifest and its oracle")
    p.add_argument("--preset", choices=PRESETS, default="polydisc")
    p.add_argument("--spec", default=None, help="fixture spec JSON (overrides --preset)")
    p.add_argument("--e", type=int, default=1, help="polydisc coefficient dimension")
    p.add_argument("--D", type=int, default=3, help="polydisc degree cap")
    p.add_argument("--n", type=int, default=None, help="number of coordinates")
    p.add_argument("--max-dim", type=int, default=None, help="ambient dimension cap")
    p.add_argument("--mtx", action="store_true", help="store operators as Matrix Market sidecars")
    p.add_argument("--out", required=True, help="manifest path")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("verify", parents=[common], help="run a named suite of checks")
    p.add_argument("manifest")
    p.add_argument("--suite", choices=sorted(SUITES), default="identities")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which would read as "rejected"
        return EXIT_OK if exc.code in (0, None) else EXIT_PARSE
    try:
        return args.func(args)
    except io.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GateError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
