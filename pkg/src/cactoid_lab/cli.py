"""Command-line entry point: ``cactoid-lab <command> ...``.

Exit codes
----------
0  success
1  unexpected internal error
2  usage or input parse error
3  ``ghdist``: exact search cap exceeded and ``--bounds`` not given
4  cactoid validation failed
5  computation refused (false certificate, infeasible orientability, bad gluing)
6  the requested cut does not exist on the given surface class

Every command accepts ``--json``; the machine payload then goes to stdout,
serialized with sorted keys so identical inputs give identical bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .approximation import DEFAULT_SCHEDULE, PipelineConfig, PipelineError, run_pipeline
from .cactoid import (
    CactoidError,
    CactoidGraph,
    certify,
    connectivity_number,
    history_flags_valid,
    minimal_preboundary,
    pi1_signature,
    validate,
)
from .curves import CurveError, all_outcomes, cut_jordan, cut_nonseparating_arc, cut_separating_arc, reglue_roundtrip
from .gluing import GluingError, GluingHistory
from .metric_core import (
    DEFAULT_GH_CAP,
    CapExceeded,
    FiniteMetricSpace,
    MetricError,
    gh_exact,
    gh_lower,
    net_sample,
)
from .surfaces import (
    SurfaceError,
    SurfaceInvariants,
    from_coordinates,
    invariants,
    load_surface,
    mesh_resolution,
    orientation_propagates,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_CAP = 3
EXIT_INVALID = 4
EXIT_REFUSED = 5
EXIT_NO_CURVE = 6

BOUNDS_BUDGET = 50_000


class InputError(ValueError):
    """A file or flag could not be parsed."""


@dataclass
class CommandResult:
    code: int
    report: str
    payload: dict | None = None
    payload_path: str | None = None
    extra_files: dict = field(default_factory=dict)


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _number(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def load_metric(path: str) -> FiniteMetricSpace:
    try:
        return FiniteMetricSpace.from_json(_read_json(path))
    except (MetricError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_off(text: str, source: str):
    toks = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    toks = [t for t in toks if t]
    if not toks or toks[0][0] != "OFF":
        raise InputError(f"{source}: expected an OFF header")
    head = toks[0][1:] or toks.pop(1)
    try:
        nv, nf = int(head[0]), int(head[1])
        points = {i: tuple(float(x) for x in toks[1 + i][:3]) for i in range(nv)}
        faces = []
        for row in toks[1 + nv : 1 + nv + nf]:
            if int(row[0]) != 3:
                raise InputError(f"{source}: only triangular faces are supported")
            faces.append(tuple(int(x) for x in row[1:4]))
    except (IndexError, ValueError):
        raise InputError(f"{source}: truncated or malformed OFF data") from None
    if len(faces) != nf:
        raise InputError(f"{source}: expected {nf} faces, found {len(faces)}")
    return from_coordinates(points, faces)


def load_mesh(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("OFF"):
            return _load_off(text, path)
        return load_surface(text, path)
    except SurfaceError as exc:
        raise InputError(str(exc)) from None


def load_cactoid(path: str) -> CactoidGraph:
    try:
        return CactoidGraph.from_json(_read_json(path))
    except (CactoidError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None


# -- commands ------------------------------------------------------------------------------

def cmd_ghdist(args) -> CommandResult:
    X, Y = load_metric(args.a), load_metric(args.b)
    try:
        value = gh_exact(X, Y, size_cap=args.cap)
        payload = {"format_version": 1, "method": "exact", "value": _number(value)}
        return CommandResult(EXIT_OK, f"d_GH = {_number(value)} (exact)", payload)
    except CapExceeded as exc:
        if not args.bounds:
            return CommandResult(EXIT_CAP, f"{exc} (pass --bounds for an interval)")
    lo = gh_lower(X, Y)
    hi, method = _net_upper(X, Y, args.cap)
    payload = {"format_version": 1, "method": method, "lower": _number(lo), "upper": _number(hi)}
    return CommandResult(EXIT_OK, f"d_GH in [{_number(lo)}, {_number(hi)}] ({method})", payload)


def _net_upper(X: FiniteMetricSpace, Y: FiniteMetricSpace, cap: int):
    """Upper bound through nets: d(X, Y) <= d(netX, netY) + r_X + r_Y."""
    ix, rx = net_sample(X, min(cap, len(X)))
    iy, ry = net_sample(Y, min(cap, len(Y)))
    try:
        return gh_exact(X.subspace(ix), Y.subspace(iy), size_cap=cap, budget=BOUNDS_BUDGET) + rx + ry, "lower bound + net upper bound"
    except CapExceeded:
        return max(X.dist.max(), Y.dist.max()) / 2, "lower bound + diameter upper bound"


def cmd_surface_info(args) -> CommandResult:
    S = load_mesh(args.file)
    inv = invariants(S)
    payload = {
        "format_version": 1,
        "invariants": inv.to_json(),
        "name": inv.name(),
        "vertices": len(S.vertices),
        "faces": len(S.faces),
        "edges": len(S.lengths),
        "euler_char": S.euler_char(),
        "orientation_propagates": orientation_propagates(S),
        "mesh_resolution": float(mesh_resolution(S)),
    }
    lines = [
        f"{args.file}: {inv.name()}",
        f"  V={payload['vertices']} E={payload['edges']} F={payload['faces']} chi={inv.euler_char}",
        f"  connectivity c={inv.connectivity} boundary b={inv.boundary_count} orientable={inv.orientable}",
    ]
    return CommandResult(EXIT_OK, "\n".join(lines), payload)


_CUTS = {
    "jordan": cut_jordan,
    "separating_arc": cut_separating_arc,
    "nonseparating_arc": cut_nonseparating_arc,
    "all": all_outcomes,
}


def cmd_cut(args) -> CommandResult:
    try:
        S = SurfaceInvariants.of(not args.non_orientable, args.c, args.b)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        outcomes = _CUTS[args.op](S)
    except CurveError as exc:
        return CommandResult(EXIT_NO_CURVE, f"{S.name()}: {exc}")
    rows = []
    for o in outcomes:
        row = o.to_json()
        row["reglue_connectivity"] = reglue_roundtrip(o).connectivity
        rows.append(row)
    payload = {"format_version": 1, "source": S.to_json(), "outcomes": rows}
    lines = [f"{S.name()} (c={S.connectivity}, b={S.boundary_count}): {len(rows)} outcome(s)"]
    lines.append(f"  {'op':<18} {'kind':<22} {'parts':<10} orientability")
    for o in outcomes:
        parts = "+".join(str(c) for c in o.connectivities)
        lines.append(f"  {o.op:<18} {o.kind:<22} {parts:<10} {o.orientability_note}")
    return CommandResult(EXIT_OK, "\n".join(lines), payload)


def cmd_cactoid(args) -> CommandResult:
    G = load_cactoid(args.file)
    try:
        grouping = minimal_preboundary(G)
    except CactoidError as exc:
        payload = {"format_version": 1, "valid": False, "violations": [str(exc)]}
        return CommandResult(EXIT_INVALID, f"{G.name}: invalid: {exc}", payload)
    declared = G.grouping
    if declared is None:
        G.grouping = grouping
    violations = validate(G).violations + history_flags_valid(G)
    G.grouping = grouping
    payload = {
        "format_version": 1,
        "name": G.name,
        "valid": not violations,
        "violations": violations,
        "grouping": G.to_json()["grouping"],
        "connectivity": None if violations else connectivity_number(G),
        "k": G.k,
        "k0": G.k0,
        "pi1": None if violations else pi1_signature(G).to_json(),
    }
    if violations:
        return CommandResult(EXIT_INVALID, f"{G.name}: invalid: {violations[0]}", payload)
    if args.write_grouping:
        Path(args.write_grouping).write_text(G.dumps())
    lines = [
        f"{G.name}: valid generalized cactoid",
        f"  pieces={len(G.pieces)} trees={len(G.trees)} boundary components={len(grouping)}",
        f"  connectivity c0={payload['connectivity']} k={G.k} k0={G.k0}",
        f"  pi1 = {pi1_signature(G).describe()}",
    ]
    return CommandResult(EXIT_OK, "\n".join(lines), payload)


def _schedule(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad schedule {text!r}: expected comma-separated integers") from None
    if not out or min(out) < 1:
        raise InputError("schedule values must be positive integers")
    return out


def cmd_approximate(args) -> CommandResult:
    G = load_cactoid(args.input)
    H = GluingHistory.from_json(_read_json(args.history)) if args.history else None
    cfg = PipelineConfig(refine=args.refine, sample_size=args.sample_size, orientability=args.orientability,
                         max_pieces=args.max_pieces)
    cert = run_pipeline(G, H, _schedule(args.schedule), cfg, c_target=args.target_c)
    payload = cert.to_json()
    extra = {}
    if args.csv:
        extra[args.csv] = cert.to_csv()
    m = cert.main
    lines = [f"certificate: c0={m.c0} <= {m.c_target} + {m.k0} - 2*{m.k} = {m.bound}: {str(m.verdict).lower()}",
             f"  {'n':>4} {'gh bound':>10} {'total':>10}  class"]
    for n in cert.schedule:
        r = cert.records[n]
        lines.append(f"  {n:>4} {r.gh_upper_bound:>10.4f} {r.total_error:>10.4f}  {r.invariants.name()}")
    return CommandResult(EXIT_OK, "\n".join(lines), payload, args.out, extra)


def cmd_certify(args) -> CommandResult:
    G = load_cactoid(args.cactoid)
    probe = G.grouping
    G.grouping = probe if probe is not None else minimal_preboundary(G)
    validate(G).raise_if_invalid()
    hist = None
    if args.k is not None or args.k0 is not None:
        k = G.k if args.k is None else args.k
        k0 = G.k0 if args.k0 is None else args.k0
        if not 0 <= k0 <= k:
            raise InputError("need 0 <= k0 <= k")
        hist = argparse.Namespace(k=k, k0=k0)
    cert = certify(args.c, G, hist)
    payload = {"format_version": 1, **cert.to_json()}
    report = (f"c0={cert.c0} <= c + k0 - 2k = {args.c} + {cert.k0} - 2*{cert.k} = {cert.bound}: "
              f"{'true' if cert.verdict else 'false'}")
    return CommandResult(EXIT_OK, report, payload)


# -- parser -------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cactoid-lab", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                epilog="exit codes: 0 ok, 1 internal, 2 parse, 3 cap, 4 invalid, "
                                       "5 refused, 6 no such curve")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--json", action="store_true", help="print the machine payload instead of the report")
        sp.set_defaults(func=func)
        return sp

    g = add("ghdist", cmd_ghdist, help="Gromov-Hausdorff distance of two metric-space files")
    g.add_argument("a")
    g.add_argument("b")
    g.add_argument("--cap", type=int, default=DEFAULT_GH_CAP, help="largest space size for the exact search")
    g.add_argument("--bounds", action="store_true", help="fall back to a [lower, upper] interval")

    s = sub.add_parser("surface", help="triangulated surface tools")
    ssub = s.add_subparsers(dest="surface_command", required=True)
    info = ssub.add_parser("info", help="measured invariants of a mesh (TRISURF or OFF)")
    info.add_argument("file")
    info.add_argument("--json", action="store_true")
    info.set_defaults(func=cmd_surface_info)

    c = add("cut", cmd_cut, help="outcomes of cutting a surface class along a curve")
    op = c.add_mutually_exclusive_group(required=True)
    op.add_argument("--jordan", dest="op", action="store_const", const="jordan")
    op.add_argument("--separating-arc", dest="op", action="store_const", const="separating_arc")
    op.add_argument("--nonseparating-arc", dest="op", action="store_const", const="nonseparating_arc")
    op.add_argument("--all", dest="op", action="store_const", const="all")
    c.add_argument("--c", type=int, required=True, help="connectivity number")
    c.add_argument("--b", type=int, default=0, help="boundary count")
    o = c.add_mutually_exclusive_group()
    o.add_argument("--orientable", action="store_true", default=True)
    o.add_argument("--non-orientable", action="store_true")

    k = add("cactoid", cmd_cactoid, help="validate a cactoid file and report its invariants")
    k.add_argument("file")
    k.add_argument("--write-grouping", metavar="OUT", help="write the file back with the canonical grouping")

    a = add("approximate", cmd_approximate, help="build the surface sequence and its certificate")
    a.add_argument("--input", required=True)
    a.add_argument("--history", help="gluing-history JSON (defaults to the history in the cactoid file)")
    a.add_argument("--target-c", type=int, default=None)
    a.add_argument("--schedule", default=",".join(map(str, DEFAULT_SCHEDULE)))
    a.add_argument("--orientability", choices=["orientable", "non-orientable", "free"], default="free")
    a.add_argument("--refine", type=int, default=0)
    a.add_argument("--sample-size", type=int, default=8)
    a.add_argument("--max-pieces", type=int, default=None)
    a.add_argument("--out", help="write the certificate JSON here")
    a.add_argument("--csv", help="write the convergence table here")

    t = add("certify", cmd_certify, help="check the connectivity inequality")
    t.add_argument("--c", type=int, required=True, help="target connectivity")
    t.add_argument("--cactoid", required=True)
    t.add_argument("--k", type=int, default=None)
    t.add_argument("--k0", type=int, default=None)
    return p


_ERRORS = (
    (InputError, EXIT_PARSE),
    (CapExceeded, EXIT_CAP),
    (CactoidError, EXIT_INVALID),
    (PipelineError, EXIT_REFUSED),
    (GluingError, EXIT_REFUSED),
    (CurveError, EXIT_NO_CURVE),
)


def run(argv=None) -> CommandResult:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # mapped to exit codes below
        for kind, code in _ERRORS:
            if isinstance(exc, kind):
                return CommandResult(code, f"error: {exc}")
        raise


def main(argv=None) -> int:
    try:
        res = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except Exception as exc:
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    json_mode = "--json" in (sys.argv[1:] if argv is None else argv)
    if res.payload_path and res.payload is not None:
        Path(res.payload_path).write_text(dumps(res.payload))
    for path, text in res.extra_files.items():
        Path(path).write_text(text)
    if res.code != EXIT_OK:
        print(res.report, file=sys.stderr)
        if json_mode and res.payload is not None:
            sys.stdout.write(dumps(res.payload))
    elif json_mode and res.payload is not None:
        sys.stdout.write(dumps(res.payload))
    else:
        print(res.report)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
