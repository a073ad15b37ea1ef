"""Command-line entry point: ``h3plateau {curve,tunnel,domain,solve,verify,diagnose}``.

Exit codes: 0 ok, 1 internal error, 2 invalid n or usage, 3 parameter
violation, 4 neck pinch, 5 solver stall or max_iter (files still written),
6 missing mesh, 7 some checks or sweep rows failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .curve import build_gamma, curve_json, curve_summary, curve_text
from .diagnostics import sweep, sweep_csv
from .domain import build_tunnel, domain_json, transport_isometry
from .errors import ConstructionError, NeckPinch, SolverError
from .io import atomic_write
from .mesh import TriMesh, obj_text, read_obj
from .pipeline import RunConfig, build_domain_for, load_config, report_dict, solve
from .topology import verify_report

log = logging.getLogger("h3plateau")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_PARAM, EXIT_PINCH, EXIT_STALL, EXIT_MISSING, EXIT_PARTIAL = range(8)


class UsageError(Exception):
    pass


def _probe(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected cx,cy,cz,r")
    try:
        return tuple(float(x) for x in parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("construction and solver")
    g.add_argument("--n", type=int, help="number of circles in the boundary curve (tunnel index for 'tunnel')")
    g.add_argument("--eps1", type=float, help="footprint centre offset of tunnel 1")
    g.add_argument("--del1", type=float, help="footprint radius of tunnel 1")
    g.add_argument("--zd", type=float, dest="z_d", help="cut the tunnel planes at this height instead of a disk")
    g.add_argument("--cut-radius", type=float, dest="cut_radius", help="hyperbolic radius of the cut disks")
    g.add_argument("--samples", type=int, dest="samples_per_unit", help="curve samples per unit length")
    g.add_argument("--grad-tol", type=float, dest="grad_tol")
    g.add_argument("--max-iter", type=int, dest="max_iter")
    g.add_argument("--l-max", type=float, dest="l_max", help="disk remesh upper bound (hyperbolic length)")
    g.add_argument("--margin", type=float, help="clearance margin between cone curves and tunnels")
    g.add_argument("--probe", type=_probe, help="probe ball cx,cy,cz,r for ball_area")
    g.add_argument("--out-dir", dest="out_dir", help="output directory (default: current)")
    g.add_argument("--config", help="key=value config file (flags override it)")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="h3plateau", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("curve", parents=[common], help="write the boundary curve")
    sub.add_parser("tunnel", parents=[common], help="solve/transport a tunnel and export its surface")
    sub.add_parser("domain", parents=[common], help="build the solve domain for n")
    sub.add_parser("solve", parents=[common], help="solve the least-area disk for n")
    v = sub.add_parser("verify", parents=[common], help="word and axis-crossing checks for a solved disk")
    v.add_argument("--solve", action="store_true", help="solve first instead of reading disk_n.obj")
    v.add_argument("--generators", type=int, help="tunnel generator count m of the word (default n)")
    d = sub.add_parser("diagnose", parents=[common], help="sweep n = 1..n_max and write sweep.csv")
    d.add_argument("--n-max", type=int, dest="n_max", required=True)
    return p


def _config(args) -> RunConfig:
    keys = ("eps1", "del1", "z_d", "cut_radius", "samples_per_unit", "grad_tol", "max_iter", "l_max", "margin", "probe", "out_dir")
    overrides = {k: getattr(args, k) for k in keys}
    try:
        return load_config(args.config, overrides)
    except (OSError, ValueError, TypeError) as e:
        raise UsageError(f"bad configuration: {e}") from e


def _need_n(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1 (got {args.n})")
    return args.n


def _out(rc: RunConfig, name: str) -> Path:
    return Path(rc.out_dir) / name


def _dumps(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def cmd_curve(args, rc: RunConfig) -> int:
    n = _need_n(args)
    g = build_gamma(rc.curve_params(n).validate())
    atomic_write(_out(rc, f"gamma_{n}.txt"), curve_text(g))
    atomic_write(_out(rc, f"gamma_{n}.json"), curve_json(g))
    return EXIT_OK


def cmd_tunnel(args, rc: RunConfig) -> int:
    n = _need_n(args)
    params = rc.curve_params(max(n, 1)).validate()
    t = build_tunnel(n, params, None, rc.tunnel_params().validate(params))
    s = transport_isometry(n)
    atomic_write(_out(rc, f"tunnel_{n}.obj"), obj_text(t.surface))
    info = {
        "index": n,
        "scale": float(f"{s.scale:.12g}"),
        "max_height": float(f"{t.max_height:.12g}"),
        "neck_low": float(f"{t.neck_low:.12g}"),
        "neck_report": t.report.to_dict() if t.report is not None else None,
    }
    atomic_write(_out(rc, f"tunnel_{n}.json"), _dumps(info))
    return EXIT_OK


def _merge(meshes: list[TriMesh]) -> TriMesh:
    verts, faces, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += m.n_vertices
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), topology="sphere")
    return TriMesh(np.vstack(verts), np.vstack(faces), topology="sphere")


def cmd_domain(args, rc: RunConfig) -> int:
    n = _need_n(args)
    dom = build_domain_for(n, rc)
    atomic_write(_out(rc, f"domain_{n}.obj"), obj_text(_merge([t.surface for t in dom.tunnels])))
    atomic_write(_out(rc, f"domain_{n}.json"), domain_json(dom))
    return EXIT_OK


def cmd_solve(args, rc: RunConfig) -> int:
    n = _need_n(args)
    sol = solve(n, rc)
    atomic_write(_out(rc, f"disk_{n}.obj"), obj_text(sol.mesh))
    atomic_write(_out(rc, f"report_{n}.json"), _dumps(report_dict(sol)))
    log.info("n=%d status=%s area=%.6f iterations=%d", n, sol.status, sol.report.area, sol.report.iterations)
    return EXIT_OK if sol.status == "ok" else EXIT_STALL


def cmd_verify(args, rc: RunConfig) -> int:
    n = _need_n(args)
    path = _out(rc, f"disk_{n}.obj")
    code = EXIT_OK
    if args.solve:
        code = cmd_solve(args, rc)
    if not path.exists():
        log.error("missing mesh %s (run 'solve' first or pass --solve)", path)
        return EXIT_MISSING
    mesh = read_obj(path)
    winding = curve_summary(build_gamma(rc.curve_params(n).validate()))["winding"]
    m = args.generators if args.generators is not None else n
    rep = verify_report(m, mesh, winding)
    atomic_write(_out(rc, f"verify_{n}.json"), _dumps(rep))
    ok = rep["word_nontrivial"] and rep["word_delta_killed_trivial"] and rep["beta_count"] >= 1
    if not ok:
        return EXIT_PARTIAL
    return code


def cmd_diagnose(args, rc: RunConfig) -> int:
    if args.n_max < 1:
        raise UsageError(f"--n-max must be >= 1 (got {args.n_max})")
    rows = sweep(args.n_max, rc)
    atomic_write(_out(rc, "sweep.csv"), sweep_csv(rows))
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_PARTIAL


COMMANDS = {
    "curve": cmd_curve,
    "tunnel": cmd_tunnel,
    "domain": cmd_domain,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        rc = _config(args)
        return COMMANDS[args.command](args, rc)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"h3plateau: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NeckPinch as e:
        print(f"h3plateau: neck pinch: {e}", file=sys.stderr)
        return EXIT_PINCH
    except ConstructionError as e:
        print(f"h3plateau: parameter violation: {e}", file=sys.stderr)
        return EXIT_PARAM
    except SolverError as e:
        print(f"h3plateau: solver failure: {e}", file=sys.stderr)
        return EXIT_STALL
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"h3plateau: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
