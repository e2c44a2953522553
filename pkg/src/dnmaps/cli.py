"""Command line: ``dnmaps <command> ...``.

Exit codes: 0 success, 1 a scientific assertion failed, 2 bad input or
configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .boundary import write_operator_csv
from .dn import (defect_operator, dn_matrix, estimate_genus, hilbert_transform, rank_window,
                 singular_profile, write_profile_csv)
from .errors import DnMapsError, GeometryError, IndeterminateRank, InvalidConfig, InvalidInput
from .experiments import (THREADS_ENV, SurfaceSpec, surface_from_dict, load_config, render_report,
                          resolve_threads, run_experiment, write_report)
from .io import read_mesh, write_mesh
from .mesh import euler_genus, schottky_double

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _handle(text: str) -> dict:
    try:
        xa, ya, xb, yb, eps, cyl = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("handle is x_a,y_a,x_b,y_b,eps,cyl_len") from exc
    return {"site_a": [xa, ya], "site_b": [xb, yb], "eps": eps, "cyl_len": cyl}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a sub-command from resetting a flag given before it
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the config seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")

    p = argparse.ArgumentParser(prog="dnmaps", parents=[common],
                                description="DN maps, genus detection and handle experiments")
    sub = p.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="mesh generation").add_subparsers(dest="action",
                                                                         required=True)
    build = mesh.add_parser("build", parents=[common], help="generate a surface")
    build.add_argument("--kind", choices=["disk", "torus"], default="disk")
    build.add_argument("--n-boundary", type=int, default=256)
    build.add_argument("--radius", type=float, default=1.0)
    build.add_argument("--hole-radius", type=float, default=0.2)
    build.add_argument("--resolution", type=int, default=None)
    build.add_argument("--handle", type=_handle, action="append", default=[],
                       metavar="XA,YA,XB,YB,EPS,LEN")
    build.add_argument("--double", action="store_true", help="write the Schottky double")

    dn = sub.add_parser("dn", help="DN operators").add_subparsers(dest="action", required=True)
    comp = dn.add_parser("compute", parents=[common], help="DN matrix of a mesh file")
    comp.add_argument("mesh")

    genus = sub.add_parser("genus", parents=[common], help="genus from the defect operator")
    genus.add_argument("mesh")
    genus.add_argument("--gap-factor", type=float, default=10.0)
    genus.add_argument("--max-mode", type=int, default=None)

    exp = sub.add_parser("experiment", help="experiments").add_subparsers(dest="action",
                                                                          required=True)
    run = exp.add_parser("run", parents=[common], help="run a JSON-configured experiment")
    run.add_argument("config")

    rep = sub.add_parser("report", help="reports").add_subparsers(dest="action", required=True)
    render = rep.add_parser("render", parents=[common], help="summarise a JSON report")
    render.add_argument("report")
    return p


def _mesh_build(args) -> int:
    doc = {"kind": args.kind, "n_boundary": args.n_boundary, "radius": args.radius,
           "hole_radius": args.hole_radius, "handles": args.handle}
    if args.resolution is not None:
        doc["resolution"] = args.resolution
    spec: SurfaceSpec = surface_from_dict(doc)
    mesh = spec.build(args.n_boundary)
    if args.double:
        mesh, _ = schottky_double(mesh)
    out = args.out or f"{spec.name}.surf"
    write_mesh(out, mesh)
    print(f"{out}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, "
          f"genus {euler_genus(mesh)}")
    return EXIT_OK


def _dn_compute(args) -> int:
    mesh, _, _ = read_mesh(args.mesh)
    dn = dn_matrix(mesh)
    out = args.out or str(Path(args.mesh).with_suffix(".dn.csv"))
    write_operator_csv(out, dn.operator)
    print(f"{out}: N={dn.n} L={dn.length:.12g} symmetry defect {dn.symmetry_defect():.2e}")
    return EXIT_OK


def _genus(args) -> int:
    mesh, _, _ = read_mesh(args.mesh)
    D = defect_operator(hilbert_transform(dn_matrix(mesh)))
    window = args.max_mode or rank_window(D.n)
    profile = singular_profile(D, window)[: 2 * window]
    if args.out:
        write_profile_csv(args.out, profile)
    top = " ".join(f"{s:.3e}" for s in profile[:6])
    try:
        g = estimate_genus(D, args.gap_factor, window)
    except IndeterminateRank as exc:
        print(f"indeterminate rank: {exc}; profile {top}", file=sys.stderr)
        return EXIT_FAIL
    print(f"estimated genus {g} (Euler genus {euler_genus(mesh)}); top singular values {top}")
    return EXIT_OK


def _experiment_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    threads = resolve_threads(args.threads)
    report = run_experiment(config, threads)
    paths = write_report(report, args.out or config.output_dir)
    print(render_report(json.loads(report.to_json())))
    print(f"\nwrote {paths['json']} and {paths['csv']}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _report_render(args) -> int:
    try:
        with open(args.report) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read report: {exc}") from exc
    text = render_report(doc)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if doc.get("passed") else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for flag in ("seed", "threads", "out"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    handlers = {("mesh", "build"): _mesh_build, ("dn", "compute"): _dn_compute,
                ("experiment", "run"): _experiment_run, ("report", "render"): _report_render}
    handler = _genus if args.command == "genus" else handlers[(args.command, args.action)]
    try:
        return handler(args)
    except (InvalidConfig, InvalidInput, GeometryError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DnMapsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
