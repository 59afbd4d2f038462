"""Command-line front door: deterministic, manifest-stamped artifacts."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegenerateGeometryError
from .lattice import ascii_art, build_geometry, geometry_json
from .runcfg import (
    ConfigError,
    config_hash,
    default_workers,
    grid_from,
    load_config,
    require,
    run_tasks,
    seed_derive,
    write_csv,
    write_manifest,
)

SCAN_HEADER_V1 = [
    "j",
    "p_x",
    "energy",
    "degeneracy",
    "entropy",
    "purity",
    "logical_z",
    "obs_mean",
    "obs_var",
    "f_abs_exact",
    "f_abs_cumulant",
    "status",
]

MC_HEADER_V1 = [
    "L",
    "p",
    "beta",
    "line",
    "energy",
    "energy_err",
    "abs_m",
    "abs_m_err",
    "m2",
    "m2_err",
    "binder",
    "binder_err",
    "replicas",
    "sweeps",
    "therm",
    "thermalized",
    "status",
]

STABILITY_HEADER_V1 = [
    "j",
    "p_x",
    "dt",
    "mean",
    "variance",
    "f_abs_exact",
    "f_abs_cumulant",
    "status",
]


def _print_or_write(payload: dict, out):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        from .runcfg import atomic_write_text

        atomic_write_text(out, text + "\n")
        print(f"wrote {out}")
    else:
        print(text)


# ----- subcommands ---------------------------------------------------------------


def cmd_geometry(args) -> int:
    geom = build_geometry(args.lx, args.ly)
    if args.ascii:
        print(ascii_art(geom))
        return 0
    _print_or_write(geometry_json(geom), args.out)
    return 0


def cmd_code_check(args) -> int:
    from .code import build_lghm_code, build_tc_code, gauge_out, verify_code
    from .pauli import PauliOperator

    geom = build_geometry(args.lx, args.ly)
    report = {"lx": args.lx, "ly": args.ly, "models": {}}
    ok = True
    for model in ("tc", "lghm"):
        code = build_tc_code(geom) if model == "tc" else build_lghm_code(geom)
        result = verify_code(code)
        report["models"][model] = result
        ok = ok and result["passed"]
    tc = build_tc_code(geom)
    noise = [PauliOperator.single(tc.n_qubits, l, "X") for l in geom.decohered_links()]
    out = gauge_out(tc, noise)
    gauged = {
        "surviving": out.surviving,
        "gauged_out": out.gauged_out,
        "expected_surviving": [f"vertex_star[{v}]" for v in range(geom.n_vertices)],
        "expected_gauged_out": [f"plaquette[{p}]" for p in range(geom.n_plaquettes)],
    }
    gauged["passed"] = (
        gauged["surviving"] == gauged["expected_surviving"]
        and gauged["gauged_out"] == gauged["expected_gauged_out"]
    )
    report["gauging_out"] = gauged
    ok = ok and gauged["passed"]
    report["passed"] = ok
    _print_or_write(report, args.out)
    return 0 if ok else 1


def cmd_map_verify(args) -> int:
    from .exact import map_verify_report

    geom = build_geometry(args.lx, args.ly)
    report = map_verify_report(geom, args.j)
    _print_or_write(report, args.out)
    return 0 if report["passed"] else 1


def _scan_config_from_args(args) -> dict:
    if args.config:
        config = load_config(args.config)
    else:
        config = {
            "lx": args.lx,
            "ly": args.ly,
            "j_grid": [float(v) for v in args.j],
            "p_grid": [float(v) for v in args.p],
            "output": args.out,
        }
        if args.dt is not None:
            config["dt"] = args.dt
    config.setdefault("dt", 0.05)
    config.setdefault("log_base", "e")
    config.setdefault("top_k", None)
    return config


def cmd_scan(args) -> int:
    from .channel import scan_rows
    from .stability import default_coupling

    config = _scan_config_from_args(args)
    lx = require(config, "lx", int)
    ly = require(config, "ly", int)
    j_grid = grid_from(config, "j_grid")
    p_grid = grid_from(config, "p_grid")
    output = require(config, "output", str)
    top_k = config.get("top_k")
    base = np.e if config.get("log_base", "e") == "e" else float(config["log_base"])
    for p in p_grid:
        if not 0.0 <= p <= 0.5:
            raise ConfigError(f"p_grid value {p} outside [0, 0.5]")

    started = time.time()
    geom = build_geometry(lx, ly)
    spec = default_coupling(geom, dt=float(config["dt"]))
    rows = scan_rows(
        geom,
        j_grid,
        p_grid,
        observables=[("obs", spec.gauge_op)],
        top_k=top_k,
        log_base=base,
        stability_spec=spec,
    )
    body = write_csv(output, SCAN_HEADER_V1, rows)
    manifest_path = str(Path(output).with_suffix(".manifest.json"))
    write_manifest(
        manifest_path,
        config,
        [output],
        started,
        extra={
            "csv_header_version": "scan-v1",
            "rows": len(rows),
            "errors": sum(1 for r in rows if r["status"] != "ok"),
            "observable_plaquettes": _observable_pair(geom),
            "entropy_log_base": config.get("log_base", "e"),
        },
    )
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"scan: {len(rows)} rows, {failed} errors -> {output}")
    return 0 if failed == 0 else 1


def _observable_pair(geom):
    from .stability import default_plaquette_pair

    return list(default_plaquette_pair(geom))


def cmd_rbim_oracle(args) -> int:
    from .rbim import oracle_run

    geom = build_geometry(args.lx, args.ly)
    report = oracle_run(geom, args.px, args.samples, args.seed)
    report["lx"], report["ly"] = args.lx, args.ly
    report["samples_per_p"] = args.samples
    report["seed"] = args.seed
    _print_or_write(report, args.out)
    return 0 if report["passed"] else 1


def _mc_task(task):
    from .rbim import mc_estimate, nishimori_beta

    L, p, beta, line, seed, sweeps, replicas = task
    try:
        if line == "nishimori":
            beta = nishimori_beta(p)
        est = mc_estimate(
            L, p=p, beta=beta, seed=seed, sweeps=sweeps, replicas=replicas
        )
        est["line"] = line
        est["status"] = "ok"
        return est
    except Exception as exc:
        return {
            "L": L,
            "p": p,
            "beta": beta,
            "line": line,
            "status": f"error: {exc}",
        }


def cmd_rbim_mc(args) -> int:
    started = time.time()
    sizes = [int(s) for s in args.sizes.split(",")]
    if args.line == "nishimori":
        points = [float(p) for p in args.p]
        if not points:
            raise ConfigError("nishimori line needs --p values")
    else:
        points = [float(b) for b in args.beta]
        if not points:
            raise ConfigError("fixed-beta line needs --beta values")
    p_fixed = args.p_fixed
    tasks = []
    for idx, (L, x) in enumerate(
        [(L, x) for L in sizes for x in points]
    ):
        seed = seed_derive(args.seed, idx)
        if args.line == "nishimori":
            tasks.append((L, x, None, "nishimori", seed, args.sweeps, args.replicas))
        else:
            tasks.append((L, p_fixed, x, "fixed-beta", seed, args.sweeps, args.replicas))
    workers = args.workers or default_workers()
    results = run_tasks(_mc_task, tasks, workers)
    config = {
        "sizes": sizes,
        "line": args.line,
        "points": points,
        "p_fixed": p_fixed,
        "seed": args.seed,
        "sweeps": args.sweeps,
        "replicas": args.replicas,
    }
    write_csv(args.out, MC_HEADER_V1, results)
    write_manifest(
        str(Path(args.out).with_suffix(".manifest.json")),
        config,
        [args.out],
        started,
        extra={
            "csv_header_version": "mc-v1",
            "workers": workers,
            "rng": "Philox-keyed children; in-kernel xorshift128+ seeded by splitmix64",
        },
    )
    failed = sum(1 for r in results if r.get("status") != "ok")
    print(f"rbim-mc: {len(results)} points, {failed} errors -> {args.out}")
    return 0 if failed == 0 else 1


def cmd_stability(args) -> int:
    from .stability import CouplingSpec, default_coupling, stability_scan

    started = time.time()
    geom = build_geometry(args.lx, args.ly)
    rows = []
    for dt in args.dt:
        spec = default_coupling(geom, dt=float(dt))
        for row in stability_scan(geom, args.j, args.p, spec):
            row["dt"] = float(dt)
            rows.append(row)
    config = {
        "lx": args.lx,
        "ly": args.ly,
        "j_grid": [float(v) for v in args.j],
        "p_grid": [float(v) for v in args.p],
        "dt": [float(v) for v in args.dt],
    }
    write_csv(args.out, STABILITY_HEADER_V1, rows)
    write_manifest(
        str(Path(args.out).with_suffix(".manifest.json")),
        config,
        [args.out],
        started,
        extra={"csv_header_version": "stability-v1"},
    )
    print(f"stability: {len(rows)} rows -> {args.out}")
    return 0


# ----- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghlab",
        description="Gauge-Higgs subsystem-code laboratory",
    )
    parser.add_argument("--version", action="version", version=f"ghlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="dump the boundary lattice as JSON")
    g.add_argument("--lx", type=int, required=True)
    g.add_argument("--ly", type=int, required=True)
    g.add_argument("--out")
    g.add_argument("--ascii", action="store_true")
    g.set_defaults(fn=cmd_geometry)

    c = sub.add_parser("code-check", help="verify code structures and gauging out")
    c.add_argument("--lx", type=int, required=True)
    c.add_argument("--ly", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_code_check)

    m = sub.add_parser("map-verify", help="check the disentangling circuit")
    m.add_argument("--lx", type=int, required=True)
    m.add_argument("--ly", type=int, required=True)
    m.add_argument("--j", type=float, nargs="+", default=[0.0, 0.3, 0.7, 1.2])
    m.add_argument("--out")
    m.set_defaults(fn=cmd_map_verify)

    s = sub.add_parser("scan", help="entropy/purity/variance grid scan")
    s.add_argument("--config", help="TOML or JSON configuration file")
    s.add_argument("--lx", type=int, default=3)
    s.add_argument("--ly", type=int, default=2)
    s.add_argument("--j", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    s.add_argument("--p", type=float, nargs="+", default=list(np.arange(0, 0.5001, 0.025)))
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--out", default="scan.csv")
    s.set_defaults(fn=cmd_scan)

    o = sub.add_parser("rbim-oracle", help="sampled matrix-element identity check")
    o.add_argument("--lx", type=int, required=True)
    o.add_argument("--ly", type=int, required=True)
    o.add_argument("--px", type=float, nargs="+", default=[0.05, 0.15, 0.3, 0.5])
    o.add_argument("--samples", type=int, default=200)
    o.add_argument("--seed", type=int, default=1)
    o.add_argument("--out")
    o.set_defaults(fn=cmd_rbim_oracle)

    r = sub.add_parser("rbim-mc", help="random-bond Ising Monte Carlo")
    r.add_argument("--sizes", default="8,16,32")
    r.add_argument("--line", choices=["nishimori", "fixed-beta"], default="nishimori")
    r.add_argument("--p", type=float, nargs="*", default=[])
    r.add_argument("--beta", type=float, nargs="*", default=[])
    r.add_argument("--p-fixed", type=float, default=0.0)
    r.add_argument("--sweeps", type=int, default=6000)
    r.add_argument("--replicas", type=int, default=32)
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--out", default="rbim_mc.csv")
    r.set_defaults(fn=cmd_rbim_mc)

    t = sub.add_parser("stability", help="logical-gauge coupling deviation scan")
    t.add_argument("--lx", type=int, default=3)
    t.add_argument("--ly", type=int, default=2)
    t.add_argument("--j", type=float, nargs="+", default=[0.0, 0.3])
    t.add_argument("--p", type=float, nargs="+", default=[0.02, 0.15])
    t.add_argument("--dt", type=float, nargs="+", default=[0.05])
    t.add_argument("--out", default="stability.csv")
    t.set_defaults(fn=cmd_stability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DegenerateGeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
