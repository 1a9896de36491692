"""Command-line front end: band fitting, simulation drivers, the inequality
verification suite, and band-comparison curves, all emitting CSV.

Exit codes: 0 success (simulations exit 0 regardless of pass/fail --
results are data), 1 failed verification, 2 usage/parse errors, 3 a
degenerate theory-mode plan.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import densities as zoo
from . import harness
from .band import band_to_csv, build_band, reference_global_band
from .calibration import DEFAULT_C2, PlanParams, derive_plan
from .errors import EmptyBandwidthGridError, InvalidConstantsError, LocbandError
from .estimator import build_kde_table, parse_data_file, split_sample
from .kernels import make_rectangular
from .selector import select_profile

SEED_ENV = "LOCBAND_SEED"

_CONFIG_KEYS = {
    "n": int,
    "alpha": float,
    "reps": int,
    "seed": int,
    "mode": str,
    "c2": float,
    "lstar": float,
    "density": str,
    "input": str,
    "out": str,
    "suite": str,
}


def _read_config(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _CONFIG_KEYS[key](val)
    return out


def _resolve(args: argparse.Namespace) -> dict:
    """defaults < config file < LOCBAND_SEED < explicit flags."""
    cfg = {
        "n": 4096, "alpha": 0.1, "reps": 50, "seed": 20240601, "mode": "practical",
        "c2": DEFAULT_C2, "lstar": 1.0, "density": "peak", "input": None,
        "out": None, "suite": None,
    }
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config))
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        cfg["seed"] = int(env_seed)
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _plan_from_cfg(cfg: dict, kernel):
    params = PlanParams(n=cfg["n"], L_star=cfg["lstar"], c2=cfg["c2"], mode=cfg["mode"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return derive_plan(params, kernel)


def _cfg_meta(cfg: dict) -> str:
    lines = [f"{k}={v}" for k, v in sorted(cfg.items()) if v is not None]
    return "\n".join(lines) + "\n"


def _emit(text: str, meta: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stderr.write(meta)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        with open(out + ".meta", "w", encoding="utf-8") as fh:
            fh.write(meta)


def cmd_band(args: argparse.Namespace, kernel=None) -> int:
    kernel = kernel or make_rectangular()
    cfg = _resolve(args)
    if cfg["input"] is None:
        print("band: --input is required", file=sys.stderr)
        return 2
    try:
        data = parse_data_file(cfg["input"])
    except (OSError, ValueError) as exc:
        print(f"band: cannot read input: {exc}", file=sys.stderr)
        return 2
    if data.size < 4:
        print(f"band: need at least 4 observations, got {data.size}", file=sys.stderr)
        return 2
    cfg["n"] = int(data.size)
    try:
        plan = _plan_from_cfg(cfg, kernel)
    except (EmptyBandwidthGridError, InvalidConstantsError) as exc:
        print(f"band: degenerate theory-mode plan: {exc}", file=sys.stderr)
        return 3
    split = split_sample(data)
    table = build_kde_table(split, plan, kernel, half_id=2)
    profile = select_profile(table, plan)
    band = build_band(split, profile, plan, kernel, cfg["alpha"])
    _emit(band_to_csv(band), _cfg_meta(cfg), cfg["out"])
    return 0


def cmd_simulate(args: argparse.Namespace, kernel=None) -> int:
    kernel = kernel or make_rectangular()
    cfg = _resolve(args)
    try:
        density = zoo.density_from_name(cfg["density"])
    except KeyError as exc:
        print(f"simulate: {exc.args[0]}", file=sys.stderr)
        return 2
    try:
        plan = _plan_from_cfg(cfg, kernel)
    except (EmptyBandwidthGridError, InvalidConstantsError) as exc:
        print(f"simulate: degenerate theory-mode plan: {exc}", file=sys.stderr)
        return 3
    kind = args.kind
    if kind == "coverage":
        report = harness.run_coverage(density, plan, kernel, cfg["alpha"], cfg["reps"], cfg["seed"])
    elif kind == "window":
        report = harness.run_window_check(density, plan, kernel, cfg["reps"], cfg["seed"])
    elif kind == "gumbel":
        report = harness.run_gumbel_calibration(plan, kernel, m=cfg["n"], reps=cfg["reps"], seed=cfg["seed"])
    elif kind == "adaptivity":
        report = harness.run_adaptivity(
            density, [plan], kernel, cfg["alpha"], cfg["reps"], cfg["seed"], probes=(0.5, 0.9)
        )
    else:
        print(f"simulate: unknown kind {kind!r} (coverage|adaptivity|window|gumbel)", file=sys.stderr)
        return 2
    meta = _cfg_meta(cfg) + report.meta_text()
    _emit(report.to_csv_text(), meta, cfg["out"])
    return 0


def cmd_verify(args: argparse.Namespace, kernel=None) -> int:
    kernel = kernel or make_rectangular()
    cfg = _resolve(args)
    suites = None if cfg["suite"] in (None, "all") else [cfg["suite"]]
    try:
        report = harness.verify_inequalities(kernel=kernel, suites=suites)
    except ValueError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return 2
    meta = _cfg_meta(cfg) + report.meta_text()
    _emit(report.to_csv_text(), meta, cfg["out"])
    failed = [r for r in report.records if not r["passed"]]
    if failed:
        names = ",".join(sorted({r["item"] for r in failed}))
        print(f"verify: FAILED items: {names}", file=sys.stderr)
        return 1
    return 0


def cmd_curves(args: argparse.Namespace, kernel=None) -> int:
    kernel = kernel or make_rectangular()
    cfg = _resolve(args)
    try:
        density = zoo.density_from_name(cfg["density"])
    except KeyError as exc:
        print(f"curves: {exc.args[0]}", file=sys.stderr)
        return 2
    try:
        plan = _plan_from_cfg(cfg, kernel)
    except (EmptyBandwidthGridError, InvalidConstantsError) as exc:
        print(f"curves: degenerate theory-mode plan: {exc}", file=sys.stderr)
        return 3
    data = zoo.sample(density, plan.n, cfg["seed"])
    split = split_sample(data)
    table = build_kde_table(split, plan, kernel, half_id=2)
    profile = select_profile(table, plan)
    local = build_band(split, profile, plan, kernel, cfg["alpha"])
    ref = reference_global_band(split, plan, kernel, cfg["alpha"])
    d = plan.delta_n
    truth = density.pdf(np.arange(1, plan.mesh_count + 1) * d)
    lines = ["k,t,truth,local_center,local_lo,local_hi,global_lo,global_hi"]
    for k in range(1, plan.mesh_count + 1):
        c, hw = local.centers[k - 1], local.halfwidths[k - 1]
        gc, ghw = ref.centers[k - 1], ref.halfwidths[k - 1]
        lines.append(
            f"{k},{k * d:.12g},{truth[k - 1]:.12g},{c:.12g},{c - hw:.12g},{c + hw:.12g},"
            f"{gc - ghw:.12g},{gc + ghw:.12g}"
        )
    _emit("\n".join(lines) + "\n", _cfg_meta(cfg), cfg["out"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locband",
        description="Locally adaptive confidence bands for probability densities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--n", type=int, help="sample size (cell count for simulate gumbel)")
        p.add_argument("--alpha", type=float)
        p.add_argument("--reps", type=int)
        p.add_argument("--seed", type=int, help=f"master seed (overrides ${SEED_ENV})")
        p.add_argument("--mode", choices=["theory", "practical"])
        p.add_argument("--c2", type=float, help="selection threshold constant")
        p.add_argument("--lstar", type=float, help="smoothness budget")
        p.add_argument("--density", help="zoo density name")
        p.add_argument("--input", help="data file, one real per line")
        p.add_argument("--out", help="output CSV path (stdout when omitted)")
        p.add_argument("--suite", help="verification suite filter")

    p_band = sub.add_parser("band", help="fit a confidence band to a data file")
    add_common(p_band)
    p_band.set_defaults(func=cmd_band)

    p_sim = sub.add_parser("simulate", help="run a seeded experiment")
    p_sim.add_argument("kind", help="coverage | adaptivity | window | gumbel")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run the numeric inequality suite")
    add_common(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    p_cur = sub.add_parser("curves", help="local vs global band comparison curves")
    add_common(p_cur)
    p_cur.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except LocbandError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
