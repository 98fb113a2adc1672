"""Command-line front end.

Subcommands: ``simulate``, ``ensemble``, ``classify`` and ``figures``.
Exit codes: 0 success (path completed or absorbed), 2 path exploded
(``simulate`` only), 1 configuration or I/O error.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import DegenerateDiffusion, SemiDiscreteError
from .model import classify, power_model
from .montecarlo import ensemble_report, run_ensemble
from .noise import IncrementStream
from .schemes import Termination, simulate_path, write_trajectory_csv
from .config import RunConfig, load_config

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXPLODED = 2

# Fixed seeds for the figure bundle; changing them changes the regression target.
FIGURE_RUNS = [
    # name, sigma, delta, n_steps, seed
    ("fig1a_sigma2_dt0.01", 2.0, 0.01, 10_000, 20170101),
    ("fig1b_sigma3_dt0.01", 3.0, 0.01, 10_000, 20170102),
    ("fig2a_sigma0_dt0.01", 0.0, 0.01, 100, 20170201),
    ("fig2b_sigma0_dt0.001", 0.0, 0.001, 1_000, 20170202),
    ("fig3a_sigma1_dt0.01", 1.0, 0.01, 10_000, 20170301),
    ("fig3b_sigma1_dt0.001", 1.0, 0.001, 100_000, 20170302),
]

FLOAT_CAVEATS = [
    "numpy's float64 exp may use CPU-specific SIMD kernels; results can differ "
    "in the last bit between machines or numpy builds",
    "normals come from numpy's PCG64 + ziggurat standard_normal; a numpy release "
    "that changes either would change every file",
]


def _add_common(p):
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--y0", type=float)
    p.add_argument("--scheme", choices=["sd", "em", "tamed"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--explosion-threshold", type=float, dest="explosion_threshold")
    p.add_argument("--absorption-floor", type=float, dest="absorption_floor")
    p.add_argument("--record-every", type=int, dest="record_every")
    _add_model(p)


def _add_model(p):
    g = p.add_argument_group("model")
    g.add_argument("--family", choices=["power", "constant"])
    g.add_argument("--sigma", type=float)
    g.add_argument("--drift-exp", type=float, dest="drift_exp")
    g.add_argument("--diff-exp", type=float, dest="diff_exp")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--a", help='drift factor expression, e.g. "u^2"')
    g.add_argument("--b", help='diffusion factor expression, e.g. "2*u"')


def build_parser():
    parser = argparse.ArgumentParser(
        prog="semidiscrete",
        description="Semi-discrete exponential scheme for dx = x a(x) dt + x b(x) dW.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path, write CSV")
    _add_common(p)
    p.add_argument("--path-index", type=int, default=0, dest="path_index")

    p = sub.add_parser("ensemble", help="run a Monte Carlo ensemble, write a JSON report")
    _add_common(p)
    p.add_argument("--paths", type=int)
    p.add_argument("--eps-zero", type=float, dest="eps_zero")
    p.add_argument("--moment-p", type=float, dest="moment_p")
    p.add_argument("--dump-paths", dest="dump_paths", help="directory for per-path CSVs")

    p = sub.add_parser("classify", help="classify the zero equilibrium")
    p.add_argument("--config")
    p.add_argument("--out")
    _add_model(p)

    p = sub.add_parser("figures", help="write the six reference trajectories + manifest")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _model_overrides(args, base):
    exprs = {k: getattr(args, k, None) for k in ("a", "b")}
    if any(v is not None for v in exprs.values()):
        merged = {k: base[k] for k in ("a", "b") if k in base}
        merged.update({k: v for k, v in exprs.items() if v is not None})
        return merged
    keys = ("family", "sigma", "drift_exp", "diff_exp", "alpha", "beta")
    flags = {k: getattr(args, k, None) for k in keys}
    flags = {k: v for k, v in flags.items() if v is not None}
    if not flags:
        return None
    family = flags.get("family", base.get("family", "power"))
    merged = dict(base) if base.get("family", "power") == family and "a" not in base else {}
    merged.update(flags)
    merged["family"] = family
    if family == "power":
        merged.setdefault("drift_exp", 2.0)
        merged.setdefault("diff_exp", 1.0)
    return merged


def resolve_config(args):
    """File config (or defaults) with command-line flags applied on top."""
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    fields = (
        "seed", "delta", "steps", "y0", "scheme", "workers", "out",
        "explosion_threshold", "absorption_floor", "record_every",
        "paths", "eps_zero", "moment_p", "dump_paths",
    )
    overrides = {f: getattr(args, f, None) for f in fields}
    overrides["model"] = _model_overrides(args, cfg.model)
    return cfg.with_overrides(**overrides)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8"), True


def cmd_simulate(cfg, path_index=0):
    model = cfg.build_model()
    stream = IncrementStream(cfg.seed, path_index)
    traj = simulate_path(
        model, cfg.scheme, cfg.y0, cfg.delta, cfg.steps, stream, cfg.guards(), cfg.record_every
    )
    fh, close = _open_out(cfg.out)
    try:
        write_trajectory_csv(traj, fh)
    finally:
        if close:
            fh.close()
    return EXIT_EXPLODED if traj.termination is Termination.EXPLODED else EXIT_OK


def cmd_ensemble(cfg):
    ens = cfg.ensemble_config()
    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    stats = run_ensemble(ens, workers=workers, dump_dir=cfg.dump_paths)
    report = ensemble_report(ens, stats)
    fh, close = _open_out(cfg.out)
    try:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_classify(cfg, out=None):
    model = cfg.build_model()
    verdict = classify(model)
    d = verdict.to_dict()
    line = f"{d['kind']} beta={d['beta']} gamma={d['gamma']} evidence={d['evidence']}"
    print(line)
    payload = json.dumps({"model": model.label, **d})
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return EXIT_OK


def cmd_figures(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, sigma, delta, n_steps, seed in FIGURE_RUNS:
        model = power_model(sigma)
        traj = simulate_path(model, "sd", 1.0, delta, n_steps, IncrementStream(seed, 0))
        fname = f"{name}.csv"
        with open(out / fname, "w", encoding="utf-8", newline="\n") as fh:
            write_trajectory_csv(traj, fh)
        entries.append({
            "file": fname,
            "sigma": sigma,
            "delta": delta,
            "n_steps": n_steps,
            "horizon": n_steps * delta,
            "seed": seed,
            "y0": 1.0,
            "scheme": "SemiDiscrete",
            "termination": traj.termination.value,
            "termination_time": traj.termination_time,
        })
    manifest = {"trajectories": entries, "floating_point_caveats": FLOAT_CAVEATS}
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figures":
            return cmd_figures(args.out)
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.path_index)
        if args.command == "ensemble":
            return cmd_ensemble(cfg)
        return cmd_classify(cfg, args.out)
    except DegenerateDiffusion as exc:
        print(f"error: degenerate diffusion: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SemiDiscreteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
