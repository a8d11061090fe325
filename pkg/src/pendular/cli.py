"""Command line entry point: ``pendular run | validate | presets list``."""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import PRESETS, ConfigError, load_config, run_experiment


def _overrides(args) -> dict:
    out = {}
    for flag, key in (("seed", "ensemble.seed"), ("trajectories", "ensemble.n_trajectories"),
                      ("t_end_s", "ensemble.t_end_s"), ("dt_s", "ensemble.dt_s"),
                      ("out_dir", "output.out_dir")):
        v = getattr(args, flag, None)
        if v is not None:
            out[key] = repr(v) if isinstance(v, float) else str(v)
    return out


def _add_run_flags(p):
    p.add_argument("config", help="config file path or preset name")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--t-end-s", dest="t_end_s", type=float)
    p.add_argument("--dt-s", dest="dt_s", type=float)
    p.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pendular", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write CSV plus manifest")
    _add_run_flags(run)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--quiet", action="store_true", help="no progress counter")
    val = sub.add_parser("validate", help="validate a config without running it")
    _add_run_flags(val)
    presets = sub.add_parser("presets", help="bundled configurations")
    psub = presets.add_subparsers(dest="action", required=True)
    psub.add_parser("list", help="list preset names")
    show = psub.add_parser("show", help="print a preset as INI text")
    show.add_argument("name", choices=sorted(PRESETS))
    return parser


def _load(args):
    return load_config(args.config, _overrides(args))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        if args.action == "list":
            for name in sorted(PRESETS):
                print(f"{name}\t{PRESETS[name]['experiment']['kind']}")
        else:
            print(load_config(args.name).to_ini())
        return 0
    try:
        cfg = _load(args)
    except ConfigError as e:
        print(json.dumps({"valid": False, "issues": [{"field": f, "message": m} for f, m in e.issues]}, indent=2))
        return 2
    if args.command == "validate":
        print(json.dumps({"valid": True, "kind": cfg.kind, "name": cfg.name}, indent=2))
        return 0

    def progress(done, total):
        print(f"\rblock {done}/{total}", end="", file=sys.stderr, flush=True)
        if done == total:
            print(file=sys.stderr)

    manifest = run_experiment(cfg, workers=args.workers, progress=None if args.quiet else progress)
    print(json.dumps({k: manifest[k] for k in ("status", "diverged_count", "files", "results")}, indent=2))
    return 0 if manifest["status"] == "ok" else 3


if __name__ == "__main__":
    sys.exit(main())
