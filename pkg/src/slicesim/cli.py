"""Command-line entry point: slicer train|sweep|compare|personalize|gen-suite|validate-config."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config, load_config_dict
from .harness import run_comparison, run_personalization, run_reward_sweep, run_training
from .scenarios import comparison_config, desk_config, generate_env_suite, paper_profile


def _load(args, default=desk_config) -> "ScenarioConfig":
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    else:
        raw = default()
    if args.profile == "paper":
        raw = paper_profile(raw)
    if args.seed is not None:
        raw.setdefault("run", {})["seed"] = args.seed
    if args.out is not None:
        raw.setdefault("run", {})["out_dir"] = args.out
    return load_config_dict(raw)


def _add_common(p):
    p.add_argument("--config", help="scenario config JSON path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--profile", choices=("desk", "paper"), default="desk")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="slicer",
                                     description="RAN slicing DRL simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("train", "sweep", "compare"):
        p = sub.add_parser(name)
        _add_common(p)
    p = sub.add_parser("personalize")
    _add_common(p)
    p.add_argument("--suite-size", type=int, default=10)
    p.add_argument("--master-seed", type=int, default=7)
    p.add_argument("--methods", default="fedavg,feature,model_weight,reward")
    p = sub.add_parser("gen-suite")
    p.add_argument("--master-seed", type=int, default=7)
    p.add_argument("--suite-size", type=int, default=10)
    p.add_argument("--out", default="runs/suite")
    p = sub.add_parser("validate-config")
    p.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            res = run_training(_load(args))
            print(f"training complete: artifacts in {res['out_dir']}")
        elif args.command == "sweep":
            report = run_reward_sweep(_load(args))
            status = "PASS" if report["pass"] else f"FAIL ({report['first_failure']})"
            print(f"reward shape certification: {status}; argmax={report['argmax_n']}")
            return 0 if report["pass"] else 1
        elif args.command == "compare":
            res = run_comparison(_load(args, default=comparison_config))
            for name, r in res["reports"].items():
                print(f"{name:10s} prbs={r.mean_prbs:7.2f} p_sat={r.p_sat:.3f} "
                      f"delay={r.mean_delay_ttis:.2f}tti reward={r.mean_reward:.3f}")
        elif args.command == "personalize":
            suite = generate_env_suite(args.master_seed, args.suite_size)
            methods = tuple(args.methods.split(","))
            study = run_personalization(suite, methods,
                                        out_dir=args.out or "runs/personalization")
            for name, res in study["methods"].items():
                print(f"{name:14s} mean reward {res['mean']:+.4f}")
            print(f"{'local':14s} mean reward {study['local']['mean']:+.4f}")
        elif args.command == "gen-suite":
            suite = generate_env_suite(args.master_seed, args.suite_size)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            for i, cfg in enumerate(suite):
                (out / f"env{i:02d}.json").write_text(json.dumps(cfg.raw, indent=2))
            print(f"wrote {len(suite)} configs to {out}")
        elif args.command == "validate-config":
            load_config(args.config)
            print("config OK")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
