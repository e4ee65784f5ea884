"""Run orchestration: training, reward sweep, policy comparison and the
personalization study, with CSV/JSON artifacts and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .agents import (
    calibrate_fixed_policies, dqn_train, evaluate_policy, fixed_policy,
    heuristic_policy, pg_train,
)
from .config import ScenarioConfig, substream, substream_rng
from .env import SliceEnv
from .nn import save_checkpoint
from .personalization import EnvFeatureVector, personalization_study
from .rewards import validate_reward_shape
from .traffic import LoadPattern

SCHEMA_VERSION = "slicesim-csv-1"
TRAINING_COLUMNS = [
    "schema_version", "slot", "n_prbs", "arrivals", "completed", "satisfied",
    "p_sat", "mean_delay_ms", "std_delay_ms", "mean_snr_db", "reward",
    "epsilon", "d_max_ms", "seed",
]


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_manifest(out_dir: Path, cfg: ScenarioConfig, files: dict,
                   started: float, extra: dict | None = None):
    manifest = {
        "config_hash": config_hash(cfg.raw),
        "seed": cfg.seed,
        "code_version": __version__,
        "files": files,
        "wall_time_s": round(time.time() - started, 3),
        **(extra or {}),
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2))
    _atomic_write(out_dir / "config.json", json.dumps(cfg.raw, indent=2))
    return manifest


def write_training_csv(path: Path, rows: list[dict], cfg: ScenarioConfig):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRAINING_COLUMNS)
        for r in rows:
            w.writerow([
                SCHEMA_VERSION, r["slot"], r["n_prbs"], r["arrivals"],
                r["completed"], r["satisfied"],
                f"{r['p_sat']:.6f}",
                f"{r['mean_delay_ttis'] * cfg.tti_ms:.6f}",
                f"{r['std_delay_ttis'] * cfg.tti_ms:.6f}",
                f"{r['mean_snr_db']:.6f}",
                f"{r['reward']:.6f}",
                cfg.qos.epsilon, cfg.d_max_ms, cfg.seed,
            ])


def run_training(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> dict:
    """Train one agent per the config; writes checkpoint, CSV and manifest."""
    started = time.time()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = cfg.build_env("env")
    codec = cfg.codec()
    reward_fn = cfg.reward_fn()
    rng = substream_rng(cfg.seed, "agent")
    if cfg.algorithm == "pg":
        model, rows = pg_train(env, reward_fn, cfg.pg, cfg.steps, rng, codec)
    else:
        model, rows = dqn_train(env, reward_fn, cfg.dqn, cfg.steps, rng, codec)

    csv_path = out / "training.csv"
    write_training_csv(csv_path, rows, cfg)
    ckpt_path = out / "model.npz"
    save_checkpoint(model, ckpt_path, {
        "seed": cfg.seed,
        "algorithm": cfg.algorithm,
        "reward_kind": cfg.reward_kind,
        "config_hash": config_hash(cfg.raw),
    })
    manifest = write_manifest(out, cfg, {
        "training_csv": csv_path.name, "checkpoint": ckpt_path.name,
    }, started)
    return {"model": model, "log": rows, "manifest": manifest, "out_dir": out}


def sweep_env_factory(cfg: ScenarioConfig, seed_label: str = "sweep"):
    """Env factory for the PRB sweep.

    Every point replays the same traffic/channel realization (common
    random numbers), so curves over n_prbs are directly comparable and
    the monotonicity checks are not drowned by sampling noise."""
    def factory(n_prbs: int) -> SliceEnv:
        return cfg.build_env(seed_label)
    return factory


def run_reward_sweep(cfg: ScenarioConfig, out_dir: str | Path | None = None,
                     prb_step: int = 1, measure_slots: int = 50,
                     warmup_slots: int = 5) -> dict:
    """PRB sweep oracle + shaped-reward certification report."""
    started = time.time()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prbs = list(range(max(cfg.prb_min, 1), cfg.prb_max + 1, prb_step))
    report = validate_reward_shape(
        sweep_env_factory(cfg), cfg.qos.epsilon, cfg.shaped, cfg.lln,
        prb_values=prbs, measure_slots=measure_slots, warmup_slots=warmup_slots,
    )
    sweep = report["sweep"]
    csv_path = out / "reward_sweep.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["schema_version", "n_prbs", "p_sat", "mean_delay_ms",
                    "lln_reward", "shaped_reward"])
        for i in range(len(sweep["n_prbs"])):
            w.writerow([
                SCHEMA_VERSION, sweep["n_prbs"][i],
                f"{sweep['p_sat'][i]:.6f}",
                f"{sweep['mean_delay'][i] * cfg.tti_ms:.6f}",
                f"{sweep['lln_reward'][i]:.6f}",
                f"{sweep['shaped_reward'][i]:.6f}",
            ])
    _atomic_write(out / "reward_shape_report.json", json.dumps(report, indent=2))
    write_manifest(out, cfg, {
        "sweep_csv": csv_path.name, "report": "reward_shape_report.json",
    }, started)
    return report


COMPARISON_POLICIES = ("pda_drl", "md_drl", "heuristic", "fixed_av", "fixed_max")


def run_comparison(cfg: ScenarioConfig, out_dir: str | Path | None = None,
                   train_steps: int | None = None, eval_slots: int = 300,
                   calibration_slots: int = 300) -> dict:
    """Train PDA-DRL and MD-DRL, calibrate fixed policies, and evaluate all
    five policies on one seeded eval env under the ramp load pattern."""
    started = time.time()
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = train_steps or cfg.steps
    codec = cfg.codec()
    ramp = LoadPattern(kind="ramp-up-down", peak_multiplier=2.0, period_slots=60)

    shaped_fn = cfg.reward_fn("shaped")
    md_fn = cfg.reward_fn("mean_delay")

    pda_env = cfg.build_env("train:pda", load_pattern=ramp)
    pda_model, _ = pg_train(pda_env, shaped_fn, cfg.pg, steps,
                            substream_rng(cfg.seed, "agent:pda"), codec)
    md_env = cfg.build_env("train:md", load_pattern=ramp)
    md_model, _ = pg_train(md_env, md_fn, cfg.pg, steps,
                           substream_rng(cfg.seed, "agent:md"), codec)

    def calib_factory(peak: bool):
        if peak:
            return cfg.build_env("calib", rate_scale=ramp.peak_multiplier)
        return cfg.build_env("calib", load_pattern=ramp)

    calib = calibrate_fixed_policies(calib_factory, calibration_slots, cfg.prb_max)
    if calib.get("fixed_max") is None:
        raise RuntimeError("Fixed-Max calibration infeasible within prb_max")

    def heuristic_act(obs, metrics, current):
        return heuristic_policy(metrics, cfg.qos, current,
                                prb_min=cfg.prb_min, prb_max=cfg.prb_max)

    policies = {
        "pda_drl": pda_model,
        "md_drl": md_model,
        "heuristic": heuristic_act,
        "fixed_av": fixed_policy(calib["fixed_av"]),
        "fixed_max": fixed_policy(calib["fixed_max"]),
    }
    reports = {}
    for name, policy in policies.items():
        env = cfg.build_env("eval", load_pattern=ramp)
        reports[name] = evaluate_policy(policy, env, eval_slots, shaped_fn,
                                        greedy=True, codec=codec)

    csv_path = out / "comparison.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["schema_version", "policy", "mean_prbs", "p_sat",
                    "mean_delay_ms", "std_delay_ms", "mean_reward"])
        for name in COMPARISON_POLICIES:
            r = reports[name]
            w.writerow([
                SCHEMA_VERSION, name,
                f"{r.mean_prbs:.4f}", f"{r.p_sat:.6f}",
                f"{r.mean_delay_ttis * cfg.tti_ms:.6f}",
                f"{r.std_delay_ttis * cfg.tti_ms:.6f}",
                f"{r.mean_reward:.6f}",
            ])
    write_manifest(out, cfg, {"comparison_csv": csv_path.name}, started,
                   extra={"calibration": calib})
    return {"reports": reports, "calibration": calib, "out_dir": out}


def env_features(cfg: ScenarioConfig, probe_slots: int = 5) -> EnvFeatureVector:
    """Measured feature vector for feature-based aggregation."""
    env = cfg.build_env("features")
    arrivals = []
    for _ in range(probe_slots):
        _, m = env.step(cfg.prb_max)
        arrivals.append(m.arrivals)
    # average per-PRB capacity from the CQI map at the measured mean SNR
    mean_snr_db = float(np.mean([m.mean_snr_db for m in env.history]))
    idx = int(np.searchsorted(env._cqi_thresholds, mean_snr_db, side="right") - 1)
    c_tilde = float(env._cqi_bits[idx]) if idx >= 0 else 0.0
    return EnvFeatureVector(
        d_max_ms=cfg.d_max_ms,
        epsilon=cfg.qos.epsilon,
        k_tilde=float(len(cfg.users)),
        c_tilde=c_tilde,
        t_tilde=float(np.mean(arrivals)),
    )


def run_personalization(
    suite: list[ScenarioConfig],
    methods=("fedavg", "feature", "model_weight", "reward"),
    out_dir: str | Path = "runs/personalization",
    train_steps: int | None = None,
    beta: float = 3.0,
    t_episodes: int = 10,
    episode_slots: int = 25,
    eval_slots: int = 50,
) -> dict:
    """Train one local model per suite env, aggregate by each method, and
    evaluate personalized models in their own environments."""
    started = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    models, factories, reward_fns, codecs, features = [], [], [], [], []
    for i, cfg in enumerate(suite):
        env = cfg.build_env("env")
        codec = cfg.codec()
        fn = cfg.reward_fn("shaped")
        model, _ = pg_train(env, fn, cfg.pg, train_steps or cfg.steps,
                            substream_rng(cfg.seed, "agent"), codec)
        models.append(model)
        codecs.append(codec)
        reward_fns.append(fn)
        features.append(env_features(cfg))

        def make_factory(c=cfg):
            return lambda tag: c.build_env(f"personalization-eval:{tag}")
        factories.append(make_factory())

    study = personalization_study(
        models, factories, reward_fns, features=features, methods=methods,
        beta=beta, t_episodes=t_episodes, episode_slots=episode_slots,
        eval_slots=eval_slots, codecs=codecs,
    )
    _atomic_write(out / "personalization_report.json", json.dumps(study, indent=2))
    if study["r_hat"] is not None:
        np.savetxt(out / "r_hat.csv", np.asarray(study["r_hat"]), delimiter=",")
    for name, alpha in study["alphas"].items():
        np.savetxt(out / f"alpha_{name}.csv", np.asarray(alpha), delimiter=",")
    manifest = {
        "suite_hashes": [config_hash(c.raw) for c in suite],
        "code_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2))
    return study
