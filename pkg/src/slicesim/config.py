"""Scenario configuration: JSON loading, validation, environment
construction and seeded sub-streams."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .agents import ActionCodec, DqnTrainerConfig, PgTrainerConfig, default_deltas
from .channel import ChannelState, CqiTable, RadioConfig
from .env import QosSpec, SliceEnv, UserState
from .rewards import RewardParams, ShapedRewardCoeffs
from .traffic import LoadPattern, UserTrafficProfile


class ConfigError(ValueError):
    """Validation failure; message names the offending key path."""


def substream(seed: int, label: str) -> np.random.SeedSequence:
    """Named random sub-stream: stable under adding other consumers."""
    return np.random.SeedSequence([int(seed), zlib.crc32(label.encode())])


def substream_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream(seed, label)))


def _require(d: dict, allowed: set[str], path: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _get(d: dict, key: str, default, path: str, lo=None, hi=None):
    v = d.get(key, default)
    if v is None:
        raise ConfigError(f"{path}.{key}: required")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}: expected >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}.{key}: expected <= {hi}, got {v}")
    return v


@dataclass
class ScenarioConfig:
    raw: dict = field(repr=False)
    qos: QosSpec = field(init=False)
    radio: RadioConfig = field(init=False)
    cqi: CqiTable = field(init=False)
    users: list[dict] = field(init=False)
    load_pattern: LoadPattern = field(init=False)

    h_history: int = field(init=False)
    slot_ttis: int = field(init=False)
    prb_min: int = field(init=False)
    prb_max: int = field(init=False)
    start_prbs: int = field(init=False)
    tti_ms: float = field(init=False)
    d_max_ms: float = field(init=False)

    reward_kind: str = field(init=False)
    shaped: ShapedRewardCoeffs = field(init=False)
    lln: RewardParams = field(init=False)
    md_c_d: float = field(init=False)
    md_c_n: float = field(init=False)

    algorithm: str = field(init=False)
    deltas: list[int] = field(init=False)
    pg: PgTrainerConfig = field(init=False)
    dqn: DqnTrainerConfig = field(init=False)

    steps: int = field(init=False)
    seed: int = field(init=False)
    out_dir: str = field(init=False)

    def __post_init__(self):
        d = self.raw
        _require(d, {"qos", "env", "radio", "cqi", "users", "load_pattern",
                     "reward", "agent", "run"}, "config")

        qos = d.get("qos", {})
        _require(qos, {"d_max_ms", "epsilon"}, "qos")
        self.d_max_ms = float(_get(qos, "d_max_ms", 5.0, "qos"))
        eps = float(_get(qos, "epsilon", 0.1, "qos"))
        if not (0.0 < eps < 1.0):
            raise ConfigError(f"qos.epsilon: expected in (0, 1), got {eps}")

        env = d.get("env", {})
        _require(env, {"h_history", "slot_ttis", "prb_min", "prb_max",
                       "start_prbs", "tti_ms", "overload_limit"}, "env")
        self.tti_ms = float(_get(env, "tti_ms", 1.0, "env", lo=1e-6))
        self.h_history = int(_get(env, "h_history", 3, "env", lo=1))
        self.slot_ttis = int(_get(env, "slot_ttis", 200, "env", lo=1))
        self.prb_min = int(_get(env, "prb_min", 0, "env", lo=0))
        self.prb_max = int(_get(env, "prb_max", 150, "env", lo=1))
        if self.prb_min > self.prb_max:
            raise ConfigError("env.prb_min: must be <= env.prb_max")
        self.start_prbs = int(_get(env, "start_prbs", self.prb_max // 2, "env",
                                   lo=self.prb_min, hi=self.prb_max))
        self.overload_limit = int(_get(env, "overload_limit", 10_000, "env", lo=1))

        d_max_ttis = int(round(self.d_max_ms / self.tti_ms))
        try:
            self.qos = QosSpec(d_max_ttis=d_max_ttis, epsilon=eps)
        except ValueError as e:
            raise ConfigError(f"qos: {e}") from e

        radio = d.get("radio", {})
        _require(radio, {"tx_power_watts", "noise_watts", "prb_bandwidth_hz"}, "radio")
        try:
            self.radio = RadioConfig(
                tx_power_watts=float(radio.get("tx_power_watts", 1.0)),
                noise_watts=float(radio.get("noise_watts", 0.1)),
                prb_bandwidth_hz=float(radio.get("prb_bandwidth_hz", 180e3)),
                tti_seconds=self.tti_ms / 1000.0,
            )
        except ValueError as e:
            raise ConfigError(f"radio: {e}") from e

        cqi = d.get("cqi", {})
        _require(cqi, {"thresholds_db", "efficiencies"}, "cqi")
        try:
            if cqi:
                self.cqi = CqiTable(list(cqi["thresholds_db"]), list(cqi["efficiencies"]))
            else:
                self.cqi = CqiTable()
        except (KeyError, ValueError) as e:
            raise ConfigError(f"cqi: {e}") from e

        users = d.get("users")
        if not users:
            raise ConfigError("users: at least one user required")
        self.users = []
        for i, u in enumerate(users):
            _require(u, {"rate", "size_class", "doppler_hz", "large_scale_db", "sigma_ln"},
                     f"users[{i}]")
            try:
                profile = UserTrafficProfile(
                    arrival_rate_per_slot=float(_get(u, "rate", None, f"users[{i}]", lo=0)),
                    size_class=u.get("size_class", "medium"),
                    sigma_ln=float(u.get("sigma_ln", 0.5)),
                )
            except ValueError as e:
                raise ConfigError(f"users[{i}]: {e}") from e
            self.users.append({
                "profile": profile,
                "doppler_hz": float(_get(u, "doppler_hz", 20.0, f"users[{i}]", lo=0)),
                "large_scale_db": float(u.get("large_scale_db", 0.0)),
            })

        lp = d.get("load_pattern", {})
        _require(lp, {"kind", "peak_multiplier", "period_slots"}, "load_pattern")
        try:
            self.load_pattern = LoadPattern(
                kind=lp.get("kind", "constant"),
                peak_multiplier=float(lp.get("peak_multiplier", 1.0)),
                period_slots=int(lp.get("period_slots", 100)),
            )
        except ValueError as e:
            raise ConfigError(f"load_pattern: {e}") from e

        rw = d.get("reward", {})
        _require(rw, {"kind", "gamma_p", "zeta_p", "nu_p", "gamma_n", "zeta_n",
                      "nu_n", "r_max", "prb_norm", "lambda", "c_d", "c_n"}, "reward")
        self.reward_kind = rw.get("kind", "shaped")
        if self.reward_kind not in ("shaped", "lln", "mean_delay"):
            raise ConfigError(f"reward.kind: unknown kind {self.reward_kind!r}")
        try:
            self.shaped = ShapedRewardCoeffs(
                gamma_p=float(rw.get("gamma_p", 8.0)),
                zeta_p=float(rw.get("zeta_p", 1.0)),
                nu_p=float(rw.get("nu_p", -6.4)),
                gamma_n=float(rw.get("gamma_n", 4.0)),
                zeta_n=float(rw.get("zeta_n", -4.0)),
                nu_n=float(rw.get("nu_n", -8.0)),
                r_max=float(rw.get("r_max", 25.0)),
                prb_norm=float(rw.get("prb_norm", 10.0)),
            )
            self.lln = RewardParams(
                lambda_weight=float(rw.get("lambda", 18.0)),
                prb_norm=float(rw.get("prb_norm", 10.0)),
            )
        except ValueError as e:
            raise ConfigError(f"reward: {e}") from e
        self.md_c_d = float(rw.get("c_d", 10.0))
        self.md_c_n = float(rw.get("c_n", 1.0))

        ag = d.get("agent", {})
        _require(ag, {"algorithm", "deltas", "episode_len_slots", "discount",
                      "baseline_decay", "entropy_coeff", "lr", "hidden",
                      "dqn_lr", "dqn_discount", "batch", "replay_capacity",
                      "eps_start", "eps_end", "eps_decay_steps",
                      "target_sync_interval"}, "agent")
        self.algorithm = ag.get("algorithm", "pg")
        if self.algorithm not in ("pg", "dqn"):
            raise ConfigError(f"agent.algorithm: unknown algorithm {self.algorithm!r}")
        self.deltas = [int(x) for x in ag.get("deltas", default_deltas())]
        try:
            self.pg = PgTrainerConfig(
                episode_len_slots=int(ag.get("episode_len_slots", 20)),
                discount=float(ag.get("discount", 0.95)),
                baseline_decay=float(ag.get("baseline_decay", 0.9)),
                entropy_coeff=float(ag.get("entropy_coeff", 0.03)),
                lr=float(ag.get("lr", 0.001)),
                hidden=[int(h) for h in ag.get("hidden", [64, 64])],
            )
            self.dqn = DqnTrainerConfig(
                lr=float(ag.get("dqn_lr", 1e-4)),
                discount=float(ag.get("dqn_discount", 0.9)),
                batch=int(ag.get("batch", 64)),
                replay_capacity=int(ag.get("replay_capacity", 10_000)),
                eps_start=float(ag.get("eps_start", 0.5)),
                eps_end=float(ag.get("eps_end", 0.05)),
                eps_decay_steps=int(ag.get("eps_decay_steps", 2_000)),
                target_sync_interval=int(ag.get("target_sync_interval", 100)),
                hidden=[int(h) for h in ag.get("hidden", [128, 64])],
            )
        except ValueError as e:
            raise ConfigError(f"agent: {e}") from e

        run = d.get("run", {})
        _require(run, {"steps", "seed", "out_dir"}, "run")
        self.steps = int(_get(run, "steps", 3000, "run", lo=1))
        self.seed = int(run.get("seed", 0))
        self.out_dir = str(run.get("out_dir", "runs/default"))

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))

    def codec(self) -> ActionCodec:
        return ActionCodec(deltas=list(self.deltas),
                           prb_min=self.prb_min, prb_max=self.prb_max)

    def build_env(
        self,
        seed_label: str = "env",
        seed: int | None = None,
        load_pattern: LoadPattern | None = None,
        rate_scale: float = 1.0,
    ) -> SliceEnv:
        base_seed = self.seed if seed is None else seed
        users = []
        for u in self.users:
            profile = u["profile"]
            if rate_scale != 1.0:
                profile = UserTrafficProfile(
                    arrival_rate_per_slot=profile.arrival_rate_per_slot * rate_scale,
                    size_class=profile.size_class,
                    sigma_ln=profile.sigma_ln,
                )
            users.append(UserState(
                channel=ChannelState(doppler_hz=u["doppler_hz"],
                                     large_scale_db=u["large_scale_db"]),
                profile=profile,
            ))
        env = SliceEnv(
            qos=self.qos,
            users=users,
            radio=self.radio,
            cqi=self.cqi,
            load_pattern=load_pattern or self.load_pattern,
            h_ttis_per_slot=self.slot_ttis,
            h_history=self.h_history,
            prb_min=self.prb_min,
            prb_max=self.prb_max,
            seed=substream(base_seed, seed_label),
            overload_limit=self.overload_limit,
        )
        env.current_prbs = self.start_prbs
        return env

    def reward_fn(self, kind: str | None = None):
        """Per-slot reward closure over this config's QoS and coefficients."""
        kind = kind or self.reward_kind
        eps = self.qos.epsilon
        if kind == "shaped":
            from .rewards import shaped_slot_reward
            return lambda m: shaped_slot_reward(m, eps, self.shaped)
        if kind == "lln":
            from .rewards import lln_reward
            return lambda m: lln_reward(m, eps, self.lln)
        if kind == "mean_delay":
            from .rewards import mean_delay_reward
            return lambda m: mean_delay_reward(
                m, self.qos.d_max_ttis, self.md_c_d, self.md_c_n, self.shaped.prb_norm)
        raise ConfigError(f"reward.kind: unknown kind {kind!r}")


def load_config_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    return ScenarioConfig(raw=raw)


def load_config(path) -> ScenarioConfig:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON: {e}") from e
    return load_config_dict(raw)
