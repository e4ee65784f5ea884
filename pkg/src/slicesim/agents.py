"""Decision policies: policy-gradient and DQN trainers, the heuristic
up/down rule, fixed-grant calibration, and greedy evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import QosSpec, SliceEnv, SlotMetrics
from .nn import (
    AdamState, MlpArchitecture, PolicyModel, adam_step, backward, forward,
    init_model, softmax_probs, softmax_sample,
)


def default_deltas(j: int = 5) -> list[int]:
    ups = [2 ** i for i in range(j)]
    return sorted([-u for u in ups] + [0] + ups)


EXPERIMENTAL_DELTAS = [-9, -6, -3, 0, 3, 6, 9]


@dataclass
class ActionCodec:
    deltas: list[int] = field(default_factory=default_deltas)
    prb_min: int = 0
    prb_max: int = 150

    def __post_init__(self):
        self.deltas = sorted(int(d) for d in self.deltas)
        if 0 not in self.deltas:
            raise ValueError("action deltas must contain 0")
        if sorted(-d for d in self.deltas) != self.deltas:
            raise ValueError("action deltas must be symmetric around 0")

    @property
    def n_actions(self) -> int:
        return len(self.deltas)


def apply_action(codec: ActionCodec, current_prbs: int, action_index: int) -> int:
    if not (0 <= action_index < codec.n_actions):
        raise ValueError(f"action index {action_index} out of range")
    n = current_prbs + codec.deltas[action_index]
    return int(np.clip(n, codec.prb_min, codec.prb_max))


@dataclass
class PgTrainerConfig:
    episode_len_slots: int = 200
    discount: float = 0.99
    baseline_decay: float = 0.95
    entropy_coeff: float = 0.01
    lr: float = 0.0003
    hidden: list[int] = field(default_factory=lambda: [128, 64])
    use_baseline: bool = True
    normalize_advantages: bool = True

    def __post_init__(self):
        if self.episode_len_slots < 1:
            raise ValueError("episode_len_slots must be >= 1")
        if not (0.0 <= self.discount < 1.0):
            raise ValueError("discount must be in [0, 1)")


@dataclass
class DqnTrainerConfig:
    lr: float = 1e-4
    discount: float = 0.9
    batch: int = 64
    replay_capacity: int = 10_000
    eps_start: float = 0.5
    eps_end: float = 0.05
    eps_decay_steps: int = 2_000
    target_sync_interval: int = 100
    hidden: list[int] = field(default_factory=lambda: [128, 64])

    def __post_init__(self):
        if not (0.0 <= self.eps_end <= self.eps_start <= 1.0):
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")


def epsilon_schedule(cfg: DqnTrainerConfig, step: int) -> float:
    if step >= cfg.eps_decay_steps:
        return cfg.eps_end
    frac = step / cfg.eps_decay_steps
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


def _log_row(slot, n_prbs, reward, metrics: SlotMetrics) -> dict:
    return {
        "slot": slot,
        "n_prbs": n_prbs,
        "reward": reward,
        "arrivals": metrics.arrivals,
        "completed": metrics.completed,
        "satisfied": metrics.satisfied,
        "p_sat": metrics.p_sat,
        "mean_delay_ttis": metrics.mean_delay_ttis,
        "std_delay_ttis": metrics.std_delay_ttis,
        "mean_snr_db": metrics.mean_snr_db,
    }


def pg_train(
    env,
    reward_fn,
    cfg: PgTrainerConfig,
    steps: int,
    rng: np.random.Generator,
    codec: ActionCodec | None = None,
    model: PolicyModel | None = None,
) -> tuple[PolicyModel, list[dict]]:
    """REINFORCE with a moving-average baseline and entropy bonus.

    `steps` counts slicing slots; one gradient update per episode of
    cfg.episode_len_slots slots.  Returns the trained model and a per-slot
    training log.
    """
    codec = codec or ActionCodec(prb_min=env.prb_min, prb_max=env.prb_max)
    if model is None:
        arch = MlpArchitecture(env.observation_size, list(cfg.hidden), codec.n_actions)
        model = init_model(arch, rng)
    adam = AdamState(lr=cfg.lr)
    baseline = None
    log_rows: list[dict] = []
    obs = env.observe()
    slot = 0

    while slot < steps:
        ep_len = min(cfg.episode_len_slots, steps - slot)
        ep_obs, ep_actions, ep_rewards = [], [], []
        for _ in range(ep_len):
            a, _ = softmax_sample(forward(model, obs), rng)
            n = apply_action(codec, env.current_prbs, a)
            next_obs, metrics = env.step(n)
            r = reward_fn(metrics)
            if not math.isfinite(r):
                raise ValueError(f"reward function returned non-finite value {r!r}")
            ep_obs.append(obs)
            ep_actions.append(a)
            ep_rewards.append(r)
            log_rows.append(_log_row(slot, n, r, metrics))
            obs = next_obs
            slot += 1

        returns = np.empty(ep_len)
        g = 0.0
        for t in range(ep_len - 1, -1, -1):
            g = ep_rewards[t] + cfg.discount * g
            returns[t] = g
        if cfg.use_baseline:
            if baseline is None:
                baseline = float(returns.mean())
            advantages = returns - baseline
            baseline = (cfg.baseline_decay * baseline
                        + (1 - cfg.baseline_decay) * float(returns.mean()))
        else:
            advantages = returns
        if cfg.normalize_advantages and ep_len > 1:
            advantages = advantages / (advantages.std() + 1e-8)

        grad = np.zeros_like(model.params)
        for o, a, adv in zip(ep_obs, ep_actions, advantages):
            logits = forward(model, o)
            probs = softmax_probs(logits)
            onehot = np.zeros_like(probs)
            onehot[a] = 1.0
            ent = -np.sum(probs * np.log(probs + 1e-12))
            d_ent = -probs * (np.log(probs + 1e-12) + ent)
            # loss = -(adv * log pi + entropy_coeff * H)
            g_logits = -(adv * (onehot - probs) + cfg.entropy_coeff * d_ent)
            grad += backward(model, o, g_logits)
        grad /= ep_len
        model = PolicyModel(model.arch, adam_step(adam, model.params, grad))

    return model, log_rows


class ReplayBuffer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list[tuple] = []
        self._pos = 0

    def push(self, item):
        if len(self.items) < self.capacity:
            self.items.append(item)
        else:
            self.items[self._pos] = item
            self._pos = (self._pos + 1) % self.capacity

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self.items), size=n)
        return [self.items[i] for i in idx]

    def __len__(self):
        return len(self.items)


def dqn_train(
    env,
    reward_fn,
    cfg: DqnTrainerConfig,
    steps: int,
    rng: np.random.Generator,
    codec: ActionCodec | None = None,
    model: PolicyModel | None = None,
) -> tuple[PolicyModel, list[dict]]:
    """Deep Q-learning with uniform replay, linear epsilon-greedy schedule
    and periodic target-network sync."""
    codec = codec or ActionCodec(prb_min=env.prb_min, prb_max=env.prb_max)
    if model is None:
        arch = MlpArchitecture(env.observation_size, list(cfg.hidden), codec.n_actions)
        model = init_model(arch, rng)
    target = PolicyModel(model.arch, model.params.copy())
    adam = AdamState(lr=cfg.lr)
    replay = ReplayBuffer(cfg.replay_capacity)
    log_rows: list[dict] = []
    obs = env.observe()

    for step in range(steps):
        eps = epsilon_schedule(cfg, step)
        if rng.random() < eps:
            a = int(rng.integers(codec.n_actions))
        else:
            a = int(np.argmax(forward(model, obs)))
        n = apply_action(codec, env.current_prbs, a)
        next_obs, metrics = env.step(n)
        r = reward_fn(metrics)
        if not math.isfinite(r):
            raise ValueError(f"reward function returned non-finite value {r!r}")
        replay.push((obs, a, r, next_obs))
        log_rows.append(_log_row(step, n, r, metrics))
        obs = next_obs

        if len(replay) >= cfg.batch:
            batch = replay.sample(cfg.batch, rng)
            grad = np.zeros_like(model.params)
            for o, ba, br, o2 in batch:
                q = forward(model, o)
                q_next = forward(target, o2)
                td_target = br + cfg.discount * float(np.max(q_next))
                g_logits = np.zeros_like(q)
                g_logits[ba] = 2.0 * (q[ba] - td_target)
                grad += backward(model, o, g_logits)
            grad /= cfg.batch
            model = PolicyModel(model.arch, adam_step(adam, model.params, grad))
        if (step + 1) % cfg.target_sync_interval == 0:
            target = PolicyModel(model.arch, model.params.copy())

    return model, log_rows


def heuristic_policy(
    slot: SlotMetrics,
    qos: QosSpec,
    current_prbs: int,
    step_up: int = 4,
    step_down: int = 1,
    prb_min: int = 0,
    prb_max: int = 150,
) -> int:
    """Increase the grant while the percentile constraint is violated,
    otherwise shrink it."""
    if step_up < 1 or step_down < 1:
        raise ValueError("step sizes must be >= 1")
    if slot.p_sat < 1.0 - qos.epsilon:
        n = current_prbs + step_up
    else:
        n = current_prbs - step_down
    return int(np.clip(n, prb_min, prb_max))


@dataclass
class EvalReport:
    mean_prbs: float
    p_sat: float
    mean_delay_ttis: float
    std_delay_ttis: float
    mean_reward: float


def model_policy(model: PolicyModel, codec: ActionCodec,
                 greedy: bool = True, rng: np.random.Generator | None = None):
    def act(obs, metrics, current_prbs):
        logits = forward(model, obs)
        if greedy:
            a = int(np.argmax(logits))
        else:
            a, _ = softmax_sample(logits, rng)
        return apply_action(codec, current_prbs, a)
    return act


def fixed_policy(n_prbs: int):
    def act(obs, metrics, current_prbs):
        return n_prbs
    return act


def evaluate_policy(
    policy,
    env,
    slots: int,
    reward_fn,
    greedy: bool = True,
    codec: ActionCodec | None = None,
    rng: np.random.Generator | None = None,
) -> EvalReport:
    """Roll a policy (PolicyModel or act-callable) for `slots` slots and
    aggregate the comparison-table metrics."""
    if isinstance(policy, PolicyModel):
        codec = codec or ActionCodec(prb_min=env.prb_min, prb_max=env.prb_max)
        act = model_policy(policy, codec, greedy=greedy, rng=rng)
    else:
        act = policy

    obs = env.observe()
    metrics = env.history[-1] if env.history else SlotMetrics()
    total_prbs = 0
    sat = comp = 0
    sum_d = sum_d2 = 0.0
    sum_r = 0.0
    for _ in range(slots):
        n = act(obs, metrics, env.current_prbs)
        n = int(np.clip(n, env.prb_min, env.prb_max))
        obs, metrics = env.step(n)
        total_prbs += n
        sat += metrics.satisfied
        comp += metrics.completed
        c = metrics.completed
        sum_d += metrics.mean_delay_ttis * c
        sum_d2 += (metrics.std_delay_ttis ** 2 + metrics.mean_delay_ttis ** 2) * c
        sum_r += reward_fn(metrics)
    mean_d = sum_d / comp if comp else 0.0
    var_d = max(sum_d2 / comp - mean_d ** 2, 0.0) if comp else 0.0
    return EvalReport(
        mean_prbs=total_prbs / slots,
        p_sat=sat / comp if comp else 0.0,
        mean_delay_ttis=mean_d,
        std_delay_ttis=math.sqrt(var_d),
        mean_reward=sum_r / slots,
    )


def calibrate_fixed_policies(
    env_factory,
    horizon_slots: int,
    prb_max: int,
) -> dict:
    """Calibrate the Fixed-Av and Fixed-Max grants.

    env_factory(peak: bool) must return a fresh, identically seeded env;
    peak=True pins the load at the pattern's peak multiplier.  Fixed-Av is
    the mean PRB consumption when granted prb_max; Fixed-Max is the
    smallest grant with measured p_sat == 1.0 under peak load (binary
    search over the monotone satisfaction curve).
    """
    env = env_factory(False)
    used = 0.0
    any_traffic = False
    for _ in range(horizon_slots):
        _, m = env.step(prb_max)
        used += m.prbs_used
        any_traffic = any_traffic or m.arrivals > 0
    fixed_av = int(math.ceil(used / horizon_slots))
    if not any_traffic:
        return {"fixed_av": 0, "fixed_max": 0}

    def fully_satisfied(n: int) -> bool:
        e = env_factory(True)
        sat = comp = 0
        for _ in range(horizon_slots):
            _, m = e.step(n)
            sat += m.satisfied
            comp += m.completed
        return comp == 0 or (sat == comp and len(e.queue) == 0)

    lo, hi = 0, prb_max
    if not fully_satisfied(hi):
        return {"fixed_av": fixed_av, "fixed_max": None, "infeasible": True}
    while lo < hi:
        mid = (lo + hi) // 2
        if fully_satisfied(mid):
            hi = mid
        else:
            lo = mid + 1
    return {"fixed_av": fixed_av, "fixed_max": hi}
