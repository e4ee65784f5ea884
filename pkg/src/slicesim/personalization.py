"""Cross-agent model aggregation: coefficient matrices, weight blending
and the multi-environment personalization study."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import ActionCodec, EvalReport, evaluate_policy
from .nn import PolicyModel

ROW_SUM_TOL = 1e-9


@dataclass
class EnvFeatureVector:
    d_max_ms: float
    epsilon: float
    k_tilde: float   # average user count
    c_tilde: float   # average per-PRB capacity (bits)
    t_tilde: float   # average packets per slot

    def as_array(self) -> np.ndarray:
        return np.array([self.d_max_ms, self.epsilon, self.k_tilde, self.c_tilde, self.t_tilde])


@dataclass
class SigmaVector:
    sigmas: np.ndarray

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if np.any(self.sigmas <= 0):
            raise ValueError("all temperature entries must be > 0")


@dataclass
class AggregationMatrix:
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 2 or self.alpha.shape[0] != self.alpha.shape[1]:
            raise ValueError("alpha must be square")
        if np.any(self.alpha < 0):
            raise ValueError("alpha entries must be non-negative")
        if np.max(np.abs(self.alpha.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("alpha rows must sum to 1")


@dataclass
class RewardTable:
    r_hat: np.ndarray  # r_hat[i][j]: mean reward of model j in environment i
    t_episodes: int = 10

    def __post_init__(self):
        self.r_hat = np.asarray(self.r_hat, dtype=float)
        if not np.all(np.isfinite(self.r_hat)):
            raise ValueError("reward table must be finite")


def alpha_fedavg(n: int) -> AggregationMatrix:
    if n < 1:
        raise ValueError("need at least one agent")
    return AggregationMatrix(np.full((n, n), 1.0 / n))


def _row_normalize(sim: np.ndarray) -> AggregationMatrix:
    return AggregationMatrix(sim / sim.sum(axis=1, keepdims=True))


def alpha_feature(
    features: list[EnvFeatureVector],
    sigma: SigmaVector,
    similarity: bool = True,
) -> AggregationMatrix:
    """Similarity-kernel aggregation over environment feature vectors.

    similarity=False reproduces the distance-proportional variant (larger
    weight to more distant agents) for ablation.
    """
    f = np.stack([v.as_array() for v in features])
    n = len(features)
    sim = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            sq = (f[i] - f[j]) ** 2 / sigma.sigmas
            if similarity:
                sim[i, j] = np.sum(np.exp(-sq))
            else:
                sim[i, j] = np.sum(np.exp(sq))
    return _row_normalize(sim)


def alpha_model_weight(
    models: list[PolicyModel],
    similarity: bool = True,
    tau: float | None = None,
) -> AggregationMatrix:
    """Aggregation from pairwise L2 weight distances.

    The similarity kernel uses tau = median pairwise squared distance
    unless given.  similarity=False uses raw squared distances
    (the printed-form ablation)."""
    n = len(models)
    arch = models[0].arch
    for m in models[1:]:
        if m.arch.layer_dims != arch.layer_dims:
            raise ValueError("all models must share one architecture")
    w = np.stack([m.params for m in models])
    d2 = np.array([[np.sum((w[i] - w[j]) ** 2) for j in range(n)] for i in range(n)])
    if not similarity:
        if np.any(d2.sum(axis=1) == 0):
            return alpha_fedavg(n)
        return _row_normalize(d2)
    if tau is None:
        off = d2[~np.eye(n, dtype=bool)]
        tau = float(np.median(off)) if off.size and np.median(off) > 0 else 1.0
    return _row_normalize(np.exp(-d2 / tau))


def alpha_reward(table: RewardTable, beta: float = 3.0) -> AggregationMatrix:
    """Row-wise softmax of beta * r_hat (max-subtracted for stability)."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    z = beta * table.r_hat
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return AggregationMatrix(e / e.sum(axis=1, keepdims=True))


def blend_models(models: list[PolicyModel], alpha_row: np.ndarray) -> PolicyModel:
    """Convex combination of flat weight vectors."""
    alpha_row = np.asarray(alpha_row, dtype=float)
    if len(alpha_row) != len(models):
        raise ValueError("alpha row length must match model count")
    if np.any(alpha_row < 0) or abs(alpha_row.sum() - 1.0) > ROW_SUM_TOL:
        raise ValueError("alpha row must be non-negative and sum to 1")
    arch = models[0].arch
    for m in models[1:]:
        if m.arch.layer_dims != arch.layer_dims:
            raise ValueError("all models must share one architecture")
    blended = np.zeros_like(models[0].params)
    for a, m in zip(alpha_row, models):
        blended += a * m.params
    return PolicyModel(arch, blended)


def build_reward_table(
    models: list[PolicyModel],
    env_factories: list,
    reward_fns: list,
    t_episodes: int = 10,
    episode_slots: int = 10,
    codecs: list[ActionCodec] | None = None,
) -> RewardTable:
    """r_hat[i][j] = mean per-slot reward of model j, run greedily in a
    fresh instance of environment i, averaged over t_episodes episodes.

    env_factories[i](episode_index) must return an independently seeded
    fresh env for environment i.
    """
    n = len(models)
    if len(env_factories) != n:
        raise ValueError("need one environment per model")
    r_hat = np.zeros((n, n))
    for i in range(n):
        codec = codecs[i] if codecs else None
        for j in range(n):
            total = 0.0
            for ep in range(t_episodes):
                env = env_factories[i](ep)
                rep = evaluate_policy(models[j], env, episode_slots,
                                      reward_fns[i], greedy=True, codec=codec)
                total += rep.mean_reward
            r_hat[i, j] = total / t_episodes
    return RewardTable(r_hat, t_episodes)


METHODS = ("fedavg", "feature", "model_weight", "reward")


def personalization_study(
    models: list[PolicyModel],
    env_factories: list,
    reward_fns: list,
    features: list[EnvFeatureVector] | None = None,
    methods=METHODS,
    beta: float = 3.0,
    t_episodes: int = 10,
    episode_slots: int = 10,
    eval_slots: int = 50,
    codecs: list[ActionCodec] | None = None,
) -> dict:
    """Blend every agent's model by each method and evaluate each
    personalized model in its own environment.

    Returns per-method per-env mean rewards, the method means, the
    local-model reference, and the alpha / r_hat matrices."""
    n = len(models)

    def eval_in_env(i: int, model: PolicyModel) -> float:
        env = env_factories[i]("eval")
        codec = codecs[i] if codecs else None
        rep = evaluate_policy(model, env, eval_slots, reward_fns[i],
                              greedy=True, codec=codec)
        return rep.mean_reward

    local = [eval_in_env(i, models[i]) for i in range(n)]

    alphas: dict[str, AggregationMatrix] = {}
    r_hat = None
    if "fedavg" in methods:
        alphas["fedavg"] = alpha_fedavg(n)
    if "feature" in methods:
        if features is None:
            raise ValueError("feature method requires environment features")
        f = np.stack([v.as_array() for v in features])
        std = f.std(axis=0)
        sigma = SigmaVector(np.where(std > 0, std ** 2, 1.0))
        alphas["feature"] = alpha_feature(features, sigma)
    if "model_weight" in methods:
        alphas["model_weight"] = alpha_model_weight(models)
    if "reward" in methods:
        table = build_reward_table(models, env_factories, reward_fns,
                                   t_episodes, episode_slots, codecs)
        r_hat = table.r_hat
        alphas["reward"] = alpha_reward(table, beta)

    results = {}
    for name, agg in alphas.items():
        per_env = [
            eval_in_env(i, blend_models(models, agg.alpha[i])) for i in range(n)
        ]
        results[name] = {"per_env": per_env, "mean": float(np.mean(per_env))}

    return {
        "n_envs": n,
        "local": {"per_env": local, "mean": float(np.mean(local))},
        "methods": results,
        "alphas": {k: v.alpha.tolist() for k, v in alphas.items()},
        "r_hat": r_hat.tolist() if r_hat is not None else None,
        "beta": beta,
        "t_episodes": t_episodes,
    }
