"""Reward functions: per-packet LLN reward, shaped two-branch reward,
mean-delay baseline reward, and the PRB-sweep certification oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import SliceEnv, SlotMetrics


@dataclass
class RewardParams:
    """Lagrangian per-packet reward: u1 for satisfied, u0 for violated."""
    lambda_weight: float = 18.0
    prb_norm: float = 10.0

    def __post_init__(self):
        if self.lambda_weight <= 0:
            raise ValueError("lambda_weight must be > 0")
        if self.prb_norm <= 0:
            raise ValueError("prb_norm must be > 0")

    def u1(self, epsilon: float) -> float:
        return self.lambda_weight * epsilon

    def u0(self, epsilon: float) -> float:
        return -self.lambda_weight * (1.0 - epsilon)


@dataclass
class ShapedRewardCoeffs:
    gamma_p: float = 8.0
    zeta_p: float = 1.0
    nu_p: float = -6.4
    gamma_n: float = 4.0
    zeta_n: float = -4.0
    nu_n: float = -8.0
    r_max: float = 25.0
    prb_norm: float = 10.0

    def __post_init__(self):
        if self.r_max <= 0:
            raise ValueError("r_max must be > 0")
        if self.prb_norm <= 0:
            raise ValueError("prb_norm must be > 0")


def delta(p_sat: float, epsilon: float) -> float:
    """Satisfaction margin: measured p_sat minus the (1 - epsilon) target."""
    return p_sat - (1.0 - epsilon)


def lln_reward(slot: SlotMetrics, epsilon: float, params: RewardParams) -> float:
    """Per-packet +-u reward normalized by the average arrival count,
    minus the PRB cost."""
    if slot.ewma_arrivals <= 0:
        raise ValueError("ewma_arrivals must be > 0 for the LLN reward")
    violated = slot.completed - slot.satisfied
    packet_term = (params.u1(epsilon) * slot.satisfied
                   + params.u0(epsilon) * violated) / slot.ewma_arrivals
    return packet_term - slot.n_prbs / params.prb_norm


def shaped_reward(d: float, n_prbs: int, coeffs: ShapedRewardCoeffs) -> float:
    """Two-branch shaped reward, clipped to [-r_max, 0].

    The quadratic PRB term on the satisfied branch acts as a penalty so
    the reward decreases beyond the minimal satisfying grant.
    """
    n = n_prbs / coeffs.prb_norm
    if d >= 0:
        r = -d * coeffs.gamma_p - math.exp(coeffs.zeta_p * d + coeffs.nu_p) * n * n
    else:
        r = d * coeffs.gamma_n + math.exp(coeffs.zeta_n * d + coeffs.nu_n) * n
    return float(np.clip(r, -coeffs.r_max, 0.0))


def shaped_slot_reward(slot: SlotMetrics, epsilon: float, coeffs: ShapedRewardCoeffs) -> float:
    return shaped_reward(delta(slot.p_sat, epsilon), slot.n_prbs, coeffs)


def mean_delay_reward(
    slot: SlotMetrics,
    d_target_ttis: int,
    c_d: float = 10.0,
    c_n: float = 1.0,
    prb_norm: float = 10.0,
) -> float:
    """Quadratic delay-tracking penalty plus linear PRB cost; maximal when
    the slot's mean delay hits the target with zero PRBs."""
    if d_target_ttis < 1:
        raise ValueError("d_target_ttis must be >= 1")
    if slot.completed > 0:
        track = ((slot.mean_delay_ttis - d_target_ttis) / d_target_ttis) ** 2
    else:
        track = 1.0
    return -c_d * track - c_n * slot.n_prbs / prb_norm


def _ls_slope(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def sweep_prbs(
    env_factory,
    epsilon: float,
    coeffs: ShapedRewardCoeffs,
    params: RewardParams,
    prb_values,
    measure_slots: int = 50,
    warmup_slots: int = 5,
):
    """Stationary statistics under each fixed PRB grant.

    Returns dict of arrays: n_prbs, p_sat, mean_delay, lln_reward,
    shaped_reward.  Each point runs in a fresh, independently seeded env.
    """
    rows = {"n_prbs": [], "p_sat": [], "mean_delay": [], "lln_reward": [], "shaped_reward": []}
    for n in prb_values:
        env = env_factory(n)
        for _ in range(warmup_slots):
            env.step(n)
        sat = comp = 0
        lln_acc = shaped_acc = delay_acc = 0.0
        for _ in range(measure_slots):
            _, m = env.step(n)
            sat += m.satisfied
            comp += m.completed
            lln_acc += lln_reward(m, epsilon, params) if m.ewma_arrivals > 0 else 0.0
            shaped_acc += shaped_slot_reward(m, epsilon, coeffs)
            delay_acc += m.mean_delay_ttis * m.completed
        rows["n_prbs"].append(n)
        rows["p_sat"].append(sat / comp if comp else 0.0)
        rows["mean_delay"].append(delay_acc / comp if comp else 0.0)
        rows["lln_reward"].append(lln_acc / measure_slots)
        rows["shaped_reward"].append(shaped_acc / measure_slots)
    return {k: np.asarray(v) for k, v in rows.items()}


def validate_reward_shape(
    env_factory,
    epsilon: float,
    coeffs: ShapedRewardCoeffs,
    params: RewardParams | None = None,
    prb_values=None,
    measure_slots: int = 50,
    warmup_slots: int = 5,
    prb_max: int = 150,
) -> dict:
    """Certify that the shaped reward escapes the unlearnable region.

    Pass requires: stationary shaped reward rising below the knee
    (including on any p_sat == 0 plateau), falling beyond it, with a
    unique argmax at the minimal satisfying grant shared with the LLN
    reward's argmax.
    """
    params = params or RewardParams(prb_norm=coeffs.prb_norm)
    if prb_values is None:
        prb_values = list(range(1, prb_max + 1))
    sweep = sweep_prbs(env_factory, epsilon, coeffs, params, prb_values,
                       measure_slots, warmup_slots)
    n = sweep["n_prbs"]
    p_sat = sweep["p_sat"]
    shaped = sweep["shaped_reward"]
    lln = sweep["lln_reward"]
    target = 1.0 - epsilon

    report = {
        "argmax_n": None, "argmax_lln_n": None, "knee_n": None,
        "monotone_below": False, "monotone_above": False,
        "argmax_at_knee": False, "argmax_agree": False,
        "pass": False, "first_failure": None,
        "sweep": {k: v.tolist() for k, v in sweep.items()},
    }

    satisfying = np.nonzero(p_sat >= target)[0]
    if len(satisfying) == 0:
        report["first_failure"] = "no_satisfying_prb"
        return report
    knee_i = int(satisfying[0])
    report["knee_n"] = int(n[knee_i])

    argmax_i = int(np.argmax(shaped))
    report["argmax_n"] = int(n[argmax_i])
    report["argmax_lln_n"] = int(n[int(np.argmax(lln))])

    below = slice(0, knee_i)
    slope_below = _ls_slope(n[below], shaped[below])
    plateau = np.nonzero(p_sat == 0.0)[0]
    plateau_ok = True
    if len(plateau) >= 3:
        plateau_ok = _ls_slope(n[plateau], shaped[plateau]) > 0
    report["monotone_below"] = bool(slope_below > 0 and plateau_ok)

    above = np.nonzero(n > n[argmax_i])[0]
    report["monotone_above"] = bool(_ls_slope(n[above], shaped[above]) < 0)

    report["argmax_at_knee"] = argmax_i == knee_i
    report["argmax_agree"] = report["argmax_lln_n"] == report["argmax_n"]

    for cond in ("monotone_below", "monotone_above", "argmax_at_knee", "argmax_agree"):
        if not report[cond]:
            report["first_failure"] = cond
            break
    report["pass"] = report["first_failure"] is None
    return report
