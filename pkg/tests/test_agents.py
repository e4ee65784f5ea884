import numpy as np
import pytest

from slicesim.agents import (
    EXPERIMENTAL_DELTAS, ActionCodec, DqnTrainerConfig, PgTrainerConfig,
    ReplayBuffer, apply_action, calibrate_fixed_policies, default_deltas,
    dqn_train, epsilon_schedule, evaluate_policy, fixed_policy,
    heuristic_policy, pg_train,
)
from slicesim.env import QosSpec, SlotMetrics


def test_default_deltas():
    assert default_deltas(5) == [-16, -8, -4, -2, -1, 0, 1, 2, 4, 8, 16]
    assert len(default_deltas(5)) == 11
    assert len(default_deltas(6)) == 13
    assert EXPERIMENTAL_DELTAS == [-9, -6, -3, 0, 3, 6, 9]


def test_codec_validation():
    with pytest.raises(ValueError):
        ActionCodec(deltas=[-1, 1])  # no zero
    with pytest.raises(ValueError):
        ActionCodec(deltas=[-2, 0, 1])  # asymmetric
    codec = ActionCodec(deltas=[1, 0, -1])
    assert codec.deltas == [-1, 0, 1]
    assert codec.n_actions == 3


def test_apply_action_clamps():
    codec = ActionCodec(prb_min=0, prb_max=150)
    up16 = codec.deltas.index(16)
    down16 = codec.deltas.index(-16)
    assert apply_action(codec, 140, up16) == 150
    assert apply_action(codec, 10, down16) == 0
    assert apply_action(codec, 50, codec.deltas.index(0)) == 50
    with pytest.raises(ValueError):
        apply_action(codec, 50, 99)


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        PgTrainerConfig(episode_len_slots=0)
    with pytest.raises(ValueError):
        PgTrainerConfig(discount=1.0)
    with pytest.raises(ValueError):
        DqnTrainerConfig(eps_start=0.1, eps_end=0.5)


def test_epsilon_schedule_endpoints():
    cfg = DqnTrainerConfig(eps_start=0.5, eps_end=0.05, eps_decay_steps=2000)
    assert epsilon_schedule(cfg, 0) == 0.5
    assert epsilon_schedule(cfg, 1000) == pytest.approx(0.275)
    assert epsilon_schedule(cfg, 2000) == 0.05
    assert epsilon_schedule(cfg, 100_000) == 0.05


def test_replay_buffer_wraparound():
    buf = ReplayBuffer(3)
    for i in range(5):
        buf.push(i)
    assert len(buf) == 3
    assert sorted(buf.items) == [2, 3, 4]
    rng = np.random.default_rng(0)
    sample = buf.sample(10, rng)
    assert all(s in (2, 3, 4) for s in sample)


def test_heuristic_boundary():
    qos = QosSpec(d_max_ttis=5, epsilon=0.1)
    # exactly at target: the strict inequality takes the decrease branch
    m = SlotMetrics(p_sat=0.9)
    assert heuristic_policy(m, qos, 50, step_up=4, step_down=1) == 49
    m = SlotMetrics(p_sat=0.5)
    assert heuristic_policy(m, qos, 50, step_up=4, step_down=1) == 54
    m = SlotMetrics(p_sat=0.0)
    assert heuristic_policy(m, qos, 149, step_up=4, prb_max=150) == 150
    assert heuristic_policy(SlotMetrics(p_sat=1.0), qos, 0) == 0
    with pytest.raises(ValueError):
        heuristic_policy(m, qos, 50, step_up=0)


class _BanditEnv:
    """Stateless stub: reward depends only on the chosen grant."""

    def __init__(self, obs_dim=3, start=5):
        self.observation_size = obs_dim
        self.prb_min = 0
        self.prb_max = 10
        self.current_prbs = start
        self.history = []

    def observe(self):
        obs = np.zeros(self.observation_size)
        obs[0] = self.current_prbs / self.prb_max
        return obs

    def step(self, n):
        self.current_prbs = n
        m = SlotMetrics(n_prbs=n, completed=1, satisfied=int(n > 5),
                        p_sat=float(n > 5), ewma_arrivals=1.0)
        return self.observe(), m


def _bandit_reward(m):
    return 1.0 if m.n_prbs > 5 else 0.0


def test_pg_train_learns_bandit():
    env = _BanditEnv()
    codec = ActionCodec(deltas=[-1, 0, 1], prb_min=0, prb_max=10)
    cfg = PgTrainerConfig(episode_len_slots=10, discount=0.9, lr=0.05,
                          hidden=[8], entropy_coeff=0.001)
    rng = np.random.default_rng(0)
    model, log = pg_train(env, _bandit_reward, cfg, 600, rng, codec)
    assert len(log) == 600
    # converged policy should hold the grant above the payoff threshold
    tail = [row["reward"] for row in log[-50:]]
    assert np.mean(tail) > 0.9
    from slicesim.nn import forward
    greedy = int(np.argmax(forward(model, env.observe())))
    assert codec.deltas[greedy] >= 0


def test_pg_train_rejects_non_finite_reward():
    env = _BanditEnv()
    codec = ActionCodec(deltas=[-1, 0, 1], prb_min=0, prb_max=10)
    cfg = PgTrainerConfig(episode_len_slots=5, hidden=[4])
    with pytest.raises(ValueError):
        pg_train(env, lambda m: float("nan"), cfg, 10,
                 np.random.default_rng(0), codec)


def test_pg_train_deterministic():
    def run():
        env = _BanditEnv()
        codec = ActionCodec(deltas=[-1, 0, 1], prb_min=0, prb_max=10)
        cfg = PgTrainerConfig(episode_len_slots=10, hidden=[8], lr=0.05)
        model, log = pg_train(env, _bandit_reward, cfg, 100,
                              np.random.default_rng(7), codec)
        return model.params, [r["n_prbs"] for r in log]

    p1, l1 = run()
    p2, l2 = run()
    np.testing.assert_array_equal(p1, p2)
    assert l1 == l2


def test_dqn_train_learns_bandit():
    env = _BanditEnv()
    codec = ActionCodec(deltas=[-1, 0, 1], prb_min=0, prb_max=10)
    cfg = DqnTrainerConfig(lr=0.01, batch=16, eps_decay_steps=200,
                           target_sync_interval=20, hidden=[8])
    rng = np.random.default_rng(1)
    model, log = dqn_train(env, _bandit_reward, cfg, 400, rng, codec)
    tail = [row["reward"] for row in log[-50:]]
    assert np.mean(tail) > 0.8


class _QuietEnv(_BanditEnv):
    def step(self, n):
        self.current_prbs = n
        m = SlotMetrics(n_prbs=n, arrivals=0, completed=0, satisfied=0,
                        p_sat=0.0, ewma_arrivals=0.0, prbs_used=0.0)
        return self.observe(), m


def test_calibrate_zero_traffic():
    out = calibrate_fixed_policies(lambda peak: _QuietEnv(), 5, 10)
    assert out == {"fixed_av": 0, "fixed_max": 0}


class _ThresholdEnv(_BanditEnv):
    """All packets satisfied iff the grant covers the fixed demand."""

    DEMAND = 7

    def __init__(self):
        super().__init__()
        self.queue = []

    def step(self, n):
        self.current_prbs = n
        ok = n >= self.DEMAND
        m = SlotMetrics(n_prbs=n, arrivals=10, completed=10,
                        satisfied=10 if ok else 4, p_sat=1.0 if ok else 0.4,
                        ewma_arrivals=10.0, prbs_used=float(min(n, self.DEMAND)))
        return self.observe(), m


def test_calibrate_threshold_env():
    out = calibrate_fixed_policies(lambda peak: _ThresholdEnv(), 5, 10)
    assert out["fixed_max"] == _ThresholdEnv.DEMAND
    assert out["fixed_av"] == _ThresholdEnv.DEMAND  # consumption == demand
    assert out["fixed_max"] >= out["fixed_av"]


def test_calibrate_infeasible():
    class Hopeless(_ThresholdEnv):
        DEMAND = 99

    out = calibrate_fixed_policies(lambda peak: Hopeless(), 3, 10)
    assert out["fixed_max"] is None
    assert out.get("infeasible")


def test_evaluate_fixed_policy():
    env = _ThresholdEnv()
    rep = evaluate_policy(fixed_policy(8), env, 20, _bandit_reward)
    assert rep.mean_prbs == 8.0
    assert rep.p_sat == 1.0
    assert rep.mean_reward == 1.0
