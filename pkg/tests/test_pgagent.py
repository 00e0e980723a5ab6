"""Tests for the policy-gradient controller and the episode driver."""

from __future__ import annotations

import math

import numpy as np
import pytest

from flowctl.neuralnet import forward, init_network
from flowctl.pgagent import (
    AgentState,
    EpisodeMetrics,
    ReplayBuffer,
    TrainConfig,
    Transition,
    compute_reward,
    discounted_returns,
    drive_episode,
    encode_state,
    fixed_cycle_policy,
    init_agent,
    policy_update,
    positional_baseline,
    run_training,
    select_action,
)
from flowctl.roadnet import build_default_network
from flowctl.simcore import Simulation, spawn_schedule

NET = build_default_network()


def small_cfg(**kw) -> TrainConfig:
    defaults = dict(episodes=3, batch_size=50, buffer_capacity=200, gamma=0.5,
                    green_duration=4, yellow_duration=2, max_agent_steps=40,
                    hidden_width=16, hidden_count=1, learning_rate=1e-3)
    defaults.update(kw)
    return TrainConfig(**defaults)


# ----------------------------------------------------------------- returns

def test_discounted_returns_hand_checked():
    out = discounted_returns([1.0, 2.0, 3.0], 0.5)
    assert out == pytest.approx([2.75, 3.5, 3.0])


def test_discounted_returns_gamma_edges():
    rewards = [2.0, -1.0, 4.0]
    assert discounted_returns(rewards, 0.0) == pytest.approx(rewards)
    assert discounted_returns(rewards, 1.0) == pytest.approx([5.0, 3.0, 4.0])


def test_positional_baseline_uneven_traces():
    v = positional_baseline([np.array([1.0, 2.0, 3.0]), np.array([3.0, 4.0])])
    assert v == pytest.approx([2.0, 3.0, 3.0])


def test_positional_baseline_empty():
    assert positional_baseline([]).shape == (0,)


# ------------------------------------------------------------------ buffer

def test_replay_buffer_fifo_eviction():
    buf = ReplayBuffer(5)
    for i in range(8):
        buf.append(Transition(np.zeros(2), 0, float(i), episode=0, step=i))
    assert len(buf) == 5
    rng = np.random.default_rng(0)
    rewards = {t.reward for t in buf.sample(rng, 5)}
    assert rewards == {3.0, 4.0, 5.0, 6.0, 7.0}


def test_replay_buffer_sample_bounds():
    buf = ReplayBuffer(4)
    buf.append(Transition(np.zeros(2), 0, 0.0, 0, 0))
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        buf.sample(rng, 2)
    with pytest.raises(ValueError):
        buf.sample(rng, 0)


def test_replay_buffer_sample_deterministic():
    buf = ReplayBuffer(50)
    for i in range(50):
        buf.append(Transition(np.zeros(1), 0, float(i), episode=i // 10, step=i))
    a = [t.reward for t in buf.sample(np.random.default_rng(7), 10)]
    b = [t.reward for t in buf.sample(np.random.default_rng(7), 10)]
    assert a == b


# ------------------------------------------------------------------ update

def one_state_buffer(pairs) -> ReplayBuffer:
    """pairs: (episode, action, reward) on a shared fixed state."""
    state = np.zeros(80)
    state[5] = 1.0
    buf = ReplayBuffer(100)
    steps = {}
    for ep, action, reward in pairs:
        step = steps.get(ep, 0)
        steps[ep] = step + 1
        buf.append(Transition(state, action, reward, ep, step))
    return buf


def test_policy_update_single_trace_is_noop():
    cfg = small_cfg()
    agent = init_agent(cfg, seed=0)
    buf = one_state_buffer([(0, 1, 5.0), (0, 2, -3.0), (0, 1, 1.0)])
    updated = policy_update(agent, buf, np.random.default_rng(0), cfg)
    for a, b in zip(agent.net.weights, updated.net.weights):
        assert np.array_equal(a, b)
    assert updated.opt.step == agent.opt.step


def test_policy_update_moves_toward_rewarded_action():
    cfg = small_cfg(batch_size=100, learning_rate=0.05)
    agent = init_agent(cfg, seed=1)
    state = np.zeros(80)
    state[5] = 1.0
    pairs = []
    for ep in range(10):
        pairs.append((ep, 0, 10.0) if ep % 2 == 0 else (ep, 1, -10.0))
    buf = one_state_buffer(pairs)
    before = forward(agent.net, state)
    rng = np.random.default_rng(3)
    for _ in range(20):
        agent = policy_update(agent, buf, rng, cfg)
    after = forward(agent.net, state)
    assert after[0] > before[0]
    assert after[1] < before[1]


def test_policy_update_empty_buffer_returns_agent():
    cfg = small_cfg()
    agent = init_agent(cfg, seed=0)
    assert policy_update(agent, ReplayBuffer(10),
                         np.random.default_rng(0), cfg) is agent


def test_value_baseline_path_runs_and_fits():
    cfg = small_cfg(use_value_baseline=True, batch_size=40)
    agent = init_agent(cfg, seed=2)
    assert agent.value_net is not None
    buf = one_state_buffer([(ep, ep % 4, float(ep % 3) - 1.0)
                            for ep in range(20)])
    updated = policy_update(agent, buf, np.random.default_rng(1), cfg)
    changed = any(not np.array_equal(a, b) for a, b in
                  zip(agent.value_net.weights, updated.value_net.weights))
    assert changed


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(gamma=1.5)
    with pytest.raises(ValueError):
        TrainConfig(episodes=0)
    with pytest.raises(ValueError):
        TrainConfig(green_duration=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)


# ------------------------------------------------------------------ driver

def test_drive_episode_rewards_telescope():
    sched = spawn_schedule(NET, count=120, seed=13, horizon=60)
    sim = Simulation(NET, sched)
    rng = np.random.default_rng(4)
    waits = []

    def choose(_state):
        return int(rng.integers(0, 4))

    transitions, cum_neg = drive_episode(sim, choose, green_duration=4,
                                         max_decisions=500)
    total = math.fsum(r for _, _, r in transitions)
    assert total == pytest.approx(-sim.cumulative_wait())
    assert cum_neg == pytest.approx(math.fsum(min(r, 0.0)
                                              for _, _, r in transitions))
    assert sim.done


def test_drive_episode_respects_decision_cap():
    sched = spawn_schedule(NET, count=200, seed=5, horizon=120)
    sim = Simulation(NET, sched)
    transitions, _ = drive_episode(sim, lambda s: 1, green_duration=4,
                                   max_decisions=7)
    assert len(transitions) == 7


def test_drive_episode_cadence_green_plus_amber():
    sim = Simulation(NET, spawn_schedule(NET, count=30, seed=6, horizon=20))
    actions = iter([0, 0, 2, 2, 1])
    drive_episode(sim, lambda s: next(actions), green_duration=4,
                  max_decisions=5)
    # 4 (same phase) + 4 + 6 (change) + 4 + 6 (change) = 24 steps
    assert sim.clock == 24


def test_drive_episode_boundary_hook_fires_on_window():
    sim = Simulation(NET, spawn_schedule(NET, count=30, seed=6, horizon=20))
    seen = []
    drive_episode(sim, lambda s: 0, green_duration=4, max_decisions=20,
                  boundary_hook=lambda s: seen.append(s.clock))
    assert seen == [30, 60]


def test_fixed_cycle_policy_walks_phases():
    choose = fixed_cycle_policy(30)
    assert [choose(None) for _ in range(6)] == [0, 1, 2, 3, 0, 1]


def test_encode_state_shape():
    sim = Simulation(NET, ())
    state = encode_state(sim)
    assert state.shape == (80,)
    assert state.dtype == np.float64


def test_compute_reward_sign():
    assert compute_reward(10, 4) == 6.0
    assert compute_reward(4, 10) == -6.0


def test_select_action_follows_distribution():
    net = init_network(8, 1, seed=0)
    rng = np.random.default_rng(0)
    state = np.zeros(80)
    counts = np.bincount([select_action(net, state, rng) for _ in range(400)],
                         minlength=4)
    assert (counts > 0).all()


# ---------------------------------------------------------------- training

def test_run_training_deterministic_and_complete():
    cfg = small_cfg(episodes=3, max_agent_steps=30)

    def schedule_for_episode(ep):
        return spawn_schedule(NET, count=60, seed=1000 + ep, horizon=40)

    def once():
        agent, history = run_training(build_default_network, cfg, seed=42,
                                      schedule_for_episode=schedule_for_episode)
        return agent, history

    agent_a, hist_a = once()
    agent_b, hist_b = once()
    assert len(hist_a) == 3
    assert all(isinstance(m, EpisodeMetrics) for m in hist_a)
    assert hist_a == hist_b
    for wa, wb in zip(agent_a.net.weights, agent_b.net.weights):
        assert np.array_equal(wa, wb)
    assert [m.episode for m in hist_a] == [0, 1, 2]
    assert all(m.sim_time_s > 0 for m in hist_a)


def test_run_training_on_episode_callback():
    cfg = small_cfg(episodes=2, max_agent_steps=20)
    seen = []
    run_training(build_default_network, cfg, seed=1,
                 schedule_for_episode=lambda ep: spawn_schedule(
                     NET, count=30, seed=ep, horizon=20),
                 on_episode=seen.append)
    assert [m.episode for m in seen] == [0, 1]
