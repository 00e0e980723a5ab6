"""Policy-gradient signal control: score-function updates with a baseline.

The agent observes the 80-cell occupancy grid, picks one of the four signal
phases, holds it for a fixed green interval (plus the amber interval when
the phase changes), and receives the drop in accrued queue waiting time as
its reward.  Decisions land in a bounded FIFO replay memory; after every
episode a batch is drawn, grouped back into per-episode traces, turned into
discounted returns, centered by a baseline, and pushed through one ascent
step on log-likelihood weighted by advantage.

The default baseline is the across-trace mean return at each trace position
(positions carried by longer traces only average over the traces that reach
them).  Optionally a small learned state-value network replaces it; that
head is fitted on the same batch with one mean-squared-error step per
update.

Because sampled batches are drawn from the memory uniformly, a trace drawn
here is generally a *subsequence* of the original episode; returns are
computed over the subsequence as-is.  This keeps the memory semantics
simple and bounded at the cost of a biased return estimate for old
episodes — in practice most of each fresh episode is present.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .neuralnet import (
    OptimizerState,
    PolicyNetwork,
    accumulate_logp_gradients,
    apply_update,
    forward,
    init_network,
    init_optimizer,
    init_value_network,
    value_fit_step,
    value_forward,
)
from .simcore import DETECTOR_PERIOD, Simulation

AGENT_STREAM = 1  # seed-sequence lane for the agent's own randomness


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for training and for the decision cadence."""

    episodes: int = 200
    batch_size: int = 200
    buffer_capacity: int = 4500
    gamma: float = 0.5
    green_duration: int = 4
    yellow_duration: int = 2
    max_agent_steps: int = 2500
    hidden_width: int = 200
    hidden_count: int = 3
    learning_rate: float = 1e-3
    use_value_baseline: bool = False
    value_hidden_width: int = 64

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.green_duration < 1:
            raise ValueError("green_duration must be >= 1")
        if self.yellow_duration < 1:
            raise ValueError("yellow_duration must be >= 1")
        if self.max_agent_steps < 1:
            raise ValueError("max_agent_steps must be >= 1")
        if self.hidden_width < 1 or self.hidden_count < 1:
            raise ValueError("hidden layers must be at least 1x1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class Transition:
    """One decision: observed state, chosen phase, resulting reward."""

    state: np.ndarray
    action: int
    reward: float
    episode: int
    step: int


@dataclass(frozen=True)
class EpisodeMetrics:
    """Per-episode summary row (see the metrics CSV)."""

    episode: int
    cum_delay_s: int
    avg_queue_len: float
    cum_negative_reward: float
    sim_time_s: int
    arrived: int


@dataclass(frozen=True)
class AgentState:
    """Everything the learner mutates between episodes."""

    net: PolicyNetwork
    opt: OptimizerState
    value_net: PolicyNetwork | None = None
    value_opt: OptimizerState | None = None


class ReplayBuffer:
    """Bounded FIFO of transitions; sampling is uniform without replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    @property
    def capacity(self) -> int:
        return self._items.maxlen

    def append(self, item: Transition) -> None:
        self._items.append(item)

    def sample(self, rng: np.random.Generator, k: int) -> list[Transition]:
        if not 1 <= k <= len(self._items):
            raise ValueError(f"cannot sample {k} of {len(self._items)}")
        idx = rng.choice(len(self._items), size=k, replace=False)
        items = list(self._items)
        return [items[i] for i in np.sort(idx)]


def init_agent(cfg: TrainConfig, seed: int) -> AgentState:
    net = init_network(cfg.hidden_width, cfg.hidden_count, seed=seed)
    opt = init_optimizer(net, cfg.learning_rate)
    if cfg.use_value_baseline:
        vnet = init_value_network(cfg.value_hidden_width, seed=seed + 1)
        vopt = init_optimizer(vnet, cfg.learning_rate)
        return AgentState(net, opt, vnet, vopt)
    return AgentState(net, opt)


def encode_state(sim: Simulation) -> np.ndarray:
    """The controller's observation: the 80 occupancy booleans."""
    return sim.read_sensors()


def compute_reward(previous_wait: int, current_wait: int) -> float:
    """Positive when accrued waiting on the inbound arms went down."""
    return float(previous_wait - current_wait)


def select_action(net: PolicyNetwork, state: np.ndarray,
                  rng: np.random.Generator) -> int:
    probs = forward(net, state)
    return int(rng.choice(len(probs), p=probs))


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """Backward recurrence R_t = r_t + gamma * R_{t+1}."""
    out = np.zeros(len(rewards), dtype=np.float64)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def positional_baseline(returns_by_trace: list[np.ndarray]) -> np.ndarray:
    """Mean return at each position across the traces that reach it."""
    if not returns_by_trace:
        return np.zeros(0)
    longest = max(len(r) for r in returns_by_trace)
    sums = np.zeros(longest)
    counts = np.zeros(longest)
    for r in returns_by_trace:
        sums[:len(r)] += r
        counts[:len(r)] += 1
    return sums / counts


def policy_update(agent: AgentState, buffer: ReplayBuffer,
                  rng: np.random.Generator, cfg: TrainConfig) -> AgentState:
    """One ascent step from a uniformly drawn batch, grouped into traces."""
    if len(buffer) == 0:
        return agent
    k = min(cfg.batch_size, len(buffer))
    batch = buffer.sample(rng, k)

    groups: dict[int, list[Transition]] = {}
    for tr in batch:
        groups.setdefault(tr.episode, []).append(tr)
    traces = [sorted(groups[ep], key=lambda t: t.step) for ep in sorted(groups)]
    returns = [discounted_returns([t.reward for t in trace], cfg.gamma)
               for trace in traces]

    states = np.stack([t.state for trace in traces for t in trace])
    actions = np.array([t.action for trace in traces for t in trace], dtype=np.int64)
    flat_returns = np.concatenate(returns)

    value_net, value_opt = agent.value_net, agent.value_opt
    if cfg.use_value_baseline:
        predicted = value_forward(value_net, states)
        advantages = flat_returns - predicted
        value_net, value_opt = value_fit_step(value_net, value_opt,
                                              states, flat_returns)
    else:
        baseline = positional_baseline(returns)
        advantages = np.concatenate(
            [r - baseline[:len(r)] for r in returns])

    coeffs = advantages / len(traces)
    if not np.any(coeffs):
        # Degenerate batch (e.g. a single trace centers itself to zero):
        # leave parameters and optimizer moments untouched.
        return AgentState(agent.net, agent.opt, value_net, value_opt)
    grads = accumulate_logp_gradients(agent.net, states, actions, coeffs)
    net, opt = apply_update(agent.net, grads, 1.0, agent.opt)
    return AgentState(net, opt, value_net, value_opt)


def drive_episode(sim: Simulation, choose_action, *, green_duration: int,
                  max_decisions: int, boundary_hook=None):
    """Run the decision loop until the traffic clears or limits hit.

    choose_action(state) -> phase.  Rewards are measured once per decision
    as the drop in cumulative waiting, so they telescope exactly over the
    episode.  boundary_hook(sim), if given, fires at every detector window
    boundary (used by the rerouting engine).

    Returns (transitions, cum_negative_reward).
    """
    transitions: list[tuple[np.ndarray, int, float]] = []
    cum_negative = 0.0
    prev_phase = sim.signals.phase
    prev_wait = sim.cumulative_wait()
    decisions = 0
    while not sim.done and decisions < max_decisions:
        state = encode_state(sim)
        action = int(choose_action(state))
        sim.set_phase(action)
        steps = green_duration
        if action != prev_phase:
            steps += sim.signals.yellow_duration
        prev_phase = action
        for _ in range(steps):
            sim.step()
            if boundary_hook is not None and sim.clock % DETECTOR_PERIOD == 0:
                boundary_hook(sim)
            if sim.done:
                break
        current_wait = sim.cumulative_wait()
        reward = compute_reward(prev_wait, current_wait)
        prev_wait = current_wait
        if reward < 0:
            cum_negative += reward
        transitions.append((state, action, reward))
        decisions += 1
    return transitions, cum_negative


def fixed_cycle_policy(green_duration: int):
    """A stateful phase chooser that walks 0,1,2,3 forever, ignoring input."""
    counter = {"next": 0}

    def choose(_state) -> int:
        phase = counter["next"]
        counter["next"] = (phase + 1) % 4
        return phase

    return choose


def run_training(net_factory, cfg: TrainConfig, seed: int,
                 schedule_for_episode, *, boundary_hook_factory=None,
                 on_episode=None):
    """Train for cfg.episodes on per-episode demand schedules.

    net_factory() -> RoadNetwork (fresh per episode is cheap and isolating);
    schedule_for_episode(episode) -> spawn schedule;
    boundary_hook_factory(sim) -> per-episode hook or None;
    on_episode(metrics) -> optional progress callback.

    Returns (agent, [EpisodeMetrics...]).
    """
    agent = init_agent(cfg, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, AGENT_STREAM]))
    buffer = ReplayBuffer(cfg.buffer_capacity)
    history: list[EpisodeMetrics] = []
    for episode in range(cfg.episodes):
        sim = Simulation(net_factory(), schedule_for_episode(episode),
                         yellow_duration=cfg.yellow_duration)
        hook = boundary_hook_factory(sim) if boundary_hook_factory else None
        net = agent.net

        def choose(state):
            return select_action(net, state, rng)

        transitions, cum_negative = drive_episode(
            sim, choose, green_duration=cfg.green_duration,
            max_decisions=cfg.max_agent_steps, boundary_hook=hook)
        for i, (state, action, reward) in enumerate(transitions):
            buffer.append(Transition(state, action, reward, episode, i))
        agent = policy_update(agent, buffer, rng, cfg)
        metrics = EpisodeMetrics(
            episode=episode,
            cum_delay_s=sim.cum_delay(),
            avg_queue_len=sim.avg_queue_len,
            cum_negative_reward=cum_negative,
            sim_time_s=sim.clock,
            arrived=sim.arrived_count,
        )
        history.append(metrics)
        if on_episode is not None:
            on_episode(metrics)
    return agent, history
