"""Greedy-policy evaluation rollouts."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from camarl.envs import env_spec, make_env


@dataclass
class EvalSummary:
    mean_return: float
    ci95: float
    win_rate: float
    per_agent_events: np.ndarray  # (N,) event participations
    n_episodes: int
    returns: np.ndarray


def event_counts(info: dict, family: str, n_agents: int) -> np.ndarray:
    """Per-agent participation counts for one step's events."""
    counts = np.zeros(n_agents)
    if family == "pp":
        for c in info["captures"]:
            for i in c["agents"]:
                counts[i] += 1
    elif family == "lj":
        for c in info["cuts"]:
            for i in c["agents"]:
                counts[i] += 1
    else:
        for i in info["shots"]:
            counts[i] += 1
    return counts


def return_ci95(returns) -> float:
    """Half-width of the t-based 95% confidence interval; 0 for n < 2."""
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 2:
        return 0.0
    sd = r.std(ddof=1)
    if sd == 0.0:
        return 0.0
    q = stats.t.ppf(0.975, r.size - 1)
    return float(q * sd / np.sqrt(r.size))


def run_episode_greedy(env, learners):
    """Roll one episode with epsilon=0; returns (return, win, events, length)."""
    n = len(learners)
    spec = env.spec
    obs = env._obs()
    hidden = [ln.initial_hidden() for ln in learners]
    prev = np.full(n, -1)
    total, events, length = 0.0, np.zeros(n), 0
    while True:
        acts = np.empty(n, dtype=np.int64)
        for i, ln in enumerate(learners):
            q, hidden[i] = ln.q_values(obs[i], prev[i], hidden[i])
            acts[i] = int(np.argmax(q))
        res = env.step(acts)
        total += res.reward
        events += event_counts(res.info, spec.family, n)
        length += 1
        obs = res.obs
        prev = acts
        if res.done:
            return total, bool(res.info["win"]), events, length


def evaluate(learners, env_id: str, n_episodes: int, seed: int) -> EvalSummary:
    """Greedy rollouts over n_episodes fresh environments.

    Deterministic given the seed and the learner parameters.
    """
    spec = env_spec(env_id)
    seeds = np.random.SeedSequence(seed).generate_state(n_episodes)
    returns = np.empty(n_episodes)
    wins = 0
    events = np.zeros(spec.n_agents)
    for k in range(n_episodes):
        env = make_env(env_id, int(seeds[k]))
        ret, win, ev, _ = run_episode_greedy(env, learners)
        returns[k] = ret
        wins += win
        events += ev
    return EvalSummary(mean_return=float(returns.mean()),
                       ci95=return_ci95(returns),
                       win_rate=wins / n_episodes,
                       per_agent_events=events,
                       n_episodes=n_episodes,
                       returns=returns)
