"""Tabular Q-learning and value iteration, used as test oracles."""

import numpy as np


def tabular_q_update(q_table, s, a, r, s_next, alpha, gamma):
    """In-place single-sample Q update; returns the table."""
    target = r + gamma * q_table[s_next].max()
    q_table[s, a] = (1.0 - alpha) * q_table[s, a] + alpha * target
    return q_table


def value_iteration(transitions, rewards, gamma, tol=1e-12, max_iter=1_000_000):
    """Exact Q* for a finite MDP.

    transitions: (S, A, S) probabilities; rewards: (S, A) expected
    immediate reward.  Iterates Q = R + gamma * P @ max_a' Q until the
    sup-norm change drops below tol.
    """
    n_states, n_actions = rewards.shape
    q = np.zeros((n_states, n_actions))
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_new = rewards + gamma * transitions @ v
        if np.abs(q_new - q).max() < tol:
            return q_new
        q = q_new
    return q
