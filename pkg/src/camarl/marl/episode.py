"""Episode storage for recurrent replay."""

from dataclasses import dataclass, field

import numpy as np

from camarl.errors import ConfigurationError


@dataclass
class EpisodeRecord:
    """One complete episode as stored in the replay buffer.

    obs[t] is the joint observation the agents acted on at step t;
    rewards[t] is the team reward produced by actions[t].  bits holds
    the per-agent causality mask decided at collection time so replayed
    targets never move.
    """

    env_id: str
    seed: int
    obs: np.ndarray        # (L, N, D) float32
    actions: np.ndarray    # (L, N) int64
    rewards: np.ndarray    # (L,) float64
    kinds: np.ndarray      # (L,) int64 reward-kind tags
    dones: np.ndarray      # (L,) bool, exactly one True at the end
    bits: np.ndarray       # (L, N) uint8 causality bits
    win: bool
    infos: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return self.obs.shape[0]

    @property
    def n_agents(self) -> int:
        return self.obs.shape[1]

    def validate(self):
        L = self.length
        for name in ("actions", "rewards", "kinds", "dones", "bits"):
            arr = getattr(self, name)
            if arr.shape[0] != L:
                raise ConfigurationError(
                    f"episode field {name} has length {arr.shape[0]}, "
                    f"observations have {L}")
        if L == 0:
            raise ConfigurationError("empty episode")
        if not self.dones[-1] or self.dones[:-1].any():
            raise ConfigurationError(
                "episode must carry exactly one terminal flag, at the end")
        b = np.unique(self.bits)
        if not np.isin(b, (0, 1)).all():
            raise ConfigurationError(f"causality bits must be binary, got {b}")
        return self
