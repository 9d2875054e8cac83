"""Episode interchange format: one JSON object per line.

Fields: env_id, seed, T (nominal episode length), N, length (steps
actually played), observations[length][N][D], actions[length][N],
rewards[length], kinds[length], ground_truth_bits[N], win.

Floats round-trip exactly: json emits shortest-repr decimal strings and
observations are float32-quantized before writing, so read-after-write
reproduces the stored arrays bit for bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from camarl.envs import core
from camarl.errors import ConfigurationError


@dataclass
class SerializedEpisode:
    env_id: str
    seed: int
    nominal_len: int
    n_agents: int
    obs: np.ndarray        # (L, N, D) float64 (float32-quantized values)
    actions: np.ndarray    # (L, N) int64
    rewards: np.ndarray    # (L,) float64
    kinds: np.ndarray      # (L,) int64
    ground_truth_bits: np.ndarray  # (N,) uint8
    win: bool

    @property
    def length(self):
        return self.obs.shape[0]


def episode_to_record(ep, ground_truth_bits) -> dict:
    """Build the JSON-ready dict from an episode carrying obs/actions/
    rewards/kinds arrays plus env_id and seed attributes."""
    spec = core.env_spec(ep.env_id)
    obs32 = np.asarray(ep.obs, dtype=np.float32)
    return {
        "env_id": ep.env_id,
        "seed": int(ep.seed),
        "T": spec.episode_len,
        "N": spec.n_agents,
        "length": int(obs32.shape[0]),
        "observations": [[[float(v) for v in row] for row in frame]
                         for frame in obs32],
        "actions": np.asarray(ep.actions, dtype=np.int64).tolist(),
        "rewards": [float(r) for r in np.asarray(ep.rewards, dtype=np.float64)],
        "kinds": np.asarray(ep.kinds, dtype=np.int64).tolist(),
        "ground_truth_bits": [int(b) for b in ground_truth_bits],
        "win": bool(ep.win),
    }


def write_episodes(path, episodes, bits_per_episode):
    """Append-free write of a full dataset file."""
    with open(path, "w") as f:
        for ep, bits in zip(episodes, bits_per_episode):
            f.write(json.dumps(episode_to_record(ep, bits),
                               separators=(",", ":"), sort_keys=True))
            f.write("\n")


def read_episodes(path):
    out = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"{path}:{line_no}: bad record ({e})")
            obs = np.asarray(rec["observations"], dtype=np.float64)
            if obs.ndim != 3 or obs.shape[1] != rec["N"]:
                raise ConfigurationError(
                    f"{path}:{line_no}: observation shape {obs.shape} "
                    f"inconsistent with N={rec['N']}")
            out.append(SerializedEpisode(
                env_id=rec["env_id"],
                seed=rec["seed"],
                nominal_len=rec["T"],
                n_agents=rec["N"],
                obs=obs,
                actions=np.asarray(rec["actions"], dtype=np.int64),
                rewards=np.asarray(rec["rewards"], dtype=np.float64),
                kinds=np.asarray(rec["kinds"], dtype=np.int64),
                ground_truth_bits=np.asarray(rec["ground_truth_bits"],
                                             dtype=np.uint8),
                win=bool(rec["win"]),
            ))
    return out
