"""Per-agent recurrent Q-learner.

Online and target networks share one architecture: a GRU over the
observation concatenated with the previous-action one-hot, and a linear
head of Q-values.  Training unrolls full episodes through the fused
kernels; no parameters are shared across agents.
"""

import numpy as np

from camarl.errors import UsageError
from camarl.nn import kernels
from camarl.nn.layers import ParamSet, _uniform_init
from camarl.nn.optim import RmspropState, rmsprop_update
from camarl.nn.tensor import Parameter

PARAM_NAMES = ("gru.Wx", "gru.Wh", "gru.bx", "gru.bh", "head.W", "head.b")


class AgentLearner:
    def __init__(self, obs_dim: int, n_actions: int, n_hidden: int = 64,
                 seed=0, lr: float = 5e-4, grad_clip: float = 10.0):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.n_hidden = n_hidden
        self.n_in = obs_dim + n_actions
        self.lr = lr
        self.grad_clip = grad_clip
        rng = np.random.default_rng(seed)
        p = ParamSet()
        p.add("gru.Wx", Parameter(
            _uniform_init(rng, self.n_in, (self.n_in, 3 * n_hidden))))
        p.add("gru.Wh", Parameter(
            _uniform_init(rng, n_hidden, (n_hidden, 3 * n_hidden))))
        p.add("gru.bx", Parameter(np.zeros(3 * n_hidden)))
        p.add("gru.bh", Parameter(np.zeros(3 * n_hidden)))
        p.add("head.W", Parameter(
            _uniform_init(rng, n_hidden, (n_hidden, n_actions))))
        p.add("head.b", Parameter(np.zeros(n_actions)))
        self.params = p
        self.target = {k: v.copy() for k, v in p.state_arrays().items()}
        self.opt = RmspropState(p)
        self.last_loss = None

    # -- acting ------------------------------------------------------------

    def initial_hidden(self):
        return np.zeros((1, self.n_hidden))

    def _input(self, obs, prev_action: int):
        x = np.zeros((1, self.n_in))
        x[0, :self.obs_dim] = obs
        if prev_action >= 0:
            x[0, self.obs_dim + prev_action] = 1.0
        return x

    def _weights(self):
        p = self.params
        return tuple(p[name].data for name in PARAM_NAMES)

    def q_values(self, obs, prev_action, hidden):
        """One greedy-policy step: (q, new hidden); hidden rows are (1, H)."""
        q, h_new = kernels.qnet_step(self._input(obs, prev_action), hidden,
                                     *self._weights())
        return q[0], h_new

    def act(self, obs, prev_action, hidden, epsilon, rng: np.random.Generator):
        """Epsilon-greedy action; ties resolve to the lowest index.

        The uniform draw happens before any Q computation is consulted
        so the random-number stream depends only on epsilon, never on
        network outputs.
        """
        q, h_new = self.q_values(obs, prev_action, hidden)
        if epsilon > 0 and rng.random() < epsilon:
            return int(rng.integers(self.n_actions)), h_new
        return int(np.argmax(q)), h_new

    # -- training ----------------------------------------------------------

    def clone_weights_from(self, other):
        self.params.copy_from(other.params)
        self.sync_target()

    def sync_target(self):
        for k, v in self.params.state_arrays().items():
            self.target[k][...] = v

    def target_q(self, X, h0):
        t = self.target
        Q, *_ = kernels.qnet_unroll_fwd(X, h0, t["gru.Wx"], t["gru.Wh"],
                                        t["gru.bx"], t["gru.bh"],
                                        t["head.W"], t["head.b"])
        return Q

    def td_loss_and_grads(self, X, actions, rewards, valid, terminal, gamma):
        """Squared TD error, mean over valid timesteps.

        X: (T, B, n_in) inputs; actions: (T, B); rewards: (T, B) already
        masked; valid/terminal: (T, B) 0/1.  Bootstraps from the target
        network's next-step max; terminal steps use the reward alone.
        Gradients land in self.params.
        """
        n_valid = valid.sum()
        if n_valid == 0:
            raise UsageError("empty training batch")
        T, B, _ = X.shape
        h0 = np.zeros((B, self.n_hidden))
        Wx, Wh, bx, bh, Wq, bq = self._weights()
        Q, Hs, R, Z, Nc, GHN = kernels.qnet_unroll_fwd(X, h0, Wx, Wh, bx, bh,
                                                       Wq, bq)
        Qt = self.target_q(X, h0)
        boot = np.zeros((T, B))
        if T > 1:
            boot[:-1] = Qt[1:].max(axis=2)
        y = rewards + gamma * boot * (1.0 - terminal)
        ti = np.arange(T)[:, None]
        bi = np.arange(B)[None, :]
        qa = Q[ti, bi, actions]
        diff = (qa - y) * valid
        loss = float((diff ** 2).sum() / n_valid)
        dQ = np.zeros_like(Q)
        dQ[ti, bi, actions] = 2.0 * diff / n_valid
        grads = kernels.qnet_unroll_bwd(X, h0, Hs, R, Z, Nc, GHN, Wx, Wh, Wq,
                                        dQ)
        for name, grad in zip(PARAM_NAMES, grads):
            self.params[name].grad += grad
        return loss

    def train_step(self, X, actions, rewards, valid, terminal, gamma):
        """One gradient step on a batch; returns the TD loss."""
        loss = self.td_loss_and_grads(X, actions, rewards, valid, terminal,
                                      gamma)
        rmsprop_update(self.params, self.opt, lr=self.lr,
                       max_norm=self.grad_clip)
        self.last_loss = loss
        return loss

    # -- persistence ---------------------------------------------------------

    def state_arrays(self):
        out = dict(self.params.state_arrays())
        for k, v in self.target.items():
            out["target." + k] = v
        out.update(self.opt.arrays())
        return out

    def load_state(self, arrays):
        own = {k: v for k, v in arrays.items()
               if not k.startswith(("target.", "opt."))}
        self.params.load_arrays(own)
        for k in self.target:
            self.target[k][...] = arrays["target." + k]
        self.opt.load_arrays(arrays)


def select_action(learner: AgentLearner, obs, prev_action, hidden, epsilon,
                  rng):
    """Epsilon-greedy step through a learner; see AgentLearner.act."""
    return learner.act(obs, prev_action, hidden, epsilon, rng)
