"""Autodiff substrate tests: gradient oracles, tape semantics, optimizer."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import gradcheck, relative_error
from camarl.errors import ConfigurationError, UsageError
from camarl.nn import tensor as T
from camarl.nn import functional as F
from camarl.nn import kernels as K
from camarl.nn.layers import ParamSet, Dense, GruCell
from camarl.nn.optim import RmspropState, rmsprop_update, clip_global_norm
from camarl.nn.checkpoint import save_checkpoint, load_checkpoint

RNG = np.random.default_rng(1234)


def _param(*shape):
    return T.Parameter(RNG.uniform(-0.8, 0.8, size=shape))


# ------------------------------------------------------------ dense layers

@pytest.mark.parametrize("act", [K.ACT_IDENTITY, K.ACT_TANH, K.ACT_RELU, K.ACT_SIGMOID])
def test_dense_gradcheck(act):
    x = _param(4, 5)
    W = _param(5, 3)
    b = _param(3)
    if act == K.ACT_RELU:
        # keep pre-activations away from the kink
        pre = x.data @ W.data + b.data
        b.data[np.abs(pre).min(axis=0) < 1e-3] += 0.01
    s = T.constant(RNG.normal(size=(4, 3)))
    gradcheck(lambda: (T.dense(x, W, b, act) * s).sum(), [x, W, b])


def test_dense_matches_plain_numpy():
    x, W, b = _param(6, 4), _param(4, 7), _param(7)
    y = T.dense(x, W, b, K.ACT_TANH)
    np.testing.assert_allclose(y.data, np.tanh(x.data @ W.data + b.data), rtol=1e-12)


# -------------------------------------------------------------------- gru

def test_gru_step_gradcheck():
    H = 4
    x = _param(3, 5)
    h = _param(3, H)
    Wx = _param(5, 3 * H)
    Wh = _param(H, 3 * H)
    bx = _param(3 * H)
    bh = _param(3 * H)
    s = T.constant(RNG.normal(size=(3, H)))
    gradcheck(lambda: (T.gru_step(x, h, Wx, Wh, bx, bh) * s).sum(),
              [x, h, Wx, Wh, bx, bh])


def test_gru_chain_gradcheck():
    # three steps through time, gradients flow through the carried state
    H, B, I = 3, 2, 4
    xs = [_param(B, I) for _ in range(3)]
    h0 = _param(B, H)
    Wx, Wh, bx, bh = _param(I, 3 * H), _param(H, 3 * H), _param(3 * H), _param(3 * H)
    s = T.constant(RNG.normal(size=(B, H)))

    def loss():
        h = h0
        for x in xs:
            h = T.gru_step(x, h, Wx, Wh, bx, bh)
        return (h * s).sum()

    gradcheck(loss, xs + [h0, Wx, Wh, bx, bh])


def test_gru_reference_formula():
    # independent recomputation of one step from the gate equations
    H = 3
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, 4))
    h = rng.normal(size=(2, H))
    Wx = rng.normal(size=(4, 3 * H)) * 0.3
    Wh = rng.normal(size=(H, 3 * H)) * 0.3
    bx = rng.normal(size=3 * H) * 0.1
    bh = rng.normal(size=3 * H) * 0.1
    h_new = K.gru_fwd(x, h, Wx, Wh, bx, bh)[0]

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    px, ph = x @ Wx + bx, h @ Wh + bh
    r = sig(px[:, :H] + ph[:, :H])
    z = sig(px[:, H:2 * H] + ph[:, H:2 * H])
    n = np.tanh(px[:, 2 * H:] + r * ph[:, 2 * H:])
    np.testing.assert_allclose(h_new, z * h + (1 - z) * n, rtol=1e-12)


# --------------------------------------------------------- fused unroll

def _unroll_setup(T_len=4, B=2, I=5, H=4, A=3, seed=99):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(T_len, B, I))
    h0 = np.zeros((B, H))
    p = {
        "Wx": rng.uniform(-0.4, 0.4, (I, 3 * H)), "Wh": rng.uniform(-0.4, 0.4, (H, 3 * H)),
        "bx": rng.uniform(-0.4, 0.4, 3 * H), "bh": rng.uniform(-0.4, 0.4, 3 * H),
        "Wq": rng.uniform(-0.4, 0.4, (H, A)), "bq": rng.uniform(-0.4, 0.4, A),
    }
    S = rng.normal(size=(T_len, B, A))
    return X, h0, p, S


def _unroll_loss(X, h0, p, S):
    Q = K.qnet_unroll_fwd(X, h0, p["Wx"], p["Wh"], p["bx"], p["bh"],
                          p["Wq"], p["bq"])[0]
    return float((Q * S).sum())


def test_qnet_unroll_matches_tape():
    X, h0, p, S = _unroll_setup()
    out = K.qnet_unroll_fwd(X, h0, p["Wx"], p["Wh"], p["bx"], p["bh"],
                            p["Wq"], p["bq"])
    Q, Hs, R, Z, Nc, GHN = out
    grads = K.qnet_unroll_bwd(X, h0, Hs, R, Z, Nc, GHN,
                              p["Wx"], p["Wh"], p["Wq"], S)

    # same computation composed from tape ops
    tp = {k: T.Parameter(v) for k, v in p.items()}
    h = T.constant(h0)
    loss = None
    for t in range(X.shape[0]):
        h = T.gru_step(T.constant(X[t]), h, tp["Wx"], tp["Wh"], tp["bx"], tp["bh"])
        q = T.dense(h, tp["Wq"], tp["bq"], K.ACT_IDENTITY)
        term = (q * T.constant(S[t])).sum()
        loss = term if loss is None else loss + term
    T.backward(loss)

    names = ["Wx", "Wh", "bx", "bh", "Wq", "bq"]
    for name, g in zip(names, grads):
        np.testing.assert_allclose(g, tp[name].grad, rtol=1e-9, atol=1e-11,
                                   err_msg=name)


def test_qnet_unroll_finite_difference():
    X, h0, p, S = _unroll_setup(seed=41)
    out = K.qnet_unroll_fwd(X, h0, p["Wx"], p["Wh"], p["bx"], p["bh"],
                            p["Wq"], p["bq"])
    grads = dict(zip(["Wx", "Wh", "bx", "bh", "Wq", "bq"],
                     K.qnet_unroll_bwd(X, h0, *out[1:], p["Wx"], p["Wh"],
                                       p["Wq"], S)))
    h = 1e-5
    for name, arr in p.items():
        num = np.zeros_like(arr)
        flat, nf = arr.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = _unroll_loss(X, h0, p, S)
            flat[i] = orig - h
            fm = _unroll_loss(X, h0, p, S)
            flat[i] = orig
            nf[i] = (fp - fm) / (2 * h)
        assert relative_error(grads[name], num) < 1e-4, name


def test_qnet_step_agrees_with_unroll():
    X, h0, p, _ = _unroll_setup(T_len=3)
    Q = K.qnet_unroll_fwd(X, h0, p["Wx"], p["Wh"], p["bx"], p["bh"],
                          p["Wq"], p["bq"])[0]
    h = h0
    for t in range(3):
        q, h = K.qnet_step(X[t], h, p["Wx"], p["Wh"], p["bx"], p["bh"],
                           p["Wq"], p["bq"])
        np.testing.assert_allclose(q, Q[t], rtol=1e-12)


# ------------------------------------------------------------ distributions

def test_softmax_gradcheck():
    x = _param(3, 5)
    s = T.constant(RNG.normal(size=(3, 5)))
    gradcheck(lambda: (T.softmax(x) * s).sum(), [x])


def test_log_softmax_gradcheck():
    x = _param(4, 6)
    s = T.constant(RNG.normal(size=(4, 6)))
    gradcheck(lambda: (T.log_softmax(x) * s).sum(), [x])


def test_log_softmax_is_log_of_softmax():
    x = RNG.normal(size=(5, 7)) * 30.0  # large logits, stability matters
    np.testing.assert_allclose(T.log_softmax(T.constant(x)).data,
                               np.log(T.softmax(T.constant(x)).data),
                               rtol=1e-10, atol=1e-12)


def test_gumbel_softmax_soft_gradcheck():
    logits = _param(3, 4)
    noise = F.sample_gumbel(np.random.default_rng(5), (3, 4))
    s = T.constant(RNG.normal(size=(3, 4)))
    gradcheck(lambda: (F.gumbel_softmax(logits, 0.5, noise) * s).sum(), [logits])


def test_gumbel_softmax_hard_is_onehot_with_soft_grads():
    logits = _param(6, 3)
    noise = F.sample_gumbel(np.random.default_rng(8), (6, 3))
    hard = F.gumbel_softmax(logits, 0.5, noise, hard=True)
    assert np.array_equal(np.sort(np.unique(hard.data)), [0.0, 1.0])
    np.testing.assert_allclose(hard.data.sum(axis=-1), 1.0)
    # straight-through: grads equal those of the soft sample
    (hard * T.constant(np.ones((6, 3)))).sum()
    logits.zero_grad()
    T.backward((hard * 2.0).sum())
    soft_logits = T.Parameter(logits.data.copy())
    T.backward((F.gumbel_softmax(soft_logits, 0.5, noise) * 2.0).sum())
    np.testing.assert_allclose(logits.grad, soft_logits.grad, rtol=1e-12)


def test_mse_masked_gradcheck():
    pred = _param(4, 3)
    target = T.constant(RNG.normal(size=(4, 3)))
    mask = (RNG.uniform(size=(4, 3)) > 0.4).astype(float)
    gradcheck(lambda: F.mse_masked(pred, target, mask), [pred])


def test_mse_masked_value():
    pred = T.constant([[1.0, 2.0], [3.0, 4.0]])
    target = T.constant([[0.0, 2.0], [5.0, 10.0]])
    mask = np.array([[1.0, 1.0], [1.0, 0.0]])
    # squared errors 1, 0, 4 over three unmasked entries
    assert abs(F.mse_masked(pred, target, mask).item() - 5.0 / 3.0) < 1e-12
    assert F.mse_masked(pred, target, np.zeros((2, 2))).item() == 0.0
    np.testing.assert_allclose(
        F.mse_masked(T.constant([1.0, 2.0]), T.constant([0.0, 0.0]),
                     np.array([1.0, 1.0])).item(), 2.5)


def test_kl_categorical_uniform():
    logits = _param(5, 4)
    gradcheck(lambda: F.kl_categorical_uniform(logits).sum(), [logits])
    # uniform logits give zero KL
    z = T.constant(np.zeros((2, 6)))
    np.testing.assert_allclose(F.kl_categorical_uniform(z).data, 0.0, atol=1e-12)
    # a point mass on one of k outcomes approaches log k
    p = T.constant(np.array([[50.0, 0.0, 0.0, 0.0]]))
    np.testing.assert_allclose(F.kl_categorical_uniform(p).data, np.log(4.0),
                               rtol=1e-6)


# ------------------------------------------------------------ tape semantics

def test_shape_ops_gradcheck():
    x = _param(2, 3, 4)
    s = T.constant(RNG.normal(size=(2, 12)))
    gradcheck(lambda: (T.reshape(x, (2, 12)) * s).sum(), [x])

    a, b = _param(2, 3), _param(2, 5)
    s2 = T.constant(RNG.normal(size=(2, 8)))
    gradcheck(lambda: (T.concat([a, b], axis=-1) * s2).sum(), [a, b])

    y = _param(3, 4, 2)
    idx = np.array([0, 2, 2, 1])
    s3 = T.constant(RNG.normal(size=(3, 4, 2)))
    gradcheck(lambda: (T.take(y, idx, axis=1) * s3).sum(), [y])

    m = RNG.normal(size=(4, 3))
    z = _param(2, 4, 5)
    s4 = T.constant(RNG.normal(size=(2, 3, 5)))
    gradcheck(lambda: (T.mix_axis1(z, m) * s4).sum(), [z])


def test_broadcast_gradcheck():
    a = _param(3, 1, 4)
    b = _param(5, 1)
    s = T.constant(RNG.normal(size=(3, 5, 4)))
    gradcheck(lambda: ((a * b + a) * s).sum(), [a, b])


def test_div_and_square_gradcheck():
    a = _param(3, 3)
    b = T.Parameter(RNG.uniform(0.5, 2.0, (3, 3)))
    gradcheck(lambda: (T.square(a) / b).sum(), [a, b])


def test_backward_accumulates_across_calls():
    x = T.Parameter([2.0, 3.0])
    T.backward((x * x).sum())
    once = x.grad.copy()
    T.backward((x * x).sum())
    np.testing.assert_allclose(x.grad, 2.0 * once)


def test_shared_subexpression_accumulates():
    x = T.Parameter([1.5])
    y = x * 3.0
    T.backward((y + y * y).sum())  # d/dx (3x + 9x^2) = 3 + 18x
    np.testing.assert_allclose(x.grad, [3.0 + 18.0 * 1.5])


def test_deep_graph_no_recursion_limit():
    x = T.Parameter([1.0])
    y = x
    for _ in range(5000):
        y = y + 0.0
    T.backward(y.sum())
    np.testing.assert_allclose(x.grad, [1.0])


def test_backward_nonscalar_raises():
    x = _param(2, 2)
    with pytest.raises(UsageError):
        T.backward(x * 1.0)


def test_shape_mismatch_raises():
    with pytest.raises(ConfigurationError):
        T.dense(_param(2, 3), _param(4, 5), _param(5), K.ACT_IDENTITY)
    with pytest.raises(ConfigurationError):
        T.gru_step(_param(2, 3), _param(2, 4), _param(3, 9), _param(3, 9),
                   _param(9), _param(9))
    with pytest.raises(ConfigurationError):
        F.gumbel_softmax(_param(2, 2), 0.0, np.zeros((2, 2)))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.booleans())
def test_add_broadcast_property(rows, cols, flip):
    rng = np.random.default_rng(rows * 10 + cols)
    a = T.Parameter(rng.normal(size=(rows, cols)))
    b = T.Parameter(rng.normal(size=(1, cols) if flip else (rows, 1)))
    T.backward((a + b).sum())
    np.testing.assert_allclose(a.grad, np.ones((rows, cols)))
    np.testing.assert_allclose(b.grad, np.full(b.data.shape, rows if flip else cols))


# ---------------------------------------------------------------- optimizer

def test_rmsprop_hand_value():
    ps = ParamSet()
    p = ps.add("w", T.Parameter([1.0]))
    p.grad[:] = [2.0]
    state = RmspropState(ps)
    rmsprop_update(ps, state, lr=5e-4, rho=0.99, eps=1e-8)
    v = 0.01 * 4.0
    expected = 1.0 - 5e-4 * 2.0 / (np.sqrt(v) + 1e-8)
    np.testing.assert_allclose(p.data, [expected], rtol=1e-12)
    np.testing.assert_allclose(state.v["w"], [v], rtol=1e-12)
    assert p.grad[0] == 0.0  # zeroed after the step


def test_rmsprop_shrinks_quadratic():
    ps = ParamSet()
    p = ps.add("w", T.Parameter(np.array([3.0, -2.0])))
    state = RmspropState(ps)
    for _ in range(400):
        loss = T.square(p).sum()
        T.backward(loss)
        rmsprop_update(ps, state, lr=0.01)
    assert np.all(np.abs(p.data) < 0.1)


def test_clip_global_norm():
    ps = ParamSet()
    a = ps.add("a", T.Parameter([3.0]))
    b = ps.add("b", T.Parameter([4.0]))
    a.grad[:] = [3.0]
    b.grad[:] = [4.0]
    norm = clip_global_norm(ps, 1.0)
    assert abs(norm - 5.0) < 1e-12
    np.testing.assert_allclose(a.grad, [0.6])
    np.testing.assert_allclose(b.grad, [0.8])
    # below the threshold nothing changes
    a.grad[:] = [0.3]
    b.grad[:] = [0.4]
    clip_global_norm(ps, 1.0)
    np.testing.assert_allclose(a.grad, [0.3])


# --------------------------------------------------------------- containers

def test_paramset_duplicate_name_raises():
    ps = ParamSet()
    ps.add("x", T.Parameter([1.0]))
    with pytest.raises(UsageError):
        ps.add("x", T.Parameter([2.0]))


def test_paramset_load_shape_mismatch_raises():
    ps = ParamSet()
    ps.add("x", T.Parameter(np.zeros((2, 2))))
    with pytest.raises(ConfigurationError):
        ps.load_arrays({"x": np.zeros(3)})
    with pytest.raises(ConfigurationError):
        ps.load_arrays({})


def test_layers_init_scale():
    ps = ParamSet()
    rng = np.random.default_rng(0)
    d = Dense(ps, "d", 100, 50, K.ACT_IDENTITY, rng)
    bound = 1.0 / np.sqrt(100)
    assert np.abs(d.W.data).max() <= bound
    g = GruCell(ps, "g", 100, 64, rng)
    assert np.abs(g.Wx.data).max() <= bound
    assert np.abs(g.Wh.data).max() <= 1.0 / np.sqrt(64)
    assert len(ps) == 6


def test_grucell_step_arrays_matches_tape():
    ps = ParamSet()
    rng = np.random.default_rng(3)
    cell = GruCell(ps, "g", 5, 4, rng)
    x = rng.normal(size=(2, 5))
    h = rng.normal(size=(2, 4))
    np.testing.assert_allclose(cell.step_arrays(x, h),
                               cell.step(T.constant(x), T.constant(h)).data,
                               rtol=1e-12)


# -------------------------------------------------------------- checkpoints

def test_checkpoint_roundtrip_bitexact(tmp_path):
    rng = np.random.default_rng(11)
    arrays = {"a.W": rng.normal(size=(7, 3)), "b": rng.normal(size=5),
              "scalar": np.array(3.75)}
    meta = {"seed": 42, "note": "x"}
    path = tmp_path / "ck.bin"
    save_checkpoint(path, arrays, meta)
    loaded, m = load_checkpoint(path)
    assert m["seed"] == 42 and m["note"] == "x"
    assert "substrate_version" in m
    for k, v in arrays.items():
        assert loaded[k].tobytes() == v.tobytes()
        assert loaded[k].shape == v.shape


def test_checkpoint_deterministic_bytes(tmp_path):
    arrays = {"w": np.linspace(0, 1, 9).reshape(3, 3)}
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_checkpoint(p1, arrays, {"k": 1})
    save_checkpoint(p2, arrays, {"k": 1})
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"not a checkpoint")
    with pytest.raises(ConfigurationError):
        load_checkpoint(p)
