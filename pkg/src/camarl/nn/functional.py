"""Composite differentiable functions built from tape primitives."""

import numpy as np

from camarl.errors import ConfigurationError, UsageError
from camarl.nn import tensor as T


def sample_gumbel(rng: np.random.Generator, shape):
    """Standard Gumbel noise, drawn outside the tape for reproducibility."""
    u = rng.uniform(low=np.finfo(np.float64).tiny, high=1.0, size=shape)
    return -np.log(-np.log(u))


def gumbel_softmax(logits, temperature, noise, hard=False):
    """Concrete relaxation of a categorical over the last axis.

    ``noise`` is a precomputed Gumbel array matching ``logits``; passing
    it explicitly keeps sampling out of the autodiff graph and makes the
    op finite-difference checkable.  With ``hard`` the forward output is
    the one-hot argmax and gradients flow through the soft sample.
    """
    logits = T._wrap(logits)
    if np.asarray(noise).shape != logits.data.shape:
        raise UsageError("gumbel noise shape must match logits")
    if temperature <= 0.0:
        raise ConfigurationError("gumbel temperature must be positive")
    y = T.softmax((logits + T.constant(noise)) * (1.0 / temperature), axis=-1)
    if hard:
        y = T.straight_through_onehot(y, axis=-1)
    return y


def mse_masked(pred, target, mask):
    """Mean squared error over the entries where mask is nonzero.

    An all-zero mask yields 0 rather than dividing by zero.
    """
    pred = T._wrap(pred)
    target = T._wrap(target)
    m = np.asarray(mask, dtype=np.float64)
    total = float(m.sum())
    if total == 0.0:
        return (pred * T.constant(np.zeros_like(m))).sum()
    d = pred - target
    return (d * d * T.constant(m)).sum() * (1.0 / total)


def kl_categorical_uniform(logits, axis=-1):
    """KL(softmax(logits) || uniform) taken over ``axis``, other axes kept."""
    k = T._wrap(logits).data.shape[axis]
    q = T.softmax(logits, axis=axis)
    lq = T.log_softmax(logits, axis=axis)
    return (q * lq).sum(axis=axis) + float(np.log(k))
