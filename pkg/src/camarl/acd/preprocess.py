"""Series preprocessing: Savitzky-Golay smoothing and reward normalization.

The smoother fits a polynomial of order 10 to a sliding window by least
squares and keeps the window's center value.  Near the boundaries the
window is truncated to the available samples and the fit order drops to
window length minus one when the full order would be underdetermined.
"""

import numpy as np

from camarl.errors import ConfigurationError

POLY_ORDER = 10


def sg_window(T: int) -> int:
    """Smoothing window: half the series length, forced odd."""
    if T < 24:
        raise ConfigurationError(
            f"series length {T} too short to smooth with polynomial order "
            f"{POLY_ORDER}; need T >= 24")
    t2 = T // 2
    return t2 - (1 - t2 % 2)


def _fit_weights(offsets, order):
    """Least-squares weights for the fitted value at offset zero.

    The smoothed value is a linear functional of the window samples, so
    one pseudoinverse per window shape is enough.  Offsets are rescaled
    to [-1, 1] to keep the Vandermonde matrix well conditioned; the
    fitted value at zero is unchanged by the rescaling.
    """
    x = np.asarray(offsets, dtype=np.float64)
    scale = np.abs(x).max()
    if scale > 0:
        x = x / scale
    v = np.vander(x, order + 1, increasing=True)
    return np.linalg.pinv(v)[0]


def sg_weight_table(T: int):
    """Per-position weight vectors (pos, lo, weights) for a length-T series."""
    delta = sg_window(T)
    half = delta // 2
    table = []
    center = None
    for t in range(T):
        lo = max(0, t - half)
        hi = min(T, t + half + 1)
        order = min(POLY_ORDER, hi - lo - 1)
        if lo == t - half and hi == t + half + 1:
            if center is None:
                center = _fit_weights(np.arange(lo, hi) - t, order)
            w = center
        else:
            w = _fit_weights(np.arange(lo, hi) - t, order)
        table.append((lo, hi, w))
    return table


def savgol_smooth(series: np.ndarray) -> np.ndarray:
    """Smooth (T,) or (T, C) data along the first axis."""
    x = np.asarray(series, dtype=np.float64)
    T = x.shape[0]
    out = np.empty_like(x)
    for t, (lo, hi, w) in enumerate(sg_weight_table(T)):
        out[t] = w @ x[lo:hi]
    return out


def minmax_normalize(series: np.ndarray) -> np.ndarray:
    """Map to [0, 1]; a constant series maps to all zeros."""
    x = np.asarray(series, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def preprocess_series(x: np.ndarray) -> np.ndarray:
    """Smooth observation nodes, normalize the reward node.

    x is (n_nodes, T, D) with the reward series in the last node's
    channel 0 (remaining channels zero padding).  Returns a new array.
    """
    out = x.astype(np.float64).copy()
    for i in range(x.shape[0] - 1):
        out[i] = savgol_smooth(x[i])
    out[-1, :, 0] = minmax_normalize(x[-1, :, 0])
    return out
