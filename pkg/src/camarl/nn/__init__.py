"""Reverse-mode autodiff substrate with fused recurrent kernels.

Everything trains in float64 on the CPU.  Hot paths (dense layers, GRU
steps, whole-episode Q-network unrolls) are implemented once in
numba-compatible numpy and compiled or not depending on the selected
backend, see ``camarl.accel``.
"""

from camarl.nn.tensor import Tensor, Parameter, constant, backward
from camarl.nn.layers import Dense, GruCell, ParamSet
from camarl.nn import functional
from camarl.nn.optim import RmspropState, rmsprop_update, clip_global_norm
from camarl.nn.checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Tensor",
    "Parameter",
    "constant",
    "backward",
    "Dense",
    "GruCell",
    "ParamSet",
    "functional",
    "RmspropState",
    "rmsprop_update",
    "clip_global_norm",
    "save_checkpoint",
    "load_checkpoint",
]
