"""Dense array primitives that every layer is built from.

Arrays are plain numpy ndarrays in C (row-major) order.  Training runs in
float32 by default; verification (finite-difference) runs use float64.
The convolution path is im2col + one matrix multiply; col2im is its exact
adjoint so gradient checks close to machine precision.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import DimensionError

DEFAULT_DTYPE = np.float32
VERIFY_DTYPE = np.float64


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """2-D matrix product with explicit shape validation."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(
            f"matmul expects rank-2 operands, got {a.ndim} and {b.ndim}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul inner dims differ: {a.shape} x {b.shape}"
        )
    return a @ b


def conv_output_hw(h: int, w: int, kh: int, kw: int,
                   stride: int, pad: int) -> tuple[int, int]:
    """Output spatial extent of a valid convolution over a padded input."""
    if stride < 1:
        raise DimensionError(f"stride must be >= 1, got {stride}")
    if pad < 0:
        raise DimensionError(f"pad must be >= 0, got {pad}")
    hp, wp = h + 2 * pad, w + 2 * pad
    if kh > hp or kw > wp:
        raise DimensionError(
            f"kernel ({kh}x{kw}) larger than padded input ({hp}x{wp})"
        )
    return (hp - kh) // stride + 1, (wp - kw) // stride + 1


def im2col_batch(x: np.ndarray, kh: int, kw: int,
                 stride: int = 1, pad: int = 0) -> np.ndarray:
    """Gather conv receptive fields from [N,C,H,W] into [C*kh*kw, N, Ho*Wo].

    Row index runs over (c, ki, kj) in row-major order; the last axis runs
    over output positions in row-major (i, j) order.  Zero padding is
    materialised, so padded taps read exactly 0.
    """
    x = np.asarray(x)
    if x.ndim != 4:
        raise DimensionError(f"im2col_batch expects [N,C,H,W], got rank {x.ndim}")
    n, c, h, w = x.shape
    ho, wo = conv_output_hw(h, w, kh, kw, stride, pad)
    if pad:
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    else:
        xp = x
    sn, sc, sh, sw = xp.strides
    win = as_strided(
        xp,
        shape=(c, kh, kw, n, ho, wo),
        strides=(sc, sh, sw, sn, stride * sh, stride * sw),
        writeable=False,
    )
    return win.reshape(c * kh * kw, n, ho * wo)


def col2im_batch(cols: np.ndarray, input_shape: tuple[int, int, int, int],
                 kh: int, kw: int, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Scatter-add adjoint of im2col_batch; returns an [N,C,H,W] array."""
    n, c, h, w = input_shape
    ho, wo = conv_output_hw(h, w, kh, kw, stride, pad)
    if cols.shape != (c * kh * kw, n, ho * wo):
        raise DimensionError(
            f"col2im_batch got {cols.shape}, expected {(c * kh * kw, n, ho * wo)}"
        )
    hp, wp = h + 2 * pad, w + 2 * pad
    out = np.zeros((n, c, hp, wp), dtype=cols.dtype)
    cols6 = cols.reshape(c, kh, kw, n, ho, wo)
    for ki in range(kh):
        for kj in range(kw):
            out[:, :, ki:ki + stride * ho:stride, kj:kj + stride * wo:stride] += (
                cols6[:, ki, kj].transpose(1, 0, 2, 3)
            )
    if pad:
        out = out[:, :, pad:hp - pad, pad:wp - pad]
    return np.ascontiguousarray(out)


def im2col(x: np.ndarray, kh: int, kw: int,
           stride: int = 1, pad: int = 0) -> np.ndarray:
    """Single-image im2col: [C,H,W] -> [C*kh*kw, Ho*Wo].

    Column t holds the receptive field of output position t.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise DimensionError(f"im2col expects [C,H,W], got rank {x.ndim}")
    return im2col_batch(x[None], kh, kw, stride, pad)[:, 0, :]


def col2im(cols: np.ndarray, input_shape: tuple[int, int, int],
           kh: int, kw: int, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Adjoint of im2col for a single image."""
    c, h, w = input_shape
    if cols.ndim != 2:
        raise DimensionError(f"col2im expects rank-2 cols, got rank {cols.ndim}")
    return col2im_batch(cols[:, None, :], (1, c, h, w), kh, kw, stride, pad)[0]


def topk_indices(v: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries of a rank-1 array.

    Ordered by descending value; ties broken toward the smaller index.
    """
    v = np.asarray(v)
    if v.ndim != 1:
        raise DimensionError(f"topk_indices expects rank-1, got rank {v.ndim}")
    if not 1 <= k <= v.shape[0]:
        raise DimensionError(f"k={k} out of range for length {v.shape[0]}")
    order = np.argsort(-v, kind="stable")
    return order[:k]


def elementwise(x: np.ndarray, f) -> np.ndarray:
    """Apply a scalar map to every entry, preserving shape and dtype."""
    x = np.asarray(x)
    if isinstance(f, np.ufunc):
        return f(x)
    flat = np.fromiter((f(v) for v in x.ravel()), dtype=x.dtype, count=x.size)
    return flat.reshape(x.shape)


def reduce_sum(x: np.ndarray, axis: int) -> np.ndarray:
    """Sum over one axis with bounds checking."""
    x = np.asarray(x)
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} out of range for rank {x.ndim}")
    return x.sum(axis=axis)


def silu(x: np.ndarray) -> np.ndarray:
    """x * sigmoid(x), computed without overflow for large |x|."""
    return x * sigmoid(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    np.exp(-x, where=pos, out=out)
    out[pos] = 1.0 / (1.0 + out[pos])
    neg = ~pos
    ex = np.exp(x[neg])
    out[neg] = ex / (1.0 + ex)
    return out


def sigmoid_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 - s)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return (x > 0).astype(x.dtype)
