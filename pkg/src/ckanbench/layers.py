"""Layers with explicit forward/backward passes.

Every layer follows the same protocol: ``forward(x, training=True)``
caches what backward needs, ``backward(dout)`` accumulates parameter
gradients and returns the input gradient.  Calling backward without a
cached training forward raises ``StateError``.

Spline-kernel (KAN) layers replace each scalar weight of the classical
layer with a learnable scalar function

    phi(x) = w_b * act(x) + w_s * sum_m c_m * basis_m(x) + t

so each edge carries B + 3 parameters (B spline coefficients, the base
weight w_b, the spline gain w_s, and the shift t).  The convolution is
evaluated as im2col followed by one matrix multiply per term; the basis
expansion is chunked over the batch to bound peak memory.

Channel masks: KAN conv layers carry a boolean ``channel_mask`` over
output channels.  Masked channels output exactly 0, receive zero
gradients, and are excluded from parameter and MAC counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_ops as T
from .errors import ConfigError, DimensionError, StateError
from .splines import SplineSpec, basis_block, basis_and_deriv_block

# Upper bound on elements of one chunked [T, B, n, P] basis table
# (16M float32 elements = 64 MiB); keeps peak memory flat on big batches.
KAN_CHUNK_ELEMS = 16_777_216

_ACTS = {
    "relu": (T.relu, T.relu_grad),
    "silu": (T.silu, T.silu_grad),
    "sigmoid": (T.sigmoid, T.sigmoid_grad),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
}


def _act_pair(kind: str):
    if kind not in _ACTS:
        raise ConfigError(f"unknown activation {kind!r}")
    return _ACTS[kind]


class Layer:
    """Base protocol; stateless layers only override the pass methods."""

    name: str = ""

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[tuple[str, np.ndarray]]:
        return []

    def grads(self) -> list[tuple[str, np.ndarray]]:
        return []

    def state_extra(self) -> list[tuple[str, np.ndarray]]:
        """Non-trainable state that must survive a checkpoint round trip."""
        return []

    def zero_grads(self) -> None:
        for _, g in self.grads():
            g[...] = 0.0

    def param_count(self) -> int:
        return 0

    def mac_count(self, in_shape: tuple) -> int:
        """Multiply-accumulate ops for one sample of the given input shape."""
        return 0

    def output_shape(self, in_shape: tuple) -> tuple:
        raise NotImplementedError

    def _need_cache(self, cache):
        if cache is None:
            raise StateError(f"{type(self).__name__}: backward before forward")
        return cache


class Activation(Layer):
    def __init__(self, kind: str = "relu", name: str = ""):
        self.kind = kind
        self.fn, self.grad_fn = _act_pair(kind)
        self.name = name
        self._x = None

    def forward(self, x, training=True):
        if training:
            self._x = x
        return self.fn(x)

    def backward(self, dout):
        x = self._need_cache(self._x)
        return dout * self.grad_fn(x)

    def output_shape(self, in_shape):
        return tuple(in_shape)


class Flatten(Layer):
    def __init__(self, name: str = ""):
        self.name = name
        self._shape = None

    def forward(self, x, training=True):
        if training:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        shape = self._need_cache(self._shape)
        return dout.reshape(shape)

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)


class Reshape(Layer):
    """Fixed per-sample reshape, e.g. a feature vector into [C, L]."""

    def __init__(self, shape: tuple, name: str = ""):
        self.shape = tuple(int(s) for s in shape)
        self.name = name
        self._in_shape = None

    def forward(self, x, training=True):
        if training:
            self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dout):
        shape = self._need_cache(self._in_shape)
        return dout.reshape(shape)

    def output_shape(self, in_shape):
        if int(np.prod(in_shape)) != int(np.prod(self.shape)):
            raise DimensionError(f"cannot reshape {in_shape} into {self.shape}")
        return self.shape


class MaxPool2D(Layer):
    """Max pooling; gradient routes to the first occurrence of the max
    in row-major window order."""

    def __init__(self, window=2, stride=None, name: str = ""):
        wh, ww = (window, window) if np.isscalar(window) else window
        self.wh, self.ww = int(wh), int(ww)
        self.stride = int(stride) if stride is not None else self.wh
        if self.wh < 1 or self.ww < 1 or self.stride < 1:
            raise ConfigError("pool window and stride must be >= 1")
        self.name = name
        self._cache = None

    def _out_hw(self, h, w):
        if self.wh > h or self.ww > w:
            raise DimensionError(f"pool window {(self.wh, self.ww)} exceeds input {(h, w)}")
        return (h - self.wh) // self.stride + 1, (w - self.ww) // self.stride + 1

    def forward(self, x, training=True):
        n, c, h, w = x.shape
        ho, wo = self._out_hw(h, w)
        s = self.stride
        sn, sc, sh, sw = x.strides
        win = np.lib.stride_tricks.as_strided(
            x, (n, c, ho, wo, self.wh, self.ww),
            (sn, sc, s * sh, s * sw, sh, sw), writeable=False,
        ).reshape(n, c, ho, wo, self.wh * self.ww)
        idx = win.argmax(axis=-1)
        out = win.max(axis=-1)
        if training:
            self._cache = (x.shape, idx)
        return out

    def backward(self, dout):
        (n, c, h, w), idx = self._need_cache(self._cache)
        ho, wo = self._out_hw(h, w)
        s = self.stride
        dx = np.zeros((n, c, h, w), dtype=dout.dtype)
        for pi in range(self.wh):
            for pj in range(self.ww):
                sel = idx == (pi * self.ww + pj)
                dx[:, :, pi:pi + s * ho:s, pj:pj + s * wo:s] += dout * sel
        return dx

    def output_shape(self, in_shape):
        c, h, w = in_shape
        ho, wo = self._out_hw(h, w)
        return (c, ho, wo)


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, rng=None,
                 dtype=T.DEFAULT_DTYPE, name: str = ""):
        rng = rng or np.random.default_rng()
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        bound = 1.0 / np.sqrt(self.in_features)
        self.weight = rng.uniform(-bound, bound,
                                  (self.out_features, self.in_features)).astype(dtype)
        self.bias = np.zeros(self.out_features, dtype=dtype)
        self.gweight = np.zeros_like(self.weight)
        self.gbias = np.zeros_like(self.bias)
        self.name = name
        self._x = None

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise DimensionError(f"{self.name or 'linear'}: expected [N,{self.in_features}], got {x.shape}")
        if training:
            self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, dout):
        x = self._need_cache(self._x)
        self.gweight += dout.T @ x
        self.gbias += dout.sum(axis=0)
        return dout @ self.weight

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.gweight), ("bias", self.gbias)]

    def param_count(self):
        return self.weight.size + self.bias.size

    def mac_count(self, in_shape):
        return self.in_features * self.out_features

    def output_shape(self, in_shape):
        if tuple(in_shape) != (self.in_features,):
            raise DimensionError(f"linear expects ({self.in_features},), got {in_shape}")
        return (self.out_features,)


class Conv2D(Layer):
    def __init__(self, in_ch: int, out_ch: int, kh: int, kw: int = None,
                 stride: int = 1, pad: int = 0, rng=None,
                 dtype=T.DEFAULT_DTYPE, name: str = ""):
        kw = kh if kw is None else kw
        rng = rng or np.random.default_rng()
        self.in_ch, self.out_ch = int(in_ch), int(out_ch)
        self.kh, self.kw = int(kh), int(kw)
        self.stride, self.pad = int(stride), int(pad)
        fan_in = self.in_ch * self.kh * self.kw
        bound = 1.0 / np.sqrt(fan_in)
        self.weight = rng.uniform(-bound, bound,
                                  (self.out_ch, self.in_ch, self.kh, self.kw)).astype(dtype)
        self.bias = np.zeros(self.out_ch, dtype=dtype)
        self.gweight = np.zeros_like(self.weight)
        self.gbias = np.zeros_like(self.bias)
        self.name = name
        self._cache = None

    def forward(self, x, training=True):
        n, c, h, w = x.shape
        if c != self.in_ch:
            raise DimensionError(f"{self.name or 'conv'}: expected {self.in_ch} channels, got {c}")
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        cols = T.im2col_batch(x, self.kh, self.kw, self.stride, self.pad)
        w2 = self.weight.reshape(self.out_ch, -1)
        out_f = w2 @ cols.reshape(cols.shape[0], -1)
        out_f += self.bias[:, None]
        out = out_f.reshape(self.out_ch, n, ho * wo).transpose(1, 0, 2)
        if training:
            self._cache = (x.shape, cols)
        return np.ascontiguousarray(out).reshape(n, self.out_ch, ho, wo)

    def backward(self, dout):
        x_shape, cols = self._need_cache(self._cache)
        n = x_shape[0]
        p = dout.shape[2] * dout.shape[3]
        g = np.ascontiguousarray(dout.reshape(n, self.out_ch, p).transpose(1, 0, 2))
        g2 = g.reshape(self.out_ch, -1)
        self.gweight += (g2 @ cols.reshape(cols.shape[0], -1).T).reshape(self.weight.shape)
        self.gbias += g2.sum(axis=1)
        dcols = (self.weight.reshape(self.out_ch, -1).T @ g2).reshape(cols.shape)
        return T.col2im_batch(dcols, x_shape, self.kh, self.kw, self.stride, self.pad)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.gweight), ("bias", self.gbias)]

    def param_count(self):
        return self.weight.size + self.bias.size

    def mac_count(self, in_shape):
        c, h, w = in_shape
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        return self.out_ch * ho * wo * c * self.kh * self.kw

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_ch:
            raise DimensionError(f"conv expects {self.in_ch} channels, got {c}")
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        return (self.out_ch, ho, wo)


@dataclass
class KanEdgeParams:
    """Scalars of one learnable edge function."""
    coeffs: np.ndarray
    w_base: float
    w_spline: float
    shift: float


def kan_edge_eval(x, edge: KanEdgeParams, spec: SplineSpec,
                  base_act: str = "silu"):
    """phi(x) for one edge; x may be a scalar or any-shape array."""
    from .splines import basis_eval
    fn, _ = _act_pair(base_act)
    xa = np.asarray(x, dtype=np.float64)
    phi = basis_eval(xa, spec)
    spline = phi @ np.asarray(edge.coeffs, dtype=np.float64)
    return edge.w_base * fn(xa) + edge.w_spline * spline + edge.shift


def _kan_chunk(t: int, b: int, p: int, n: int) -> int:
    per_sample = max(1, t * b * p)
    return max(1, min(n, KAN_CHUNK_ELEMS // per_sample))


def _kan_forward(cols, w_base2, w_spline2, coeffs3, shift2, bias, mask,
                 spec, act_fn):
    """cols [T,N,P] -> out [O,N,P] with masked channels forced to 0."""
    o, t = w_base2.shape
    b = spec.basis_count
    _, n, p = cols.shape
    w_sp = (w_spline2[:, :, None] * coeffs3).reshape(o, t * b)
    out = np.empty((o, n, p), dtype=cols.dtype)
    nc = _kan_chunk(t, b, p, n)
    for n0 in range(0, n, nc):
        xc = cols[:, n0:n0 + nc]
        phi = basis_block(xc, spec)
        z = w_sp @ phi.reshape(t * b, -1)
        z += w_base2 @ act_fn(xc).reshape(t, -1)
        out[:, n0:n0 + nc] = z.reshape(o, xc.shape[1], p)
    out += (shift2.sum(axis=1) + bias)[:, None, None]
    out[~mask] = 0.0
    return out


def _kan_backward(dout_f, cols, w_base2, w_spline2, coeffs3, mask, spec,
                  act_fn, act_grad_fn,
                  gw_base2, gw_spline2, gcoeffs3, gshift2, gbias):
    """dout_f [O,N,P] -> dcols [T,N,P], accumulating parameter grads."""
    o, t = w_base2.shape
    b = spec.basis_count
    _, n, p = cols.shape
    g_f = dout_f.copy()
    g_f[~mask] = 0.0
    s = g_f.sum(axis=(1, 2))
    gbias += s
    gshift2 += s[:, None]
    w_sp = (w_spline2[:, :, None] * coeffs3).reshape(o, t * b)
    draw = np.zeros((o, t * b), dtype=cols.dtype)
    dcols = np.empty_like(cols)
    nc = _kan_chunk(t, b, p, n)
    for n0 in range(0, n, nc):
        xc = cols[:, n0:n0 + nc]
        gc = np.ascontiguousarray(g_f[:, n0:n0 + nc]).reshape(o, -1)
        gw_base2 += gc @ act_fn(xc).reshape(t, -1).T
        phi, dphi = basis_and_deriv_block(xc, spec)
        draw += gc @ phi.reshape(t * b, -1).T
        back = (w_sp.T @ gc).reshape(t, b, xc.shape[1], p)
        dc = (w_base2.T @ gc).reshape(t, xc.shape[1], p) * act_grad_fn(xc)
        dc += np.einsum("tbnp,tbnp->tnp", back, dphi)
        dcols[:, n0:n0 + nc] = dc
    draw3 = draw.reshape(o, t, b)
    gcoeffs3 += w_spline2[:, :, None] * draw3
    gw_spline2 += (coeffs3 * draw3).sum(axis=-1)
    return dcols


class KanConv2D(Layer):
    """Convolution whose kernel taps are learnable 1-D spline functions."""

    def __init__(self, in_ch: int, out_ch: int, kh: int, kw: int = None,
                 stride: int = 1, pad: int = 0, spec: SplineSpec = None,
                 base_act: str = "silu", rng=None,
                 dtype=T.DEFAULT_DTYPE, name: str = ""):
        kw = kh if kw is None else kw
        rng = rng or np.random.default_rng()
        if spec is None:
            raise ConfigError("KanConv2D requires a SplineSpec")
        self.in_ch, self.out_ch = int(in_ch), int(out_ch)
        self.kh, self.kw = int(kh), int(kw)
        self.stride, self.pad = int(stride), int(pad)
        self.spec = spec
        self.base_act = base_act
        self.act_fn, self.act_grad_fn = _act_pair(base_act)
        b = spec.basis_count
        shape4 = (self.out_ch, self.in_ch, self.kh, self.kw)
        fan_in = self.in_ch * self.kh * self.kw
        bound = 1.0 / np.sqrt(fan_in)
        self.w_base = rng.uniform(-bound, bound, shape4).astype(dtype)
        self.w_spline = np.ones(shape4, dtype=dtype)
        self.coeffs = rng.normal(0.0, 0.1 / np.sqrt(b), shape4 + (b,)).astype(dtype)
        self.shift = np.zeros(shape4, dtype=dtype)
        self.bias = np.zeros(self.out_ch, dtype=dtype)
        self.g_w_base = np.zeros_like(self.w_base)
        self.g_w_spline = np.zeros_like(self.w_spline)
        self.g_coeffs = np.zeros_like(self.coeffs)
        self.g_shift = np.zeros_like(self.shift)
        self.g_bias = np.zeros_like(self.bias)
        self.channel_mask = np.ones(self.out_ch, dtype=bool)
        self.name = name
        self._cache = None

    @property
    def taps(self) -> int:
        return self.in_ch * self.kh * self.kw

    def edge(self, o: int, c: int, ki: int, kj: int) -> KanEdgeParams:
        return KanEdgeParams(
            coeffs=self.coeffs[o, c, ki, kj],
            w_base=float(self.w_base[o, c, ki, kj]),
            w_spline=float(self.w_spline[o, c, ki, kj]),
            shift=float(self.shift[o, c, ki, kj]),
        )

    def forward(self, x, training=True):
        n, c, h, w = x.shape
        if c != self.in_ch:
            raise DimensionError(f"{self.name or 'kanconv'}: expected {self.in_ch} channels, got {c}")
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        cols = T.im2col_batch(x, self.kh, self.kw, self.stride, self.pad)
        o, t = self.out_ch, self.taps
        out_f = _kan_forward(
            cols, self.w_base.reshape(o, t), self.w_spline.reshape(o, t),
            self.coeffs.reshape(o, t, -1), self.shift.reshape(o, t),
            self.bias, self.channel_mask, self.spec, self.act_fn,
        )
        if training:
            self._cache = (x.shape, cols)
        out = out_f.transpose(1, 0, 2)
        return np.ascontiguousarray(out).reshape(n, o, ho, wo)

    def backward(self, dout):
        x_shape, cols = self._need_cache(self._cache)
        n = x_shape[0]
        o, t = self.out_ch, self.taps
        p = dout.shape[2] * dout.shape[3]
        dout_f = np.ascontiguousarray(dout.reshape(n, o, p).transpose(1, 0, 2))
        dcols = _kan_backward(
            dout_f, cols,
            self.w_base.reshape(o, t), self.w_spline.reshape(o, t),
            self.coeffs.reshape(o, t, -1), self.channel_mask, self.spec,
            self.act_fn, self.act_grad_fn,
            self.g_w_base.reshape(o, t), self.g_w_spline.reshape(o, t),
            self.g_coeffs.reshape(o, t, -1), self.g_shift.reshape(o, t),
            self.g_bias,
        )
        return T.col2im_batch(dcols, x_shape, self.kh, self.kw, self.stride, self.pad)

    def params(self):
        return [("coeffs", self.coeffs), ("w_base", self.w_base),
                ("w_spline", self.w_spline), ("shift", self.shift),
                ("bias", self.bias)]

    def grads(self):
        return [("coeffs", self.g_coeffs), ("w_base", self.g_w_base),
                ("w_spline", self.g_w_spline), ("shift", self.g_shift),
                ("bias", self.g_bias)]

    def state_extra(self):
        return [("channel_mask", self.channel_mask)]

    def active_channels(self) -> int:
        return int(self.channel_mask.sum())

    def param_count(self):
        per_channel = self.taps * (self.spec.basis_count + 3) + 1
        return self.active_channels() * per_channel

    def mac_count(self, in_shape):
        c, h, w = in_shape
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        return (self.active_channels() * ho * wo * c * self.kh * self.kw
                * (self.spec.basis_count + 2))

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_ch:
            raise DimensionError(f"kanconv expects {self.in_ch} channels, got {c}")
        ho, wo = T.conv_output_hw(h, w, self.kh, self.kw, self.stride, self.pad)
        return (self.out_ch, ho, wo)


class KanLinear(Layer):
    """Fully connected layer whose weights are learnable spline functions."""

    def __init__(self, in_features: int, out_features: int,
                 spec: SplineSpec = None, base_act: str = "silu", rng=None,
                 dtype=T.DEFAULT_DTYPE, name: str = ""):
        rng = rng or np.random.default_rng()
        if spec is None:
            raise ConfigError("KanLinear requires a SplineSpec")
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.spec = spec
        self.base_act = base_act
        self.act_fn, self.act_grad_fn = _act_pair(base_act)
        b = spec.basis_count
        shape2 = (self.out_features, self.in_features)
        bound = 1.0 / np.sqrt(self.in_features)
        self.w_base = rng.uniform(-bound, bound, shape2).astype(dtype)
        self.w_spline = np.ones(shape2, dtype=dtype)
        self.coeffs = rng.normal(0.0, 0.1 / np.sqrt(b), shape2 + (b,)).astype(dtype)
        self.shift = np.zeros(shape2, dtype=dtype)
        self.bias = np.zeros(self.out_features, dtype=dtype)
        self.g_w_base = np.zeros_like(self.w_base)
        self.g_w_spline = np.zeros_like(self.w_spline)
        self.g_coeffs = np.zeros_like(self.coeffs)
        self.g_shift = np.zeros_like(self.shift)
        self.g_bias = np.zeros_like(self.bias)
        self.channel_mask = np.ones(self.out_features, dtype=bool)
        self.name = name
        self._x = None

    def edge(self, o: int, i: int) -> KanEdgeParams:
        return KanEdgeParams(
            coeffs=self.coeffs[o, i], w_base=float(self.w_base[o, i]),
            w_spline=float(self.w_spline[o, i]), shift=float(self.shift[o, i]),
        )

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise DimensionError(f"{self.name or 'kanlinear'}: expected [N,{self.in_features}], got {x.shape}")
        cols = np.ascontiguousarray(x.T)[:, :, None]     # [F, N, 1]
        out_f = _kan_forward(
            cols, self.w_base, self.w_spline, self.coeffs, self.shift,
            self.bias, self.channel_mask, self.spec, self.act_fn,
        )
        if training:
            self._x = (x.shape, cols)
        return np.ascontiguousarray(out_f[:, :, 0].T)

    def backward(self, dout):
        x_shape, cols = self._need_cache(self._x)
        dout_f = np.ascontiguousarray(dout.T)[:, :, None]
        dcols = _kan_backward(
            dout_f, cols, self.w_base, self.w_spline, self.coeffs,
            self.channel_mask, self.spec, self.act_fn, self.act_grad_fn,
            self.g_w_base, self.g_w_spline, self.g_coeffs, self.g_shift,
            self.g_bias,
        )
        return np.ascontiguousarray(dcols[:, :, 0].T)

    def params(self):
        return [("coeffs", self.coeffs), ("w_base", self.w_base),
                ("w_spline", self.w_spline), ("shift", self.shift),
                ("bias", self.bias)]

    def grads(self):
        return [("coeffs", self.g_coeffs), ("w_base", self.g_w_base),
                ("w_spline", self.g_w_spline), ("shift", self.g_shift),
                ("bias", self.g_bias)]

    def state_extra(self):
        return [("channel_mask", self.channel_mask)]

    def active_channels(self) -> int:
        return int(self.channel_mask.sum())

    def param_count(self):
        per_out = self.in_features * (self.spec.basis_count + 3) + 1
        return self.active_channels() * per_out

    def mac_count(self, in_shape):
        return (self.in_features * self.active_channels()
                * (self.spec.basis_count + 2))

    def output_shape(self, in_shape):
        if tuple(in_shape) != (self.in_features,):
            raise DimensionError(f"kanlinear expects ({self.in_features},), got {in_shape}")
        return (self.out_features,)


class _Wrap1D(Layer):
    """Adapter running a 2-D layer over [N, C, L] with height 1."""

    inner: Layer

    def forward(self, x, training=True):
        if x.ndim != 3:
            raise DimensionError(f"1-D layer expects [N,C,L], got rank {x.ndim}")
        out = self.inner.forward(x[:, :, None, :], training=training)
        return out[:, :, 0, :]

    def backward(self, dout):
        return self.inner.backward(dout[:, :, None, :])[:, :, 0, :]

    def params(self):
        return self.inner.params()

    def grads(self):
        return self.inner.grads()

    def state_extra(self):
        return self.inner.state_extra()

    def param_count(self):
        return self.inner.param_count()

    def mac_count(self, in_shape):
        c, length = in_shape
        return self.inner.mac_count((c, 1, length))

    def output_shape(self, in_shape):
        c, length = in_shape
        co, _, lo = self.inner.output_shape((c, 1, length))
        return (co, lo)


class Conv1D(_Wrap1D):
    def __init__(self, in_ch, out_ch, k, stride=1, pad=0, rng=None,
                 dtype=T.DEFAULT_DTYPE, name: str = ""):
        self.inner = Conv2D(in_ch, out_ch, 1, k, stride=stride, pad=0,
                            rng=rng, dtype=dtype, name=name)
        self.pad = int(pad)
        self.name = name

    def forward(self, x, training=True):
        if self.pad:
            x = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad)))
        return super().forward(x, training=training)

    def backward(self, dout):
        dx = super().backward(dout)
        if self.pad:
            dx = dx[:, :, self.pad:dx.shape[2] - self.pad]
        return dx

    def mac_count(self, in_shape):
        c, length = in_shape
        return self.inner.mac_count((c, 1, length + 2 * self.pad))

    def output_shape(self, in_shape):
        c, length = in_shape
        co, _, lo = self.inner.output_shape((c, 1, length + 2 * self.pad))
        return (co, lo)


class KanConv1D(_Wrap1D):
    def __init__(self, in_ch, out_ch, k, stride=1, pad=0, spec=None,
                 base_act="silu", rng=None, dtype=T.DEFAULT_DTYPE, name=""):
        self.inner = KanConv2D(in_ch, out_ch, 1, k, stride=stride, pad=0,
                               spec=spec, base_act=base_act, rng=rng,
                               dtype=dtype, name=name)
        self.pad = int(pad)
        self.name = name

    @property
    def channel_mask(self):
        return self.inner.channel_mask

    @channel_mask.setter
    def channel_mask(self, value):
        self.inner.channel_mask = value

    @property
    def spec(self):
        return self.inner.spec

    def active_channels(self):
        return self.inner.active_channels()

    @property
    def taps(self):
        return self.inner.taps

    def forward(self, x, training=True):
        if self.pad:
            x = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad)))
        return super().forward(x, training=training)

    def backward(self, dout):
        dx = super().backward(dout)
        if self.pad:
            dx = dx[:, :, self.pad:dx.shape[2] - self.pad]
        return dx

    def mac_count(self, in_shape):
        c, length = in_shape
        return self.inner.mac_count((c, 1, length + 2 * self.pad))

    def output_shape(self, in_shape):
        c, length = in_shape
        co, _, lo = self.inner.output_shape((c, 1, length + 2 * self.pad))
        return (co, lo)


class MaxPool1D(_Wrap1D):
    def __init__(self, window=2, stride=None, name: str = ""):
        self.inner = MaxPool2D((1, window), stride=stride if stride else window,
                               name=name)
        self.name = name


class GlobalAvgPool1D(Layer):
    """[N, C, L] -> [N, C] mean over the length axis."""

    def __init__(self, name: str = ""):
        self.name = name
        self._len = None

    def forward(self, x, training=True):
        if training:
            self._len = x.shape[2]
        return x.mean(axis=2)

    def backward(self, dout):
        length = self._need_cache(self._len)
        return np.repeat(dout[:, :, None], length, axis=2) / length

    def output_shape(self, in_shape):
        c, _ = in_shape
        return (c,)
