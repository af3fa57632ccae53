"""From-scratch network layers: forward passes and analytic gradients.

Every layer caches what its backward pass needs during forward and exposes
its trainable arrays through ``params()``.  Shapes follow the (batch,
channels, height, width) convention; Dense flattens whatever it receives.
Convolution is valid-mode cross-correlation (no padding), as is standard
for the architectures built here.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatchError


class Layer:
    """Base layer: stateless unless it carries parameters."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the input; parameter gradients accumulate internally."""
        raise NotImplementedError

    def params(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """(name, value, gradient) triples of the trainable arrays."""
        return []

    def out_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def init_params(self, in_shape: tuple, rng: np.random.Generator) -> None:
        pass

    def spec(self) -> str:
        raise NotImplementedError


def _he_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2D(Layer):
    """Valid cross-correlation with out_channels filters of size kh x kw."""

    def __init__(self, out_channels: int, kh: int, kw: int, stride: int = 1):
        if min(out_channels, kh, kw, stride) < 1:
            raise ValueError("conv dimensions must be positive")
        self.out_channels = out_channels
        self.kh, self.kw, self.stride = kh, kw, stride
        self.w = np.zeros((out_channels, 0, kh, kw))
        self.b = np.zeros(out_channels)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._cache = None

    def init_params(self, in_shape, rng):
        c_in = in_shape[0]
        fan_in = c_in * self.kh * self.kw
        self.w = _he_uniform(rng, (self.out_channels, c_in, self.kh, self.kw), fan_in)
        self.b = np.zeros(self.out_channels)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        oh = (h - self.kh) // self.stride + 1
        ow = (w - self.kw) // self.stride + 1
        if oh < 1 or ow < 1 or self.w.shape[1] != c:
            raise ShapeMismatchError(
                f"conv {self.spec()} cannot take input of shape {in_shape}"
            )
        return (self.out_channels, oh, ow)

    def forward(self, x):
        s = self.stride
        windows = sliding_window_view(x, (self.kh, self.kw), axis=(2, 3))[
            :, :, ::s, ::s, :, :
        ]
        b_, c, oh, ow = windows.shape[:4]
        # (B, oh*ow, C*kh*kw) columns, filters flattened to match
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b_, oh * ow, -1)
        wflat = self.w.reshape(self.out_channels, -1)
        out = cols @ wflat.T + self.b
        self._cache = (cols, x.shape, (oh, ow))
        return out.transpose(0, 2, 1).reshape(b_, self.out_channels, oh, ow)

    def backward(self, dout):
        cols, x_shape, (oh, ow) = self._cache
        b_ = x_shape[0]
        dflat = dout.reshape(b_, self.out_channels, oh * ow).transpose(0, 2, 1)
        wflat = self.w.reshape(self.out_channels, -1)
        self.gw += (
            np.tensordot(dflat, cols, axes=([0, 1], [0, 1]))
        ).reshape(self.w.shape)
        self.gb += dout.sum(axis=(0, 2, 3))
        dcols = (dflat @ wflat).reshape(b_, oh, ow, x_shape[1], self.kh, self.kw)
        dx = np.zeros(x_shape)
        s = self.stride
        for i in range(self.kh):
            for j in range(self.kw):
                dx[:, :, i : i + s * (oh - 1) + 1 : s, j : j + s * (ow - 1) + 1 : s] += (
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        return dx

    def params(self):
        return [("w", self.w, self.gw), ("b", self.b, self.gb)]

    def spec(self):
        base = f"conv:{self.out_channels},{self.kh},{self.kw}"
        return base if self.stride == 1 else base + f",{self.stride}"


class MaxPool2D(Layer):
    """Max pooling; each window routes its gradient to one input position."""

    def __init__(self, size: int, stride: int | None = None):
        if size < 1:
            raise ValueError("pool size must be positive")
        self.size = size
        self.stride = size if stride is None else stride
        self._cache = None

    def out_shape(self, in_shape):
        c, h, w = in_shape
        oh = (h - self.size) // self.stride + 1
        ow = (w - self.size) // self.stride + 1
        if oh < 1 or ow < 1:
            raise ShapeMismatchError(f"pool {self.spec()} cannot take input {in_shape}")
        return (c, oh, ow)

    def forward(self, x):
        s, k = self.stride, self.size
        windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s, :, :]
        b_, c, oh, ow = windows.shape[:4]
        flat = windows.reshape(b_, c, oh, ow, k * k)
        arg = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        self._cache = (arg, x.shape, (oh, ow))
        return out

    def backward(self, dout):
        arg, x_shape, (oh, ow) = self._cache
        b_, c = x_shape[:2]
        dx = np.zeros(x_shape)
        rows = (np.arange(oh) * self.stride)[None, None, :, None] + arg // self.size
        cols = (np.arange(ow) * self.stride)[None, None, None, :] + arg % self.size
        bi = np.arange(b_)[:, None, None, None]
        ci = np.arange(c)[None, :, None, None]
        np.add.at(dx, (bi, ci, rows, cols), dout)
        return dx

    def spec(self):
        base = f"pool:{self.size}"
        return base if self.stride == self.size else base + f",{self.stride}"


class Dense(Layer):
    """Affine map on the flattened input."""

    def __init__(self, out_units: int):
        if out_units < 1:
            raise ValueError("out_units must be positive")
        self.out_units = out_units
        self.w = np.zeros((0, out_units))
        self.b = np.zeros(out_units)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._cache = None

    def init_params(self, in_shape, rng):
        fan_in = int(np.prod(in_shape))
        self.w = _he_uniform(rng, (fan_in, self.out_units), fan_in)
        self.b = np.zeros(self.out_units)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def out_shape(self, in_shape):
        if int(np.prod(in_shape)) != self.w.shape[0]:
            raise ShapeMismatchError(
                f"dense expects {self.w.shape[0]} inputs, got shape {in_shape}"
            )
        return (self.out_units,)

    def forward(self, x):
        xf = x.reshape(x.shape[0], -1)
        self._cache = (xf, x.shape)
        return xf @ self.w + self.b

    def backward(self, dout):
        xf, x_shape = self._cache
        self.gw += xf.T @ dout
        self.gb += dout.sum(axis=0)
        return (dout @ self.w.T).reshape(x_shape)

    def params(self):
        return [("w", self.w, self.gw), ("b", self.b, self.gb)]

    def spec(self):
        return f"dense:{self.out_units}"


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0.0)

    def spec(self):
        return "relu"


class Softmax(Layer):
    """Row-wise softmax over the class dimension (log-sum-exp stabilized)."""

    def forward(self, x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self._p = e / e.sum(axis=-1, keepdims=True)
        return self._p

    def backward(self, dout):
        p = self._p
        return p * (dout - np.sum(dout * p, axis=-1, keepdims=True))

    def spec(self):
        return "softmax"


class Residual(Layer):
    """Identity-shortcut block: output = inner(x) + x.

    The inner stack must preserve the input shape; with ``project`` set, a
    learned 1x1 convolution maps the shortcut onto the inner stack's channel
    count instead.
    """

    def __init__(self, inner: list[Layer], project: bool = False):
        if not inner:
            raise ValueError("residual block needs at least one inner layer")
        self.inner = inner
        self.project = project
        self.proj: Conv2D | None = None

    def init_params(self, in_shape, rng):
        shape = in_shape
        for layer in self.inner:
            layer.init_params(shape, rng)
            shape = layer.out_shape(shape)
        if self.project:
            if shape[1:] != in_shape[1:]:
                raise ShapeMismatchError(
                    f"projection shortcut only reconciles channels, "
                    f"got {in_shape} -> {shape}"
                )
            self.proj = Conv2D(shape[0], 1, 1)
            self.proj.init_params(in_shape, rng)
        elif shape != in_shape:
            raise ShapeMismatchError(
                f"residual inner stack maps {in_shape} -> {shape} with no projection"
            )

    def out_shape(self, in_shape):
        shape = in_shape
        for layer in self.inner:
            shape = layer.out_shape(shape)
        if self.proj is None and shape != in_shape:
            raise ShapeMismatchError(
                f"residual inner stack maps {in_shape} -> {shape} with no projection"
            )
        return shape

    def forward(self, x):
        out = x
        for layer in self.inner:
            out = layer.forward(out)
        shortcut = self.proj.forward(x) if self.proj is not None else x
        if out.shape != shortcut.shape:
            raise ShapeMismatchError(
                f"residual mapping shape {out.shape} != shortcut {shortcut.shape}"
            )
        return out + shortcut

    def backward(self, dout):
        dx = dout
        for layer in reversed(self.inner):
            dx = layer.backward(dx)
        dshort = self.proj.backward(dout) if self.proj is not None else dout
        return dx + dshort

    def params(self):
        out = []
        for i, layer in enumerate(self.inner):
            out.extend((f"inner{i}.{n}", v, g) for n, v, g in layer.params())
        if self.proj is not None:
            out.extend((f"proj.{n}", v, g) for n, v, g in self.proj.params())
        return out

    def spec(self):
        inner = "|".join(layer.spec() for layer in self.inner)
        return ("res+proj{%s}" if self.project else "res{%s}") % inner
