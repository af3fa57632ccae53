"""Network assembly, the architecture string grammar, and checkpoints.

An architecture is written as ``in:C,H,W|<layer>|<layer>|...`` with layers

    conv:OUT,KH,KW[,STRIDE]   valid cross-correlation
    pool:SIZE[,STRIDE]        max pooling (stride defaults to SIZE)
    dense:UNITS               affine map on the flattened input
    relu / softmax            activations
    res{...} res+proj{...}    residual block around a nested layer list

The same string doubles as the checkpoint descriptor, so a saved model can
be rebuilt without the code that defined it.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import LabelRangeError, RawFormatError, ShapeMismatchError
from .layers import Conv2D, Dense, Layer, MaxPool2D, ReLU, Residual, Softmax

SHNN_MAGIC = b"SHNN"
SHNN_VERSION = 1

PRESETS = ("paper-initial", "paper-best")


def _split_top(s: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "|" and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    parts.append(s[start:])
    return [p for p in parts if p]


def _parse_layer(token: str) -> Layer:
    token = token.strip()
    if token.startswith("res{") or token.startswith("res+proj{"):
        if not token.endswith("}"):
            raise ValueError(f"unbalanced residual block {token!r}")
        project = token.startswith("res+proj{")
        inner = token[token.index("{") + 1 : -1]
        return Residual([_parse_layer(t) for t in _split_top(inner)], project=project)
    name, _, args = token.partition(":")
    vals = [int(v) for v in args.split(",")] if args else []
    if name == "conv" and len(vals) in (3, 4):
        return Conv2D(*vals)
    if name == "pool" and len(vals) in (1, 2):
        return MaxPool2D(*vals)
    if name == "dense" and len(vals) == 1:
        return Dense(vals[0])
    if name == "relu" and not vals:
        return ReLU()
    if name == "softmax" and not vals:
        return Softmax()
    raise ValueError(f"cannot parse layer token {token!r}")


def parse_architecture(arch: str) -> tuple[tuple[int, int, int], list[Layer]]:
    """Split an architecture string into input shape and fresh layers."""
    tokens = _split_top(arch.strip())
    if not tokens or not tokens[0].startswith("in:"):
        raise ValueError("architecture must start with in:C,H,W")
    dims = [int(v) for v in tokens[0][3:].split(",")]
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"bad input shape in {tokens[0]!r}")
    return (dims[0], dims[1], dims[2]), [_parse_layer(t) for t in tokens[1:]]


def preset_architecture(name: str, input_shape: tuple[int, int, int], n_classes: int) -> str:
    """Architecture strings for the two named reference models.

    ``paper-initial``: two 5x5 conv + 2x2 max-pool stages, then a
    1000-unit dense layer and the classifier head.
    ``paper-best``: three conv stages of 32/128/128 filters, same head.
    """
    c, h, w = input_shape
    head = f"dense:1000|relu|dense:{n_classes}|softmax"
    if name == "paper-initial":
        body = "conv:16,5,5|relu|pool:2|conv:32,5,5|relu|pool:2"
    elif name == "paper-best":
        body = "conv:32,5,5|relu|pool:2|conv:128,5,5|relu|pool:2|conv:128,5,5|relu|pool:2"
    else:
        raise ValueError(f"unknown preset {name!r}; available: {PRESETS}")
    return f"in:{c},{h},{w}|{body}|{head}"


def stack_architecture(
    input_shape: tuple[int, int, int],
    n_classes: int,
    conv_channels: list[int],
    dense_units: list[int],
    kernel: int = 5,
    pool: int = 2,
) -> str:
    """Conv/pool stages followed by dense layers, for parameter sweeps."""
    c, h, w = input_shape
    parts = [f"in:{c},{h},{w}"]
    for oc in conv_channels:
        parts += [f"conv:{oc},{kernel},{kernel}", "relu", f"pool:{pool}"]
    for units in dense_units:
        parts += [f"dense:{units}", "relu"]
    parts += [f"dense:{n_classes}", "softmax"]
    return "|".join(parts)


class Network:
    """An ordered layer stack with its parameters and build seed."""

    def __init__(self, input_shape: tuple[int, int, int], layers: list[Layer], rng_seed: int = 0):
        self.input_shape = tuple(input_shape)
        self.layers = layers
        self.rng_seed = rng_seed
        shape = self.input_shape
        for layer in layers:
            shape = layer.out_shape(shape)
        self.output_shape = shape

    @property
    def n_classes(self) -> int:
        return int(np.prod(self.output_shape))

    def describe(self) -> str:
        c, h, w = self.input_shape
        return f"in:{c},{h},{w}|" + "|".join(layer.spec() for layer in self.layers)

    def params(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"layer{i}.{n}", v, g) for n, v, g in layer.params())
        return out

    def n_params(self) -> int:
        return sum(v.size for _, v, _ in self.params())

    def zero_grads(self) -> None:
        for _, _, g in self.params():
            g[...] = 0.0

    def _batched(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3:
            return x[None], True
        if x.ndim != 4:
            raise ShapeMismatchError(f"expected (B,C,H,W) or (C,H,W), got {x.shape}")
        return x, False

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for a batch (or single tensor)."""
        x, single = self._batched(x)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatchError(
                f"input shape {x.shape[1:]} does not match network {self.input_shape}"
            )
        for layer in self.layers:
            x = layer.forward(x)
        return x[0] if single else x

    def _logits(self, x: np.ndarray) -> np.ndarray:
        body = self.layers[:-1] if isinstance(self.layers[-1], Softmax) else self.layers
        for layer in body:
            x = layer.forward(x)
        return x

    def loss_and_backward(self, x: np.ndarray, labels: np.ndarray) -> float:
        """Mean cross-entropy over the batch; gradients accumulate in place.

        Call ``zero_grads()`` first unless gradient accumulation is wanted.
        """
        x, _ = self._batched(x)
        y = np.asarray(labels, dtype=np.int64).reshape(-1)
        if y.shape[0] != x.shape[0]:
            raise ShapeMismatchError("labels do not match batch size")
        k = self.n_classes
        if np.any((y < 0) | (y >= k)):
            raise LabelRangeError(f"labels must lie in 0..{k - 1}")
        logits = self._logits(x)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        n = x.shape[0]
        loss = float(-logp[np.arange(n), y].mean())
        dlogits = np.exp(logp)
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        body = self.layers[:-1] if isinstance(self.layers[-1], Softmax) else self.layers
        d = dlogits
        for layer in reversed(body):
            d = layer.backward(d)
        return loss

    def loss(self, x: np.ndarray, labels: np.ndarray) -> float:
        """Mean cross-entropy without touching gradients."""
        x, _ = self._batched(x)
        y = np.asarray(labels, dtype=np.int64).reshape(-1)
        logits = self._logits(x)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(x.shape[0]), y].mean())


def build_network(arch: str, seed: int = 0) -> Network:
    """Instantiate and He-initialize a network from its architecture string."""
    input_shape, layers = parse_architecture(arch)
    rng = np.random.default_rng(seed)
    shape = input_shape
    for layer in layers:
        layer.init_params(shape, rng)
        shape = layer.out_shape(shape)
    return Network(input_shape, layers, rng_seed=seed)


def predict(net: Network, img: np.ndarray) -> tuple[int, np.ndarray]:
    """Most probable class and the full probability vector.

    Ties break toward the lowest class index.
    """
    probs = net.forward(img)
    if probs.ndim != 1:
        raise ShapeMismatchError("predict takes a single tensor, not a batch")
    return int(np.argmax(probs)), probs


def gradient_check(
    net: Network,
    x: np.ndarray,
    labels: np.ndarray,
    eps: float = 1e-4,
    sample_fraction: float = 0.01,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    A random sample of parameter coordinates (at least 16, at most 256,
    targeting ``sample_fraction`` of the total) is perturbed by +-eps.
    Relative error is |a - n| / (|a| + |n| + 1e-12).
    """
    net.zero_grads()
    net.loss_and_backward(x, labels)
    entries = net.params()
    total = sum(v.size for _, v, _ in entries)
    n_check = min(total, max(16, int(sample_fraction * total)), 256)
    rng = np.random.default_rng(seed)
    flat_choice = rng.choice(total, size=n_check, replace=False)

    worst = 0.0
    offsets = np.cumsum([0] + [v.size for _, v, _ in entries])
    for flat in sorted(flat_choice):
        which = int(np.searchsorted(offsets, flat, side="right")) - 1
        _, value, grad = entries[which]
        idx = np.unravel_index(flat - offsets[which], value.shape)
        analytic = grad[idx]
        orig = value[idx]
        value[idx] = orig + eps
        lp = net.loss(x, labels)
        value[idx] = orig - eps
        lm = net.loss(x, labels)
        value[idx] = orig
        numeric = (lp - lm) / (2.0 * eps)
        rel = abs(analytic - numeric) / (abs(analytic) + abs(numeric) + 1e-12)
        worst = max(worst, rel)
    return worst


def save_checkpoint(net: Network, path: str | Path) -> None:
    """Write the SHNN checkpoint: magic, version, descriptor, float32 blobs."""
    desc = net.describe().encode("utf-8")
    chunks = [SHNN_MAGIC, struct.pack("<I", SHNN_VERSION), struct.pack("<I", len(desc)), desc]
    for _, value, _ in net.params():
        blob = np.ascontiguousarray(value, dtype="<f4").tobytes()
        chunks.append(struct.pack("<Q", value.size))
        chunks.append(blob)
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> Network:
    """Rebuild a network from an SHNN file."""
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != SHNN_MAGIC:
        raise RawFormatError(f"{path}: not an SHNN checkpoint")
    version, desc_len = struct.unpack("<II", blob[4:12])
    if version != SHNN_VERSION:
        raise RawFormatError(f"{path}: unsupported SHNN version {version}")
    desc = blob[12 : 12 + desc_len].decode("utf-8")
    net = build_network(desc, seed=0)
    offset = 12 + desc_len
    for name, value, _ in net.params():
        if offset + 8 > len(blob):
            raise RawFormatError(f"{path}: truncated before parameter {name}")
        (count,) = struct.unpack("<Q", blob[offset : offset + 8])
        offset += 8
        if count != value.size:
            raise RawFormatError(
                f"{path}: parameter {name} has {count} values, expected {value.size}"
            )
        if offset + 4 * count > len(blob):
            raise RawFormatError(f"{path}: truncated inside parameter {name}")
        data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        value[...] = data.reshape(value.shape).astype(np.float64)
        offset += 4 * count
    if offset != len(blob):
        raise RawFormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return net
