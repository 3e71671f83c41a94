"""Dense ReLU networks in float64 with hand-written backprop and Adam.

Serialized layout (all integers unsigned 32-bit little-endian, reals
little-endian float64)::

    b"WGMLP\\0"            magic (6 bytes)
    version                 u32
    n_widths                u32
    widths[n_widths]        u32 each
    for each layer i:       W_i as (widths[i], widths[i+1]) row-major, then b_i
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointVersionError, CorruptCheckpointError, InputError

MLP_MAGIC = b"WGMLP\0"
MLP_VERSION = 1


class Mlp:
    """Fully connected network: ReLU on hidden layers, identity output.

    Inputs are row batches of shape ``(n, widths[0])``; a 1-D input is
    treated as a single row.
    """

    def __init__(self, widths, rng: np.random.Generator | None = None, zero: bool = False):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError(f"invalid layer widths {widths}")
        self.widths = widths
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        rng = rng if rng is not None else np.random.default_rng(0)
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            if zero:
                w = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                bound = 1.0 / np.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in serialization order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        net = Mlp.__new__(Mlp)
        net.widths = list(self.widths)
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def load_params_from(self, other: "Mlp") -> None:
        for dst, src in zip(self.params, other.params):
            dst[...] = src

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise InputError(f"expected input width {self.widths[0]}, got shape {x.shape}")
        return x

    def forward(self, x, return_cache: bool = False):
        """Output of shape ``(n, widths[-1])``; optionally the activations for ``backward``."""
        h = self._check_input(x)
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w
            z += b
            if i < last:
                np.maximum(z, 0.0, out=z)
            h = z
            acts.append(h)
        if return_cache:
            return h, acts
        return h

    __call__ = forward

    def backward(self, cache, grad_out, param_grads: bool = True):
        """Reverse-mode pass from d(loss)/d(output).

        ``cache`` is the activation list from ``forward(..., return_cache=True)``.
        Returns ``(grads, grad_input)`` where ``grads`` follows :attr:`params`
        order, or is ``None`` when ``param_grads`` is false.
        """
        g = np.asarray(grad_out, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        n_layers = len(self.weights)
        grads = [None] * (2 * n_layers) if param_grads else None
        for i in range(n_layers - 1, -1, -1):
            if i < n_layers - 1:
                # ReLU: post-activation > 0 iff pre-activation > 0
                g = g * (cache[i + 1] > 0.0)
            if param_grads:
                grads[2 * i] = cache[i].T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, g

    # -- serialization ---------------------------------------------------

    def to_bytes(self) -> bytes:
        head = MLP_MAGIC + struct.pack("<II", MLP_VERSION, len(self.widths))
        head += struct.pack(f"<{len(self.widths)}I", *self.widths)
        body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in self.params)
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Mlp":
        net, end = cls._read(memoryview(bytes(data)), 0)
        if end != len(data):
            raise CorruptCheckpointError(f"{len(data) - end} trailing bytes after network")
        return net

    @classmethod
    def _read(cls, buf: memoryview, offset: int) -> tuple["Mlp", int]:
        """Parse one network starting at ``offset``; returns it and the end offset."""

        def take(n):
            nonlocal offset
            if offset + n > len(buf):
                raise CorruptCheckpointError("network stream truncated")
            chunk = bytes(buf[offset : offset + n])
            offset += n
            return chunk

        if take(len(MLP_MAGIC)) != MLP_MAGIC:
            raise CorruptCheckpointError("bad network magic")
        version, n_widths = struct.unpack("<II", take(8))
        if version != MLP_VERSION:
            raise CheckpointVersionError(f"network format version {version}, expected {MLP_VERSION}")
        if not 2 <= n_widths <= 64:
            raise CorruptCheckpointError(f"implausible layer count {n_widths}")
        widths = list(struct.unpack(f"<{n_widths}I", take(4 * n_widths)))
        if any(w < 1 for w in widths):
            raise CorruptCheckpointError(f"invalid widths {widths}")
        net = cls.__new__(cls)
        net.widths = widths
        net.weights, net.biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            w = np.frombuffer(take(8 * fan_in * fan_out), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(take(8 * fan_out), dtype="<f8")
            net.weights.append(w.astype(np.float64))
            net.biases.append(b.astype(np.float64))
        return net, offset


def serialize(net: Mlp) -> bytes:
    return net.to_bytes()


def deserialize(data: bytes) -> Mlp:
    return Mlp.from_bytes(data)


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr: float = 1e-4, **kw) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kw,
        )


def adam_step(params, grads, state: AdamState) -> None:
    """Bias-corrected Adam update, in place on ``params`` and ``state``."""
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    step_size = state.lr / c1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step_size * m / (np.sqrt(v / c2) + state.eps)
