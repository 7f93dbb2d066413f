"""The learnable hash function.

A small fully-connected network with ReLU hidden layers and a tanh output
head. During training the tanh head stands in for the sign function so that
gradients exist; at inference the outputs are thresholded to L-bit codes in
{-1,+1}^L.

Parameters live in a single flat vector (per layer: weights row-major, then
biases) so that whole-network gradients and wire transfers are a single
array. Values are kept on the float32 grid (stored as float64) because every
parameter transfer is accounted and serialized as 32-bit IEEE-754 reals;
keeping the in-memory state on that grid makes simulated and wire runs
bit-identical.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, ShapeError, StaleTraceError

ACTIVATIONS = ("relu", "tanh")
_ACT_TAG = {"relu": 0, "tanh": 1}
_TAG_ACT = {v: k for k, v in _ACT_TAG.items()}


@dataclass(frozen=True)
class LayerSpec:
    """One fully-connected layer: ``output = act(x @ W + b)``."""

    input_dim: int
    output_dim: int
    activation: str

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise InvalidSpecError(f"layer dims must be positive: {self}")
        if self.activation not in ACTIVATIONS:
            raise InvalidSpecError(f"unknown activation {self.activation!r}")

    @property
    def n_params(self) -> int:
        return self.input_dim * self.output_dim + self.output_dim


def mlp_spec(input_dim: int, hidden_dims, code_length: int) -> tuple[LayerSpec, ...]:
    """Reference architecture: ReLU hidden layers, tanh head of width ``code_length``."""
    dims = [input_dim, *hidden_dims]
    layers = [
        LayerSpec(dims[i], dims[i + 1], "relu") for i in range(len(dims) - 1)
    ]
    layers.append(LayerSpec(dims[-1], code_length, "tanh"))
    return tuple(layers)


def validate_spec(layers) -> tuple[LayerSpec, ...]:
    """Check the dimension chain and the tanh head; return the spec as a tuple."""
    layers = tuple(layers)
    if not layers:
        raise InvalidSpecError("layer list is empty")
    for a, b in zip(layers, layers[1:]):
        if a.output_dim != b.input_dim:
            raise InvalidSpecError(
                f"dimension chain broken: {a.output_dim} -> {b.input_dim}"
            )
    if layers[-1].activation != "tanh":
        raise InvalidSpecError("final layer must use tanh")
    return layers


@dataclass
class NetworkParams:
    """Layer shapes plus one flat value vector (weights then biases per layer)."""

    layers: tuple[LayerSpec, ...]
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.layers = validate_spec(self.layers)
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = sum(l.n_params for l in self.layers)
        if self.values.shape != (expected,):
            raise ShapeError(
                f"values has length {self.values.shape}, expected ({expected},)"
            )

    @property
    def code_length(self) -> int:
        return self.layers[-1].output_dim

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    def digest(self) -> bytes:
        h = hashlib.sha256()
        for l in self.layers:
            h.update(struct.pack(">IIB", l.input_dim, l.output_dim, _ACT_TAG[l.activation]))
        h.update(self.values.tobytes())
        return h.digest()


def param_count(params) -> int:
    """Total number of scalar parameters, weights plus biases over all layers."""
    layers = getattr(params, "layers", params)
    layers = tuple(layers)
    if not layers:
        raise InvalidSpecError("layer list is empty")
    return sum(l.n_params for l in layers)


def as_float32_grid(values: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 and return as float64.

    Applied wherever a value crosses (or could cross) the wire, since the
    transfer format is float32.
    """
    return np.asarray(values, dtype=np.float64).astype(np.float32).astype(np.float64)


def init_network(spec, seed: int) -> NetworkParams:
    """Random initialization: per-layer uniform weights in +-1/sqrt(fan_in), zero biases.

    Deterministic for a fixed seed. The scale keeps the tanh head away from
    saturation at the start of training.
    """
    layers = validate_spec(spec)
    rng = np.random.default_rng(seed)
    chunks = []
    for l in layers:
        bound = 1.0 / np.sqrt(l.input_dim)
        chunks.append(rng.uniform(-bound, bound, size=l.input_dim * l.output_dim))
        chunks.append(np.zeros(l.output_dim))
    values = as_float32_grid(np.concatenate(chunks))
    return NetworkParams(layers=layers, values=values, seed=seed)


def _split(params: NetworkParams):
    """Yield (W, b) views of the flat value vector, one pair per layer."""
    off = 0
    for l in params.layers:
        w = params.values[off : off + l.input_dim * l.output_dim]
        off += l.input_dim * l.output_dim
        b = params.values[off : off + l.output_dim]
        off += l.output_dim
        yield w.reshape(l.input_dim, l.output_dim), b


@dataclass
class ForwardTrace:
    """Intermediates of one forward pass, kept for backpropagation.

    ``inputs`` is the batch fed to layer 0; ``pre_acts[i]`` and ``acts[i]``
    are layer i's pre-activation and activation. ``params_digest`` ties the
    trace to the exact parameters that produced it.
    """

    inputs: np.ndarray
    pre_acts: list = field(default_factory=list)
    acts: list = field(default_factory=list)
    params_digest: bytes = b""


def forward(params: NetworkParams, x) -> tuple[np.ndarray, ForwardTrace]:
    """Run the relaxed network on a batch.

    Parameters
    ----------
    x : array, shape (B, input_dim) or (input_dim,)
        Input batch; a single vector is treated as a batch of one.

    Returns
    -------
    h : array, shape (B, L)
        tanh outputs, every component in [-1, 1].
    trace : ForwardTrace
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.input_dim:
        raise ShapeError(
            f"input has dimension {x.shape[1]}, network expects {params.input_dim}"
        )
    trace = ForwardTrace(inputs=x, params_digest=params.digest())
    a = x
    for (w, b), spec in zip(_split(params), params.layers):
        z = a @ w + b
        a = np.maximum(z, 0.0) if spec.activation == "relu" else np.tanh(z)
        trace.pre_acts.append(z)
        trace.acts.append(a)
    return a, trace


def backward(params: NetworkParams, trace: ForwardTrace, grad_h) -> np.ndarray:
    """Vector-Jacobian product through the relaxed network.

    ``grad_h`` is the gradient of a scalar loss with respect to the network
    outputs ``h`` (batch contributions already scaled by the caller, e.g. a
    batch mean). Returns the gradient of that same scalar with respect to the
    flat parameter vector.

    Subgradient conventions: ReLU' at 0 is 0.
    """
    if trace.params_digest != params.digest():
        raise StaleTraceError("trace was produced by different parameters")
    grad_h = np.asarray(grad_h, dtype=np.float64)
    if grad_h.shape != trace.acts[-1].shape:
        raise ShapeError(
            f"grad_h has shape {grad_h.shape}, outputs have {trace.acts[-1].shape}"
        )
    grads = [None] * len(params.layers)
    g = grad_h
    weights = list(_split(params))
    for i in range(len(params.layers) - 1, -1, -1):
        spec = params.layers[i]
        z, a = trace.pre_acts[i], trace.acts[i]
        if spec.activation == "relu":
            dz = g * (z > 0.0)
        else:
            dz = g * (1.0 - a * a)
        a_prev = trace.inputs if i == 0 else trace.acts[i - 1]
        dw = a_prev.T @ dz
        db = dz.sum(axis=0)
        grads[i] = (dw, db)
        if i > 0:
            g = dz @ weights[i][0].T
    return np.concatenate([np.concatenate([dw.ravel(), db]) for dw, db in grads])


@dataclass(frozen=True)
class HashCode:
    """An L-bit code in {-1,+1}^L with a canonical packed byte form.

    Bit j of the packed form, MSB-first within each byte, is
    ``(bits[j] + 1) / 2``; padding bits in the last byte are zero.
    """

    packed: bytes
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ShapeError("code length must be >= 1")
        if len(self.packed) != (self.length + 7) // 8:
            raise ShapeError(
                f"packed length {len(self.packed)} does not match {self.length} bits"
            )
        pad = len(self.packed) * 8 - self.length
        if pad and (self.packed[-1] & ((1 << pad) - 1)):
            raise ShapeError("padding bits in packed code must be zero")

    @classmethod
    def from_bits(cls, bits) -> "HashCode":
        bits = np.asarray(bits)
        if bits.ndim != 1:
            raise ShapeError("bits must be a vector")
        if not np.all(np.abs(bits) == 1):
            raise ShapeError("every component must be exactly -1 or +1")
        packed = np.packbits((bits > 0).astype(np.uint8)).tobytes()
        return cls(packed=packed, length=bits.size)

    @property
    def bits(self) -> np.ndarray:
        raw = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8), count=self.length)
        return (raw.astype(np.int8) * 2 - 1)


def binarize(h) -> HashCode:
    """Threshold one relaxed output vector to a code; sign(0) maps to +1."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise ShapeError("binarize takes a single vector; see binarize_batch")
    return HashCode.from_bits(np.where(h >= 0.0, 1, -1).astype(np.int8))


def binarize_batch(h) -> np.ndarray:
    """Threshold a batch of outputs to a (B, L) array of +-1 (int8)."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    return np.where(h >= 0.0, 1, -1).astype(np.int8)


def pack_bits_batch(bits: np.ndarray) -> list[bytes]:
    """Packed byte form for each row of a (B, L) +-1 array."""
    packed = np.packbits((bits > 0).astype(np.uint8), axis=1)
    return [row.tobytes() for row in packed]


# Parameter wire format: 4-byte big-endian layer count, then per layer
# input_dim (4 bytes BE), output_dim (4 bytes BE), activation tag (1 byte),
# then all values as consecutive 32-bit IEEE-754 big-endian reals. The cost
# ledger counts the values section only (32 bits per parameter); the header
# is physical overhead.

def serialize_params(params: NetworkParams) -> bytes:
    parts = [struct.pack(">I", len(params.layers))]
    for l in params.layers:
        parts.append(struct.pack(">IIB", l.input_dim, l.output_dim, _ACT_TAG[l.activation]))
    parts.append(params.values.astype(">f4").tobytes())
    return b"".join(parts)


def serialize_values(params: NetworkParams, values) -> bytes:
    """Serialize an arbitrary flat vector (e.g. a gradient) with the layer header."""
    clone = NetworkParams(params.layers, np.asarray(values, dtype=np.float64), params.seed)
    return serialize_params(clone)


def deserialize_params(data: bytes) -> NetworkParams:
    if len(data) < 4:
        raise ShapeError("truncated parameter blob")
    (n_layers,) = struct.unpack(">I", data[:4])
    off = 4
    layers = []
    for _ in range(n_layers):
        if off + 9 > len(data):
            raise ShapeError("truncated layer header")
        in_dim, out_dim, tag = struct.unpack(">IIB", data[off : off + 9])
        off += 9
        if tag not in _TAG_ACT:
            raise ShapeError(f"unknown activation tag {tag}")
        layers.append(LayerSpec(in_dim, out_dim, _TAG_ACT[tag]))
    n = param_count(layers)
    if len(data) - off != 4 * n:
        raise ShapeError(
            f"value section has {len(data) - off} bytes, expected {4 * n}"
        )
    values = np.frombuffer(data, dtype=">f4", count=n, offset=off).astype(np.float64)
    return NetworkParams(layers=tuple(layers), values=values)


def param_payload_bits(params) -> int:
    """Bits the cost ledger charges for one parameter-vector transfer."""
    return 32 * param_count(params)
