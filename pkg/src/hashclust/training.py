"""Global/sub-site training loop.

Each round the coordinator broadcasts the current parameters, every site
computes a gradient on a greedily-selected local batch, and the coordinator
applies the averaged gradient. Rounds are a strict barrier; the per-round
bit cost (gradients up, parameters down, 32 bits per value) is recorded as
it happens.

Gradients and merged parameters are rounded to the float32 grid at the
transfer boundaries, matching the wire format, so simulated and networked
runs produce bit-identical trajectories.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHistoryWarning, InsufficientBatchError, InvalidSpecError, ShapeError
from .loss import LossConfig, batch_loss
from .network import NetworkParams, as_float32_grid, backward, forward, init_network, param_count
from .sampling import build_buckets, select_batch


@dataclass(frozen=True)
class TrainingConfig:
    n_rounds: int
    n_sites: int
    batch_size: int
    learning_rate: float
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 0:
            raise InvalidSpecError("n_rounds must be >= 0")
        if self.n_sites < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise InvalidSpecError("n_sites, batch_size, learning_rate must be positive")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    mean_loss: float
    site_losses: tuple
    bits: int


@dataclass
class TrainingHistory:
    records: list = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.mean_loss for r in self.records])

    @property
    def min_loss(self) -> float:
        return float(self.losses.min())

    @property
    def max_loss(self) -> float:
        return float(self.losses.max())

    @property
    def total_bits(self) -> int:
        return sum(r.bits for r in self.records)


def derive_round_seed(base_seed: int, round_index: int) -> int:
    """Batch-selection seed for one round, shared by every site.

    Sharing the seed across sites keeps the M-identical-shards case exactly
    equivalent to single-site training; sites with different shards still
    select different batches.
    """
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(round_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def local_round(shard, params: NetworkParams, cfg: TrainingConfig, round_index: int = 0):
    """One site's work for one round: select a batch, return (gradient, mean loss)."""
    x = np.atleast_2d(np.asarray(getattr(shard, "normalized", shard), dtype=np.float64))
    if x.shape[0] < 2:
        raise InsufficientBatchError("a shard needs at least 2 samples to form a pair")
    buckets = build_buckets(params, x)
    idx = select_batch(buckets, cfg.batch_size, derive_round_seed(cfg.seed, round_index))
    bx = x[idx]
    h, trace = forward(params, bx)
    loss, grad_h = batch_loss(bx, h, cfg.loss)
    return backward(params, trace, grad_h), loss


def global_merge(params: NetworkParams, grads, learning_rate: float) -> NetworkParams:
    """Apply the average of the site gradients: new = old - lr * mean(grads).

    Incoming gradients are rounded to the float32 grid (they arrive as
    float32 on the wire) and summed in ascending site order; the result is
    rounded the same way, since it is what gets broadcast.
    """
    grads = list(grads)
    if not grads:
        raise ShapeError("no gradients to merge")
    n = param_count(params)
    total = np.zeros(n)
    for i, g in enumerate(grads):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (n,):
            raise ShapeError(f"gradient {i} has shape {g.shape}, expected ({n},)")
        total += as_float32_grid(g)
    new_values = as_float32_grid(params.values - learning_rate * (total / len(grads)))
    return NetworkParams(params.layers, new_values, params.seed)


def train(shards, spec, cfg: TrainingConfig):
    """Run the full protocol for cfg.n_rounds; returns (params, history).

    ``shards`` must have exactly cfg.n_sites entries. Deterministic for fixed
    seeds; with n_rounds == 0 the initial parameters come back untouched.
    """
    shards = list(shards)
    if len(shards) != cfg.n_sites:
        raise InvalidSpecError(
            f"config says {cfg.n_sites} sites but {len(shards)} shards supplied"
        )
    params = init_network(spec, cfg.seed)
    n = param_count(params)
    history = TrainingHistory()
    for r in range(cfg.n_rounds):
        grads, losses = [], []
        for shard in shards:
            g, l = local_round(shard, params, cfg, round_index=r)
            grads.append(g)
            losses.append(l)
        params = global_merge(params, grads, cfg.learning_rate)
        history.records.append(
            RoundRecord(
                round_index=r,
                mean_loss=float(np.mean(losses)),
                site_losses=tuple(losses),
                bits=2 * cfg.n_sites * 32 * n,
            )
        )
    return params, history


def relative_error_ratio(history: TrainingHistory) -> np.ndarray:
    """Min-max normalized loss per round: (loss - min) / (max - min).

    A constant history is degenerate; it yields all zeros and a
    DegenerateHistoryWarning.
    """
    if not history.records:
        raise ShapeError("history is empty")
    losses = history.losses
    lo, hi = losses.min(), losses.max()
    if hi == lo:
        warnings.warn(
            "all rounds have identical loss; RER is identically zero",
            DegenerateHistoryWarning,
        )
        return np.zeros_like(losses)
    return (losses - lo) / (hi - lo)
