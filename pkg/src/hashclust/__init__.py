"""Distributed clustering over learned binary hash codes.

Sites train a shared hash network by exchanging gradients with a
coordinator, map their local data to short binary codes, and ship only the
deduplicated codes (with multiplicities) upstream; the coordinator clusters
the resulting code graph with a normalized-cut spectral method. Every bit
that crosses a site boundary is accounted.
"""

from .codebook import Codebook, CodebookEntry, encode_shard, merge_codebooks
from .datasets import (
    ClusterSpec,
    DatasetSpec,
    Shard,
    gen_cluster,
    gen_dataset,
    load_csv,
    make_dataset_spec,
    save_csv,
    shard_dataset,
)
from .errors import HashClustError
from .loss import LossConfig, batch_loss, pair_loss_discrete, pair_loss_grad, pair_loss_relaxed
from .metrics import CostLedger, nmi, purity, total_cost_bits, training_cost_bits
from .network import (
    HashCode,
    LayerSpec,
    NetworkParams,
    binarize,
    binarize_batch,
    forward,
    backward,
    init_network,
    mlp_spec,
    param_count,
)
from .pipeline import PipelineConfig, config_from_file, run_generate, run_pipeline, run_report
from .sampling import build_buckets, select_batch
from .spectral import (
    CodeGraph,
    brute_force_ncut,
    build_graph,
    hamming,
    ncut_value,
    propagate_labels,
    spectral_cluster,
)
from .training import (
    TrainingConfig,
    TrainingHistory,
    global_merge,
    local_round,
    relative_error_ratio,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "CodebookEntry",
    "ClusterSpec",
    "CodeGraph",
    "CostLedger",
    "DatasetSpec",
    "HashClustError",
    "HashCode",
    "LayerSpec",
    "LossConfig",
    "NetworkParams",
    "PipelineConfig",
    "Shard",
    "TrainingConfig",
    "TrainingHistory",
    "backward",
    "batch_loss",
    "binarize",
    "binarize_batch",
    "brute_force_ncut",
    "build_buckets",
    "build_graph",
    "config_from_file",
    "encode_shard",
    "forward",
    "gen_cluster",
    "gen_dataset",
    "global_merge",
    "hamming",
    "init_network",
    "load_csv",
    "local_round",
    "make_dataset_spec",
    "merge_codebooks",
    "mlp_spec",
    "ncut_value",
    "nmi",
    "pair_loss_discrete",
    "pair_loss_grad",
    "pair_loss_relaxed",
    "param_count",
    "propagate_labels",
    "purity",
    "relative_error_ratio",
    "run_generate",
    "run_pipeline",
    "run_report",
    "save_csv",
    "select_batch",
    "shard_dataset",
    "spectral_cluster",
    "total_cost_bits",
    "train",
    "training_cost_bits",
]
