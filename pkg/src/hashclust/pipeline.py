"""End-to-end runs: config in, results out.

A run goes dataset -> shards -> federated training -> per-site codebooks ->
merge -> code graph -> spectral partition -> label propagation -> metrics,
with wall-clock timing per phase and a transmission-cost ledger. Simulation
mode keeps everything in-process; wire mode moves the training and code
traffic over TCP (loopback threads by default, or real endpoints via the
listen/connect settings) and additionally reports measured bits.

Config files are JSON; every field of PipelineConfig can be set there, and
a handful of command-line flags override. A run directory written with
``out`` is self-describing: the config echo plus recorded seeds reproduce
the run bit for bit.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .codebook import encode_shard, merge_codebooks
from .datasets import gen_dataset, load_csv, make_dataset_spec, shard_dataset
from .errors import HashClustError, InconsistentStateError, InvalidSpecError, PipelineError
from .loss import LossConfig
from .metrics import nmi, purity, total_cost_bits
from .network import mlp_spec, param_count
from .spectral import build_graph, propagate_labels, spectral_cluster
from .training import TrainingConfig, relative_error_ratio, train
from .wire import open_listeners, parse_endpoint, run_sub_site, run_wire_locally, serve_global

# fixed spawn keys so each phase draws from an independent stream
_SEED_STREAMS = {"data": 0, "shard": 1, "train": 2, "cluster": 3}


def derive_seed(master: int, stream: str) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(_SEED_STREAMS[stream],))
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs; mirrors the JSON config schema."""

    name: str
    generate: dict | None
    csv: str | None
    hidden_dims: tuple | None
    code_length: int
    clusters: int
    sites: int
    min_per_site: int
    rounds: int
    batch_size: int
    learning_rate: float
    distance_scale: float
    temperature: float
    mode: str
    seed: int
    out: str | None
    listen: str | None
    connect: str | None
    site: int | None
    timeout: float

    def __post_init__(self):
        if (self.generate is None) == (self.csv is None):
            raise InvalidSpecError("dataset must be exactly one of 'generate' or 'csv'")
        if self.mode not in ("sim", "wire"):
            raise InvalidSpecError(f"mode must be 'sim' or 'wire', got {self.mode!r}")
        if self.clusters < 1 or self.code_length < 1:
            raise InvalidSpecError("clusters and code_length must be >= 1")
        if self.site is not None and self.connect is None:
            raise InvalidSpecError("'site' only makes sense together with 'connect'")

    def to_dict(self) -> dict:
        return asdict(self)


_GENERATE_KEYS = {"n_clusters", "ambient_dim", "embed_dim", "samples_per_cluster"}
_TRAINING_KEYS = {"rounds", "batch_size", "learning_rate", "distance_scale", "temperature"}
_WIRE_KEYS = {"listen", "connect", "site", "timeout"}
_TOP_KEYS = {
    "name", "dataset", "network", "code_length", "clusters", "sites",
    "min_per_site", "training", "mode", "seed", "out", "wire",
}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise InvalidSpecError(f"unknown {where} keys: {sorted(unknown)}")


def config_from_dict(raw: dict) -> PipelineConfig:
    _reject_unknown(raw, _TOP_KEYS, "config")
    dataset = raw.get("dataset")
    if not isinstance(dataset, dict) or set(dataset) not in ({"generate"}, {"csv"}):
        raise InvalidSpecError("config needs dataset.generate {...} or dataset.csv <path>")
    generate = dataset.get("generate")
    if generate is not None:
        _reject_unknown(generate, _GENERATE_KEYS, "dataset.generate")
        missing = _GENERATE_KEYS - set(generate)
        if missing:
            raise InvalidSpecError(f"dataset.generate needs keys: {sorted(missing)}")
    training = raw.get("training", {})
    _reject_unknown(training, _TRAINING_KEYS, "training")
    network = raw.get("network", {})
    _reject_unknown(network, {"hidden_dims"}, "network")
    wire_cfg = raw.get("wire", {})
    _reject_unknown(wire_cfg, _WIRE_KEYS, "wire")
    hidden = network.get("hidden_dims")
    if "clusters" not in raw:
        raise InvalidSpecError("config needs 'clusters' (the number of output clusters)")
    name = raw.get("name")
    if name is None:
        name = "synthetic" if generate is not None else Path(dataset["csv"]).stem
    return PipelineConfig(
        name=name,
        generate=dict(generate) if generate is not None else None,
        csv=dataset.get("csv"),
        hidden_dims=tuple(hidden) if hidden is not None else None,
        code_length=int(raw.get("code_length", 8)),
        clusters=int(raw["clusters"]),
        sites=int(raw.get("sites", 1)),
        min_per_site=int(raw.get("min_per_site", 50)),
        rounds=int(training.get("rounds", 50)),
        batch_size=int(training.get("batch_size", 32)),
        learning_rate=float(training.get("learning_rate", 0.05)),
        distance_scale=float(training.get("distance_scale", 1.0)),
        temperature=float(training.get("temperature", 1.0)),
        mode=raw.get("mode", "sim"),
        seed=int(raw.get("seed", 0)),
        out=raw.get("out"),
        listen=wire_cfg.get("listen"),
        connect=wire_cfg.get("connect"),
        site=wire_cfg.get("site"),
        timeout=float(wire_cfg.get("timeout", 60.0)),
    )


def config_from_file(path) -> PipelineConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def apply_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Replace the given fields; None values mean "keep the config's"."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg


@contextmanager
def _phase(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except (HashClustError, OSError) as exc:
        raise PipelineError(f"{name}: {exc}") from exc
    finally:
        timings[name] = time.perf_counter() - start


def _load_dataset(cfg: PipelineConfig):
    if cfg.generate is not None:
        spec = make_dataset_spec(
            n_clusters=cfg.generate["n_clusters"],
            ambient_dim=cfg.generate["ambient_dim"],
            embed_dim=cfg.generate["embed_dim"],
            samples_per_cluster=cfg.generate["samples_per_cluster"],
            seed=derive_seed(cfg.seed, "data"),
        )
        samples, truth = gen_dataset(spec)
        return samples, truth, spec
    samples, truth = load_csv(cfg.csv)
    return samples, truth, None


def run_generate(cfg: PipelineConfig):
    """Write dataset.csv plus a manifest into the output directory."""
    if cfg.generate is None:
        raise PipelineError("generate: config has no dataset.generate section")
    if cfg.out is None:
        raise PipelineError("generate: config needs 'out' (or the --out flag)")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict = {}
    with _phase("dataset", timings):
        samples, truth, spec = _load_dataset(cfg)
    csv_path = out_dir / "dataset.csv"
    manifest_path = out_dir / "manifest.json"
    with _phase("write", timings):
        from .datasets import save_csv

        save_csv(csv_path, samples, truth)
        manifest = {
            "name": cfg.name,
            "generate": cfg.generate,
            "seed": cfg.seed,
            "data_seed": derive_seed(cfg.seed, "data"),
            "cluster_seeds": [c.seed for c in spec.clusters],
            "n_samples": int(samples.shape[0]),
            "n_features": int(samples.shape[1]),
            "csv": csv_path.name,
        }
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return csv_path, manifest_path


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute one full run and return (and optionally write) the results."""
    timings: dict = {}
    if cfg.mode == "wire" and cfg.site is not None:
        return _run_wire_site(cfg, timings)

    with _phase("dataset", timings):
        samples, truth, _spec = _load_dataset(cfg)
    n, dim = samples.shape
    with _phase("shard", timings):
        shards = shard_dataset(
            samples, truth, cfg.sites, cfg.min_per_site, derive_seed(cfg.seed, "shard")
        )
    hidden = cfg.hidden_dims if cfg.hidden_dims is not None else (dim, dim)
    net_spec = mlp_spec(dim, hidden, cfg.code_length)
    tcfg = TrainingConfig(
        n_rounds=cfg.rounds,
        n_sites=cfg.sites,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        loss=LossConfig(distance_scale=cfg.distance_scale, temperature=cfg.temperature),
        seed=derive_seed(cfg.seed, "train"),
    )

    meter = None
    wire_books = None
    with _phase("train", timings):
        if cfg.mode == "sim":
            params, history = train(shards, net_spec, tcfg)
        elif cfg.listen is not None:
            host, port = parse_endpoint(cfg.listen)
            listeners = open_listeners(host, port, cfg.sites)
            result = serve_global(listeners, net_spec, tcfg, timeout=cfg.timeout)
            params, history = result.params, result.history
            meter, wire_books = result.meter, result.site_books
        else:
            result = run_wire_locally(shards, net_spec, tcfg, timeout=cfg.timeout)
            params, history = result.params, result.history
            meter, wire_books = result.meter, result.site_books

    with _phase("encode", timings):
        site_maps = [encode_shard(params, s, origin=f"site{i}") for i, s in enumerate(shards)]
        # in wire mode the coordinator clusters what it actually received
        books = wire_books if wire_books is not None else [m[0] for m in site_maps]
    with _phase("merge", timings):
        merged = merge_codebooks(books)
        if merged.total_degree != n:
            raise InconsistentStateError(
                f"codebook degrees sum to {merged.total_degree}, dataset has {n}"
            )
        if len(merged) > min(2 ** cfg.code_length, n):
            raise InconsistentStateError(f"{len(merged)} codebook entries exceed the bound")
    with _phase("cluster", timings):
        graph = build_graph(merged)
        partition = spectral_cluster(graph, cfg.clusters, derive_seed(cfg.seed, "cluster"))
    with _phase("propagate", timings):
        per_site = propagate_labels(partition, merged, site_maps)
        pred = np.concatenate(per_site)
        truth_aligned = np.concatenate([s.labels for s in shards])

    with _phase("metrics", timings):
        ledger = total_cost_bits(
            n_sites=cfg.sites,
            n_params=param_count(net_spec),
            n_rounds=cfg.rounds,
            codes_per_site=[len(b) for b in books],
            code_length=cfg.code_length,
        )
        if history.records and history.total_bits != ledger.training_bits:
            raise InconsistentStateError("round records disagree with the cost formula")
        if meter is not None:
            ledger.measured_paper_bits = meter.paper_bits
            ledger.measured_physical_bits = meter.physical_bits
        rer = [] if not history.records else [float(v) for v in relative_error_ratio(history)]
        results = {
            "name": cfg.name,
            "mode": cfg.mode,
            "seed": cfg.seed,
            "n_samples": int(n),
            "n_features": int(dim),
            "sites": cfg.sites,
            "code_length": cfg.code_length,
            "clusters": cfg.clusters,
            "param_count": param_count(net_spec),
            "purity": purity(pred, truth_aligned),
            "nmi": nmi(pred, truth_aligned),
            "rer_series": rer,
            "ledger": ledger.as_dict(),
            "cluster_sizes": [int(v) for v in np.bincount(pred, minlength=cfg.clusters)],
            "codebook_size": len(merged),
            "timings": timings,
            "config": cfg.to_dict(),
        }

    if cfg.out is not None:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "results.json").write_text(json.dumps(results, indent=2) + "\n")
    return results


def _run_wire_site(cfg: PipelineConfig, timings: dict) -> dict:
    """Worker-side wire run: local shard only, no metrics."""
    with _phase("dataset", timings):
        samples, truth, _spec = _load_dataset(cfg)
    with _phase("shard", timings):
        shards = shard_dataset(
            samples, truth, cfg.sites, cfg.min_per_site, derive_seed(cfg.seed, "shard")
        )
    if not 0 <= cfg.site < cfg.sites:
        raise PipelineError(f"site: index {cfg.site} outside [0, {cfg.sites})")
    tcfg = TrainingConfig(
        n_rounds=cfg.rounds,
        n_sites=cfg.sites,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        loss=LossConfig(distance_scale=cfg.distance_scale, temperature=cfg.temperature),
        seed=derive_seed(cfg.seed, "train"),
    )
    host, base_port = parse_endpoint(cfg.connect)
    with _phase("train", timings):
        run_sub_site(host, base_port + cfg.site, shards[cfg.site], tcfg, timeout=cfg.timeout)
    return {"name": cfg.name, "mode": "wire", "role": "site", "site": cfg.site, "timings": timings}


def run_report(result_paths, out_path=None):
    """Tabulate runs: one row each, sorted by dataset name then seed.

    The cost column is megabytes, bits / (8 * 2**20). Returns the rows;
    writes CSV to out_path when given.
    """
    rows = []
    for path in result_paths:
        try:
            with open(path) as fh:
                res = json.load(fh)
            rows.append(
                {
                    "dataset": res["name"],
                    "seed": res["seed"],
                    "mode": res["mode"],
                    "purity": res["purity"],
                    "nmi": res["nmi"],
                    "total_bits": res["ledger"]["total_bits"],
                    "megabytes": res["ledger"]["total_bits"] / (8 * 2 ** 20),
                }
            )
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise PipelineError(f"report: {path}: {exc}") from exc
    rows.sort(key=lambda r: (r["dataset"], r["seed"]))
    if out_path is not None:
        header = ["dataset", "seed", "mode", "purity", "nmi", "total_bits", "megabytes"]
        lines = [",".join(header)]
        lines += [",".join(str(r[k]) for k in header) for r in rows]
        Path(out_path).write_text("\n".join(lines) + "\n")
    return rows
