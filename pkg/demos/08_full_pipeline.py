"""The whole system in one call: data, shards, training, codes, cut, scores.

Runs the shipped desk-scale configuration in simulation mode. Results at
this scale are strongly seed-dependent: short codes trained for few rounds
sometimes collide across clusters, and the cut quality swings with them.
The shipped seed is one where the run lands cleanly.
"""

import json
from pathlib import Path

from hashclust import run_pipeline
from hashclust.pipeline import config_from_file

config_path = Path(__file__).resolve().parent.parent / "configs" / "default.json"
cfg = config_from_file(config_path)
print(f"config: {cfg.name} (seed {cfg.seed}, {cfg.sites} sites, "
      f"{cfg.rounds} rounds, {cfg.code_length}-bit codes)")

results = run_pipeline(cfg)

print(f"\npurity {results['purity']:.4f}   nmi {results['nmi']:.4f}")
print(f"codebook: {results['codebook_size']} distinct codes "
      f"for {results['n_samples']} samples")
print(f"cluster sizes: {results['cluster_sizes']}")
print(f"final relative error ratio: {results['rer_series'][-1]:.4f}")

ledger = results["ledger"]
print("\nledger:")
print(json.dumps(ledger, indent=2))
print(f"total {ledger['total_bits'] / (8 * 2 ** 20):.3f} MB "
      f"(bound {ledger['upper_bound_bits'] / (8 * 2 ** 20):.3f} MB)")

slowest = max(results["timings"], key=results["timings"].get)
print(f"\nslowest phase: {slowest} ({results['timings'][slowest]:.2f}s)")
