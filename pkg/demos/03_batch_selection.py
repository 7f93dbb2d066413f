# Batch selection: hash the shard into buckets, then pick a batch that
# spreads across Hamming space instead of sampling rows blindly.

import numpy as np

from hashclust import build_buckets, init_network, mlp_spec, select_batch

rng = np.random.default_rng(4)
x = rng.uniform(0.0, 1.0, size=(200, 5))
params = init_network(mlp_spec(5, (5,), 6), seed=2)

buckets = build_buckets(params, x)
print(f"{x.shape[0]} samples fell into {len(buckets.sizes())} buckets")
print("bucket sizes:", buckets.sizes().tolist())

batch = select_batch(buckets, batch_size=8, seed=7)
print("\nselected rows:", batch.tolist())

# the greedy rule maximizes summed Hamming distance to what is already
# picked, so consecutive picks hop between far-apart buckets
codes = buckets.code_bits
row_code = {}
for b, members in enumerate(buckets.members):
    for m in members:
        row_code[int(m)] = codes[b]

picked = []
for row in batch:
    bits = row_code[int(row)]
    spread = sum(int(np.sum(bits != p)) for p in picked)
    label = "".join("1" if v > 0 else "0" for v in bits)
    print(f"  row {row:>3}  code {label}  summed distance to prior picks: {spread}")
    picked.append(bits)
