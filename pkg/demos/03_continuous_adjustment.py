"""Continuous model adjustment over a simulated annotation stream.

Compares the retrain / cum / inc strategies on one bundle schedule,
averaged over a few seeded runs, and exports a curve file.
"""

import tempfile
from pathlib import Path

from annokit.adjustment import (
    SyntheticConfig,
    generate_synthetic_corpus,
    holdout_split,
    run_setup,
    write_curve,
)
from annokit.tagger import TrainConfig

corpus = generate_synthetic_corpus(
    seed=7,
    config=SyntheticConfig(n_docs=100, min_doc_len=14, max_doc_len=26, vocab_size=200, signal=0.9),
)
pool, test_items = holdout_split(corpus, test_size=10, seed=7)
config = TrainConfig(max_epochs=10, patience=5, seed=0)

print(f"stream pool {len(pool)} docs, held-out test {len(test_items)} docs")
print("strategy   " + "  ".join(f"@{p:3d}" for p in (10, 30, 50, 70, 90)))
for strategy in ("retrain", "cum", "inc"):
    mean, _curves = run_setup(
        pool, test_items, strategy, bundle_size=20, runs=3, base_seed=7, config=config
    )
    f1s = "  ".join(f"{p.f1_mean:.3f}" for p in mean.points)
    times = ", ".join(f"{p.time_s_mean:.2f}s" for p in mean.points)
    print(f"{strategy:8s}  {f1s}   (times: {times})")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "curve_inc_b20.csv"
    mean, _ = run_setup(pool, test_items, "inc", 20, runs=3, base_seed=7, config=config)
    write_curve(path, mean)
    print(f"\nexported {path.name}:")
    print(path.read_text())
