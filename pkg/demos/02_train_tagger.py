"""Train the CRF suggestion model on a synthetic corpus and evaluate it.

Shows the training history (loss and dev macro-F1 per epoch), span
predictions on a held-out document, and model serialization.
"""

import tempfile
from pathlib import Path

from annokit import bio_decode, load_model, predict_spans, save_model, train
from annokit.adjustment import SyntheticConfig, generate_synthetic_corpus
from annokit.corpus import gold_items
from annokit.tagger import TrainConfig, evaluate_macro_f1

corpus = generate_synthetic_corpus(
    seed=42,
    config=SyntheticConfig(n_docs=80, min_doc_len=14, max_doc_len=26, vocab_size=150, signal=0.9),
)
items = gold_items(corpus)
train_items, test_items = items[:60], items[60:]

model = train(train_items, TrainConfig(max_epochs=20, patience=5, seed=1))
print("epoch  train_loss  dev_macro_f1")
for record in model.history:
    print(f"{record.epoch:5d}  {record.train_loss:10.4f}  {record.dev_f1:.4f}")

predicted = {doc.id: predict_spans(model, doc) for doc, _ in test_items}
gold = {doc.id: bio_decode(labels) for doc, labels in test_items}
report = evaluate_macro_f1(predicted, gold)
print(f"\nheld-out span macro-F1: {report.macro_f1:.4f}")
for category, score in report.per_category.items():
    print(f"  {category}: P {score.precision:.3f}  R {score.recall:.3f}  F1 {score.f1:.3f}")

doc, labels = test_items[0]
print(f"\nsample document {doc.id}: {' '.join(doc.tokens[:12])} ...")
print("gold:", bio_decode(labels))
print("pred:", predict_spans(model, doc))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.json"
    save_model(model, path)
    reloaded = load_model(path)
    assert predict_spans(reloaded, doc) == predict_spans(model, doc)
    print(f"\nmodel round-trips through {path.name} "
          f"({len(model.vocab)} features, {len(model.labels)} labels)")
