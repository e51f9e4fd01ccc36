"""Suggestion lifecycle and simulated-annotator replay.

Trains a weak model, generates suggestions for unseen documents, replays
an annotator who accepts only exact matches, and contrasts the stricter
and looser acceptance policies.
"""

from annokit import (
    AnnotatorPolicy,
    ModelRegistry,
    RegisteredModel,
    SuggestionStore,
    generate_suggestions,
    session_stats,
    simulate_annotator,
    train,
)
from annokit.adjustment import SyntheticConfig, generate_synthetic_corpus
from annokit.corpus import gold_items
from annokit.tagger import TrainConfig

corpus = generate_synthetic_corpus(
    seed=3,
    config=SyntheticConfig(n_docs=60, min_doc_len=12, max_doc_len=22, vocab_size=120, signal=0.9),
)
items = gold_items(corpus)
model = train(items[:25], TrainConfig(max_epochs=10, seed=2))
registry = ModelRegistry(universal=RegisteredModel(model, "univ-v1"))

# manual lifecycle on one document
doc_id = sorted(corpus.gold)[30]
doc = corpus.documents[doc_id]
store = SuggestionStore()
suggestions = generate_suggestions(registry, "a1", doc)
store.add_suggestions(suggestions)
print(f"{len(suggestions)} suggestions for {doc_id} "
      f"(decoder margin {suggestions[0].score:.2f})" if suggestions else "no suggestions")
for s in suggestions[:2]:
    store.apply_decision(s.id, "accept" if s.span in corpus.gold[doc_id].spans else "reject")
print("decision log:", [(r["decision"], r["begin"], r["end"]) for r in store.export_log()])

# replay a whole session under both policies
for policy in (AnnotatorPolicy("exact"), AnnotatorPolicy("overlap", 0.5)):
    decisions = []
    for doc_id in sorted(corpus.gold)[25:]:
        doc = corpus.documents[doc_id]
        decided, final = simulate_annotator(
            corpus.gold[doc_id], generate_suggestions(registry, "a1", doc), policy
        )
        decisions.extend(decided)
        if policy.mode == "exact":
            assert set(final.spans) == set(corpus.gold[doc_id].spans)
    stats = session_stats(decisions, corpus.gold)
    name = policy.mode if policy.mode == "exact" else f"overlap({policy.theta})"
    print(f"\npolicy {name}:")
    print(f"  acceptance rate        : {stats.acceptance.rate:.3f} "
          f"({stats.acceptance.n_accepted} of "
          f"{stats.acceptance.n_accepted + stats.acceptance.n_rejected} decided)")
    print(f"  boundary-only rejections: {stats.boundary_only_mismatches}")
    print(f"  by category            : {stats.by_category}")
