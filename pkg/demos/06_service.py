"""The recommender service end to end, over real HTTP on localhost.

Starts the service with a trained model and an inc-adjustment config,
then walks the predict -> feedback -> adjust -> status loop the way an
annotation platform would drive it.
"""

import json
import threading
import urllib.request

from annokit import ModelRegistry, RegisteredModel, train
from annokit.adjustment import SyntheticConfig, generate_synthetic_corpus
from annokit.corpus import gold_items
from annokit.service import AdjustmentSettings, ServiceState, make_server
from annokit.tagger import TrainConfig

corpus = generate_synthetic_corpus(
    seed=12,
    config=SyntheticConfig(n_docs=40, min_doc_len=12, max_doc_len=20, vocab_size=100, signal=0.9),
)
items = gold_items(corpus)
model = train(items[:10], TrainConfig(max_epochs=6, seed=1))

state = ServiceState(
    registry=ModelRegistry(universal=RegisteredModel(model, "univ-v0")),
    documents=dict(corpus.documents),
    train_config=TrainConfig(max_epochs=6, patience=3, seed=1),
    settings=AdjustmentSettings(strategy="inc", bundle_size=5),
    dev_items=items[:10],
)
server = make_server(state, "127.0.0.1", 0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"service listening on {base}")


def call(path, payload=None):
    if payload is None:
        with urllib.request.urlopen(f"{base}{path}") as resp:
            return json.loads(resp.read())
    data = json.dumps(payload).encode()
    with urllib.request.urlopen(urllib.request.Request(f"{base}{path}", data=data)) as resp:
        return json.loads(resp.read())


doc_ids = sorted(corpus.gold)[10:]
doc = corpus.documents[doc_ids[0]]
predicted = call("/predict", {"annotator_id": "a1", "tokens": list(doc.tokens), "doc_id": doc.id})
print(f"\npredict: version {predicted['model_version']}, "
      f"{len(predicted['suggestions'])} suggestion(s) from {predicted['model_id']}")

# the annotator finalizes five documents; the fifth fills the bundle
for doc_id in doc_ids[:5]:
    ack = call("/feedback", {
        "annotator_id": "a1",
        "doc_id": doc_id,
        "annotations": [
            {"begin": s.begin, "end": s.end, "category": s.category}
            for s in corpus.gold[doc_id].spans
        ],
    })
print(f"feedback buffer: {ack['buffer_size']} document(s)")

adjusted = call("/adjust", {"trigger": "automatic"})
print(f"adjust: new version {adjusted['version']}, report {adjusted['report']}")

status = call("/status")
print(f"status: {status}")

again = call("/predict", {"annotator_id": "a1", "tokens": list(doc.tokens), "doc_id": doc.id})
print(f"\npredict again: served by version {again['model_version']}")

server.shutdown()
server.server_close()
