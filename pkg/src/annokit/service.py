"""Recommender service: predict, feedback, adjust, status.

State machine: predict requests are answered from an atomic (version,
registry) snapshot, so a response never mixes model versions.  Finalized
annotation sets accumulate in a feedback buffer; an adjustment consumes
one bundle from the buffer head, retrains the universal model under the
configured strategy (cum or inc), and swaps the registry atomically,
incrementing the version exactly once.  At most one adjustment runs at a
time; concurrent triggers get a busy error.

Wire protocol (JSON bodies):

  POST /predict   {"annotator_id", "tokens": [...], "doc_id"?}
                  -> {"doc_id", "model_version", "model_id", "suggestions":
                      [{"id", "begin", "end", "category", "score"}]}
  POST /feedback  {"annotator_id", "doc_id",
                   "annotations": [{"begin", "end", "category", "source"?}],
                   "decisions"?: [{"suggestion_id", "decision"}]}
                  -> {"buffer_size": n}
  POST /adjust    {"trigger": "manual" | "automatic"}
                  -> {"version", "report"}
  GET  /status    -> {"version", "buffer_size", "last_report"}
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

from .adjustment import CUM, INC
from .corpus import (
    DEFAULT_CATEGORIES,
    AnnotationSet,
    Document,
    SpanAnnotation,
    bio_decode,
    bio_encode,
)
from .errors import (
    AnnokitError,
    BusyError,
    RequestError,
    ResolutionError,
    ServiceUnavailableError,
    ValidationError,
)
from .suggest import ModelRegistry, RegisteredModel, SuggestionStore, generate_suggestions
from .tagger import TrainConfig, evaluate_macro_f1, predict_spans, train


@dataclass(frozen=True)
class AdjustmentSettings:
    strategy: str = INC
    bundle_size: int = 30
    auto: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in (CUM, INC):
            raise ValidationError("the service adjusts with 'cum' or 'inc' only")
        if self.bundle_size < 1:
            raise ValidationError("bundle size must be >= 1")


class ServiceState:
    """In-process core of the service; the HTTP layer is a thin shell."""

    def __init__(
        self,
        registry: ModelRegistry | None = None,
        documents: dict[str, Document] | None = None,
        train_config: TrainConfig = TrainConfig(),
        settings: AdjustmentSettings = AdjustmentSettings(),
        categories: Sequence[str] = DEFAULT_CATEGORIES,
        dev_items: list[tuple[Document, list[str]]] | None = None,
    ) -> None:
        self._snapshot: tuple[int, ModelRegistry] = (0, registry or ModelRegistry())
        self._documents: dict[str, Document] = dict(documents or {})
        self._train_config = train_config
        self._settings = settings
        self._categories = tuple(categories)
        self._dev_items = dev_items or []
        self._buffer: list[AnnotationSet] = []
        self._trained_pool: list[tuple[Document, list[str]]] = []
        self._store = SuggestionStore()
        self._last_report: dict | None = None
        self._lock = threading.Lock()
        self._adjusting = threading.Lock()
        self._doc_counter = 0

    # -- predict ------------------------------------------------------------

    def handle_predict(self, request: dict) -> dict:
        tokens = request.get("tokens")
        annotator_id = request.get("annotator_id")
        if not isinstance(annotator_id, str) or not annotator_id:
            raise RequestError("predict needs an annotator_id")
        if not isinstance(tokens, list) or not tokens or not all(
            isinstance(t, str) and t for t in tokens
        ):
            raise RequestError("predict needs a non-empty token array")
        version, registry = self._snapshot  # one atomic snapshot per request
        if registry.universal is None and not registry.personalised:
            raise ServiceUnavailableError("no model registered yet")
        with self._lock:
            doc_id = request.get("doc_id")
            if doc_id is None:
                self._doc_counter += 1
                doc_id = f"adhoc{self._doc_counter:05d}"
            doc = self._documents.get(doc_id)
            if doc is None or tuple(doc.tokens) != tuple(tokens):
                doc = Document(str(doc_id), tuple(tokens))
                self._documents[doc.id] = doc
        try:
            suggestions = generate_suggestions(
                registry, annotator_id, doc, id_prefix=f"v{version}:"
            )
        except ResolutionError as exc:
            raise RequestError(str(exc)) from None
        with self._lock:
            for s in suggestions:
                self._store_suggestion_safe(s)
        model_id = suggestions[0].model_id if suggestions else registry.resolve(annotator_id).model_id
        return {
            "doc_id": doc.id,
            "model_version": version,
            "model_id": model_id,
            "suggestions": [
                {
                    "id": s.id,
                    "begin": s.span.begin,
                    "end": s.span.end,
                    "category": s.span.category,
                    "score": s.score,
                }
                for s in suggestions
            ],
        }

    def _store_suggestion_safe(self, suggestion):
        try:
            self._store.add_suggestions([suggestion])
            return suggestion
        except ValidationError:
            return None  # re-predicted document, same version: keep first record

    # -- feedback -----------------------------------------------------------

    def handle_feedback(self, request: dict) -> dict:
        annotator_id = request.get("annotator_id")
        doc_id = request.get("doc_id")
        if not isinstance(annotator_id, str) or not annotator_id:
            raise RequestError("feedback needs an annotator_id")
        if not isinstance(doc_id, str):
            raise RequestError("feedback needs a doc_id")
        with self._lock:
            doc = self._documents.get(doc_id)
        if doc is None:
            raise RequestError(f"unknown document {doc_id!r}")
        spans = []
        sources = []
        for obj in request.get("annotations", []):
            try:
                span = SpanAnnotation(int(obj["begin"]), int(obj["end"]), str(obj["category"]))
            except (KeyError, TypeError, ValueError, ValidationError) as exc:
                raise RequestError(f"malformed span record: {exc}") from None
            if span.end > len(doc):
                raise RequestError(f"span {span} out of bounds for document {doc_id!r}")
            if span.category not in self._categories:
                raise RequestError(f"unknown category {span.category!r}")
            spans.append(span)
            sources.append(str(obj.get("source", "manual")))
        try:
            aset = AnnotationSet(annotator_id, doc_id, tuple(spans), tuple(sources))
        except ValidationError as exc:
            raise RequestError(str(exc)) from None
        for decision in request.get("decisions", []):
            try:
                self._store.apply_decision(
                    str(decision["suggestion_id"]), str(decision["decision"])
                )
            except (KeyError, AnnokitError) as exc:
                raise RequestError(f"bad decision record: {exc}") from None
        with self._lock:
            self._buffer.append(aset)
            size = len(self._buffer)
        if self._settings.auto:
            while True:
                with self._lock:
                    if len(self._buffer) < self._settings.bundle_size:
                        break
                self.handle_adjust("automatic")
        return {"buffer_size": size}

    # -- adjust -------------------------------------------------------------

    def handle_adjust(self, trigger: str = "manual") -> dict:
        if trigger not in ("manual", "automatic"):
            raise RequestError(f"unknown trigger {trigger!r}")
        if not self._adjusting.acquire(blocking=False):
            raise BusyError("an adjustment is already running")
        try:
            with self._lock:
                available = len(self._buffer)
                if trigger == "automatic" and available < self._settings.bundle_size:
                    raise RequestError(
                        f"buffer holds {available} < bundle size {self._settings.bundle_size}"
                    )
                if available == 0:
                    raise RequestError("feedback buffer is empty")
                take = min(self._settings.bundle_size, available)
                bundle = self._buffer[:take]
                del self._buffer[:take]
                items = [
                    (
                        self._documents[s.doc_id],
                        bio_encode(len(self._documents[s.doc_id]), s.spans),
                    )
                    for s in bundle
                ]
                self._trained_pool.extend(items)
                train_items = (
                    list(self._trained_pool) if self._settings.strategy == CUM else items
                )
            version, registry = self._snapshot
            current = registry.universal.model if registry.universal else None
            started = time.perf_counter()
            model = train(
                train_items,
                self._train_config,
                initial=current,
                categories=self._categories,
            )
            elapsed = time.perf_counter() - started
            new_version = version + 1
            new_registry = ModelRegistry(
                universal=RegisteredModel(model, f"univ-v{new_version}"),
                personalised=dict(registry.personalised),
                use_personalised=registry.use_personalised,
                require_personalised=registry.require_personalised,
            )
            report = {
                "strategy": self._settings.strategy,
                "bundle_docs": take,
                "texts_seen": len(self._trained_pool),
                "time_s": elapsed,
                "epochs": len(model.history),
                "f1_dev": self._dev_f1(model),
            }
            self._snapshot = (new_version, new_registry)  # atomic swap
            self._last_report = report
            return {"version": new_version, "report": report}
        finally:
            self._adjusting.release()

    def _dev_f1(self, model) -> float | None:
        if not self._dev_items:
            return None
        predicted = {doc.id: predict_spans(model, doc) for doc, _ in self._dev_items}
        gold = {doc.id: bio_decode(labels) for doc, labels in self._dev_items}
        return evaluate_macro_f1(predicted, gold, self._categories).macro_f1

    # -- status -------------------------------------------------------------

    def handle_status(self) -> dict:
        version, _registry = self._snapshot
        with self._lock:
            size = len(self._buffer)
        return {
            "version": version,
            "buffer_size": size,
            "last_report": self._last_report,
        }

    @property
    def version(self) -> int:
        return self._snapshot[0]

    @property
    def decision_log(self) -> list[dict]:
        return self._store.export_log()


# ---------------------------------------------------------------------------
# HTTP shell
# ---------------------------------------------------------------------------

_STATUS_FOR = {
    RequestError: 400,
    ValidationError: 400,
    ResolutionError: 400,
    BusyError: 409,
    ServiceUnavailableError: 503,
}


def make_server(state: ServiceState, host: str = "127.0.0.1", port: int = 8040) -> ThreadingHTTPServer:
    """Bind the wire protocol to a threading HTTP server."""

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _reply(self, code: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _dispatch(self, fn, request: dict) -> None:
            try:
                self._reply(200, fn(request))
            except AnnokitError as exc:
                code = next(
                    (c for t, c in _STATUS_FOR.items() if isinstance(exc, t)), 500
                )
                self._reply(code, {"error": str(exc)})

        def do_GET(self) -> None:
            if self.path.rstrip("/") == "/status":
                self._reply(200, state.handle_status())
            else:
                self._reply(404, {"error": f"no such endpoint {self.path!r}"})

        def do_POST(self) -> None:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                request = json.loads(raw.decode("utf-8")) if raw else {}
            except json.JSONDecodeError:
                self._reply(400, {"error": "request body is not valid JSON"})
                return
            route = self.path.rstrip("/")
            if route == "/predict":
                self._dispatch(state.handle_predict, request)
            elif route == "/feedback":
                self._dispatch(state.handle_feedback, request)
            elif route == "/adjust":
                self._dispatch(
                    lambda req: state.handle_adjust(req.get("trigger", "manual")),
                    request,
                )
            else:
                self._reply(404, {"error": f"no such endpoint {self.path!r}"})

    return ThreadingHTTPServer((host, port), Handler)
