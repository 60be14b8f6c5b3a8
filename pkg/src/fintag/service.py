"""HTTP service exposing tagging and top-k tag recommendation.

Stateless JSON-over-HTTP on the standard library server: one immutable model
per process, loaded and fingerprint-checked at startup. Responses carry a
schema version header; unknown request fields are ignored and never echoed.

Endpoints:
  GET  /healthz        {"status": "ok", "model_fingerprint": "..."}
  GET  /api/tags       {"tags": [...]}
  POST /api/tag        {"tokens": [...]} -> {"labels": [...], "spans": [...]}
  POST /api/recommend  {"tokens": [...], "index": int, "k": int?}
                       -> {"candidates": [{"tag", "probability"}...],
                           "policy_view": "<normalized token at index>"}

Errors are {"error": {"code": "...", "message": "..."}} with status 400
(malformed body, empty sentence, index/k out of range), 413 (body too
large), 422 (sentence exceeds the configured length), or 500 (internals
never leaked).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .labels import LabelSet, spans_from_labels
from .tagger import TaggerModel, load_model, predict, topk_tags
from .tokenization import ShapeVocab, SubwordVocab, normalize_numeric

SCHEMA_VERSION = "1"


class ServiceConfigError(ValueError):
    """Raised when the service configuration is unusable."""


@dataclass
class ServiceConfig:
    model_path: str
    tags_path: str
    vocab_path: str | None = None
    shape_vocab_path: str | None = None
    bind: str = "127.0.0.1"
    port: int = 8750
    default_k: int = 10
    max_sentence_length: int = 512
    max_body_bytes: int = 1_048_576

    def __post_init__(self) -> None:
        if self.default_k < 1:
            raise ServiceConfigError("default_k must be >= 1")
        if self.max_sentence_length < 1 or self.max_body_bytes < 1:
            raise ServiceConfigError("limits must be positive")

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        """Key-value config: one ``key = value`` pair per line, # comments."""
        values: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ServiceConfigError(f"line {lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
        known = {
            "model_path": str,
            "tags_path": str,
            "vocab_path": str,
            "shape_vocab_path": str,
            "bind": str,
            "port": int,
            "default_k": int,
            "max_sentence_length": int,
            "max_body_bytes": int,
        }
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise ServiceConfigError(f"unknown config key {key!r}")
            kwargs[key] = known[key](value)
        missing = {"model_path", "tags_path"} - set(kwargs)
        if missing:
            raise ServiceConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**kwargs)

    def with_env_overrides(self) -> "ServiceConfig":
        bind = os.environ.get("FINTAG_BIND", self.bind)
        port = int(os.environ.get("FINTAG_PORT", self.port))
        return ServiceConfig(
            self.model_path,
            self.tags_path,
            self.vocab_path,
            self.shape_vocab_path,
            bind,
            port,
            self.default_k,
            self.max_sentence_length,
            self.max_body_bytes,
        )


class ServiceState:
    """Immutable per-process state shared by all request handlers."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        labelset = LabelSet.load(config.tags_path)
        vocab = SubwordVocab.load(config.vocab_path) if config.vocab_path else None
        shapes = ShapeVocab.load(config.shape_vocab_path) if config.shape_vocab_path else None
        # fingerprints are verified here; a mismatched artifact refuses to start
        self.model: TaggerModel = load_model(config.model_path, labelset, vocab, shapes)
        with open(config.model_path, "rb") as fh:
            self.model_fingerprint = hashlib.sha256(fh.read()).hexdigest()


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _require_tokens(body: dict, max_length: int) -> list[str]:
    tokens = body.get("tokens")
    if not isinstance(tokens, list):
        raise _ApiError(400, "malformed_body", "field 'tokens' must be an array of strings")
    if not tokens:
        raise _ApiError(400, "empty_sentence", "token array is empty")
    if not all(isinstance(t, str) and t for t in tokens):
        raise _ApiError(400, "malformed_body", "tokens must be non-empty strings")
    if len(tokens) > max_length:
        raise _ApiError(
            422, "sentence_too_long", f"sentence has {len(tokens)} words, limit {max_length}"
        )
    return tokens


def _make_handler(state: ServiceState):
    class Handler(BaseHTTPRequestHandler):
        server_version = "fintag/1"
        protocol_version = "HTTP/1.1"

        def log_message(self, *args) -> None:  # quiet by default
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("X-Schema-Version", SCHEMA_VERSION)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_error(self, status: int, code: str, message: str) -> None:
            self._send(status, {"error": {"code": code, "message": message}})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0) or 0)
            if length > state.config.max_body_bytes:
                raise _ApiError(413, "body_too_large", "request body exceeds limit")
            raw = self.rfile.read(length) if length else b""
            try:
                body = json.loads(raw.decode("utf-8")) if raw else {}
            except (json.JSONDecodeError, UnicodeDecodeError):
                raise _ApiError(400, "malformed_body", "request body is not valid JSON")
            if not isinstance(body, dict):
                raise _ApiError(400, "malformed_body", "request body must be a JSON object")
            return body

        def do_OPTIONS(self) -> None:  # CORS preflight for the browser UI
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self) -> None:
            try:
                if self.path == "/healthz":
                    self._send(
                        200,
                        {"status": "ok", "model_fingerprint": state.model_fingerprint},
                    )
                elif self.path == "/api/tags":
                    self._send(200, {"tags": list(state.model.labelset.tags)})
                else:
                    self._send_error(404, "not_found", f"no such endpoint: {self.path}")
            except Exception:
                self._send_error(500, "internal_error", "internal error")

        def do_POST(self) -> None:
            try:
                body = self._read_body()
                if self.path == "/api/tag":
                    self._send(200, self._handle_tag(body))
                elif self.path == "/api/recommend":
                    self._send(200, self._handle_recommend(body))
                else:
                    self._send_error(404, "not_found", f"no such endpoint: {self.path}")
            except _ApiError as exc:
                self._send_error(exc.status, exc.code, exc.message)
            except Exception:
                self._send_error(500, "internal_error", "internal error")

        def _handle_tag(self, body: dict) -> dict:
            tokens = _require_tokens(body, state.config.max_sentence_length)
            labels = predict(state.model, tokens)
            spans = spans_from_labels(labels, lenient=True)
            return {
                "labels": labels,
                "spans": [{"start": s.start, "end": s.end, "tag": s.tag} for s in spans],
            }

        def _handle_recommend(self, body: dict) -> dict:
            tokens = _require_tokens(body, state.config.max_sentence_length)
            index = body.get("index")
            if not isinstance(index, int) or isinstance(index, bool):
                raise _ApiError(400, "malformed_body", "field 'index' must be an integer")
            if not 0 <= index < len(tokens):
                raise _ApiError(400, "index_out_of_range", f"index {index} out of range")
            n_tags = len(state.model.labelset.tags)
            k = body.get("k", min(state.config.default_k, n_tags))
            if not isinstance(k, int) or isinstance(k, bool):
                raise _ApiError(400, "malformed_body", "field 'k' must be an integer")
            if not 1 <= k <= n_tags:
                raise _ApiError(400, "k_out_of_range", f"k must be in [1, {n_tags}]")
            candidates = topk_tags(state.model, tokens, index, k)
            normalized = normalize_numeric(
                tokens, state.model.policy, state.model.shape_vocab
            )
            return {
                "candidates": [
                    {"tag": tag, "probability": prob} for tag, prob in candidates
                ],
                "policy_view": normalized[index],
            }

    return Handler


def build_server(config: ServiceConfig) -> ThreadingHTTPServer:
    """Load the model (refusing to start on fingerprint mismatch) and bind."""
    state = ServiceState(config)
    server = ThreadingHTTPServer((config.bind, config.port), _make_handler(state))
    server.fintag_state = state  # for tests and introspection
    return server


def serve(config: ServiceConfig) -> None:
    server = build_server(config)
    host, port = server.server_address[:2]
    print(f"fintag service listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
