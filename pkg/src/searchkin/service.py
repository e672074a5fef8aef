"""Read-only HTTP JSON service over one immutable snapshot.

Endpoints:
    GET  /healthz                         -> {"status": "ok", "manifest": ...}
    GET  /related?term=...&top_n=&filter= -> same body as `searchkin related`
    POST /classify  {"keywords": [...]}   -> classification scores
    POST /recommend {"keywords": [...], "overrides": {...}} -> decision + items

The snapshot never changes while serving, so requests need no locking; the
threading server just fans out readers.
"""

from __future__ import annotations

import json
import logging
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .model import ModelError, NoKnownKeywordsError, UnknownTermError
from .snapshot import (
    EngineSnapshot,
    classify_payload,
    health_payload,
    recommend_payload,
    related_payload,
    render_json,
)

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class BadRequest(ValueError):
    pass


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise BadRequest(f"not a boolean: {raw!r}")


def _one(params: dict[str, list[str]], key: str) -> str | None:
    values = params.get(key)
    if not values:
        return None
    if len(values) > 1:
        raise BadRequest(f"duplicate query parameter: {key}")
    return values[0]


class SnapshotRequestHandler(BaseHTTPRequestHandler):
    """Routes requests against the server's snapshot; all bodies are JSON."""

    server_version = "searchkin"
    protocol_version = "HTTP/1.1"

    @property
    def snapshot(self) -> EngineSnapshot:
        return self.server.snapshot  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        logger.debug("%s - %s", self.address_string(), format % args)

    def _reply(self, status: int, payload: dict) -> None:
        body = render_json(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json_body(self) -> dict:
        length = self.headers.get("Content-Length")
        if length is None:
            raise BadRequest("missing request body")
        try:
            raw = self.rfile.read(int(length))
            doc = json.loads(raw)
        except (ValueError, json.JSONDecodeError) as exc:
            raise BadRequest(f"invalid JSON body: {exc}") from exc
        if not isinstance(doc, dict):
            raise BadRequest("request body must be a JSON object")
        return doc

    def _keywords_from(self, doc: dict) -> list[str]:
        keywords = doc.get("keywords")
        if (
            not isinstance(keywords, list)
            or not keywords
            or not all(isinstance(k, str) for k in keywords)
        ):
            raise BadRequest("'keywords' must be a non-empty list of strings")
        return keywords

    def do_GET(self):  # noqa: N802 - stdlib casing
        url = urlparse(self.path)
        try:
            if url.path == "/healthz":
                self._reply(200, health_payload(self.snapshot))
            elif url.path == "/related":
                self._get_related(parse_qs(url.query))
            else:
                self._reply(404, {"error": "not found", "path": url.path})
        except BadRequest as exc:
            self._reply(400, {"error": str(exc)})
        except Exception:
            logger.exception("internal error on %s", self.path)
            self._reply(500, {"error": "internal error"})

    def do_POST(self):  # noqa: N802 - stdlib casing
        url = urlparse(self.path)
        try:
            if url.path == "/classify":
                self._post_classify()
            elif url.path == "/recommend":
                self._post_recommend()
            else:
                self._reply(404, {"error": "not found", "path": url.path})
        except BadRequest as exc:
            self._reply(400, {"error": str(exc)})
        except Exception:
            logger.exception("internal error on %s", self.path)
            self._reply(500, {"error": "internal error"})

    def _get_related(self, params: dict[str, list[str]]) -> None:
        term = _one(params, "term")
        if term is None:
            raise BadRequest("missing query parameter: term")
        try:
            top_n_raw = _one(params, "top_n")
            min_score_raw = _one(params, "min_score")
            filter_raw = _one(params, "filter")
            min_inter_raw = _one(params, "min_intersection")
            min_jac_raw = _one(params, "min_jaccard")
            kwargs = {
                "top_n": int(top_n_raw) if top_n_raw is not None else None,
                "min_score": float(min_score_raw) if min_score_raw is not None else None,
                "use_filter": _parse_bool(filter_raw) if filter_raw is not None else False,
                "min_intersection": int(min_inter_raw) if min_inter_raw is not None else None,
                "min_jaccard": float(min_jac_raw) if min_jac_raw is not None else None,
            }
        except ValueError as exc:
            raise BadRequest(f"bad query parameter: {exc}") from exc
        try:
            payload = related_payload(self.snapshot, term, **kwargs)
        except UnknownTermError:
            self._reply(404, {"error": "unknown term", "term": term})
            return
        except ValueError as exc:
            raise BadRequest(str(exc)) from exc
        self._reply(200, payload)

    def _post_classify(self) -> None:
        doc = self._read_json_body()
        keywords = self._keywords_from(doc)
        beta = doc.get("beta")
        if beta is not None and not isinstance(beta, (int, float)):
            raise BadRequest("'beta' must be a number")
        try:
            payload = classify_payload(self.snapshot, keywords, beta=beta)
        except NoKnownKeywordsError:
            self._reply(404, {"error": "no known keywords", "keywords": keywords})
            return
        except ValueError as exc:
            raise BadRequest(str(exc)) from exc
        self._reply(200, payload)

    def _post_recommend(self) -> None:
        doc = self._read_json_body()
        keywords = self._keywords_from(doc)
        overrides = doc.get("overrides")
        if overrides is not None and not isinstance(overrides, dict):
            raise BadRequest("'overrides' must be an object")
        try:
            payload = recommend_payload(self.snapshot, keywords, overrides=overrides)
        except (ValueError, ModelError) as exc:
            raise BadRequest(str(exc)) from exc
        self._reply(200, payload)


def make_server(
    snapshot: EngineSnapshot, host: str = "127.0.0.1", port: int = 0
) -> ThreadingHTTPServer:
    """Create (but do not start) the HTTP server; port 0 picks a free port."""
    problems = snapshot.model.check_consistency()
    if problems:
        raise ModelError(f"snapshot failed consistency check: {problems}")
    server = ThreadingHTTPServer((host, port), SnapshotRequestHandler)
    server.snapshot = snapshot  # type: ignore[attr-defined]
    return server


def serve_snapshot(snapshot: EngineSnapshot, host: str, port: int) -> None:
    """Serve until SIGINT/SIGTERM; blocks the calling thread."""
    server = make_server(snapshot, host, port)
    stop = threading.Event()

    def _shutdown(signum, frame):
        logger.info("signal %d received, shutting down", signum)
        stop.set()
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _shutdown)
    signal.signal(signal.SIGTERM, _shutdown)
    logger.warning("serving snapshot on %s:%d", host, server.server_address[1])
    try:
        server.serve_forever()
    finally:
        server.server_close()
