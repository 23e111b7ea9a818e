"""
HTTP classification service.

    POST /classify/{lang}   {"text": ..., "level": "ID", "num_labels": 6} -> {label: score, ...}
    GET  /health            {"status": "ok"}
    GET  /models            [{"language", "family", "registered_at"}, ...]

Requests are handled on separate threads; bundles are loaded lazily through the registry cache
and never mutated, so responses do not depend on concurrency.
"""

import json
import logging
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Optional

from .config import Config
from .core import ClassifyRequest, classify_endpoint
from .corpus import SUPPORTED_LANGUAGES
from .errors import EuroVocError, InvalidRequestError, MissingArtifactError
from .registry import ModelRegistry

logger = logging.getLogger(__name__)

CLASSIFY_PATH = re.compile(r"^/classify/([A-Za-z]{2})/?$")
MAX_BODY_BYTES = 10 * 1024 * 1024


class ClassificationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, registry: ModelRegistry, config: Config):
        self.registry = registry
        self.config = config
        super().__init__(address, ClassificationHandler)


class ClassificationHandler(BaseHTTPRequestHandler):
    server: ClassificationServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args: Any) -> None:
        logger.debug("%s %s", self.address_string(), format % args)

    def _send_json(self, status: int, payload: Any, close: bool = False) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        if close:
            # the request body may be unread
            self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message, "status": status}, close=True)

    def do_GET(self) -> None:
        if self.path == "/health":
            self._send_json(200, {"status": "ok"})
        elif self.path == "/models":
            entries = self.server.registry.entries()
            self._send_json(200, [
                {"language": e.language, "family": e.family, "registered_at": e.registered_at}
                for e in entries
            ])
        else:
            self._send_error(404, f"no route for GET {self.path}")

    def _read_json(self) -> Any:
        raw_length = (self.headers.get("Content-Length") or "0").strip()
        if not (raw_length.isascii() and raw_length.isdigit()):
            raise InvalidRequestError(f"invalid Content-Length {raw_length!r}")
        length = int(raw_length)
        if length > MAX_BODY_BYTES:
            raise InvalidRequestError("request body too large", status=413)
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise InvalidRequestError("request body is not valid JSON") from None

    def do_POST(self) -> None:
        match = CLASSIFY_PATH.match(self.path)
        if not match:
            self._send_error(404, f"no route for POST {self.path}")
            return
        language = match.group(1).lower()
        try:
            request = ClassifyRequest.from_dict(self._read_json(), self.server.config)
            if language not in SUPPORTED_LANGUAGES:
                raise InvalidRequestError(f"unsupported language {language!r}", status=404)
            try:
                bundle = self.server.registry.get(language)
            except MissingArtifactError:
                raise InvalidRequestError(f"no model registered for {language!r}", status=404) from None
            response = classify_endpoint(bundle, request, self.server.config.aggregation)
        except InvalidRequestError as e:
            self._send_error(e.status, str(e))
            return
        except EuroVocError as e:
            logger.error("Classification with %s model failed: %s", language, e)
            self._send_error(500, str(e))
            return
        self._send_json(200, response.to_dict())


def build_server(
    registry: ModelRegistry,
    host: Optional[str] = None,
    port: Optional[int] = None,
    config: Optional[Config] = None,
) -> ClassificationServer:
    """
    Create (but do not start) the classification server.

    Args:
        registry: Model registry
        host: Bind address (default: ``config.host``)
        port: Bind port, 0 picks a free one (default: ``config.port``)
        config: Defaults for level, num_labels and aggregation

    Returns:
        Server; call ``serve_forever()`` to run it
    """
    config = config or Config()
    host = config.host if host is None else host
    port = config.port if port is None else port
    server = ClassificationServer((host, port), registry, config)
    logger.info("Classification service bound to http://%s:%d", *server.server_address[:2])
    return server
