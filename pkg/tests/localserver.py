"""Scripted local HTTP server for fetch and end-to-end tests.

Each path maps to a list of scripted responses; successive requests to
the same path advance through the list and stick on the last entry.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def page(body: str, content_type: str = "text/html; charset=utf-8", status: int = 200):
    return (status, {"Content-Type": content_type}, body.encode("utf-8"))


def raw(body: bytes, headers: dict[str, str], status: int = 200):
    return (status, headers, body)


def redirect(location: str, status: int = 301):
    return (status, {"Location": location}, b"")


class ScriptedServer:
    def __init__(self, routes: dict[str, list[tuple[int, dict[str, str], bytes]]]):
        self.routes = dict(routes)
        self._visits: dict[str, int] = {}
        self._lock = threading.Lock()
        self.request_log: list[tuple[float, str]] = []

        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 (stdlib naming)
                import time

                with server._lock:
                    server.request_log.append((time.monotonic(), self.path))
                    script = server.routes.get(self.path)
                    if script is None:
                        self.send_response(404)
                        self.send_header("Content-Type", "text/plain")
                        self.end_headers()
                        self.wfile.write(b"not found")
                        return
                    index = server._visits.get(self.path, 0)
                    server._visits[self.path] = index + 1
                    status, headers, body = script[min(index, len(script) - 1)]
                self.send_response(status)
                for name, value in headers.items():
                    self.send_header(name, value)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.base_url = f"http://127.0.0.1:{self.httpd.server_port}"
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def start(self) -> "ScriptedServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def visits(self, path: str) -> int:
        with self._lock:
            return self._visits.get(path, 0)

    def reset_visits(self) -> None:
        with self._lock:
            self._visits.clear()


@contextmanager
def scripted_server(routes):
    server = ScriptedServer(routes).start()
    try:
        yield server
    finally:
        server.stop()
