"""HTTP server behind ``querydeck serve``.

Routes: ``GET /spec.json`` returns the interface document, ``POST /exec``
pipes the posted SQL through the configured adapter command (or echoes it
back as a single-cell result when none is configured), anything else is
served from the static UI directory.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

logger = logging.getLogger(__name__)


def _default_ui_dir() -> str:
    for candidate in (
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
        Path.cwd() / "frontend" / "dist",
    ):
        if candidate.is_dir():
            return str(candidate)
    return str(Path.cwd())


class _Handler(SimpleHTTPRequestHandler):
    spec_path: str = ""
    exec_adapter: str | None = None

    def log_message(self, fmt, *args):
        logger.info("%s " + fmt, self.client_address[0], *args)

    def do_GET(self):
        if self.path.split("?")[0] == "/spec.json":
            try:
                body = Path(self.spec_path).read_bytes()
            except OSError:
                self.send_error(404, "spec not found")
                return
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        super().do_GET()

    def do_POST(self):
        if self.path.split("?")[0] != "/exec":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", "0"))
        sql = self.rfile.read(length).decode("utf-8", errors="replace")
        result = run_exec(sql, self.exec_adapter)
        body = json.dumps(result).encode("utf-8")
        self.send_response(200 if result["ok"] else 502)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def run_exec(sql: str, adapter: str | None) -> dict:
    """Execute SQL through the adapter command; TSV rows in, rows out.

    Without an adapter the query is echoed as one row, which keeps the UI
    functional against nothing but the file system.
    """
    if not adapter:
        return {"ok": True, "columns": ["sql"], "rows": [[sql]]}
    try:
        proc = subprocess.run(shlex.split(adapter), input=sql.encode("utf-8"),
                              capture_output=True, timeout=60)
    except (OSError, subprocess.TimeoutExpired) as exc:
        return {"ok": False, "error": str(exc)}
    if proc.returncode != 0:
        return {"ok": False,
                "error": proc.stderr.decode("utf-8", errors="replace")[:2000]}
    lines = proc.stdout.decode("utf-8", errors="replace").splitlines()
    if not lines:
        return {"ok": True, "columns": [], "rows": []}
    return {"ok": True,
            "columns": lines[0].split("\t"),
            "rows": [ln.split("\t") for ln in lines[1:]]}


def run_server(spec_path: str, ui_dir: str | None, exec_adapter: str | None,
               host: str = "127.0.0.1", port: int = 8765) -> int:
    directory = ui_dir or _default_ui_dir()
    handler = partial(_Handler, directory=directory)
    _Handler.spec_path = spec_path
    _Handler.exec_adapter = exec_adapter
    server = ThreadingHTTPServer((host, port), handler)
    print(f"serving {spec_path} and {directory} on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
