import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from helpers import FIXTURE_DIR

ARTICLES = {
    "Soccer": (FIXTURE_DIR / "football.txt").read_text(encoding="utf-8"),
    "Bee": (FIXTURE_DIR / "honeybee.txt").read_text(encoding="utf-8"),
    "Johnny Depp": (FIXTURE_DIR / "actor.txt").read_text(encoding="utf-8"),
    "Ünïcode": "Ünïcode body — with “quotes”\nand two lines",
}


class _Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        self.server.requests.append(self.path)
        params = parse_qs(urlparse(self.path).query)
        title = params.get("titles", [""])[0]
        if title == "Boom":
            self.send_response(500)
            self.end_headers()
            return
        if title in ARTICLES:
            page = {"pageid": 1, "title": title, "extract": ARTICLES[title]}
        else:
            page = {"title": title, "missing": True}
        body = json.dumps({"batchcomplete": True, "query": {"pages": [page]}}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def wiki_server():
    """Local stand-in for the MediaWiki API; yields (api_url, server)."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/w/api.php", server
    server.shutdown()
    server.server_close()


@pytest.fixture
def articles():
    return dict(ARTICLES)
