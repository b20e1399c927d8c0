"""Shared plumbing for HTTP-level tests: a fully offline service instance."""

import json
import re

from fastapi.testclient import TestClient

from bizplan.gateway import Gateway
from bizplan.service.app import create_app
from bizplan.service.config import load_settings

SITE_URL = "https://fuegocoffee.example/about"

SITE_HTML = """<html>
<head><title>Fuego Coffee</title></head>
<body>
<h1>Fuego Coffee</h1>
<p>We are a small-batch coffee roaster in Pittsburgh, founded in 2021 by José Alvarez.</p>
<p>We roast arabica beans weekly and supply three local cafes.</p>
</body>
</html>
"""

EXTRACTION_REPLY = (
    "NAME: Fuego Coffee\n"
    "SUMMARY: A small-batch coffee roaster in Pittsburgh founded in 2021.\n"
    "FACT/offering: Roasts arabica beans weekly.\n"
    "FACT/customers: Supplies three local cafes.\n"
    "FACT/location: Based in Pittsburgh.\n"
    "FACT/team: Founded by José Alvarez.\n"
)

AUTH_TOKEN = "test-bootstrap-token"


class ServiceEnv:
    def __init__(self, root):
        self.root = root
        self.data_dir = root / "data"
        self.page_dir = root / "pages"
        self.llm_dir = root / "llm"
        for d in (self.data_dir, self.page_dir, self.llm_dir):
            d.mkdir(parents=True, exist_ok=True)
        (self.page_dir / "site.html").write_text(SITE_HTML, encoding="utf-8")
        (self.page_dir / "pages.json").write_text(json.dumps({SITE_URL: "site.html"}))
        self.settings = self._settings()
        # a sibling gateway over the same fixture dir, for recording
        self.gateway = Gateway(self.settings.gateway)
        self.app = create_app(self.settings)
        self.client = TestClient(self.app, raise_server_exceptions=False)

    def _settings(self):
        return load_settings(
            None,
            environ={
                "DATA_DIR": str(self.data_dir),
                "AUTH_TOKEN": AUTH_TOKEN,
                "LLM_MODE": "mock",
                "LLM_FIXTURE_DIR": str(self.llm_dir),
                "INGEST_MODE": "fixture",
                "PAGE_FIXTURE_DIR": str(self.page_dir),
            },
        )

    def restart(self):
        """New app over the same data dir, as after a process restart."""
        self.app = create_app(self._settings())
        self.client = TestClient(self.app, raise_server_exceptions=False)

    def headers(self, token=AUTH_TOKEN):
        return {"Authorization": f"Bearer {token}"}


_SSE_FRAME = re.compile(r"event: (?P<name>[a-z_]+)\ndata: (?P<data>.*)\n\n")


def parse_sse(text):
    return [(m.group("name"), json.loads(m.group("data"))) for m in _SSE_FRAME.finditer(text)]
