from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

from sparqlkit.core import TermKind, parse, extract_triples, expand_abbreviations
from sparqlkit.labels import LabelMap

FIXTURES = Path(__file__).parent / "fixtures"

# Label pairs used throughout: the flagship entity/relation examples plus a
# few stable Wikidata labels for fixture queries.
KNOWN_LABELS = {
    "wd:Q25356": "Populus",
    "wdt:P279": "subclass of",
    "wdt:P26": "spouse",
    "wdt:P31": "instance of",
    "wd:Q5": "human",
    "wd:Q515": "city",
    "wdt:P17": "country",
    "wd:Q183": "Germany",
    "wdt:P19": "place of birth",
    "wd:Q42": "Douglas Adams",
    "wdt:P106": "occupation",
    "wdt:P1082": "population",
    "wdt:P569": "date of birth",
    "wdt:P577": "publication date",
    "wd:Q11424": "film",
    "wdt:P6": "head of government",
}


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return FIXTURES / "corpus.txt"


@pytest.fixture(scope="session")
def corpus(corpus_path) -> list[str]:
    return [line for line in corpus_path.read_text().splitlines() if line.strip()]


def _corpus_iris(queries: list[str]) -> list[str]:
    seen: dict[str, None] = {}
    for q in queries:
        for _, triple in extract_triples(expand_abbreviations(parse(q))):
            for term in triple.terms():
                if term.kind is TermKind.PNAME:
                    seen.setdefault(term.text, None)
    return list(seen)


def build_big_label_map(queries: list[str], size: int = 1000) -> LabelMap:
    """Collision-free map covering every corpus IRI, padded with filler."""
    label_map = LabelMap()
    for iri, label in KNOWN_LABELS.items():
        label_map.add(iri, label)
    for iri in _corpus_iris(queries):
        if iri not in label_map.forward:
            prefix, local = iri.split(":", 1)
            label_map.add(iri, f"{local} label")
    i = 0
    while len(label_map) < size:
        label_map.add(f"wd:Q9{i:06d}", f"Filler entity {i}")
        i += 1
    assert not label_map.collisions
    return label_map


@pytest.fixture(scope="session")
def big_label_map(corpus) -> LabelMap:
    return build_big_label_map(corpus)


@pytest.fixture()
def small_label_map() -> LabelMap:
    label_map = LabelMap()
    for iri, label in KNOWN_LABELS.items():
        label_map.add(iri, label)
    return label_map


@pytest.fixture()
def labels_file(tmp_path) -> Path:
    path = tmp_path / "labels.tsv"
    path.write_text("".join(f"{iri}\t{label}\n" for iri, label in KNOWN_LABELS.items()))
    return path


# --- stub SPARQL endpoint -----------------------------------------------------


class StubSparqlServer:
    """In-process SPARQL protocol stub.

    ``script`` is a list of planned responses, consumed per request:
    ("json", payload) | ("status", code, body) | ("sleep", seconds).
    When the script is empty, label-lookup queries get a bindings document
    answering every ``values`` IRI, ASK queries get ``{"boolean": true}``,
    and anything else gets one binding per projected variable.
    """

    def __init__(self):
        self.script: list[tuple] = []
        self.requests: list[str] = []
        self.labels: dict[str, str] = {}
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _query(self) -> str:
                parsed = urlparse(self.path)
                params = parse_qs(parsed.query)
                if "query" in params:
                    return params["query"][0]
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length).decode()
                return parse_qs(body).get("query", [""])[0]

            def do_GET(self):
                self._respond()

            def do_POST(self):
                self._respond()

            def _respond(self):
                query = self._query()
                server.requests.append(query)
                if server.script:
                    action = server.script.pop(0)
                    if action[0] == "sleep":
                        time.sleep(action[1])
                        self._send(200, {"results": {"bindings": []}})
                        return
                    if action[0] == "status":
                        self.send_response(action[1])
                        body = action[2].encode()
                        self.send_header("Content-Length", str(len(body)))
                        self.end_headers()
                        self.wfile.write(body)
                        return
                    if action[0] == "json":
                        self._send(200, action[1])
                        return
                self._send(200, server.default_payload(query))

            def _send(self, status, payload):
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/sparql-results+json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        self.url = f"http://127.0.0.1:{self._httpd.server_address[1]}/sparql"

    def default_payload(self, query: str) -> dict:
        lowered = query.lower()
        if "values ?item" in lowered:
            import re as _re

            bindings = []
            for iri in _re.findall(r"values \?item \{ ([^}]*) \}", query)[0].split():
                label = self.labels.get(iri)
                if label is None:
                    continue
                prefix = iri.split(":", 1)[0]
                expansions = {
                    "wd": "http://www.wikidata.org/entity/",
                    "wdt": "http://www.wikidata.org/prop/direct/",
                }
                full = expansions.get(prefix, f"http://example.org/{prefix}/") + iri.split(":", 1)[1]
                bindings.append(
                    {
                        "item": {"type": "uri", "value": full},
                        "label": {"type": "literal", "value": label},
                    }
                )
            return {"results": {"bindings": bindings}}
        if lowered.strip().startswith("ask"):
            return {"boolean": True}
        return {
            "results": {
                "bindings": [
                    {"ans": {"type": "uri", "value": "http://www.wikidata.org/entity/Q10884"}},
                    {"ans": {"type": "uri", "value": "http://www.wikidata.org/entity/Q158746"}},
                ]
            }
        }

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture()
def stub_server():
    server = StubSparqlServer()
    yield server
    server.close()
