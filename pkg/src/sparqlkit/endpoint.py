"""SPARQL Protocol client: batched label lookup and query execution.

Speaks the standard HTTP protocol (``query`` parameter, JSON results) with
retry/backoff on transient failures, an optional minimum interval between
requests, and a content-addressed on-disk result cache so evaluation reruns
never re-hit an endpoint.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .core import parse
from .core.errors import SparqlKitError
from .evaluate import Answers

RESULTS_JSON = "application/sparql-results+json"
CACHE_DIR_ENV = "SPARQLKIT_CACHE_DIR"

# Queries longer than this go out as POST form bodies instead of GET params.
_MAX_GET_QUERY = 1800

WIKIDATA_PREFIXES = {
    "wd": "http://www.wikidata.org/entity/",
    "wdt": "http://www.wikidata.org/prop/direct/",
    "p": "http://www.wikidata.org/prop/",
    "ps": "http://www.wikidata.org/prop/statement/",
    "pq": "http://www.wikidata.org/prop/qualifier/",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
}


class NetworkError(SparqlKitError):
    pass


class QueryTimeout(NetworkError):
    pass


class EndpointError(SparqlKitError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"endpoint returned {status}: {body_excerpt!r}")
        self.status = status
        self.body_excerpt = body_excerpt


class MissingLabel(SparqlKitError):
    pass


@dataclass
class EndpointConfig:
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.5  # seconds; doubles per retry
    min_interval: float = 0.0  # rate limit between requests
    user_agent: str = "sparqlkit/0.1 (corpus toolkit)"


class SparqlClient:
    """Thin requests-based client with retry, backoff, and rate limiting."""

    def __init__(self, endpoint: str, config: EndpointConfig | None = None, session=None):
        self.endpoint = endpoint
        self.config = config or EndpointConfig()
        self.session = session or requests.Session()
        self._last_request = 0.0

    def _throttle(self) -> None:
        if self.config.min_interval <= 0:
            return
        wait = self._last_request + self.config.min_interval - time.monotonic()
        if wait > 0:
            time.sleep(wait)

    def request(self, query: str) -> dict:
        """Run one query, retrying transient failures (5xx, connection
        errors, timeouts) with exponential backoff."""
        headers = {"Accept": RESULTS_JSON, "User-Agent": self.config.user_agent}
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
            self._throttle()
            self._last_request = time.monotonic()
            try:
                if len(query) > _MAX_GET_QUERY:
                    resp = self.session.post(
                        self.endpoint,
                        data={"query": query},
                        headers=headers,
                        timeout=self.config.timeout,
                    )
                else:
                    resp = self.session.get(
                        self.endpoint,
                        params={"query": query},
                        headers=headers,
                        timeout=self.config.timeout,
                    )
            except requests.Timeout as exc:
                last_error = QueryTimeout(f"request timed out after {self.config.timeout}s")
                last_error.__cause__ = exc
                continue
            except requests.RequestException as exc:
                last_error = NetworkError(f"request failed: {exc}")
                last_error.__cause__ = exc
                continue
            if resp.status_code >= 500:
                last_error = EndpointError(resp.status_code, resp.text[:200])
                continue
            if resp.status_code != 200:
                raise EndpointError(resp.status_code, resp.text[:200])
            try:
                return resp.json()
            except ValueError as exc:
                raise EndpointError(resp.status_code, resp.text[:200]) from exc
        assert last_error is not None
        raise last_error


def _prefix_declarations(iris: list[str]) -> str:
    prefixes = sorted({iri.split(":", 1)[0] for iri in iris})
    decls = []
    for prefix in prefixes:
        expansion = WIKIDATA_PREFIXES.get(prefix)
        if expansion is None:
            raise ValueError(f"unknown prefix {prefix!r}; cannot build lookup query")
        decls.append(f"prefix {prefix}: <{expansion}>")
    return " ".join(decls)


def _shorten_iri(full_iri: str) -> str | None:
    for prefix, expansion in WIKIDATA_PREFIXES.items():
        if full_iri.startswith(expansion):
            return f"{prefix}:{full_iri[len(expansion):]}"
    return None


@dataclass
class FetchResult:
    entries: list[tuple[str, str]] = field(default_factory=list)  # (iri, raw label)
    missing: list[str] = field(default_factory=list)
    requests_made: int = 0


def fetch_labels(
    iris: list[str],
    endpoint: str,
    language: str = "en",
    *,
    batch_size: int = 50,
    config: EndpointConfig | None = None,
    session=None,
) -> FetchResult:
    """Fetch ``rdfs:label`` values for prefixed IRIs in batches.

    Entries come back in input order. IRIs that return no label in the
    requested language are reported in ``missing``, never fatal.
    """
    result = FetchResult()
    if not iris:
        return result
    client = SparqlClient(endpoint, config=config, session=session)
    found: dict[str, str] = {}
    for start in range(0, len(iris), batch_size):
        batch = list(dict.fromkeys(iris[start : start + batch_size]))
        decls = _prefix_declarations(batch)
        values = " ".join(batch)
        query = (
            f"{decls} select ?item ?label where {{ "
            f"values ?item {{ {values} }} "
            f'?item rdfs:label ?label filter ( lang ( ?label ) = "{language}" ) }}'
        )
        data = client.request(query)
        result.requests_made += 1
        for binding in data.get("results", {}).get("bindings", []):
            item = binding.get("item", {}).get("value", "")
            label = binding.get("label", {}).get("value", "")
            short = _shorten_iri(item) or item
            if short and label and short not in found:
                found[short] = label
    for iri in iris:
        label = found.get(iri)
        if label is None:
            result.missing.append(iri)
        else:
            result.entries.append((iri, label))
    return result


def add_fetched_labels(label_map, fetched: FetchResult) -> None:
    """Merge fetched entries into a LabelMap (normalizing labels)."""
    for iri, raw in fetched.entries:
        label_map.add(iri, raw)


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_DIR_ENV)
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache"))
    return Path(xdg) / "sparqlkit"


def _cache_key(endpoint: str, query: str) -> str:
    return hashlib.sha256(f"{endpoint}\n{query}".encode()).hexdigest()


def execute_query(
    query: str,
    endpoint: str,
    *,
    timeout: float | None = None,
    cache_dir: str | os.PathLike | None = None,
    config: EndpointConfig | None = None,
    session=None,
    passthrough: bool = False,
) -> Answers:
    """Execute a query and flatten the response to an answer set.

    SELECT responses become the set of binding value strings; ASK responses
    become a boolean. Unless ``passthrough`` is set the query must parse
    locally before anything goes on the wire. With ``cache_dir`` the raw
    response JSON is cached under a content hash of (endpoint, query) and
    reruns never touch the network.
    """
    if not passthrough:
        parse(query)  # raises ParseError and friends on bad input
    cfg = config or EndpointConfig()
    if timeout is not None:
        cfg = EndpointConfig(
            timeout=timeout,
            max_retries=cfg.max_retries,
            backoff=cfg.backoff,
            min_interval=cfg.min_interval,
            user_agent=cfg.user_agent,
        )
    data = None
    cache_file = None
    if cache_dir is not None:
        cache_file = Path(cache_dir) / f"{_cache_key(endpoint, query)}.json"
        if cache_file.exists():
            data = json.loads(cache_file.read_text(encoding="utf-8"))
    if data is None:
        client = SparqlClient(endpoint, config=cfg, session=session)
        data = client.request(query)
        if cache_file is not None:
            cache_file.parent.mkdir(parents=True, exist_ok=True)
            tmp = cache_file.with_suffix(".tmp")
            tmp.write_text(json.dumps(data, sort_keys=True), encoding="utf-8")
            os.replace(tmp, cache_file)
    return answers_from_results(data)


def answers_from_results(data: dict) -> Answers:
    """Flatten a sparql-results+json document to an answer set."""
    if "boolean" in data:
        return bool(data["boolean"])
    values = set()
    for binding in data.get("results", {}).get("bindings", []):
        for cell in binding.values():
            value = cell.get("value")
            if value is not None:
                values.add(str(value))
    return frozenset(values)
