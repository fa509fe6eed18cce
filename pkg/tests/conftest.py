"""Shared fixtures plus the acceptance summary printed after every run."""
import json
import os
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import pytest

from planbridge.corpus import (
    CorpusPair,
    Example,
    Link,
    LinkedSummary,
    Section,
    SectionedDocument,
    SplitSet,
    ingest_documents,
    ingest_summaries,
    pair_examples,
)
from planbridge.kb import EntityRecord, KbSnapshot

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

# one terminal line per acceptance criterion, emitted after the run
ACCEPTANCE_PREFIX = "test_acceptance.py::test_c"


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def snapshot():
    return KbSnapshot.load(os.path.join(DATA_DIR, "kb_snapshot.jsonl"))


def load_fixture_pair(direction):
    docs, _ = ingest_documents(os.path.join(DATA_DIR, f"golden.{direction}.documents.jsonl"))
    summaries, _ = ingest_summaries(os.path.join(DATA_DIR, f"golden.{direction}.summaries.jsonl"))
    src, tgt = direction.split("-")
    return pair_examples(docs, summaries, src, tgt)


@pytest.fixture(scope="session")
def golden_cs_pair():
    return load_fixture_pair("en-cs")


@pytest.fixture(scope="session")
def golden_fr_pair():
    return load_fixture_pair("en-fr")


def make_document(doc_id, lang="en", n_sections=1, text_seed=0):
    sections = tuple(
        Section(
            heading=f"Heading {k}",
            paragraphs=(
                f"Paragraph one of section {k} for {doc_id} ({text_seed}).",
                f"Paragraph two of section {k}.",
            ),
        )
        for k in range(n_sections)
    )
    return SectionedDocument(doc_id=doc_id, lang=lang, title=f"Title {doc_id}", sections=sections)


def make_synthetic_kb(n_entities, langs=("en", "cs"), url_lang="cs"):
    """Snapshot with n synthetic entities reachable from predictable URLs."""
    entities = {}
    url_index = {}
    for i in range(n_entities):
        qid = f"Q{i + 1}"
        labels = {lang: f"label-{lang}-{i}" for lang in langs}
        entities[qid] = EntityRecord(qid=qid, labels=labels)
        url_index[synthetic_url(i, url_lang)] = qid
    return KbSnapshot(version="synthetic", langs=tuple(langs), url_index=url_index, entities=entities)


def synthetic_url(i, lang="cs"):
    return f"https://{lang}.wikipedia.org/wiki/Topic_{i}"


def make_linked_example(doc_id, entity_ids, src="en", tgt="cs", dead_urls=()):
    """Example whose summary links mention the given synthetic entities in order.

    dead_urls get appended as extra links that no snapshot resolves; they
    stand in for rotted hyperlinks.
    """
    pieces = []
    mentions = []
    for i in entity_ids:
        mention = f"label-{tgt}-{i}"
        pieces.append(f"Sentence about {mention} .")
        mentions.append((mention, synthetic_url(i, tgt)))
    for k, url in enumerate(dead_urls):
        mention = f"ghost-{k}"
        pieces.append(f"Sentence about {mention} .")
        mentions.append((mention, url))
    text = " ".join(pieces) if pieces else f"Summary of {doc_id} with no links."
    links = []
    cursor = 0
    for mention, url in mentions:
        start = text.index(mention, cursor)
        links.append(Link(start=start, end=start + len(mention), url=url))
        cursor = start + len(mention)
    document = make_document(doc_id, lang=src)
    summary = LinkedSummary(doc_id=doc_id, lang=tgt, text=text, links=tuple(links))
    return Example(document=document, summary=summary)


def make_synthetic_pair(n, src="en", tgt="cs", n_entities=20, seed=0, id_prefix="ex"):
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        ids = [rng.randrange(n_entities)]
        for j in rng.sample(range(n_entities), k=rng.randint(0, 3)):
            if j not in ids:
                ids.append(j)
        examples.append(make_linked_example(f"{id_prefix}-{i}", ids, src=src, tgt=tgt))
    return CorpusPair(src_lang=src, tgt_lang=tgt, examples=tuple(examples))


def make_split_set(pair, k_validation=0, k_test=0):
    n = len(pair.examples)
    train = pair.examples[: n - k_validation - k_test]
    validation = pair.examples[n - k_validation - k_test : n - k_test]
    test = pair.examples[n - k_test :]
    mk = lambda exs: CorpusPair(src_lang=pair.src_lang, tgt_lang=pair.tgt_lang, examples=exs)
    return SplitSet(train=mk(train), validation=mk(validation), test=mk(test))


class StubServer:
    """Local HTTP server serving JSON endpoints for offline tests.

    handlers: {path: callable(request_obj) -> response_obj}. POST bodies
    arrive parsed from JSON; GET query strings arrive as a flat dict. A
    handler may raise to produce a 500.
    """

    def __init__(self, handlers):
        self.handlers = dict(handlers)
        self.requests = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def _dispatch(self, path, request_obj):
                stub.requests.append((path, request_obj))
                handler = stub.handlers.get(path)
                if handler is None:
                    self.send_error(404)
                    return
                try:
                    payload = json.dumps(handler(request_obj)).encode("utf-8")
                except Exception:
                    self.send_error(500)
                    return
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or "{}")
                self._dispatch(self.path, body)

            def do_GET(self):
                parts = urlsplit(self.path)
                params = {k: v[0] for k, v in parse_qs(parts.query).items()}
                self._dispatch(parts.path, params)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    servers = []

    def start(handlers):
        server = StubServer(handlers)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.close()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if ACCEPTANCE_PREFIX not in nodeid.replace(os.sep, "/"):
                continue
            name = nodeid.split("::")[-1]
            # setup errors count as failures; a pass never overwrites a fail
            if outcomes.get(name) != "FAIL":
                outcomes[name] = verdict
    if not outcomes:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    for name in sorted(outcomes):
        label = name[len("test_") :]
        terminalreporter.write_line(f"  {label}: {outcomes[name]}")
