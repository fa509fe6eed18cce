"""Knowledge-base bridge: canonicalize wiki article URLs to KB entities
with per-language labels.

Two sources implement the same lookup contract. A snapshot is a local
JSONL file mapping article URLs to entity records, built once and then
used offline; the live source queries a Wikidata-compatible API by
sitelink. A lookup that finds nothing returns None, which downstream
annotation treats as an unresolvable mention; only transport failure
raises, so flaky networking can never silently shrink a corpus.

URL normalization is idempotent: percent-escapes are decoded once and
any remaining literal percent signs are re-escaped, so applying the
function to its own output is a fixed point. Cache and snapshot keys
are always normalized URLs.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol, runtime_checkable
from urllib.parse import unquote, urlsplit, urlunsplit

from .errors import DataError, InvalidUrlError, KbUnavailableError
from .jsonl import dump_line, write_jsonl

logger = logging.getLogger(__name__)

QID_RE = re.compile(r"^Q[0-9]+$")
LANG_RE = re.compile(r"^[a-z]{2,3}(-[a-z0-9]+)*$")

DEFAULT_KB_ENDPOINT = "https://www.wikidata.org/w/api.php"


def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


@dataclass(frozen=True)
class EntityRecord:
    """One KB entity: stable id plus canonical labels keyed by language."""

    qid: str
    labels: Mapping[str, str]
    source_url: str | None = None

    def __post_init__(self):
        if not QID_RE.match(self.qid):
            raise ValueError(f"malformed entity id {self.qid!r}")
        if not self.labels:
            raise ValueError(f"entity {self.qid} has no labels")
        normalized = {}
        for lang, label in self.labels.items():
            validate = LANG_RE.match(lang)
            if not validate:
                raise ValueError(f"entity {self.qid}: bad label language {lang!r}")
            if not label:
                raise ValueError(f"entity {self.qid}: empty label for {lang!r}")
            normalized[lang] = _nfc(label)
        object.__setattr__(self, "labels", normalized)


@dataclass(frozen=True)
class LabelLookup:
    text: str
    lang: str
    is_fallback: bool


def label_for(
    entity: EntityRecord, lang: str, fallback_chain: Iterable[str]
) -> LabelLookup | None:
    """Label in the requested language, else the first fallback that has one.

    An empty chain allows no fallback at all, which is what a monolingual
    direction needs. Returns None when neither the language nor any fallback
    has a label; the caller decides whether that makes the mention unusable.
    """
    if lang in entity.labels:
        return LabelLookup(text=entity.labels[lang], lang=lang, is_fallback=False)
    for fb in fallback_chain:
        if fb in entity.labels:
            return LabelLookup(text=entity.labels[fb], lang=fb, is_fallback=True)
    return None


def normalize_wiki_url(url: str) -> str:
    """Canonical form of an article URL, safe to use as a cache or index key.

    Lowercases scheme and host, drops the fragment, and resolves percent
    escapes exactly once (any percent sign left after decoding is a literal
    and gets re-escaped). Idempotent by construction.
    """
    if not isinstance(url, str) or not url:
        raise InvalidUrlError(str(url), "empty")
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrlError(url)

    def decode_once(component: str) -> str:
        return unquote(component).replace("%", "%25")

    return urlunsplit(
        (
            parts.scheme.lower(),
            parts.netloc.lower(),
            decode_once(parts.path),
            decode_once(parts.query),
            "",
        )
    )


@runtime_checkable
class KbSource(Protocol):
    def lookup(self, normalized_url: str) -> EntityRecord | None:
        ...


@dataclass
class KbSnapshot:
    """Offline KB: header line with version and languages, then entity lines.

    Entity lines are sorted by source URL so a rebuild from the same inputs
    is byte-identical.
    """

    version: str
    langs: tuple[str, ...]
    url_index: dict[str, str] = field(default_factory=dict)
    entities: dict[str, EntityRecord] = field(default_factory=dict)

    def __post_init__(self):
        self.langs = tuple(self.langs)
        for url, qid in self.url_index.items():
            if qid not in self.entities:
                raise ValueError(f"snapshot maps {url!r} to unknown entity {qid}")

    def lookup(self, normalized_url: str) -> EntityRecord | None:
        qid = self.url_index.get(normalized_url)
        return self.entities.get(qid) if qid else None

    def add(self, url: str, record: EntityRecord) -> None:
        key = normalize_wiki_url(url)
        existing = self.entities.get(record.qid)
        if existing is not None:
            merged = dict(existing.labels)
            merged.update(record.labels)
            record = EntityRecord(qid=record.qid, labels=merged, source_url=existing.source_url)
        self.entities[record.qid] = record
        self.url_index[key] = record.qid

    @classmethod
    def load(cls, path: str) -> "KbSnapshot":
        with open(path, "r", encoding="utf-8") as fh:
            header_line = fh.readline()
            try:
                header = json.loads(header_line)
                version = header["version"]
                langs = tuple(header["langs"])
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: bad snapshot header: {exc}") from exc
            snap = cls(version=version, langs=langs)
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    record = EntityRecord(
                        qid=obj["qid"],
                        labels=obj["labels"],
                        source_url=obj.get("source_url"),
                    )
                except (ValueError, KeyError, TypeError) as exc:
                    raise DataError(f"{path}:{line_no}: bad snapshot line: {exc}") from exc
                if record.source_url:
                    snap.add(record.source_url, record)
                else:
                    snap.entities.setdefault(record.qid, record)
        return snap

    def save(self, path: str) -> None:
        lines: list[dict] = [{"version": self.version, "langs": list(self.langs)}]
        for url in sorted(self.url_index):
            rec = self.entities[self.url_index[url]]
            lines.append({"qid": rec.qid, "labels": dict(sorted(rec.labels.items())), "source_url": url})
        indexed = set(self.url_index.values())
        for qid in sorted(self.entities):
            if qid not in indexed:
                rec = self.entities[qid]
                lines.append({"qid": rec.qid, "labels": dict(sorted(rec.labels.items())), "source_url": None})
        write_jsonl(path, lines)


def _site_and_title(normalized_url: str) -> tuple[str, str] | None:
    """Map a normalized article URL to (wiki site id, article title)."""
    parts = urlsplit(normalized_url)
    host = parts.netloc.split(":")[0]
    m = re.match(r"^([a-z0-9-]+)\.(?:m\.)?wikipedia\.org$", host)
    if m is None or m.group(1) in ("www", "m"):
        return None
    if not parts.path.startswith("/wiki/"):
        return None
    title = unquote(parts.path[len("/wiki/") :]).replace("_", " ")
    if not title:
        return None
    return f"{m.group(1)}wiki", title


class RestKb:
    """Live lookup against a Wikidata-compatible wbgetentities endpoint.

    Transport failures are retried with exponential backoff and finally
    raised; a URL the KB does not know yields None.
    """

    def __init__(
        self,
        langs: Iterable[str],
        endpoint: str = DEFAULT_KB_ENDPOINT,
        fetch: Callable[[str, dict], dict] | None = None,
        retries: int = 3,
        backoff: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 30.0,
    ):
        self.langs = tuple(langs)
        self.endpoint = endpoint
        self.retries = retries
        self.backoff = backoff
        self._sleep = sleep
        self._timeout = timeout
        self._fetch = fetch or self._http_fetch

    def _http_fetch(self, endpoint: str, params: dict) -> dict:
        import requests

        resp = requests.get(endpoint, params=params, timeout=self._timeout)
        resp.raise_for_status()
        return resp.json()

    def lookup(self, normalized_url: str) -> EntityRecord | None:
        sited = _site_and_title(normalized_url)
        if sited is None:
            return None
        site, title = sited
        params = {
            "action": "wbgetentities",
            "sites": site,
            "titles": title,
            "props": "labels",
            "languages": "|".join(self.langs),
            "format": "json",
        }
        payload = self._call(params, normalized_url)
        entities = payload.get("entities") or {}
        for qid, body in entities.items():
            if not QID_RE.match(qid) or "missing" in body:
                continue
            labels = {
                lang: v["value"]
                for lang, v in (body.get("labels") or {}).items()
                if lang in self.langs and v.get("value")
            }
            if not labels:
                logger.debug("entity %s for %s has no labels in %s", qid, normalized_url, self.langs)
                return None
            return EntityRecord(qid=qid, labels=labels, source_url=normalized_url)
        return None

    def _call(self, params: dict, url: str) -> dict:
        delay = self.backoff
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                payload = self._fetch(self.endpoint, params)
                if not isinstance(payload, dict):
                    raise ValueError(f"non-object response: {type(payload).__name__}")
                if "error" in payload:
                    raise ValueError(f"API error: {payload['error']}")
                return payload
            except Exception as exc:  # transport and payload errors retry alike
                last = exc
                if attempt + 1 < self.retries:
                    logger.warning("KB lookup for %s failed (%s), retrying in %.1fs", url, exc, delay)
                    self._sleep(delay)
                    delay *= 2
        raise KbUnavailableError(f"KB endpoint failed after {self.retries} attempts for {url}: {last}")


_MISS = object()


class UrlCache:
    """Append-only JSONL cache of URL resolutions, including misses.

    Safe for concurrent writers within one process; tolerates a truncated
    final line left by a crashed run.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._mem: dict[str, EntityRecord | None] = {}
        self._load()

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    url = obj["url"]
                    if obj.get("qid") is None:
                        self._mem[url] = None
                    else:
                        self._mem[url] = EntityRecord(
                            qid=obj["qid"],
                            labels=obj["labels"],
                            source_url=obj.get("source_url") or url,
                        )
                except (ValueError, KeyError, TypeError):
                    logger.warning("ignoring bad cache line in %s", self.path)

    def __len__(self) -> int:
        return len(self._mem)

    def get(self, normalized_url: str):
        """Returns the cached record, None for a cached miss, or the miss sentinel."""
        return self._mem.get(normalized_url, _MISS)

    @staticmethod
    def is_hit(value) -> bool:
        return value is not _MISS

    def put(self, normalized_url: str, record: EntityRecord | None) -> None:
        with self._lock:
            if normalized_url in self._mem:
                return
            self._mem[normalized_url] = record
            os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
            if record is None:
                obj = {"url": normalized_url, "qid": None}
            else:
                obj = {
                    "url": normalized_url,
                    "qid": record.qid,
                    "labels": dict(sorted(record.labels.items())),
                    "source_url": record.source_url,
                }
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_line(obj) + "\n")


def resolve_url(
    url: str, kb: KbSource, cache: UrlCache | None = None
) -> EntityRecord | None:
    """Normalize, consult the cache, then the KB; never raises on a mere miss."""
    normalized = normalize_wiki_url(url)
    if cache is not None:
        cached = cache.get(normalized)
        if UrlCache.is_hit(cached):
            return cached
    record = kb.lookup(normalized)
    if cache is not None:
        cache.put(normalized, record)
    return record


@dataclass
class SnapshotBuildReport:
    resolved: int
    unresolved: tuple[str, ...]


def build_snapshot(
    urls: Iterable[str],
    kb: KbSource,
    langs: Iterable[str],
    version: str,
    out_path: str,
    cache: UrlCache | None = None,
    unresolved_path: str | None = None,
) -> tuple[KbSnapshot, SnapshotBuildReport]:
    """Resolve every URL once and persist the result as an offline snapshot.

    Unresolvable URLs go to a sidecar report instead of failing the build;
    a KB outage still raises so a partial snapshot never masquerades as
    complete.
    """
    snap = KbSnapshot(version=version, langs=tuple(langs))
    unresolved: list[str] = []
    seen: set[str] = set()
    for url in urls:
        normalized = normalize_wiki_url(url)
        if normalized in seen:
            continue
        seen.add(normalized)
        record = resolve_url(normalized, kb, cache)
        if record is None:
            unresolved.append(normalized)
        else:
            snap.add(normalized, EntityRecord(qid=record.qid, labels=record.labels, source_url=normalized))
    snap.save(out_path)
    unresolved.sort()
    if unresolved_path is None:
        unresolved_path = f"{out_path}.unresolved.jsonl"
    write_jsonl(unresolved_path, ({"url": u} for u in unresolved))
    return snap, SnapshotBuildReport(resolved=len(snap.url_index), unresolved=tuple(unresolved))
