"""Boundary to external sequence models.

The toolkit never runs a model in-process. Backends are HTTP services,
subprocesses speaking line-delimited JSON, or test stubs; all of them
take a GenerationRequest and return text. Two prompt builders live here:
the forced-prefix request used for oracle decoding (the gold plan is
fixed and only the summary is generated) and the one-shot instruction
prompt for instruction-following models.
"""

from __future__ import annotations

import json
import logging
import os
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .annotate import ContentPlan
from .errors import BackendFailureError
from .jsonl import read_jsonl, write_jsonl
from .subword import SubwordTokenizer, truncate_to_tokens
from .transforms import DEFAULT_MARKUP, PlanMarkup, encode_plan_section

logger = logging.getLogger(__name__)

DEFAULT_MAX_OUTPUT_TOKENS = 256
DEFAULT_PROMPT_DOC_TOKENS = 2000

# English names for the one-shot instruction line.
LANGUAGE_NAMES = {
    "cs": "Czech",
    "de": "German",
    "en": "English",
    "es": "Spanish",
    "fr": "French",
    "it": "Italian",
    "ja": "Japanese",
    "nl": "Dutch",
    "pl": "Polish",
    "pt": "Portuguese",
    "ru": "Russian",
    "zh": "Chinese",
}


@dataclass(frozen=True)
class GenerationRequest:
    input_text: str
    forced_prefix: str | None = None
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self):
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.forced_prefix is not None and not self.forced_prefix:
            raise ValueError("forced_prefix must be None or non-empty")


def build_oracle_request(
    doc_input: str,
    gold_plan: ContentPlan,
    markup: PlanMarkup = DEFAULT_MARKUP,
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
) -> GenerationRequest:
    """Force the gold plan as the output prefix; the model adds only the summary."""
    prefix = encode_plan_section(gold_plan, markup)
    return GenerationRequest(
        input_text=doc_input,
        forced_prefix=prefix,
        max_output_tokens=max_output_tokens,
    )


def language_name(code: str) -> str:
    try:
        return LANGUAGE_NAMES[code]
    except KeyError:
        raise ValueError(f"no English name on record for language {code!r}") from None


def build_one_shot_prompt(
    example_doc: str,
    example_summary: str,
    query_doc: str,
    src: str,
    tgt: str,
    tokenizer: SubwordTokenizer,
    limit: int = DEFAULT_PROMPT_DOC_TOKENS,
) -> str:
    """Instruction, one worked example, then the query document.

    Both documents are truncated to the token limit; summaries are not.
    """
    if limit <= 0:
        raise ValueError("token limit must be positive")
    if not query_doc.strip():
        raise ValueError("query document is empty")
    example_doc = truncate_to_tokens(example_doc, limit, tokenizer)
    query_doc = truncate_to_tokens(query_doc, limit, tokenizer)
    return (
        f"From a document in {language_name(src)}, "
        f"write a summary in {language_name(tgt)}.\n"
        "\n"
        "(1)\n"
        f"Document: {example_doc}\n"
        f"Summary: {example_summary}\n"
        "\n"
        "(2)\n"
        f"Document: {query_doc}\n"
        "Summary:"
    )


class ModelBackend:
    """Interface stub; concrete backends override generate."""

    name = "abstract"
    version = "0"

    def generate(self, request: GenerationRequest) -> str:
        raise NotImplementedError


class EchoBackend(ModelBackend):
    """Test stub honoring the prefix contract; output is prefix plus input."""

    name = "echo"
    version = "1"

    def generate(self, request: GenerationRequest) -> str:
        if request.forced_prefix is not None:
            return f"{request.forced_prefix} {request.input_text}"
        return request.input_text


class HttpBackend(ModelBackend):
    """POSTs requests to a generation service."""

    name = "http"

    def __init__(self, endpoint: str, timeout: float = 300.0):
        self.endpoint = endpoint.rstrip("/")
        self.version = self.endpoint
        self._timeout = timeout

    def generate(self, request: GenerationRequest) -> str:
        import requests

        try:
            resp = requests.post(
                self.endpoint + "/generate",
                json={
                    "input": request.input_text,
                    "forced_prefix": request.forced_prefix,
                    "max_tokens": request.max_output_tokens,
                },
                timeout=self._timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            return str(payload["output"])
        except Exception as exc:
            raise BackendFailureError(f"generation endpoint failed: {exc}") from exc


class SubprocessBackend(ModelBackend):
    """Talks line-delimited JSON to a child process: one request line, one reply line."""

    name = "subprocess"

    def __init__(self, argv: Sequence[str]):
        self.argv = list(argv)
        self.version = " ".join(self.argv)
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def generate(self, request: GenerationRequest) -> str:
        line = json.dumps(
            {
                "input": request.input_text,
                "forced_prefix": request.forced_prefix,
                "max_tokens": request.max_output_tokens,
            },
            ensure_ascii=False,
        )
        with self._lock:
            try:
                proc = self._ensure()
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                reply = proc.stdout.readline()
            except OSError as exc:
                raise BackendFailureError(f"subprocess backend broke: {exc}") from exc
        if not reply:
            raise BackendFailureError("subprocess backend closed its output")
        try:
            return str(json.loads(reply)["output"])
        except (ValueError, KeyError) as exc:
            raise BackendFailureError(f"bad reply line from subprocess: {reply!r}") from exc

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


@dataclass
class InferenceSummary:
    completed: int
    skipped: int
    failures: tuple[tuple[str, str], ...]


def load_predictions(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        return {}
    return {obj["doc_id"]: obj["output"] for obj in read_jsonl(path)}


def run_inference(
    items: Sequence[tuple[str, GenerationRequest]],
    backend: ModelBackend,
    out_path: str,
    *,
    jobs: int = 1,
    failures_path: str | None = None,
) -> InferenceSummary:
    """Generate one output per request into a predictions file, resumably.

    Items already present in the output file are skipped, so a rerun after
    a partial failure completes only the gaps. Failures (backend errors or
    a violated forced prefix) are recorded per doc_id and never written as
    predictions. Output order follows request order regardless of jobs.
    """
    ids = [doc_id for doc_id, _ in items]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate doc_id in inference batch")
    existing = load_predictions(out_path)
    todo = [(doc_id, req) for doc_id, req in items if doc_id not in existing]

    def one(task: tuple[str, GenerationRequest]) -> tuple[str, str | None, str | None]:
        doc_id, request = task
        try:
            output = backend.generate(request)
        except BackendFailureError as exc:
            return doc_id, None, str(exc)
        if request.forced_prefix is not None and not output.startswith(request.forced_prefix):
            return doc_id, None, "backend did not honor forced_prefix"
        return doc_id, output, None

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, todo))
    else:
        results = [one(task) for task in todo]

    failures: list[tuple[str, str]] = []
    completed = 0
    for doc_id, output, error in results:
        if error is not None:
            failures.append((doc_id, error))
            logger.warning("inference failed for %s: %s", doc_id, error)
        else:
            existing[doc_id] = output
            completed += 1

    write_jsonl(
        out_path,
        (
            {"doc_id": doc_id, "output": existing[doc_id]}
            for doc_id in ids
            if doc_id in existing
        ),
    )
    if failures_path is not None:
        write_jsonl(failures_path, ({"doc_id": d, "error": e} for d, e in failures))
    return InferenceSummary(
        completed=completed,
        skipped=len(items) - len(todo),
        failures=tuple(failures),
    )
