"""Tokenization used for input truncation and overlap metrics.

Overlap metrics are only comparable between runs that used the same
tokenizer, so each tokenizer carries a name that evaluation reports echo.
The built-in word-boundary tokenizer needs no model file and keeps the
whole pipeline runnable offline; its scores are not comparable to scores
computed with an external subword vocabulary.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .errors import ConfigError

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _normalize_piece(piece: str) -> str:
    return unicodedata.normalize("NFKC", piece).casefold()


@runtime_checkable
class SubwordTokenizer(Protocol):
    """Anything that can split text into pieces and locate them in the original."""

    name: str

    def tokenize(self, text: str) -> list[str]:
        ...

    def token_spans(self, text: str) -> list[tuple[int, int]]:
        ...


@dataclass(frozen=True)
class WordBoundaryTokenizer:
    """Deterministic fallback tokenizer: `\\w+` runs, NFKC-casefolded.

    Spans index the raw text; `tokenize` returns the normalized piece for
    each span, so the two views always have the same length.
    """

    name: str = "word-boundary"

    def token_spans(self, text: str) -> list[tuple[int, int]]:
        return [m.span() for m in _WORD_RE.finditer(text)]

    def tokenize(self, text: str) -> list[str]:
        return [_normalize_piece(text[s:e]) for s, e in self.token_spans(text)]


class SentencePieceTokenizer:
    """Wrapper around an external sentencepiece model file.

    Imported lazily: the package is an optional extra and the rest of the
    toolkit must work without it.
    """

    def __init__(self, model_path: str):
        try:
            import sentencepiece  # type: ignore[import-not-found]
        except ImportError as exc:
            raise ConfigError(
                "sentencepiece is not installed; install the 'sentencepiece' "
                "extra or use the word-boundary tokenizer"
            ) from exc
        try:
            self._sp = sentencepiece.SentencePieceProcessor(model_file=model_path)
        except (OSError, RuntimeError) as exc:
            raise ConfigError(f"cannot load sentencepiece model {model_path!r}: {exc}") from exc
        self.name = f"sentencepiece:{model_path}"

    def tokenize(self, text: str) -> list[str]:
        return list(self._sp.encode(text, out_type=str))

    def token_spans(self, text: str) -> list[tuple[int, int]]:
        proto = self._sp.encode(text, out_type="immutable_proto")
        spans = [(p.begin, p.end) for p in proto.pieces if p.end > p.begin]
        if not spans:
            return []
        # Recent releases report str indexes; older ones report utf-8 byte
        # offsets, which overshoot len(text) whenever multibyte chars exist.
        if max(end for _, end in spans) > len(text):
            byte_to_char = {}
            b = 0
            for i, ch in enumerate(text):
                byte_to_char[b] = i
                b += len(ch.encode("utf-8"))
            byte_to_char[b] = len(text)
            spans = [(byte_to_char[a], byte_to_char[e]) for a, e in spans]
        return spans


def load_tokenizer(kind: str = "word", model: str | None = None) -> SubwordTokenizer:
    if kind == "word":
        return WordBoundaryTokenizer()
    if kind == "sentencepiece":
        if not model:
            raise ConfigError("tokenizer kind 'sentencepiece' requires a model path")
        return SentencePieceTokenizer(model)
    raise ConfigError(f"unknown tokenizer kind {kind!r}")


def truncate_to_tokens(text: str, limit: int, tokenizer: SubwordTokenizer) -> str:
    """Cut text to at most `limit` tokens; the result is a prefix of the input.

    Tokens are counted as surface-bearing spans. Subword tokenizers may
    re-segment a prefix differently than the full text, so the cut point
    backs off until the result itself stays within the budget.
    """
    if limit <= 0:
        raise ValueError(f"token limit must be positive, got {limit}")
    spans = tokenizer.token_spans(text)
    if len(spans) <= limit:
        return text
    for k in range(limit, 0, -1):
        cut = text[: spans[k - 1][1]]
        if len(tokenizer.token_spans(cut)) <= limit:
            return cut
    return ""
