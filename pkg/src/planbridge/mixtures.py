"""Training-mixture algebra over per-direction datasets.

A mixture is a plain union of per-direction terms with provenance, not a
sampling schedule. Three builders cover the standard setups: English
sources to every target, every source to English, and the zero-shot
setup where one cross-lingual direction is held out entirely while its
target keeps monolingual data. Assembly re-checks every single example
against the exclusion list so a held-out direction can never leak in
through a mislabeled file.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping

from .corpus import CorpusPair, Example, SplitSet, validate_lang_code
from .errors import HoldoutViolationError, MissingDatasetError, TooSmallError

Pair = tuple[str, str]


@dataclass(frozen=True)
class MixtureTerm:
    src: str
    tgt: str
    split: str = "train"

    def __post_init__(self):
        validate_lang_code(self.src)
        validate_lang_code(self.tgt)
        if self.split not in ("train", "validation", "test"):
            raise ValueError(f"unknown split {self.split!r}")

    @property
    def pair(self) -> Pair:
        return (self.src, self.tgt)


@dataclass(frozen=True)
class MixtureSpec:
    name: str
    terms: tuple[MixtureTerm, ...]
    excluded_pairs: tuple[Pair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(
            self, "excluded_pairs", tuple((s, t) for s, t in self.excluded_pairs)
        )
        if not self.terms:
            raise ValueError(f"mixture {self.name!r} has no terms")
        excluded = set(self.excluded_pairs)
        for term in self.terms:
            if term.pair in excluded:
                raise ValueError(
                    f"mixture {self.name!r} both includes and excludes {term.src}->{term.tgt}"
                )

    def pairs(self) -> tuple[Pair, ...]:
        return tuple(t.pair for t in self.terms)


def _require_en_dataset(datasets: Mapping[Pair, SplitSet]) -> None:
    if ("en", "en") not in datasets:
        raise MissingDatasetError([("en", "en")])


def build_en_to_all(
    langs: Iterable[str],
    datasets: Mapping[Pair, SplitSet],
    split: str = "train",
    strict: bool = False,
) -> tuple[MixtureSpec, list[Pair]]:
    """English monolingual data plus every available English-to-target direction.

    Directions the corpus simply does not have are reported back (or fatal
    under strict), never silently fabricated.
    """
    langs = sorted(set(langs))
    if "en" not in langs:
        raise ValueError("language set must contain 'en'")
    _require_en_dataset(datasets)
    terms = [MixtureTerm("en", "en", split)]
    missing: list[Pair] = []
    for tgt in langs:
        if tgt == "en":
            continue
        if ("en", tgt) in datasets:
            terms.append(MixtureTerm("en", tgt, split))
        else:
            missing.append(("en", tgt))
    if strict and missing:
        raise MissingDatasetError(missing)
    return MixtureSpec(name="en2all", terms=tuple(terms)), missing


def build_all_to_en(
    langs: Iterable[str],
    datasets: Mapping[Pair, SplitSet],
    split: str = "train",
    strict: bool = False,
) -> tuple[MixtureSpec, list[Pair]]:
    """English monolingual data plus every available source-to-English direction."""
    langs = sorted(set(langs))
    if "en" not in langs:
        raise ValueError("language set must contain 'en'")
    _require_en_dataset(datasets)
    terms = [MixtureTerm("en", "en", split)]
    missing: list[Pair] = []
    for src in langs:
        if src == "en":
            continue
        if (src, "en") in datasets:
            terms.append(MixtureTerm(src, "en", split))
        else:
            missing.append((src, "en"))
    if strict and missing:
        raise MissingDatasetError(missing)
    return MixtureSpec(name="all2en", terms=tuple(terms)), missing


def build_zero_shot(
    holdout_tgt: str,
    langs: Iterable[str],
    datasets: Mapping[Pair, SplitSet],
    split: str = "train",
    strict: bool = False,
) -> tuple[MixtureSpec, list[Pair]]:
    """Hold out English-to-target entirely; keep the target's monolingual data.

    Terms: English monolingual, holdout-language monolingual, and English
    into every other language. The held-out direction goes on the exclusion
    list that assembly enforces example by example.
    """
    validate_lang_code(holdout_tgt)
    if holdout_tgt == "en":
        raise ValueError("cannot hold out en->en; pick a non-English target")
    langs = sorted(set(langs))
    if "en" not in langs or holdout_tgt not in langs:
        raise ValueError(f"language set must contain 'en' and {holdout_tgt!r}")
    _require_en_dataset(datasets)
    terms = [MixtureTerm("en", "en", split)]
    missing: list[Pair] = []
    if (holdout_tgt, holdout_tgt) in datasets:
        terms.append(MixtureTerm(holdout_tgt, holdout_tgt, split))
    else:
        missing.append((holdout_tgt, holdout_tgt))
    for tgt in langs:
        if tgt in ("en", holdout_tgt):
            continue
        if ("en", tgt) in datasets:
            terms.append(MixtureTerm("en", tgt, split))
        else:
            missing.append(("en", tgt))
    if strict and missing:
        raise MissingDatasetError(missing)
    spec = MixtureSpec(
        name=f"zeroshot-{holdout_tgt}",
        terms=tuple(terms),
        excluded_pairs=(("en", holdout_tgt),),
    )
    return spec, missing


@dataclass(frozen=True)
class AssembledExample:
    src: str
    tgt: str
    split: str
    example: Example

    @property
    def doc_id(self) -> str:
        return self.example.doc_id


@dataclass(frozen=True)
class MixtureManifest:
    name: str
    term_counts: tuple[tuple[MixtureTerm, int], ...]
    excluded: tuple[Pair, ...]
    total: int
    input_hash: str

    def __post_init__(self):
        if self.total != sum(c for _, c in self.term_counts):
            raise ValueError("manifest total does not equal the sum of term counts")

    def to_obj(self) -> dict:
        return {
            "name": self.name,
            "terms": [
                {"src": t.src, "tgt": t.tgt, "split": t.split, "count": c}
                for t, c in self.term_counts
            ],
            "excluded": [list(p) for p in self.excluded],
            "total": self.total,
            "input_hash": self.input_hash,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "MixtureManifest":
        return cls(
            name=obj["name"],
            term_counts=tuple(
                (MixtureTerm(t["src"], t["tgt"], t["split"]), t["count"])
                for t in obj["terms"]
            ),
            excluded=tuple((s, t) for s, t in obj["excluded"]),
            total=obj["total"],
            input_hash=obj["input_hash"],
        )


def assemble_mixture(
    spec: MixtureSpec, datasets: Mapping[Pair, SplitSet]
) -> tuple[list[AssembledExample], MixtureManifest]:
    """Materialize a mixture: term order, then stored file order within a term.

    Every example's own language pair is checked against the exclusion
    list, so an en->cs example hiding inside a mislabeled dataset fails
    the build instead of contaminating a zero-shot run.
    """
    excluded = set(spec.excluded_pairs)
    out: list[AssembledExample] = []
    term_counts: list[tuple[MixtureTerm, int]] = []
    hasher = hashlib.sha256()
    missing = [t.pair for t in spec.terms if t.pair not in datasets]
    if missing:
        raise MissingDatasetError(missing)
    for term in spec.terms:
        pair: CorpusPair = datasets[term.pair].split(term.split)
        count = 0
        for ex in pair.examples:
            ex_pair = (ex.document.lang, ex.summary.lang)
            if ex_pair in excluded:
                raise HoldoutViolationError(ex_pair[0], ex_pair[1], ex.doc_id)
            out.append(AssembledExample(src=term.src, tgt=term.tgt, split=term.split, example=ex))
            hasher.update(
                f"{term.src}\t{term.tgt}\t{term.split}\t{ex.doc_id}\n".encode("utf-8")
            )
            count += 1
        term_counts.append((term, count))
    manifest = MixtureManifest(
        name=spec.name,
        term_counts=tuple(term_counts),
        excluded=spec.excluded_pairs,
        total=len(out),
        input_hash=hasher.hexdigest(),
    )
    return out, manifest


def carve_validation(pair: CorpusPair, k: int) -> tuple[CorpusPair, CorpusPair]:
    """First k examples in stored order become validation, the rest test."""
    if k < 0:
        raise ValueError(f"carve size must be non-negative, got {k}")
    if len(pair.examples) <= k:
        raise TooSmallError(needed=k, available=len(pair.examples))
    head = CorpusPair(pair.src_lang, pair.tgt_lang, pair.examples[:k])
    tail = CorpusPair(pair.src_lang, pair.tgt_lang, pair.examples[k:])
    return head, tail
