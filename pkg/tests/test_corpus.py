"""Corpus model: validation, serialization round trips, ingestion."""
import json

import pytest

from planbridge.corpus import (
    EOP_TOKEN,
    EOT_TOKEN,
    CorpusPair,
    Example,
    Link,
    LinkedSummary,
    Section,
    SectionedDocument,
    SplitSet,
    document_to_obj,
    ingest_documents,
    ingest_summaries,
    pair_examples,
    parse_input,
    serialize_input,
    summary_to_obj,
    validate_lang_code,
    write_documents,
    write_summaries,
)
from planbridge.errors import DataError, DuplicateDocIdError

from conftest import make_document


def test_lang_code_accepts_two_lowercase_letters():
    validate_lang_code("en")
    validate_lang_code("cs")


@pytest.mark.parametrize("code", ["", "EN", "eng", "e1", "en-US", "e"])
def test_lang_code_rejects_other_shapes(code):
    with pytest.raises(ValueError):
        validate_lang_code(code)


def test_lang_code_respects_allowed_set():
    validate_lang_code("cs", allowed=("en", "cs"))
    with pytest.raises(ValueError):
        validate_lang_code("de", allowed=("en", "cs"))


def test_link_rejects_bad_spans_and_urls():
    Link(start=0, end=3, url="https://cs.wikipedia.org/wiki/Algebra")
    with pytest.raises(ValueError):
        Link(start=3, end=3, url="https://cs.wikipedia.org/wiki/Algebra")
    with pytest.raises(ValueError):
        Link(start=-1, end=3, url="https://cs.wikipedia.org/wiki/Algebra")
    with pytest.raises(ValueError):
        Link(start=0, end=3, url="wiki/Algebra")
    with pytest.raises(ValueError):
        Link(start=0, end=3, url="ftp://cs.wikipedia.org/wiki/Algebra")


def test_section_allows_zero_paragraphs_but_not_blank_ones():
    Section(heading="H", paragraphs=())
    with pytest.raises(ValueError):
        Section(heading="H", paragraphs=("ok", ""))


def test_document_requires_a_section():
    with pytest.raises(ValueError):
        SectionedDocument(doc_id="d", lang="en", title="T", sections=())


def test_document_plain_text_joins_all_parts():
    doc = SectionedDocument(
        doc_id="d",
        lang="en",
        title="T",
        sections=(Section(heading="H", paragraphs=("p1", "p2")),),
    )
    assert doc.plain_text() == "T\nH\np1\np2"


def test_summary_links_must_be_sorted_and_disjoint():
    url = "https://cs.wikipedia.org/wiki/Algebra"
    LinkedSummary(
        doc_id="d",
        lang="cs",
        text="abcdefgh",
        links=(Link(0, 2, url), Link(2, 4, url)),
    )
    with pytest.raises(ValueError):
        LinkedSummary(
            doc_id="d",
            lang="cs",
            text="abcdefgh",
            links=(Link(2, 4, url), Link(0, 2, url)),
        )
    with pytest.raises(ValueError):
        LinkedSummary(
            doc_id="d",
            lang="cs",
            text="abcdefgh",
            links=(Link(0, 3, url), Link(2, 4, url)),
        )
    with pytest.raises(ValueError):
        LinkedSummary(doc_id="d", lang="cs", text="abc", links=(Link(0, 4, url),))


def test_example_doc_ids_must_agree():
    doc = make_document("a")
    summary = LinkedSummary(doc_id="b", lang="cs", text="x")
    with pytest.raises(ValueError):
        Example(document=doc, summary=summary)


def test_pair_rejects_wrong_language_and_duplicate_ids():
    ex = Example(
        document=make_document("a", lang="en"),
        summary=LinkedSummary(doc_id="a", lang="cs", text="x"),
    )
    CorpusPair(src_lang="en", tgt_lang="cs", examples=(ex,))
    with pytest.raises(ValueError):
        CorpusPair(src_lang="de", tgt_lang="cs", examples=(ex,))
    with pytest.raises(ValueError):
        CorpusPair(src_lang="en", tgt_lang="cs", examples=(ex, ex))


def test_split_set_requires_disjoint_ids():
    def pair(*ids):
        examples = tuple(
            Example(
                document=make_document(i, lang="en"),
                summary=LinkedSummary(doc_id=i, lang="cs", text="x"),
            )
            for i in ids
        )
        return CorpusPair(src_lang="en", tgt_lang="cs", examples=examples)

    SplitSet(train=pair("a", "b"), validation=pair("c"), test=pair("d"))
    with pytest.raises(ValueError):
        SplitSet(train=pair("a", "b"), validation=pair("a"), test=pair("d"))


SERIALIZE_CASES = [
    # single section, single paragraph
    ("en", "cs", "T", [("H", ["p one"])], "en cs T [EOT] H [EOT] p one [EOP]"),
    # two sections, mixed paragraph counts
    (
        "de",
        "en",
        "Title",
        [("A", ["x", "y"]), ("B", [])],
        "de en Title [EOT] A [EOT] x [EOP] y [EOP] B [EOT]",
    ),
]


@pytest.mark.parametrize("src,tgt,title,sections,expected", SERIALIZE_CASES)
def test_serialize_input_layout(src, tgt, title, sections, expected):
    doc = SectionedDocument(
        doc_id="d",
        lang=src,
        title=title,
        sections=tuple(Section(heading=h, paragraphs=tuple(ps)) for h, ps in sections),
    )
    assert serialize_input(doc, src, tgt) == expected


def test_parse_input_inverts_serialize():
    doc = SectionedDocument(
        doc_id="d",
        lang="en",
        title="A longer title",
        sections=(
            Section(heading="First", paragraphs=("one two", "three")),
            Section(heading="Second", paragraphs=()),
            Section(heading="Third", paragraphs=("tail paragraph",)),
        ),
    )
    line = serialize_input(doc, "en", "fr")
    src, tgt, title, sections = parse_input(line)
    assert (src, tgt) == ("en", "fr")
    assert title == doc.title
    assert sections == doc.sections


def test_parse_input_rejects_garbage():
    with pytest.raises(DataError):
        parse_input("en")
    with pytest.raises(DataError):
        parse_input("en cs no markers at all")


def test_canonical_jsonl_is_a_fixpoint(tmp_path):
    # non-canonical input: extra whitespace, reordered keys
    doc = make_document("fix", lang="en")
    obj = document_to_obj(doc)
    shuffled = {k: obj[k] for k in reversed(list(obj))}
    first = tmp_path / "first.jsonl"
    first.write_text(json.dumps(shuffled, indent=1).replace("\n", " ") + "\n", encoding="utf-8")
    docs1, _ = ingest_documents(first)
    second = tmp_path / "second.jsonl"
    write_documents(second, docs1)
    docs2, _ = ingest_documents(second)
    third = tmp_path / "third.jsonl"
    write_documents(third, docs2)
    assert second.read_bytes() == third.read_bytes()


def test_write_and_ingest_documents_round_trip(tmp_path):
    docs = [make_document(f"d{i}", lang="en", n_sections=2) for i in range(3)]
    path = tmp_path / "docs.jsonl"
    assert write_documents(path, docs) == 3
    back, report = ingest_documents(path)
    assert back == docs
    assert report.accepted == 3
    assert report.rejected == []


def test_write_and_ingest_summaries_round_trip(tmp_path):
    url = "https://cs.wikipedia.org/wiki/Algebra"
    summaries = [
        LinkedSummary(doc_id="a", lang="cs", text="algebra je obor", links=(Link(0, 7, url),)),
        LinkedSummary(doc_id="b", lang="cs", text="bez odkazu"),
    ]
    path = tmp_path / "sums.jsonl"
    write_summaries(path, summaries)
    back, report = ingest_summaries(path)
    assert back == summaries
    assert report.accepted == 2


def test_ingest_collects_malformed_lines_by_default(tmp_path):
    path = tmp_path / "docs.jsonl"
    good = json.dumps(document_to_obj(make_document("ok")), ensure_ascii=False)
    path.write_text('{"not": "a document"}\n%%%\n' + good + "\n", encoding="utf-8")
    docs, report = ingest_documents(path)
    assert [d.doc_id for d in docs] == ["ok"]
    assert sorted(m.line_no for m in report.rejected) == [1, 2]


def test_ingest_strict_raises_on_first_malformed_line(tmp_path):
    path = tmp_path / "docs.jsonl"
    path.write_text('{"not": "a document"}\n', encoding="utf-8")
    with pytest.raises(DataError):
        ingest_documents(path, strict=True)


def test_ingest_duplicate_doc_id_is_always_fatal(tmp_path):
    path = tmp_path / "docs.jsonl"
    obj = json.dumps(document_to_obj(make_document("dup")), ensure_ascii=False)
    path.write_text(obj + "\n" + obj + "\n", encoding="utf-8")
    with pytest.raises(DuplicateDocIdError):
        ingest_documents(path)


def test_ingest_rejects_document_containing_delimiter_token(tmp_path):
    doc = make_document("ok")
    obj = document_to_obj(doc)
    obj["title"] = f"evil {EOP_TOKEN} title"
    path = tmp_path / "docs.jsonl"
    path.write_text(json.dumps(obj, ensure_ascii=False) + "\n", encoding="utf-8")
    docs, report = ingest_documents(path)
    assert docs == []
    assert len(report.rejected) == 1
    assert EOP_TOKEN in report.rejected[0].cause


def test_ingest_language_filter(tmp_path):
    path = tmp_path / "docs.jsonl"
    rows = [document_to_obj(make_document("a", lang="en")), document_to_obj(make_document("b", lang="xx"))]
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n", encoding="utf-8")
    docs, report = ingest_documents(path, languages=("en", "cs"))
    assert [d.doc_id for d in docs] == ["a"]
    assert len(report.rejected) == 1


def test_pair_examples_joins_on_doc_id():
    docs = [make_document("a", lang="en"), make_document("b", lang="en")]
    sums = [
        LinkedSummary(doc_id="b", lang="cs", text="y"),
        LinkedSummary(doc_id="a", lang="cs", text="x"),
    ]
    pair = pair_examples(docs, sums, "en", "cs")
    assert [ex.doc_id for ex in pair.examples] == ["a", "b"]


def test_pair_examples_reports_missing_and_extra_ids():
    docs = [make_document("a", lang="en")]
    sums = [LinkedSummary(doc_id="b", lang="cs", text="y")]
    with pytest.raises(DataError):
        pair_examples(docs, sums, "en", "cs")


def test_summary_to_obj_key_layout():
    url = "https://cs.wikipedia.org/wiki/Algebra"
    summary = LinkedSummary(doc_id="a", lang="cs", text="algebra", links=(Link(0, 7, url),))
    obj = summary_to_obj(summary)
    assert list(obj) == ["doc_id", "lang", "text", "links"]
    assert list(obj["links"][0]) == ["start", "end", "url"]


def test_eot_and_eop_constants():
    assert EOT_TOKEN == "[EOT]"
    assert EOP_TOKEN == "[EOP]"
