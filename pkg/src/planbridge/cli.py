"""Command-line entry point.

One binary, seven subcommands mirroring the pipeline stages:

    ingest    validate raw corpus files and write canonical JSONL
    snapshot  resolve link URLs against a live KB into an offline snapshot
    annotate  attach entity-chain plans to a corpus direction
    build     materialize a training mixture with plan transforms
    infer     drive an external model backend over built examples
    eval      score predictions against references
    stats     count things in corpus and artifact files

Every artifact-writing command also writes a manifest with the seeds,
settings, and content hashes of its inputs and outputs; manifests carry
no timestamps, so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace

from . import annotate as annotate_mod
from . import corpus as corpus_mod
from . import kb as kb_mod
from . import metrics as metrics_mod
from . import mixtures as mixtures_mod
from . import model as model_mod
from . import transforms as transforms_mod
from .config import PipelineConfig, derive_seed, load_config
from .errors import ConfigError, DataError, ToolkitError
from .jsonl import read_jsonl, write_jsonl
from .subword import load_tokenizer, truncate_to_tokens

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors must exit 1; the default argparse exit code 2 is reserved
    for data errors here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path: str, payload: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, ensure_ascii=False, sort_keys=True))


def _parse_pair(text: str) -> tuple[str, str]:
    parts = text.split("-")
    if len(parts) != 2:
        raise ConfigError(f"expected a pair like en-cs, got {text!r}")
    return parts[0], parts[1]


def _config_from_args(args) -> PipelineConfig:
    overrides = {}
    for key in ("seed", "jobs"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "snapshot", None):
        overrides["kb_snapshot"] = args.snapshot
    return load_config(getattr(args, "config", None), overrides)


def _kb_source(config: PipelineConfig, live: bool):
    if live:
        cache = None
        if config.cache_dir:
            cache = kb_mod.UrlCache(os.path.join(config.cache_dir, "kb-cache.jsonl"))
        source = kb_mod.RestKb(langs=config.languages, endpoint=config.kb_endpoint)
        return source, cache
    config.validate_paths(need_snapshot=True)
    return kb_mod.KbSnapshot.load(config.kb_snapshot), None


def _attach_plans(pair: corpus_mod.CorpusPair, plans: dict) -> corpus_mod.CorpusPair:
    examples = tuple(
        replace(ex, plan=plans[ex.doc_id]) if ex.doc_id in plans else ex
        for ex in pair.examples
    )
    return corpus_mod.CorpusPair(pair.src_lang, pair.tgt_lang, examples)


def _load_pair(
    documents_path: str,
    summaries_path: str,
    src: str,
    tgt: str,
    config: PipelineConfig,
    strict: bool = False,
    plans_path: str | None = None,
) -> corpus_mod.CorpusPair:
    docs, doc_report = corpus_mod.ingest_documents(
        documents_path,
        languages=config.languages,
        strict=strict,
        delimiter_tokens=(config.eot_token, config.eop_token),
    )
    sums, sum_report = corpus_mod.ingest_summaries(
        summaries_path, languages=config.languages, strict=strict
    )
    for name, report in (("documents", doc_report), ("summaries", sum_report)):
        if report.rejected:
            logger.warning("%s: rejected %d malformed lines", name, len(report.rejected))
    pair = corpus_mod.pair_examples(docs, sums, src, tgt)
    if plans_path:
        pair = _attach_plans(pair, annotate_mod.read_plan_sidecar(plans_path))
    return pair


# ---------------------------------------------------------------- ingest


def cmd_ingest(args, config: PipelineConfig) -> int:
    docs, doc_report = corpus_mod.ingest_documents(
        args.documents,
        languages=config.languages,
        strict=args.strict,
        delimiter_tokens=(config.eot_token, config.eop_token),
    )
    sums, sum_report = corpus_mod.ingest_summaries(
        args.summaries, languages=config.languages, strict=args.strict
    )
    pair = corpus_mod.pair_examples(docs, sums, args.src, args.tgt)
    outputs = {}
    if args.out_documents:
        corpus_mod.write_documents(args.out_documents, (ex.document for ex in pair.examples))
        outputs["documents"] = _sha256_file(args.out_documents)
    if args.out_summaries:
        corpus_mod.write_summaries(args.out_summaries, (ex.summary for ex in pair.examples))
        outputs["summaries"] = _sha256_file(args.out_summaries)
    summary = {
        "command": "ingest",
        "pair": f"{args.src}-{args.tgt}",
        "examples": len(pair),
        "rejected_documents": [
            {"line": m.line_no, "cause": m.cause} for m in doc_report.rejected
        ],
        "rejected_summaries": [
            {"line": m.line_no, "cause": m.cause} for m in sum_report.rejected
        ],
        "outputs": outputs,
        "seed": config.seed,
    }
    if args.manifest:
        _write_manifest(args.manifest, summary)
    _emit(
        {
            "command": "ingest",
            "examples": len(pair),
            "rejected": len(doc_report.rejected) + len(sum_report.rejected),
        }
    )
    return 0


# ---------------------------------------------------------------- snapshot


def _urls_from_summaries(path: str) -> list[str]:
    sums, _ = corpus_mod.ingest_summaries(path)
    urls = []
    for summary in sums:
        urls.extend(link.url for link in summary.links)
    return urls


def cmd_snapshot(args, config: PipelineConfig) -> int:
    urls: list[str] = []
    for path in args.summaries or []:
        urls.extend(_urls_from_summaries(path))
    if args.urls:
        urls.extend(
            line.strip()
            for line in open(args.urls, "r", encoding="utf-8")
            if line.strip()
        )
    if not urls and not args.allow_empty:
        raise ConfigError("no URLs to resolve; pass --summaries and/or --urls")
    source, cache = _kb_source(config, live=True)
    snap, report = kb_mod.build_snapshot(
        urls,
        source,
        langs=config.languages,
        version=args.version,
        out_path=args.out,
        cache=cache,
        unresolved_path=args.unresolved,
    )
    manifest = {
        "command": "snapshot",
        "version": args.version,
        "langs": list(config.languages),
        "resolved": report.resolved,
        "unresolved": len(report.unresolved),
        "output_hash": _sha256_file(args.out),
        "seed": config.seed,
    }
    if args.manifest:
        _write_manifest(args.manifest, manifest)
    _emit({"command": "snapshot", "resolved": report.resolved, "unresolved": len(report.unresolved)})
    return 0


# ---------------------------------------------------------------- annotate


def cmd_annotate(args, config: PipelineConfig) -> int:
    source, cache = _kb_source(config, live=args.live)
    pair = _load_pair(args.documents, args.summaries, args.src, args.tgt, config, args.strict)
    variant = annotate_mod.PlanVariant.parse(args.variant)
    annotated, gaps = annotate_mod.annotate_pair(
        pair,
        source,
        variant,
        cache=cache,
        fallback_langs=config.fallback_langs,
        pronunciation_patterns=config.pronunciation_patterns,
        jobs=config.jobs,
    )
    plans = {ex.doc_id: ex.plan for ex in annotated.examples if ex.plan is not None}
    annotate_mod.write_plan_sidecar(args.out_plans, plans)
    outputs = {"plans": _sha256_file(args.out_plans)}
    if args.out_gaps:
        annotate_mod.write_gap_report(args.out_gaps, gaps)
        outputs["gaps"] = _sha256_file(args.out_gaps)
    fraction = len(gaps) / len(pair) if len(pair) else 0.0
    manifest = {
        "command": "annotate",
        "pair": f"{args.src}-{args.tgt}",
        "variant": variant.value,
        "examples": len(pair),
        "plans": len(plans),
        "gaps": len(gaps),
        "gap_fraction": fraction,
        "outputs": outputs,
        "seed": config.seed,
    }
    if args.manifest:
        _write_manifest(args.manifest, manifest)
    _emit(
        {
            "command": "annotate",
            "examples": len(pair),
            "plans": len(plans),
            "gaps": len(gaps),
            "gap_fraction": round(fraction, 6),
        }
    )
    return 0


# ---------------------------------------------------------------- build


def _pair_files(data_dir: str, src: str, tgt: str, split: str) -> dict[str, str]:
    base = os.path.join(data_dir, f"{src}-{tgt}")
    return {
        "documents": os.path.join(base, f"{split}.documents.jsonl"),
        "summaries": os.path.join(base, f"{split}.summaries.jsonl"),
        "plans": os.path.join(base, f"{split}.plans.jsonl"),
    }


def _load_split(
    data_dir: str, src: str, tgt: str, split: str, config: PipelineConfig, strict: bool
) -> corpus_mod.CorpusPair | None:
    paths = _pair_files(data_dir, src, tgt, split)
    if not (os.path.exists(paths["documents"]) and os.path.exists(paths["summaries"])):
        return None
    plans_path = paths["plans"] if os.path.exists(paths["plans"]) else None
    return _load_pair(
        paths["documents"], paths["summaries"], src, tgt, config, strict, plans_path
    )


def _splitset_with(src: str, tgt: str, split: str, pair: corpus_mod.CorpusPair):
    empty = corpus_mod.CorpusPair(src, tgt, ())
    parts = {"train": empty, "validation": empty, "test": empty}
    parts[split] = pair
    return corpus_mod.SplitSet(**parts)


def _candidate_pairs(task: str, holdout: str | None, langs) -> list[tuple[str, str]]:
    others = [l for l in sorted(langs) if l != "en"]
    if task == "en2all":
        return [("en", "en")] + [("en", t) for t in others]
    if task == "all2en":
        return [("en", "en")] + [(s, "en") for s in others]
    if task == "zeroshot":
        if holdout is None:
            raise ConfigError("--task zeroshot requires --holdout")
        return (
            [("en", "en"), (holdout, holdout)]
            + [("en", t) for t in others if t != holdout]
        )
    raise ConfigError(f"unknown task {task!r}")


def cmd_build(args, config: PipelineConfig) -> int:
    if args.task == "carve":
        return _cmd_build_carve(args, config)
    datasets = {}
    gap_counts: dict[str, int] = {}
    for src, tgt in _candidate_pairs(args.task, args.holdout, config.languages):
        pair = _load_split(args.data_dir, src, tgt, args.split, config, args.strict)
        if pair is None:
            continue
        if args.filtered:
            pair, gap_report = annotate_mod.build_filtered_corpus(pair)
            gap_counts[f"{src}-{tgt}"] = len(gap_report.gaps)
        datasets[(src, tgt)] = _splitset_with(src, tgt, args.split, pair)

    if args.task == "en2all":
        spec, missing = mixtures_mod.build_en_to_all(
            config.languages, datasets, split=args.split, strict=args.strict
        )
    elif args.task == "all2en":
        spec, missing = mixtures_mod.build_all_to_en(
            config.languages, datasets, split=args.split, strict=args.strict
        )
    else:
        spec, missing = mixtures_mod.build_zero_shot(
            args.holdout, config.languages, datasets, split=args.split, strict=args.strict
        )
    for pair in missing:
        logger.warning("dataset not present, skipping term: %s->%s", *pair)

    assembled, manifest = mixtures_mod.assemble_mixture(spec, datasets)
    variant = annotate_mod.PlanVariant.parse(args.variant)
    markup = config.markup()
    shuffle_seed = config.stage_seed("shuffle")
    corrupt_seed = config.stage_seed("corrupt")

    def transform(plan, doc_id):
        if plan is None:
            return None
        out = annotate_mod.project_variant(plan, variant)
        if args.shuffle and out.entities:
            out = transforms_mod.shuffle_plan(out, derive_seed(shuffle_seed, doc_id))
        if args.corrupt is not None:
            out = transforms_mod.corrupt_plan(out, args.corrupt, derive_seed(corrupt_seed, doc_id))
        if args.length:
            out = transforms_mod.attach_length(out)
        return out

    tokenizer = None
    if args.truncate_input is not None:
        tokenizer = load_tokenizer(config.tokenizer_kind, config.tokenizer_model)

    def records():
        for item in assembled:
            ex = item.example
            plan = transform(ex.plan, ex.doc_id)
            input_text = corpus_mod.serialize_input(
                ex.document, item.src, item.tgt, config.eot_token, config.eop_token
            )
            if tokenizer is not None:
                input_text = truncate_to_tokens(input_text, args.truncate_input, tokenizer)
            target = transforms_mod.encode_target(
                plan if plan is not None else annotate_mod.ContentPlan(variant=variant),
                ex.summary.text,
                markup,
            ).text
            yield {
                "doc_id": ex.doc_id,
                "src": item.src,
                "tgt": item.tgt,
                "input": input_text,
                "target": target,
                "has_plan": plan is not None,
                "variant": variant.value,
            }

    out_examples = args.out + ".examples.jsonl"
    count = write_jsonl(out_examples, records())
    build_manifest = {
        "command": "build",
        "task": args.task,
        "split": args.split,
        "holdout": args.holdout,
        "variant": variant.value,
        "shuffle": bool(args.shuffle),
        "corrupt": args.corrupt,
        "length": bool(args.length),
        "filtered": bool(args.filtered),
        "filtered_gaps": gap_counts,
        "mixture": manifest.to_obj(),
        "missing": [list(p) for p in missing],
        "examples": count,
        "output_hash": _sha256_file(out_examples),
        "seed": config.seed,
        "stage_seeds": {"shuffle": shuffle_seed, "corrupt": corrupt_seed},
    }
    _write_manifest(args.out + ".manifest.json", build_manifest)
    _emit(
        {
            "command": "build",
            "task": args.task,
            "examples": count,
            "terms": len(manifest.term_counts),
            "output": out_examples,
        }
    )
    return 0


def _cmd_build_carve(args, config: PipelineConfig) -> int:
    if args.pair is None or args.carve is None:
        raise ConfigError("--task carve requires --pair and --carve")
    src, tgt = _parse_pair(args.pair)
    pair = _load_split(args.data_dir, src, tgt, args.split, config, args.strict)
    if pair is None:
        raise ConfigError(
            f"no {args.split} files for {src}-{tgt} under {args.data_dir}"
        )
    head, tail = mixtures_mod.carve_validation(pair, args.carve)
    out_dir = args.out
    counts = {}
    for name, part in (("validation", head), ("test", tail)):
        paths = _pair_files(out_dir, src, tgt, name)
        corpus_mod.write_documents(paths["documents"], (ex.document for ex in part.examples))
        corpus_mod.write_summaries(paths["summaries"], (ex.summary for ex in part.examples))
        plans = {ex.doc_id: ex.plan for ex in part.examples if ex.plan is not None}
        if plans:
            annotate_mod.write_plan_sidecar(paths["plans"], plans)
        counts[name] = len(part)
    _write_manifest(
        os.path.join(out_dir, f"{src}-{tgt}", "carve.manifest.json"),
        {
            "command": "build",
            "task": "carve",
            "pair": f"{src}-{tgt}",
            "from_split": args.split,
            "carve": args.carve,
            "counts": counts,
            "seed": config.seed,
        },
    )
    _emit({"command": "build", "task": "carve", **counts})
    return 0


# ---------------------------------------------------------------- infer


def _backend_from_args(args, config: PipelineConfig) -> model_mod.ModelBackend:
    if args.backend == "echo":
        return model_mod.EchoBackend()
    if args.backend == "http":
        endpoint = args.endpoint or config.model_endpoint
        if not endpoint:
            raise ConfigError("http backend needs --endpoint or MODEL_ENDPOINT")
        return model_mod.HttpBackend(endpoint)
    if args.backend == "subprocess":
        if not args.cmd:
            raise ConfigError("subprocess backend needs --cmd")
        return model_mod.SubprocessBackend(args.cmd)
    raise ConfigError(f"unknown backend {args.backend!r}")


def _oracle_prefix(target: str, summary_mark: str) -> str:
    idx = target.find(summary_mark)
    if idx < 0:
        raise DataError("target has no summary marker; cannot build an oracle prefix")
    return target[: idx + len(summary_mark)]


def cmd_infer(args, config: PipelineConfig) -> int:
    markup = config.markup()
    items = []
    for obj in read_jsonl(args.examples):
        request = model_mod.GenerationRequest(
            input_text=obj["input"],
            forced_prefix=(
                _oracle_prefix(obj["target"], markup.summary_mark) if args.oracle else None
            ),
            max_output_tokens=args.max_tokens,
        )
        items.append((obj["doc_id"], request))
    backend = _backend_from_args(args, config)
    summary = model_mod.run_inference(
        items,
        backend,
        args.out,
        jobs=config.jobs,
        failures_path=args.failures,
    )
    manifest = {
        "command": "infer",
        "backend": backend.name,
        "backend_version": backend.version,
        "oracle": bool(args.oracle),
        "requests": len(items),
        "completed": summary.completed,
        "skipped": summary.skipped,
        "failed": len(summary.failures),
        "output_hash": _sha256_file(args.out),
        "seed": config.seed,
    }
    if args.manifest:
        _write_manifest(args.manifest, manifest)
    _emit(
        {
            "command": "infer",
            "completed": summary.completed,
            "skipped": summary.skipped,
            "failed": len(summary.failures),
        }
    )
    return 0 if not summary.failures else 3


# ---------------------------------------------------------------- eval


def _load_predictions_file(path: str) -> dict[str, str]:
    preds = {}
    for obj in read_jsonl(path):
        doc_id = obj["doc_id"]
        if doc_id in preds:
            raise DataError(f"{path}: duplicate prediction for {doc_id!r}")
        preds[doc_id] = obj["output"]
    return preds


def cmd_eval(args, config: PipelineConfig) -> int:
    src, tgt = _parse_pair(args.pair)
    tokenizer = load_tokenizer(config.tokenizer_kind, config.tokenizer_model)
    pair = _load_pair(
        args.documents, args.summaries, src, tgt, config, args.strict, args.plans
    )
    markup = config.markup()

    if args.significance:
        path_a, path_b = args.significance
        scores_a = metrics_mod.example_scores(
            _load_predictions_file(path_a), pair, tokenizer, args.metric, markup
        )
        scores_b = metrics_mod.example_scores(
            _load_predictions_file(path_b), pair, tokenizer, args.metric, markup
        )
        result = metrics_mod.paired_bootstrap(
            scores_a,
            scores_b,
            resamples=args.resamples,
            alpha=args.alpha,
            seed=config.stage_seed("bootstrap"),
        )
        _emit(
            {
                "command": "eval",
                "mode": "significance",
                "metric": args.metric,
                "p_value": result.p_value,
                "significant": result.significant,
                "alpha": result.alpha,
                "resamples": result.resamples,
            }
        )
        return 0

    scorer = None
    if args.xnli:
        endpoint = config.nli_endpoint
        if not endpoint:
            raise ConfigError("--xnli needs NLI_ENDPOINT or nli_endpoint in config")
        scorer = metrics_mod.HttpEntailmentScorer(endpoint)
    predictions = _load_predictions_file(args.predictions)
    report = metrics_mod.evaluate_run(
        {(src, tgt): predictions},
        {(src, tgt): pair},
        tokenizer,
        markup=markup,
        scorer=scorer,
        plan_f1_mode=args.plan_f1_mode,
    )
    payload = report.to_obj()
    if args.report:
        _write_manifest(args.report, payload)
    _emit({"command": "eval", **payload})
    return 0


# ---------------------------------------------------------------- stats


def cmd_stats(args, config: PipelineConfig) -> int:
    payload: dict = {"command": "stats"}
    if args.documents:
        docs, report = corpus_mod.ingest_documents(args.documents, languages=config.languages)
        payload["documents"] = {
            "count": len(docs),
            "rejected": len(report.rejected),
            "sections_mean": (
                sum(len(d.sections) for d in docs) / len(docs) if docs else 0.0
            ),
        }
    if args.summaries:
        sums, report = corpus_mod.ingest_summaries(args.summaries, languages=config.languages)
        payload["summaries"] = {
            "count": len(sums),
            "rejected": len(report.rejected),
            "links_mean": (sum(len(s.links) for s in sums) / len(sums) if sums else 0.0),
        }
    if args.plans:
        plans = annotate_mod.read_plan_sidecar(args.plans)
        lengths = [len(p) for p in plans.values()]
        payload["plans"] = {
            "count": len(plans),
            "entities_mean": sum(lengths) / len(lengths) if lengths else 0.0,
        }
    if args.examples:
        n = 0
        with_plan = 0
        for obj in read_jsonl(args.examples):
            n += 1
            with_plan += 1 if obj.get("has_plan") else 0
        payload["examples"] = {"count": n, "with_plan": with_plan}
    if len(payload) == 1:
        raise ConfigError("nothing to count; pass at least one input file")
    _emit(payload)
    return 0


# ---------------------------------------------------------------- parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="planbridge", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--seed", type=int, help="master seed for all randomized stages")
    parser.add_argument("--jobs", type=int, help="parallel workers where supported")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", parents=[], help="validate and canonicalize corpus files")
    p.add_argument("--documents", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out-documents")
    p.add_argument("--out-summaries")
    p.add_argument("--manifest")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("snapshot", help="build an offline KB snapshot from link URLs")
    p.add_argument("--summaries", action="append", help="summary JSONL to harvest URLs from")
    p.add_argument("--urls", help="plain file with one URL per line")
    p.add_argument("--out", required=True)
    p.add_argument("--unresolved", help="sidecar report path (default <out>.unresolved.jsonl)")
    p.add_argument("--version", default="snapshot-1")
    p.add_argument("--manifest")
    p.add_argument("--allow-empty", action="store_true")
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("annotate", help="attach entity-chain plans to a corpus direction")
    p.add_argument("--documents", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--snapshot", help="KB snapshot path (overrides config)")
    p.add_argument("--live", action="store_true", help="use the live KB endpoint")
    p.add_argument("--variant", default="mixed", choices=["mixed", "src", "tgt"])
    p.add_argument("--out-plans", required=True)
    p.add_argument("--out-gaps")
    p.add_argument("--manifest")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("build", help="materialize a training mixture")
    p.add_argument("--task", required=True, choices=["en2all", "all2en", "zeroshot", "carve"])
    p.add_argument("--holdout", help="held-out target language for zeroshot")
    p.add_argument("--split", default="train", choices=["train", "validation", "test"])
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out", required=True, help="output path prefix (or directory for carve)")
    p.add_argument("--filtered", action="store_true", help="keep only plan-bearing examples")
    p.add_argument("--variant", default="mixed", choices=["mixed", "src", "tgt"])
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--corrupt", type=float, help="fraction of plan entities to drop")
    p.add_argument("--length", action="store_true", help="prepend LEN=k to each plan")
    p.add_argument("--truncate-input", type=int, help="token limit for serialized inputs")
    p.add_argument("--pair", help="carve only: direction like en-cs")
    p.add_argument("--carve", type=int, help="carve only: validation size k")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("infer", help="run an external backend over built examples")
    p.add_argument("--examples", required=True)
    p.add_argument("--backend", default="echo", choices=["echo", "http", "subprocess"])
    p.add_argument("--endpoint", help="http backend URL (or MODEL_ENDPOINT)")
    p.add_argument("--cmd", nargs=argparse.REMAINDER, help="subprocess argv")
    p.add_argument("--oracle", action="store_true", help="force the gold plan section as prefix")
    p.add_argument("--max-tokens", type=int, default=model_mod.DEFAULT_MAX_OUTPUT_TOKENS)
    p.add_argument("--out", required=True)
    p.add_argument("--failures")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score predictions against references")
    p.add_argument("--pair", required=True, help="direction like en-cs")
    p.add_argument("--documents", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--plans")
    p.add_argument("--predictions")
    p.add_argument("--report")
    p.add_argument("--xnli", action="store_true", help="also score entailment via NLI_ENDPOINT")
    p.add_argument("--plan-f1-mode", default="decoded", choices=["decoded", "summary"])
    p.add_argument("--significance", nargs=2, metavar=("PRED_A", "PRED_B"))
    p.add_argument("--metric", default="rougeL", choices=["rouge1", "rouge2", "rougeL", "plan_f1"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--resamples", type=int, default=10000)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="count examples, links, and plans in files")
    p.add_argument("--documents")
    p.add_argument("--summaries")
    p.add_argument("--plans")
    p.add_argument("--examples")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        config = _config_from_args(args)
        if args.subcommand == "eval" and not args.significance and not args.predictions:
            raise ConfigError("eval needs --predictions (or --significance A B)")
        return args.func(args, config)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        # missing or unreadable input files count as data errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
