"""Entity-chain content plans as a cross-lingual bridge for summarization data.

The package turns hyperlink-annotated summaries into ordered entity-chain
plans canonicalized through a knowledge base, builds multilingual training
mixtures with plan perturbations, and scores model output with subword
ROUGE, plan-entity F1, sentence-level entailment, and paired bootstrap
significance.
"""

from .annotate import (
    ContentPlan,
    PlanEntity,
    PlanGap,
    PlanVariant,
    annotate_pair,
    annotate_plan,
    build_filtered_corpus,
    extract_entity_mentions,
)
from .corpus import (
    CorpusPair,
    Example,
    LinkedSummary,
    Link,
    Section,
    SectionedDocument,
    SplitSet,
    parse_input,
    serialize_input,
)
from .kb import (
    EntityRecord,
    KbSnapshot,
    RestKb,
    UrlCache,
    build_snapshot,
    label_for,
    normalize_wiki_url,
    resolve_url,
)
from .metrics import (
    MetricReport,
    RougeScores,
    entailment_score,
    evaluate_pair,
    evaluate_run,
    paired_bootstrap,
    plan_f1,
    rouge,
)
from .mixtures import (
    MixtureManifest,
    MixtureSpec,
    assemble_mixture,
    build_all_to_en,
    build_en_to_all,
    build_zero_shot,
    carve_validation,
)
from .model import (
    EchoBackend,
    GenerationRequest,
    build_one_shot_prompt,
    build_oracle_request,
    run_inference,
)
from .transforms import (
    PlanMarkup,
    TargetSequence,
    attach_length,
    corrupt_plan,
    decode_target,
    encode_target,
    shuffle_plan,
)

__version__ = "0.1.0"

__all__ = [
    "ContentPlan",
    "CorpusPair",
    "EchoBackend",
    "EntityRecord",
    "Example",
    "GenerationRequest",
    "KbSnapshot",
    "Link",
    "LinkedSummary",
    "MetricReport",
    "MixtureManifest",
    "MixtureSpec",
    "PlanEntity",
    "PlanGap",
    "PlanMarkup",
    "PlanVariant",
    "RestKb",
    "RougeScores",
    "Section",
    "SectionedDocument",
    "SplitSet",
    "TargetSequence",
    "UrlCache",
    "annotate_pair",
    "annotate_plan",
    "assemble_mixture",
    "attach_length",
    "build_all_to_en",
    "build_en_to_all",
    "build_filtered_corpus",
    "build_one_shot_prompt",
    "build_oracle_request",
    "build_snapshot",
    "build_zero_shot",
    "carve_validation",
    "corrupt_plan",
    "decode_target",
    "encode_target",
    "entailment_score",
    "evaluate_pair",
    "evaluate_run",
    "extract_entity_mentions",
    "label_for",
    "normalize_wiki_url",
    "paired_bootstrap",
    "parse_input",
    "plan_f1",
    "resolve_url",
    "rouge",
    "run_inference",
    "serialize_input",
    "shuffle_plan",
]
