"""Run configuration: TOML file, environment overrides, CLI overrides.

Precedence, lowest to highest: built-in defaults, config file, environment
variables (KB_ENDPOINT, NLI_ENDPOINT, MODEL_ENDPOINT, CACHE_DIR), explicit
CLI flags. One master seed drives every randomized stage; per-stage seeds
are derived by hashing so that stages stay independent but a single number
reproduces a whole run.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields

try:
    import tomllib
except ImportError:  # 3.10
    import tomli as tomllib

from .errors import ConfigError
from .kb import DEFAULT_KB_ENDPOINT
from .transforms import PlanMarkup

DEFAULT_LANGUAGES = ("en", "cs", "de", "fr")
DEFAULT_SEED = 20230213

_ENV_KEYS = {
    "KB_ENDPOINT": "kb_endpoint",
    "NLI_ENDPOINT": "nli_endpoint",
    "MODEL_ENDPOINT": "model_endpoint",
    "CACHE_DIR": "cache_dir",
}


def derive_seed(master: int, stage: str) -> int:
    """Stable 63-bit stage seed; independent stages never share a stream."""
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class PipelineConfig:
    languages: tuple[str, ...] = DEFAULT_LANGUAGES
    eot_token: str = "[EOT]"
    eop_token: str = "[EOP]"
    plan_mark: str = "[PLAN]"
    summary_mark: str = "[SUMMARY]"
    entity_sep: str = " | "
    pair_sep: str = " & "
    kb_endpoint: str = DEFAULT_KB_ENDPOINT
    kb_snapshot: str | None = None
    cache_dir: str | None = None
    nli_endpoint: str | None = None
    model_endpoint: str | None = None
    tokenizer_kind: str = "word"
    tokenizer_model: str | None = None
    fallback_langs: tuple[str, ...] = ("en",)
    pronunciation_patterns: tuple[str, ...] = ("Help:IPA", "Help:Pronunciation")
    seed: int = DEFAULT_SEED
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "languages", tuple(self.languages))
        object.__setattr__(self, "fallback_langs", tuple(self.fallback_langs))
        object.__setattr__(
            self, "pronunciation_patterns", tuple(self.pronunciation_patterns)
        )
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def markup(self) -> PlanMarkup:
        return PlanMarkup(
            plan_mark=self.plan_mark,
            summary_mark=self.summary_mark,
            entity_sep=self.entity_sep,
            pair_sep=self.pair_sep,
        )

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def validate_paths(self, need_snapshot: bool = False) -> None:
        """Fail before any work starts, not halfway through a corpus."""
        if need_snapshot:
            if not self.kb_snapshot:
                raise ConfigError("no KB snapshot configured (kb_snapshot / --snapshot)")
            if not os.path.exists(self.kb_snapshot):
                raise ConfigError(f"KB snapshot does not exist: {self.kb_snapshot}")
        if self.tokenizer_model and not os.path.exists(self.tokenizer_model):
            raise ConfigError(f"tokenizer model does not exist: {self.tokenizer_model}")
        if self.cache_dir:
            parent = os.path.dirname(os.path.abspath(self.cache_dir)) or "."
            if not os.path.isdir(parent):
                raise ConfigError(f"cache dir parent does not exist: {parent}")


_CONFIG_FIELDS = {f.name for f in fields(PipelineConfig)}


def load_config(
    path: str | None = None,
    overrides: dict | None = None,
    env: dict | None = None,
) -> PipelineConfig:
    """Merge file, environment, and explicit overrides into one config."""
    values: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file does not exist: {path}")
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        unknown = sorted(set(data) - _CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
        values.update(data)
    env = os.environ if env is None else env
    for env_key, field_name in _ENV_KEYS.items():
        if env.get(env_key):
            values[field_name] = env[env_key]
    if overrides:
        for key, value in overrides.items():
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"unknown config override {key!r}")
            if value is not None:
                values[key] = value
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
