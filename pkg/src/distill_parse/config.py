"""Pipeline configuration: language presets, key-value config files, precedence.

Config file format
------------------

Plain text, one ``key = value`` per line. Blank lines and lines starting with
``#`` are ignored; keys are case-sensitive and use underscores. Values are
parsed by the type of the field they set (``true``/``false`` for booleans).
Example::

    # english-like setup
    language = english
    decoder = eisner
    epochs = 20
    learning_rate = 0.001

Scorer settings use a ``scorer.`` prefix, e.g. ``scorer.lstm_dim = 64``.

Precedence, highest first: command-line flags, config file, language preset,
built-in defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .evaluation import PUNCT_TAGS
from .training import TrainConfig

# decoder and punctuation convention per language
PRESETS = {
    "english": {"decoder": "eisner", "punct": "exclude", "punct_tags": PUNCT_TAGS["english"]},
    "chinese": {"decoder": "eisner", "punct": "exclude", "punct_tags": PUNCT_TAGS["chinese"]},
    "german": {"decoder": "cle", "punct": "include", "punct_tags": PUNCT_TAGS["german"]},
    "custom": {},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    language: str = "custom"
    decoder: str = "eisner"
    punct: str = "include"
    punct_tags: Optional[frozenset] = None
    format: str = "conllu"
    cost: str = "hamming"
    variant: str = "bilstm"
    epochs: int = 10
    seed: Optional[int] = None
    shuffle: bool = True
    learning_rate: float = 1e-3
    decay: float = 0.05
    decay_mode: str = "inverse"
    single_root: bool = True
    label_loss: bool = True
    folds: int = 5
    models: int = 5
    jobs: int = 1
    scorer: Mapping = field(default_factory=dict)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            cost=self.cost,
            decoder=self.decoder,
            single_root=self.single_root,
            variant=self.variant,
            epochs=self.epochs,
            seed=0 if self.seed is None else self.seed,
            shuffle=self.shuffle,
            learning_rate=self.learning_rate,
            decay=self.decay,
            decay_mode=self.decay_mode,
            label_loss=self.label_loss,
            scorer=dict(self.scorer),
        )


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    if key == "punct_tags":
        return frozenset(raw.split())
    default = _FIELDS[key].default
    if key == "seed" or isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key} must be true or false, got {raw!r}")
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    return raw


def _scorer_value(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def parse_config_text(text: str) -> dict:
    """Parse the key-value format into a dict of typed overrides."""
    out: dict = {}
    scorer: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("scorer."):
            scorer[key[len("scorer."):]] = _scorer_value(value)
        elif key in _FIELDS and key != "scorer":
            out[key] = _coerce(key, value)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if scorer:
        out["scorer"] = scorer
    return out


def read_config(path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def resolve_config(
    flags: Optional[Mapping] = None,
    file_values: Optional[Mapping] = None,
    language: Optional[str] = None,
) -> PipelineConfig:
    """Merge defaults < preset < config file < flags.

    ``flags`` entries equal to None are treated as not given. The language is
    taken from the flags, then the file, then ``language``.
    """
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    file_values = dict(file_values or {})
    lang = flags.get("language") or file_values.get("language") or language or "custom"
    if lang not in PRESETS:
        raise ConfigError(f"unknown language {lang!r}; choose from {', '.join(PRESETS)}")
    merged: dict = {"language": lang}
    merged.update(PRESETS[lang])
    scorer = dict(file_values.pop("scorer", {}))
    scorer.update(flags.pop("scorer", {}) or {})
    merged.update(file_values)
    merged.update(flags)
    merged["scorer"] = scorer
    unknown = set(merged) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
    if merged.get("cost") == "distill":
        merged["cost"] = "distillation"
    cfg = PipelineConfig(**merged)
    if cfg.decoder not in ("eisner", "cle"):
        raise ConfigError(f"unknown decoder {cfg.decoder!r}")
    if cfg.punct not in ("include", "exclude"):
        raise ConfigError(f"punct must be include or exclude, not {cfg.punct!r}")
    if cfg.format not in ("conllx", "conllu"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg
