"""Experiment configuration as a flat ``section.key = value`` document."""

import dataclasses
import hashlib
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass
class DataConfig:
    input: Optional[str] = None
    format: str = "jsonl"
    truth: Optional[str] = None
    threshold: int = 1
    folds: int = 5
    seed: int = 0


@dataclass
class FeaturesConfig:
    selector: str = "all"
    max_vocab: int = 10_000


@dataclass
class RiskConfig:
    assembly: str = "ncws"
    loss: str = "hinge"
    prior: Optional[float] = None
    penalty_ratio: str = "auto"
    negativity: str = "age"
    epsilon: float = 1e-3


@dataclass
class TrainConfigSection:
    lr: float = 1e-4
    epochs: int = 10
    batch_size: int = 100
    l2: float = 1e-4
    seed: int = 0


@dataclass
class EvalConfig:
    output_dir: str = "reports"
    bins: int = 20
    bin_width: int = 30


@dataclass
class SynthSection:
    n: int = 20_000
    pos_frac: float = 0.45
    max_age: int = 1000
    exposure: str = "linear"
    noise: float = 1.0
    seed: int = 0


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    features: FeaturesConfig = field(default_factory=FeaturesConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    train: TrainConfigSection = field(default_factory=TrainConfigSection)
    eval: EvalConfig = field(default_factory=EvalConfig)
    synth: SynthSection = field(default_factory=SynthSection)

    def _section(self, name):
        if name not in {f.name for f in dataclasses.fields(self)}:
            raise KeyError(name)
        return getattr(self, name)

    def set(self, key, value):
        """Set ``section.key`` from a string or an already-typed value."""
        section_name, _, name = key.partition(".")
        try:
            section = self._section(section_name)
        except KeyError:
            raise ValueError(f"unknown config key {key!r}") from None
        hints = typing.get_type_hints(type(section))
        if name not in hints:
            raise ValueError(f"unknown config key {key!r}")
        setattr(section, name, _coerce(hints[name], value, key))

    def items(self):
        for sec in dataclasses.fields(self):
            section = getattr(self, sec.name)
            for f in dataclasses.fields(section):
                yield f"{sec.name}.{f.name}", getattr(section, f.name)

    def to_text(self):
        lines = [f"{key} = {'' if value is None else value}" for key, value in sorted(self.items())]
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_text(cls, text):
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected 'section.key = value'")
            cfg.set(key.strip(), value.strip())
        return cfg

    @classmethod
    def from_file(cls, path):
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _coerce(hint, value, key):
    optional = typing.get_origin(hint) is typing.Union and type(None) in typing.get_args(hint)
    if optional:
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
        if value is None or value == "":
            return None
    if not isinstance(value, str):
        return hint(value)
    try:
        return hint(value)
    except ValueError:
        raise ValueError(f"{key}: cannot parse {value!r} as {hint.__name__}") from None
