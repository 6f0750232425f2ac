"""Flat ``section.key = value`` experiment configuration.

Every key maps to a field of one of the section dataclasses below; unknown
keys and unparsable values raise :class:`ConfigError`. ``format_config``
writes the complete effective configuration back in the same syntax, so a
run can be reproduced from its own output directory.
"""
from __future__ import annotations

import dataclasses
import enum
import math
import typing
from dataclasses import dataclass, field, fields, replace

from .core import LifConsts, SimParams, Variant
from .data import StreamSpec
from .errors import ConfigError
from .estimate import OpCostModel
from .learning import LearnConfig
from .quant import FixedPointFormat, QuantConfig, Scheme, neuron_format, weight_format
from .select import Budget, Priority


@dataclass(frozen=True)
class ArchConfig:
    n_input: int = 784
    n_exc: int = 100
    variant: Variant = Variant.LATERAL
    inh_strength: float = 30.0
    exc_to_inh: float = 25.0
    w_init_max: float = 0.3


@dataclass(frozen=True)
class QuantSection:
    scheme: Scheme = Scheme.NONE
    bits: int = 8
    # explicit formats override the defaults derived from ``bits``
    weight_format: str = ""
    neuron_format: str = ""

    def build(self) -> QuantConfig:
        if self.scheme is Scheme.NONE:
            return QuantConfig()
        wf = FixedPointFormat.parse(self.weight_format) if self.weight_format else weight_format(self.bits)
        nf = FixedPointFormat.parse(self.neuron_format) if self.neuron_format else neuron_format(self.bits)
        return QuantConfig(self.scheme, wf, nf)


@dataclass(frozen=True)
class StreamSection:
    phases: str = "0-9:5000"
    shuffle: bool = True

    def build(self, seed: int) -> StreamSpec:
        return StreamSpec.parse(self.phases, shuffle_within_phase=self.shuffle, seed=seed)


@dataclass(frozen=True)
class DataSection:
    dir: str = "data/mnist10k"
    n_label: int = 1000
    n_test: int = 1000


@dataclass(frozen=True)
class CostSection:
    e_syn: float = 5e-12
    e_neu: float = 10e-12
    e_mem: float = 20e-12
    e1_measured: float | None = None
    n_samples: int = 10000
    phase: str = "inference"

    def build(self) -> OpCostModel:
        return OpCostModel(self.e_syn, self.e_neu, self.e_mem, self.e1_measured)


@dataclass(frozen=True)
class BudgetSection:
    acc_min: float = 0.0
    mem_max: float = math.inf
    energy_max: float = math.inf
    priority: Priority = Priority.ACCURACY

    def build(self) -> Budget:
        return Budget(self.acc_min, self.mem_max, self.energy_max, self.priority)


@dataclass(frozen=True)
class SweepSection:
    variants: str = "baseline,lateral"
    bits: str = "32,8"
    schemes: str = "qw"
    rules: str = "enhanced"
    jobs: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "runs/default"
    arch: ArchConfig = field(default_factory=ArchConfig)
    sim: SimParams = field(default_factory=SimParams)
    lif: LifConsts = field(default_factory=LifConsts)
    lif_inh: LifConsts = field(default_factory=LifConsts.inhibitory)
    learn: LearnConfig = field(default_factory=LearnConfig)
    quant: QuantSection = field(default_factory=QuantSection)
    stream: StreamSection = field(default_factory=StreamSection)
    data: DataSection = field(default_factory=DataSection)
    cost: CostSection = field(default_factory=CostSection)
    budget: BudgetSection = field(default_factory=BudgetSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    def sim_params(self) -> SimParams:
        return replace(self.sim, rng_seed=self.seed)


# keys that exist on a dataclass but are not user-settable
_HIDDEN = {("sim", "rng_seed")}


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _sections() -> dict:
    hints = _hints(ExperimentConfig)
    return {f.name: hints[f.name] for f in fields(ExperimentConfig) if dataclasses.is_dataclass(hints[f.name])}


def _parse_value(text: str, tp, key: str):
    text = text.strip()
    args = typing.get_args(tp)
    if type(None) in args:
        if text.lower() in ("none", ""):
            return None
        tp = next(a for a in args if a is not type(None))
    try:
        if tp is bool:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if isinstance(tp, type) and issubclass(tp, enum.Enum):
            return tp(text.lower())
        if tp is str:
            return text
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {getattr(tp, '__name__', tp)}") from exc
    raise ConfigError(f"{key}: unsupported type {tp}")


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(cfg: ExperimentConfig, pairs) -> ExperimentConfig:
    """Apply ``(key, text)`` pairs; later pairs win."""
    top = _hints(ExperimentConfig)
    sections = _sections()
    updates: dict = {}
    for key, text in pairs:
        key = key.strip()
        name, dot, sub = key.partition(".")
        if not dot:
            if name not in top or name in sections:
                raise ConfigError(f"unknown config key {key!r}")
            updates.setdefault(None, {})[name] = _parse_value(text, top[name], key)
            continue
        if name not in sections:
            raise ConfigError(f"unknown config section {name!r} in {key!r}")
        hints = _hints(sections[name])
        if sub not in hints or (name, sub) in _HIDDEN:
            raise ConfigError(f"unknown config key {key!r}")
        updates.setdefault(name, {})[sub] = _parse_value(text, hints[sub], key)
    try:
        for name, vals in updates.items():
            if name is not None:
                cfg = replace(cfg, **{name: replace(getattr(cfg, name), **vals)})
        cfg = replace(cfg, **updates.get(None, {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        pairs.append((key, value))
    return apply_overrides(base or ExperimentConfig(), pairs)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    sections = _sections()
    for f in fields(ExperimentConfig):
        if f.name not in sections:
            lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    for name in sections:
        section = getattr(cfg, name)
        lines.append("")
        for f in fields(section):
            if (name, f.name) not in _HIDDEN:
                lines.append(f"{name}.{f.name} = {_format_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"
