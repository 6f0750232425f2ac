"""Fixed-point grids for weights and neuron parameters.

Values stay float64 in memory; "quantized" means every value sits exactly
on the grid ``k * 2**-frac_bits`` inside the format's saturation range.
Rounding is nearest, ties to even, saturating at the format bounds.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

_FMT_RE = re.compile(r"^([su])(\d+)\.(-?\d+)$")


@dataclass(frozen=True)
class FixedPointFormat:
    signed: bool
    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if not 1 <= self.bits <= 32:
            raise ValueError(f"bitwidth {self.bits} outside 1..32 for {self}")

    @property
    def bits(self) -> int:
        return int(self.signed) + self.int_bits + self.frac_bits

    @property
    def step(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return -(2.0 ** self.int_bits) if self.signed else 0.0

    @property
    def max_value(self) -> float:
        return 2.0 ** self.int_bits - self.step

    @classmethod
    def parse(cls, text: str) -> "FixedPointFormat":
        """Parse ``"u0.8"`` / ``"s7.8"`` / ``"s6.-3"`` notation."""
        m = _FMT_RE.match(text.strip())
        if m is None:
            raise ValueError(f"bad fixed-point format {text!r}; expected e.g. 'u0.8' or 's7.8'")
        return cls(m.group(1) == "s", int(m.group(2)), int(m.group(3)))

    def __str__(self) -> str:
        return f"{'s' if self.signed else 'u'}{self.int_bits}.{self.frac_bits}"


def weight_format(bits: int) -> FixedPointFormat:
    """Unsigned Q0.B: weights live in [0, 1 - 2**-B]."""
    return FixedPointFormat(False, 0, bits)


def neuron_format(bits: int) -> FixedPointFormat:
    """Signed millivolt format covering the [-80, 0] mV membrane range.

    16 and 32 bits keep 7 integer bits and spend the rest on fraction;
    8 bits gives 1 mV resolution and 4 bits an 8 mV step.
    """
    if bits >= 16:
        return FixedPointFormat(True, 7, bits - 8)
    if bits == 8:
        return FixedPointFormat(True, 7, 0)
    if bits == 4:
        return FixedPointFormat(True, 6, -3)
    raise ValueError(f"no default neuron format for {bits} bits")


def quantize_value(x, fmt: FixedPointFormat):
    """Project ``x`` (scalar or array) onto the grid of ``fmt``."""
    scale = 2.0 ** fmt.frac_bits
    q = np.clip(np.rint(np.asarray(x, dtype=np.float64) * scale) / scale,
                fmt.min_value, fmt.max_value)
    if np.ndim(q) == 0:
        return float(q)
    return q


def on_grid(x, fmt: FixedPointFormat) -> bool:
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all(quantize_value(x, fmt) == x))


class Scheme(str, enum.Enum):
    NONE = "none"
    QW = "qw"
    QWN = "qwn"


@dataclass(frozen=True)
class QuantConfig:
    scheme: Scheme = Scheme.NONE
    weight_format: FixedPointFormat = field(default_factory=lambda: weight_format(8))
    neuron_format: FixedPointFormat = field(default_factory=lambda: neuron_format(8))

    @classmethod
    def from_bits(cls, scheme, bits: int) -> "QuantConfig":
        scheme = Scheme(scheme)
        if scheme is Scheme.NONE:
            return cls()
        return cls(scheme, weight_format(bits), neuron_format(bits))

    @property
    def quantizes_weights(self) -> bool:
        return self.scheme is not Scheme.NONE

    @property
    def quantizes_neurons(self) -> bool:
        return self.scheme is Scheme.QWN

    @property
    def weight_bits(self) -> int:
        return self.weight_format.bits if self.quantizes_weights else 32

    @property
    def neuron_bits(self) -> int:
        return self.neuron_format.bits if self.quantizes_neurons else 32

    def to_dict(self) -> dict:
        return {"scheme": self.scheme.value, "weight_format": str(self.weight_format),
                "neuron_format": str(self.neuron_format)}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantConfig":
        return cls(Scheme(d["scheme"]), FixedPointFormat.parse(d["weight_format"]),
                   FixedPointFormat.parse(d["neuron_format"]))


def quantize_model(model, cfg: QuantConfig):
    """Project a model's parameters onto ``cfg``'s grids and record the scheme.

    Returns a new model; the input is left untouched. Under ``QW`` only the
    weights move; ``QWN`` also projects v_mem, v_th_base and theta of every
    stored neuron.
    """
    out = model.copy()
    out.quant = cfg
    if cfg.quantizes_weights:
        out.weights = quantize_value(out.weights, cfg.weight_format)
        out.w_max = min(out.w_max, cfg.weight_format.max_value)
    if cfg.quantizes_neurons:
        for pop in out.populations():
            pop.project(cfg.neuron_format)
    return out
