"""Memory and energy estimates for candidate models.

Memory is ``M = Nw*Bw + sum_k Nn_k*Bn_k`` bits. Energy is ``E = E1*N``,
where the per-sample ``E1`` is either measured on the target platform or
built here from operation counts and per-operation costs.
"""
from __future__ import annotations

import math

from dataclasses import dataclass, field

from .core import NetworkModel, SpikeRecord, Variant
from .quant import QuantConfig

NEURON_PARAM_KINDS = ("v_mem", "v_th_base", "theta")


@dataclass(frozen=True)
class MemoryEstimate:
    n_weights: int
    weight_bits: int
    breakdown: dict  # kind -> (count, bits)

    @property
    def mw(self) -> int:
        return self.n_weights * self.weight_bits

    @property
    def mn(self) -> int:
        return sum(n * b for n, b in self.breakdown.values())

    @property
    def total(self) -> int:
        return self.mw + self.mn

    def breakdown_dict(self) -> dict:
        out = {"weights": {"count": self.n_weights, "bits": self.weight_bits, "total": self.mw}}
        for kind, (n, b) in self.breakdown.items():
            out[kind] = {"count": n, "bits": b, "total": n * b}
        return out


def memory_bits(n_weights: int, weight_bits: int, neuron_terms) -> int:
    """Plain arithmetic form of the memory equation."""
    return n_weights * weight_bits + sum(n * b for n, b in neuron_terms)


def estimate_memory(model: NetworkModel) -> MemoryEstimate:
    n_neurons = model.n_exc + (model.n_exc if model.variant is Variant.BASELINE else 0)
    bits = model.quant.neuron_bits
    return MemoryEstimate(model.n_weights, model.quant.weight_bits,
                          {kind: (n_neurons, bits) for kind in NEURON_PARAM_KINDS})


@dataclass(frozen=True)
class OpCounts:
    syn_ff: int            # input spike x n_exc fan-out events
    syn_inh: int           # exc->inh and inh->exc events (baseline only)
    neuron_updates: int
    weight_reads: int
    weight_writes: int
    param_accesses: int
    trace_updates: int = 0


def count_ops(model: NetworkModel, record: SpikeRecord, phase: str = "inference") -> OpCounts:
    """Operation counts for one sample, including any retried presentations.

    Training adds one read-modify-write of every weight (the per-sample
    update) and a trace update per input and excitatory neuron per step.
    """
    syn_ff = (record.total_input + record.silent_input) * model.n_exc
    syn_inh = 0
    if model.variant is Variant.BASELINE:
        n_inh = int(record.inh_counts.sum()) if record.inh_counts is not None else 0
        syn_inh = record.total_exc + n_inh * (model.n_exc - 1)
    n_neurons = model.n_exc * (2 if model.variant is Variant.BASELINE else 1)
    updates = n_neurons * record.total_steps * record.attempts
    weight_reads = syn_ff
    weight_writes = trace_updates = 0
    if phase == "training":
        weight_reads += model.n_weights
        weight_writes = model.n_weights
        trace_updates = (model.n_input + model.n_exc) * record.n_steps * record.attempts
    elif phase != "inference":
        raise ValueError(f"phase must be 'training' or 'inference', not {phase!r}")
    return OpCounts(syn_ff, syn_inh, updates, weight_reads, weight_writes,
                    updates * len(NEURON_PARAM_KINDS) * 2, trace_updates)


@dataclass(frozen=True)
class OpCostModel:
    """Per-operation energies in joules at 32-bit precision.

    The defaults are round calibration constants, not measurements of any
    platform. Quantized weight traffic and quantized neuron-parameter
    traffic scale linearly with bitwidth / 32. Set ``e1_measured`` to use a
    measured per-sample energy instead.
    """

    e_syn: float = 5e-12
    e_neu: float = 10e-12
    e_mem: float = 20e-12
    e1_measured: float | None = None

    def __post_init__(self):
        if min(self.e_syn, self.e_neu, self.e_mem) <= 0:
            raise ValueError("per-operation energies must be > 0")
        if self.e1_measured is not None and self.e1_measured < 0:
            raise ValueError("measured E1 must be >= 0")


@dataclass(frozen=True)
class EnergyEstimate:
    e1: float
    n: float  # sample count; fractional only when recovered from a report
    phase: str = "inference"

    @property
    def total(self) -> float:
        return self.e1 * self.n


def energy_per_sample(counts: OpCounts, cost: OpCostModel, quant: QuantConfig) -> float:
    wscale = quant.weight_bits / 32
    nscale = quant.neuron_bits / 32
    return (counts.syn_ff * cost.e_syn * wscale
            + counts.syn_inh * cost.e_syn
            + counts.neuron_updates * cost.e_neu * nscale
            + (counts.weight_reads + counts.weight_writes) * cost.e_mem * wscale
            + counts.param_accesses * cost.e_mem * nscale
            + counts.trace_updates * cost.e_neu)


def estimate_energy(counts: OpCounts | None, cost: OpCostModel, quant: QuantConfig,
                    n_samples: int, phase: str = "inference") -> EnergyEstimate:
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    if cost.e1_measured is not None:
        e1 = cost.e1_measured
    else:
        e1 = energy_per_sample(counts, cost, quant)
    return EnergyEstimate(e1, n_samples, phase)


def mean_counts(model: NetworkModel, records, phase: str = "inference") -> OpCounts:
    """Average op counts over several presentations (fields become floats)."""
    per = [count_ops(model, r, phase) for r in records]
    n = len(per)
    return OpCounts(*(sum(getattr(c, f) for c in per) / n for f in OpCounts.__dataclass_fields__))


@dataclass
class ModelReport:
    id: str
    accuracy: float
    memory: MemoryEstimate
    energy: EnergyEstimate
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")

    @property
    def memory_bits(self) -> int:
        return self.memory.total

    @property
    def energy_joules(self) -> float:
        return self.energy.total

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "accuracy": self.accuracy,
            "memory_bits": self.memory_bits,
            "memory_breakdown": self.memory.breakdown_dict(),
            "e1_joules": self.energy.e1,
            "energy_joules": self.energy_joules,
            "phase": self.energy.phase,
            "n_samples": self.energy.n,
        }
        if self.meta:
            d["meta"] = self.meta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelReport":
        b = dict(d["memory_breakdown"])
        w = b.pop("weights")
        mem = MemoryEstimate(w["count"], w["bits"], {k: (v["count"], v["bits"]) for k, v in b.items()})
        if mem.total != d["memory_bits"]:
            raise ValueError(f"report {d['id']}: memory_bits disagrees with its breakdown")
        e1, total = d["e1_joules"], d["energy_joules"]
        n = d.get("n_samples")
        if n is None:
            # reports written by hand may omit N; recover it from E = E1*N
            if e1 == 0 and total != 0:
                raise ValueError(f"report {d['id']}: nonzero energy with zero E1")
            n = total / e1 if e1 else 0
        elif not math.isclose(e1 * n, total, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"report {d['id']}: energy_joules != e1_joules * n_samples")
        energy = EnergyEstimate(e1, n, d["phase"])
        return cls(d["id"], d["accuracy"], mem, energy, d.get("meta", {}))
