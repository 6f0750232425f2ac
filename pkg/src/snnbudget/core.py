"""Clock-driven simulation of a single-layer, fully-connected SNN.

Two competition schemes share one excitatory layer:

* ``Variant.BASELINE``: every excitatory neuron drives a paired inhibitory
  LIF neuron whose spikes hit all *other* excitatory neurons.
* ``Variant.LATERAL``: no inhibitory population; any excitatory spike in a
  timestep pushes every non-spiking excitatory neuron down directly.

Membrane potentials, thresholds and theta are in mV, times in ms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .errors import NotLabeledError, NumericError, ShapeError
from .quant import QuantConfig, quantize_value

UNLABELED = -1


class Variant(str, enum.Enum):
    BASELINE = "baseline"
    LATERAL = "lateral"


@dataclass(frozen=True)
class SimParams:
    dt: float = 1.0
    t_present: float = 350.0
    t_rest: float = 150.0
    max_rate: float = 63.75
    rng_seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_present > 0:
            raise ValueError("t_present must be > 0")
        if self.t_rest < 0 or self.max_rate < 0:
            raise ValueError("t_rest and max_rate must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_present / self.dt))

    @property
    def n_rest_steps(self) -> int:
        return int(round(self.t_rest / self.dt))


@dataclass(frozen=True)
class LifConsts:
    """Per-population LIF constants. Defaults describe excitatory neurons."""

    v_rest: float = -65.0
    v_reset: float = -60.0
    v_th: float = -52.0
    tau_mem: float = 100.0
    refrac: float = 5.0
    theta_plus: float = 0.2
    tau_theta: float = 1e7
    v_min: float = -80.0
    # mV added to v_mem per unit of summed presynaptic weight
    syn_gain: float = 0.3

    @classmethod
    def inhibitory(cls) -> "LifConsts":
        return cls(v_rest=-60.0, v_reset=-45.0, v_th=-40.0, tau_mem=10.0,
                   refrac=2.0, theta_plus=0.0)

    def decay(self, dt: float) -> float:
        return math.exp(-dt / self.tau_mem)

    def theta_decay(self, dt: float) -> float:
        return math.exp(-dt / self.tau_theta)

    def refrac_steps(self, dt: float) -> int:
        return int(round(self.refrac / dt))

    def kernel_args(self, dt: float) -> tuple:
        return (self.v_rest, self.v_reset, self.decay(dt), self.theta_decay(dt),
                self.theta_plus, self.refrac_steps(dt), self.v_min)


@dataclass
class NeuronPopulation:
    """Struct-of-arrays neuron state: one entry per neuron."""

    v_mem: np.ndarray
    v_th_base: np.ndarray
    theta: np.ndarray
    refrac_remaining: np.ndarray
    labels: np.ndarray

    @classmethod
    def at_rest(cls, n: int, consts: LifConsts) -> "NeuronPopulation":
        return cls(
            v_mem=np.full(n, consts.v_rest),
            v_th_base=np.full(n, consts.v_th),
            theta=np.zeros(n),
            refrac_remaining=np.zeros(n, dtype=np.int64),
            labels=np.full(n, UNLABELED, dtype=np.int64),
        )

    def __len__(self) -> int:
        return len(self.v_mem)

    def copy(self) -> "NeuronPopulation":
        return NeuronPopulation(*(a.copy() for a in (
            self.v_mem, self.v_th_base, self.theta, self.refrac_remaining, self.labels)))

    def project(self, fmt) -> None:
        self.v_mem = quantize_value(self.v_mem, fmt)
        self.v_th_base = quantize_value(self.v_th_base, fmt)
        self.theta = quantize_value(self.theta, fmt)


@dataclass
class NetworkModel:
    n_input: int
    n_exc: int
    variant: Variant
    weights: np.ndarray
    exc: NeuronPopulation
    inh: NeuronPopulation | None = None
    inh_strength: float = 30.0
    exc_to_inh: float = 25.0
    lif_exc: LifConsts = field(default_factory=LifConsts)
    lif_inh: LifConsts = field(default_factory=LifConsts.inhibitory)
    w_min: float = 0.0
    w_max: float = 1.0
    quant: QuantConfig = field(default_factory=QuantConfig)
    seed: int = 0

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.weights.shape != (self.n_input, self.n_exc):
            raise ShapeError(f"weights {self.weights.shape} != ({self.n_input}, {self.n_exc})")
        if len(self.exc) != self.n_exc:
            raise ShapeError("excitatory population size mismatch")
        if (self.inh is not None) != (self.variant is Variant.BASELINE):
            raise ValueError("inhibitory population present iff variant is baseline")
        if self.inh is not None and len(self.inh) != self.n_exc:
            raise ShapeError("inhibitory population must pair one-to-one with excitatory")

    @classmethod
    def create(cls, n_input: int, n_exc: int, variant=Variant.LATERAL, *, seed: int = 0,
               w_init_max: float = 0.3, lif_exc: LifConsts | None = None,
               lif_inh: LifConsts | None = None, **kw) -> "NetworkModel":
        """Fresh model with weights drawn uniformly from [0, w_init_max)."""
        variant = Variant(variant)
        lif_exc = lif_exc or LifConsts()
        lif_inh = lif_inh or LifConsts.inhibitory()
        rng = np.random.default_rng(seed)
        weights = rng.random((n_input, n_exc)) * w_init_max
        inh = NeuronPopulation.at_rest(n_exc, lif_inh) if variant is Variant.BASELINE else None
        return cls(n_input, n_exc, variant, weights, NeuronPopulation.at_rest(n_exc, lif_exc),
                   inh, lif_exc=lif_exc, lif_inh=lif_inh, seed=seed, **kw)

    def copy(self) -> "NetworkModel":
        return replace(self, weights=self.weights.copy(), exc=self.exc.copy(),
                       inh=None if self.inh is None else self.inh.copy())

    def populations(self) -> list[NeuronPopulation]:
        return [self.exc] if self.inh is None else [self.exc, self.inh]

    @property
    def n_weights(self) -> int:
        return self.weights.size


@dataclass
class SpikeRecord:
    exc_counts: np.ndarray
    input_counts: np.ndarray
    n_steps: int
    n_rest_steps: int = 0
    inh_counts: np.ndarray | None = None
    # presentations spent on this sample (silent ones are retried) and the
    # input spikes of the silent ones; counts above describe the last one
    attempts: int = 1
    silent_input: int = 0

    @property
    def total_exc(self) -> int:
        return int(self.exc_counts.sum())

    @property
    def total_input(self) -> int:
        return int(self.input_counts.sum())

    @property
    def total_steps(self) -> int:
        return self.n_steps + self.n_rest_steps


def rate_encode(pixels, params: SimParams, rng: np.random.Generator, *,
                n_input: int | None = None, rate_scale: float = 1.0) -> np.ndarray:
    """Bernoulli-per-step Poisson trains, shape ``(n_steps, n_input)``, bool.

    Input ``i`` fires with probability ``pixels[i]/255 * max_rate * dt`` per
    step, so the expected count over the window is rate times duration.
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1)
    if n_input is not None and pixels.size != n_input:
        raise ShapeError(f"got {pixels.size} pixels for {n_input} inputs")
    p = pixels / 255.0 * params.max_rate * rate_scale * params.dt / 1000.0
    return rng.random((params.n_steps, pixels.size)) < p


def lif_step(pop: NeuronPopulation, current, params: SimParams, consts: LifConsts,
             *, adapt: bool = True) -> np.ndarray:
    """Advance ``pop`` one timestep in place; return the boolean spike vector.

    Refractory neurons stay pinned at v_reset. Others leak toward v_rest and
    integrate ``current`` (already in mV). Theta decays every step and grows
    by theta_plus on each spike when ``adapt`` is set.
    """
    current = np.broadcast_to(np.asarray(current, dtype=np.float64), pop.v_mem.shape)
    if not np.all(np.isfinite(current)):
        raise NumericError("non-finite input current")
    pop.theta = pop.theta * consts.theta_decay(params.dt)
    refractory = pop.refrac_remaining > 0
    v = consts.v_rest + (pop.v_mem - consts.v_rest) * consts.decay(params.dt) + current
    v = np.maximum(v, consts.v_min)
    spiked = ~refractory & (v >= pop.v_th_base + pop.theta)
    v[refractory | spiked] = consts.v_reset
    pop.refrac_remaining = np.where(refractory, pop.refrac_remaining - 1, pop.refrac_remaining)
    pop.refrac_remaining[spiked] = consts.refrac_steps(params.dt)
    if adapt:
        pop.theta = np.where(spiked, pop.theta + consts.theta_plus, pop.theta)
    pop.v_mem = v
    return spiked


def _to_csr(raster: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    steps, idx = np.nonzero(raster)
    ptr = np.zeros(raster.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(steps, minlength=raster.shape[0]), out=ptr[1:])
    return ptr, idx.astype(np.int64)


def _neuron_grid(model: NetworkModel) -> tuple:
    if not model.quant.quantizes_neurons:
        return (0, 1.0, 0.0, 0.0)
    fmt = model.quant.neuron_format
    return (1, 2.0 ** fmt.frac_bits, fmt.min_value, fmt.max_value)


def simulate_sample(model: NetworkModel, pixels, params: SimParams, rng: np.random.Generator,
                    *, stdp=None, adapt: bool = True, rate_scale: float = 1.0) -> SpikeRecord:
    """Present one sample, then let the network rest.

    Neuron state in ``model`` is advanced in place; weights are read only.
    When ``stdp`` (a :class:`~snnbudget.learning.StdpState`) is given its
    traces, spike accumulators and potentiation/depression sums are filled in as well.
    """
    raster = rate_encode(pixels, params, rng, n_input=model.n_input, rate_scale=rate_scale)
    return simulate_raster(model, raster, params, stdp=stdp, adapt=adapt)


def simulate_raster(model: NetworkModel, raster: np.ndarray, params: SimParams, *,
                    stdp=None, adapt: bool = True) -> SpikeRecord:
    if raster.shape != (params.n_steps, model.n_input):
        raise ShapeError(f"raster {raster.shape} != ({params.n_steps}, {model.n_input})")
    ptr, idx = _to_csr(raster)
    exc_counts = np.zeros(model.n_exc, dtype=np.int64)
    baseline = model.variant is Variant.BASELINE
    inh = model.inh if baseline else NeuronPopulation.at_rest(0, model.lif_inh)
    inh_counts = np.zeros(len(inh), dtype=np.int64)
    learn = stdp is not None
    if learn:
        pre_decay = math.exp(-params.dt / stdp.tau_pre)
        post_decay = math.exp(-params.dt / stdp.tau_post)
        traces = (stdp.x_pre, stdp.x_post, pre_decay, post_decay, stdp.pot, stdp.dep)
    else:
        empty = np.zeros((0, 0))
        traces = (np.zeros(0), np.zeros(0), 1.0, 1.0, empty, empty)
    _backend.run_presentation(
        model.weights, ptr, idx, params.n_rest_steps,
        model.exc.v_mem, model.exc.v_th_base, model.exc.theta, model.exc.refrac_remaining,
        model.lif_exc.kernel_args(params.dt),
        inh.v_mem, inh.v_th_base, inh.theta, inh.refrac_remaining,
        model.lif_inh.kernel_args(params.dt),
        int(baseline), float(model.inh_strength), float(model.exc_to_inh),
        float(model.lif_exc.syn_gain), int(adapt), _neuron_grid(model),
        int(learn), *traces, exc_counts, inh_counts,
    )
    input_counts = raster.sum(axis=0, dtype=np.int64)
    if learn:
        stdp.s_pre_acc += input_counts
        stdp.s_post_acc += exc_counts
    return SpikeRecord(exc_counts, input_counts, params.n_steps,
                       params.n_rest_steps, inh_counts if baseline else None)


def present(model: NetworkModel, pixels, params: SimParams, rng: np.random.Generator, *,
            stdp=None, adapt: bool = True, retries: int = 4, boost: float = 1.5) -> SpikeRecord:
    """:func:`simulate_sample` with the silent-sample retry rule.

    A presentation that elicits no excitatory spike is repeated with all
    input rates scaled by ``boost`` (compounding), at most ``retries`` times.
    """
    scale = 1.0
    silent_input = 0
    for attempt in range(retries + 1):
        if stdp is not None:
            stdp.reset()
        rec = simulate_sample(model, pixels, params, rng, stdp=stdp, adapt=adapt, rate_scale=scale)
        if rec.total_exc > 0 or attempt == retries:
            break
        silent_input += rec.total_input
        scale *= boost
    rec.attempts = attempt + 1
    rec.silent_input = silent_input
    return rec


def class_scores(labels: np.ndarray, counts: np.ndarray, n_classes: int = 10) -> np.ndarray:
    return np.bincount(labels, weights=counts, minlength=n_classes)[:n_classes]


def classify(model: NetworkModel, record: SpikeRecord, n_classes: int = 10) -> int:
    """Class whose labeled neurons spiked most in total; ties go to the lowest class."""
    labels = model.exc.labels
    if np.any(labels == UNLABELED):
        raise NotLabeledError("every excitatory neuron needs a label before classify()")
    return int(np.argmax(class_scores(labels, record.exc_counts.astype(np.float64), n_classes)))
