"""Pair-wise STDP with adaptive rate factors, weight decay and threshold balancing.

Weights are frozen while a sample is presented. The kernel collects, for
every synapse, the sum of ``x_post`` at its presynaptic spikes (``dep``)
and of ``x_pre`` at its postsynaptic spikes (``pot``). Once the
presentation ends the rate factors are known and the whole presentation's
update is applied in one step::

    w += f_p * eta_post * pot - f_d * eta_pre * dep

followed by clamping, grid projection (quantized models) and decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NetworkModel, SimParams, present
from .errors import InputError, NumericError, ShapeError
from .quant import quantize_value


@dataclass(frozen=True)
class LearnConfig:
    eta_pre: float = 0.0025
    eta_post: float = 0.01
    s_th: float = 5.0
    f_max: float = 4.0
    # w_decay = decay_alpha / n_weights unless w_decay is given explicitly
    decay_alpha: float = 31.36
    w_decay: float | None = None
    adaptive: bool = True
    balance_interval: int = 100
    r_lo: float = 1.0
    r_hi: float = 12.0
    v_th_step: float = 0.5
    tau_pre: float = 20.0
    tau_post: float = 20.0
    # target mean weight per neuron for column normalization; 0 disables
    w_norm: float = 0.1

    def __post_init__(self):
        if not (self.eta_pre > 0 and self.eta_post > 0):
            raise ValueError("learning rates must be > 0")
        if self.s_th < 1:
            raise ValueError("s_th must be >= 1")
        if not self.r_lo < self.r_hi:
            raise ValueError("r_lo must be < r_hi")
        if self.w_decay is not None and not 0 <= self.w_decay < 1:
            raise ValueError("w_decay must lie in [0, 1)")
        if self.decay_alpha < 0 or self.balance_interval < 0:
            raise ValueError("decay_alpha and balance_interval must be >= 0")

    @classmethod
    def plain(cls, **kw) -> "LearnConfig":
        """Pair-wise STDP without any of the enhancements."""
        return cls(adaptive=False, decay_alpha=0.0, balance_interval=0, **kw)

    def decay_rate(self, n_weights: int) -> float:
        if self.w_decay is not None:
            return self.w_decay
        if n_weights == 0:
            return 0.0
        return min(self.decay_alpha / n_weights, 0.999999)


@dataclass
class StdpState:
    x_pre: np.ndarray
    x_post: np.ndarray
    tau_pre: float = 20.0
    tau_post: float = 20.0
    s_pre_acc: np.ndarray = None
    s_post_acc: np.ndarray = None
    pot: np.ndarray = None
    dep: np.ndarray = None

    @classmethod
    def for_model(cls, model: NetworkModel, cfg: LearnConfig | None = None) -> "StdpState":
        cfg = cfg or LearnConfig()
        n_in, n_exc = model.n_input, model.n_exc
        return cls(np.zeros(n_in), np.zeros(n_exc), cfg.tau_pre, cfg.tau_post,
                   np.zeros(n_in, dtype=np.int64), np.zeros(n_exc, dtype=np.int64),
                   np.zeros((n_in, n_exc)), np.zeros((n_in, n_exc)))

    def reset(self) -> None:
        """Start of a presentation: traces, spike accumulators and trace sums to zero."""
        for a in (self.x_pre, self.x_post, self.s_pre_acc, self.s_post_acc, self.pot, self.dep):
            a[...] = 0


def update_traces(state: StdpState, input_spikes, exc_spikes, dt: float) -> StdpState:
    """Decay both traces one step, reset spiking units' traces to 1, count spikes."""
    input_spikes = np.asarray(input_spikes, dtype=bool)
    exc_spikes = np.asarray(exc_spikes, dtype=bool)
    if input_spikes.shape != state.x_pre.shape or exc_spikes.shape != state.x_post.shape:
        raise ShapeError("spike vector length does not match the traces")
    state.x_pre *= math.exp(-dt / state.tau_pre)
    state.x_post *= math.exp(-dt / state.tau_post)
    state.x_pre[input_spikes] = 1.0
    state.x_post[exc_spikes] = 1.0
    state.s_pre_acc += input_spikes
    state.s_post_acc += exc_spikes
    return state


def compute_factors(state: StdpState, cfg: LearnConfig) -> tuple[float, float]:
    """Potentiation and depression factors from one presentation's spike counts.

    f_p = max post count / s_th, f_d = max post count / (max pre count + 1),
    both clamped to [0, f_max].
    """
    s_post = float(state.s_post_acc.max(initial=0))
    s_pre = float(state.s_pre_acc.max(initial=0))
    f_p = min(max(s_post / cfg.s_th, 0.0), cfg.f_max)
    f_d = min(max(s_post / (s_pre + 1.0), 0.0), cfg.f_max)
    return f_p, f_d


def _finish(weights, w_min, w_max, fmt):
    if not np.all(np.isfinite(weights)):
        raise NumericError("non-finite weight after update")
    weights = np.clip(weights, w_min, w_max)
    if fmt is not None:
        weights = quantize_value(weights, fmt)
    return weights


def stdp_update(weights, state: StdpState, input_spikes, exc_spikes, f_p: float, f_d: float,
                cfg: LearnConfig, *, w_min: float = 0.0, w_max: float = 1.0, fmt=None):
    """Single-timestep event update using the traces currently in ``state``.

    Each spiking input ``i`` depresses row ``i`` by ``f_d*eta_pre*x_post``;
    each spiking neuron ``j`` potentiates column ``j`` by ``f_p*eta_post*x_pre``.
    """
    if f_p < 0 or f_d < 0:
        raise ValueError("f_p and f_d must be >= 0")
    pre = np.asarray(input_spikes, dtype=bool)
    post = np.asarray(exc_spikes, dtype=bool)
    w = np.array(weights, dtype=np.float64)
    w[pre, :] -= f_d * cfg.eta_pre * state.x_post[None, :]
    w[:, post] += f_p * cfg.eta_post * state.x_pre[:, None]
    return _finish(w, w_min, w_max, fmt)


def apply_accumulated(weights, state: StdpState, f_p: float, f_d: float, cfg: LearnConfig, *,
                      w_min: float = 0.0, w_max: float = 1.0, fmt=None):
    """Apply a whole presentation's summed trace terms at once."""
    w = weights + (f_p * cfg.eta_post) * state.pot - (f_d * cfg.eta_pre) * state.dep
    return _finish(w, w_min, w_max, fmt)


def apply_weight_decay(weights, w_decay: float, fmt=None):
    if not 0 <= w_decay < 1:
        raise ValueError("w_decay must lie in [0, 1)")
    w = weights * (1.0 - w_decay)
    return quantize_value(w, fmt) if fmt is not None else w


def normalize_columns(weights, mean_weight: float):
    """Rescale each neuron's incoming weights to sum to ``mean_weight * n_input``."""
    sums = weights.sum(axis=0)
    scale = np.divide(mean_weight * weights.shape[0], sums, out=np.ones_like(sums), where=sums > 0)
    return weights * scale[None, :]


def balance_threshold(model: NetworkModel, mean_spikes: float, cfg: LearnConfig) -> bool:
    """Nudge every excitatory base threshold toward the target activity band.

    Returns True if thresholds moved.
    """
    if mean_spikes < 0:
        raise ValueError("mean spike rate must be >= 0")
    if mean_spikes > cfg.r_hi:
        step = cfg.v_th_step
    elif mean_spikes < cfg.r_lo:
        step = -cfg.v_th_step
    else:
        return False
    model.exc.v_th_base = model.exc.v_th_base + step
    if model.quant.quantizes_neurons:
        model.exc.v_th_base = quantize_value(model.exc.v_th_base, model.quant.neuron_format)
    return True


def assign_labels(responses: np.ndarray, labels: np.ndarray, n_classes: int = 10) -> np.ndarray:
    """Label each neuron with the class of maximal mean response.

    ``responses`` is (samples, neurons). Ties and silent neurons go to the
    lowest class index; classes absent from ``labels`` score zero.
    """
    labels = np.asarray(labels, dtype=np.int64)
    sums = np.zeros((n_classes, responses.shape[1]))
    np.add.at(sums, labels, responses)
    seen = np.bincount(labels, minlength=n_classes)[:n_classes]
    means = sums / np.maximum(seen, 1)[:, None]
    return np.argmax(means, axis=0).astype(np.int64)


def record_responses(model: NetworkModel, images, params: SimParams,
                     rng: np.random.Generator) -> np.ndarray:
    """Excitatory spike counts per sample with learning and homeostasis off."""
    out = np.zeros((len(images), model.n_exc), dtype=np.int64)
    for k, pixels in enumerate(images):
        out[k] = present(model, pixels, params, rng, adapt=False).exc_counts
    return out


def label_neurons(model: NetworkModel, images, labels, params: SimParams,
                  rng: np.random.Generator, n_classes: int = 10) -> NetworkModel:
    if len(images) == 0:
        raise InputError("labeling needs at least one sample")
    if len(images) != len(labels):
        raise InputError("image and label counts differ")
    responses = record_responses(model.copy(), images, params, rng)
    out = model.copy()
    out.exc.labels = assign_labels(responses, labels, n_classes)
    return out


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)

    COLUMNS = ("sample", "label", "exc_spikes", "f_p", "f_d", "mean_abs_dw")

    def append(self, *row) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)


def train(model: NetworkModel, samples, cfg: LearnConfig, params: SimParams,
          rng: np.random.Generator, *, check=None) -> tuple[NetworkModel, TrainLog]:
    """Unsupervised training over ``samples`` (iterable of (pixels, label)).

    Returns a trained copy of ``model`` and the per-sample log. ``check`` is
    called as ``check(index, model)`` after every sample if given.
    """
    model = model.copy()
    log = TrainLog()
    state = StdpState.for_model(model, cfg)
    fmt = model.quant.weight_format if model.quant.quantizes_weights else None
    w_decay = cfg.decay_rate(model.n_weights)
    window = []
    for k, (pixels, label) in enumerate(samples):
        rec = present(model, pixels, params, rng, stdp=state, adapt=True)
        f_p, f_d = compute_factors(state, cfg) if cfg.adaptive else (1.0, 1.0)
        before = model.weights
        # full precision through the whole update, one projection at the end
        w = apply_accumulated(before, state, f_p, f_d, cfg, w_min=model.w_min, w_max=model.w_max)
        if w_decay > 0:
            w = apply_weight_decay(w, w_decay)
        if cfg.w_norm > 0:
            w = np.clip(normalize_columns(w, cfg.w_norm), model.w_min, model.w_max)
        if fmt is not None:
            w = quantize_value(w, fmt)
        model.weights = w
        if cfg.balance_interval:
            window.append(rec.total_exc)
            if len(window) == cfg.balance_interval:
                balance_threshold(model, float(np.mean(window)), cfg)
                window.clear()
        log.append(k, int(label), rec.total_exc, f_p, f_d, float(np.mean(np.abs(w - before))))
        if check is not None:
            check(k, model)
    return model, log
