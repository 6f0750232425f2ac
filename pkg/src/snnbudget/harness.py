"""Experiment orchestration behind the CLI verbs."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import snapshot
from .config import ExperimentConfig, format_config
from .core import NetworkModel, Variant, class_scores, present
from .data import Dataset, load_dataset, make_stream
from .estimate import ModelReport, estimate_energy, estimate_memory, mean_counts
from .learning import LearnConfig, TrainLog, label_neurons, train
from .quant import Scheme, quantize_model
from .select import select_model

log = logging.getLogger(__name__)

PHASES = {"train": "training", "training": "training", "infer": "inference", "inference": "inference"}


@dataclass
class Splits:
    pool: Dataset      # training stream source
    label: Dataset     # held-out labeling split (tail of the training file)
    test: Dataset


def load_splits(cfg: ExperimentConfig) -> Splits:
    train_set = load_dataset(cfg.data.dir, "train")
    test_set = load_dataset(cfg.data.dir, "test")
    n_label = min(cfg.data.n_label, len(train_set))
    cut = len(train_set) - n_label
    return Splits(train_set.subset(slice(0, cut)), train_set.subset(slice(cut, None)), test_set)


def _rng(cfg: ExperimentConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream])


def build_model(cfg: ExperimentConfig) -> NetworkModel:
    a = cfg.arch
    model = NetworkModel.create(a.n_input, a.n_exc, a.variant, seed=cfg.seed,
                                w_init_max=a.w_init_max, lif_exc=cfg.lif, lif_inh=cfg.lif_inh,
                                inh_strength=a.inh_strength, exc_to_inh=a.exc_to_inh)
    return quantize_model(model, cfg.quant.build())


def train_model(cfg: ExperimentConfig, splits: Splits | None = None) -> tuple[NetworkModel, TrainLog]:
    model = build_model(cfg)
    spec = cfg.stream.build(cfg.seed)
    if not spec.phases:
        return model, TrainLog()
    splits = splits or load_splits(cfg)
    stream = make_stream(splits.pool, spec)
    return train(model, zip(stream.images, stream.labels), cfg.learn, cfg.sim_params(), _rng(cfg, 0))


def write_log(train_log: TrainLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TrainLog.COLUMNS)
        for sample, label, spikes, f_p, f_d, dw in train_log.rows:
            w.writerow([sample, label, spikes, repr(f_p), repr(f_d), repr(dw)])


def run_train(cfg: ExperimentConfig) -> tuple[NetworkModel, TrainLog]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model, train_log = train_model(cfg)
    snapshot.save_model(model, out / "model.json", {"samples": len(train_log)})
    write_log(train_log, out / "train_log.csv")
    (out / "effective.cfg").write_text(format_config(cfg))
    log.info("trained %d samples -> %s", len(train_log), out)
    return model, train_log


@dataclass
class Evaluation:
    accuracy: float
    inference: ModelReport
    training: ModelReport

    def report(self, phase: str) -> ModelReport:
        return self.training if PHASES[phase] == "training" else self.inference


def evaluate(model: NetworkModel, cfg: ExperimentConfig, report_id: str = "model",
             splits: Splits | None = None, meta: dict | None = None) -> Evaluation:
    """Label on the held-out split, score on the test split, attach estimates.

    Op counts for the energy proxy come from the test presentations.
    """
    splits = splits or load_splits(cfg)
    classes = cfg.stream.build(cfg.seed).classes or tuple(range(10))
    labeling = splits.label.restrict(classes)
    test = splits.test.restrict(classes).subset(slice(0, cfg.data.n_test))
    params = cfg.sim_params()
    rng = _rng(cfg, 1)
    model = label_neurons(model, labeling.images, labeling.labels, params, rng)
    scratch = model.copy()
    correct = 0
    records = []
    for pixels, label in zip(test.images, test.labels):
        rec = present(scratch, pixels, params, rng, adapt=False)
        records.append(rec)
        pred = int(np.argmax(class_scores(model.exc.labels, rec.exc_counts.astype(float))))
        correct += pred == label
    accuracy = correct / len(test) if len(test) else 0.0
    memory = estimate_memory(model)
    cost = cfg.cost.build()
    reports = {}
    for phase in ("inference", "training"):
        counts = mean_counts(model, records, phase) if records else None
        energy = estimate_energy(counts, cost, model.quant, cfg.cost.n_samples, phase)
        reports[phase] = ModelReport(report_id, accuracy, memory, energy, dict(meta or {}))
    return Evaluation(accuracy, reports["inference"], reports["training"])


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n")


def run_eval(model_path, cfg: ExperimentConfig, phase: str = "infer") -> ModelReport:
    model = snapshot.load_model(model_path)
    report = evaluate(model, cfg, Path(model_path).stem).report(phase)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(report.to_dict(), out / "report.json")
    return report


@dataclass(frozen=True)
class Candidate:
    id: str
    variant: Variant
    scheme: Scheme
    bits: int
    rule: str

    def apply(self, cfg: ExperimentConfig) -> ExperimentConfig:
        learn = cfg.learn
        if self.rule == "plain":
            learn = LearnConfig.plain(**{k: getattr(learn, k) for k in (
                "eta_pre", "eta_post", "tau_pre", "tau_post", "w_norm")})
        return replace(cfg, arch=replace(cfg.arch, variant=self.variant),
                       quant=replace(cfg.quant, scheme=self.scheme, bits=self.bits),
                       learn=learn)


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def sweep_candidates(cfg: ExperimentConfig) -> list[Candidate]:
    out = []
    seen = set()
    for rule in _csv_list(cfg.sweep.rules):
        if rule not in ("enhanced", "plain"):
            raise ValueError(f"unknown learning rule {rule!r}")
        for variant in map(Variant, _csv_list(cfg.sweep.variants)):
            for bits in map(int, _csv_list(cfg.sweep.bits)):
                if bits not in (4, 8, 16, 32):
                    raise ValueError(f"bitwidth {bits} not in 4/8/16/32")
                schemes = [Scheme.NONE] if bits == 32 else list(map(Scheme, _csv_list(cfg.sweep.schemes)))
                for scheme in schemes:
                    tag = "fp32" if scheme is Scheme.NONE else f"{scheme.value}{bits}"
                    cid = f"{variant.value}-{tag}" + ("" if rule == "enhanced" else "-plain")
                    if cid not in seen:
                        seen.add(cid)
                        out.append(Candidate(cid, variant, scheme, bits, rule))
    if not out:
        raise ValueError("sweep axes are empty")
    return out


def _run_candidate(cfg: ExperimentConfig, cand: Candidate) -> dict:
    ccfg = cand.apply(cfg)
    splits = load_splits(ccfg)
    model, train_log = train_model(ccfg, splits)
    meta = {"variant": cand.variant.value, "scheme": cand.scheme.value,
            "weight_bits": model.quant.weight_bits, "neuron_bits": model.quant.neuron_bits,
            "rule": cand.rule, "train_samples": len(train_log)}
    ev = evaluate(model, ccfg, cand.id, splits, meta)
    return {"inference": ev.inference.to_dict(), "training": ev.training.to_dict(),
            "model": snapshot.dumps(model, {"samples": len(train_log)})}


SWEEP_COLUMNS = ("id", "variant", "rule", "scheme", "weight_bits", "neuron_bits", "accuracy",
                 "memory_bits", "e1_inference_j", "e1_training_j", "energy_j", "verdict")


@dataclass
class SweepResult:
    reports: list          # ModelReports for the selection phase, candidate order
    failed: dict           # id -> error message
    selection: object


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    out = Path(cfg.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    (out / "effective.cfg").write_text(format_config(cfg))
    cands = sweep_candidates(cfg)
    results: dict = {}
    failed: dict = {}
    if cfg.sweep.jobs > 1:
        with ProcessPoolExecutor(cfg.sweep.jobs) as pool:
            futures = {c.id: pool.submit(_run_candidate, cfg, c) for c in cands}
            for cid, fut in futures.items():
                try:
                    results[cid] = fut.result()
                except Exception as exc:  # candidate failures are recorded, not fatal
                    failed[cid] = f"{type(exc).__name__}: {exc}"
    else:
        for c in cands:
            try:
                results[c.id] = _run_candidate(cfg, c)
            except Exception as exc:
                failed[c.id] = f"{type(exc).__name__}: {exc}"
    phase = PHASES[cfg.cost.phase]
    reports = []
    for c in cands:
        if c.id not in results:
            log.warning("candidate %s failed: %s", c.id, failed[c.id])
            continue
        r = results[c.id]
        write_json({"inference": r["inference"], "training": r["training"]},
                   out / "reports" / f"{c.id}.json")
        (out / "models" / f"{c.id}.json").write_text(r["model"])
        reports.append(ModelReport.from_dict(r[phase]))
    selection = select_model(reports, cfg.budget.build())
    verdicts = dict(selection.verdicts)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for c in cands:
            if c.id in failed:
                w.writerow([c.id, c.variant.value, c.rule, c.scheme.value, "", "", "", "", "", "", "",
                            "failed"])
                continue
            inf, tr = results[c.id]["inference"], results[c.id]["training"]
            m = inf["meta"]
            w.writerow([c.id, m["variant"], m["rule"], m["scheme"], m["weight_bits"], m["neuron_bits"],
                        repr(inf["accuracy"]), inf["memory_bits"], repr(inf["e1_joules"]),
                        repr(tr["e1_joules"]), repr(results[c.id][phase]["energy_joules"]),
                        verdicts[c.id]])
    sel = selection.to_dict()
    sel["failed"] = failed
    sel["phase"] = phase
    # an unlimited budget is written as null
    sel["budget"] = {"acc_min": cfg.budget.acc_min, "mem_max": _finite_or_none(cfg.budget.mem_max),
                     "energy_max": _finite_or_none(cfg.budget.energy_max),
                     "priority": cfg.budget.priority.value}
    write_json(sel, out / "selection.json")
    return SweepResult(reports, failed, selection)


def run_select(report_paths, cfg: ExperimentConfig):
    reports = []
    phase = PHASES[cfg.cost.phase]
    for path in report_paths:
        d = json.loads(Path(path).read_text())
        if phase in d and isinstance(d[phase], dict):
            d = d[phase]
        reports.append(ModelReport.from_dict(d))
    selection = select_model(reports, cfg.budget.build())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(selection.to_dict(), out / "selection.json")
    return selection
