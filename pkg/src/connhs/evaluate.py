"""Downstream classification, metrics, and experiment harnesses.

The classifier is a deterministic multinomial logistic regression (zero
init, full-batch gradient descent on cross-entropy) over fused node
representations of the labeled train documents. Harnesses cover single
experiments, label-rate sweeps with shared pretraining, loss-mode
ablations, and single-parameter sensitivity sweeps.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .contrast import MODES, LossConfig
from .corpus import Corpus, split_views
from .graph import ThresholdConfig, build_graph
from .model import ArchitectureSpec
from .train import TrainConfig, encode, pretrain

SWEEPABLE = ("rho_t", "rho_e", "rho_k", "gamma_e", "gamma_k", "tau", "sift_threshold")

LR_EPOCHS = 500
LR_RATE = 0.1


@dataclass
class LrModel:
    """Multinomial logistic regression with a fixed, recorded class order."""

    weights: np.ndarray  # classes x dim
    bias: np.ndarray  # classes
    classes: tuple[str, ...]


def _one_hot(labels: list[str], classes: tuple[str, ...]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(labels), len(classes)))
    for row, lab in enumerate(labels):
        out[row, index[lab]] = 1.0
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_lr(reps: np.ndarray, labels: list[str], epochs: int = LR_EPOCHS, lr: float = LR_RATE) -> LrModel:
    """Fit by full-batch gradient descent on mean cross-entropy."""
    reps = np.asarray(reps, dtype=np.float64)
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("need at least two classes to fit a classifier")
    y = _one_hot(labels, classes)
    n, d = reps.shape
    w = np.zeros((len(classes), d))
    b = np.zeros(len(classes))
    for _ in range(epochs):
        probs = _softmax(reps @ w.T + b)
        delta = (probs - y) / n
        w -= lr * (delta.T @ reps)
        b -= lr * delta.sum(axis=0)
    return LrModel(weights=w, bias=b, classes=classes)


def predict(model: LrModel, reps: np.ndarray) -> list[str]:
    """Argmax over class scores; ties break toward the lowest class index."""
    reps = np.asarray(reps, dtype=np.float64)
    if reps.shape[1] != model.weights.shape[1]:
        raise ValueError("representation dim does not match the model")
    scores = reps @ model.weights.T + model.bias
    return [model.classes[i] for i in np.argmax(scores, axis=1)]


@dataclass
class ClassStats:
    label: str
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass
class MetricsReport:
    accuracy: float
    precision: float  # macro average
    f1: float  # macro average
    per_class: list[ClassStats]


def compute_metrics(predicted: list[str], truth: list[str], class_set) -> MetricsReport:
    """Global accuracy plus one-vs-rest per-class stats, macro averaged."""
    if len(predicted) != len(truth):
        raise ValueError("predicted and truth lengths differ")
    total = len(truth)
    correct = sum(p == t for p, t in zip(predicted, truth))
    per_class: list[ClassStats] = []
    for label in sorted(class_set):
        tp = sum(1 for p, t in zip(predicted, truth) if p == label and t == label)
        fp = sum(1 for p, t in zip(predicted, truth) if p == label and t != label)
        fn = sum(1 for p, t in zip(predicted, truth) if p != label and t == label)
        tn = total - tp - fp - fn
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassStats(label, tp, fp, tn, fn, precision, recall, f1))
    macro_p = sum(c.precision for c in per_class) / len(per_class)
    macro_f1 = sum(c.f1 for c in per_class) / len(per_class)
    return MetricsReport(
        accuracy=correct / total if total else 0.0,
        precision=macro_p,
        f1=macro_f1,
        per_class=per_class,
    )


@dataclass
class PipelineConfig:
    """Everything one experiment needs besides the corpus."""

    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    arch: ArchitectureSpec | None = None  # feature_dim filled from the corpus

    def resolved_arch(self, dim: int) -> ArchitectureSpec:
        if self.arch is not None:
            return self.arch
        # Hidden width 2x the input: the concatenated [node, aggregate]
        # input is 2d wide already, and the d-wide default measurably
        # underfits on planted corpora.
        return ArchitectureSpec(feature_dim=dim, hidden_dim=2 * dim)

    def with_loss(self, loss: LossConfig) -> "PipelineConfig":
        return replace(self, loss=loss, train=replace(self.train, loss_cfg=loss))

    def to_dict(self) -> dict:
        return {
            "thresholds": dataclasses.asdict(self.thresholds),
            "loss": dataclasses.asdict(self.loss),
            "train": {
                "max_epochs": self.train.max_epochs,
                "patience": self.train.patience,
                "seed": self.train.seed,
                "learning_rate": self.train.learning_rate,
                "checkpoint_path": self.train.checkpoint_path,
                "diagnostics_path": self.train.diagnostics_path,
            },
            "arch": self.arch.to_dict() if self.arch is not None else None,
        }


@dataclass
class ExperimentResult:
    run_id: str
    mode: str
    label_rate: float
    swept_param: str | None
    swept_value: float | None
    seed: int
    accuracy: float
    precision_macro: float
    f1_macro: float
    epochs_trained: int
    wall_time_ms: float
    baseline_accuracy: float
    config: dict

    def row(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "label_rate": self.label_rate,
            "swept_param": self.swept_param if self.swept_param is not None else "",
            "swept_value": self.swept_value if self.swept_value is not None else "",
            "seed": self.seed,
            "accuracy": self.accuracy,
            "precision_macro": self.precision_macro,
            "f1_macro": self.f1_macro,
            "epochs_trained": self.epochs_trained,
            "wall_time_ms": self.wall_time_ms,
            "baseline_accuracy": self.baseline_accuracy,
        }


RESULT_COLUMNS = (
    "run_id",
    "mode",
    "label_rate",
    "swept_param",
    "swept_value",
    "seed",
    "accuracy",
    "precision_macro",
    "f1_macro",
    "epochs_trained",
    "wall_time_ms",
    "baseline_accuracy",
)


def _doc_indices(corpus: Corpus) -> dict[str, int]:
    return {doc.id: i for i, doc in enumerate(corpus.docs)}


def _classify(
    corpus: Corpus, reps: np.ndarray, labeled_ids: tuple[str, ...]
) -> tuple[MetricsReport, list[str]]:
    index = _doc_indices(corpus)
    rows = [index[i] for i in labeled_ids]
    labels = [corpus.docs[r].label for r in rows]
    model = train_lr(reps[rows], labels)
    test_rows = [i for i, d in enumerate(corpus.docs) if d.split == "test"]
    predicted = predict(model, reps[test_rows])
    truth = [corpus.docs[i].label for i in test_rows]
    return compute_metrics(predicted, truth, corpus.class_set), predicted


def run_experiment(
    corpus: Corpus,
    config: PipelineConfig,
    label_rate: float = 0.1,
    run_id: str = "run",
    mode: str | None = None,
    swept_param: str | None = None,
    swept_value: float | None = None,
) -> ExperimentResult:
    """Build graph, pretrain, encode, classify, and score one configuration."""
    t0 = time.perf_counter()
    if mode is not None:
        config = config.with_loss(replace(config.loss, mode=mode))
    graph = build_graph(corpus, config.thresholds)
    arch = config.resolved_arch(corpus.dim)
    params, log = pretrain(corpus, graph, config.train, arch)
    _, fused = encode(corpus, graph, params)
    labeled_ids, _ = split_views(corpus, label_rate)
    metrics, _ = _classify(corpus, fused, labeled_ids)
    baseline_metrics, _ = _classify(corpus, corpus.content_matrix(), labeled_ids)
    return ExperimentResult(
        run_id=run_id,
        mode=config.loss.mode,
        label_rate=label_rate,
        swept_param=swept_param,
        swept_value=swept_value,
        seed=config.train.seed,
        accuracy=metrics.accuracy,
        precision_macro=metrics.precision,
        f1_macro=metrics.f1,
        epochs_trained=len(log),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        baseline_accuracy=baseline_metrics.accuracy,
        config=config.to_dict(),
    )


def run_label_rate_sweep(
    corpus: Corpus, config: PipelineConfig, rates: list[float]
) -> list[ExperimentResult]:
    """One classification per rate over a single shared pretraining.

    The contrastive stage never sees labels, so the fused representations
    are identical across rates by construction.
    """
    t0 = time.perf_counter()
    graph = build_graph(corpus, config.thresholds)
    arch = config.resolved_arch(corpus.dim)
    params, log = pretrain(corpus, graph, config.train, arch)
    _, fused = encode(corpus, graph, params)
    results = []
    for rate in rates:
        labeled_ids, _ = split_views(corpus, rate)
        metrics, _ = _classify(corpus, fused, labeled_ids)
        baseline_metrics, _ = _classify(corpus, corpus.content_matrix(), labeled_ids)
        results.append(
            ExperimentResult(
                run_id=f"label_rate_{rate}",
                mode=config.loss.mode,
                label_rate=rate,
                swept_param="label_rate",
                swept_value=rate,
                seed=config.train.seed,
                accuracy=metrics.accuracy,
                precision_macro=metrics.precision,
                f1_macro=metrics.f1,
                epochs_trained=len(log),
                wall_time_ms=(time.perf_counter() - t0) * 1e3,
                baseline_accuracy=baseline_metrics.accuracy,
                config=config.to_dict(),
            )
        )
    return results


def run_ablation(
    corpus: Corpus, config: PipelineConfig, modes: list[str], label_rate: float = 0.1
) -> list[ExperimentResult]:
    """One full pipeline per negative-selection mode, shared seed."""
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
    if "NHS" in modes and "NT_Xent" in modes:
        _assert_nhs_subset_of_ntxent(corpus, config)
    results = []
    for mode in modes:
        results.append(
            run_experiment(
                corpus,
                config,
                label_rate=label_rate,
                run_id=f"ablate_{mode}",
                mode=mode,
            )
        )
    return results


def _assert_nhs_subset_of_ntxent(corpus: Corpus, config: PipelineConfig) -> None:
    """Sanity check on the shared graph: sifting only ever removes negatives."""
    from dataclasses import replace as _replace

    from .contrast import nhs_select_negatives, similarity_matrix
    from .graph import RELATIONS

    graph = build_graph(corpus, config.thresholds)
    score = similarity_matrix(corpus.content_matrix())
    nhs = nhs_select_negatives(graph, score, _replace(config.loss, mode="NHS"))
    ntx = nhs_select_negatives(graph, score, _replace(config.loss, mode="NT_Xent"))
    sizes = []
    for r in RELATIONS:
        if np.any(nhs.allowed[r] & ~ntx.allowed[r]):
            raise AssertionError("NHS admitted a negative that NT_Xent excluded")
        sizes.append((int(nhs.allowed[r].sum()), int(ntx.allowed[r].sum())))
    logging.getLogger(__name__).info("negative-set sizes per view (NHS, NT_Xent): %s", sizes)


def run_sensitivity_sweep(
    corpus: Corpus,
    config: PipelineConfig,
    parameter: str,
    values: list[float],
    label_rate: float = 0.1,
) -> list[ExperimentResult]:
    """Vary one hyperparameter, holding everything else fixed."""
    if parameter not in SWEEPABLE:
        raise ValueError(f"parameter must be one of {SWEEPABLE}, got {parameter!r}")
    results = []
    for value in values:
        cfg = config
        if parameter in ("rho_t", "rho_e", "rho_k", "gamma_e", "gamma_k"):
            cast = int(value) if parameter.startswith("gamma") else float(value)
            cfg = replace(config, thresholds=replace(config.thresholds, **{parameter: cast}))
        else:
            cfg = config.with_loss(replace(config.loss, **{parameter: float(value)}))
        results.append(
            run_experiment(
                corpus,
                cfg,
                label_rate=label_rate,
                run_id=f"sweep_{parameter}_{value}",
                swept_param=parameter,
                swept_value=float(value),
            )
        )
    return results


def results_to_csv(results: list[ExperimentResult], path: str | Path, include_timing: bool = True) -> None:
    """One row per run; the resolved config rides along as a JSON column."""
    cols = RESULT_COLUMNS if include_timing else tuple(c for c in RESULT_COLUMNS if c != "wall_time_ms")
    cols = cols + ("config",)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for res in results:
            row = res.row()
            if not include_timing:
                row.pop("wall_time_ms")
            row["config"] = json.dumps(res.config, sort_keys=True)
            writer.writerow(row)


def results_to_json(results: list[ExperimentResult], path: str | Path) -> None:
    payload = [dict(res.row(), config=res.config) for res in results]
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
