"""Classifiers and evaluation: MLP, k-NN baseline, k-fold CV, metric suite.

The MLP is a small sigmoid-hidden / softmax-output network trained by
full-batch gradient descent with momentum, deterministic for a given seed,
so every experiment is reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .features import Dataset, FeatureVector


class DegenerateDatasetError(ValueError):
    """Raised when training data cannot support classification."""


class StratificationError(ValueError):
    """Raised when a class is too small to spread over the requested folds."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.1
    momentum: float = 0.9
    seed: int = 42
    hidden_sizes: tuple[int, ...] = (35,)
    l2: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))


@dataclass
class MlpModel:
    class_labels: tuple[str, ...]
    input_dim: int
    hidden_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    scaler: np.ndarray  # (input_dim, 2) per-feature (min, max)
    train_config: TrainConfig
    loss_history: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class PerClassMetrics:
    label: str
    tpr: float
    fpr: float
    precision: float
    recall: float
    f_measure: float
    auc: float


@dataclass(frozen=True)
class EvalReport:
    classes: tuple[str, ...]
    confusion: np.ndarray  # rows = truth, cols = prediction
    accuracy: float
    kappa: float
    mae: float
    rmse: float
    per_class: tuple[PerClassMetrics, ...]
    mean_tpr: float
    mean_fpr: float
    mean_precision: float
    mean_recall: float
    mean_f_measure: float
    mean_auc: float

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "kappa": self.kappa,
            "mae": self.mae,
            "rmse": self.rmse,
            "per_class": [
                {
                    "label": m.label,
                    "tpr": m.tpr,
                    "fpr": m.fpr,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f_measure": m.f_measure,
                    "auc": m.auc,
                }
                for m in self.per_class
            ],
            "means": {
                "tpr": self.mean_tpr,
                "fpr": self.mean_fpr,
                "precision": self.mean_precision,
                "recall": self.mean_recall,
                "f_measure": self.mean_f_measure,
                "auc": self.mean_auc,
            },
        }


def fit_minmax(features: np.ndarray) -> np.ndarray:
    """Per-feature (min, max) pairs fitted on training data."""
    return np.stack([features.min(axis=0), features.max(axis=0)], axis=1)


def apply_minmax(scaler: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Map each feature to [0, 1]; constant features go to 0, values clamp."""
    lo = scaler[:, 0]
    span = scaler[:, 1] - scaler[:, 0]
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (features - lo) / safe, 0.0)
    return np.clip(scaled, 0.0, 1.0)


def _check_features(ds: Dataset) -> np.ndarray:
    x = ds.matrix()
    bad = ~np.isfinite(x).all(axis=1)
    if bad.any():
        s = ds.samples[int(np.argmax(bad))]
        raise ValueError(
            f"non-finite feature in sample page={s.page_id} row={s.row} col={s.col}"
        )
    return x


def _one_hot(labels: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(labels), len(classes)))
    for i, lab in enumerate(labels):
        out[i, index[lab]] = 1.0
    return out


def _forward(weights, biases, x):
    """Activations per layer; hidden layers sigmoid, output softmax."""
    acts = [x]
    for w, b in zip(weights[:-1], biases[:-1]):
        acts.append(expit(acts[-1] @ w + b))
    z = acts[-1] @ weights[-1] + biases[-1]
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    acts.append(e / e.sum(axis=1, keepdims=True))
    return acts


def _cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    eps = 1e-300
    return float(-(onehot * np.log(probs + eps)).sum() / len(probs))


def mlp_gradients(weights, biases, x, onehot, l2=0.0):
    """Mean cross-entropy gradients for every weight matrix and bias vector."""
    acts = _forward(weights, biases, x)
    n = len(x)
    delta = (acts[-1] - onehot) / n
    grads_w, grads_b = [], []
    for layer in range(len(weights) - 1, -1, -1):
        grads_w.insert(0, acts[layer].T @ delta + l2 * weights[layer])
        grads_b.insert(0, delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ weights[layer].T) * acts[layer] * (1.0 - acts[layer])
    return grads_w, grads_b


def train_mlp(train: Dataset, cfg: TrainConfig = TrainConfig()) -> MlpModel:
    """Fit the network with full-batch gradient descent plus momentum.

    The min-max scaler is fitted on the training features only; weights and
    biases start uniform in [-0.5, 0.5] from the seeded generator, so two
    runs with the same data and config produce identical models.
    """
    if not train.samples:
        raise DegenerateDatasetError("empty training set")
    present = sorted({s.label for s in train.samples})
    if len(present) < 2:
        raise DegenerateDatasetError(f"training needs >= 2 classes, found {present}")
    missing = [c for c in train.classes if c not in present]
    if missing:
        raise DegenerateDatasetError(f"declared classes without samples: {missing}")

    raw = _check_features(train)
    scaler = fit_minmax(raw)
    x = apply_minmax(scaler, raw)
    onehot = _one_hot(train.labels(), train.classes)

    rng = np.random.default_rng(cfg.seed)
    dims = [x.shape[1], *cfg.hidden_sizes, len(train.classes)]
    weights = [rng.uniform(-0.5, 0.5, (dims[i], dims[i + 1])) for i in range(len(dims) - 1)]
    biases = [rng.uniform(-0.5, 0.5, dims[i + 1]) for i in range(len(dims) - 1)]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    losses = np.empty(cfg.epochs + 1)
    for epoch in range(cfg.epochs):
        losses[epoch] = _cross_entropy(_forward(weights, biases, x)[-1], onehot)
        grads_w, grads_b = mlp_gradients(weights, biases, x, onehot, cfg.l2)
        for i in range(len(weights)):
            vel_w[i] = cfg.momentum * vel_w[i] - cfg.learning_rate * grads_w[i]
            vel_b[i] = cfg.momentum * vel_b[i] - cfg.learning_rate * grads_b[i]
            weights[i] = weights[i] + vel_w[i]
            biases[i] = biases[i] + vel_b[i]
    losses[-1] = _cross_entropy(_forward(weights, biases, x)[-1], onehot)

    return MlpModel(
        class_labels=tuple(train.classes),
        input_dim=x.shape[1],
        hidden_sizes=cfg.hidden_sizes,
        weights=weights,
        biases=biases,
        scaler=scaler,
        train_config=cfg,
        loss_history=losses,
    )


def predict_batch(model: MlpModel, features: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Labels and softmax probabilities for an (n, input_dim) feature block."""
    x = apply_minmax(model.scaler, features)
    probs = _forward(model.weights, model.biases, x)[-1]
    labels = [model.class_labels[i] for i in probs.argmax(axis=1)]
    return labels, probs


def predict(model: MlpModel, fv: FeatureVector) -> tuple[str, np.ndarray]:
    """Most probable class for one feature vector; ties pick the earliest."""
    if fv.values.shape[0] != model.input_dim:
        raise ValueError(
            f"feature vector has {fv.values.shape[0]} values, model expects {model.input_dim}"
        )
    labels, probs = predict_batch(model, fv.values[None, :])
    return labels[0], probs[0]


def _knn_neighbor_order(train_x: np.ndarray, query: np.ndarray) -> np.ndarray:
    dists = np.sqrt(((train_x - query) ** 2).sum(axis=1))
    return np.argsort(dists, kind="stable")  # distance ties keep earlier index


def knn_predict(train: Dataset, fv: FeatureVector, k: int = 1) -> str:
    """Majority vote over the k nearest training samples (Euclidean, scaled).

    Distance ties prefer the earlier training sample; a tied vote falls back
    to the single nearest neighbor's label.
    """
    if not train.samples:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train.samples):
        raise ValueError(f"k must be in [1, {len(train.samples)}], got {k}")
    raw = train.matrix()
    scaler = fit_minmax(raw)
    train_x = apply_minmax(scaler, raw)
    query = apply_minmax(scaler, fv.values[None, :])[0]
    order = _knn_neighbor_order(train_x, query)
    labels = train.labels()
    votes: dict[str, int] = {}
    for idx in order[:k]:
        votes[labels[idx]] = votes.get(labels[idx], 0) + 1
    best = max(votes.values())
    winners = [lab for lab, n in votes.items() if n == best]
    if len(winners) == 1:
        return winners[0]
    return labels[order[0]]


def knn_predict_batch(
    train: Dataset, features: np.ndarray, k: int = 1
) -> tuple[list[str], np.ndarray]:
    """k-NN labels plus vote-fraction pseudo-probabilities per class."""
    raw = train.matrix()
    scaler = fit_minmax(raw)
    train_x = apply_minmax(scaler, raw)
    queries = apply_minmax(scaler, features)
    labels = train.labels()
    class_index = {c: i for i, c in enumerate(train.classes)}
    out_labels = []
    out_probs = np.zeros((len(queries), len(train.classes)))
    for qi, q in enumerate(queries):
        order = _knn_neighbor_order(train_x, q)
        votes: dict[str, int] = {}
        for idx in order[:k]:
            votes[labels[idx]] = votes.get(labels[idx], 0) + 1
        best = max(votes.values())
        winners = [lab for lab, n in votes.items() if n == best]
        chosen = winners[0] if len(winners) == 1 else labels[order[0]]
        out_labels.append(chosen)
        for lab, n in votes.items():
            out_probs[qi, class_index[lab]] = n / k
    return out_labels, out_probs


def kfold_split(
    ds: Dataset, k: int, seed: int, stratify: bool = True
) -> list[tuple[Dataset, Dataset]]:
    """Partition into k folds; fold i is the test set of split i.

    Stratified mode shuffles each class and deals samples round-robin with a
    cursor that runs on across classes, so fold sizes stay within one of
    each other. Plain mode shuffles everything and cuts contiguous chunks.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = len(ds.samples)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    if stratify:
        labels = ds.labels()
        cursor = 0
        for cls in ds.classes:
            idxs = np.array([i for i, lab in enumerate(labels) if lab == cls])
            if len(idxs) < k:
                raise StratificationError(
                    f"class {cls!r} has {len(idxs)} samples, fewer than {k} folds"
                )
            rng.shuffle(idxs)
            for idx in idxs:
                fold_of[idx] = cursor % k
                cursor += 1
    else:
        perm = rng.permutation(n)
        for fold, chunk in enumerate(np.array_split(perm, k)):
            fold_of[chunk] = fold

    splits = []
    for fold in range(k):
        test_idx = [i for i in range(n) if fold_of[i] == fold]
        train_idx = [i for i in range(n) if fold_of[i] != fold]
        splits.append(
            (
                Dataset(ds.classes, tuple(ds.samples[i] for i in train_idx)),
                Dataset(ds.classes, tuple(ds.samples[i] for i in test_idx)),
            )
        )
    return splits


def _auc_one_vs_rest(scores: np.ndarray, positive: np.ndarray) -> float:
    """Rank-based ROC area (average ranks on ties); 0.5 when degenerate."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(scores, method="average")
    pos_rank_sum = ranks[positive].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(
    truth: Sequence[str],
    predicted: Sequence[str],
    probabilities: np.ndarray,
    classes: Sequence[str],
) -> EvalReport:
    """Confusion matrix plus the full metric suite.

    MAE/RMSE are computed over per-class probability vectors against the
    one-hot truth. AUC is one-vs-rest with rank-averaged ties.
    """
    truth = list(truth)
    predicted = list(predicted)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if len(truth) != len(predicted) or probabilities.shape != (len(truth), len(classes)):
        raise ValueError("truth, predictions, and probabilities must align")
    index = {c: i for i, c in enumerate(classes)}
    for lab in truth + predicted:
        if lab not in index:
            raise ValueError(f"label {lab!r} not in class list")

    c = len(classes)
    n = len(truth)
    confusion = np.zeros((c, c), dtype=np.int64)
    for t, p in zip(truth, predicted):
        confusion[index[t], index[p]] += 1

    accuracy = float(np.trace(confusion) / n)
    row_tot = confusion.sum(axis=1)
    col_tot = confusion.sum(axis=0)
    # kappa = (p_o - p_e)/(1 - p_e) reduced to one integer ratio so that
    # clean confusion matrices give exact values
    chance = int((row_tot * col_tot).sum())
    denom = n * n - chance
    kappa = 0.0 if denom == 0 else (n * int(np.trace(confusion)) - chance) / denom

    onehot = _one_hot(truth, classes)
    diff = probabilities - onehot
    mae = float(np.abs(diff).mean())
    rmse = float(np.sqrt((diff**2).mean()))

    per_class = []
    truth_idx = np.array([index[t] for t in truth])
    for ci, label in enumerate(classes):
        tp = float(confusion[ci, ci])
        fn = float(row_tot[ci] - confusion[ci, ci])
        fp = float(col_tot[ci] - confusion[ci, ci])
        tn = float(n - tp - fn - fp)
        tpr = tp / (tp + fn) if tp + fn > 0 else 0.0
        fpr = fp / (fp + tn) if fp + tn > 0 else 0.0
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tpr
        f_measure = (
            2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        )
        auc = _auc_one_vs_rest(probabilities[:, ci], truth_idx == ci)
        per_class.append(PerClassMetrics(label, tpr, fpr, precision, recall, f_measure, auc))

    def col_mean(attr):
        return float(np.mean([getattr(m, attr) for m in per_class]))

    return EvalReport(
        classes=tuple(classes),
        confusion=confusion,
        accuracy=accuracy,
        kappa=float(kappa),
        mae=mae,
        rmse=rmse,
        per_class=tuple(per_class),
        mean_tpr=col_mean("tpr"),
        mean_fpr=col_mean("fpr"),
        mean_precision=col_mean("precision"),
        mean_recall=col_mean("recall"),
        mean_f_measure=col_mean("f_measure"),
        mean_auc=col_mean("auc"),
    )


def cross_validate(
    ds: Dataset,
    k: int,
    cfg: TrainConfig = TrainConfig(),
    classifier: str = "mlp",
    knn_k: int = 1,
    stratify: bool = True,
) -> tuple[EvalReport, list[EvalReport]]:
    """k-fold cross-validation pooling every test-fold prediction.

    Per-fold training seeds derive deterministically from (cfg.seed, fold),
    so the aggregate confusion matrix is reproducible run to run.
    """
    if classifier not in ("mlp", "knn"):
        raise ValueError(f"classifier must be 'mlp' or 'knn', got {classifier!r}")
    splits = kfold_split(ds, k, cfg.seed, stratify)
    fold_seeds = [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(cfg.seed).spawn(k)]

    all_truth: list[str] = []
    all_pred: list[str] = []
    all_probs: list[np.ndarray] = []
    fold_reports = []
    for fold, (train_ds, test_ds) in enumerate(splits):
        test_x = test_ds.matrix()
        if classifier == "mlp":
            model = train_mlp(train_ds, replace(cfg, seed=fold_seeds[fold]))
            pred, probs = predict_batch(model, test_x)
        else:
            pred, probs = knn_predict_batch(train_ds, test_x, knn_k)
        truth = test_ds.labels()
        fold_reports.append(evaluate(truth, pred, probs, ds.classes))
        all_truth += truth
        all_pred += pred
        all_probs.append(probs)

    aggregate = evaluate(all_truth, all_pred, np.vstack(all_probs), ds.classes)
    return aggregate, fold_reports


MODEL_FORMAT_VERSION = 1
FEATURE_CONTRACT = "e/h v1..v5 o0..o5"


def save_model(model: MlpModel, path: str | Path, extraction: dict | None = None) -> None:
    """Serialize a model to the self-describing JSON layout."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "class_labels": list(model.class_labels),
        "hidden_sizes": list(model.hidden_sizes),
        "scaler": model.scaler.tolist(),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "train_config": {
            "epochs": model.train_config.epochs,
            "learning_rate": model.train_config.learning_rate,
            "momentum": model.train_config.momentum,
            "seed": model.train_config.seed,
            "hidden_sizes": list(model.train_config.hidden_sizes),
            "l2": model.train_config.l2,
        },
        "feature_contract": FEATURE_CONTRACT,
        "extraction": extraction or {},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path: str | Path) -> tuple[MlpModel, dict]:
    """Load a model JSON; returns the model and its extraction metadata."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')!r}")
    tc = doc["train_config"]
    cfg = TrainConfig(
        epochs=tc["epochs"],
        learning_rate=tc["learning_rate"],
        momentum=tc["momentum"],
        seed=tc["seed"],
        hidden_sizes=tuple(tc["hidden_sizes"]),
        l2=tc["l2"],
    )
    scaler = np.array(doc["scaler"])
    model = MlpModel(
        class_labels=tuple(doc["class_labels"]),
        input_dim=scaler.shape[0],
        hidden_sizes=tuple(doc["hidden_sizes"]),
        weights=[np.array(w) for w in doc["weights"]],
        biases=[np.array(b) for b in doc["biases"]],
        scaler=scaler,
        train_config=cfg,
    )
    return model, doc.get("extraction", {})
