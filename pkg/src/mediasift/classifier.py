"""Relevance classifier head and its minibatch gradient-descent trainer.

The head is deliberately small: a linear map or a one-hidden-layer tanh
network over the fused feature vector, producing two logits. Training is
single-threaded and fully deterministic for a fixed config: one seeded
generator drives the validation split, the parameter init, the epoch
shuffles, and the peer-sample draws, in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .evaluation import compute_metrics
from .features.fusion import FeatureVector
from .losses import (
    ModelError,
    NoisePrior,
    cores_loss,
    cross_entropy,
    estimate_noise_prior,
    peer_loss,
    softmax2,
)

ARCHITECTURES = ("linear", "mlp1")
LOSSES = ("ce", "peer", "cores")

FeatureInput = Union[np.ndarray, Sequence[FeatureVector]]


@dataclass(frozen=True)
class TrainingConfig:
    loss: str = "ce"
    alpha: float = 0.05
    beta: float = 0.05
    learning_rate: float = 1e-2
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0
    l2: float = 1e-4
    architecture: str = "linear"
    hidden: int = 64
    val_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.loss not in LOSSES:
            raise ModelError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.architecture not in ARCHITECTURES:
            raise ModelError(
                f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.loss == "peer" and self.alpha <= 0.0:
            raise ModelError(f"peer loss requires alpha > 0, got {self.alpha}")
        if self.loss == "cores" and self.beta <= 0.0:
            raise ModelError(f"cores requires beta > 0, got {self.beta}")
        if self.learning_rate <= 0.0:
            raise ModelError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ModelError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ModelError("epochs must be at least 1 (no checkpoint would exist)")
        if self.l2 < 0.0:
            raise ModelError("l2 must be nonnegative")
        if self.hidden < 1:
            raise ModelError("hidden must be at least 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ModelError("val_fraction must lie strictly between 0 and 1")


@dataclass
class ClassifierHead:
    architecture: str
    input_dim: int
    hidden: int
    params: dict[str, np.ndarray]

    @classmethod
    def initialize(cls, architecture: str, input_dim: int, hidden: int,
                   rng: np.random.Generator) -> "ClassifierHead":
        if architecture == "linear":
            params = {
                "w": rng.normal(0.0, 0.05, size=(input_dim, 2)),
                "b": np.zeros(2),
            }
        elif architecture == "mlp1":
            params = {
                "w1": rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(input_dim, hidden)),
                "b1": np.zeros(hidden),
                "w2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, 2)),
                "b2": np.zeros(2),
            }
        else:
            raise ModelError(f"unknown architecture {architecture!r}")
        return cls(architecture=architecture, input_dim=input_dim,
                   hidden=hidden, params=params)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ModelError(
                f"feature matrix with {x.shape[1] if x.ndim == 2 else '?'} columns "
                f"does not match model input_dim {self.input_dim}")
        return x

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        if self.architecture == "linear":
            return x @ self.params["w"] + self.params["b"]
        h = np.tanh(x @ self.params["w1"] + self.params["b1"])
        return h @ self.params["w2"] + self.params["b2"]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax2(self.logits(x))

    def gradients(self, x: np.ndarray, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients of mean(per-example loss), given per-example
        logit gradients."""
        x = self._check_input(x)
        m = x.shape[0]
        if self.architecture == "linear":
            return {"w": x.T @ dlogits / m, "b": dlogits.mean(axis=0)}
        pre = x @ self.params["w1"] + self.params["b1"]
        h = np.tanh(pre)
        dh = dlogits @ self.params["w2"].T
        dpre = dh * (1.0 - h * h)
        return {
            "w1": x.T @ dpre / m,
            "b1": dpre.mean(axis=0),
            "w2": h.T @ dlogits / m,
            "b2": dlogits.mean(axis=0),
        }

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        self.params = {name: value.copy() for name, value in snapshot.items()}


@dataclass(frozen=True)
class Prediction:
    article_id: str
    p_positive: float
    label: int
    confidence: float


@dataclass
class TrainedModel:
    head: ClassifierHead
    config: TrainingConfig
    best_epoch: int
    best_val_f1: float
    history: list[float] = field(default_factory=list)
    prior: Optional[NoisePrior] = None

    @property
    def input_dim(self) -> int:
        return self.head.input_dim

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.head.predict_proba(x)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        cfg = self.config
        with path.open("w", encoding="utf-8") as fh:
            fh.write("mediasift-classifier 1\n")
            fh.write(f"architecture {self.head.architecture}\n")
            fh.write(f"input_dim {self.head.input_dim}\n")
            fh.write(f"hidden {self.head.hidden}\n")
            fh.write(f"loss {cfg.loss}\n")
            fh.write(f"alpha {float(cfg.alpha)!r}\n")
            fh.write(f"beta {float(cfg.beta)!r}\n")
            fh.write(f"learning_rate {float(cfg.learning_rate)!r}\n")
            fh.write(f"batch_size {cfg.batch_size}\n")
            fh.write(f"epochs {cfg.epochs}\n")
            fh.write(f"seed {cfg.seed}\n")
            fh.write(f"l2 {float(cfg.l2)!r}\n")
            fh.write(f"val_fraction {float(cfg.val_fraction)!r}\n")
            fh.write(f"best_epoch {self.best_epoch}\n")
            fh.write(f"best_val_f1 {float(self.best_val_f1)!r}\n")
            fh.write("history " + " ".join(repr(float(v)) for v in self.history) + "\n")
            if self.prior is None:
                fh.write("prior -\n")
            else:
                fh.write("prior " + " ".join(repr(float(v)) for v in self.prior.p_hat) + "\n")
            for name in sorted(self.head.params):
                value = self.head.params[name]
                dims = " ".join(str(d) for d in value.shape)
                fh.write(f"param {name} {dims}\n")
                for row in np.atleast_2d(value):
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        lines = Path(path).read_text("utf-8").splitlines()
        if not lines or lines[0] != "mediasift-classifier 1":
            raise ModelError(f"{path}: not a classifier checkpoint")
        fields: dict[str, str] = {}
        i = 1
        while i < len(lines) and not lines[i].startswith("param "):
            key, _, value = lines[i].partition(" ")
            fields[key] = value
            i += 1
        params: dict[str, np.ndarray] = {}
        while i < len(lines):
            head = lines[i].split(" ")
            name, shape = head[1], tuple(int(d) for d in head[2:])
            rows = shape[0] if len(shape) == 2 else 1
            block = [[float(v) for v in lines[i + 1 + r].split(" ")]
                     for r in range(rows)]
            params[name] = np.array(block, dtype=np.float64).reshape(shape)
            i += 1 + rows
        config = TrainingConfig(
            loss=fields["loss"],
            alpha=float(fields["alpha"]),
            beta=float(fields["beta"]),
            learning_rate=float(fields["learning_rate"]),
            batch_size=int(fields["batch_size"]),
            epochs=int(fields["epochs"]),
            seed=int(fields["seed"]),
            l2=float(fields["l2"]),
            architecture=fields["architecture"],
            hidden=int(fields["hidden"]),
            val_fraction=float(fields["val_fraction"]),
        )
        head_obj = ClassifierHead(
            architecture=fields["architecture"],
            input_dim=int(fields["input_dim"]),
            hidden=int(fields["hidden"]),
            params=params,
        )
        history = [float(v) for v in fields["history"].split(" ")] if fields["history"] else []
        prior = None
        if fields["prior"] != "-":
            prior = NoisePrior(np.array([float(v) for v in fields["prior"].split(" ")]))
        return cls(head=head_obj, config=config, best_epoch=int(fields["best_epoch"]),
                   best_val_f1=float(fields["best_val_f1"]), history=history, prior=prior)


def _as_matrix(features: FeatureInput) -> tuple[list[str], np.ndarray]:
    if isinstance(features, np.ndarray):
        if features.ndim != 2:
            raise ModelError(f"feature matrix must be 2-d, got shape {features.shape}")
        return [str(i) for i in range(features.shape[0])], features.astype(np.float64)
    rows = list(features)
    if not rows:
        raise ModelError("no feature vectors given")
    return [fv.article_id for fv in rows], np.stack([fv.vector for fv in rows])


def train(features: FeatureInput, labels: Sequence[int],
          config: TrainingConfig) -> TrainedModel:
    """Fit the head on noisy labels, selecting the best-validation-F1 epoch.

    The split is 80-20 by default and seeded; ties in validation F1 keep
    the earlier epoch.
    """
    _, x = _as_matrix(features)
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise ModelError(f"labels shape {y.shape} does not match features {x.shape}")
    if y.size == 0:
        raise ModelError("cannot train on zero examples")
    if not np.isin(y, (0, 1)).all():
        raise ModelError("labels must be 0 or 1")

    rng = np.random.default_rng(config.seed)
    n = y.size
    n_val = max(1, int(round(config.val_fraction * n)))
    if n_val >= n:
        raise ModelError(f"{n} examples are too few to hold out a validation split")
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    y_train = y[train_idx]
    for cls in (0, 1):
        if not (y_train == cls).any():
            raise ModelError(f"training split contains no examples of class {cls}")

    prior = estimate_noise_prior(y_train) if config.loss == "cores" else None
    head = ClassifierHead.initialize(config.architecture, x.shape[1],
                                     config.hidden, rng)

    best: Optional[tuple[float, int, dict[str, np.ndarray]]] = None
    history: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(train_idx.size)
        for start in range(0, order.size, config.batch_size):
            batch = train_idx[order[start:start + config.batch_size]]
            xb, yb = x[batch], y[batch]
            logits = head.logits(xb)
            if config.loss == "ce":
                _, dlogits = cross_entropy(logits, yb)
                grads = head.gradients(xb, dlogits)
            elif config.loss == "cores":
                _, dlogits = cores_loss(logits, yb, prior, config.beta)
                grads = head.gradients(xb, dlogits)
            else:
                # fresh independent peer pairing every batch
                p1 = train_idx[rng.integers(0, train_idx.size, batch.size)]
                p2 = train_idx[rng.integers(0, train_idx.size, batch.size)]
                peer_logits = head.logits(x[p1])
                _, dlogits, dpeer = peer_loss(logits, yb, peer_logits, y[p2],
                                              config.alpha)
                grads = head.gradients(xb, dlogits)
                for name, g in head.gradients(x[p1], dpeer).items():
                    grads[name] = grads[name] + g
            for name, g in grads.items():
                if head.params[name].ndim == 2:
                    g = g + config.l2 * head.params[name]
                head.params[name] -= config.learning_rate * g
        val_pred = (head.predict_proba(x[val_idx])[:, 1] >= 0.5).astype(int)
        f1 = compute_metrics(val_pred, y[val_idx]).f1
        history.append(f1)
        if best is None or f1 > best[0]:
            best = (f1, epoch, head.snapshot())
    head.restore(best[2])
    return TrainedModel(head=head, config=config, best_epoch=best[1],
                        best_val_f1=best[0], history=history, prior=prior)


def predict(model: TrainedModel, features: FeatureInput,
            threshold: float = 0.5) -> list[Prediction]:
    """One Prediction per input row, order preserved."""
    ids, x = _as_matrix(features)
    p = model.predict_proba(x)[:, 1]
    return [
        Prediction(article_id=article_id, p_positive=float(pi),
                   label=int(pi >= threshold), confidence=abs(float(pi) - 0.5))
        for article_id, pi in zip(ids, p)
    ]
