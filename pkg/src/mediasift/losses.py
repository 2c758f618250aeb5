"""Training losses over two-class logits: cross-entropy plus two
noise-robust variants.

Peer loss subtracts a scaled cross-entropy on an independently paired
(input, label) sample; the confidence-regularized loss subtracts the
scaled expected cross-entropy under the estimated noisy-label prior.
Every function returns per-example losses together with analytical
gradients with respect to the logits, so trainers can backpropagate
without recomputing forward passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    pass


def _check_logits_labels(logits: np.ndarray, labels: np.ndarray) -> None:
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ModelError(f"logits must have shape (n, 2), got {logits.shape}")
    if labels.shape != (logits.shape[0],):
        raise ModelError(f"labels shape {labels.shape} does not match logits {logits.shape}")
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ModelError("labels must be 0 or 1")


def softmax2(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax over two logits, stabilized by the row max."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax2(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-example −log softmax(logits)[label] and its logit gradient.

    The gradient is softmax(logits) minus the one-hot label.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    _check_logits_labels(logits, labels)
    rows = np.arange(logits.shape[0])
    losses = -_log_softmax2(logits)[rows, labels]
    grads = softmax2(logits)
    grads[rows, labels] -= 1.0
    return losses, grads


def peer_loss(logits: np.ndarray, labels: np.ndarray,
              peer_logits: np.ndarray, peer_labels: np.ndarray,
              alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ce(x_n, y_n) minus alpha times ce on the shuffled peer pairing.

    Returns (losses, gradients wrt logits, gradients wrt peer logits);
    the peer gradient carries the −alpha factor, so both terms train.
    """
    if alpha <= 0.0:
        raise ModelError(f"peer loss requires alpha > 0, got {alpha}")
    return _peer_loss(logits, labels, peer_logits, peer_labels, alpha)


def _peer_loss(logits, labels, peer_logits, peer_labels, alpha):
    # validation-free core, shared with the alpha=0 degenerate-limit tests
    base, base_grads = cross_entropy(logits, labels)
    peer, peer_grads = cross_entropy(peer_logits, peer_labels)
    if peer.shape != base.shape:
        raise ModelError("peer batch size differs from the primary batch")
    return base - alpha * peer, base_grads, -alpha * peer_grads


@dataclass(frozen=True, eq=False)
class NoisePrior:
    """Estimated marginal of the noisy labels, (p0, p1)."""

    p_hat: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p_hat, dtype=np.float64)
        if p.shape != (2,):
            raise ModelError(f"prior must have two entries, got shape {p.shape}")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ModelError(f"prior must be a distribution, got {p}")
        object.__setattr__(self, "p_hat", p)


def estimate_noise_prior(labels: np.ndarray) -> NoisePrior:
    """Add-one-smoothed label frequencies: (count_y + 1) / (N + 2)."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ModelError("cannot estimate a noise prior from zero labels")
    if not np.isin(labels, (0, 1)).all():
        raise ModelError("labels must be 0 or 1")
    n1 = int(labels.sum())
    n = labels.size
    return NoisePrior(np.array([(n - n1 + 1) / (n + 2), (n1 + 1) / (n + 2)]))


def cores_loss(logits: np.ndarray, labels: np.ndarray, prior: NoisePrior,
               beta: float) -> tuple[np.ndarray, np.ndarray]:
    """ce(x_n, y_n) minus beta times the expected ce under the noisy prior.

    The expectation term's gradient is softmax(logits) − p_hat, so the
    total gradient is (softmax − onehot) − beta · (softmax − p_hat).
    """
    if beta <= 0.0:
        raise ModelError(f"confidence regularizer requires beta > 0, got {beta}")
    return _cores_loss(logits, labels, prior, beta)


def _cores_loss(logits, labels, prior, beta):
    # validation-free core, shared with the beta=0 degenerate-limit tests
    base, base_grads = cross_entropy(logits, labels)
    log_p = _log_softmax2(np.asarray(logits, dtype=np.float64))
    expected = -(log_p * prior.p_hat).sum(axis=1)
    grads = base_grads - beta * (softmax2(np.asarray(logits, dtype=np.float64)) - prior.p_hat)
    return base - beta * expected, grads
