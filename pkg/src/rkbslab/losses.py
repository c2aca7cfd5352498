"""Convex losses L(y, t) and the mean empirical risk over a sample."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, UnsupportedLoss

LOSS_KINDS = ("squared", "logistic", "hinge")


@dataclass(frozen=True)
class LossSpec:
    """A loss in the prediction argument ``t``; labels are ``y``.

    Logistic and hinge losses expect labels in {-1, +1}.
    """

    kind: str = "squared"
    reduction: str = "mean"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise UnsupportedLoss(f"unsupported loss {self.kind!r}; choose from {LOSS_KINDS}")
        if self.reduction != "mean":
            raise UnsupportedLoss("only mean reduction is supported")

    @property
    def smooth(self) -> bool:
        return self.kind != "hinge"

    def values(self, y, t) -> np.ndarray:
        y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
        if self.kind == "squared":
            return (t - y) ** 2
        if self.kind == "logistic":
            return np.logaddexp(0.0, -y * t)
        return np.maximum(0.0, 1.0 - y * t)

    def derivative(self, y, t) -> np.ndarray:
        """dL/dt; for hinge, the subgradient that is zero at the kink."""
        y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
        if self.kind == "squared":
            return 2.0 * (t - y)
        if self.kind == "logistic":
            return -y * _sigmoid(-y * t)
        return np.where(y * t < 1.0, -y, 0.0)

    def second_derivative(self, y, t) -> np.ndarray:
        y, t = np.asarray(y, dtype=float), np.asarray(t, dtype=float)
        if self.kind == "squared":
            return np.full(np.broadcast(y, t).shape, 2.0)
        if self.kind == "logistic":
            s = _sigmoid(y * t)
            return y * y * s * (1.0 - s)
        raise UnsupportedLoss("hinge loss is not twice differentiable")

    def curvature_bound(self, y) -> float:
        """Upper bound on d2L/dt2, used for Lipschitz step sizes."""
        if self.kind == "squared":
            return 2.0
        if self.kind == "logistic":
            return 0.25 * float(np.max(np.asarray(y, dtype=float) ** 2, initial=1.0))
        raise UnsupportedLoss("hinge loss is not differentiable")


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def as_loss(loss) -> LossSpec:
    if isinstance(loss, LossSpec):
        return loss
    return LossSpec(str(loss))


def _values(v):
    return np.asarray(getattr(v, "values", v), dtype=float).reshape(-1)


def empirical_risk(loss, predictions, labels) -> float:
    """``(1/n) sum_k L(y_k, f(x_k))``."""
    loss = as_loss(loss)
    t, y = _values(predictions), _values(labels)
    if t.size != y.size:
        raise AlignmentError(f"{t.size} predictions for {y.size} labels")
    return float(np.mean(loss.values(y, t)))


def risk_gradient(loss, predictions, labels) -> np.ndarray:
    """Gradient of the mean risk with respect to the prediction vector."""
    loss = as_loss(loss)
    t, y = _values(predictions), _values(labels)
    return loss.derivative(y, t) / y.size
