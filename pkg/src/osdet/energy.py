"""Energy scoring of proposals and the negative-energy suppression loss.

The energy of a proposal is minus the log of the class-weighted sum of its
exponentiated logits; its negation ("negative energy") is high for boxes the
classifier recognizes and is driven below zero for background boxes by the
suppression loss, which acts on the T lowest-scoring proposals of an image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class EnergyModel:
    """Per-class positive weights balancing the energy sum."""

    class_weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.class_weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("class_weights must be a nonempty 1-D vector")
        if np.any(w <= 0):
            raise ValueError("class_weights must be strictly positive")
        object.__setattr__(self, "class_weights", w)

    @property
    def num_classes(self) -> int:
        return self.class_weights.size

    @classmethod
    def uniform(cls, num_classes: int) -> "EnergyModel":
        return cls(np.ones(num_classes))


def _check_dims(logits: np.ndarray, model: EnergyModel) -> np.ndarray:
    arr = np.asarray(logits, dtype=float)
    if arr.shape[-1] != model.num_classes:
        raise ValueError(
            f"logit dimension {arr.shape[-1]} != {model.num_classes} classes"
        )
    return arr


def energy_score(logits: np.ndarray, model: EnergyModel) -> tuple[float, float]:
    """Energy E and negative energy -E of one logit vector.

    negative_energy = log sum_c w_c * exp(f_c), computed with shifted
    log-sum-exp so large logits do not overflow.
    """
    arr = _check_dims(logits, model)
    if arr.ndim != 1:
        raise ValueError("energy_score takes a single logit vector")
    ne = float(logsumexp(arr, b=model.class_weights))
    return -ne, ne


def negative_energies(logit_matrix: np.ndarray, model: EnergyModel) -> np.ndarray:
    """Negative energy of each row of an (N, C) logit matrix."""
    arr = _check_dims(logit_matrix, model)
    arr = arr.reshape(-1, model.num_classes)
    return logsumexp(arr, b=model.class_weights[None, :], axis=1)


def energy_gradients(
    logit_matrix: np.ndarray, model: EnergyModel
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise gradients of negative energy.

    Returns (d_ne/d_logits of shape (N, C), d_ne/d_weights of shape (N, C));
    the logit gradient is the class-weighted softmax of the row.
    """
    arr = _check_dims(logit_matrix, model).reshape(-1, model.num_classes)
    ne = negative_energies(arr, model)
    d_logits = np.exp(arr + np.log(model.class_weights)[None, :] - ne[:, None])
    d_weights = np.exp(arr - ne[:, None])
    return d_logits, d_weights


def select_lowest_t(negative_energy: np.ndarray, t: int) -> np.ndarray:
    """Indices of the min(t, N) proposals with smallest negative energy.

    Ties resolve to the lower proposal index.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    ne = np.asarray(negative_energy, dtype=float).ravel()
    if ne.size == 0:
        raise ValueError("no proposals to select from")
    order = np.argsort(ne, kind="stable")
    return order[: min(t, ne.size)]


def l_suppression(selected_energies: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean hinge max(0, -E) over the selected proposals, with d_loss/d_E.

    The divisor is the number actually selected, so images with fewer than T
    proposals are not inflated.
    """
    e = np.asarray(selected_energies, dtype=float).ravel()
    if e.size == 0:
        return 0.0, np.zeros(0)
    active = -e > 0
    loss = float(np.sum(np.where(active, -e, 0.0))) / e.size
    grad = np.where(active, -1.0, 0.0) / e.size
    return loss, grad


@dataclass
class SuppressionResult:
    loss: float
    selected: np.ndarray
    grad_logits: np.ndarray
    grad_weights: np.ndarray


def suppression_loss_from_logits(
    logit_matrix: np.ndarray, model: EnergyModel, t: int
) -> SuppressionResult:
    """Select the T lowest negative energies and evaluate the suppression loss.

    Chain-rule gradients are returned for every logit (zero rows for proposals
    outside the selection) and for the learnable class weights.
    """
    arr = _check_dims(logit_matrix, model).reshape(-1, model.num_classes)
    ne = negative_energies(arr, model)
    selected = select_lowest_t(ne, t)
    loss, d_energy = l_suppression(-ne[selected])
    # d_loss/d_ne = -d_loss/d_E on the selected rows
    d_ne = -d_energy
    d_logits_rows, d_weights_rows = energy_gradients(arr[selected], model)
    grad_logits = np.zeros_like(arr)
    grad_logits[selected] = d_ne[:, None] * d_logits_rows
    grad_weights = (d_ne[:, None] * d_weights_rows).sum(axis=0)
    return SuppressionResult(
        loss=loss, selected=selected, grad_logits=grad_logits, grad_weights=grad_weights
    )


def l_energy(suppression: float, uncertainty: float) -> float:
    """Total energy loss: suppression plus the externally supplied uncertainty term."""
    return suppression + uncertainty
