"""Training objectives and their analytic gradients.

The contrastive term pulls same-label features together against the rest of
the batch; the binary cross-entropy term trains the classifier logit. Both
return exact gradients of the implemented expression so the trainer never
relies on autodiff.
"""

from __future__ import annotations

import numpy as np

from .validation import as_label_vector, check_in_unit_interval


def contrastive_loss(features, labels, temperature: float):
    """Supervised contrastive loss over a batch of h-dim features.

    For each anchor i with positive set ``P_i`` (same-label, other rows),

        L_i = log Z_i - (1/|P_i|) * sum_{p in P_i} s_ip,
        s_ij = f_i . f_j / temperature,  Z_i = sum_{j != i} exp(s_ij),

    averaged over anchors with non-empty ``P_i``. Anchors without positives
    are skipped; a batch where every anchor is skipped scores 0 with zero
    gradient. Returns ``(loss, dloss/dfeatures)``.
    """
    if temperature <= 0.0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {F.shape}")
    n = F.shape[0]
    if n < 2:
        raise ValueError(f"contrastive batch needs >= 2 rows, got {n}")
    y = as_label_vector(labels, n, "labels")

    s = (F @ F.T) / temperature
    off_diag = ~np.eye(n, dtype=bool)
    masked = np.where(off_diag, s, -np.inf)
    row_max = masked.max(axis=1)
    expd = np.exp(masked - row_max[:, None])
    z = expd.sum(axis=1)
    log_z = row_max + np.log(z)

    positives = off_diag & (y[:, None] == y[None, :])
    pos_counts = positives.sum(axis=1)
    active = pos_counts > 0
    if not active.any():
        return 0.0, np.zeros_like(F)
    anchors = int(active.sum())

    mean_pos = (s * positives).sum(axis=1) / np.where(active, pos_counts, 1)
    loss = float((log_z - mean_pos)[active].sum() / anchors)

    softmax = expd / z[:, None]
    targets = positives / np.where(active, pos_counts, 1)[:, None]
    g = (softmax - targets) * (active[:, None] / anchors)
    grad = (g + g.T) @ F / temperature
    return loss, grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(logits, labels):
    """Mean binary cross-entropy on raw logits, stable for large |z|.

    Uses ``max(z, 0) - z*y + log(1 + exp(-|z|))`` per element; the gradient
    is ``(sigmoid(z) - y) / n``. Returns ``(loss, dloss/dlogits)``.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError(f"logits must be a non-empty vector, got shape {z.shape}")
    y = as_label_vector(labels, z.shape[0], "labels").astype(np.float64)
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    grad = (_sigmoid(z) - y) / z.shape[0]
    return float(per.mean()), grad


def combined_loss(contrastive: float, bce: float, bce_weight: float) -> float:
    """Affine blend ``(1 - w) * contrastive + w * bce`` with ``w`` in [0, 1]."""
    w = check_in_unit_interval(bce_weight, "bce_weight")
    return (1.0 - w) * float(contrastive) + w * float(bce)
