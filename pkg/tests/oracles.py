"""Independent reference implementations used as test oracles.

Everything here is deliberately written without the package under test and
without the numpy routines the package relies on for the same quantity, so a
bug cannot cancel out of both sides of an assertion.
"""

from __future__ import annotations

import math

import numpy as np


def gaussian_elimination_rank(M, tol: float = 1e-9) -> int:
    """Rank via row reduction with partial pivoting; no numpy.linalg involved."""
    A = [list(map(float, row)) for row in np.asarray(M, dtype=np.float64)]
    if not A:
        return 0
    rows, cols = len(A), len(A[0])
    scale = max(abs(v) for row in A for v in row) or 1.0
    rank = 0
    for col in range(cols):
        if rank >= rows:
            break
        pivot = max(range(rank, rows), key=lambda r: abs(A[r][col]))
        if abs(A[pivot][col]) <= tol * scale:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        for r in range(rank + 1, rows):
            factor = A[r][col] / A[rank][col]
            for c in range(col, cols):
                A[r][c] -= factor * A[rank][c]
        rank += 1
    return rank


def gram_schmidt_residual(v, rows) -> np.ndarray:
    """Component of ``v`` orthogonal to ``span(rows)``, by classical Gram-Schmidt."""
    basis = []
    for r in np.asarray(rows, dtype=np.float64):
        w = r.copy()
        for b in basis:
            w = w - (w @ b) * b
        norm = math.sqrt(float(w @ w))
        if norm > 1e-12:
            basis.append(w / norm)
    out = np.asarray(v, dtype=np.float64).copy()
    for b in basis:
        out = out - (out @ b) * b
    return out


def dft2_matrix(channel) -> np.ndarray:
    """2-D DFT by explicit matrix multiplication; independent of np.fft."""
    x = np.asarray(channel, dtype=np.float64)
    n = x.shape[0]
    j = np.arange(n)
    W = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return W @ x @ W


def shannon_entropy(weights) -> float:
    """Entropy in nats of an unnormalized non-negative weight vector."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    total = w.sum()
    if total <= 0.0:
        return 0.0
    h = 0.0
    for v in w:
        p = v / total
        if p > 0.0:
            h -= p * math.log(p)
    return h


def average_precision_by_enumeration(scores, labels) -> float:
    """AP via explicit precision/recall enumeration over every prefix.

    Items are ranked by descending score with ties kept in input order (the
    documented tie policy).  AP is the sum over rank positions of
    precision(k) * (recall(k) - recall(k-1)).
    """
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    total_pos = sum(1 for y in labels if y == 1)
    if total_pos == 0:
        raise ValueError("no positives")
    ap = 0.0
    hits = 0
    prev_recall = 0.0
    for k, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            hits += 1
        precision = hits / k
        recall = hits / total_pos
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap


def logistic_regression_reference(X, y, lr: float = 0.5, iters: int = 5000):
    """Full-batch gradient-descent logistic regression, weights and bias.

    Plain python-loop-free numpy but independent of the trainer under test.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iters):
        z = X @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        g = (p - y) / n
        w -= lr * (X.T @ g)
        b -= lr * g.sum()
    return w, b


def perceptron_separable(X, y, epochs: int = 200) -> bool:
    """True if the perceptron finds a separating hyperplane (with bias)."""
    X = np.asarray(X, dtype=np.float64)
    t = np.where(np.asarray(y) == 1, 1.0, -1.0)
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        mistakes = 0
        for i in range(X.shape[0]):
            if t[i] * (X[i] @ w + b) <= 0:
                w += t[i] * X[i]
                b += t[i]
                mistakes += 1
        if mistakes == 0:
            return True
    return False

def contrastive_by_enumeration(features, labels, tau: float) -> float:
    """Literal per-anchor evaluation of the supervised contrastive loss.

    Pure python loops and scalar math; no shared code with the vectorized
    implementation under test.
    """
    F = [list(map(float, row)) for row in features]
    y = list(labels)
    n = len(F)

    def dot(a, b):
        return sum(ai * bi for ai, bi in zip(a, b))

    total, anchors = 0.0, 0
    for i in range(n):
        pos = [p for p in range(n) if p != i and y[p] == y[i]]
        if not pos:
            continue
        z = sum(math.exp(dot(F[i], F[j]) / tau) for j in range(n) if j != i)
        inner = sum(
            math.log(math.exp(dot(F[i], F[p]) / tau) / z) for p in pos
        ) / len(pos)
        total += -inner
        anchors += 1
    return total / anchors if anchors else 0.0


def adam_scalar_reference(p0: float, grad_sequence, alpha, beta1, beta2, eps) -> float:
    """Textbook bias-corrected Adam on one scalar, step by step."""
    m = v = 0.0
    p = float(p0)
    for t, g in enumerate(grad_sequence, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p -= alpha * m_hat / (math.sqrt(v_hat) + eps)
    return p
