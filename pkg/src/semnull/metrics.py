"""Scoring and the detection metrics: per-source accuracy and AP.

Scores are sigmoid probabilities of the generated class. The report follows
the breakdown used for generator-grid benchmarks: one accuracy per fake
source, one for real records, their unweighted mean, and average precision
over the whole set.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .projection import SemanticNullSpace, project
from .records import EmbeddingSet, visual_matrix
from .training import DetectionHead, head_features
from .validation import as_label_vector

DEFAULT_DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class EvalReport:
    """Metric bundle for one scored set.

    ``real_acc`` is None when the set has no real records, and ``ap`` is None
    when it has no fake records; both are otherwise fractions in [0, 1].
    ``counts`` tallies records per source tag as given, labels ignored.
    """

    threshold: float
    real_acc: float | None
    per_source_fake_acc: dict
    mean_acc: float
    ap: float | None
    counts: dict


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict(head: DetectionHead, ns: SemanticNullSpace, eset: EmbeddingSet) -> np.ndarray:
    """Sigmoid score per record, in record order."""
    if eset.dim != ns.dim:
        raise ValueError(f"set dimension {eset.dim} != projector dimension {ns.dim}")
    if len(eset) == 0:
        return np.empty(0)
    U = visual_matrix(eset).astype(np.float64)
    features = head_features(head, project(U, ns))
    return _sigmoid(features @ head.classifier_w + head.classifier_b)


def average_precision(scores, labels) -> float:
    """AP with ties ranked by stable input order.

    Records are ranked by descending score (equal scores keep input order);
    AP is the mean over positives of the precision at each positive's rank.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError(f"scores must be a vector, got shape {s.shape}")
    y = as_label_vector(labels, s.shape[0], "labels")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = sorted(range(s.shape[0]), key=lambda i: (-s[i], i))
    hits = 0
    total = 0.0
    for rank, i in enumerate(order, start=1):
        if y[i] == 1:
            hits += 1
            total += hits / rank
    return total / n_pos


def accuracy_report(scores, labels, sources, threshold: float = DEFAULT_DECISION_THRESHOLD) -> EvalReport:
    """Per-source accuracies at a decision cutoff; score >= threshold ⇒ fake."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a non-empty vector")
    y = as_label_vector(labels, s.shape[0], "labels")
    tags = list(sources)
    if len(tags) != s.shape[0]:
        raise ValueError(f"got {len(tags)} sources for {s.shape[0]} scores")

    flagged = s >= threshold
    real_mask = y == 0
    real_acc = None
    if real_mask.any():
        real_acc = float((~flagged[real_mask]).mean())

    fake_acc = {}
    counts = {}
    for tag in tags:
        counts[tag] = counts.get(tag, 0) + 1
    for tag in sorted(set(t for t, label in zip(tags, y) if label == 1)):
        mask = np.array([t == tag for t in tags]) & (y == 1)
        fake_acc[tag] = float(flagged[mask].mean())

    parts = list(fake_acc.values())
    if real_acc is not None:
        parts.append(real_acc)
    mean_acc = float(np.mean(parts))
    ap = average_precision(s, y) if (y == 1).any() else None
    return EvalReport(
        threshold=float(threshold),
        real_acc=real_acc,
        per_source_fake_acc=fake_acc,
        mean_acc=mean_acc,
        ap=ap,
        counts=counts,
    )


def evaluate(head: DetectionHead, ns: SemanticNullSpace, eset: EmbeddingSet,
             threshold: float = DEFAULT_DECISION_THRESHOLD) -> EvalReport:
    """Score a set and compute its report in one step."""
    if len(eset) == 0:
        raise ValueError("cannot evaluate an empty set")
    return accuracy_report(
        predict(head, ns, eset), eset.labels(), eset.sources(), threshold
    )


def _json_number(value: float) -> str:
    return f"{value:.6f}"


def report_json(report: EvalReport) -> str:
    """Render a report as JSON with fixed key order and 6-decimal numbers.

    ``real_acc`` and ``ap`` are omitted when absent; object keys are sorted
    so output is byte-deterministic.
    """
    parts = [f'"threshold":{_json_number(report.threshold)}']
    if report.real_acc is not None:
        parts.append(f'"real_acc":{_json_number(report.real_acc)}')
    inner = ",".join(
        f"{json.dumps(tag)}:{_json_number(acc)}"
        for tag, acc in sorted(report.per_source_fake_acc.items())
    )
    parts.append(f'"per_source_fake_acc":{{{inner}}}')
    parts.append(f'"mean_acc":{_json_number(report.mean_acc)}')
    if report.ap is not None:
        parts.append(f'"ap":{_json_number(report.ap)}')
    inner = ",".join(
        f"{json.dumps(tag)}:{count}" for tag, count in sorted(report.counts.items())
    )
    parts.append(f'"counts":{{{inner}}}')
    return "{" + ",".join(parts) + "}"


def export_features_csv(head: DetectionHead, ns: SemanticNullSpace,
                        eset: EmbeddingSet, fp) -> int:
    """Write `id,label,source,f_1..f_h` rows of post-adapter features.

    Returns the number of data rows written.
    """
    if eset.dim != ns.dim:
        raise ValueError(f"set dimension {eset.dim} != projector dimension {ns.dim}")
    width = head.width
    header = ["id", "label", "source"] + [f"f_{i + 1}" for i in range(width)]
    fp.write(",".join(header) + "\n")
    if len(eset) == 0:
        return 0
    U = visual_matrix(eset).astype(np.float64)
    features = head_features(head, project(U, ns))
    writer = csv.writer(fp, lineterminator="\n")
    for record, row in zip(eset.records, features):
        writer.writerow(
            [record.id, record.label, record.source]
            + [f"{v:.9g}" for v in row]
        )
    return len(eset)
