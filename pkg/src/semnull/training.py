"""Detection-head training on decoupled features, and the NSHD artifact.

The trainable capacity is a linear adapter (h x d) applied after null-space
projection, plus a single-logit classifier on the adapter outputs. Batches
optimize the weighted contrastive + BCE objective with from-scratch Adam;
everything is deterministic for a given config.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    NonFiniteError,
    TruncatedError,
    UnsupportedVersionError,
)
from .losses import bce_loss, combined_loss, contrastive_loss
from .optim import AdamHyper, AdamState, adam_step
from .projection import SemanticNullSpace, project
from .records import EmbeddingSet, visual_matrix
from .validation import as_feature_matrix, as_label_vector, check_in_unit_interval

NSHD_MAGIC = b"NSHD"
NSHD_VERSION = 1

ADAPTER_INITS = ("uniform", "identity")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for :func:`train`; serialized into NSHD trailers."""

    bce_weight: float = 0.2
    temperature: float = 0.07
    learning_rate: float = 2e-4
    batch_size: int = 32
    epochs: int = 2
    seed: int = 0
    adapter_width: int = 256
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    normalize_contrastive: bool = True
    adapter_init: str = "uniform"
    freeze_adapter: bool = False

    def __post_init__(self):
        check_in_unit_interval(self.bce_weight, "bce_weight")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.adapter_width < 1:
            raise ValueError(f"adapter_width must be >= 1, got {self.adapter_width}")
        if self.adapter_init not in ADAPTER_INITS:
            raise ValueError(
                f"adapter_init must be one of {ADAPTER_INITS}, got {self.adapter_init!r}"
            )
        AdamHyper(self.learning_rate, self.beta1, self.beta2, self.eps)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"config trailer is not valid JSON: {e}") from e
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise FormatError(f"config trailer has unknown fields {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DetectionHead:
    """Trained adapter (h x d), classifier weights (h), and bias."""

    adapter: np.ndarray
    classifier_w: np.ndarray
    classifier_b: float

    def __post_init__(self):
        adapter = np.ascontiguousarray(self.adapter, dtype=np.float64)
        w = np.ascontiguousarray(self.classifier_w, dtype=np.float64)
        if adapter.ndim != 2 or adapter.shape[0] < 1:
            raise ValueError(f"adapter must be h x d with h >= 1, got {adapter.shape}")
        if w.shape != (adapter.shape[0],):
            raise ValueError(
                f"classifier_w shape {w.shape} does not match adapter rows "
                f"{adapter.shape[0]}"
            )
        b = float(self.classifier_b)
        if not (np.all(np.isfinite(adapter)) and np.all(np.isfinite(w)) and np.isfinite(b)):
            raise NonFiniteError("head parameters must be finite")
        object.__setattr__(self, "adapter", adapter)
        object.__setattr__(self, "classifier_w", w)
        object.__setattr__(self, "classifier_b", b)

    @property
    def width(self) -> int:
        return int(self.adapter.shape[0])

    @property
    def dim(self) -> int:
        return int(self.adapter.shape[1])


def head_features(head: DetectionHead, X) -> np.ndarray:
    """Adapter outputs for decoupled features ``X`` (n x d) -> (n x h)."""
    A = as_feature_matrix(X, "X")
    if A.shape[1] != head.dim:
        raise ValueError(f"X has dimension {A.shape[1]}, head expects {head.dim}")
    return A @ head.adapter.T


def head_logits(head: DetectionHead, X) -> np.ndarray:
    return head_features(head, X) @ head.classifier_w + head.classifier_b


def _l2_rows(Z: np.ndarray):
    # Zero rows pass through unnormalized instead of dividing by zero.
    norms = np.sqrt((Z * Z).sum(axis=1))
    safe = np.where(norms > 0.0, norms, 1.0)
    return Z / safe[:, None], safe


def head_objective(adapter, classifier_w, classifier_b, X, labels, cfg: TrainConfig):
    """Combined loss and exact gradients for one batch of decoupled features.

    Returns ``(loss, grads)`` with grads keyed ``adapter``, ``classifier_w``,
    ``classifier_b`` (the bias gradient is a 0-d array).
    """
    A = np.asarray(adapter, dtype=np.float64)
    w = np.asarray(classifier_w, dtype=np.float64)
    b = float(np.asarray(classifier_b))
    X = np.asarray(X, dtype=np.float64)
    y = as_label_vector(labels, X.shape[0], "labels")

    Z = X @ A.T
    if cfg.normalize_contrastive:
        F, norms = _l2_rows(Z)
    else:
        F, norms = Z, None
    l_con, g_f = contrastive_loss(F, y, cfg.temperature)
    logits = Z @ w + b
    l_bce, g_logit = bce_loss(logits, y)
    loss = combined_loss(l_con, l_bce, cfg.bce_weight)

    lam = cfg.bce_weight
    if cfg.normalize_contrastive:
        # Through row normalization: dZ = (g - (g.f) f) / r per row.
        inner = (g_f * F).sum(axis=1, keepdims=True)
        g_z_con = (g_f - inner * F) / norms[:, None]
    else:
        g_z_con = g_f
    g_z = (1.0 - lam) * g_z_con + lam * np.outer(g_logit, w)
    grads = {
        "adapter": g_z.T @ X,
        "classifier_w": Z.T @ (lam * g_logit),
        "classifier_b": np.asarray(lam * g_logit.sum()),
    }
    return loss, grads


def _init_adapter(cfg: TrainConfig, dim: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.adapter_init == "identity":
        if cfg.adapter_width != dim:
            raise ValueError(
                f"identity adapter needs adapter_width == dim, got "
                f"{cfg.adapter_width} != {dim}"
            )
        return np.eye(dim)
    bound = 1.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=(cfg.adapter_width, dim))


def train(eset: EmbeddingSet, ns: SemanticNullSpace, cfg: TrainConfig) -> DetectionHead:
    """Optimize a fresh head on the set's decoupled visual features.

    Per epoch the records are shuffled with a cfg.seed-derived permutation;
    each batch is projected through ``ns``, pushed through the adapter, and
    updated with one Adam step on the combined objective. Batches that end up
    with fewer than two records are dropped (the contrastive term needs
    pairs). The result is byte-reproducible for a given config.
    """
    if len(eset) == 0:
        raise ValueError("training set is empty")
    if eset.dim != ns.dim:
        raise ValueError(f"set dimension {eset.dim} != projector dimension {ns.dim}")

    U = visual_matrix(eset).astype(np.float64)
    y = eset.labels()
    X_all = project(U, ns)
    rng = np.random.default_rng(cfg.seed)

    params = {
        "adapter": _init_adapter(cfg, ns.dim, rng),
        "classifier_w": np.zeros(cfg.adapter_width),
        "classifier_b": np.asarray(0.0),
    }
    state = AdamState.initial(params)
    hyper = AdamHyper(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    n = len(eset)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if idx.size < 2:
                continue
            _, grads = head_objective(
                params["adapter"], params["classifier_w"], params["classifier_b"],
                X_all[idx], y[idx], cfg,
            )
            if cfg.freeze_adapter:
                grads["adapter"] = np.zeros_like(params["adapter"])
            params, state = adam_step(params, grads, state, hyper)

    return DetectionHead(
        adapter=params["adapter"],
        classifier_w=params["classifier_w"],
        classifier_b=float(params["classifier_b"]),
    )


def write_head(head: DetectionHead, cfg: TrainConfig, sink) -> int:
    """Serialize head + config as NSHD; returns bytes written."""
    trailer = cfg.to_json().encode("utf-8")
    blob = b"".join([
        NSHD_MAGIC,
        struct.pack("<HII", NSHD_VERSION, head.dim, head.width),
        np.ascontiguousarray(head.adapter, dtype="<f4").tobytes(),
        np.ascontiguousarray(head.classifier_w, dtype="<f4").tobytes(),
        struct.pack("<f", head.classifier_b),
        struct.pack("<I", len(trailer)),
        trailer,
    ])
    sink.write(blob)
    return len(blob)


def read_head(source):
    """Parse an NSHD stream; returns ``(DetectionHead, TrainConfig)``."""
    data = source.read()

    def take(pos, n, what):
        if pos + n > len(data):
            raise TruncatedError(
                f"truncated head file: needed {n} more bytes for {what}, "
                f"found {len(data) - pos}"
            )
        return data[pos : pos + n], pos + n

    raw, pos = take(0, 4, "magic")
    if raw != NSHD_MAGIC:
        raise BadMagicError(f"expected magic {NSHD_MAGIC!r}, got {raw!r}")
    raw, pos = take(pos, 10, "header")
    version, dim, width = struct.unpack("<HII", raw)
    if version != NSHD_VERSION:
        raise UnsupportedVersionError(f"unsupported NSHD version {version}")
    if dim < 1 or width < 1:
        raise FormatError(f"bad head dimensions d={dim}, h={width}")

    raw, pos = take(pos, 4 * dim * width, "adapter")
    adapter = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(width, dim)
    raw, pos = take(pos, 4 * width, "classifier weights")
    w = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    raw, pos = take(pos, 4, "classifier bias")
    b = struct.unpack("<f", raw)[0]
    raw, pos = take(pos, 4, "config length")
    (trailer_len,) = struct.unpack("<I", raw)
    raw, pos = take(pos, trailer_len, "config trailer")
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after config trailer")
    try:
        cfg = TrainConfig.from_json(raw.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise FormatError("config trailer is not valid UTF-8") from e
    if not (np.all(np.isfinite(adapter)) and np.all(np.isfinite(w)) and np.isfinite(b)):
        raise NonFiniteError("head file contains non-finite parameters")
    return DetectionHead(adapter=adapter, classifier_w=w, classifier_b=float(b)), cfg
