"""Scikit-learn style wrappers over the functional core.

Three estimators cover the pipeline stages: ``SemanticNullProjector`` learns
the text null-space and decouples visual features, ``PatchSelector`` applies
the entropy mosaic to images, and ``NullSpaceDetector`` chains projection and
head training into a binary classifier. All parameters are plain constructor
arguments, so ``get_params`` / ``set_params`` / ``clone`` behave as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .patches import SelectionConfig, select_and_reassemble
from .projection import DEFAULT_THRESHOLD, fit_nullspace, project
from .records import EmbeddingRecord, EmbeddingSet
from .training import TrainConfig, head_logits, train
from .validation import as_feature_matrix, as_label_vector


class SemanticNullProjector(TransformerMixin, BaseEstimator):
    """Project visual features onto the null space of a text corpus.

    ``fit`` takes the text-feature corpus (one embedding per row); keep-or-
    drop of singular directions is controlled by ``threshold``, the fraction
    of the largest singular value below which directions count as null.
    ``transform`` then removes the retained text directions from any feature
    matrix of the same dimension.
    """

    def __init__(self, threshold: float = DEFAULT_THRESHOLD):
        self.threshold = threshold

    def fit(self, X, y=None):
        self.nullspace_ = fit_nullspace(X, self.threshold)
        self.dim_ = self.nullspace_.dim
        self.rank_kept_ = self.nullspace_.rank_kept
        return self

    def transform(self, X):
        if not hasattr(self, "nullspace_"):
            raise NotFittedError("SemanticNullProjector is not fitted yet")
        return project(X, self.nullspace_)


class PatchSelector(TransformerMixin, BaseEstimator):
    """Shuffle-reassemble images from their entropy-extreme patches.

    Stateless apart from parameter validation; ``transform`` accepts a single
    HxWx3 uint8 image (returns one mosaic) or a sequence of images (returns a
    list of mosaics).
    """

    def __init__(self, patch_size: int = 32, target_size: int = 224, seed: int = 0):
        self.patch_size = patch_size
        self.target_size = target_size
        self.seed = seed

    def fit(self, X=None, y=None):
        self.config_ = SelectionConfig(
            patch_size=self.patch_size,
            target_size=self.target_size,
            seed=self.seed,
        )
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            raise NotFittedError("PatchSelector is not fitted yet")
        if isinstance(X, np.ndarray) and X.ndim == 3:
            return select_and_reassemble(X, self.config_)
        return [select_and_reassemble(img, self.config_) for img in X]


class NullSpaceDetector(ClassifierMixin, BaseEstimator):
    """Binary real-vs-generated classifier on decoupled embeddings.

    ``fit(X, y, text_corpus=...)`` learns the null-space projector from the
    corpus (identity projection when no corpus is given), then trains the
    adapter + classifier head on the projected features. ``predict`` flags a
    row as generated when its sigmoid score reaches ``decision_threshold``.
    """

    def __init__(
        self,
        threshold: float = DEFAULT_THRESHOLD,
        bce_weight: float = 0.2,
        temperature: float = 0.07,
        learning_rate: float = 2e-4,
        batch_size: int = 32,
        epochs: int = 2,
        seed: int = 0,
        adapter_width: int = 256,
        decision_threshold: float = 0.5,
        normalize_contrastive: bool = True,
    ):
        self.threshold = threshold
        self.bce_weight = bce_weight
        self.temperature = temperature
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.adapter_width = adapter_width
        self.decision_threshold = decision_threshold
        self.normalize_contrastive = normalize_contrastive

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            bce_weight=self.bce_weight,
            temperature=self.temperature,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            adapter_width=self.adapter_width,
            normalize_contrastive=self.normalize_contrastive,
        )

    def fit(self, X, y, text_corpus=None):
        X = as_feature_matrix(X, "X")
        y = as_label_vector(y, X.shape[0], "y")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError(
                f"decision_threshold must be in (0, 1), got {self.decision_threshold}"
            )
        corpus = (
            np.empty((0, X.shape[1])) if text_corpus is None else text_corpus
        )
        self.nullspace_ = fit_nullspace(corpus, self.threshold)
        if self.nullspace_.dim != X.shape[1]:
            raise ValueError(
                f"text corpus dimension {self.nullspace_.dim} does not match "
                f"X dimension {X.shape[1]}"
            )
        records = tuple(
            EmbeddingRecord(
                id=f"row-{i}",
                label=int(label),
                source="generated" if label else "real",
                visual=row.astype(np.float32),
            )
            for i, (row, label) in enumerate(zip(X, y))
        )
        eset = EmbeddingSet(dim=X.shape[1], records=records)
        self.head_ = train(eset, self.nullspace_, self._train_config())
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        if not hasattr(self, "head_"):
            raise NotFittedError("NullSpaceDetector is not fitted yet")
        X = as_feature_matrix(X, "X")
        return head_logits(self.head_, project(X, self.nullspace_))

    def predict_proba(self, X):
        z = self.decision_function(X)
        p_fake = np.where(
            z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
            np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))),
        )
        return np.column_stack([1.0 - p_fake, p_fake])

    def predict(self, X):
        p_fake = self.predict_proba(X)[:, 1]
        return (p_fake >= self.decision_threshold).astype(np.int64)
