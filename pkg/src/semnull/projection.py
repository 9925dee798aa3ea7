"""Null-space construction and semantic decoupling of feature matrices.

Given a corpus of text-aligned feature vectors ``V`` (one row per caption),
this module builds an orthonormal basis of the directions ``V`` barely spans
and the corresponding projector ``P = N @ N.T``.  Multiplying visual features
by ``P`` removes their text-aligned component while leaving everything
orthogonal to the corpus untouched, so the projector can be dropped in front
of any downstream classifier without retraining it.

All arithmetic runs in float64; the on-disk NSPJ container stores the
projector in float32 (see :func:`write_projection`).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    NonFiniteError,
    TruncatedError,
    UnsupportedVersionError,
)
from .validation import as_feature_matrix, check_in_unit_interval

NSPJ_MAGIC = b"NSPJ"
NSPJ_VERSION = 1

#: Default relative singular-value cutoff below which a direction counts as null.
DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis of the thresholded null-space of a feature corpus.

    ``columns`` is d x (d - rank_kept); its columns span the directions whose
    singular values fell at or below ``threshold`` times the largest one.
    """

    dim: int
    rank_kept: int
    columns: np.ndarray
    threshold: float
    source_count: int


@dataclass(frozen=True)
class SemanticNullSpace:
    """The d x d projector onto the null-space of a text-feature corpus.

    Satisfies, up to float64 round-off: symmetry, idempotence, eigenvalues in
    {0, 1}, and trace equal to ``dim - rank_kept``.
    """

    dim: int
    matrix: np.ndarray
    threshold: float
    rank_kept: int
    source_count: int


def nullspace_basis(V, threshold: float = DEFAULT_THRESHOLD) -> NullSpaceBasis:
    """Compute an orthonormal basis of the thresholded null-space of ``V``.

    The singular directions of ``V`` with ``sigma > threshold * sigma_max``
    are treated as spanned ("retained"); the returned basis holds every other
    right singular vector, including the exact-zero directions.  An empty
    corpus (zero rows) yields the full identity basis.

    Parameters
    ----------
    V : array-like, shape (n, d)
        One feature vector per row.
    threshold : float in [0, 1)
        Relative singular-value cutoff.

    Returns
    -------
    NullSpaceBasis with ``rank_kept + columns.shape[1] == d``.
    """
    theta = check_in_unit_interval(threshold, "threshold", closed_right=False)
    A = as_feature_matrix(V, "V")
    n, d = A.shape
    if n == 0:
        # No constraints: every direction is null.
        return NullSpaceBasis(
            dim=d, rank_kept=0, columns=np.eye(d), threshold=theta, source_count=0
        )
    # Wide inputs need the complete right-singular basis; the thin
    # factorization already provides it once n >= d.
    _, s, vt = np.linalg.svd(A, full_matrices=(n < d))
    if vt.shape[0] < d:  # pragma: no cover - guarded by full_matrices choice
        raise AssertionError("SVD returned an incomplete right-singular basis")
    sigma_max = s[0] if s.size else 0.0
    rank_kept = int(np.count_nonzero(s > theta * sigma_max)) if sigma_max > 0 else 0
    return NullSpaceBasis(
        dim=d,
        rank_kept=rank_kept,
        columns=np.ascontiguousarray(vt[rank_kept:].T),
        threshold=theta,
        source_count=n,
    )


def projection_matrix(basis: NullSpaceBasis) -> SemanticNullSpace:
    """Form the null-space projector ``P = N @ N.T`` from an orthonormal basis.

    Raises ``ValueError`` if the basis columns deviate from orthonormality by
    more than 1e-4 in Frobenius norm.
    """
    N = np.asarray(basis.columns, dtype=np.float64)
    d = basis.dim
    if N.shape != (d, d - basis.rank_kept):
        raise ValueError(
            f"basis columns have shape {N.shape}, expected {(d, d - basis.rank_kept)}"
        )
    k = N.shape[1]
    gram_defect = np.linalg.norm(N.T @ N - np.eye(k))
    if gram_defect > 1e-4:
        raise ValueError(
            f"basis columns are not orthonormal (Gram defect {gram_defect:.3e} > 1e-4)"
        )
    return SemanticNullSpace(
        dim=d,
        matrix=N @ N.T,
        threshold=basis.threshold,
        rank_kept=basis.rank_kept,
        source_count=basis.source_count,
    )


def project(U, ns: SemanticNullSpace) -> np.ndarray:
    """Project feature rows onto the null-space: returns ``U @ P``.

    Pure in its inputs and idempotent: re-projecting the output changes it
    only at round-off level.  Usable standalone, without any trained head.
    """
    A = as_feature_matrix(U, "U")
    if A.shape[1] != ns.dim:
        raise ValueError(f"U has {A.shape[1]} columns, projector expects {ns.dim}")
    return A @ ns.matrix


def fit_nullspace(V, threshold: float = DEFAULT_THRESHOLD) -> SemanticNullSpace:
    """Shorthand for ``projection_matrix(nullspace_basis(V, threshold))``."""
    return projection_matrix(nullspace_basis(V, threshold))


def write_projection(ns: SemanticNullSpace, sink) -> int:
    """Serialize a projector to the NSPJ container; returns bytes written.

    Layout: magic ``NSPJ``, version u16 LE, dim u32, rank_kept u32,
    threshold f64, then dim*dim float32 LE row-major matrix entries.
    """
    header = NSPJ_MAGIC + struct.pack(
        "<HIId", NSPJ_VERSION, ns.dim, ns.rank_kept, ns.threshold
    )
    body = np.ascontiguousarray(ns.matrix, dtype="<f4").tobytes()
    sink.write(header)
    sink.write(body)
    return len(header) + len(body)


def read_projection(source) -> SemanticNullSpace:
    """Read an NSPJ container written by :func:`write_projection`.

    The stored float32 matrix is widened back to float64.  Unknown versions
    and structurally damaged streams raise :class:`~semnull.errors.FormatError`
    subclasses.  The container does not record the corpus size, so
    ``source_count`` comes back as 0.
    """
    magic = source.read(4)
    if magic != NSPJ_MAGIC:
        raise BadMagicError(f"expected magic {NSPJ_MAGIC!r}, found {magic!r}")
    head = source.read(18)
    if len(head) < 18:
        raise TruncatedError("projection header truncated")
    version, dim, rank_kept, threshold = struct.unpack("<HIId", head)
    if version != NSPJ_VERSION:
        raise UnsupportedVersionError(f"unknown NSPJ version {version}")
    want = dim * dim * 4
    body = source.read(want)
    if len(body) < want:
        raise TruncatedError(
            f"projection matrix truncated: expected {want} bytes, found {len(body)}"
        )
    matrix = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(dim, dim)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteError("projection matrix contains non-finite entries")
    if rank_kept > dim:
        raise TruncatedError(f"rank_kept {rank_kept} exceeds dim {dim}")
    return SemanticNullSpace(
        dim=int(dim),
        matrix=matrix,
        threshold=float(threshold),
        rank_kept=int(rank_kept),
        source_count=0,
    )
