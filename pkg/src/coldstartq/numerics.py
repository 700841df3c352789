"""Sparse-matrix kernels shared by all topic extractors.

Conventions: sparse matrices are ``scipy.sparse.csr_matrix`` in canonical form
(sorted indices, no explicit zeros), dense matrices are 2-D float64
``numpy.ndarray``. Both have a small versioned binary file format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

SPARSE_MAGIC = b"SPM1"
DENSE_MAGIC = b"DNM1"

_TRIPLE_DTYPE = np.dtype([("row", "<u8"), ("col", "<u8"), ("val", "<f8")])


@dataclass(frozen=True)
class SvdResult:
    """Rank-k factorization M ~= U @ diag(singular_values) @ V.T."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def as_csr(matrix) -> sp.csr_matrix:
    """Coerce to a canonical-form CSR matrix (sorted indices, no stored zeros)."""
    m = sp.csr_matrix(matrix, dtype=np.float64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def validate_sparse(m: sp.csr_matrix) -> None:
    """Check the sparse-matrix invariants; raises ValueError on violation."""
    if not sp.isspmatrix_csr(m):
        raise ValueError("expected a CSR matrix")
    if m.nnz:
        if not np.all(np.isfinite(m.data)):
            raise ValueError("sparse matrix contains non-finite values")
        if np.any(m.data == 0.0):
            raise ValueError("sparse matrix stores explicit zeros")
    for r in range(m.shape[0]):
        cols = m.indices[m.indptr[r] : m.indptr[r + 1]]
        if cols.size > 1 and np.any(np.diff(cols) <= 0):
            raise ValueError(f"row {r}: column indices not strictly increasing")


def validate_dense(a: np.ndarray) -> None:
    if a.ndim != 2:
        raise ValueError("dense matrix must be 2-D")
    if not np.all(np.isfinite(a)):
        raise ValueError("dense matrix contains non-finite values")


def tfidf(counts: sp.csr_matrix) -> sp.csr_matrix:
    """Reweight a term x article count matrix to TF-IDF.

    Entry (t, a) becomes ``count(t, a) * ln(n_articles / df(t))`` where df(t)
    is the number of articles containing t. Terms present in every article get
    weight 0 and are dropped from storage.
    """
    counts = as_csr(counts)
    n_terms, n_articles = counts.shape
    if counts.nnz == 0 or n_articles == 0:
        return counts
    df = np.diff(counts.indptr)  # nonzeros per row = document frequency
    idf = np.zeros(n_terms)
    present = df > 0
    idf[present] = np.log(n_articles / df[present])
    out = counts.copy()
    out.data = out.data * np.repeat(idf, df)
    out.eliminate_zeros()
    return out


def row_normalize(m: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; all-zero rows stay zero."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    scale = np.where(norms > 0.0, norms, 1.0)
    return m / scale[:, None]


def truncated_svd(
    m,
    k: int,
    seed: int,
    oversample: int = 10,
    power_iterations: int = 4,
) -> SvdResult:
    """Seeded randomized truncated SVD of a (sparse or dense) matrix.

    Randomized range finder with ``oversample`` extra probe directions and
    power iterations re-orthonormalized via QR at every half step. Columns of
    V are sign-canonicalized so their largest-magnitude entry is positive
    (with the paired U column flipped too), making output reproducible.
    """
    n_rows, n_cols = m.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(n_rows, n_cols):
        raise ValueError(f"k={k} exceeds min(n_rows, n_cols)={min(n_rows, n_cols)}")
    if sp.issparse(m):
        data = m.data if m.nnz else np.empty(0)
        if data.size and not np.all(np.isfinite(data)):
            raise ValueError("matrix contains non-finite values")
    else:
        m = np.asarray(m, dtype=np.float64)
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix contains non-finite values")

    rng = np.random.default_rng(seed)
    n_probe = min(k + oversample, min(n_rows, n_cols))
    probe = rng.standard_normal((n_cols, n_probe))
    q, _ = np.linalg.qr(m @ probe)
    for _ in range(power_iterations):
        z, _ = np.linalg.qr(m.T @ q)
        q, _ = np.linalg.qr(m @ z)

    b = q.T @ m if not sp.issparse(m) else np.asarray((m.T @ q).T)
    u_small, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ u_small[:, :k]
    v = vt[:k].T
    s = s[:k].copy()

    # Sign canonicalization: largest-|entry| of each V column made positive.
    for j in range(k):
        pivot = np.argmax(np.abs(v[:, j]))
        if v[pivot, j] < 0:
            v[:, j] = -v[:, j]
            u[:, j] = -u[:, j]
    return SvdResult(U=u, singular_values=s, V=v)


def save_sparse(path, m: sp.csr_matrix) -> None:
    """Write the versioned binary triple format: magic, dims, (row, col, f64)."""
    m = as_csr(m)
    coo = m.tocoo()
    triples = np.empty(m.nnz, dtype=_TRIPLE_DTYPE)
    triples["row"] = coo.row
    triples["col"] = coo.col
    triples["val"] = coo.data
    with open(path, "wb") as fh:
        fh.write(SPARSE_MAGIC)
        fh.write(struct.pack("<QQQ", m.shape[0], m.shape[1], m.nnz))
        triples.tofile(fh)


def load_sparse(path) -> sp.csr_matrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SPARSE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {SPARSE_MAGIC!r}")
        n_rows, n_cols, nnz = struct.unpack("<QQQ", fh.read(24))
        triples = np.fromfile(fh, dtype=_TRIPLE_DTYPE, count=nnz)
    if len(triples) != nnz:
        raise ValueError(f"{path}: truncated file, expected {nnz} triples")
    m = sp.coo_matrix(
        (triples["val"], (triples["row"], triples["col"])),
        shape=(n_rows, n_cols),
    )
    return as_csr(m)


def save_dense(path, a: np.ndarray) -> None:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    validate_dense(a)
    with open(path, "wb") as fh:
        fh.write(DENSE_MAGIC)
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        a.astype("<f8").tofile(fh)


def load_dense(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DENSE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {DENSE_MAGIC!r}")
        n_rows, n_cols = struct.unpack("<QQ", fh.read(16))
        block = np.fromfile(fh, dtype="<f8", count=n_rows * n_cols)
    if block.size != n_rows * n_cols:
        raise ValueError(f"{path}: truncated file")
    return block.reshape(n_rows, n_cols)
