"""Sparse item-item cosine similarity over binary implicit ratings.

For binary ratings the cosine of items i and j reduces to
``s_ij = c_ij / sqrt(n_i * n_j)`` where ``c_ij`` counts users who rated
both and ``n_i`` counts users who rated i.  Only nonzero entries are
stored; the diagonal never is.  Rows are complete (no shrinkage,
thresholding, or top-k truncation), because downstream signal-to-noise
denominators sum over entire rows.

Co-rating counts are accumulated through user profiles (cost proportional
to the sum of squared profile lengths), realized as the sparse product
R^T R of the binary user-item matrix.  The finished model is immutable
and safe for concurrent reads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import TrainSet

_CACHE_MAGIC = b"DCFSIM"
_CACHE_VERSION = 1


class CacheFormatError(ValueError):
    """Raised when a similarity cache file is malformed."""


class CacheMismatchError(ValueError):
    """Raised when a cache was built from a different training set."""


@dataclass
class SimilarityModel:
    """Symmetric sparse similarity matrix with per-item caches.

    ``matrix`` is items x items CSR with zero diagonal and sorted indices;
    ``user_counts[i]`` is the number of distinct users who rated i;
    ``row_sq_sums[i]`` caches the sum of squared entries of row i.
    """

    matrix: sp.csr_matrix
    user_counts: np.ndarray
    row_sq_sums: np.ndarray

    @property
    def n_items(self) -> int:
        return self.matrix.shape[0]

    def _check_item(self, i: int) -> None:
        if not 0 <= i < self.n_items:
            raise IndexError(f"unknown item index {i} (have {self.n_items} items)")

    def row_arrays(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Views of row i's column indices and values (do not mutate)."""
        self._check_item(i)
        m = self.matrix
        lo, hi = m.indptr[i], m.indptr[i + 1]
        return m.indices[lo:hi], m.data[lo:hi]

    def row(self, i: int) -> dict[int, float]:
        """Sparse row of item i; absent keys mean exactly zero."""
        idx, val = self.row_arrays(i)
        return {int(j): float(s) for j, s in zip(idx, val)}

    def value(self, i: int, j: int) -> float:
        """Single similarity s_ij (0.0 when not stored)."""
        self._check_item(j)
        idx, val = self.row_arrays(i)
        pos = np.searchsorted(idx, j)
        if pos < len(idx) and idx[pos] == j:
            return float(val[pos])
        return 0.0

    @property
    def stored_entries(self) -> int:
        return self.matrix.nnz


def similarity_row(model: SimilarityModel, i: int) -> dict[int, float]:
    """Query surface for one item's similarity row."""
    return model.row(i)


def build_similarity(train: TrainSet) -> SimilarityModel:
    """Build the item-item cosine model from a training set."""
    if train.n_ratings == 0:
        raise ValueError("cannot build similarity model from an empty training set")
    n_items = train.n_items
    rows: list[int] = []
    cols: list[int] = []
    for u, prof in enumerate(train.profiles):
        for item, _ts in prof:
            rows.append(u)
            cols.append(item)
    ratings = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(train.n_users, n_items),
    )
    counts = np.asarray(ratings.getnnz(axis=0), dtype=np.int64)

    co = (ratings.T @ ratings).tocoo()
    inv_sqrt = np.zeros(n_items)
    rated = counts > 0
    inv_sqrt[rated] = 1.0 / np.sqrt(counts[rated])
    off_diag = co.row != co.col
    r, c = co.row[off_diag], co.col[off_diag]
    # multiply the two scale factors first so s_ij == s_ji bit for bit
    data = co.data[off_diag] * (inv_sqrt[r] * inv_sqrt[c])
    matrix = sp.csr_matrix((data, (r, c)), shape=(n_items, n_items))
    matrix.sum_duplicates()
    matrix.sort_indices()

    sq = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
    return SimilarityModel(matrix, counts, sq)


def save_cache(model: SimilarityModel, path: str, dataset_hash: str) -> None:
    """Write a binary cache of the model, keyed by the training set hash.

    Layout (little-endian): magic, version u16, 32-byte SHA-256 digest,
    item count u32, then one record per item:
    item index u32, user count u32, entry count u32, entries (j u32, s f64).
    """
    digest = bytes.fromhex(dataset_hash)
    if len(digest) != 32:
        raise ValueError("dataset_hash must be a 64-character hex SHA-256")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<H", _CACHE_VERSION))
        fh.write(digest)
        fh.write(struct.pack("<I", model.n_items))
        for i in range(model.n_items):
            idx, val = model.row_arrays(i)
            fh.write(struct.pack("<III", i, int(model.user_counts[i]), len(idx)))
            for j, s in zip(idx, val):
                fh.write(struct.pack("<Id", int(j), float(s)))


def load_cache(path: str, dataset_hash: str) -> SimilarityModel:
    """Load a cached model, refusing one built from a different dataset."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_CACHE_MAGIC)] != _CACHE_MAGIC:
        raise CacheFormatError(f"{path}: not a similarity cache")
    off = len(_CACHE_MAGIC)
    (version,) = struct.unpack_from("<H", blob, off)
    off += 2
    if version != _CACHE_VERSION:
        raise CacheFormatError(f"{path}: unsupported cache version {version}")
    digest = blob[off : off + 32].hex()
    off += 32
    if digest != dataset_hash:
        raise CacheMismatchError(
            f"{path}: cache was built from a different training set "
            f"(cache {digest[:12]}..., expected {dataset_hash[:12]}...)"
        )
    (n_items,) = struct.unpack_from("<I", blob, off)
    off += 4

    counts = np.zeros(n_items, dtype=np.int64)
    indptr = np.zeros(n_items + 1, dtype=np.int64)
    all_idx: list[np.ndarray] = []
    all_val: list[np.ndarray] = []
    try:
        for _ in range(n_items):
            i, user_count, entry_count = struct.unpack_from("<III", blob, off)
            off += 12
            counts[i] = user_count
            entries = np.frombuffer(
                blob, dtype=np.dtype([("j", "<u4"), ("s", "<f8")]), count=entry_count, offset=off
            )
            off += 12 * entry_count
            indptr[i + 1] = entry_count
            all_idx.append(entries["j"].astype(np.int32))
            all_val.append(entries["s"].astype(np.float64))
    except (struct.error, ValueError) as exc:
        raise CacheFormatError(f"{path}: truncated cache ({exc})") from None
    if off != len(blob):
        raise CacheFormatError(f"{path}: trailing bytes after last record")

    np.cumsum(indptr, out=indptr)
    indices = np.concatenate(all_idx) if all_idx else np.zeros(0, dtype=np.int32)
    data = np.concatenate(all_val) if all_val else np.zeros(0)
    matrix = sp.csr_matrix((data, indices, indptr), shape=(n_items, n_items))
    matrix.sort_indices()
    sq = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
    return SimilarityModel(matrix, counts, sq)
