"""Similarity graph construction and validation.

The graph is held as a symmetric scipy CSR matrix with sorted column
indices, zero diagonal and no explicit zeros. Every routine that builds one
goes through the same checks, so downstream code can rely on them.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, InvalidParameterError, IsolatedNodeError

__all__ = [
    "SparseSimilarity",
    "validate_graph",
    "from_matrix",
    "knn_graph",
    "knn_indices",
]

# element budget for the (rows x n x d) difference tensor in knn_indices
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True, eq=False)
class SparseSimilarity:
    """Symmetric nonnegative similarity graph without self-loops.

    Use :func:`validate_graph`, :func:`from_matrix` or :func:`knn_graph`
    to construct one; the constructor does not re-check its input.
    """

    matrix: sp.csr_matrix

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        """Stored entries, counting both (i, j) and (j, i)."""
        return self.matrix.nnz

    @property
    def n_edges(self):
        return self.matrix.nnz // 2

    def degrees(self):
        """Number of neighbours of each node."""
        return np.diff(self.matrix.indptr)

    def coo(self):
        """Row indices, column indices and weights of all stored entries."""
        m = self.matrix
        rows = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
        return rows, m.indices, m.data

    def entries(self):
        """Upper-triangle entries as a list of ``(i, j, weight)`` with i < j."""
        rows, cols, vals = self.coo()
        keep = rows < cols
        return [(int(i), int(j), float(w)) for i, j, w in zip(rows[keep], cols[keep], vals[keep])]

    def toarray(self):
        return self.matrix.toarray()

    def permute(self, perm):
        """Graph with node ``perm[i]`` of ``self`` relabelled as node ``i``."""
        perm = np.asarray(perm)
        return _checked(self.matrix[perm][:, perm])

    def same_as(self, other):
        """Entry-exact equality."""
        a, b = self.matrix, other.matrix
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )


def _checked(matrix):
    m = sp.csr_matrix(matrix, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"similarity matrix must be square, got {m.shape}")
    if m.shape[0] < 2:
        raise InvalidInputError("a similarity graph needs at least 2 nodes")
    m.sum_duplicates()
    if not np.all(np.isfinite(m.data)):
        raise InvalidInputError("similarity weights must be finite")
    if np.any(m.data < 0):
        raise InvalidInputError("similarity weights must be nonnegative")
    c = m.tocoo()
    off = (c.row != c.col) & (c.data != 0)
    m = sp.csr_matrix((c.data[off], (c.row[off], c.col[off])), shape=m.shape)
    m.sort_indices()
    if (m != m.T).nnz:
        raise InvalidInputError("similarity matrix is not symmetric")
    empty = np.flatnonzero(np.diff(m.indptr) == 0)
    if empty.size:
        raise IsolatedNodeError(empty[0])
    return SparseSimilarity(m)


def validate_graph(entries, n, directed=False):
    """Build a checked graph from a raw ``(i, j, weight)`` list.

    Undirected input (the default) lists each edge once in either
    orientation; listing a pair twice with different weights is an error.
    With ``directed=True`` the entries describe an arbitrary nonnegative
    matrix which is symmetrized by ``max(A_ij, A_ji)``.

    Zero weights and diagonal entries are dropped.
    """
    n = int(n)
    if n < 2:
        raise InvalidInputError("a similarity graph needs at least 2 nodes")
    entries = list(entries)
    if entries:
        arr = np.asarray(entries, dtype=np.float64).reshape(-1, 3)
        rows, cols, vals = arr[:, 0], arr[:, 1], arr[:, 2]
    else:
        rows = cols = vals = np.zeros(0)
    if np.any(rows != np.round(rows)) or np.any(cols != np.round(cols)):
        raise InvalidInputError("node indices must be integers")
    rows, cols = rows.astype(np.int64), cols.astype(np.int64)
    if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
        raise InvalidInputError(f"node index out of range for n={n}")
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("similarity weights must be finite")
    if np.any(vals < 0):
        bad = int(np.flatnonzero(vals < 0)[0])
        raise InvalidInputError(f"negative weight {vals[bad]} at ({rows[bad]}, {cols[bad]})")

    keep = (rows != cols) & (vals != 0)
    rows, cols, vals = rows[keep], cols[keep], vals[keep]

    if directed:
        m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        m.sum_duplicates()
        return _checked(m.maximum(m.T))

    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    seen = {}
    for i, j, w in zip(lo.tolist(), hi.tolist(), vals.tolist()):
        if seen.setdefault((i, j), w) != w:
            raise InvalidInputError(
                f"conflicting weights {seen[(i, j)]} and {w} for edge ({i}, {j})"
            )
    if seen:
        pairs = np.array(list(seen.keys()), dtype=np.int64)
        w = np.array(list(seen.values()))
        r = np.concatenate([pairs[:, 0], pairs[:, 1]])
        c = np.concatenate([pairs[:, 1], pairs[:, 0]])
        m = sp.coo_matrix((np.concatenate([w, w]), (r, c)), shape=(n, n))
    else:
        m = sp.csr_matrix((n, n))
    return _checked(m)


def from_matrix(matrix):
    """Check a dense or sparse symmetric matrix and wrap it.

    The diagonal is discarded. Unlike :func:`validate_graph` no
    symmetrization is attempted.
    """
    if sp.issparse(matrix):
        return _checked(matrix)
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError("similarity matrix must be 2-D")
    return _checked(sp.csr_matrix(arr))


def _check_features(features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidInputError("features must be an n x d array")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise InvalidInputError(f"need n >= 2 samples and d >= 1 features, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("features must be finite")
    return X


def knn_indices(features, K):
    """Indices of the ``K`` nearest neighbours of every row.

    Euclidean distance; a point is never its own neighbour. Equal distances
    are broken in favour of the smaller index. Returns an ``(n, K)`` int
    array whose rows are sorted by (distance, index).
    """
    X = _check_features(features)
    n = X.shape[0]
    K = int(K)
    if K < 1 or K >= n:
        raise InvalidParameterError(f"K must satisfy 1 <= K < n={n}, got {K}")
    out = np.empty((n, K), dtype=np.int64)
    block = max(1, _BLOCK_ELEMENTS // (n * X.shape[1]))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = X[start:stop, None, :] - X[None, :, :]
        d2 = np.einsum("bnd,bnd->bn", diff, diff)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps index order among equal distances
        part = np.argpartition(d2, K - 1, axis=1)[:, :K] if K < n - 1 else None
        for b in range(stop - start):
            row = d2[b]
            if part is None:
                cand = np.arange(n)
            else:
                kth = row[part[b]].max()
                cand = np.flatnonzero(row <= kth)
            order = np.argsort(row[cand], kind="stable")
            out[start + b] = cand[order[:K]]
    return out


def knn_graph(features, K):
    """Symmetrized, binarized K-nearest-neighbour graph.

    ``A_ij = 1`` when j is among the K nearest neighbours of i or i is
    among those of j, else 0.
    """
    nbrs = knn_indices(features, K)
    n = nbrs.shape[0]
    rows = np.repeat(np.arange(n), nbrs.shape[1])
    B = sp.coo_matrix((np.ones(rows.size), (rows, nbrs.ravel())), shape=(n, n)).tocsr()
    A = B.maximum(B.T)
    return _checked(A)
