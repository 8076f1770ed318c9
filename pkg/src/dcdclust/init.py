"""Starting points for the DCD optimizer.

The pipeline follows the usual recipe for multiplicative graph clustering:
a Normalized-Cut spectral embedding is discretized by k-means, the labels
are turned into a perturbed indicator matrix, and that matrix seeds a few
Dirichlet-regularized runs. Every start then gets a final unregularized run
and the one with the smallest KL error wins.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph
import scipy.sparse.linalg

from . import dcd
from .errors import AllCandidatesFailedError, DCDError, InvalidParameterError, NumericError
from .evaluation import hard_labels

__all__ = [
    "DEFAULT_ALPHAS",
    "DisconnectedGraphWarning",
    "SpectralEmbedding",
    "InitCandidate",
    "normalized_affinity",
    "ncut_embed",
    "kmeans",
    "kmeans_fit",
    "indicator_perturb",
    "multi_start",
]

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (1.2, 2.0, 5.0)
DEFAULT_EPS = 0.2
#: graphs up to this size use a dense eigendecomposition
DENSE_EIG_MAX = 2000
RESIDUAL_TOL = 1e-8


class DisconnectedGraphWarning(RuntimeWarning):
    pass


@dataclass
class SpectralEmbedding:
    """Leading eigenpairs of ``D^-1/2 A D^-1/2``.

    ``coordinates`` are the eigenvector rows scaled to unit length (zero
    rows stay zero); ``vectors`` keeps the raw orthonormal eigenvectors.
    """

    coordinates: np.ndarray
    vectors: np.ndarray
    values: np.ndarray
    operator: sp.csr_matrix

    @property
    def n(self):
        return self.coordinates.shape[0]

    @property
    def r(self):
        return self.coordinates.shape[1]

    def residuals(self):
        return np.linalg.norm(self.operator @ self.vectors - self.vectors * self.values, axis=0)


@dataclass
class InitCandidate:
    """One start of the multi-start search and the outcome of its final run."""

    source: str
    alpha_used: float
    W0: np.ndarray = None
    W: np.ndarray = None
    labels: np.ndarray = None
    final_kl: float = None
    iterations_run: int = 0
    prior_iterations: int = 0
    traces: list = field(default_factory=list)
    error: str = None

    @property
    def ok(self):
        return self.error is None


def normalized_affinity(A):
    d = np.asarray(A.matrix.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    return sp.csr_matrix(inv_sqrt @ A.matrix @ inv_sqrt)


def _fix_signs(vectors):
    # make the largest-magnitude entry of every column positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def ncut_embed(A, r):
    """Spectral relaxation of the Normalized Cut with ``r`` eigenvectors."""
    n = A.n
    r = int(r)
    if not 1 <= r < n:
        raise InvalidParameterError(f"embedding dimension must satisfy 1 <= r < n={n}, got {r}")
    n_comp, _ = scipy.sparse.csgraph.connected_components(A.matrix, directed=False)
    if n_comp > 1:
        warnings.warn(
            f"graph has {n_comp} connected components; the leading eigenspace is degenerate",
            DisconnectedGraphWarning,
            stacklevel=2,
        )
    M = normalized_affinity(A)
    if n <= DENSE_EIG_MAX:
        values, vectors = scipy.linalg.eigh(M.toarray(), subset_by_index=[n - r, n - 1])
    else:
        v0 = np.random.default_rng(0).uniform(0.5, 1.5, n)
        try:
            values, vectors = scipy.sparse.linalg.eigsh(M, k=r, which="LA", v0=v0, tol=0)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericError(
                f"eigensolver did not converge: {len(exc.eigenvalues)} of {r} eigenpairs found"
            ) from exc
    order = np.argsort(values)[::-1]
    values, vectors = values[order], _fix_signs(vectors[:, order])

    emb = SpectralEmbedding(None, vectors, values, M)
    res = emb.residuals()
    if res.max() > RESIDUAL_TOL:
        raise NumericError(f"eigenvector residuals too large: max {res.max():.3g}")

    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    emb.coordinates = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)
    return emb


# ---------------------------------------------------------------------------
# k-means


def _sq_dists(points, centers):
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeans_pp(points, r, rng):
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, r):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # all remaining points coincide with a center
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[idx : idx + 1])[:, 0])
    return points[chosen].copy()


def _assign(points, centers):
    d2 = _sq_dists(points, centers)
    labels = np.argmin(d2, axis=1)
    r = centers.shape[0]
    counts = np.bincount(labels, minlength=r)
    for k in np.flatnonzero(counts == 0):
        big = int(np.argmax(counts))
        members = np.flatnonzero(labels == big)
        far = members[np.argmax(d2[members, big])]
        labels[far] = k
        counts[big] -= 1
        counts[k] += 1
        centers[k] = points[far]
        d2[far, k] = 0.0
    return labels


def _centroids(points, labels, r):
    sums = np.zeros((r, points.shape[1]))
    np.add.at(sums, labels, points)
    return sums / np.bincount(labels, minlength=r)[:, None]


def _inertia(points, labels, centers):
    diff = points - centers[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def kmeans_fit(points, r, seed=42, max_iter=300):
    """Lloyd's algorithm from a k-means++ start.

    Returns ``(labels, centers, history)`` where ``history`` holds the
    within-cluster sum of squares after every centroid update.
    """
    points = np.asarray(getattr(points, "coordinates", points), dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    r = int(r)
    if not 1 <= r <= n:
        raise InvalidParameterError(f"number of clusters must satisfy 1 <= r <= n={n}, got {r}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, r, rng)
    labels = _assign(points, centers)
    history = []
    for _ in range(max_iter):
        centers = _centroids(points, labels, r)
        history.append(_inertia(points, labels, centers))
        new = _assign(points, centers)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, centers, history


def kmeans(points, r, seed=42):
    """Hard k-means labels of ``points`` (an array or a SpectralEmbedding)."""
    return kmeans_fit(points, r, seed)[0]


# ---------------------------------------------------------------------------


def indicator_perturb(labels, r, eps=DEFAULT_EPS):
    """Binary indicator matrix of ``labels`` with ``eps`` added everywhere."""
    labels = np.asarray(labels, dtype=np.int64)
    if eps <= 0:
        raise InvalidParameterError(f"perturbation must be positive, got {eps}")
    if labels.size and (labels.min() < 0 or labels.max() >= r):
        raise InvalidParameterError(f"labels must lie in [0, {r})")
    W = np.full((labels.size, int(r)), float(eps))
    W[np.arange(labels.size), labels] += 1.0
    return W


def _source_name(alpha):
    return "ncut" if alpha is None else f"dcd-prior-{alpha:g}"


def _evaluate(A, W_start, alpha, config):
    cand = InitCandidate(_source_name(alpha), 1.0 if alpha is None else float(alpha))
    try:
        if alpha is not None:
            W_start, prior = dcd.run(A, W_start, config.replace(alpha=float(alpha)))
            cand.traces.append(prior)
            cand.prior_iterations = prior.iterations_run
        cand.W0 = W_start
        W, final = dcd.run(A, W_start, config.replace(alpha=1.0))
        cand.traces.append(final)
        cand.W = W
        cand.labels = hard_labels(W)
        cand.iterations_run = final.iterations_run
        cand.final_kl = dcd.kl_error(A, W)
    except DCDError as exc:
        if getattr(exc, "trace", None) is not None:
            cand.traces.append(exc.trace)
        cand.error = f"{type(exc).__name__}: {exc}"
        log.warning("candidate %s dropped: %s", cand.source, cand.error)
    return cand


def multi_start(A, r, config=None, alphas=DEFAULT_ALPHAS, eps=DEFAULT_EPS, threads=1):
    """Ncut-seeded multi-start search.

    Candidates, in order: the perturbed Ncut indicator, then the result of a
    Dirichlet-regularized run from that indicator for every ``alpha`` in
    ``alphas``. Each candidate gets a final run at ``alpha = 1``; the one with
    the smallest KL error is returned as ``(W, labels, candidates)``. Ties
    go to the earlier candidate. ``threads > 1`` evaluates candidates
    concurrently without changing the result.
    """
    config = config or dcd.DcdConfig()
    for a in alphas:
        dcd.DcdConfig(alpha=a)  # validates
    embedding = ncut_embed(A, r)
    seed_labels = kmeans(embedding.coordinates, r, config.seed)
    W0 = indicator_perturb(seed_labels, r, eps)

    specs = [None, *alphas]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates = list(pool.map(lambda a: _evaluate(A, W0, a, config), specs))
    else:
        candidates = [_evaluate(A, W0, a, config) for a in specs]

    best = None
    for cand in candidates:
        if cand.ok and (best is None or cand.final_kl < best.final_kl):
            best = cand
    if best is None:
        raise AllCandidatesFailedError([(c.source, c.error) for c in candidates])
    log.info("selected %s (kl=%.6g)", best.source, best.final_kl)
    return best.W, best.labels, candidates
