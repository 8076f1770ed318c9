"""Low-rank doubly stochastic decomposition of a similarity graph.

A graph ``A`` is approximated by

    Ahat_ij = sum_k W_ik W_jk / s_k,    s_k = sum_v W_vk,

where row ``i`` of the nonnegative ``n x r`` matrix ``W`` holds the cluster
assignment probabilities of node ``i``. ``W`` is fitted by minimizing the
generalized KL divergence ``D(A || Ahat)`` under the row-stochastic
constraint, optionally regularized by a symmetric Dirichlet(alpha) prior on
the rows. The constraint is not enforced by projection: each multiplicative
update carries its own Lagrange multipliers, chosen so that the unconstrained
update would land on the simplex, and the Lagrangian is guaranteed not to
increase.

All quantities that involve ``A`` are evaluated on its support only, so an
iteration costs O(nnz(A) * r + n * r). The dense ``Ahat`` is available from
:func:`a_hat` for diagnostics on small problems.
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateClusterError, InvalidInputError, InvalidParameterError

__all__ = [
    "DcdConfig",
    "GradientSplit",
    "MultiplierState",
    "IterationRecord",
    "RunTrace",
    "a_hat",
    "kl_error",
    "penalized_objective",
    "gradient_split",
    "multipliers",
    "dcd_step",
    "lagrangian",
    "run",
]

log = logging.getLogger(__name__)

#: column mass below which a cluster is considered empty
DEGENERATE_MASS = 1e-50
#: lower clamp applied to W after every update
DEFAULT_FLOOR = 1e-12
#: number of iterations spanned by the early-stopping comparison
STOP_WINDOW = 10


@dataclass(frozen=True)
class DcdConfig:
    """Optimizer settings.

    ``alpha`` is the Dirichlet concentration (1 means no prior). A run stops
    after ``max_iters`` updates, or earlier once the KL error changed by a
    relative amount below ``rel_tol`` over the last ``STOP_WINDOW``
    iterations. ``rel_tol=0`` disables early stopping.
    """

    alpha: float = 1.0
    max_iters: int = 10_000
    rel_tol: float = 1e-9
    floor: float = DEFAULT_FLOOR
    seed: int = 42

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 1:
            raise InvalidParameterError(f"alpha must be a finite number >= 1, got {self.alpha}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidParameterError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.rel_tol >= 0:
            raise InvalidParameterError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not (0 < self.floor < 1e-3):
            raise InvalidParameterError(f"floor must lie in (0, 1e-3), got {self.floor}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


class GradientSplit:
    """Positive and unsigned negative parts of the objective gradient."""

    __slots__ = ("positive", "negative")

    def __init__(self, positive, negative):
        self.positive = positive
        self.negative = negative

    @property
    def gradient(self):
        return self.positive - self.negative


class MultiplierState:
    """Per-row quantities ``a``, ``b`` and the multipliers ``(b - 1) / a``."""

    __slots__ = ("a", "b", "lam")

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self.lam = (b - 1.0) / a


@dataclass
class IterationRecord:
    """Diagnostics of one update ``W -> W_new``.

    ``kl_error`` and ``penalized_objective`` are evaluated at ``W_new``; both
    Lagrangian values use the multipliers computed from ``W``.
    """

    iteration: int
    kl_error: float
    penalized_objective: float
    lagrangian_before: float
    lagrangian_after: float


@dataclass
class RunTrace:
    alpha: float
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations_run(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(rec, name) for rec in self.records])

    def lagrangian_violations(self, rtol=1e-10):
        """Iterations at which the Lagrangian increased beyond ``rtol``."""
        return [
            rec.iteration
            for rec in self.records
            if rec.lagrangian_after > rec.lagrangian_before + rtol * abs(rec.lagrangian_before)
        ]

    def iter_json(self, **extra):
        """One JSON document per iteration, with ``extra`` keys prepended."""
        for rec in self.records:
            yield json.dumps({**extra, "alpha": self.alpha, **dataclasses.asdict(rec)})


# ---------------------------------------------------------------------------
# shared kernels


def _as_assignment(W, n=None):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] < 1:
        raise InvalidInputError(f"assignment matrix must be n x r, got shape {W.shape}")
    if n is not None and W.shape[0] != n:
        raise InvalidInputError(f"assignment matrix has {W.shape[0]} rows, graph has {n} nodes")
    if not np.all(np.isfinite(W)) or np.any(W <= 0):
        raise InvalidInputError("assignment matrix entries must be finite and strictly positive")
    return W


def _column_mass(W):
    s = W.sum(axis=0)
    k = int(np.argmin(s))
    if s[k] < DEGENERATE_MASS:
        raise DegenerateClusterError(f"cluster {k} has vanishing mass {s[k]:.3g}", cluster=k)
    return s


class _Support:
    """Coordinate view of A's stored entries, reused across iterations."""

    def __init__(self, A):
        m = A.matrix
        self.n = m.shape[0]
        self.indptr = m.indptr
        self.cols = m.indices
        self.rows = np.repeat(np.arange(self.n), np.diff(m.indptr))
        self.data = m.data
        self.total = m.data.sum()
        self.xlogx = float(np.dot(m.data, np.log(m.data)))
        # Z = A / Ahat shares A's sparsity pattern; its values are refreshed in place
        self.Z = sp.csr_matrix((m.data.copy(), m.indices, m.indptr), shape=m.shape)

    def ahat(self, W, s):
        """Ahat restricted to the support, aligned with ``self.data``."""
        return np.einsum("ek,ek->e", W.take(self.rows, axis=0), (W / s).take(self.cols, axis=0))

    def neg_loglik(self, ahat):
        return -float(np.dot(self.data, np.log(ahat)))


def _penalty(W, alpha):
    if alpha == 1:
        return 0.0
    return -(alpha - 1.0) * float(np.log(W).sum())


def _split(sup, W, s, ahat, alpha):
    np.divide(sup.data, ahat, out=sup.Z.data)
    ZW = sup.Z @ W
    WtZW = np.einsum("ik,ik->k", W, ZW)
    inv_w = 1.0 / W
    negative = 2.0 * ZW / s + alpha * inv_w
    positive = WtZW / s**2 + inv_w
    return GradientSplit(positive, negative)


def _multipliers(W, grads):
    ratio = W / grads.positive
    a = ratio.sum(axis=1)
    b = (ratio * grads.negative).sum(axis=1)
    return MultiplierState(a, b)


def _update(W, grads, mult, floor):
    a = mult.a[:, None]
    W_new = W * (grads.negative * a + 1.0) / (grads.positive * a + mult.b[:, None])
    return np.maximum(W_new, floor)


def _constraint(W, lam):
    return float(np.dot(lam, W.sum(axis=1) - 1.0))


# ---------------------------------------------------------------------------
# public operations


def a_hat(W):
    """Dense ``n x n`` approximating matrix. Intended for small ``n``."""
    W = _as_assignment(W)
    s = _column_mass(W)
    return (W / s) @ W.T


def kl_error(A, W):
    """Generalized KL divergence ``D(A || Ahat)`` evaluated sparsely.

    Entries outside the support of ``A`` enter only through
    ``sum_ij Ahat_ij = sum_k s_k``.
    """
    W = _as_assignment(W, A.n)
    sup = _Support(A)
    s = _column_mass(W)
    return _kl(sup, W, s, sup.ahat(W, s))


def _kl(sup, W, s, ahat):
    return sup.xlogx + sup.neg_loglik(ahat) - sup.total + float(s.sum())


def penalized_objective(A, W, alpha=1.0):
    """``-sum A_ij log Ahat_ij - (alpha - 1) sum log W_ik``."""
    W = _as_assignment(W, A.n)
    sup = _Support(A)
    s = _column_mass(W)
    return sup.neg_loglik(sup.ahat(W, s)) + _penalty(W, alpha)


def gradient_split(A, W, alpha=1.0):
    """Positive and negative gradient parts of :func:`penalized_objective`."""
    W = _as_assignment(W, A.n)
    sup = _Support(A)
    s = _column_mass(W)
    return _split(sup, W, s, sup.ahat(W, s), alpha)


def multipliers(W, grads):
    return _multipliers(np.asarray(W, dtype=np.float64), grads)


def lagrangian(A, W, lam, alpha=1.0):
    """Penalized objective plus ``sum_i lam_i (sum_k W_ik - 1)``."""
    W = _as_assignment(W, A.n)
    return penalized_objective(A, W, alpha) + _constraint(W, np.asarray(lam, dtype=np.float64))


def dcd_step(A, W, alpha=1.0, floor=DEFAULT_FLOOR):
    """One relaxed majorization-minimization update.

    Returns the updated matrix and the multiplier state it was computed
    with.
    """
    W = _as_assignment(W, A.n)
    sup = _Support(A)
    s = _column_mass(W)
    grads = _split(sup, W, s, sup.ahat(W, s), alpha)
    mult = _multipliers(W, grads)
    return _update(W, grads, mult, floor), mult


def run(A, W0, config=None):
    """Iterate :func:`dcd_step` from ``W0``.

    Returns the final ``W`` and a :class:`RunTrace`. A vanishing cluster
    raises :class:`DegenerateClusterError` with the trace so far attached.
    """
    config = config or DcdConfig()
    W = _as_assignment(W0, A.n).copy()
    n, r = W.shape
    if config.floor * n * r > 1e-3:
        raise InvalidParameterError(f"floor {config.floor} too large for an {n} x {r} problem")
    alpha = float(config.alpha)
    sup = _Support(A)
    trace = RunTrace(alpha=alpha)
    try:
        s = _column_mass(W)
        ahat = sup.ahat(W, s)
        J = sup.neg_loglik(ahat) + _penalty(W, alpha)
        kl_hist = []
        for it in range(1, config.max_iters + 1):
            grads = _split(sup, W, s, ahat, alpha)
            mult = _multipliers(W, grads)
            W_new = _update(W, grads, mult, config.floor)
            L_before = J + _constraint(W, mult.lam)

            s = _column_mass(W_new)
            ahat = sup.ahat(W_new, s)
            nll = sup.neg_loglik(ahat)
            J = nll + _penalty(W_new, alpha)
            kl = sup.xlogx + nll - sup.total + float(s.sum())
            trace.records.append(
                IterationRecord(it, kl, J, L_before, J + _constraint(W_new, mult.lam))
            )
            unchanged = np.array_equal(W_new, W)
            W = W_new
            kl_hist.append(kl)
            if unchanged or _stalled(kl_hist, config.rel_tol):
                trace.converged = True
                break
    except DegenerateClusterError as exc:
        exc.trace = trace
        raise
    log.debug(
        "alpha=%g: %d iterations, converged=%s, kl=%.6g",
        alpha, trace.iterations_run, trace.converged,
        trace.records[-1].kl_error if trace.records else float("nan"),
    )
    return W, trace


def _stalled(kl_hist, rel_tol):
    if len(kl_hist) <= STOP_WINDOW:
        return False
    cur, old = kl_hist[-1], kl_hist[-1 - STOP_WINDOW]
    return abs(cur - old) < rel_tol * max(abs(cur), np.finfo(float).tiny)
