"""Split preconditioned CG and the Lanczos information it carries.

The solver follows the standard split-preconditioned recurrence for
C^T A C xhat = C^T b with P = C C^T, tracking the iterates in the original
variables.  When residuals are harvested, the tridiagonal Lanczos matrix of
C^T A C is rebuilt from the CG step lengths and Ritz pairs are extracted
from it.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError
from .operators import as_operator

SOURCES = ("lanczos", "revd", "nystrom", "ritzit", "exact")


@dataclass
class RitzPairs:
    """Approximate eigenpairs: orthonormal columns ``vectors`` and decreasing ``values``."""

    vectors: np.ndarray
    values: np.ndarray
    source: str = "exact"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.values.shape[0]:
            raise ValueError("Ritz vectors and values disagree in count")
        if self.source not in SOURCES:
            raise ValueError(f"unknown Ritz source {self.source!r}")

    @property
    def k(self):
        return self.values.shape[0]

    def truncate(self, k):
        return RitzPairs(self.vectors[:, :k].copy(), self.values[:k].copy(), self.source)


@dataclass
class CgHistory:
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    quadratic_cost: list = field(default_factory=list)
    normalized_residuals: np.ndarray = None
    iterations: int = 0
    converged: bool = False
    reason: str = ""
    n_products: int = 0

    @property
    def relative_residuals(self):
        r = np.asarray(self.residual_norms)
        return r / r[0] if r.size and r[0] > 0 else np.zeros_like(r)


@dataclass
class TridiagonalMatrix:
    gammas: np.ndarray
    taus: np.ndarray

    @property
    def dim(self):
        return len(self.gammas)

    def dense(self):
        return np.diag(self.gammas) + np.diag(self.taus, 1) + np.diag(self.taus, -1)

    def eigh(self):
        return eigh_tridiagonal(self.gammas, self.taus)


class _Identity:
    def apply(self, v):
        return v

    apply_T = apply


def pcg_split(op, b, precond=None, x0=None, max_iter=100, rel_tol=1e-6,
              reorthogonalize=False, harvest=False, cost_offset=0.0, cost_fn=None):
    """Solve A x = b by split preconditioned CG.

    Parameters
    ----------
    op : SPD operator (ndarray or LinearOperator)
    precond : factor with ``apply`` / ``apply_T`` (e.g. :class:`~wc4dvar.lmp.LmpFactor`);
        ``None`` means no preconditioning
    max_iter, rel_tol : stop after ``max_iter`` iterations or once
        ||r_j|| / ||r_0|| <= rel_tol, with r_j the preconditioned residual
    reorthogonalize : re-orthogonalize each residual against all previous
        normalized residuals (modified Gram-Schmidt); implies ``harvest``
    harvest : keep the normalized residuals f_j for Ritz extraction
    cost_offset : constant added to 1/2 x^T A x - x^T b in the recorded cost
    cost_fn : optional callable evaluating the cost of an iterate directly

    Returns
    -------
    x, CgHistory
    """
    op = as_operator(op) if isinstance(op, np.ndarray) else op
    C = _Identity() if precond is None else precond
    b = np.asarray(b, dtype=float)
    start = getattr(op, "n_products", 0)
    harvest = harvest or reorthogonalize

    if x0 is None or not np.any(x0):
        x = np.zeros_like(b)
        Ax = np.zeros_like(b)
    else:
        x = np.array(x0, dtype=float)
        Ax = op.matvec(x)

    def cost():
        if cost_fn is not None:
            return float(cost_fn(x))
        return 0.5 * float(x @ Ax) - float(x @ b) + cost_offset

    r = C.apply_T(b - Ax)
    p = C.apply(r)
    rr = float(r @ r)
    r0 = np.sqrt(rr)
    hist = CgHistory(residual_norms=[r0], quadratic_cost=[cost()])
    F = [r / r0] if harvest and r0 > 0 else []

    if r0 == 0.0:
        hist.converged, hist.reason = True, "zero initial residual"
    for j in range(1, max_iter + 1):
        if hist.converged:
            break
        Ap = op.matvec(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp):
            raise NumericalError(f"non-finite p^T A p at iteration {j}", module="krylov")
        if pAp <= 0:
            raise NumericalError(f"p^T A p = {pAp:.3g} <= 0 at iteration {j}: "
                                 "operator is not positive definite", module="krylov")
        alpha = rr / pAp
        x = x + alpha * p
        Ax = Ax + alpha * Ap
        r = r - alpha * C.apply_T(Ap)
        if reorthogonalize:
            for f in F:
                r -= (f @ r) * f
        rr_new = float(r @ r)
        if not np.isfinite(rr_new):
            raise NumericalError(f"non-finite residual at iteration {j}", module="krylov")
        beta = rr_new / rr
        rnorm = np.sqrt(rr_new)
        hist.alphas.append(alpha)
        hist.betas.append(beta)
        hist.residual_norms.append(rnorm)
        hist.quadratic_cost.append(cost())
        hist.iterations = j
        if harvest and rnorm > 0:
            F.append(r / rnorm)
        if rnorm / r0 <= rel_tol:
            hist.converged, hist.reason = True, "relative residual below tolerance"
            break
        p = C.apply(r) + beta * p
        rr = rr_new
    if not hist.converged:
        hist.reason = "iteration limit"
    if harvest:
        hist.normalized_residuals = np.column_stack(F) if F else np.zeros((b.size, 0))
    hist.n_products = getattr(op, "n_products", start) - start
    return x, hist


def tridiagonal_from_cg(history):
    """Lanczos matrix T_j from the CG step lengths alpha and ratios beta."""
    j = history.iterations
    if j < 1:
        raise ValueError("CG history has no iterations")
    a = np.asarray(history.alphas[:j])
    bt = np.asarray(history.betas[:j])
    gammas = 1.0 / a
    gammas[1:] += bt[:-1] / a[:-1]
    taus = np.sqrt(bt[:-1]) / a[:-1]
    return TridiagonalMatrix(gammas, taus)


def ritz_from_tridiagonal(T, F, k, ghost_tol=1e-10):
    """Top-k Ritz pairs u_i = F w_i of the operator behind T.

    Columns of ``F`` are the normalized CG residuals f_0..f_{j-1}; residuals
    alternate in sign relative to the Lanczos vectors, which is undone here.
    Ritz values closer than ``ghost_tol * theta_max`` to an already kept value
    are treated as ghosts and dropped.
    """
    j = T.dim
    if k > j:
        raise ValueError(f"requested {k} Ritz pairs from a {j}x{j} tridiagonal matrix")
    F = np.asarray(F, dtype=float)
    if F.shape[1] < j:
        raise ValueError(f"need {j} residual vectors, got {F.shape[1]}")
    theta, W = T.eigh()
    order = np.argsort(theta)[::-1]
    theta, W = theta[order], W[:, order]
    keep = []
    for i, t in enumerate(theta):
        if keep and abs(theta[keep[-1]] - t) <= ghost_tol * abs(theta[0]):
            continue
        keep.append(i)
        if len(keep) == k:
            break
    signs = (-1.0) ** np.arange(j)
    U = (F[:, :j] * signs) @ W[:, keep]
    return RitzPairs(U, theta[keep], source="lanczos")
