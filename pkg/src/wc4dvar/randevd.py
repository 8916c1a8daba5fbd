"""Randomised low-rank eigendecompositions of an SPD operator.

Three estimators are provided, differing in how often they touch the
operator:

========  ==========================================  ==============
method    approximation                               block products
========  ==========================================  ==============
revd      Rayleigh-Ritz on range(A G)                 2
nystrom   (A Z)(Z^T A Z)^{-1}(A Z)^T, Z = orth(A G)   2
ritzit    singular values of A G_3, G_3 = orth(G)     1
========  ==========================================  ==============

Random test matrices come from ``numpy.random.default_rng(seed)`` (PCG64),
filled one column at a time.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .krylov import RitzPairs
from .operators import as_operator

METHODS = ("revd", "nystrom", "ritzit")


@dataclass(frozen=True)
class SketchConfig:
    k: int
    l: int = 5
    seed: int = 0
    method: str = "revd"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"target rank must be >= 1, got {self.k}")
        if self.l < 0:
            raise ValueError(f"oversampling must be >= 0, got {self.l}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    @property
    def m(self):
        return self.k + self.l


def gaussian_matrix(n, m, seed):
    """n x m standard normal matrix; column j holds draws j*n .. (j+1)*n - 1."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)).T.copy()


def orthonormalize(Y, rtol=None, return_r=False, truncate=False):
    """Orthonormal basis of the columns of Y by Householder QR (and R if asked).

    If the triangular factor looks rank deficient, a column-pivoted QR
    decides the numerical rank.  A deficiency is an error unless
    ``truncate`` is set, in which case the leading pivoted columns spanning
    the numerical range are returned.
    """
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[1]
    Q, R = np.linalg.qr(Y)
    d = np.abs(np.diag(R))
    if rtol is None:
        rtol = max(Y.shape) * np.finfo(float).eps
    if m and d.min() <= rtol * max(d.max(), np.finfo(float).tiny):
        Qp, Rp, _ = sla.qr(Y, mode="economic", pivoting=True)
        dp = np.abs(np.diag(Rp))
        rank = int(np.sum(dp > rtol * dp[0])) if dp[0] > 0 else 0
        if rank < m and truncate and rank > 0 and not return_r:
            return Qp[:, :rank]
        if rank < m:
            raise NumericalError(f"sample matrix has numerical rank {rank} < {m} columns",
                                 module="randevd")
    return (Q, R) if return_r else Q


def _check_size(op, cfg):
    if cfg.m > op.shape[0]:
        raise ValueError(f"k + l = {cfg.m} exceeds operator dimension {op.shape[0]}")


def _sorted_eigh(K):
    theta, W = np.linalg.eigh(0.5 * (K + K.T))
    order = np.argsort(theta)[::-1]
    return theta[order], W[:, order]


def rayleigh_ritz(op, Z, orth_tol=1e-8):
    """Ritz pairs of ``op`` from the orthonormal basis ``Z`` (one block product)."""
    op = as_operator(op) if isinstance(op, np.ndarray) else op
    Z = np.asarray(Z, dtype=float)
    dev = np.abs(Z.T @ Z - np.eye(Z.shape[1])).max() if Z.shape[1] else 0.0
    if dev > orth_tol:
        raise ValueError(f"basis is not orthonormal (Gram deviation {dev:.2e})")
    K = Z.T @ op.matmat(Z)
    theta, W = _sorted_eigh(K)
    return RitzPairs(Z @ W, theta, source="exact")


def revd(op, cfg):
    op = as_operator(op) if isinstance(op, np.ndarray) else op
    _check_size(op, cfg)
    G = gaussian_matrix(op.shape[0], cfg.m, cfg.seed)
    Z = orthonormalize(op.matmat(G))
    pairs = rayleigh_ritz(op, Z)
    return RitzPairs(pairs.vectors[:, :cfg.k], pairs.values[:cfg.k], source="revd")


def nystrom(op, cfg):
    op = as_operator(op) if isinstance(op, np.ndarray) else op
    _check_size(op, cfg)
    G = gaussian_matrix(op.shape[0], cfg.m, cfg.seed)
    # an exactly low-rank operator keeps only the independent sample directions
    Z = orthonormalize(op.matmat(G), truncate=True)
    E1 = op.matmat(Z)
    E2 = Z.T @ E1
    E2 = 0.5 * (E2 + E2.T)
    try:
        C = sla.cholesky(E2, lower=False)  # E2 = C^T C
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Cholesky of Z^T A Z failed; the sketch is numerically "
                             "indefinite (increase l or add a diagonal jitter to the operator)",
                             module="randevd") from exc
    F = sla.solve_triangular(C, E1.T, trans="T", lower=False).T  # F C = E1
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    return RitzPairs(U[:, :cfg.k], s[:cfg.k] ** 2, source="nystrom")


def revd_ritzit(op, cfg):
    op = as_operator(op) if isinstance(op, np.ndarray) else op
    _check_size(op, cfg)
    G3 = orthonormalize(gaussian_matrix(op.shape[0], cfg.m, cfg.seed))
    Y3 = op.matmat(G3)
    Z3, R3 = orthonormalize(Y3, return_r=True)
    K3 = R3 @ R3.T
    theta2, W3 = _sorted_eigh(K3)
    theta = np.sqrt(np.clip(theta2, 0.0, None))
    return RitzPairs(Z3 @ W3[:, :cfg.k], theta[:cfg.k], source="ritzit")


def randomized_eigenpairs(op, cfg):
    return {"revd": revd, "nystrom": nystrom, "ritzit": revd_ritzit}[cfg.method](op, cfg)
