"""Exact spectral information for the first-level-preconditioned Hessian.

A = I + W W^T with W = D^{1/2} L^{-T} H^T R^{-1/2} of rank at most q, and a
spectral-LMP factor C differs from I only on span(U).  Both A and C^T A C
therefore act as the identity outside span([U, W]), so their full spectra
follow from a (k + q)-dimensional projection.  This gives exact eigenvalues
at sizes where dense assembly is out of reach.
"""
import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import eigsh

from .krylov import RitzPairs
from .operators import DENSE_CAP, assemble_dense


def exact_top_eigenpairs(op, k, lowrank_limit=500):
    """Top-k eigenpairs of A to working precision.

    Uses the SVD of the observation factor when q is small, ARPACK otherwise,
    and a dense eigendecomposition for explicit matrices.
    """
    if isinstance(op, np.ndarray):
        w, V = np.linalg.eigh(0.5 * (op + op.T))
        return RitzPairs(V[:, ::-1][:, :k].copy(), w[::-1][:k].copy(), source="exact")
    q = op.network.q
    if q <= lowrank_limit:
        U, s, _ = np.linalg.svd(op.observation_factor(), full_matrices=False)
        values = np.concatenate([1.0 + s ** 2, np.ones(max(0, k - s.size))])[:k]
        if k > s.size:
            U = np.column_stack([U, _complement(U, k - s.size)])
        return RitzPairs(U[:, :k].copy(), values, source="exact")
    v0 = np.ones(op.shape[0]) / np.sqrt(op.shape[0])
    w, V = eigsh(op, k=k, which="LA", v0=v0, tol=0.0)
    order = np.argsort(w)[::-1]
    return RitzPairs(V[:, order], w[order], source="exact")


def _complement(U, extra):
    Q, _ = np.linalg.qr(np.column_stack([U, np.eye(U.shape[0], extra + U.shape[1])]))
    return Q[:, U.shape[1]:U.shape[1] + extra]


def preconditioned_spectrum(op, factor=None):
    """All n_A eigenvalues (ascending) of C^T A C, or of A when ``factor`` is None."""
    n_A = op.shape[0]
    W = op.observation_factor()
    cols = [W] if factor is None or factor.k == 0 else [factor.vectors, W]
    basis = sla.orth(np.column_stack(cols)) if W.shape[1] or len(cols) > 1 else np.zeros((n_A, 0))
    r = basis.shape[1]
    if factor is None or factor.k == 0:
        M = basis
    else:
        M = factor.apply(basis)
    WM = W.T @ M
    K = M.T @ M + WM.T @ WM
    inner = np.linalg.eigvalsh(0.5 * (K + K.T)) if r else np.zeros(0)
    return np.sort(np.concatenate([inner, np.ones(n_A - r)]))


def dense_preconditioned_spectrum(A, factor=None):
    """Dense route: eigenvalues of C^T A C from an explicit A."""
    A = np.asarray(A, dtype=float)
    if factor is not None and factor.k:
        C = factor.dense()
        A = C.T @ A @ C
    return np.linalg.eigvalsh(0.5 * (A + A.T))


def dense_spectrum_of_operator(op, factor=None, cap=DENSE_CAP):
    return dense_preconditioned_spectrum(assemble_dense(op, cap), factor)
