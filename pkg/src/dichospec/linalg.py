"""Small dense linear algebra helpers used throughout the package.

Everything here operates on modest-sized ndarrays (system dimension is
typically 1..10), so plain LAPACK calls via numpy are adequate.  The
spectral norm (largest singular value) is the norm used everywhere a
matrix norm appears in reported quantities.
"""
from __future__ import annotations

import numpy as np


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value of a 2-d array."""
    return float(np.linalg.norm(a, 2))


def batched_spectral_norm(stack: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (m, d, k) stack."""
    if stack.size == 0:
        return np.zeros(stack.shape[0])
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def qr_positive(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR factorization with the sign convention diag(R) > 0."""
    q, r = np.linalg.qr(a)
    s = np.sign(np.diagonal(r)).copy()
    s[s == 0] = 1.0
    return q * s, s[:, None] * r


def orthonormal_columns(a: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis for the column space of ``a``."""
    if a.size == 0:
        return a.reshape(a.shape[0], 0)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return a[:, :0]
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def orthogonal_complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis) in R^dim."""
    if basis.shape[1] == 0:
        return np.eye(dim)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, basis.shape[1]:]


def nullspace(a: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of {x : a x = 0} with a relative singular value cutoff."""
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a)
    significant = np.zeros(n, dtype=bool)
    if s.size and s[0] > 0.0:
        significant[: s.size] = s > rtol * s[0]
    return vt.conj().T[:, ~significant]


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (ascending, radians) between the column spans of a and b."""
    qa = orthonormal_columns(a)
    qb = orthonormal_columns(b)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.array([])
    sv = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(sv, -1.0, 1.0))[::-1]


def min_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest principal angle between two subspaces; pi/2 if either is trivial."""
    ang = principal_angles(a, b)
    return float(ang[0]) if ang.size else float(np.pi / 2)


def subspace_intersection(a: np.ndarray, b: np.ndarray, dim: int,
                          rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of span(a) & span(b).

    Membership in each span is imposed through the orthogonal complement:
    x lies in span(a) iff comp(a)^T x = 0.  The stacked constraint matrix
    is sent through an SVD nullspace with relative cutoff ``rtol``.
    """
    rows = []
    ca = orthogonal_complement(orthonormal_columns(a), dim)
    cb = orthogonal_complement(orthonormal_columns(b), dim)
    if ca.shape[1]:
        rows.append(ca.T)
    if cb.shape[1]:
        rows.append(cb.T)
    if not rows:
        return np.eye(dim)
    return nullspace(np.vstack(rows), rtol=rtol)
