"""Dense symmetric / SPD matrix primitives under the Log-Euclidean metric.

Matrices are plain ``float64`` ndarrays. Functions symmetrize their input as
``(M + M.T) / 2`` before any eigendecomposition.
"""
import numpy as np

from .errors import DimensionMismatch, EmptyGallery, InvalidMatrix, NumericalDegeneracy

EIGEN_FLOOR = 1e-12


def symmetrize(m):
    """Return ``(m + m.T) / 2`` as float64 after shape/finiteness checks."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    return (m + m.T) / 2.0


def _is_diagonal(m):
    return not np.any(m - np.diag(np.diag(m)))


def _eig_apply(s, func):
    if _is_diagonal(s):
        return np.diag(func(np.diag(s)))
    w, u = np.linalg.eigh(s)
    out = (u * func(w)) @ u.T
    return (out + out.T) / 2.0


def make_spd(m, floor=EIGEN_FLOOR):
    """Project a symmetric matrix onto the SPD cone by eigenvalue clamping.

    Eigenvalues below ``floor`` are raised to ``floor``. A matrix that is
    already SPD at that floor is returned unchanged (after symmetrization).
    """
    if not floor > 0:
        raise ValueError("floor must be positive")
    s = symmetrize(m)
    w, u = np.linalg.eigh(s)
    if w[0] >= floor:
        return s
    w = np.maximum(w, floor)
    out = (u * w) @ u.T
    return (out + out.T) / 2.0


def is_spd(m, floor=EIGEN_FLOOR):
    try:
        s = symmetrize(m)
    except InvalidMatrix:
        return False
    return bool(np.linalg.eigvalsh(s)[0] >= floor)


def matrix_log(x, eigen_floor=EIGEN_FLOOR):
    """Principal matrix logarithm ``U log(S) U^T`` of an SPD matrix.

    Raises
    ------
    NumericalDegeneracy
        If an eigenvalue lies below ``eigen_floor``.
    """
    s = symmetrize(x)
    if _is_diagonal(s):
        w = np.diag(s)
        if w.min() < eigen_floor:
            raise NumericalDegeneracy(f"eigenvalue {w.min():.3e} below floor {eigen_floor:.1e}")
        return np.diag(np.log(w))
    w, u = np.linalg.eigh(s)
    if w[0] < eigen_floor:
        raise NumericalDegeneracy(f"eigenvalue {w[0]:.3e} below floor {eigen_floor:.1e}")
    out = (u * np.log(w)) @ u.T
    return (out + out.T) / 2.0


def matrix_exp(s):
    """Matrix exponential of a symmetric matrix; the result is SPD."""
    return _eig_apply(symmetrize(s), np.exp)


def matrix_sqrt(x):
    """Symmetric square root of an SPD (or PSD) matrix."""
    return _eig_apply(symmetrize(x), lambda w: np.sqrt(np.maximum(w, 0.0)))


def vectorize_log(x):
    """Row-major flattening of ``matrix_log(x)``, length ``d**2``."""
    return matrix_log(x).ravel()


def tangent_matrix(descriptors):
    """Stack ``vectorize_log`` of each descriptor as rows, shape ``(N, d*d)``."""
    descriptors = list(descriptors)
    if not descriptors:
        raise EmptyGallery("no descriptors given")
    dims = {np.shape(x) for x in descriptors}
    if len(dims) != 1:
        raise DimensionMismatch(f"descriptors have mixed shapes {sorted(dims)}")
    return np.stack([vectorize_log(x) for x in descriptors])


def _check_same_dim(xi, xj):
    if np.shape(xi) != np.shape(xj):
        raise DimensionMismatch(f"shapes differ: {np.shape(xi)} vs {np.shape(xj)}")


def lem_distance(xi, xj):
    """Log-Euclidean distance ``||log(xi) - log(xj)||_F``."""
    _check_same_dim(xi, xj)
    return float(np.linalg.norm(matrix_log(xi) - matrix_log(xj)))


def le_kernel(xi, xj, beta):
    """Log-Euclidean Gaussian kernel ``exp(-beta * lem_distance**2)``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    d = lem_distance(xi, xj)
    return float(np.exp(-beta * d * d))


def pairwise_sq_distances(tangents):
    """Squared Euclidean distances between rows; exactly symmetric, zero diagonal.

    Computed from explicit differences rather than the Gram expansion so the
    result does not depend on BLAS blocking.
    """
    t = np.asarray(tangents, dtype=np.float64)
    n = t.shape[0]
    d2 = np.zeros((n, n))
    for i in range(n - 1):
        diff = t[i + 1:] - t[i]
        d2[i, i + 1:] = np.sum(diff * diff, axis=1)
    return d2 + d2.T


def sq_distances_to(tangents, y):
    diff = np.asarray(tangents, dtype=np.float64) - y
    return np.sum(diff * diff, axis=1)


def median_heuristic_beta(tangents):
    """``1 / median`` of the off-diagonal pairwise squared distances.

    Falls back to 1.0 for a single-element gallery or a zero median.
    """
    d2 = pairwise_sq_distances(tangents)
    n = d2.shape[0]
    if n < 2:
        return 1.0
    med = float(np.median(d2[np.triu_indices(n, k=1)]))
    return 1.0 / med if med > 0 else 1.0


def kernel_from_tangents(tangents, beta):
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.exp(-beta * pairwise_sq_distances(tangents))


def gram_matrix(gallery, beta):
    """Gram matrix ``K[i, j] = le_kernel(X_i, X_j, beta)`` over a gallery."""
    return kernel_from_tangents(tangent_matrix(gallery), beta)


def cross_kernel(gallery, query, beta):
    """Vector of ``le_kernel(X_i, query, beta)`` over the gallery."""
    t = tangent_matrix(gallery)
    if np.shape(query) != np.shape(gallery[0]):
        raise DimensionMismatch(f"query shape {np.shape(query)} vs gallery {np.shape(gallery[0])}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.exp(-beta * sq_distances_to(t, vectorize_log(query)))
