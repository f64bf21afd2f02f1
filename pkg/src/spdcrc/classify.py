"""Collaborative representation classifiers on SPD descriptors.

Every method reduces to the same two steps: a closed-form ridge solve of the
query against the gallery columns, then the class-wise normalized residual
``||y - A_c w_c|| / ||w_c||`` with the smallest value winning.

* ``log_crc``   : columns are vectorized matrix logarithms.
* ``logek_crc`` : columns are an explicit factor of the Log-Euclidean kernel
  Gram matrix, queries are mapped through its pseudo-inverse.
* ``spd_crc``   : columns are the raw SPD matrices, flattened.
* ``crc``       : columns are plain feature vectors (e.g. set means).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, EmptyGallery, NotPsd, SingularSystem
from . import spd

METHODS = ("log_crc", "logek_crc", "crc", "spd_crc")


@dataclass(frozen=True)
class CrcConfig:
    lambda1: float = 0.01
    lambda2: float = 0.5
    residual_epsilon: float = 1e-12

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularizers must be non-negative")


@dataclass
class ClassificationResult:
    label: int
    per_class_error: np.ndarray
    coefficients: np.ndarray
    classes: np.ndarray


class RidgeSolver:
    """Factorized ``(A^T A + lam I)`` for repeated solves against one gallery.

    ``lam > 0`` uses a Cholesky factor. ``lam == 0`` requires ``A`` to have full
    column rank and solves through the pseudo-inverse.
    """

    def __init__(self, a, lam):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatch(f"design matrix must be 2-D, got shape {a.shape}")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        self.a = a
        self.lam = float(lam)
        self._chol = None
        self._pinv = None
        n = a.shape[1]
        if self.lam == 0.0:
            if np.linalg.matrix_rank(a) < n:
                raise SingularSystem("A^T A is singular and lambda == 0")
            self._pinv = np.linalg.pinv(a)
        else:
            gram = a.T @ a + self.lam * np.eye(n)
            try:
                self._chol = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                # regularizer lost to roundoff; the stacked system is always full rank
                stacked = np.vstack([a, np.sqrt(self.lam) * np.eye(n)])
                self._pinv = np.linalg.pinv(stacked)[:, : a.shape[0]]

    def solve(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.a.shape[0],):
            raise DimensionMismatch(f"y has shape {y.shape}, expected ({self.a.shape[0]},)")
        if self._chol is not None:
            return scipy.linalg.cho_solve(self._chol, self.a.T @ y, check_finite=False)
        return self._pinv @ y


def ridge_solve(a, y, lam):
    """Closed-form ridge coefficients ``w = (A^T A + lam I)^{-1} A^T y``."""
    return RidgeSolver(a, lam).solve(y)


def classwise_residuals(a, labels, y, w, eps=1e-12, classes=None):
    """Normalized reconstruction error per class.

    Returns ``(errors, classes)`` where ``errors[c] = ||y - A_c w_c|| / ||w_c||``
    for the columns of ``classes[c]``, or ``inf`` when ``||w_c|| < eps``.
    """
    a = np.asarray(a, dtype=np.float64)
    labels = np.asarray(labels)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if a.ndim != 2 or labels.shape != (a.shape[1],) or w.shape != (a.shape[1],) or y.shape != (a.shape[0],):
        raise DimensionMismatch(
            f"shapes do not agree: A {a.shape}, labels {labels.shape}, w {w.shape}, y {y.shape}"
        )
    if classes is None:
        classes = np.unique(labels)
    errors = np.full(len(classes), np.inf)
    for i, c in enumerate(classes):
        mask = labels == c
        wc = w[mask]
        norm_w = np.linalg.norm(wc)
        if norm_w < eps:
            continue
        errors[i] = np.linalg.norm(y - a[:, mask] @ wc) / norm_w
    return errors, np.asarray(classes)


def decide(errors, classes):
    # np.argmin picks the first minimum, i.e. the lowest class id
    return int(classes[int(np.argmin(errors))])


def crc_classify(a, labels, y, lam, eps=1e-12):
    """Shared ridge + residual path used by all four methods."""
    return _classify_with(RidgeSolver(a, lam), labels, y, eps)


def _classify_with(solver, labels, y, eps):
    w = solver.solve(y)
    errors, classes = classwise_residuals(solver.a, labels, y, w, eps)
    return ClassificationResult(decide(errors, classes), errors, w, classes)


@dataclass
class KernelEmbedding:
    """Factor ``psi`` (N x N) with ``psi.T @ psi`` equal to the truncated Gram matrix.

    Rows of ``psi`` are ordered by descending eigenvalue; rows for discarded
    directions are zero.
    """

    psi: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    retained: np.ndarray
    singular_floor: float
    beta: float = float("nan")

    @property
    def rank(self):
        return int(self.retained.sum())


def kernel_embed(k_xx, floor_rel=1e-10, beta=float("nan")):
    """Factor a PSD Gram matrix as ``K = psi.T @ psi`` with ``psi = (U S^{1/2})^T``.

    Eigenvalues below ``floor_rel * max_eigenvalue`` are zeroed. Eigenvectors
    are sign-fixed so their largest-magnitude entry is positive.

    Raises
    ------
    NotPsd
        If an eigenvalue is below ``-1e-6 * max_eigenvalue``.
    """
    k = np.asarray(k_xx, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] == 0:
        raise DimensionMismatch(f"Gram matrix must be square and non-empty, got {k.shape}")
    k = (k + k.T) / 2.0
    w, u = np.linalg.eigh(k)
    order = np.argsort(-w, kind="stable")
    w, u = w[order], u[:, order]
    top = max(float(w[0]), 0.0)
    if w[-1] < -1e-6 * top:
        raise NotPsd(f"Gram matrix has eigenvalue {w[-1]:.3e} (largest {top:.3e})")
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivot, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    u = u * signs
    retained = (w > 0) & (w >= floor_rel * top)
    sv = np.where(retained, w, 0.0)
    psi = (u * np.sqrt(sv)).T
    return KernelEmbedding(psi, sv, u, retained, float(floor_rel), float(beta))


def embed_query(e, k_xy):
    """Map a kernel column into the embedding: ``pinv(psi.T) @ k_xy``."""
    k_xy = np.asarray(k_xy, dtype=np.float64)
    if k_xy.shape != (e.psi.shape[1],):
        raise DimensionMismatch(f"k_xy has shape {k_xy.shape}, expected ({e.psi.shape[1]},)")
    proj = e.eigenvectors.T @ k_xy
    scale = np.sqrt(np.where(e.retained, e.eigenvalues, 1.0))
    return np.where(e.retained, proj / scale, 0.0)


@dataclass
class Gallery:
    """Labeled SPD descriptors plus lazily filled caches.

    Call :meth:`fit` before classifying from several threads; classification
    only reads the caches once they exist.
    """

    descriptors: np.ndarray
    labels: np.ndarray
    tangent_cache: np.ndarray = None
    kernel_cache: KernelEmbedding = None
    _solvers: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.descriptors = np.asarray(self.descriptors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.descriptors.ndim != 3 or len(self.descriptors) == 0:
            raise EmptyGallery("gallery needs at least one d x d descriptor")
        if self.labels.shape != (len(self.descriptors),):
            raise DimensionMismatch("one label per descriptor required")
        self.classes = np.unique(self.labels)

    @property
    def dim(self):
        return self.descriptors.shape[1]

    def tangents(self):
        if self.tangent_cache is None:
            self.tangent_cache = spd.tangent_matrix(self.descriptors)
        return self.tangent_cache

    def embedding(self, beta=None, floor_rel=1e-10):
        """Kernel embedding; ``beta=None`` selects the median heuristic."""
        if beta is None:
            if self.kernel_cache is not None:
                return self.kernel_cache
            beta = spd.median_heuristic_beta(self.tangents())
        if self.kernel_cache is not None and self.kernel_cache.beta == beta:
            return self.kernel_cache
        k = spd.kernel_from_tangents(self.tangents(), beta)
        self.kernel_cache = kernel_embed(k, floor_rel, beta)
        return self.kernel_cache

    def solver(self, space, lam):
        key = (space, float(lam))
        if space == "kernel":
            key += (self.embedding().beta,)
        if key not in self._solvers:
            if space == "log":
                a = self.tangents().T
            elif space == "kernel":
                a = self.embedding().psi
            elif space == "spd":
                a = self.descriptors.reshape(len(self.descriptors), -1).T
            else:
                raise ValueError(f"unknown space {space!r}")
            self._solvers[key] = RidgeSolver(a, lam)
        return self._solvers[key]

    def fit(self, method, cfg, beta=None):
        """Populate every cache ``method`` needs for ``cfg``."""
        if method == "log_crc":
            self.solver("log", cfg.lambda1)
        elif method == "logek_crc":
            self.embedding(beta)
            self.solver("kernel", cfg.lambda2)
        elif method == "spd_crc":
            self.solver("spd", cfg.lambda1)
        else:
            raise ValueError(f"method {method!r} does not use an SPD gallery")
        return self

    def check_query(self, query):
        if np.shape(query) != self.descriptors.shape[1:]:
            raise DimensionMismatch(f"query shape {np.shape(query)} vs gallery {self.descriptors.shape[1:]}")


def log_crc_classify(g, query, cfg=CrcConfig()):
    """Classify in the matrix-log tangent space with regularizer ``lambda1``."""
    g.check_query(query)
    y = spd.vectorize_log(query)
    return _classify_with(g.solver("log", cfg.lambda1), g.labels, y, cfg.residual_epsilon)


def logek_crc_classify(g, query, cfg=CrcConfig(), beta=None):
    """Classify in the Log-Euclidean kernel space with regularizer ``lambda2``."""
    g.check_query(query)
    e = g.embedding(beta)
    k_xy = np.exp(-e.beta * spd.sq_distances_to(g.tangents(), spd.vectorize_log(query)))
    phi = embed_query(e, k_xy)
    return _classify_with(g.solver("kernel", cfg.lambda2), g.labels, phi, cfg.residual_epsilon)


def spd_crc_classify(g, query, cfg=CrcConfig()):
    """Ablation baseline: ridge on flattened SPD matrices, no logarithm."""
    g.check_query(query)
    y = np.asarray(query, dtype=np.float64).ravel()
    return _classify_with(g.solver("spd", cfg.lambda1), g.labels, y, cfg.residual_epsilon)


def euclidean_crc_classify(vectors, labels, query, cfg=CrcConfig(), solver=None):
    """Ablation baseline: ridge on raw feature vectors, one row of ``vectors`` per set."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or len(vectors) == 0:
        raise EmptyGallery("need at least one gallery vector")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (vectors.shape[1],):
        raise DimensionMismatch(f"query shape {query.shape} vs gallery vectors {vectors.shape}")
    if solver is None:
        solver = RidgeSolver(vectors.T, cfg.lambda1)
    return _classify_with(solver, labels, query, cfg.residual_epsilon)
