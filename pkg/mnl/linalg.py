"""
Small dense PSD linear algebra for the MNL estimators.
Accumulators, Cholesky-backed quadratic norms and metric projections onto balls
and ellipsoids.
"""

import threading
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg as sla
from scipy.optimize import brentq

from config import settings
from exceptions import ConvergenceError, InvalidInputError


class PsdMatrix:
    """Immutable symmetric PSD matrix with a lazily built factorization."""

    __slots__ = ("_entries", "_cholesky", "_eigh", "_lock")

    def __init__(self, entries, symmetrize: bool = True):
        matrix = np.array(entries, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidInputError(f"PSD matrix must be square, got shape {matrix.shape}")
        if symmetrize:
            matrix = 0.5 * (matrix + matrix.T)
        matrix.setflags(write=False)
        self._entries = matrix
        self._cholesky = None
        self._eigh = None
        self._lock = threading.Lock()

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "PsdMatrix":
        return cls(scale * np.eye(dim), symmetrize=False)

    @classmethod
    def zeros(cls, dim: int) -> "PsdMatrix":
        return cls(np.zeros((dim, dim)), symmetrize=False)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __add__(self, other: "PsdMatrix") -> "PsdMatrix":
        return accumulate(self, other)

    def scaled(self, factor: float) -> "PsdMatrix":
        return PsdMatrix(factor * self._entries, symmetrize=False)

    def cholesky(self) -> Tuple[np.ndarray, bool]:
        """Cholesky factor (scipy cho_factor format), computed once."""
        with self._lock:
            if self._cholesky is None:
                self._cholesky = _factorize(self._entries)
            return self._cholesky

    def eigh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors, computed once."""
        with self._lock:
            if self._eigh is None:
                values, vectors = sla.eigh(self._entries)
                self._eigh = (values, vectors)
            return self._eigh

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """M^{-1} rhs through the Cholesky factor (never an explicit inverse)."""
        return sla.cho_solve(self.cholesky(), rhs)

    def quad(self, v: np.ndarray) -> float:
        return float(v @ self._entries @ v)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigh()[0][0])

    def sample_gaussian(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Draw from N(0, scale^2 M^{-1})."""
        factor, lower = self.cholesky()
        z = rng.standard_normal(self.dim)
        # cho_factor keeps garbage in the unused triangle
        tri = np.tril(factor) if lower else np.triu(factor)
        return scale * sla.solve_triangular(tri, z, lower=lower, trans=0 if not lower else 1)

    def __getstate__(self):
        return {"entries": self._entries}

    def __setstate__(self, state):
        self.__init__(state["entries"], symmetrize=False)

    def __repr__(self) -> str:
        return f"PsdMatrix(dim={self.dim})"


def _factorize(matrix: np.ndarray) -> Tuple[np.ndarray, bool]:
    # Accumulated Hessians can be numerically semi-definite
    jitter = settings.CHOLESKY_JITTER
    for attempt in range(7):
        try:
            if attempt == 0:
                return sla.cho_factor(matrix, lower=False, check_finite=False)
            scale = max(1.0, float(np.trace(matrix)) / matrix.shape[0])
            return sla.cho_factor(matrix + jitter * scale * np.eye(matrix.shape[0]), lower=False, check_finite=False)
        except sla.LinAlgError:
            if attempt > 0:
                jitter *= 10.0
    raise InvalidInputError("singular metric: Cholesky factorization failed after jitter")


def accumulate(M: PsdMatrix, H: PsdMatrix) -> PsdMatrix:
    """Entrywise sum of two PSD matrices; the result carries a fresh factorization cache."""
    if M.dim != H.dim:
        raise InvalidInputError(f"dimension mismatch: {M.dim} vs {H.dim}")
    return PsdMatrix(M.entries + H.entries, symmetrize=False)


def mahalanobis(M: PsdMatrix, v: np.ndarray) -> float:
    """||v||_M = sqrt(v^T M v)."""
    return float(np.sqrt(max(M.quad(v), 0.0)))


def inv_mahalanobis(M: PsdMatrix, v: np.ndarray) -> float:
    """||v||_{M^{-1}} = sqrt(v^T M^{-1} v) via a Cholesky solve."""
    return float(np.sqrt(max(float(v @ M.solve(v)), 0.0)))


def sample_unit_ball(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """n points uniform on the d-dimensional unit ball (normalized Gaussian scaled by U^{1/d})."""
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(size=n) ** (1.0 / d)
    return directions * radii[:, None]


def _secular_multiplier(lam: np.ndarray, coef: np.ndarray, radius: float) -> float:
    """Multiplier mu >= 0 with ||lam * coef / (lam + mu)|| = radius.

    Caller guarantees ||coef|| > radius. Newton on 1/||u(mu)|| - 1/radius,
    safeguarded by bisection on the bracket [0, lam_max ||coef|| / radius].
    """
    tol = settings.PROJECTION_TOL * max(1.0, radius)
    lo, hi = 0.0, float(lam.max() * np.linalg.norm(coef) / radius)
    mu = 0.0
    residual = np.inf
    for _ in range(settings.PROJECTION_MAX_ITER):
        u = lam * coef / (lam + mu)
        norm = float(np.linalg.norm(u))
        residual = norm - radius
        if abs(residual) <= tol:
            return mu
        if residual > 0:
            lo = mu
        else:
            hi = mu
        dnorm = -float(np.sum(u * u / (lam + mu))) / norm
        phi = 1.0 / norm - 1.0 / radius
        dphi = -dnorm / (norm * norm)
        candidate = mu - phi / dphi if dphi != 0 else 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        mu = candidate
    raise ConvergenceError("secular equation", settings.PROJECTION_MAX_ITER, abs(residual))


def project_metric_ball(v: np.ndarray, metric: PsdMatrix, B: float) -> np.ndarray:
    """argmin_{||w||_2 <= B} ||w - v||_metric."""
    v = np.asarray(v, dtype=float)
    if not B > 0:
        raise InvalidInputError(f"ball radius must be positive, got {B}")
    norm = float(np.linalg.norm(v))
    if norm <= B + settings.PROJECTION_TOL * max(1.0, B):
        return v.copy()
    lam, Q = metric.eigh()
    if lam[0] <= 0:
        raise InvalidInputError("singular metric: projection needs a positive definite metric")
    coef = Q.T @ v
    mu = _secular_multiplier(lam, coef, B)
    w = Q @ (lam * coef / (lam + mu))
    w_norm = float(np.linalg.norm(w))
    if w_norm > B:
        w *= B / w_norm
    return w


def project_metric_ellipsoid(v: np.ndarray, metric: PsdMatrix, E: "Ellipsoid") -> np.ndarray:
    """argmin_{w in E} ||w - v||_metric via simultaneous diagonalization of (metric, E.metric)."""
    v = np.asarray(v, dtype=float)
    offset = v - E.center
    if E.radius == 0:
        return E.center.copy()
    distance = mahalanobis(E.metric, offset)
    if distance <= E.radius + settings.PROJECTION_TOL * max(1.0, E.radius):
        return v.copy()
    # metric Phi = A Phi diag(lam), Phi^T A Phi = I
    lam, Phi = sla.eigh(metric.entries, E.metric.entries)
    if lam[0] <= 0:
        raise InvalidInputError("singular metric: projection needs a positive definite metric")
    coef = Phi.T @ (E.metric.entries @ offset)
    mu = _secular_multiplier(lam, coef, E.radius)
    u = Phi @ (lam * coef / (lam + mu))
    u_norm = mahalanobis(E.metric, u)
    if u_norm > E.radius:
        u *= E.radius / u_norm
    return E.center + u


def project_metric_intersection(v: np.ndarray, metric: PsdMatrix, E: "Ellipsoid", B: float) -> np.ndarray:
    """argmin over {w in E, ||w||_2 <= B} of ||w - v||_metric.

    E.center must lie in the ball. When neither single-set projection is
    feasible for the other set both constraints are active: the ellipsoid
    constraint is dualized with multiplier nu and the remaining ball problem
    under metric + nu A is solved exactly, with nu found by Brent's method.
    """
    v = np.asarray(v, dtype=float)
    p = project_metric_ellipsoid(v, metric, E)
    if float(np.linalg.norm(p)) <= B + settings.PROJECTION_TOL * max(1.0, B):
        return p
    q = project_metric_ball(v, metric, B)
    if E.contains(q, tol=settings.PROJECTION_TOL * max(1.0, E.radius)):
        return q
    if E.radius == 0:
        return E.center.copy()

    M, A = metric.entries, E.metric.entries
    pull = M @ v
    anchor = A @ E.center

    def tilted(nu: float) -> np.ndarray:
        tilted_metric = PsdMatrix(M + nu * A)
        return project_metric_ball(tilted_metric.solve(pull + nu * anchor), tilted_metric, B)

    def excess(nu: float) -> float:
        return E.distance(tilted(nu)) - E.radius

    hi = max(1.0, float(np.trace(M)) / max(float(np.trace(A)), 1e-300))
    for _ in range(settings.PROJECTION_MAX_ITER):
        if excess(hi) <= 0:
            break
        hi *= 4.0
    else:
        raise ConvergenceError("ball-ellipsoid multiplier bracket", settings.PROJECTION_MAX_ITER, excess(hi))
    nu = brentq(excess, 0.0, hi, xtol=settings.PROJECTION_TOL, rtol=1e-12,
                maxiter=settings.PROJECTION_MAX_ITER)
    return tilted(nu)


def project_metric_ellipsoid_pgd(v: np.ndarray, metric: PsdMatrix, E: "Ellipsoid",
                                 max_iter: int = 20000, tol: float = 1e-13) -> np.ndarray:
    """Projected-gradient reference solver for project_metric_ellipsoid (oracle path)."""
    v = np.asarray(v, dtype=float)
    identity = PsdMatrix.identity(v.size)
    step = 1.0 / metric.eigh()[0][-1]
    w = project_metric_ellipsoid(v, identity, E)
    for _ in range(max_iter):
        candidate = project_metric_ellipsoid(w - step * (metric.entries @ (w - v)), identity, E)
        if np.linalg.norm(candidate - w) <= tol:
            return candidate
        w = candidate
    return w


@dataclass(frozen=True)
class Ball:
    """Euclidean ball {w : ||w||_2 <= radius} centered at the origin."""

    radius: float

    def contains(self, w: np.ndarray, tol: float = 1e-10) -> bool:
        return float(np.linalg.norm(w)) <= self.radius + tol

    def project(self, v: np.ndarray, metric: PsdMatrix) -> np.ndarray:
        return project_metric_ball(v, metric, self.radius)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Confidence set {w : ||w - center||_metric <= radius}."""

    center: np.ndarray
    metric: PsdMatrix
    radius: float

    def __post_init__(self):
        center = np.array(self.center, dtype=float)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if center.shape != (self.metric.dim,):
            raise InvalidInputError(f"center dimension {center.shape} does not match metric dimension {self.metric.dim}")
        if self.radius < 0:
            raise InvalidInputError(f"ellipsoid radius must be nonnegative, got {self.radius}")

    def distance(self, w: np.ndarray) -> float:
        return mahalanobis(self.metric, np.asarray(w, dtype=float) - self.center)

    def contains(self, w: np.ndarray, tol: float = 1e-10) -> bool:
        return self.distance(w) <= self.radius + tol

    def project(self, v: np.ndarray, metric: PsdMatrix) -> np.ndarray:
        return project_metric_ellipsoid(v, metric, self)

    def support(self, x: np.ndarray) -> float:
        """max_{w in E} x . w"""
        return float(x @ self.center) + self.radius * inv_mahalanobis(self.metric, x)

    def sample(self, rng: np.random.Generator, n: int, surface: bool = False) -> np.ndarray:
        """Uniform points inside the ellipsoid (or on its boundary)."""
        d = self.metric.dim
        points = sample_unit_ball(rng, n, d)
        if surface:
            points /= np.linalg.norm(points, axis=1, keepdims=True)
        factor, lower = self.metric.cholesky()
        upper = np.triu(factor)
        # A = U^T U, so w - c = r U^{-1} u has ||w - c||_A = r ||u||
        offsets = sla.solve_triangular(upper, points.T, lower=False).T
        return self.center + self.radius * offsets


@dataclass(frozen=True, eq=False)
class BallEllipsoid:
    """Intersection of a confidence ellipsoid with the radius-B parameter ball."""

    ellipsoid: Ellipsoid
    B: float

    def __post_init__(self):
        if not self.B > 0:
            raise InvalidInputError(f"ball radius must be positive, got {self.B}")
        if float(np.linalg.norm(self.ellipsoid.center)) > self.B + 1e-10:
            raise InvalidInputError("ellipsoid center must lie in the parameter ball")

    def contains(self, w: np.ndarray, tol: float = 1e-10) -> bool:
        return self.ellipsoid.contains(w, tol) and float(np.linalg.norm(w)) <= self.B + tol

    def project(self, v: np.ndarray, metric: PsdMatrix) -> np.ndarray:
        return project_metric_intersection(v, metric, self.ellipsoid, self.B)
