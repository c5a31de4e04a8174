"""Kernel families: pointwise evaluation, radial profiles, and derived geometry.

Five positive definite kernels are supported, all normalized so that
K(x, x) = 1 and 0 < K(x, y) <= 1 on their domain:

  gaussian     K(x, y) = exp(-alpha^2 ||x - y||^2)        on R^d
  laplacian    K(x, y) = exp(-alpha ||x - y||)            on R^d
  exponential  K(x, y) = exp(-alpha (1 - <x, y>))         on the unit sphere
  hellinger    K(x, y) = exp(-alpha sum (sqrt(x)-sqrt(y))^2)  on the simplex
  js           K(x, y) = exp(-alpha * entropy midpoint gap)   on the simplex

1/alpha is the bandwidth: larger alpha means a narrower kernel.  The
hellinger kernel is evaluated by mapping both arguments through the
coordinate-wise square root (which lands on the unit sphere) and applying
the squared-distance exponential there; this is an exact identity, not an
approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .errors import DimensionError, DomainError, ParamError, UnsupportedError

KERNEL_FAMILIES = ("gaussian", "laplacian", "exponential", "hellinger", "js")

# Domain membership tolerance shared with dataset loading: points whose
# norm/sum deviate by more than this are rejected rather than projected.
DOMAIN_ATOL = 1e-9

_FAMILY_DOMAIN = {
    "gaussian": "euclidean",
    "laplacian": "euclidean",
    "exponential": "sphere",
    "hellinger": "simplex",
    "js": "simplex",
}

# Entries per chunk when evaluating large kernel blocks.
_BLOCK_BUDGET = 8_000_000


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its bandwidth parameter.

    Args:
      family: one of KERNEL_FAMILIES.
      alpha: positive real; the bandwidth is 1/alpha.
    """

    family: str
    alpha: float

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ParamError(f"unknown kernel family {self.family!r}")
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 0):
            raise ParamError(f"alpha must be a positive finite real, got {self.alpha!r}")

    @property
    def domain(self) -> str:
        return _FAMILY_DOMAIN[self.family]


@dataclass(frozen=True)
class RadialProfile:
    """Strictly decreasing profile kappa with K(x,y) = kappa(alpha ||x-y||).

    kappa maps [0, inf) onto (0, 1] with kappa(0) = 1; kappa_inv is its
    closed-form inverse on (0, 1].
    """

    family: str
    kappa: Callable[[float], float]
    kappa_inv: Callable[[float], float]


def radial_profile(spec: KernelSpec | str) -> RadialProfile:
    """Return the radial profile of a family, if it has one.

    gaussian and laplacian are radial in the euclidean distance; the
    exponential kernel is radial in the chordal distance on the sphere
    (kappa(z) = exp(-z^2 / 2)).  hellinger and js have no radial profile.
    """
    family = spec.family if isinstance(spec, KernelSpec) else spec
    if family == "gaussian":
        return RadialProfile("gaussian", lambda z: math.exp(-(z * z)), lambda u: math.sqrt(math.log(1.0 / u)))
    if family == "laplacian":
        return RadialProfile("laplacian", lambda z: math.exp(-z), lambda u: math.log(1.0 / u))
    if family == "exponential":
        return RadialProfile(
            "exponential", lambda z: math.exp(-(z * z) / 2.0), lambda u: math.sqrt(2.0 * math.log(1.0 / u))
        )
    raise UnsupportedError(f"family {family!r} has no radial profile")


# ---------------------------------------------------------------------------
# Domain validation and projections
# ---------------------------------------------------------------------------


def first_domain_violation(points: np.ndarray, domain_tag: str, atol: float = DOMAIN_ATOL):
    """Return (row_index, reason) for the first point off the domain, else None."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if domain_tag == "euclidean":
        return None
    if domain_tag == "sphere":
        norms = np.linalg.norm(pts, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
        if bad.size:
            return int(bad[0]), f"norm={norms[bad[0]]:.12g}"
        return None
    if domain_tag == "simplex":
        neg = np.flatnonzero((pts < -atol).any(axis=1))
        if neg.size:
            return int(neg[0]), f"negative coordinate {pts[neg[0]].min():.12g}"
        sums = pts.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
        if bad.size:
            return int(bad[0]), f"sum={sums[bad[0]]:.12g}"
        return None
    raise ParamError(f"unknown domain tag {domain_tag!r}")


def check_domain(points: np.ndarray, domain_tag: str, what: str = "point") -> None:
    """Raise DomainError if any row of `points` is off the domain."""
    hit = first_domain_violation(points, domain_tag)
    if hit is not None:
        row, reason = hit
        raise DomainError(f"{what} at row {row} violates {domain_tag} domain ({reason})")


def project_to_sphere(points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    return pts / norms


def project_to_simplex(points: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto the probability simplex."""
    v = np.atleast_2d(np.asarray(points, dtype=np.float64))
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ks = np.arange(1, v.shape[1] + 1)
    rho = np.count_nonzero(u * ks > css, axis=1)
    theta = css[np.arange(len(v)), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


# ---------------------------------------------------------------------------
# Entropy helpers (js kernel)
# ---------------------------------------------------------------------------


def shannon_entropy(x: np.ndarray) -> np.ndarray:
    """H(x) = -sum x_i ln x_i along the last axis, with 0 ln 0 = 0."""
    x = np.asarray(x, dtype=np.float64)
    return -xlogy(x, x).sum(axis=-1)


def entropy_midpoint_gap(x: np.ndarray, y: np.ndarray) -> float:
    """Jensen gap of the Shannon entropy: H((x+y)/2) - (H(x)+H(y))/2.

    Both points must lie on the probability simplex; the gap is nonnegative
    by concavity of H and vanishes exactly when x == y.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise DimensionError(f"mismatched point dimensions {x.shape[0]} vs {y.shape[0]}")
    check_domain(x, "simplex")
    check_domain(y, "simplex")
    gap = shannon_entropy(0.5 * (x + y)) - 0.5 * (shannon_entropy(x) + shannon_entropy(y))
    return float(max(gap, 0.0))


# ---------------------------------------------------------------------------
# Pointwise evaluation
# ---------------------------------------------------------------------------


def _as_point(p, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64).reshape(-1)
    if not np.isfinite(arr).all():
        raise DomainError(f"{name} contains NaN or infinity")
    return arr


def evaluate(spec: KernelSpec, x, y) -> float:
    """Evaluate K(x, y) for a single pair of points.

    Raises DomainError if either point is off the family's domain.  Equal
    inputs return exactly 1.0.
    """
    x = _as_point(x, "x")
    y = _as_point(y, "y")
    if x.shape != y.shape:
        raise DimensionError(f"mismatched point dimensions {x.shape[0]} vs {y.shape[0]}")
    dom = spec.domain
    check_domain(x, dom, "x")
    check_domain(y, dom, "y")
    if np.array_equal(x, y):
        return 1.0
    a = spec.alpha
    if spec.family == "gaussian":
        z = a * math.sqrt(float(np.sum((x - y) ** 2)))
        return math.exp(-(z * z))
    if spec.family == "laplacian":
        z = a * math.sqrt(float(np.sum((x - y) ** 2)))
        return math.exp(-z)
    if spec.family == "exponential":
        return math.exp(-a * max(1.0 - float(np.dot(x, y)), 0.0))
    if spec.family == "hellinger":
        u = np.sqrt(np.maximum(x, 0.0))
        v = np.sqrt(np.maximum(y, 0.0))
        return math.exp(-a * float(np.sum((u - v) ** 2)))
    # js
    gap = shannon_entropy(0.5 * (x + y)) - 0.5 * (shannon_entropy(x) + shannon_entropy(y))
    return math.exp(-a * max(float(gap), 0.0))


def kernel_distance(spec: KernelSpec, x, y) -> float:
    """Distance between feature-space images: sqrt(2 - 2 K(x, y)).

    A pseudometric on the kernel's domain (zero for equal inputs, symmetric,
    and satisfying the triangle inequality).
    """
    return math.sqrt(max(2.0 - 2.0 * evaluate(spec, x, y), 0.0))


def impact_radius(spec: KernelSpec, n: int) -> float:
    """Distance beyond which |K(x, y)| <= 1/n.

    For the radial families this is kappa^{-1}(1/n) / alpha.  The compact
    domains need no decay argument: exponential returns the sphere diameter,
    hellinger the simplex euclidean diameter, and js the simplex l1 diameter
    (all queries are always in play there).
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParamError(f"impact radius needs an integer n >= 2, got {n!r}")
    if spec.family in ("gaussian", "laplacian"):
        prof = radial_profile(spec)
        return prof.kappa_inv(1.0 / n) / spec.alpha
    if spec.family == "exponential":
        return 2.0
    if spec.family == "hellinger":
        return math.sqrt(2.0)
    if spec.family == "js":
        return 2.0
    raise UnsupportedError(f"no impact radius for family {spec.family!r}")


def hellinger_to_exponential(x) -> np.ndarray:
    """Map a simplex point to the unit sphere by coordinate-wise square root.

    The image satisfies K_hellinger^{(alpha)}(x, y)
    = exp(-alpha ||f(x) - f(y)||^2) exactly, i.e. the hellinger kernel is the
    squared-distance exponential at doubled bandwidth parameter on the image.
    """
    x = _as_point(x, "x")
    check_domain(x, "simplex")
    return np.sqrt(np.maximum(x, 0.0))


# ---------------------------------------------------------------------------
# Batched evaluation
# ---------------------------------------------------------------------------


def _sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    xx = np.einsum("ij,ij->i", X, X)
    yy = np.einsum("ij,ij->i", Y, Y)
    d2 = xx[:, None] + yy[None, :] - 2.0 * (X @ Y.T)
    return np.maximum(d2, 0.0, out=d2)


def cross_kernel(spec: KernelSpec, X: np.ndarray, Y: np.ndarray, out_dtype=np.float64) -> np.ndarray:
    """Kernel matrix K[i, j] = K(X[i], Y[j]) for row-stacked points.

    Inputs are assumed to already satisfy the family's domain; no validation
    is performed here.  Values may differ from `evaluate` at the level of
    floating point rounding (this path uses inner-product expansions).
    """
    X = np.atleast_2d(np.asarray(X))
    Y = np.atleast_2d(np.asarray(Y))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"mismatched point dimensions {X.shape[1]} vs {Y.shape[1]}")
    a = spec.alpha
    fam = spec.family
    if fam == "hellinger":
        X = np.sqrt(np.maximum(X, 0.0))
        Y = np.sqrt(np.maximum(Y, 0.0))
    if fam in ("gaussian", "hellinger"):
        K = _sqdist(X, Y)
        if fam == "gaussian":
            K *= -(a * a)
        else:
            K *= -a
        return np.exp(K, out=K).astype(out_dtype, copy=False)
    if fam == "laplacian":
        K = _sqdist(X, Y)
        np.sqrt(K, out=K)
        K *= -a
        return np.exp(K, out=K).astype(out_dtype, copy=False)
    if fam == "exponential":
        K = np.maximum(1.0 - X @ Y.T, 0.0)
        K *= -a
        return np.exp(K, out=K).astype(out_dtype, copy=False)
    # js: midpoint entropies need a (n, m, d) intermediate; chunk the rows.
    n, m = X.shape[0], Y.shape[0]
    d = X.shape[1]
    hx = shannon_entropy(X)
    hy = shannon_entropy(Y)
    K = np.empty((n, m), dtype=out_dtype)
    rows = max(1, _BLOCK_BUDGET // max(m * d, 1))
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        mid = 0.5 * (X[lo:hi, None, :] + Y[None, :, :])
        gap = -xlogy(mid, mid).sum(axis=-1)
        gap -= 0.5 * (hx[lo:hi, None] + hy[None, :])
        np.maximum(gap, 0.0, out=gap)
        gap *= -a
        K[lo:hi] = np.exp(gap)
    return K


def gram_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Symmetric kernel matrix of a point set, with unit diagonal pinned."""
    G = cross_kernel(spec, X, X)
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, 1.0)
    return G


def kde(spec: KernelSpec, points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Kernel density estimate of `points` at each query row: mean_i K(x_i, y)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    n = points.shape[0]
    out = np.empty(queries.shape[0], dtype=np.float64)
    cols = max(1, _BLOCK_BUDGET // max(n, 1))
    for lo in range(0, queries.shape[0], cols):
        hi = min(lo + cols, queries.shape[0])
        out[lo:hi] = cross_kernel(spec, points, queries[lo:hi]).mean(axis=0)
    return out
