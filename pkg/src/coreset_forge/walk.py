"""The kernelized Gram-Schmidt walk.

Signs are assigned to the implicit unit feature vectors of a dataset (known
only through their Gram matrix of kernel inner products) so that the signed
feature sum is subgaussian with a dimension-free constant.  The walk keeps a
fractional vector z in [-1, 1]^n, repeatedly moves it along a direction that
is 1 on a pivot coordinate and least-squares-minimal on the remaining alive
coordinates, and steps to whichever boundary keeps each move mean zero.

The per-step least-squares solve maintains the inverse of the alive-block
Gram matrix under coordinate removals (one rank-one Schur update per frozen
coordinate), so a full walk costs O(n^3) rather than O(n^4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset_io import DataSet
from .errors import DimensionError, NumericsError, ParamError
from .kernels import KernelSpec, gram_matrix

# |z_i| within this of 1 is rounded to +-1 and frozen.
_ROUND_ATOL = 1e-12
# Direction entries below this magnitude do not constrain the step length.
_TINY_DIRECTION = 1e-14
# Steps between residual checks of the maintained inverse.
_REFRESH_INTERVAL = 64


def seed_sequence(seed) -> np.random.SeedSequence:
    """SeedSequence from an int or a tuple of ints (for derived streams)."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed))
    return np.random.SeedSequence([int(s) for s in seed])


@dataclass
class Coloring:
    """A +-1 sign per dataset index, with provenance."""

    signs: np.ndarray
    seed: object = 0
    algorithm: str = "gsw"

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.int8)
        if signs.ndim != 1 or not np.isin(signs, (-1, 1)).all():
            raise ParamError("signs must be a 1-d vector of +-1 entries")
        self.signs = signs

    @property
    def n(self) -> int:
        return self.signs.shape[0]


class GramOracle:
    """Inner products of the implicit feature vectors, stored densely.

    The matrix must be symmetric with unit diagonal (both are enforced:
    the diagonal is pinned and the matrix symmetrized on construction) and
    positive semidefinite up to a -1e-8 eigenvalue tolerance, which is the
    caller's responsibility for large instances (`min_eigenvalue` checks it).
    """

    def __init__(self, matrix: np.ndarray):
        G = np.asarray(matrix, dtype=np.float64)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got shape {G.shape}")
        if G.shape[0] < 1:
            raise DimensionError("Gram matrix must be at least 1x1")
        if not np.isfinite(G).all():
            raise NumericsError("Gram matrix contains non-finite entries")
        if np.abs(np.diagonal(G) - 1.0).max() > 1e-9:
            raise NumericsError("Gram diagonal must be 1 (unit-norm features)")
        G = 0.5 * (G + G.T)
        np.fill_diagonal(G, 1.0)
        G.setflags(write=False)
        self.matrix = G

    @classmethod
    def from_dataset(cls, spec: KernelSpec, dataset: DataSet) -> "GramOracle":
        return cls(gram_matrix(spec, dataset.points))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def inner(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


class _Walker:
    """State of one walk; positions are a permutation of the original indices.

    Layout invariant: positions [0, k) hold the alive non-pivot set S,
    position k holds the pivot, positions (k, n) hold frozen coordinates.
    `Minv` is the inverse of G[S, S] + lambda I over the first k positions.
    """

    def __init__(self, G: np.ndarray, n: int):
        self.G = G  # private reorderable copy
        self.n = n
        self.z = np.zeros(n)
        self.order = np.arange(n)  # position -> original index
        self.position = np.arange(n)  # original index -> position
        self.lam = 1e-10 * n
        self.Minv = None

    def swap(self, a: int, b: int, minv_size: int) -> None:
        if a == b:
            return
        G, z = self.G, self.z
        G[[a, b], :] = G[[b, a], :]
        G[:, [a, b]] = G[:, [b, a]]
        z[[a, b]] = z[[b, a]]
        oa, ob = self.order[a], self.order[b]
        self.order[a], self.order[b] = ob, oa
        self.position[oa], self.position[ob] = b, a
        M = self.Minv
        if M is not None and a < minv_size and b < minv_size:
            M[[a, b], :minv_size] = M[[b, a], :minv_size]
            M[:minv_size, [a, b]] = M[:minv_size, [b, a]]

    def init_inverse(self, k: int) -> None:
        A = self.G[:k, :k] + self.lam * np.eye(k)
        try:
            self.Minv = np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise NumericsError("failed to invert regularized Gram block") from exc
        if not np.isfinite(self.Minv).all():
            raise NumericsError("non-finite inverse of regularized Gram block")

    def shrink(self, k: int) -> None:
        """Remove position k-1 from S: rank-one Schur downdate of Minv."""
        M = self.Minv
        j = k - 1
        e = M[j, j]
        c = M[:j, j].copy()
        r = M[j, :j].copy()
        M[:j, :j] -= np.outer(c, r) / e
