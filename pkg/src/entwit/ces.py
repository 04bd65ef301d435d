"""Completely entangled subspaces: subspaces that contain no product vector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from entwit.bsa import ProductSearch, subspace_product_search
from entwit.exceptions import DimensionError, ValidationError
from entwit.linops import check_dims
from entwit.states import DensityMatrix, make_density

ORTHONORMAL_TOL = 1e-10
DEFAULT_RESTARTS = 256


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal columns ``basis`` spanning a subspace of C^(d1 d2 ...)."""

    basis: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        dims = check_dims(self.dims, b.shape[0])
        if b.shape[1] == 0:
            raise ValidationError("subspace basis is empty")
        gram = b.conj().T @ b
        if np.abs(gram - np.eye(b.shape[1])).max() > ORTHONORMAL_TOL:
            raise ValidationError("basis columns are not orthonormal; use Subspace.span")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def span(cls, vectors, dims: Sequence[int]) -> "Subspace":
        """Orthonormalize the given vectors (rows or a single vector) by QR."""
        v = np.atleast_2d(np.asarray(vectors, dtype=complex)).T
        q, r = np.linalg.qr(v)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(r).max())))
        if rank < v.shape[1]:
            raise ValidationError(f"spanning vectors are linearly dependent (rank {rank} < {v.shape[1]})")
        return cls(q, tuple(dims))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def max_ces_dim(dims: Sequence[int]) -> int:
    """Largest dimension of a completely entangled subspace of the given
    tensor product: prod(d) - sum(d) + k - 1."""
    dims = check_dims(dims)
    if len(dims) < 2 or min(dims) < 2:
        raise DimensionError(f"need at least two factors of dimension >= 2, got {dims}")
    return math.prod(dims) - sum(dims) + len(dims) - 1


def subspace_contains_product(s: Subspace, restarts: int = DEFAULT_RESTARTS, seed=0) -> ProductSearch:
    """Multistart search for a unit product vector inside ``s``.

    ``vector`` is set when the best overlap with ``s`` exceeds 1 - 1e-6;
    ``overlap`` always reports the achieved maximum.
    """
    if len(s.dims) != 2:
        raise DimensionError(f"product search needs a bipartite subspace, got dims {s.dims}")
    return subspace_product_search(s.basis, s.dims, restarts, seed)


def is_ces(s: Subspace, restarts: int = DEFAULT_RESTARTS, seed=0) -> bool:
    """True when the search finds no product vector (heuristic, see overlap)."""
    return subspace_contains_product(s, restarts=restarts, seed=seed).vector is None


def random_state_on(s: Subspace, seed=None) -> DensityMatrix:
    """Mixed state whose support is exactly ``s`` (full rank on it)."""
    rng = np.random.default_rng(seed)
    k = s.dim
    g = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    inner = g @ g.conj().T + 1e-3 * np.eye(k)
    m = s.basis @ inner @ s.basis.conj().T
    return make_density(m / np.trace(m).real, s.dims)


__all__ = [
    "ProductSearch",
    "Subspace",
    "is_ces",
    "max_ces_dim",
    "random_state_on",
    "subspace_contains_product",
]
