"""Dense complex linear algebra on bipartite Hermitian operators.

Everything here is small and dense (ambient dimension at most ~16), so the
routines favour clarity over speed and never touch sparse storage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from entwit.exceptions import DimensionError, ValidationError

HERMITIAN_RTOL = 1e-10
PINV_CUTOFF = 1e-12
RANGE_CUTOFF = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def check_dims(dims: Sequence[int], n: int | None = None) -> tuple[int, ...]:
    """Normalize ``dims`` to a tuple of positive ints and check it against ``n``."""
    try:
        dims = tuple(int(d) for d in dims)
    except TypeError as exc:
        raise DimensionError(f"dims must be a sequence of integers, got {dims!r}") from exc
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"dims must be positive integers, got {dims}")
    if n is not None and math.prod(dims) != n:
        raise DimensionError(f"dims {dims} do not multiply to matrix dimension {n}")
    return dims


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix together with its tensor-factor dimensions.

    The matrix is validated against its conjugate transpose (relative
    Frobenius tolerance 1e-10), then symmetrized and frozen.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be a square matrix, got shape {m.shape}")
        dims = check_dims(self.dims, m.shape[0])
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator has non-finite entries")
        scale = max(np.linalg.norm(m), 1.0)
        if np.linalg.norm(m - m.conj().T) > HERMITIAN_RTOL * scale:
            raise ValidationError("operator is not Hermitian")
        object.__setattr__(self, "matrix", _readonly((m + m.conj().T) / 2))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims}, trace={self.trace():.6g})"


class EigenSystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def infer_dims(n: int) -> tuple[int, int]:
    d = math.isqrt(n)
    if d * d != n:
        raise DimensionError(f"cannot infer bipartite dims for dimension {n}; pass dims explicitly")
    return (d, d)


def as_operator(h, dims: Sequence[int] | None = None) -> HermitianOperator:
    """Coerce ``h`` (array or operator) into a :class:`HermitianOperator`.

    Without ``dims``, an n x n array is read as ``(d, d)`` when n = d^2 and
    as the single factor ``(n,)`` otherwise.
    """
    if isinstance(h, HermitianOperator):
        if dims is not None and tuple(dims) != h.dims:
            return HermitianOperator(h.matrix, tuple(dims))
        return h
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be a square matrix, got shape {m.shape}")
    if dims is None:
        n = m.shape[0]
        dims = infer_dims(n) if math.isqrt(n) ** 2 == n else (n,)
    return HermitianOperator(m, tuple(dims))


def bipartite(h: HermitianOperator) -> tuple[int, int]:
    if len(h.dims) != 2:
        raise DimensionError(f"expected a bipartite operator, got dims {h.dims}")
    return h.dims  # type: ignore[return-value]


def kron(a, b) -> HermitianOperator:
    """Tensor product; the dims of the result are the concatenated input dims."""
    a = a if isinstance(a, HermitianOperator) else as_operator(a, (len(a),))
    b = b if isinstance(b, HermitianOperator) else as_operator(b, (len(b),))
    return HermitianOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def partial_transpose_matrix(m: np.ndarray, dims: Sequence[int], subsystem: int = 1) -> np.ndarray:
    """Partial transpose of a raw bipartite matrix (stacked leading axes allowed)."""
    d1, d2 = dims
    lead = m.shape[:-2]
    t = m.reshape(*lead, d1, d2, d1, d2)
    k = len(lead)
    axes = list(range(k))
    if subsystem == 0:
        axes += [k + 2, k + 1, k, k + 3]
    elif subsystem == 1:
        axes += [k, k + 3, k + 2, k + 1]
    else:
        raise DimensionError(f"subsystem must be 0 or 1, got {subsystem}")
    return t.transpose(axes).reshape(*lead, d1 * d2, d1 * d2)


def partial_transpose(h, subsystem: int = 1) -> HermitianOperator:
    """Transpose the ``subsystem``-th tensor factor (0 or 1) of a bipartite operator."""
    h = as_operator(h)
    dims = bipartite(h)
    return HermitianOperator(partial_transpose_matrix(h.matrix, dims, subsystem), dims)


def eig_hermitian(h) -> EigenSystem:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""
    h = as_operator(h)
    values, vectors = np.linalg.eigh(h.matrix)
    return EigenSystem(values, vectors)


def min_eigenvalue(h) -> float:
    m = h.matrix if isinstance(h, HermitianOperator) else np.asarray(h)
    return float(np.linalg.eigvalsh(m)[0])


def pinv(h, cutoff: float = PINV_CUTOFF) -> HermitianOperator:
    """Moore-Penrose inverse restricted to eigenvalues above ``cutoff`` times the largest."""
    h = as_operator(h)
    values, vectors = np.linalg.eigh(h.matrix)
    top = np.abs(values).max(initial=0.0)
    if top == 0.0:
        return HermitianOperator(np.zeros_like(h.matrix), h.dims)
    keep = np.abs(values) > cutoff * top
    v = vectors[:, keep]
    return HermitianOperator((v / values[keep]) @ v.conj().T, h.dims)


def range_basis(m: np.ndarray, cutoff: float = RANGE_CUTOFF) -> np.ndarray:
    """Orthonormal columns spanning the eigenvectors with |eigenvalue| > cutoff * max."""
    values, vectors = np.linalg.eigh(m)
    top = np.abs(values).max(initial=0.0)
    if top == 0.0:
        return vectors[:, :0]
    return vectors[:, np.abs(values) > cutoff * top]


def hs_inner(a, b) -> float:
    """Trace pairing tr(a b), which is real for Hermitian arguments."""
    ma = a.matrix if isinstance(a, HermitianOperator) else np.asarray(a)
    mb = b.matrix if isinstance(b, HermitianOperator) else np.asarray(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"shape mismatch {ma.shape} vs {mb.shape}")
    # tr(AB) = sum_ij A_ij B_ji
    return float(np.sum(ma * mb.T).real)


def frobenius_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def projector(vec: np.ndarray, dims: Sequence[int] | None = None) -> HermitianOperator:
    """Rank-one projector onto ``vec`` (normalized first)."""
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    m = np.outer(v, v.conj())
    return as_operator(m, dims)


def random_hermitian(dim: int, rng: np.random.Generator, dims: Sequence[int] | None = None) -> HermitianOperator:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return as_operator((g + g.conj().T) / 2, dims)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
