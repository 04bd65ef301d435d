"""Alternating-eigenvector minimization of <e,f|H|e,f> over unit product vectors.

With ``f`` fixed the objective is the quadratic form of the reduced operator
``(I x <f|) H (I x |f>)`` in ``e``, minimized exactly by its lowest
eigenvector; then the roles swap. Each half-step can only lower the
objective, so every start descends monotonically to a local minimum.
All restarts advance together as one batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize


def random_unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """``n`` complex vectors uniform on the unit sphere of C^d."""
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class SeesawRun:
    values: np.ndarray  # (restarts,)
    e: np.ndarray  # (restarts, d1)
    f: np.ndarray  # (restarts, d2)
    iterations: np.ndarray  # (restarts,)
    history: list[np.ndarray] | None = None  # per-iteration values, nan once converged

    def best(self) -> int:
        return int(np.argmin(self.values))


def seesaw(
    h: np.ndarray,
    dims: tuple[int, int],
    rng: np.random.Generator,
    restarts: int = 64,
    max_iters: int = 1000,
    tol: float = 1e-12,
    record: bool = False,
    init_f: np.ndarray | None = None,
    scale: float | None = None,
) -> SeesawRun:
    """Batched see-saw; a start stops once its value moves by <= tol * scale."""
    d1, d2 = dims
    t = np.asarray(h, dtype=complex).reshape(d1, d2, d1, d2)
    if scale is None:
        scale = max(1.0, float(np.abs(h).max()))
    f = random_unit_vectors(rng, restarts, d2) if init_f is None else np.array(init_f, dtype=complex)
    e = np.zeros((restarts, d1), dtype=complex)
    values = np.full(restarts, np.inf)
    iterations = np.zeros(restarts, dtype=int)
    active = np.arange(restarts)
    history = [] if record else None

    for it in range(max_iters):
        fa = f[active]
        me = np.einsum("rj,ijkl,rl->rik", fa.conj(), t, fa)
        _, v = np.linalg.eigh(me)
        ea = v[:, :, 0]
        mf = np.einsum("ri,ijkl,rk->rjl", ea.conj(), t, ea)
        w, v = np.linalg.eigh(mf)
        fa = v[:, :, 0]
        val = w[:, 0]

        done = np.abs(values[active] - val) <= tol * scale
        e[active], f[active], values[active] = ea, fa, val
        iterations[active] = it + 1
        if record:
            row = np.full(restarts, np.nan)
            row[active] = val
            history.append(row)
        active = active[~done]
        if active.size == 0:
            break

    return SeesawRun(values, e, f, iterations, history)


def product_expectation(h: np.ndarray, e: np.ndarray, f: np.ndarray) -> float:
    x = np.kron(e, f)
    return float(np.real(x.conj() @ h @ x))


def _swap_factors(m: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Reorder the row index of ``m`` from d1 x d2 to d2 x d1."""
    d1, d2 = dims
    return m.reshape(d1, d2, *m.shape[1:]).swapaxes(0, 1).reshape(m.shape)


def _profile(t: np.ndarray, kernel: np.ndarray, e: np.ndarray):
    """Best ``f`` for each row of ``e`` subject to ``e x f`` orthogonal to ``kernel``.

    ``t`` is the operator reshaped to (d1, d2, d1, d2) and ``kernel`` to
    (d1, d2, k). Returns (values, f).
    """
    k = kernel.shape[2]
    m = np.einsum("abj,na->njb", kernel.conj(), e)
    _, _, vh = np.linalg.svd(m)
    null = vh[:, k:, :].conj().transpose(0, 2, 1)  # (n, d2, d2 - k)
    ze = np.einsum("na,abcd,nc->nbd", e.conj(), t, e)
    w, v = np.linalg.eigh(null.conj().transpose(0, 2, 1) @ ze @ null)
    return w[:, 0], np.einsum("nbj,nj->nb", null, v[:, :, 0])


def constrained_min(
    h: np.ndarray,
    kernel: np.ndarray,
    dims: tuple[int, int],
    rng: np.random.Generator,
    samples: int = 2048,
    refine: int = 4,
) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ``<x|h|x>`` over unit product vectors orthogonal to the columns of ``kernel``.

    With one factor fixed the admissible other factor ranges over a linear
    subspace, so the inner problem is a small eigenproblem. The outer factor
    is sampled and the best few samples are polished with L-BFGS. Returns
    ``(values, vectors)`` sorted ascending. When a generic fixed factor
    leaves no admissible partner in either orientation, the admissible set
    is finite (or empty) and its points are located directly.
    """

    d1, d2 = dims
    k = kernel.shape[1]
    swap = d2 - k < 1
    if swap:
        if d1 - k < 1:
            return _isolated_products(h, kernel, dims, rng, samples, refine)
        h = _swap_factors(_swap_factors(h, dims).T, dims).T
        kernel = _swap_factors(kernel, dims)
        d1, d2 = d2, d1
    t = h.reshape(d1, d2, d1, d2)
    kt = kernel.reshape(d1, d2, k)

    e = random_unit_vectors(rng, samples, d1)
    vals, _ = _profile(t, kt, e)
    starts = e[np.argsort(vals)[:refine]]

    def objective(z):
        a = z[:d1] + 1j * z[d1:]
        return float(_profile(t, kt, (a / np.linalg.norm(a))[None])[0][0])

    es = []
    for a in starts:
        res = minimize(objective, np.concatenate([a.real, a.imag]), method="L-BFGS-B", options={"maxiter": 200})
        z = res.x[:d1] + 1j * res.x[d1:]
        es.append(z / np.linalg.norm(z))
    es = np.concatenate([np.array(es), starts])
    vals, fs = _profile(t, kt, es)
    xs = np.einsum("na,nb->nab", es, fs).reshape(len(es), -1)
    if swap:
        xs = _swap_factors(xs.T, (d1, d2)).T
    order = np.argsort(vals)
    return vals[order], xs[order]


def _isolated_products(h, kernel, dims, rng, samples, refine):
    """Product vectors orthogonal to ``kernel`` when there are finitely many.

    ``e`` is admissible when the map f -> kernel^H (e x f) is singular, so
    the smallest singular value is driven to zero from sampled starts and
    each root is then solved to machine precision by least squares on the
    bilinear residual.
    """

    d1, d2 = dims
    k = kernel.shape[1]
    kt = kernel.conj().T.reshape(k, d1, d2)

    def smallest(e):
        m = np.einsum("jab,na->njb", kt, e)
        _, sv, vh = np.linalg.svd(m)
        return sv[:, -1], vh[:, -1, :].conj()

    def objective(z):
        a = z[:d1] + 1j * z[d1:]
        return float(smallest((a / np.linalg.norm(a))[None])[0][0] ** 2)

    e = random_unit_vectors(rng, samples, d1)
    sv, _ = smallest(e)
    found = []
    for a in e[np.argsort(sv)[: max(refine, 8)]]:
        res = minimize(objective, np.concatenate([a.real, a.imag]), method="L-BFGS-B", options={"maxiter": 200})
        a = res.x[:d1] + 1j * res.x[d1:]
        a = a / np.linalg.norm(a)
        _, f = smallest(a[None])
        x = snap_product(a, f[0], kernel, dims)
        if x is not None:
            found.append(x)
    if not found:
        return np.empty(0), np.empty((0, d1 * d2), dtype=complex)
    xs = np.array(found)
    vals = np.einsum("ni,ij,nj->n", xs.conj(), h, xs).real
    order = np.argsort(vals)
    return vals[order], xs[order]


def snap_product(e, f, kernel, dims, tol: float = 1e-9):
    """Move ``e x f`` onto a nearby unit product vector orthogonal to ``kernel``.

    Solves the bilinear system kernel^H (e x f) = 0 by least squares from
    the given factors. Returns the vector, or None if no root is reached.
    """

    d1, d2 = dims
    k = kernel.shape[1]
    kt = kernel.conj().T.reshape(k, d1, d2)

    def unpack(z):
        return z[:d1] + 1j * z[d1 : 2 * d1], z[2 * d1 : 2 * d1 + d2] + 1j * z[2 * d1 + d2 :]

    def residual(z):
        a, b = unpack(z)
        r = np.einsum("jab,a,b->j", kt, a, b)
        return np.concatenate([r.real, r.imag, [np.vdot(a, a).real - 1, np.vdot(b, b).real - 1]])

    z0 = np.concatenate([e.real, e.imag, f.real, f.imag])
    a, b = unpack(least_squares(residual, z0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15).x)
    x = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
    return x if np.linalg.norm(kernel.conj().T @ x) < tol else None
