"""Best separable approximation (Lewenstein-Sanpera decomposition).

``rho = lam * rho_S + (1 - lam) * rho_E`` with ``rho_S`` separable, ``lam``
maximal, and ``rho_E`` the optimal entangled remainder.

The decomposition runs in two phases:

1. Greedy damped subtraction. The product vector with the largest
   subtractable weight is found by multistart coordinate ascent. Half of
   that weight is subtracted, or all of it when the same direction comes
   back. This stops once nothing heavier than ``tol`` is left.
2. Column-generation polish. The weights over all product vectors found so
   far are re-optimized as a small semidefinite program
   (``max sum w`` s.t. ``rho - sum w_i x_i x_i^dagger >= 0``). Its dual
   operator Z prices new product vectors: any ``x`` with ``<x|Z|x> < 1``
   can raise the weight, and ``tr(Z rho) / min <x|Z|x>`` bounds ``lam``
   from above. The result counts as converged when that bound is within
   ``tol`` of the achieved ``lam``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from entwit.exceptions import NotEntangled
from entwit.linops import RANGE_CUTOFF, as_operator, bipartite, range_basis
from entwit.seesaw import constrained_min, seesaw, snap_product
from entwit.states import (
    SEPARABLE_LAMBDA_TOL,
    DensityMatrix,
    ProductVector,
    Separability,
    as_density,
    is_separable,
    make_density,
)

log = logging.getLogger(__name__)

RANGE_OVERLAP_TOL = 1e-6
MEMBERSHIP_TOL = 1e-10
OPTIMAL_WEIGHT_TOL = 1e-6
PRICING_TOL = 1e-9


@dataclass(frozen=True)
class BsaResult:
    lam: float
    separable_part: tuple[tuple[float, ProductVector], ...]
    separable_state: DensityMatrix | None
    remainder: DensityMatrix | None
    trace_residual: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def not_converged(self) -> bool:
        return not self.converged

    def reconstruct(self) -> np.ndarray:
        d = (self.separable_state or self.remainder).dim
        out = np.zeros((d, d), dtype=complex)
        if self.separable_state is not None:
            out += self.lam * self.separable_state.matrix
        if self.remainder is not None:
            out += (1 - self.lam) * self.remainder.matrix
        return out


@dataclass(frozen=True)
class ProductSearch:
    vector: ProductVector | None
    overlap: float


@dataclass(frozen=True)
class OptimalityReport:
    is_optimal: bool
    violating_product: ProductVector | None
    max_range_overlap: float
    best_subtractable_weight: float


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if hasattr(rho, "matrix") else np.asarray(rho, dtype=complex)


def _subtractable(m: np.ndarray, x: np.ndarray, eig=None) -> float:
    values, vectors = np.linalg.eigh(m) if eig is None else eig
    top = values.max(initial=0.0)
    if top <= 0:
        return 0.0
    keep = values > RANGE_CUTOFF * top
    y = vectors[:, keep].conj().T @ x
    if np.vdot(y, y).real <= 1 - MEMBERSHIP_TOL:
        return 0.0
    return float(1.0 / np.sum(np.abs(y) ** 2 / values[keep]))


def max_subtractable_weight(rho, x) -> float:
    """Largest lam >= 0 with ``rho - lam |x><x|`` positive semidefinite.

    Equals ``1 / <x|rho^+|x>`` when ``x`` lies in the range of ``rho``, else 0.
    ``rho`` may be unnormalized.
    """
    x = np.asarray(x, dtype=complex).ravel()
    if abs(np.linalg.norm(x) - 1) > 1e-10:
        raise ValueError("x must be a unit vector")
    return _subtractable(_matrix(rho), x)


def _range_min(core: np.ndarray, basis: np.ndarray, dims, rng, restarts: int, scale: float):
    """Minimize ``<x|core|x>`` over unit product vectors in the span of ``basis``.

    Two searches are merged. The see-saw runs on ``core`` plus an off-range
    penalty raised stepwise to 1e6 * scale; a single steep penalty would
    freeze it in a narrow valley. When ``basis`` is a proper subspace the
    exact constrained search runs too. Returns ``(values, vectors)`` sorted
    ascending.
    """
    off_range = np.eye(basis.shape[0]) - basis @ basis.conj().T
    full = basis.shape[1] == basis.shape[0]
    f = None
    for c in (1e6,) if full else (1.0, 1e2, 1e4, 1e6):
        run = seesaw(core + c * scale * off_range, dims, rng, restarts=restarts, max_iters=500, scale=scale, init_f=f)
        f = run.f
    values = run.values
    xs = np.einsum("na,nb->nab", run.e, run.f).reshape(len(values), -1)
    if not full:
        kernel = range_basis(off_range, 0.5)
        cv, cx = constrained_min(core, kernel, dims, rng)
        values, xs = np.concatenate([values, cv]), np.concatenate([xs, cx])
    order = np.argsort(values)
    return values[order], xs[order]


def _best_subtraction(m: np.ndarray, dims, rng, restarts: int):
    eig = np.linalg.eigh(m)
    values, vectors = eig
    top = values.max(initial=0.0)
    if top <= 0:
        return None, 0.0
    keep = values > RANGE_CUTOFF * top
    v = vectors[:, keep]
    inv = 1.0 / values[keep]
    # minimizing <x|rho^+|x> over product vectors in the range maximizes
    # the subtractable weight 1 / <x|rho^+|x>
    _, xs = _range_min((v * inv) @ v.conj().T, v, dims, rng, restarts, float(inv.max()))
    best, best_w = None, 0.0
    for x in xs[:8]:
        wt = _subtractable(m, x, eig)
        if best is None or wt > best_w:
            best, best_w = x, wt
    return ProductVector(*_split(best, dims)), best_w


def best_product_subtraction(rho, restarts: int = 128, seed=0) -> tuple[ProductVector, float]:
    """Product vector with (heuristically) the largest subtractable weight."""
    op = as_operator(rho)
    pv, wt = _best_subtraction(op.matrix, bipartite(op), _rng(seed), restarts)
    if pv is None:
        d1, d2 = op.dims
        pv = ProductVector(np.eye(d1)[0], np.eye(d2)[0])
    return pv, wt


def _realify(m: np.ndarray) -> np.ndarray:
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


_SOLVERS = (("CLARABEL", {}), ("SCS", {"eps": 1e-9}))
MAX_NEW_ATOMS = 64
ATOM_FLOOR = 1e-7  # lighter atoms are dropped between rounds
MASTER_MARGIN = 1e-9
STALL_ROUNDS = 10
MAX_POOL = 256
_FINAL_FLOORS = (ATOM_FLOOR, 1e-5, 1e-4, 1e-3)


def _master(rho_r: np.ndarray, atoms_r: np.ndarray, margin: float = 0.0):
    """Max total weight over fixed atoms, in range coordinates, keeping
    ``rho - sum w_i x_i x_i^dagger >= margin``.

    Returns (weights, dual Z, value) or None if no solver succeeds.
    """
    n, r = atoms_r.shape
    proj = np.einsum("ni,nj->nij", atoms_r, atoms_r.conj())
    a = np.stack([_realify(p) for p in proj]).reshape(n, -1)
    w = cp.Variable(n, nonneg=True)
    slack = _realify(rho_r) - cp.reshape(a.T @ w, (2 * r, 2 * r), order="C")
    con = (slack + slack.T) / 2 - margin * np.eye(2 * r) >> 0
    prob = cp.Problem(cp.Maximize(cp.sum(w)), [con])
    for solver, opts in _SOLVERS:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=solver, **opts)
        except cp.SolverError:
            continue
        if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and w.value is not None:
            y = con.dual_value
            # real embedding [[A, -B], [B, A]] of A + iB pairs with Z = (Y11 + Y22) + i(Y21 - Y12)
            z = (y[:r, :r] + y[r:, r:]) + 1j * (y[r:, :r] - y[:r, r:])
            return np.clip(w.value, 0, None), (z + z.conj().T) / 2, float(prob.value)
    return None


def _min_eig_after(rho_r, atoms_r, weights) -> float:
    sigma = (atoms_r.T * weights) @ atoms_r.conj()
    return float(np.linalg.eigvalsh(rho_r - sigma)[0])


def _dedupe(vectors, tol: float = 1e-9) -> list[np.ndarray]:
    if not vectors:
        return []
    x = np.array(vectors)
    overlap = np.abs(x.conj() @ x.T)
    dup = np.triu(overlap > 1 - tol, k=1).any(axis=0)
    return [v for v, drop in zip(vectors, dup) if not drop]


def _in_range(v: np.ndarray, basis: np.ndarray) -> bool:
    y = basis.conj().T @ v
    return np.vdot(y, y).real > 1 - MEMBERSHIP_TOL


def _polish(rho_m, dims, atoms, rng, restarts, rounds, gap_tol):
    """Column generation from the greedy atoms. Returns (pairs, diagnostics) or None.

    Everything is solved in the range of ``rho``: product vectors outside it
    can never carry weight. The loop stops once the dual bound is within
    ``gap_tol`` of the master value, or after ``STALL_ROUNDS`` rounds in
    which that gap did not shrink measurably.
    """
    basis = range_basis(rho_m, RANGE_CUTOFF)
    d, r = basis.shape
    rho_r = basis.conj().T @ rho_m @ basis
    off_range = np.eye(d) - basis @ basis.conj().T

    kernel = range_basis(off_range, 0.5) if r < d else None

    def admissible(candidates):
        if kernel is not None:
            # atoms from the penalized search sit slightly off the range
            snapped = (snap_product(*_split(v, dims), kernel, dims) for v in candidates)
            candidates = [v for v in snapped if v is not None]
        return [v for v in _dedupe(candidates) if _in_range(v, basis)]

    seeds = seesaw(off_range, dims, rng, restarts=restarts)
    vecs = admissible(list(atoms) + [np.kron(e, f) for e, f in zip(seeds.e, seeds.f)])
    if not vecs:
        return [], {"polish_rounds": 0, "lambda_upper_bound": 0.0, "polish_certified": True}

    # lam <= 1 always, so 1 is a free upper bound
    lam_upper, certified, weights, solved_vecs = 1.0, False, None, vecs
    history: list[float] = []
    rounds_used = 0
    for k in range(rounds):
        rounds_used = k + 1
        solved = _master(rho_r, np.array(vecs) @ basis.conj())
        if solved is None:
            log.warning("polish master problem failed in round %d", k)
            break
        weights, z_r, value = solved
        solved_vecs = vecs
        log.debug("polish master %d: value %.10f over %d atoms", k, value, len(vecs))
        history.append(lam_upper - value)
        if lam_upper - value <= gap_tol:
            certified = True
            break
        if len(history) > STALL_ROUNDS and history[-1 - STALL_ROUNDS] - history[-1] < gap_tol / 100:
            break
        zr_scale = max(1.0, float(np.abs(z_r).max()))
        prices, candidates = _range_min(basis @ z_r @ basis.conj().T, basis, dims, rng, restarts, zr_scale)
        m = float(prices[0])
        if m > 0:
            lam_upper = min(lam_upper, float(np.trace(z_r @ rho_r).real) / m)
        log.debug("polish round %d: value %.10f bound %.10f price %.3e atoms %d", k, value, lam_upper, m, len(vecs))
        if lam_upper - value <= gap_tol:
            certified = True
            break
        # dropping every zero-weight column makes the dual cycle, so the
        # cheapest of them (by price under Z) stay in a bounded pool
        # the master loses accuracy past a few hundred columns
        heavy = [i for i in np.argsort(weights)[::-1][:MAX_POOL] if weights[i] > ATOM_FLOOR]
        keep = [vecs[i] for i in heavy]
        idle = [v for v, wt in zip(vecs, weights) if wt <= ATOM_FLOOR]
        if idle:
            ya = np.array(idle) @ basis.conj()
            cost = np.einsum("ni,ij,nj->n", ya.conj(), z_r, ya).real
            keep += [idle[i] for i in np.argsort(cost)[: max(0, MAX_POOL - len(keep))]]
        new = list(candidates[prices < 1 - PRICING_TOL][:MAX_NEW_ATOMS])
        vecs = admissible(keep + new)
    if weights is None:
        return None
    # re-solve with a small margin so the reported weights are feasible
    # outright rather than to solver accuracy; dropping light atoms helps
    # the solver, so several supports are tried and the best feasible wins
    best = None
    for floor in _FINAL_FLOORS:
        final = [v for v, wt in zip(solved_vecs, weights) if wt > floor]
        if not final:
            break
        final_r = np.array(final) @ basis.conj()
        solved = _master(rho_r, final_r, MASTER_MARGIN)
        if solved is None or _min_eig_after(rho_r, final_r, solved[0]) < 0:
            continue
        log.debug("polish final solve: %.10f over %d atoms", solved[2], len(final))
        if best is None or solved[2] > best[0][2]:
            best = (solved, final)
        if solved[2] >= value - gap_tol:
            break
    if best is not None:
        weights, solved_vecs = best[0][0], best[1]
    pairs = [(float(wt), v) for wt, v in zip(weights, solved_vecs) if wt > 1e-12]
    return pairs, {"polish_rounds": rounds_used, "lambda_upper_bound": lam_upper, "polish_certified": certified}


def bsa_decompose(
    rho,
    tol: float = 1e-6,
    max_iters: int = 10000,
    seed=0,
    restarts: int = 128,
    polish: bool = True,
    polish_rounds: int = 100,
) -> BsaResult:
    """Best separable approximation of a bipartite state.

    Raises nothing on non-convergence: the result carries ``converged=False``
    and the reconstruction residual instead.
    """
    rho = as_density(rho)
    dims = bipartite(rho)
    rng = _rng(seed)
    m = rho.matrix
    d = rho.dim

    remainder = m.copy()
    atoms: list[ProductVector] = []
    weights: list[float] = []
    prev = None
    greedy_done = False
    for it in range(max_iters):
        pv, wt = _best_subtraction(remainder, dims, rng, restarts)
        if pv is None or wt < tol:
            greedy_done = True
            break
        x = pv.vector
        step = wt if prev is not None and abs(abs(np.vdot(prev, x)) - 1) < 1e-8 else 0.5 * wt
        remainder = remainder - step * np.outer(x, x.conj())
        atoms.append(pv)
        weights.append(step)
        prev = x
    greedy_lam = float(sum(weights))
    diagnostics = {"greedy_iterations": len(weights), "greedy_lambda": greedy_lam, "greedy_converged": greedy_done}

    pairs = [(wt, pv.vector) for wt, pv in zip(weights, atoms)]
    certified = True
    if polish:
        # the gap target is tighter than tol to leave room for the feasibility rescale below
        polished = _polish(m, dims, [pv.vector for pv in atoms], rng, restarts, polish_rounds, tol / 4)
        if polished is not None:
            # the dual bound stays valid even when the greedy weights are kept
            diagnostics.update(polished[1])
            if sum(w for w, _ in polished[0]) >= greedy_lam - 1e-9:
                pairs = polished[0]

    noise = tol / 10
    sigma = _assemble(pairs, d)
    if pairs and np.linalg.eigvalsh(m - sigma)[0] < -noise:
        t = _feasible_scale(m, sigma, -noise / 2)
        pairs = [(w * t, v) for w, v in pairs]
        sigma = sigma * t
        diagnostics["weight_rescale"] = t
    lam = float(sum(w for w, _ in pairs))

    values, vectors = np.linalg.eigh(m - sigma)
    kept = values > noise
    rem = (vectors[:, kept] * values[kept]) @ vectors[:, kept].conj().T

    if 1 - lam < SEPARABLE_LAMBDA_TOL and lam > 0:
        pairs = [(w / lam, v) for w, v in pairs]
        lam = 1.0
        sigma = _assemble(pairs, d)
        rem_state = None
    elif np.trace(rem).real <= 0:
        rem_state = None
    else:
        rem_state = make_density(rem / np.trace(rem).real, dims)

    product_part = tuple((w, ProductVector(*_split(v, dims))) for w, v in pairs)
    sigma_state = make_density(sigma / lam, dims) if lam > 0 else None
    result = BsaResult(lam, product_part, sigma_state, rem_state, 0.0, True, diagnostics)
    residual = float(np.linalg.norm(m - result.reconstruct()))
    # the dual bound is the certificate; polish aims tighter than tol but only tol is required
    if polish:
        certified = lam >= 1.0 or diagnostics.get("lambda_upper_bound", np.inf) - lam <= tol
    converged = greedy_done and certified and residual <= tol
    return BsaResult(lam, product_part, sigma_state, rem_state, residual, converged, diagnostics)


def _assemble(pairs, d: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=complex)
    for w, v in pairs:
        out += w * np.outer(v, v.conj())
    return out


def _feasible_scale(m: np.ndarray, sigma: np.ndarray, floor: float) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if np.linalg.eigvalsh(m - mid * sigma)[0] >= floor:
            lo = mid
        else:
            hi = mid
    return lo


def _split(v: np.ndarray, dims) -> tuple[np.ndarray, np.ndarray]:
    """Factor a product vector via its rank-one reshaping."""
    d1, d2 = dims
    u, s, vh = np.linalg.svd(v.reshape(d1, d2))
    return u[:, 0] * np.sqrt(s[0]), vh[0] * np.sqrt(s[0])


def range_product_search(rho, restarts: int = 128, seed=0) -> ProductSearch:
    """Maximize ||Pi_R (e x f)||^2 over unit product vectors.

    ``vector`` is set only when the overlap exceeds 1 - 1e-6.
    """
    op = as_operator(rho)
    dims = bipartite(op)
    basis = range_basis(op.matrix, RANGE_CUTOFF)
    return subspace_product_search(basis, dims, restarts, seed)


def subspace_product_search(basis: np.ndarray, dims, restarts: int = 128, seed=0) -> ProductSearch:
    """Best product vector for the subspace spanned by orthonormal columns ``basis``."""
    d = basis.shape[0]
    outside = np.eye(d) - basis @ basis.conj().T
    run = seesaw(outside, dims, _rng(seed), restarts=restarts)
    i = run.best()
    pv = ProductVector(run.e[i], run.f[i])
    y = basis.conj().T @ pv.vector
    overlap = float(np.vdot(y, y).real)
    return ProductSearch(pv if overlap > 1 - RANGE_OVERLAP_TOL else None, overlap)


def is_optimal_entangled(rho, restarts: int = 128, seed=0) -> OptimalityReport:
    """Optimal iff no product vector lies in the range and no product
    projector can be subtracted with weight >= 1e-6."""
    rho = as_density(rho)
    if is_separable(rho, certify=False, seed=seed).tag is Separability.SEPARABLE:
        raise NotEntangled("optimality is defined for entangled states only")
    search = range_product_search(rho, restarts=restarts, seed=seed)
    pv, wt = best_product_subtraction(rho, restarts=restarts, seed=seed)
    optimal = search.vector is None and wt < OPTIMAL_WEIGHT_TOL
    violating = None
    if not optimal:
        violating = pv if wt >= OPTIMAL_WEIGHT_TOL else search.vector
    return OptimalityReport(optimal, violating, search.overlap, wt)


def remainder_fidelity(result: BsaResult, vec: np.ndarray) -> float | None:
    """<v|rho_E|v> for a unit vector v, or None without a remainder."""
    if result.remainder is None:
        return None
    v = np.asarray(vec, dtype=complex)
    return float(np.real(v.conj() @ result.remainder.matrix @ v))


__all__ = [
    "BsaResult",
    "OptimalityReport",
    "ProductSearch",
    "best_product_subtraction",
    "bsa_decompose",
    "is_optimal_entangled",
    "max_subtractable_weight",
    "range_product_search",
    "remainder_fidelity",
    "subspace_product_search",
]
