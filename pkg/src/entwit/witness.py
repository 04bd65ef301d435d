"""Block positivity, the four-way operator hierarchy, and witness construction.

The hierarchy places every Hermitian operator on a bipartite space into one
of four disjoint classes:

* separable states, which detect operators that are not block-positive;
* entangled states, which detect entanglement witnesses;
* entanglement witnesses: block-positive, not positive semidefinite;
* everything else (not block-positive).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from entwit.exceptions import NotWitnessable, NoNptWitness, PreconditionError, ValidationError
from entwit.linops import (
    HermitianOperator,
    as_operator,
    bipartite,
    hs_inner,
    partial_transpose_matrix,
)
from entwit.seesaw import seesaw
from entwit.states import (
    POSITIVITY_TOL,
    DensityMatrix,
    ProductVector,
    Separability,
    as_density,
    is_separable,
    make_density,
)

BLOCK_POSITIVE_TOL = 1e-6
DETECTION_TOL = 1e-9
DEFAULT_RESTARTS = 64


class HierarchyTag(str, enum.Enum):
    SEPARABLE_STATE = "separable_state"
    ENTANGLED_STATE = "entangled_state"
    ENTANGLEMENT_WITNESS = "entanglement_witness"
    NON_BLOCK_POSITIVE = "non_block_positive"
    # PPT state in dims where neither separability nor entanglement could be shown
    UNDETERMINED_STATE = "undetermined_state"


@dataclass(frozen=True)
class HierarchyClass:
    tag: HierarchyTag
    evidence: dict = field(default_factory=dict)
    note: str | None = None


@dataclass(frozen=True)
class ProductMinimum:
    value: float
    argmin: ProductVector
    restarts_agreeing: int
    restarts: int


class Decomposability(str, enum.Enum):
    DECOMPOSABLE = "decomposable"
    NON_DECOMPOSABLE = "non_decomposable"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DecomposabilityVerdict:
    """For DECOMPOSABLE, ``w ~= a*P + (1-a)*Q^Gamma``; for NON_DECOMPOSABLE,
    ``ppt_state`` is a PPT state the witness detects."""

    tag: Decomposability
    a: float | None = None
    P: np.ndarray | None = None
    Q: np.ndarray | None = None
    residual: float | None = None
    ppt_state: DensityMatrix | None = None


@dataclass(frozen=True)
class WitnessSample:
    witnesses: tuple[HermitianOperator, ...]
    source_state: DensityMatrix
    seed: object = None

    def __len__(self):
        return len(self.witnesses)

    def __iter__(self):
        return iter(self.witnesses)


def min_product_expectation(
    h,
    restarts: int = DEFAULT_RESTARTS,
    seed=0,
    tol: float = 1e-6,
    max_iters: int = 1000,
) -> ProductMinimum:
    """Heuristic global minimum of <e,f|h|e,f> over unit product vectors.

    ``restarts_agreeing`` counts the starts that ended within ``tol`` of the
    best value, a rough confidence signal for this NP-hard problem.
    """
    h = as_operator(h)
    dims = bipartite(h)
    rng = np.random.default_rng(seed)
    run = seesaw(h.matrix, dims, rng, restarts=restarts, max_iters=max_iters)
    i = run.best()
    argmin = ProductVector(run.e[i], run.f[i])
    value = argmin.expectation(h)
    agree = int(np.sum(np.abs(run.values - run.values[i]) <= tol * max(1.0, abs(value))))
    return ProductMinimum(value, argmin, agree, restarts)


def is_block_positive(h, restarts: int = DEFAULT_RESTARTS, seed=0) -> bool:
    return min_product_expectation(h, restarts=restarts, seed=seed).value >= -BLOCK_POSITIVE_TOL


def witness_for_state(rho) -> HermitianOperator:
    """(|v><v|)^Gamma for the most negative eigenvector v of rho^Gamma.

    The result is block-positive by construction and pairs with ``rho`` to
    exactly that negative eigenvalue.
    """
    rho = as_density(rho)
    dims = bipartite(rho)
    values, vectors = np.linalg.eigh(partial_transpose_matrix(rho.matrix, dims))
    if values[0] >= -DETECTION_TOL:
        raise NoNptWitness("state has positive partial transpose; no decomposable witness detects it")
    v = vectors[:, 0]
    return HermitianOperator(partial_transpose_matrix(np.outer(v, v.conj()), dims), dims)


def higher_level_witness_for(o, restarts: int = DEFAULT_RESTARTS, seed=0) -> DensityMatrix:
    """Product state |e,f><e,f| with negative expectation on ``o``."""
    o = as_operator(o)
    pm = min_product_expectation(o, restarts=restarts, seed=seed)
    if pm.value >= -BLOCK_POSITIVE_TOL:
        raise NotWitnessable(f"operator looks block-positive (min product expectation {pm.value:.3e})")
    return pm.argmin.projector()


def classify(h, restarts: int = DEFAULT_RESTARTS, seed=0, certify: bool = True) -> HierarchyClass:
    """Place ``h`` in the witness hierarchy.

    Tags are invariant under positive rescaling: decisions are taken on
    ``h / max|eigenvalue|`` and PSD inputs are normalized to unit trace.
    """
    h = as_operator(h)
    dims = bipartite(h)
    values, vectors = np.linalg.eigh(h.matrix)
    scale = float(np.abs(values).max())
    if scale == 0.0:
        raise ValidationError("cannot classify the zero operator")

    if values[0] >= -POSITIVITY_TOL * scale:
        tr = h.trace()
        note = None
        if abs(tr - 1.0) > 1e-9:
            note = f"normalized from trace {tr:.12g}"
        rho = make_density(_clip_psd(h.matrix) / tr, dims)
        verdict = is_separable(rho, certify=certify, seed=seed, restarts=restarts)
        if verdict.tag is Separability.SEPARABLE:
            return HierarchyClass(HierarchyTag.SEPARABLE_STATE, {"decomposition": verdict.certificate, "state": rho}, note)
        if verdict.tag is Separability.ENTANGLED:
            return HierarchyClass(HierarchyTag.ENTANGLED_STATE, {"witness": verdict.certificate, "state": rho}, note)
        return HierarchyClass(HierarchyTag.UNDETERMINED_STATE, {"state": rho}, note)

    pm = min_product_expectation(h.matrix / scale, restarts=restarts, seed=seed)
    pm = ProductMinimum(pm.argmin.expectation(h), pm.argmin, pm.restarts_agreeing, pm.restarts)
    if pm.value >= -BLOCK_POSITIVE_TOL * scale:
        v = vectors[:, 0]
        detected = make_density(np.outer(v, v.conj()), dims)
        evidence = {
            "detected_state": detected,
            "pairing": hs_inner(h, detected),
            "product_minimum": pm,
        }
        return HierarchyClass(HierarchyTag.ENTANGLEMENT_WITNESS, evidence)
    evidence = {
        "product_vector": pm.argmin,
        "expectation": pm.value,
        "separable_detector": pm.argmin.projector(),
        "product_minimum": pm,
    }
    return HierarchyClass(HierarchyTag.NON_BLOCK_POSITIVE, evidence)


def _clip_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.clip(w, 0, None)) @ v.conj().T


def _psd_part(m: np.ndarray) -> np.ndarray:
    """Projection of a (stack of) Hermitian matrices onto the PSD cone."""
    w, v = np.linalg.eigh(m)
    return (v * np.clip(w, 0, None)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def decompose_witness(
    w,
    max_iters: int = 5000,
    tol: float = 1e-6,
    restarts: int = DEFAULT_RESTARTS,
    seed=0,
) -> DecomposabilityVerdict:
    """Try to write ``w = a P + (1-a) Q^Gamma`` with P, Q >= 0.

    Dykstra's alternating projections between the affine set
    ``{(P, Q): P + Q^Gamma = w}`` and the product of PSD cones, with an
    exact semidefinite feasibility solve when Dykstra stalls. On failure a
    PPT state detected by ``w`` is searched for instead.
    """
    w = as_operator(w)
    dims = bipartite(w)
    if not is_block_positive(w, restarts=restarts, seed=seed):
        raise PreconditionError("operator is not block-positive")
    m = w.matrix
    wg = partial_transpose_matrix(m, dims)
    zero = np.zeros_like(m)

    if np.linalg.eigvalsh(m)[0] >= -POSITIVITY_TOL:
        p, q = _clip_psd(m), zero
    elif np.linalg.eigvalsh(wg)[0] >= -POSITIVITY_TOL:
        p, q = zero, _clip_psd(wg)
    else:
        p, q = _dykstra_split(m, dims, max_iters, tol)
        if np.linalg.norm(p + partial_transpose_matrix(q, dims) - m) > tol:
            # Dykstra crawls when the split sits on the cone boundary
            p, q = _sdp_split(m, dims) or (p, q)

    residual = float(np.linalg.norm(p + partial_transpose_matrix(q, dims) - m))
    if residual <= tol:
        tp, tq = np.trace(p).real, np.trace(q).real
        total = tp + tq
        if total <= 0:
            return DecomposabilityVerdict(Decomposability.DECOMPOSABLE, 1.0, zero, zero, residual)
        a = tp / total
        c = w.trace() / total
        P = p * c / a if a > 0 else zero
        Q = q * c / (1 - a) if a < 1 else zero
        return DecomposabilityVerdict(Decomposability.DECOMPOSABLE, float(a), P, Q, residual)

    state = nondecomposability_certificate(w, seed=seed)
    if state is not None:
        return DecomposabilityVerdict(Decomposability.NON_DECOMPOSABLE, residual=residual, ppt_state=state)
    return DecomposabilityVerdict(Decomposability.UNDETERMINED, residual=residual)


def _dykstra_split(m: np.ndarray, dims, max_iters: int, tol: float):
    def pt(x):
        return partial_transpose_matrix(x, dims)

    # iterate on the stacked pair (P, Q); the affine step has a closed form
    # because the map (P, Q) -> P + Q^Gamma satisfies M M^* = 2 I
    x = np.stack([m, np.zeros_like(m)])
    corr_k = np.zeros_like(x)
    for _ in range(max_iters):
        r = x[0] + pt(x[1]) - m
        y = np.stack([x[0] - r / 2, x[1] - pt(r) / 2])
        z = y + corr_k
        x = _psd_part(z)
        corr_k = z - x
        if np.linalg.norm(x[0] + pt(x[1]) - m) <= tol * 1e-3:
            break
    return x[0], x[1]


def _sdp_split(m: np.ndarray, dims):
    """Exact feasibility solve of P + Q^Gamma = m with P, Q >= 0, or None."""
    d = m.shape[0]
    p = cp.Variable((d, d), hermitian=True)
    q = cp.Variable((d, d), hermitian=True)
    prob = cp.Problem(cp.Minimize(0), [p >> 0, q >> 0, p + cp.partial_transpose(q, list(dims), 1) == m])
    try:
        prob.solve(solver="CLARABEL")
    except cp.SolverError:
        return None
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return None
    return _clip_psd(p.value), _clip_psd(q.value)


def nondecomposability_certificate(
    w,
    starts: int = 64,
    seed=0,
    iters: int = 300,
    inner: int = 30,
    step: float = 0.05,
) -> DensityMatrix | None:
    """Search for a PPT state ``rho`` with ``tr(w rho) < -1e-9``.

    Projected gradient descent of the linear objective over the PPT states,
    with the projection approximated by Dykstra over the PSD cone, the
    partial-transpose PSD cone and the trace-one plane. Candidates are mixed
    with the maximally mixed state until both positivity checks hold
    exactly, so a returned state is a sound certificate. ``None`` does not
    prove decomposability.
    """
    w = as_operator(w)
    dims = bipartite(w)
    d = w.dim
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(starts, d, d)) + 1j * rng.normal(size=(starts, d, d))
    rho = g @ np.swapaxes(g.conj(), -1, -2)
    rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
    wn = w.matrix / np.linalg.norm(w.matrix)
    eye = np.eye(d)

    def pt(x):
        return partial_transpose_matrix(x, dims)

    def project(x):
        c1 = np.zeros_like(x)
        c2 = np.zeros_like(x)
        for _ in range(inner):
            y = _psd_part(x + c1)
            c1 = x + c1 - y
            z = pt(_psd_part(pt(y + c2)))
            c2 = y + c2 - z
            x = z + ((1 - np.trace(z, axis1=1, axis2=2).real) / d)[:, None, None] * eye
        return x

    for _ in range(iters):
        rho = project(rho - step * wn)

    best = None
    for r in rho:
        r = (r + r.conj().T) / 2
        r = r / np.trace(r).real
        lo = min(np.linalg.eigvalsh(r)[0], np.linalg.eigvalsh(pt(r))[0])
        if lo < 0:
            t = -lo / (1.0 / d - lo)
            r = (1 - t) * r + t * eye / d
        if np.linalg.eigvalsh(r)[0] < 0 or np.linalg.eigvalsh(pt(r))[0] < 0:
            continue
        val = hs_inner(w.matrix, r)
        if val < -DETECTION_TOL and (best is None or val < best[0]):
            best = (val, r)
    if best is None:
        return None
    return make_density(best[1], dims)


def sample_detecting_witnesses(rho, n: int = 200, seed=0, max_attempts: int | None = None) -> WitnessSample:
    """Draw ``n`` unit-Frobenius witnesses W with tr(W rho) < -1e-9.

    Each is (|v><v|)^Gamma, with v a random combination of the negative
    eigenvectors of rho^Gamma plus a random perturbation of random size.
    Partial transposes of projectors are block-positive by construction.
    The first element is the unperturbed most-negative eigenvector witness.
    PPT states (including all separable ones) give an empty sample.
    """
    rho = as_density(rho)
    dims = bipartite(rho)
    rg = partial_transpose_matrix(rho.matrix, dims)
    values, vectors = np.linalg.eigh(rg)
    neg = values < -DETECTION_TOL
    if not neg.any():
        return WitnessSample((), rho, seed)
    vneg = vectors[:, neg]
    rng = np.random.default_rng(seed)
    d = rho.dim
    out = []
    candidates = [vectors[:, 0]]
    attempts = 0
    max_attempts = 1000 * max(n, 1) if max_attempts is None else max_attempts
    while len(out) < n and attempts < max_attempts:
        if candidates:
            v = candidates.pop()
        else:
            c = rng.normal(size=vneg.shape[1]) + 1j * rng.normal(size=vneg.shape[1])
            v = vneg @ c
            v = v / np.linalg.norm(v)
            size = 10 ** rng.uniform(-3, 0.5)
            v = v + size * (rng.normal(size=d) + 1j * rng.normal(size=d)) / np.sqrt(2 * d)
            v = v / np.linalg.norm(v)
        attempts += 1
        if np.real(v.conj() @ rg @ v) < -DETECTION_TOL:
            out.append(HermitianOperator(partial_transpose_matrix(np.outer(v, v.conj()), dims), dims))
    return WitnessSample(tuple(out), rho, seed)
