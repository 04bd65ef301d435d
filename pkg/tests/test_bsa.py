import warnings

import cvxpy as cp
import numpy as np
import pytest

from entwit.bsa import (
    best_product_subtraction,
    bsa_decompose,
    is_optimal_entangled,
    max_subtractable_weight,
    range_product_search,
    remainder_fidelity,
)
from entwit.exceptions import NotEntangled
from entwit.linops import partial_transpose_matrix, random_unitary
from entwit.states import BELL_VECTORS, bell, eta, is_ppt, make_density, mix, random_product_vector, random_state, werner

PSI_PLUS = BELL_VECTORS["psi_plus"]
PSI_MINUS = BELL_VECTORS["psi_minus"]
RHO_THIRD = np.outer(PSI_PLUS, PSI_PLUS.conj()) / 3 + np.eye(4) / 6
KET00 = np.array([1, 0, 0, 0], dtype=complex)


def weight_oracle(rho, x, iters=200):
    """Largest t with rho - t|x><x| >= 0, by bisection on the smallest eigenvalue."""
    p = np.outer(x, x.conj())
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if np.linalg.eigvalsh(rho - mid * p)[0] >= -1e-13:
            lo = mid
        else:
            hi = mid
    return lo


def lambda_oracle(rho, pure_vec, iters=60):
    """Largest lam with (rho - (1 - lam) |v><v|) / lam a PPT state (exact in 2x2)."""
    v = np.outer(pure_vec, pure_vec.conj())
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        lam = (lo + hi) / 2
        m = (rho - (1 - lam) * v) / lam
        ok = np.linalg.eigvalsh(m)[0] >= -1e-12 and np.linalg.eigvalsh(partial_transpose_matrix(m, (2, 2)))[0] >= -1e-12
        hi, lo = (hi, lam) if ok else (lam, lo)
    return lo


def ppt_relaxation(rho):
    """max tr(sigma) over 0 <= sigma <= rho with sigma^Gamma >= 0."""
    s = cp.Variable((4, 4), hermitian=True)
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(s))), [s >> 0, rho - s >> 0, cp.partial_transpose(s, [2, 2], 1) >> 0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob.solve(solver="CLARABEL")
    return prob.value


def _check_invariants(rho, r):
    m = rho.matrix
    assert np.linalg.norm(m - r.reconstruct()) <= 1e-6
    weights = [w for w, _ in r.separable_part]
    assert all(w >= 0 for w in weights)
    assert sum(weights) <= 1 + 1e-9
    if r.separable_state is not None:
        sigma = sum(w * pv.projector().matrix for w, pv in r.separable_part)
        assert np.linalg.norm(sigma - r.lam * r.separable_state.matrix) <= 1e-8
    if r.remainder is not None:
        assert np.linalg.eigvalsh(r.remainder.matrix)[0] >= -1e-9


def test_max_subtractable_weight_examples():
    assert max_subtractable_weight(np.eye(4) / 4, KET00) == pytest.approx(0.25, abs=1e-12)
    assert max_subtractable_weight(bell("psi_plus"), KET00) == 0.0
    rho = werner(0.5).matrix
    assert max_subtractable_weight(rho, KET00) == pytest.approx(weight_oracle(rho, KET00), abs=1e-9)
    with pytest.raises(ValueError):
        max_subtractable_weight(rho, 2 * KET00)


def test_max_subtractable_weight_matches_oracle_100():
    rng = np.random.default_rng(0)
    for k in range(100):
        rank = int(rng.integers(1, 5))
        rho = random_state((2, 2), rank, seed=k).matrix
        if k % 2:
            # vectors inside the range are the informative case
            c = rng.normal(size=rank) + 1j * rng.normal(size=rank)
            vals, vecs = np.linalg.eigh(rho)
            x = vecs[:, -rank:] @ c
        else:
            x = rng.normal(size=4) + 1j * rng.normal(size=4)
        x = x / np.linalg.norm(x)
        assert max_subtractable_weight(rho, x) == pytest.approx(weight_oracle(rho, x), abs=1e-9)


def test_best_product_subtraction_examples():
    _, w = best_product_subtraction(np.eye(4) / 4)
    assert w == pytest.approx(0.25, abs=1e-9)
    _, w = best_product_subtraction(bell("psi_plus"))
    assert w < 1e-9
    _, w = best_product_subtraction(werner(0.5))
    assert w > 0


@pytest.mark.parametrize("p", [0.4, 0.6, 0.8])
def test_werner_decomposition(p):
    rho = werner(p)
    r = bsa_decompose(rho)
    assert r.converged
    assert r.lam == pytest.approx(1.5 * (1 - p), abs=1e-3)
    assert remainder_fidelity(r, PSI_PLUS) >= 0.999
    assert np.linalg.norm(r.separable_state.matrix - RHO_THIRD) <= 1e-2
    _check_invariants(rho, r)


def test_separable_werner_has_no_remainder():
    r = bsa_decompose(werner(0.2))
    assert r.lam == 1.0
    assert r.remainder is None
    _check_invariants(werner(0.2), r)


def test_pure_entangled_has_nothing_separable():
    r = bsa_decompose(bell("psi_plus"))
    assert r.lam == 0.0
    np.testing.assert_allclose(r.remainder.matrix, bell("psi_plus").matrix, atol=1e-9)


def test_eta_against_independent_oracle():
    rho = eta(0.75)
    r = bsa_decompose(rho)
    oracle = lambda_oracle(rho.matrix, PSI_MINUS)
    assert oracle == pytest.approx(0.5, abs=1e-9)
    assert r.lam == pytest.approx(oracle, abs=1e-3)
    assert remainder_fidelity(r, PSI_MINUS) >= 0.999
    _check_invariants(rho, r)


@pytest.mark.parametrize("rank,seed", [(2, 2), (3, 1), (4, 0), (4, 2)])
def test_random_states_against_ppt_relaxation(rank, seed):
    rho = random_state((2, 2), rank, seed=seed)
    r = bsa_decompose(rho, seed=seed)
    assert r.converged
    assert r.lam <= r.diagnostics["lambda_upper_bound"] + 1e-8
    # the relaxation is exact in 2x2, up to its solver accuracy
    assert r.lam == pytest.approx(ppt_relaxation(rho.matrix), abs=1e-4)
    _check_invariants(rho, r)
    if r.remainder is not None:
        assert range_product_search(r.remainder, seed=seed).vector is None


def test_range_product_search_examples():
    found = range_product_search(np.eye(4) / 4)
    assert found.vector is not None and found.overlap == pytest.approx(1.0)
    missing = range_product_search(bell("psi_plus"))
    assert missing.vector is None
    assert missing.overlap == pytest.approx(0.5, abs=1e-6)
    hit = range_product_search(eta(0.75))
    assert hit.vector is not None
    x = hit.vector.vector
    assert max(abs(x[0]), abs(x[3])) == pytest.approx(1.0, abs=1e-6)


def test_is_optimal_entangled_examples():
    assert is_optimal_entangled(bell("psi_plus")).is_optimal
    rep = is_optimal_entangled(werner(0.8))
    assert not rep.is_optimal
    assert rep.violating_product is not None
    rep = is_optimal_entangled(eta(0.75))
    assert not rep.is_optimal
    y = rep.violating_product.vector
    basis = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex)
    assert np.linalg.norm(basis @ y) ** 2 > 1 - 1e-6
    with pytest.raises(NotEntangled):
        is_optimal_entangled(werner(0.2))


@pytest.mark.slow
def test_uniqueness_across_seeds():
    rho = werner(0.6)
    runs = [bsa_decompose(rho, seed=s) for s in range(5)]
    for r in runs[1:]:
        assert r.lam == pytest.approx(runs[0].lam, abs=1e-4)
        assert np.linalg.norm(r.remainder.matrix - runs[0].remainder.matrix) <= 1e-3


@pytest.mark.slow
def test_local_unitary_covariance():
    rng = np.random.default_rng(21)
    rho = random_state((2, 2), seed=2)
    base = bsa_decompose(rho, seed=1)
    for _ in range(3):
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        moved = make_density(u @ rho.matrix @ u.conj().T, (2, 2))
        r = bsa_decompose(moved, seed=1)
        assert r.lam == pytest.approx(base.lam, abs=1e-4)
        expected = u @ base.remainder.matrix @ u.conj().T
        assert np.linalg.norm(r.remainder.matrix - expected) <= 1e-3


def test_qutrit_separable_mixture():
    parts = [(0.3, random_product_vector((3, 3), 1).projector()), (0.7, random_product_vector((3, 3), 2).projector())]
    rho = mix(parts)
    r = bsa_decompose(rho)
    assert r.converged and r.lam == 1.0
    _check_invariants(rho, r)
    assert is_ppt(rho)
