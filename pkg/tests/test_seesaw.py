import numpy as np
import pytest

from entwit.linops import random_hermitian, range_basis
from entwit.seesaw import constrained_min, product_expectation, random_unit_vectors, seesaw, snap_product


def test_unit_vectors():
    v = random_unit_vectors(np.random.default_rng(0), 50, 3)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)


def test_descent_is_monotone_per_start():
    rng = np.random.default_rng(11)
    for dims in [(2, 2), (2, 3), (3, 3)]:
        h = random_hermitian(int(np.prod(dims)), rng, dims).matrix
        run = seesaw(h, dims, rng, restarts=16, record=True)
        hist = np.array(run.history)
        for col in hist.T:
            col = col[~np.isnan(col)]
            assert np.all(np.diff(col) <= 1e-12)


def test_values_match_vectors():
    rng = np.random.default_rng(2)
    h = random_hermitian(6, rng, (2, 3)).matrix
    run = seesaw(h, (2, 3), rng, restarts=8)
    for v, e, f in zip(run.values, run.e, run.f):
        assert product_expectation(h, e, f) == pytest.approx(v, abs=1e-12)


def test_minimum_bounded_by_spectrum():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h = random_hermitian(9, rng, (3, 3)).matrix
        run = seesaw(h, (3, 3), rng, restarts=8)
        assert run.values.min() >= np.linalg.eigvalsh(h)[0] - 1e-12


def _random_range(rng, dims, rank):
    d = int(np.prod(dims))
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    basis = range_basis(g @ g.conj().T)
    return basis, range_basis(np.eye(d) - basis @ basis.conj().T, 0.5)


@pytest.mark.parametrize("dims,rank", [((2, 2), 3), ((3, 3), 6), ((2, 3), 4)])
def test_constrained_min_stays_in_subspace(dims, rank):
    rng = np.random.default_rng(5)
    d = int(np.prod(dims))
    basis, kernel = _random_range(rng, dims, rank)
    h = random_hermitian(d, rng, dims).matrix
    values, vectors = constrained_min(h, kernel, dims, rng, samples=256)
    assert len(values) > 0
    for v, x in zip(values, vectors):
        assert np.linalg.norm(kernel.conj().T @ x) < 1e-9
        s = np.linalg.svd(x.reshape(dims), compute_uv=False)
        assert s[1] < 1e-9
        assert (x.conj() @ h @ x).real == pytest.approx(v, abs=1e-9)


def test_isolated_products_of_a_plane():
    # a generic 2-dim subspace of C^2 x C^2 holds exactly two product directions
    rng = np.random.default_rng(8)
    _, kernel = _random_range(rng, (2, 2), 2)
    _, vectors = constrained_min(np.zeros((4, 4)), kernel, (2, 2), rng, samples=256)
    overlaps = np.abs(vectors.conj() @ vectors.T)
    distinct = {tuple(np.round(row > 1 - 1e-9)) for row in overlaps}
    assert len(distinct) == 2
    assert np.abs(kernel.conj().T @ vectors.T).max() < 1e-9


def test_snap_product_recovers_nearby_root():
    rng = np.random.default_rng(9)
    e, f = random_unit_vectors(rng, 1, 2)[0], random_unit_vectors(rng, 1, 3)[0]
    x = np.kron(e, f)
    q, _ = np.linalg.qr(np.column_stack([x, rng.normal(size=(6, 2))]))
    kernel = range_basis(np.eye(6) - q @ q.conj().T, 0.5)
    noisy_e = e + 1e-4 * rng.normal(size=2)
    y = snap_product(noisy_e, f, kernel, (2, 3))
    assert y is not None
    assert abs(np.vdot(x, y)) == pytest.approx(1.0, abs=1e-8)
