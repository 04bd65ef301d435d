import itertools

import numpy as np
import pytest

from entwit.exceptions import EmptySample, InconsistentDelta, NoFamily, NotEntangled
from entwit.linops import HermitianOperator, hs_inner, partial_transpose_matrix
from entwit.order import (
    CommonWitnessStatus,
    FinerTag,
    WitnessSample,
    common_detected_witness,
    delta_hat,
    family_of,
    is_finer,
    ratio_decompose,
    mixture_line_scan,
    same_family,
    sample_detecting_witnesses,
)
from entwit.states import BELL_VECTORS, bell, eta, make_density, werner

PHI = BELL_VECTORS["phi_singlet"]
FLIP = HermitianOperator(partial_transpose_matrix(np.outer(PHI, PHI.conj()), (2, 2)), (2, 2))
RHO_THIRD = np.outer(BELL_VECTORS["psi_plus"], BELL_VECTORS["psi_plus"].conj()) / 3 + np.eye(4) / 6
PSI_P, PSI_M = bell("psi_plus"), bell("psi_minus")


def test_delta_hat_examples():
    sample = sample_detecting_witnesses(PSI_P, n=20)
    assert delta_hat(PSI_P, PSI_P, sample) == pytest.approx(1.0, abs=1e-12)
    sample = sample_detecting_witnesses(werner(0.5), n=200)
    assert delta_hat(werner(0.5), PSI_P, sample) >= 1 - 1e-9
    single = WitnessSample((FLIP,), werner(0.5))
    assert delta_hat(werner(0.5), PSI_P, single) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(EmptySample):
        delta_hat(werner(0.5), PSI_P, WitnessSample((), werner(0.5)))


def test_is_finer_pure_over_werner():
    v = is_finer(PSI_P, werner(0.5))
    assert v.tag is FinerTag.FINER
    assert v.epsilon == pytest.approx(0.75, abs=1e-6)
    assert v.P_separable
    np.testing.assert_allclose(v.P.matrix, RHO_THIRD, atol=1e-6)
    recon = (1 - v.epsilon) * PSI_P.matrix + v.epsilon * v.P.matrix
    np.testing.assert_allclose(recon, werner(0.5).matrix, atol=1e-8)
    assert v.delta_hat >= 1 - 1e-9


def test_werner_direction_is_decided_by_certificate():
    # the sharper Werner state is the finer one
    v = is_finer(werner(0.9), werner(0.5))
    assert v.finer
    recon = (1 - v.epsilon) * werner(0.9).matrix + v.epsilon * v.P.matrix
    np.testing.assert_allclose(recon, werner(0.5).matrix, atol=1e-8)
    back = is_finer(werner(0.5), werner(0.9))
    assert back.tag is FinerTag.NOT_FINER
    w = back.counterexample
    assert hs_inner(w, werner(0.9)) < -1e-9
    assert hs_inner(w, werner(0.5)) >= -1e-9


def test_orthogonal_bell_states_not_finer():
    v = is_finer(PSI_M, PSI_P)
    assert v.tag is FinerTag.NOT_FINER
    assert hs_inner(v.counterexample, PSI_P) < -1e-9
    assert hs_inner(v.counterexample, PSI_M) >= -1e-9
    assert hs_inner(FLIP, PSI_P) == pytest.approx(-0.5)
    assert hs_inner(FLIP, PSI_M) == pytest.approx(0.5)


def test_is_finer_rejects_separable():
    with pytest.raises(NotEntangled):
        is_finer(PSI_P, werner(0.2))


def test_reflexive():
    for rho in (PSI_P, werner(0.6), eta(0.75)):
        v = is_finer(rho, rho)
        assert v.finer and v.epsilon == 0.0


def test_transitive_on_werner_chain():
    a, b, c = PSI_P, werner(0.7), werner(0.4)
    assert is_finer(a, b).finer
    assert is_finer(b, c).finer
    assert is_finer(a, c).finer


def _shifted(w, rho):
    """w + c I with c >= 0 chosen so that the pairing with rho is exactly zero."""
    c = -hs_inner(w, rho)
    return w.matrix + c * np.eye(4)


@pytest.mark.parametrize("fine,coarse", [(PSI_P, werner(0.5)), (werner(0.9), werner(0.5)), (werner(0.7), werner(0.4))])
def test_ratio_clauses_on_sampled_witnesses(fine, coarse):
    assert is_finer(fine, coarse).finer
    sample = sample_detecting_witnesses(coarse, n=200, seed=3)
    assert len(sample) == 200
    for w in sample:
        a, b = hs_inner(w, coarse), hs_inner(w, fine)
        assert a < 0
        assert b <= a + 1e-9
        z = _shifted(w, coarse)
        assert hs_inner(z, coarse.matrix) == pytest.approx(0.0, abs=1e-12)
        assert hs_inner(z, fine.matrix) <= 1e-9
    assert delta_hat(coarse, fine, sample) >= 1 - 1e-9


def test_ratio_decompose_examples():
    assert ratio_decompose(PSI_P, PSI_P, 1.0) == (0.0, None)
    eps, P = ratio_decompose(werner(0.5), PSI_P, 4.0)
    assert eps == pytest.approx(0.75)
    np.testing.assert_allclose(P.matrix, RHO_THIRD, atol=1e-12)


def test_ratio_decompose_errors():
    with pytest.raises(InconsistentDelta):
        ratio_decompose(PSI_P, PSI_P, 2.0)
    with pytest.raises(InconsistentDelta):
        ratio_decompose(werner(0.5), PSI_P, 0.5)
    with pytest.raises(InconsistentDelta):
        ratio_decompose(werner(0.5), PSI_P, 1.0)
    # delta too small leaves a non-positive P
    with pytest.raises(InconsistentDelta):
        ratio_decompose(werner(0.5), PSI_P, 1.5)


@pytest.mark.slow
def test_families():
    assert same_family(werner(0.5), werner(0.9))
    assert not same_family(eta(0.75), werner(0.9))
    with pytest.raises(NoFamily):
        family_of(eta(0.5))


@pytest.mark.slow
def test_same_family_is_an_equivalence():
    fixtures = [werner(0.5), werner(0.9), PSI_P, eta(0.75), PSI_M]
    ids = [family_of(r) for r in fixtures]
    same = [[a.distance(b) <= 1e-3 for b in ids] for a in ids]
    n = len(ids)
    for i in range(n):
        assert same[i][i]
        for j in range(n):
            assert same[i][j] == same[j][i]
            for k in range(n):
                if same[i][j] and same[j][k]:
                    assert same[i][k]
    assert same[0][1] and same[1][2] and same[3][4] and not same[0][3]


def test_mixture_line_scan_examples():
    scan = mixture_line_scan(PSI_P, PSI_M, n=11)
    assert len(scan) == 11
    lams = [lam for lam, _ in scan]
    assert lams[0] == 0.0 and lams[-1] == 1.0
    tags = {round(lam, 6): v for lam, v in scan}
    assert tags[0.5].separable
    assert tags[0.0].entangled and tags[1.0].entangled
    assert all(v.entangled for _, v in mixture_line_scan(werner(0.5), PSI_P, n=11))
    assert len({v.tag for _, v in mixture_line_scan(werner(0.6), werner(0.6), n=5)}) == 1


def test_common_detected_witness_examples():
    none = common_detected_witness(PSI_P, PSI_M)
    assert none.status is CommonWitnessStatus.SEPARABLE_MIXTURE
    assert none.witness is None
    assert none.separable_lambda == pytest.approx(0.5)
    found = common_detected_witness(werner(0.5), PSI_P)
    assert found.status is CommonWitnessStatus.FOUND
    a, b = found.pairings
    assert a <= -1e-3 and b <= -1e-3
    assert a == pytest.approx(hs_inner(found.witness, werner(0.5)))
    assert hs_inner(found.witness, werner(0.5)) == pytest.approx(-1 / 8, abs=1e-9)
    assert hs_inner(found.witness, PSI_P) == pytest.approx(-1 / 2, abs=1e-9)
    same = common_detected_witness(PSI_P, PSI_P)
    assert same.status is CommonWitnessStatus.FOUND
    assert hs_inner(same.witness, PSI_P) < 0


def test_distinct_fixtures_have_distinguishing_witness():
    fixtures = [PSI_P, PSI_M, werner(0.5), werner(0.9), eta(0.75), eta(0.9)]
    samples = [sample_detecting_witnesses(r, n=200, seed=1) for r in fixtures]
    for (r1, s1), (r2, s2) in itertools.combinations(zip(fixtures, samples), 2):
        assert np.linalg.norm(r1.matrix - r2.matrix) > 1e-6
        pool = list(s1) + list(s2)
        assert any((hs_inner(w, r1) < -1e-9) != (hs_inner(w, r2) < -1e-9) for w in pool)


def test_finer_certificate_is_a_state():
    v = is_finer(werner(0.8), werner(0.6))
    assert v.finer
    make_density(v.P.matrix, (2, 2))
