"""The finer preorder on entangled states, witness-ratio diagnostics, and
families of states sharing an optimal entangled core.

``rho2`` is finer than ``rho1`` when every witness detecting ``rho1`` also
detects ``rho2``. A sufficient certificate is a split

    rho1 = (1 - eps) rho2 + eps P

with ``P`` separable: then tr(W rho1) < 0 forces tr(W rho2) < 0 for every
block-positive W. A witness detecting ``rho1`` but not ``rho2`` refutes it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from entwit.bsa import bsa_decompose
from entwit.exceptions import EmptySample, InconsistentDelta, NoFamily, NoNptWitness, NotEntangled, ValidationError
from entwit.linops import HermitianOperator, hs_inner
from entwit.states import (
    SEPARABLE_LAMBDA_TOL,
    DensityMatrix,
    Separability,
    SeparabilityVerdict,
    as_density,
    is_separable,
    make_density,
)
from entwit.witness import DETECTION_TOL, WitnessSample, sample_detecting_witnesses, witness_for_state

MU_TOL = 1e-10
FAMILY_TOL = 1e-3
DEFAULT_SAMPLES = 200


class FinerTag(str, enum.Enum):
    FINER = "finer"
    NOT_FINER = "not_finer"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class FinerVerdict:
    """Outcome of :func:`is_finer`.

    FINER carries ``epsilon`` and ``P`` with rho1 = (1 - epsilon) rho2 +
    epsilon P (``P`` is None when epsilon is 0). NOT_FINER carries a
    ``counterexample`` witness detecting rho1 but not rho2.
    """

    tag: FinerTag
    delta_hat: float | None
    epsilon: float | None = None
    P: DensityMatrix | None = None
    P_separable: bool | None = None
    counterexample: HermitianOperator | None = None

    @property
    def finer(self) -> bool:
        return self.tag is FinerTag.FINER


@dataclass(frozen=True)
class FamilyId:
    """A family, named by its optimal entangled representative."""

    representative: DensityMatrix

    def distance(self, other: "FamilyId") -> float:
        return float(np.linalg.norm(self.representative.matrix - other.representative.matrix))


class CommonWitnessStatus(str, enum.Enum):
    FOUND = "found"
    SEPARABLE_MIXTURE = "separable_mixture"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class CommonWitness:
    """Result of :func:`common_detected_witness`.

    ``witness`` is set only for FOUND, with its two pairings. For
    SEPARABLE_MIXTURE, ``separable_lambda`` is the grid point whose mixture
    is separable, which rules out any common witness.
    """

    status: CommonWitnessStatus
    witness: HermitianOperator | None = None
    pairings: tuple[float, float] | None = None
    separable_lambda: float | None = None


def _require_entangled(*states) -> None:
    for rho in states:
        if is_separable(rho, certify=False).tag is Separability.SEPARABLE:
            raise NotEntangled("input state is separable")


def delta_hat(rho1, rho2, sample: WitnessSample) -> float:
    """Smallest |tr(W rho2) / tr(W rho1)| over the sampled witnesses of rho1."""
    if len(sample) == 0:
        raise EmptySample("witness sample is empty")
    rho1, rho2 = as_density(rho1), as_density(rho2)
    ratios = [abs(hs_inner(w, rho2) / hs_inner(w, rho1)) for w in sample]
    return float(min(ratios))


def ratio_decompose(rho1, rho2, delta: float) -> tuple[float, DensityMatrix | None]:
    """Split rho1 = (1 - eps) rho2 + eps P from a ratio bound ``delta``.

    eps = 1 - 1/delta and P = (delta rho1 - rho2) / (delta - 1). With
    delta = 1 the states must coincide and ``(0, None)`` is returned.
    Raises InconsistentDelta when delta < 1, when delta != 1 for equal
    states, or when P is not a state (delta was underestimated).
    """
    rho1, rho2 = as_density(rho1), as_density(rho2)
    delta = float(delta)
    if delta < 1:
        raise InconsistentDelta(f"delta must be >= 1, got {delta}")
    same = np.linalg.norm(rho1.matrix - rho2.matrix) <= 1e-8
    if delta == 1:
        if not same:
            raise InconsistentDelta("delta = 1 requires rho1 = rho2")
        return 0.0, None
    if same:
        raise InconsistentDelta(f"equal states admit only delta = 1, got {delta}")
    p = (delta * rho1.matrix - rho2.matrix) / (delta - 1)
    try:
        P = make_density(p, rho1.dims)
    except ValidationError as exc:
        raise InconsistentDelta(f"P is not a state ({exc}); delta was underestimated") from exc
    return 1 - 1 / delta, P


def _max_mu(m1: np.ndarray, m2: np.ndarray) -> float:
    """Largest mu in [0, 1] with m1 - mu m2 >= 0, by bisection."""
    lo, hi = 0.0, 1.0
    if np.linalg.eigvalsh(m1 - m2)[0] >= -1e-12:
        return 1.0
    while hi - lo > MU_TOL:
        mid = (lo + hi) / 2
        if np.linalg.eigvalsh(m1 - mid * m2)[0] >= -1e-12:
            lo = mid
        else:
            hi = mid
    return lo


def _residual_state(m1, m2, mu, dims) -> DensityMatrix:
    p = (m1 - mu * m2) / (1 - mu)
    values, vectors = np.linalg.eigh((p + p.conj().T) / 2)
    # clear bisection round-off below zero before validation
    p = (vectors * np.clip(values, 0, None)) @ vectors.conj().T
    return make_density(p / np.trace(p).real, dims)


def _separable_at(m1, m2, mu, dims, seed) -> bool:
    return is_separable(_residual_state(m1, m2, mu, dims), certify=False, seed=seed).separable


def _finer_certificate(m1, m2, dims, seed, grid: int = 20):
    """Smallest mu in (0, mu_max] whose residual P is separable, else None.

    Separable residuals form an interval in mu (the separable cone is
    convex), so a coarse scan locates a separable point and bisection
    pushes it down to the interval's left end. Smaller mu means larger
    eps, which is the strongest certificate of this form.
    """
    mu_max = _max_mu(m1, m2)
    if mu_max >= 1 - MU_TOL:
        return 1.0
    lo = 0.0
    hi = None
    for mu in np.linspace(0, mu_max, grid + 1)[1:][::-1]:
        if _separable_at(m1, m2, mu, dims, seed):
            hi = float(mu)
        elif hi is not None:
            lo = float(mu)
            break
    if hi is None:
        return None
    while hi - lo > MU_TOL:
        mid = (lo + hi) / 2
        if _separable_at(m1, m2, mid, dims, seed):
            hi = mid
        else:
            lo = mid
    return hi


def is_finer(rho2, rho1, samples: int = DEFAULT_SAMPLES, seed=0) -> FinerVerdict:
    """Is ``rho2`` finer (more entangled) than ``rho1``?

    Sound but incomplete: FINER needs a separable-residual split, NOT_FINER
    needs a sampled witness of rho1 that misses rho2. Raises NotEntangled
    for separable input.
    """
    rho1, rho2 = as_density(rho1), as_density(rho2)
    _require_entangled(rho1, rho2)
    sample = sample_detecting_witnesses(rho1, n=samples, seed=seed)
    dh = delta_hat(rho1, rho2, sample) if len(sample) else None

    mu = _finer_certificate(rho1.matrix, rho2.matrix, rho1.dims, seed)
    if mu is not None:
        if mu >= 1 - MU_TOL:
            return FinerVerdict(FinerTag.FINER, dh, epsilon=0.0, P=None, P_separable=True)
        P = _residual_state(rho1.matrix, rho2.matrix, mu, rho1.dims)
        return FinerVerdict(FinerTag.FINER, dh, epsilon=1 - mu, P=P, P_separable=True)

    pairings = [hs_inner(w, rho2) for w in sample]
    if pairings and max(pairings) >= -DETECTION_TOL:
        w = sample.witnesses[int(np.argmax(pairings))]
        return FinerVerdict(FinerTag.NOT_FINER, dh, counterexample=w)
    return FinerVerdict(FinerTag.UNDETERMINED, dh)


def family_of(rho, seed=0, restarts: int = 128) -> FamilyId:
    """The family of an entangled state, named by its BSA remainder."""
    rho = as_density(rho)
    result = bsa_decompose(rho, seed=seed, restarts=restarts)
    if result.remainder is None or result.lam >= 1 - SEPARABLE_LAMBDA_TOL:
        raise NoFamily("separable states belong to no family")
    return FamilyId(result.remainder)


def same_family(rho1, rho2, seed=0, restarts: int = 128) -> bool:
    """True iff the optimal entangled cores agree to 1e-3 in Frobenius norm."""
    a = family_of(rho1, seed=seed, restarts=restarts)
    b = family_of(rho2, seed=seed, restarts=restarts)
    return a.distance(b) <= FAMILY_TOL


def mixture_line_scan(pi1, pi2, n: int = 11, seed=0) -> list[tuple[float, SeparabilityVerdict]]:
    """Separability of lam * pi1 + (1 - lam) * pi2 on a uniform grid of n points."""
    pi1, pi2 = as_density(pi1), as_density(pi2)
    out = []
    for lam in np.linspace(0, 1, n):
        m = make_density(lam * pi1.matrix + (1 - lam) * pi2.matrix, pi1.dims)
        out.append((float(lam), is_separable(m, certify=False, seed=seed)))
    return out


def common_detected_witness(pi1, pi2, n: int = 11, seed=0) -> CommonWitness:
    """A witness detecting both states, or proof that none exists.

    A separable point on the segment between them rules out a common
    witness, since any W negative on both is negative on their mixtures.
    Otherwise the witness of each grid mixture is tried against both ends.
    """
    pi1, pi2 = as_density(pi1), as_density(pi2)
    scan = mixture_line_scan(pi1, pi2, n=n, seed=seed)
    for lam, verdict in scan:
        if verdict.separable:
            return CommonWitness(CommonWitnessStatus.SEPARABLE_MIXTURE, separable_lambda=lam)
    for lam, _ in scan:
        m = make_density(lam * pi1.matrix + (1 - lam) * pi2.matrix, pi1.dims)
        try:
            w = witness_for_state(m)
        except NoNptWitness:
            continue
        a, b = hs_inner(w, pi1), hs_inner(w, pi2)
        if a < -DETECTION_TOL and b < -DETECTION_TOL:
            return CommonWitness(CommonWitnessStatus.FOUND, witness=w, pairings=(a, b))
    return CommonWitness(CommonWitnessStatus.UNDETERMINED)


__all__ = [
    "CommonWitness",
    "CommonWitnessStatus",
    "FamilyId",
    "FinerTag",
    "FinerVerdict",
    "WitnessSample",
    "common_detected_witness",
    "delta_hat",
    "family_of",
    "is_finer",
    "ratio_decompose",
    "mixture_line_scan",
    "same_family",
    "sample_detecting_witnesses",
]
