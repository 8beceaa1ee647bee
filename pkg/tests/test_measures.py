import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from geocfar.exceptions import DimensionMismatch
from geocfar.measures import MeasureKind, check_affine_invariance, congruence, measure

from conftest import complex_normal, random_hpd

KINDS = list(MeasureKind)


def rd_oracle(C1, C2):
    # Frobenius form with scipy matrix functions
    S = np.linalg.inv(sla.sqrtm(C1))
    return np.linalg.norm(sla.logm(S @ C2 @ S), "fro") ** 2


def kld_oracle(C1, C2):
    m = C1.shape[0]
    A = C1 @ np.linalg.inv(C2)
    return np.trace(A).real - m - np.log(np.linalg.det(A).real)


def test_hand_values():
    I2 = np.eye(2)
    assert measure("rd", 4 * I2, I2) == pytest.approx(2 * np.log(4) ** 2, rel=1e-12)
    assert measure("rd", 4 * I2, I2) == pytest.approx(3.8436, abs=1e-4)
    assert measure("kld", 2 * I2, I2) == pytest.approx(2 - 2 * np.log(2), rel=1e-12)
    assert measure("kld", 2 * I2, I2) == pytest.approx(0.6137, abs=1e-4)


@pytest.mark.parametrize("kind", KINDS)
def test_coincidence(kind, rng):
    C = random_hpd(rng, 5)
    assert measure(kind, C, C) == pytest.approx(0.0, abs=1e-9)


def test_against_oracles(rng):
    for _ in range(20):
        C1, C2 = random_hpd(rng, 5), random_hpd(rng, 5)
        assert measure("rd", C1, C2) == pytest.approx(rd_oracle(C1, C2), rel=1e-8)
        assert measure("kld", C1, C2) == pytest.approx(kld_oracle(C1, C2), rel=1e-8)


def test_kld_argument_order(rng):
    C1, C2 = random_hpd(rng, 4), random_hpd(rng, 4)
    assert measure("kld", C1, C2) == pytest.approx(kld_oracle(C1, C2), rel=1e-10)
    assert measure("kld", C1, C2) != pytest.approx(measure("kld", C2, C1), rel=1e-6)


@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_jsd_equals_ldd(m, seed):
    r = np.random.default_rng(seed)
    C1, C2 = random_hpd(r, m), random_hpd(r, m)
    assert measure("jsd", C1, C2) == pytest.approx(measure("ldd", C1, C2), rel=1e-9)


@given(st.sampled_from(KINDS), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_nonnegative_and_positive_off_diagonal(kind, m, seed):
    r = np.random.default_rng(seed)
    C1, C2 = random_hpd(r, m), random_hpd(r, m)
    assert measure(kind, C1, C2) > 0


@pytest.mark.parametrize("kind", ["rd", "jsd", "ldd"])
def test_symmetric_measures(kind, rng):
    C1, C2 = random_hpd(rng, 5), random_hpd(rng, 5)
    assert measure(kind, C1, C2) == pytest.approx(measure(kind, C2, C1), rel=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_affine_invariance_examples(kind, rng):
    C1, C2 = random_hpd(rng, 4), random_hpd(rng, 4)
    assert check_affine_invariance(kind, C1, C2, np.eye(4)) < 1e-12
    assert check_affine_invariance(kind, C1, C2, 3 * np.eye(4)) < 1e-8
    W = complex_normal(rng, (4, 4)) + 2 * np.eye(4)
    assert check_affine_invariance(kind, C1, C2, W) < 1e-6


def test_affine_invariance_rejects_singular(rng):
    C1, C2 = random_hpd(rng, 3), random_hpd(rng, 3)
    with pytest.raises(ValueError):
        check_affine_invariance("rd", C1, C2, np.zeros((3, 3)))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        measure("kld", np.eye(2), np.eye(3))


def test_batched(rng):
    C1 = np.stack([random_hpd(rng, 3) for _ in range(4)])
    C2 = random_hpd(rng, 3)
    vals = measure("rd", C1, C2)
    assert vals.shape == (4,)
    assert vals[2] == pytest.approx(measure("rd", C1[2], C2))


def test_congruence(rng):
    C = random_hpd(rng, 3)
    W = complex_normal(rng, (3, 2))
    np.testing.assert_allclose(congruence(C, W), W.conj().T @ C @ W)


def test_kind_parsing():
    assert MeasureKind.parse("KL") is MeasureKind.KLD
    assert MeasureKind.parse("riemann") is MeasureKind.RD
    assert str(MeasureKind.LDD) == "ldd"
    with pytest.raises(ValueError):
        MeasureKind.parse("bhattacharyya")
