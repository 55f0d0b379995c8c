import numpy as np
import pytest
import scipy.linalg as sla

from floquet_nonbloch.errors import ConfigError, ConditioningError
from floquet_nonbloch.lattice import (
    expm,
    floquet_operator,
    oracle_spectrum,
    pbc_spectrum,
    quasienergies,
    to_quasienergy,
)
from floquet_nonbloch.laurent import LaurentMatrixPoly
from floquet_nonbloch.models import build_model, bulk_hamiltonian
from floquet_nonbloch.observables import eta_fraction, hausdorff


def test_expm_zero():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))


def test_expm_diagonal():
    assert np.allclose(expm(np.diag([1j * np.pi, -1j * np.pi])), -np.eye(2), atol=1e-14)


def test_expm_nilpotent():
    assert np.allclose(expm(np.array([[0.0, 1.0], [0.0, 0.0]])), [[1, 1], [0, 1]], atol=1e-15)


def test_expm_inverse_and_reference(rng):
    A = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    E = expm(A)
    assert np.linalg.norm(E @ expm(-A) - np.eye(12)) <= 1e-10 * np.linalg.cond(E)
    assert np.allclose(E, sla.expm(A), rtol=1e-11, atol=1e-11 * np.abs(E).max())


def test_expm_overflow():
    with pytest.raises(ConditioningError):
        expm(np.array([[1e6]]))


def test_single_band_small_chain():
    p = build_model("single_band", {"t1": 2.0, "t2": 0.15, "gamma": 0.16, "V": 0.0, "T": 1.0, "L": 3})
    H = p.hamiltonians()[0]
    want = np.array([[0, 2, 0.31], [2, 0, 2], [-0.01, 2, 0]])
    assert np.allclose(H, want)


def test_single_band_boundary_drive():
    p = build_model("single_band", {"V": 0.3, "L": 6}, preset="reference")
    H1, H2 = p.hamiltonians()
    D = H1 - H2
    assert np.allclose(np.diag(D), [0.6, 0, 0, 0, 0, 0.6])
    assert np.count_nonzero(D - np.diag(np.diag(D))) == 0


def test_two_band_boundary_drive():
    p = build_model("two_band", {"V": 0.2, "L": 5}, preset="reference")
    H1, H2 = p.hamiltonians()
    D = (H1 - H2) / 2
    want = np.zeros((10, 10))
    for a, b in [(0, 1), (8, 9)]:
        want[a, b] = want[b, a] = 0.2
    assert np.allclose(D, want)


def test_missing_parameter():
    with pytest.raises(ConfigError, match="delta"):
        build_model("two_band", {"t": 1, "gamma": 0.5, "mu": 2.5, "V": 0.01, "T": 0.5, "L": 10})


def test_unknown_model():
    with pytest.raises(ConfigError):
        build_model("three_band", {})


def test_bad_size():
    with pytest.raises(ConfigError):
        build_model("single_band", {"L": 0}, preset="reference")


def test_static_drive_gives_plain_exponential():
    p = build_model("single_band", {"V": 0.0, "L": 20, "T": 0.7}, preset="reference")
    r = floquet_operator(p)
    H0 = p.hamiltonians()[0]
    assert np.allclose(r.U_F, sla.expm(-1j * 0.7 * H0), atol=1e-12)
    assert np.allclose(r.deltaU, 0, atol=1e-12)


def test_one_cell_drive_cancels():
    p = build_model("single_band", {"L": 1, "V": 0.3}, preset="reference")
    assert np.allclose(floquet_operator(p).U_F, 1.0, atol=1e-14)


def test_delta_u_is_boundary_localised():
    p = build_model("bulk_four_step", {}, preset="reference")
    D = np.abs(floquet_operator(p).deltaU)
    n = D.shape[0]
    mid = slice(n // 4, 3 * n // 4)
    assert D[mid, mid].max() < 0.01 * D.max()


def test_det_identity():
    p = build_model("two_band", {"L": 12}, preset="reference")
    U = floquet_operator(p).U_F
    Have = p.average_hamiltonian()
    assert np.linalg.det(U) == pytest.approx(np.exp(-1j * np.trace(Have) * p.T), rel=1e-8)


def test_quasienergies_identity():
    s = quasienergies(np.eye(4), 0.9)
    assert np.allclose(s.values, 0)


def test_quasienergies_hermitian_band():
    h = LaurentMatrixPoly.from_terms({1: 1.0, -1: 1.0})
    from floquet_nonbloch.models import real_space

    H0 = real_space(h, 30)
    T = 0.3
    s = quasienergies(sla.expm(-1j * T * H0), T)
    assert np.max(np.abs(s.imag)) < 1e-10
    assert np.allclose(np.sort(s.real), np.linalg.eigvalsh(H0), atol=1e-8)


def test_branch_convention():
    T = 2.0
    lam = np.exp(-1j * np.array([np.pi / T, -np.pi / T + 1e-3, 0.2]) * T)
    E = to_quasienergy(lam, T)
    assert np.all(E.real > -np.pi / T) and np.all(E.real <= np.pi / T + 1e-12)
    assert E[0].real == pytest.approx(np.pi / T)


def test_driven_chain_is_complex():
    p = build_model("single_band", {}, preset="reference")
    s = oracle_spectrum(p).spectrum
    assert eta_fraction(s) > 0
    assert s.conjugation_residual() < 1e-7


def test_oracle_precision_agrees_with_certified():
    p = build_model("single_band", {"L": 40, "T": 2.0}, preset="reference")
    a = oracle_spectrum(p, precision="double")
    b = oracle_spectrum(p, precision=160)
    assert np.all(b.errors < 1e-20)
    assert hausdorff(a.spectrum, b.spectrum, period=np.pi) < 1e-7


def test_pbc_hermitian_cosine():
    s = pbc_spectrum(LaurentMatrixPoly.from_terms({1: 1.0, -1: 1.0}), 64)
    k = 2 * np.pi * np.arange(64) / 64
    assert np.allclose(np.sort(s.real), np.sort(2 * np.cos(k)), atol=1e-12)


def test_pbc_hatano_nelson_ellipse():
    t, g = 1.0, 0.3
    s = pbc_spectrum(LaurentMatrixPoly.from_terms({1: t + g, -1: t - g}), 50)
    k = 2 * np.pi * np.arange(50) / 50
    want = 2 * t * np.cos(k) + 2j * g * np.sin(k)
    assert hausdorff(s.values, want) < 1e-12


def test_pbc_matches_periodic_floquet_oracle():
    L = 64
    p = build_model("bulk_four_step", {"L": L}, preset="reference", bc="periodic")
    ed = quasienergies(floquet_operator(p).U_F, p.T)
    th = pbc_spectrum(bulk_hamiltonian("bulk_four_step", p.params), L)
    assert hausdorff(ed, type(ed)(th.values, p.T), period=2 * np.pi / p.T) < 1e-6
