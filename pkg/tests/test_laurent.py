import numpy as np
import pytest

from floquet_nonbloch.errors import DomainError
from floquet_nonbloch.laurent import (
    LaurentMatrixPoly,
    TimedLaurentPoly,
    char_poly,
    commutation_check,
    eval_laurent,
    time_average,
)
from floquet_nonbloch.models import bulk_hamiltonian


def test_eval_at_one_sums_coefficients(single_h):
    # gamma terms cancel at beta = 1
    assert eval_laurent(single_h, 1.0)[0, 0] == pytest.approx(4.3)


def test_zero_poly_is_zero():
    h = LaurentMatrixPoly.zeros(3)
    assert np.all(eval_laurent(h, 1.0) == 0)


def test_beta_zero_rejected(single_h):
    with pytest.raises(DomainError):
        eval_laurent(single_h, 0.0)


def test_two_band_entrywise(two_h):
    t, g, mu, d = 1.0, 0.5, 2.5, 0.1
    b = 1j
    want = np.array([
        [(t + g) * b + (t - g) / b + mu, d],
        [d, (t - g) * b + (t + g) / b - mu],
    ])
    assert np.allclose(eval_laurent(two_h, b), want, atol=1e-14)


def test_m_is_tightened():
    c = np.zeros((5, 1, 1))
    c[2, 0, 0] = 1.0
    c[3, 0, 0] = 2.0
    h = LaurentMatrixPoly(c)
    assert h.m == 1


def test_char_poly_scalar(single_h):
    f = char_poly(single_h)
    assert f.degE == 1
    assert np.allclose(f.coeffs[1], np.eye(1, 2 * f.M + 1, f.M)[0] * -1)
    for b in (0.7, 1.3j, -2.0 + 0.4j):
        assert f(b, 0.0) == pytest.approx(single_h(b)[0, 0])


def test_char_poly_two_band_closed_form(two_h):
    f = char_poly(two_h)
    t, g, mu, d = 1.0, 0.5, 2.5, 0.1
    for b, E in [(0.8 + 0.3j, 0.2), (1.7j, -1.1 + 0.5j)]:
        a = (t + g) * b + (t - g) / b + mu
        dd = (t - g) * b + (t + g) / b - mu
        assert f(b, E) == pytest.approx((a - E) * (dd - E) - d * d, rel=1e-12)


@pytest.mark.parametrize("q,m", [(1, 2), (2, 1), (3, 2), (4, 1)])
def test_char_poly_matches_determinant(q, m, rng):
    h = LaurentMatrixPoly(rng.normal(size=(2 * m + 1, q, q)) + 1j * rng.normal(size=(2 * m + 1, q, q)))
    f = char_poly(h)
    beta = np.exp(rng.uniform(-0.7, 0.7, 50) + 2j * np.pi * rng.random(50))
    E = rng.normal(size=50) + 1j * rng.normal(size=50)
    det = np.linalg.det(eval_laurent(h, beta) - E[:, None, None] * np.eye(q))
    assert np.all(np.abs(f(beta, E) - det) <= 1e-10 * (1 + np.abs(det)))


def test_time_average_four_step():
    p = {"t1": 1.0, "t2": 0.08, "gamma1": 0.1, "gamma2": 0.07}
    hF = bulk_hamiltonian("bulk_four_step", p)
    want = {
        1: 0.25 * (p["t1"] + p["gamma1"]), -1: 0.25 * (p["t1"] - p["gamma1"]),
        2: 0.25 * (p["t2"] + p["gamma2"]), -2: 0.25 * (p["t2"] - p["gamma2"]),
    }
    for n, v in want.items():
        assert hF.coeff(n)[0, 0] == pytest.approx(v)
    assert hF.coeff(0)[0, 0] == 0


def test_time_average_single_segment_identity(two_h):
    assert np.allclose(time_average(TimedLaurentPoly([(1.0, two_h)])).coeffs, two_h.coeffs)


def test_time_average_cancellation(two_h):
    avg = time_average(TimedLaurentPoly([(0.5, two_h), (0.5, -two_h)]))
    assert not np.any(avg.coeffs)


def test_fractions_must_sum_to_one(two_h):
    with pytest.raises(ValueError):
        TimedLaurentPoly([(0.5, two_h), (0.4, two_h)])


def test_commutation_scalar(single_h):
    ok, res = commutation_check(TimedLaurentPoly([(0.3, single_h), (0.7, 2 * single_h)]))
    assert ok and res == 0


def test_commutation_four_step():
    from floquet_nonbloch.models import build_model

    p = build_model("bulk_four_step", {}, preset="reference")
    assert commutation_check(p.timed_bulk())[0]


def test_commutation_pauli_fails():
    sx = LaurentMatrixPoly.from_terms({1: [[0, 1], [1, 0]]}, 2)
    sz = LaurentMatrixPoly.from_terms({1: [[1, 0], [0, -1]]}, 2)
    ok, res = commutation_check(TimedLaurentPoly([(0.5, sx), (0.5, sz)]))
    assert not ok and res > 0.1


def test_vieta_root_product_scalar(single_h):
    from floquet_nonbloch.polyroots import laurent_roots

    f = char_poly(single_h)
    for E in (0.0, 1.3 - 0.2j, 5.0):
        r = laurent_roots(f, E).roots
        assert len(r) == 4
        assert np.prod(r) == pytest.approx((0.15 - 0.16) / (0.15 + 0.16), rel=1e-10)
