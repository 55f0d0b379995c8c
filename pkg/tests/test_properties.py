"""Randomized invariant checks over model parameters."""

import numpy as np
from hypothesis import assume, given, strategies as st

from floquet_nonbloch.gbz import floquet_gbz, gbz_spectrum
from floquet_nonbloch.laurent import char_poly
from floquet_nonbloch.lattice import floquet_operator, oracle_spectrum
from floquet_nonbloch.models import build_model, bulk_hamiltonian
from floquet_nonbloch.observables import eta_fraction
from floquet_nonbloch.polyroots import laurent_roots, poly_roots
from floquet_nonbloch.spectrum import SpectrumSet, fold

pos = st.floats(0.2, 2.5)
small = st.floats(0.02, 0.6)
period = st.floats(0.2, 4.0)
sizes = st.integers(3, 14)


@st.composite
def protocols(draw):
    name = draw(st.sampled_from(["single_band", "two_band", "bulk_four_step"]))
    if name == "single_band":
        params = {"t1": draw(pos), "t2": draw(small), "gamma": draw(small), "V": draw(small)}
    elif name == "two_band":
        params = {"t": draw(pos), "gamma": draw(small), "mu": draw(pos), "delta": draw(small), "V": draw(small)}
    else:
        params = {"t1": draw(pos), "t2": draw(small), "gamma1": draw(small), "gamma2": draw(small)}
    params.update(T=draw(period), L=draw(sizes))
    return build_model(name, params)


def _paired(values, tol):
    s = SpectrumSet(values)
    return s.conjugation_residual() <= tol * max(1.0, np.max(np.abs(values), initial=0.0))


@given(protocols())
def test_oracle_spectrum_is_conjugation_paired(p):
    o = oracle_spectrum(p, precision="double")
    lam = np.exp(-1j * o.values * p.T)
    # pairing E <-> conj(E) is lam <-> 1/conj(lam); compare on the unfolded side
    assert np.allclose(np.sort_complex(np.round(lam, 8)), np.sort_complex(np.round(1 / np.conj(lam), 8)), atol=1e-6)


@given(pos, small, small, st.floats(0.5, 3.0))
def test_gbz_spectrum_is_conjugation_paired(t1, t2, g, T):
    h = bulk_hamiltonian("single_band", {"t1": t1, "t2": t2, "gamma": g})
    s = gbz_spectrum(floquet_gbz(h, T, thetaGrid=90))
    assert _paired(s.values, 1e-8)


@given(protocols())
def test_det_floquet_operator(p):
    U = floquet_operator(p).U_F
    tr = sum(seg.tau * np.trace(H) for seg, H in zip(p.segments, p.hamiltonians()))
    expected = np.exp(-1j * tr * p.T)
    sign, logdet = np.linalg.slogdet(U)
    assert abs(sign * np.exp(logdet) - expected) < 1e-8 * abs(expected)


@given(pos, small, small, st.complex_numbers(max_magnitude=5))
def test_vieta_root_product(t1, t2, g, E):
    assume(abs(t2 - g) > 0.02)  # otherwise h_{-2} vanishes and a root sits at zero
    h = bulk_hamiltonian("single_band", {"t1": t1, "t2": t2, "gamma": g})
    r = laurent_roots(char_poly(h), E)
    m = h.m
    assert len(r.roots) == 2 * m
    expected = h.coeff(-m)[0, 0] / h.coeff(m)[0, 0]
    assert abs(np.prod(r.roots) - expected) < 1e-8 * abs(expected)


@given(st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=5), min_size=2, max_size=8))
def test_poly_roots_vieta(c):
    c = np.asarray(c)
    r = poly_roots(c).roots
    scale = max(1.0, np.max(np.abs(c)) / abs(c[-1])) ** len(r)
    assert abs(np.sum(r) + c[-2] / c[-1]) < 1e-8 * scale
    assert abs(np.prod(r) - (-1) ** (len(c) - 1) * c[0] / c[-1]) < 1e-8 * scale


@given(protocols(), st.integers(-3, 3))
def test_eta_fold_and_conjugation_invariance(p, k):
    s = oracle_spectrum(p, precision="double").spectrum
    shifted = SpectrumSet(fold(s.values + 2 * np.pi * k / p.T, p.T), p.T)
    conj = SpectrumSet(np.conj(s.values), p.T)
    eta = eta_fraction(s)
    assert eta_fraction(shifted) == eta
    assert eta_fraction(conj) == eta
