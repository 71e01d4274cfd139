import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from timeop.core_model import SphericalWell
from timeop.errors import ConvergenceError, DomainError, NoResonanceError
from timeop import resonance as rs

WELL = SphericalWell(10.0, 1.0)


@pytest.fixture(scope="module")
def b0():
    return rs.solve_exploring_state(WELL, 0).b


def test_exploring_state_n0(b0):
    sol = rs.solve_exploring_state(WELL, 0)
    assert sol.Ka == pytest.approx(math.pi / 2, abs=1e-12)
    assert 0.6 <= sol.ab <= 0.8
    assert sol.residual < 1e-12
    assert sol.below_threshold


def test_exploring_state_n1_has_no_root():
    with pytest.raises(NoResonanceError):
        rs.solve_exploring_state(WELL, 1)


def test_finite_mode_needs_positive_level():
    with pytest.raises(NoResonanceError):
        rs.solve_exploring_state(WELL, 0, mode="finite")


def test_bad_inputs():
    with pytest.raises(DomainError):
        rs.solve_exploring_state(WELL, -1)
    with pytest.raises(DomainError):
        rs.resolvent_element(WELL, -1.0, 1 + 1j)
    with pytest.raises(DomainError):
        rs.phase_shift_l0(WELL, 0.0)


def test_resolvent_matches_spectral_representation():
    # shallow well without bound states: g(z) = int |<phi|psi_E>|^2 / (z - E) dE
    well = SphericalWell(1.0, 1.0)
    b, z = 0.8, 2.0 + 1.0j
    ov2 = lambda E: rs.energy_normalized_overlap(well, b, E) ** 2
    re = integrate.quad(lambda E: ov2(E) * ((z - E) / abs(z - E) ** 2).real, 0, np.inf, limit=400)[0]
    im = integrate.quad(lambda E: ov2(E) * (np.conj(z - E) / abs(z - E) ** 2).imag, 0, np.inf, limit=400)[0]
    assert rs.resolvent_element(well, b, z) == pytest.approx(re + 1j * im, rel=1e-6)


def test_free_resolvent_double_integral():
    # U0 = 0: kernel -(1/k) sin(k r<) exp(i k r>)
    well = SphericalWell(0.0, 1.0)
    b, z = 0.7, 1.5 + 0.5j
    k = np.sqrt(z)
    phi = lambda r: np.sqrt(2 * b) * np.exp(-b * r)

    def part(f):
        return integrate.dblquad(lambda rp, r: f(r, rp), 0, 40, 0, lambda r: r, epsabs=1e-12)[0]

    kern = lambda r, rp: -2 / k * phi(r) * phi(rp) * np.sin(k * rp) * np.exp(1j * k * r)
    g = part(lambda r, rp: kern(r, rp).real) + 1j * part(lambda r, rp: kern(r, rp).imag)
    assert rs.resolvent_element(well, b, z) == pytest.approx(g, rel=1e-7)


def test_resolvent_vector_solves_radial_equation(b0):
    z = 3.0 + 0.5j
    h = 1e-3
    for r0 in (0.4, 2.0, 5.0):
        r = np.array([r0 - h, r0, r0 + h])
        v = rs.resolvent_vector(WELL, b0, z, r)
        V = -WELL.U0 if r0 < WELL.a_radius else 0.0
        lhs = (v[0] - 2 * v[1] + v[2]) / h**2 + (z - V) * v[1]
        phi = np.sqrt(2 * b0) * np.exp(-b0 * r0)
        assert lhs == pytest.approx(phi, rel=1e-5)


def test_low_energy_phase_shift_scattering_length():
    a_s = rs.scattering_length(WELL)
    k = 1e-4
    # one bound state, so the phase starts at pi
    assert rs.phase_shift_l0(WELL, k**2) - math.pi == pytest.approx(-k * a_s, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(E=st.floats(0.05, 50.0))
def test_phase_shift_vanishes_for_weak_well(E):
    assert abs(rs.phase_shift_l0(SphericalWell(1e-9, 1.0), E)) < 1e-8


@settings(max_examples=25, deadline=None)
@given(E=st.floats(0.05, 30.0))
def test_resonance_factor_is_unimodular(b0, E):
    rf = rs.resonance_factor(WELL, b0, E)
    assert abs(rf.F0) == pytest.approx(1.0, abs=1e-10)
    assert rf.lambda0 == pytest.approx(rf.lambda0_overlap, rel=1e-8)
    assert np.exp(2j * rf.background_phase) * rf.F0 == pytest.approx(
        rs.s_matrix_l0(WELL, E) * np.exp(0j), abs=1e-8)


def test_resonance_factor_minus_one_at_crossing(b0):
    E_c, slope = rs.phase_crossing(WELL, b0, 0.02, 1.0)
    rf = rs.resonance_factor(WELL, b0, E_c)
    assert rf.F0 == pytest.approx(-1.0, abs=1e-8)
    assert slope > 0
    assert rf.E_phi == pytest.approx(E_c, abs=1e-8)
    S = rs.s_matrix_l0(WELL, E_c)
    assert abs(1 - S) ** 2 == pytest.approx(4 * math.cos(rf.background_phase) ** 2, abs=1e-8)


def test_jost_pole():
    sol = rs.complex_pole(WELL, 0.61953, 12.2 - 5j)
    z = sol.E_complex
    k, K = np.sqrt(z), np.sqrt(z + WELL.U0)
    # outgoing-wave matching condition of the s-wave square well
    assert abs(K / np.tan(K) - 1j * k) < 1e-6 * abs(K)
    assert sol.gamma0 > 0


@pytest.mark.parametrize("offset", [0.01j, -0.01j, 0.08 - 0.05j])
def test_spurious_singularity_and_cut_are_rejected(b0, offset):
    with pytest.raises(ConvergenceError):
        rs.complex_pole(WELL, b0, -b0**2 + offset)


def test_pole_migrates_to_real_axis(b0):
    E_c, _ = rs.phase_crossing(WELL, b0, 0.02, 1.0)
    lam = rs.resonance_factor(WELL, b0, E_c).lambda0
    path = rs.alpha_continuation(WELL, b0, E_c - 0.05j, lam * np.array([0.6, 0.8, 0.9, 1.0]))
    ims = [abs(s.E_complex.imag) for s in path]
    assert all(x >= y for x, y in zip(ims, ims[1:]))
    assert ims[-1] < 1e-8
    assert path[-1].E_R == pytest.approx(E_c, abs=1e-7)


def test_pole_eigenvector_unit_overlap(b0):
    E_c, _ = rs.phase_crossing(WELL, b0, 0.02, 1.0)
    lam = rs.resonance_factor(WELL, b0, E_c).lambda0
    sol = rs.complex_pole(WELL, b0, E_c + 0.001j, alpha=lam)
    r = np.linspace(0, 60, 24001)
    v = rs.pole_eigenvector(WELL, sol, r)
    phi = np.sqrt(2 * b0) * np.exp(-b0 * r)
    assert np.trapezoid(phi * v, r) == pytest.approx(1.0, abs=1e-4)


def test_lorentzian_decay():
    t = np.linspace(0.0, 40.0, 401)
    A = rs.survival_amplitude(rs.lorentzian_density(10.0, 0.1), t, 100.0)
    expected0 = (math.atan(90 / 0.1) + math.atan(10 / 0.1)) / math.pi
    assert A[0].real == pytest.approx(expected0, rel=1e-10)
    fit = rs.fit_decay_rate(t, A)
    assert fit.rate == pytest.approx(0.1, rel=0.05)
    assert fit.r_squared > 0.999


def test_decay_fit_needs_window():
    with pytest.raises(DomainError):
        rs.fit_decay_rate(np.linspace(0, 1, 5), np.ones(5))


def test_scan_csv(tmp_path, b0):
    rows = rs.resonance_scan(WELL, b0, np.linspace(0.1, 2.0, 5))
    path = tmp_path / "scan.csv"
    rs.write_scan_csv(rows, path)
    assert len(path.read_text().strip().splitlines()) == 6
