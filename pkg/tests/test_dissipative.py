import dataclasses
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timeop import dissipative as ds
from timeop.core_model import SpaceGrid
from timeop.errors import (
    DivisionGuardError,
    DomainError,
    NormalizationError,
    ShapeError,
    SolvabilityError,
)


@pytest.fixture(scope="module")
def scn():
    return ds.default_scenario()


def test_albrecht_term_of_free_packet(free_field):
    i = int(np.argmin(np.abs(free_field.t)))  # packet well inside the window
    W = ds.albrecht_term(free_field, i)
    slope, root = ds.albrecht_parameters(free_field, i)
    assert slope == pytest.approx(5.0, rel=1e-3)
    rho = np.abs(free_field.psi[i]) ** 2
    w = free_field.space.weights
    mean_x = np.sum(w * rho * free_field.x) / np.sum(w * rho)
    assert root == pytest.approx(mean_x, abs=1e-9)
    assert np.allclose(np.diff(W, 2), 0.0, atol=1e-9)


def test_albrecht_term_rejects_empty_field(free_field):
    empty = dataclasses.replace(free_field, psi=np.zeros_like(free_field.psi))
    with pytest.raises(NormalizationError):
        ds.albrecht_term(empty)


def test_brute_force_tensor_sum_matches_factorization():
    scn = ds.default_scenario(n_energy=4, nx=21)
    E, w = scn.energy.nodes, scn.energy.weights
    h = scn.h_energy
    wx, x = scn.space.weights, scn.space.nodes
    U = {i: scn.amplitude(e) * ds.base_state(scn, e) for i, e in enumerate(E)}
    dU = {i: ds.discrete_derivative(scn, u) for i, u in U.items()}
    n = E.size
    S = np.zeros(x.size, complex)
    for i, j, k, l in itertools.product(range(n), repeat=4):
        p = -1j * np.sum(wx * np.conj(U[i]) * dU[j])
        N = np.sum(wx * np.conj(U[k]) * U[l])
        M = np.sum(wx * x * np.conj(U[k]) * U[l])
        e5 = scn.E_star + (i - j + k - l) * h
        if scn.amplitude(e5) == 0:
            continue
        u5 = scn.amplitude(e5) * ds.base_state(scn, e5)
        S += w[i] * w[j] * w[k] * w[l] * p * (x * N - M) * u5
    assert np.allclose(ds.source_term(scn, scn.E_star), S, rtol=1e-12, atol=1e-14)


def test_gamma_zero_recovers_base_state():
    sol = ds.solve_order1(ds.default_scenario(gamma=0.0))
    assert sol.residual0 < 1e-10
    assert np.array_equal(sol.phi, sol.phi0)


def test_zero_source_gives_zero_correction(scn):
    sol = ds.solve_order1(scn, rhs=np.zeros(scn.space.n))
    assert np.all(sol.phi1 == 0)


def test_first_order_equation_is_solved(scn):
    sol = ds.solve_order1(scn)
    assert sol.residual1 < 1e-10
    assert sol.info["rhs_norm"] > 0


def test_source_is_independent_of_gamma(scn):
    a = ds.rhs_order1(scn)
    b = ds.rhs_order1(scn.with_gamma(0.3))
    assert np.array_equal(a, b)


def test_gamma_sweep(scn):
    sw = ds.gamma_sweep(scn)
    assert sw.r_squared >= 0.999
    assert sw.ratio_spread <= 2.0


def test_fourier_roundtrip_and_reduction(scn):
    assert ds.fourier_roundtrip_error(scn) < 1e-8
    assert ds.reduction_residual(scn) < 1e-10


def test_symmetric_family_has_vanishing_source():
    space = SpaceGrid.uniform(-2.5, 2.5, 81)
    g = lambda E: np.exp(-((np.asarray(E) - 2.0) ** 2) / 0.72).astype(complex)
    scn = ds.DissipationScenario.build(space, np.zeros(space.n), 0.0, 4.0, 8, g, 2.25,
                                       family=lambda E, x: np.cos(np.sqrt(E) * x))
    assert np.max(np.abs(ds.rhs_order1(scn))) < 1e-8


def test_energy_grid_halving(scn):
    w = scn.space.weights
    a = np.sqrt(np.sum(w * np.abs(ds.rhs_order1(scn)) ** 2))
    b = np.sqrt(np.sum(w * np.abs(ds.rhs_order1(scn.refined_energy())) ** 2))
    assert abs(a - b) / b < 0.05


def test_division_guard():
    scn = ds.default_scenario(E_center=0.5, E_sigma=0.05, E_star=3.75)
    with pytest.raises(DivisionGuardError):
        ds.rhs_order1(scn)


def _box(E_star_index=0):
    space = SpaceGrid.uniform(0.0, 1.0, 41)
    h = space.spacing
    lam = [(2 - 2 * np.cos(np.pi * j / 40)) / h**2 for j in range(1, 40)]
    g = lambda E: np.ones_like(np.asarray(E, dtype=float), dtype=complex)
    E_star = lam[E_star_index]
    return ds.DissipationScenario.build(space, np.zeros(space.n), 0.0, 2 * E_star, 4, g, E_star,
                                        boundary="dirichlet")


def test_dirichlet_resonant_source_is_rejected():
    scn = _box()
    phi0, res = ds.solve_order0(scn)
    assert res < 1e-10
    with pytest.raises(SolvabilityError):
        ds.solve_order1(scn, rhs=phi0)


def test_dirichlet_orthogonal_source_is_solved():
    scn = _box()
    phi0, _ = ds.solve_order0(scn)
    x = scn.space.nodes
    rhs = np.sin(2 * np.pi * x).astype(complex)
    sol = ds.solve_order1(scn, rhs=rhs)
    assert sol.residual1 < 1e-10
    assert abs(np.vdot(phi0, sol.phi1)) < 1e-10


def test_dirichlet_needs_box_eigenvalue():
    scn = dataclasses.replace(_box(), E_star=_box().E_star * 1.01)
    with pytest.raises(DomainError):
        ds.solve_order0(scn)


def test_build_validation():
    space = SpaceGrid.uniform(-1, 1, 11)
    g = lambda E: np.ones_like(E, dtype=complex)
    V = np.zeros(11)
    with pytest.raises(DomainError):
        ds.DissipationScenario.build(space, V, -1.0, 4.0, 4, g, 1.0)
    with pytest.raises(DomainError):
        ds.DissipationScenario.build(space, V, 0.0, 4.0, 4, g, 5.0)
    with pytest.raises(ShapeError):
        ds.DissipationScenario.build(space, np.zeros(5), 0.0, 4.0, 4, g, 1.0)
    with pytest.raises(DomainError):
        ds.DissipationScenario.build(space, V, 0.0, 4.0, 4, g, 1.0, boundary="periodic")
    with pytest.raises(NormalizationError):
        ds.DissipationScenario.build(space, V, 0.0, 4.0, 4, lambda E: 0 * E, 1.0)


def test_amplitude_vanishes_outside_band(scn):
    assert scn.amplitude(-0.1) == 0
    assert scn.amplitude(scn.E_cut + 0.5) == 0
    nodes = scn.energy.nodes
    assert np.sum(scn.energy.weights * np.abs(scn.amplitude(nodes)) ** 2) == pytest.approx(1.0)


def test_outputs(tmp_path, scn):
    sol = ds.solve_order1(scn)
    sol.to_csv(tmp_path / "phi.csv")
    sol.to_json(tmp_path / "phi.json")
    assert len((tmp_path / "phi.csv").read_text().splitlines()) == scn.space.n + 1


@settings(max_examples=25, deadline=None)
@given(E=st.floats(0.1, 3.9))
def test_base_state_discrete_current_is_constant(scn, E):
    phi = ds.base_state(scn, E)
    assert np.max(np.abs(ds.apply_operator(scn, phi, E))) < 1e-9 * max(1.0, np.max(np.abs(phi)))
    j = np.imag(np.conj(phi[:-1]) * phi[1:])
    assert np.allclose(j, j[0], rtol=1e-9, atol=1e-12)
