import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timeop.core_model import (
    Dispersion,
    DispersionKind,
    EnergyGrid,
    Free,
    Grid,
    RectBarrier1D,
    ScatterSystem,
    SpaceGrid,
    UnitSystem,
    WavenumberGrid,
    barrier_coefficients,
    make_gaussian_amplitude,
    stationary_residual,
    transmission_probability,
)
from timeop.errors import CoverageError, DomainError, ShapeError


def test_unit_system_rejects_nonpositive():
    with pytest.raises(DomainError):
        UnitSystem(hbar=0.0)
    assert UnitSystem.half_mass().mass == 0.5


def test_massive_dispersion_roundtrip():
    d = Dispersion()
    k = np.linspace(0.1, 10, 50)
    assert np.allclose(d.wavenumber(d.energy(k)), k)
    assert np.allclose(d.group_velocity_k(k), k)


def test_photon_group_velocity_is_c():
    d = Dispersion(DispersionKind.PHOTON, UnitSystem(c=2.5))
    assert np.allclose(d.group_velocity(np.array([0.5, 3.0])), 2.5)


def test_uniform_grid_integrates_polynomial():
    g = Grid.uniform(0.0, 2.0, 2001)
    assert g.integrate(g.nodes**2) == pytest.approx(8 / 3, rel=1e-6)
    assert g.is_uniform


def test_gauss_grid_is_exact_for_low_degree():
    g = Grid.gauss_legendre(-1.0, 3.0, 8)
    assert g.integrate(g.nodes**5) == pytest.approx((3.0**6 - 1.0) / 6, rel=1e-12)


def test_grid_rejects_unsorted_nodes():
    with pytest.raises(ShapeError):
        Grid(np.array([0.0, 2.0, 1.0]), np.ones(3))


def test_energy_grid_requires_positive_min():
    with pytest.raises(DomainError):
        EnergyGrid.uniform(0.0, 1.0, 10)


def test_grid_arrays_are_read_only():
    g = SpaceGrid.uniform(0, 1, 5)
    with pytest.raises(ValueError):
        g.nodes[0] = 3.0


def test_gaussian_amplitude_normalized_and_centered():
    grid = WavenumberGrid.uniform(1.0, 9.0, 801)
    g = make_gaussian_amplitude(5.0, 1.0, grid)
    assert g.is_normalized()
    assert g.mean_wavenumber() == pytest.approx(5.0, abs=1e-8)


def test_gaussian_width_scaling():
    # |g|^2 has standard deviation 1/(2a): doubling a halves the spread
    grid = WavenumberGrid.uniform(1.0, 9.0, 1601)
    spreads = []
    for a in (1.0, 2.0):
        g = make_gaussian_amplitude(5.0, a, grid)
        p = np.abs(g.values) ** 2 * grid.weights
        m = np.sum(p * grid.nodes)
        spreads.append(np.sqrt(np.sum(p * (grid.nodes - m) ** 2)))
    assert spreads[0] == pytest.approx(0.5, rel=1e-6)
    assert spreads[1] / spreads[0] == pytest.approx(0.5, rel=1e-6)


def test_gaussian_amplitude_coverage_error():
    with pytest.raises(CoverageError):
        make_gaussian_amplitude(5.0, 1.0, WavenumberGrid.uniform(4.0, 6.0, 101))


def test_energy_representation_preserves_norm():
    grid = WavenumberGrid.uniform(1.0, 9.0, 801)
    g = make_gaussian_amplitude(5.0, 1.0, grid)
    assert g.to_energy().norm() == pytest.approx(1.0, abs=1e-12)
    assert g.to_energy().to_wavenumber().norm() == pytest.approx(1.0, abs=1e-12)


def test_barrier_transmission_closed_form():
    # tunnelling through V0 = 14 of width 0.5 at E = 12.5 (k = 5), hbar = mu = 1
    sys = ScatterSystem(RectBarrier1D(14.0, 0.0, 0.5))
    T, R = transmission_probability(sys, 12.5)
    kappa = np.sqrt(2 * (14.0 - 12.5))
    want = 1.0 / (1.0 + 14.0**2 * np.sinh(kappa * 0.5) ** 2 / (4 * 12.5 * (14.0 - 12.5)))
    assert T == pytest.approx(want, rel=1e-10)
    assert T + R == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(V0=st.floats(0.5, 30.0), width=st.floats(0.1, 2.0), k=st.floats(0.3, 8.0))
def test_barrier_flux_conservation(V0, width, k):
    c = barrier_coefficients(RectBarrier1D(V0, 0.0, width), [k], UnitSystem())
    assert c.transmission[0] + c.reflection[0] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("E", [3.0, 12.5, 20.0])
def test_stationary_residual_small(E):
    sys = ScatterSystem(RectBarrier1D(14.0, 0.0, 0.5))
    assert stationary_residual(sys, E, SpaceGrid.uniform(-3, 3, 301)) < 1e-10
    assert stationary_residual(ScatterSystem(Free()), E, SpaceGrid.uniform(-3, 3, 31)) < 1e-12
