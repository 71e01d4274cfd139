import numpy as np
import pytest

from timeop.core_model import (
    Dispersion,
    DispersionKind,
    Free,
    ScatterSystem,
    SpaceGrid,
    TimeGrid,
    UnitSystem,
    WavenumberGrid,
    make_gaussian_amplitude,
)
from timeop.errors import KindError, ShapeError
from timeop.propagate import (
    continuity_residual,
    flux_split,
    synthesize,
    synthesize_photon,
)


def _free_packet(units=None):
    units = units or UnitSystem()
    sys = ScatterSystem(Free(), units)
    g = make_gaussian_amplitude(5.0, 1.0, WavenumberGrid.uniform(1.0, 9.0, 500), x0=-5.0,
                                dispersion=sys.dispersion)
    return g, sys


def test_free_packet_norm_conserved():
    g, sys = _free_packet()
    f = synthesize(g, sys, SpaceGrid.uniform(-30, 40, 1401), TimeGrid.uniform(0, 4, 5))
    assert np.allclose(f.norm(), 1.0, atol=1e-6)


def test_free_centroid_moves_with_group_velocity():
    g, sys = _free_packet()
    f = synthesize(g, sys, SpaceGrid.uniform(-30, 40, 1401), TimeGrid.uniform(0, 4, 5))
    assert np.allclose(np.diff(f.centroid()), 5.0, rtol=1e-4)


def test_barrier_continuity(barrier_field):
    assert continuity_residual(barrier_field) < 0.05


def test_flux_split_partitions_flux(barrier_field):
    plus, minus = flux_split(barrier_field, -5.0)
    assert np.allclose(plus + minus, barrier_field.flux_at(-5.0))
    assert np.all(plus >= 0) and np.all(minus <= 0)


def test_unit_mismatch_rejected():
    g, _ = _free_packet()
    with pytest.raises(ShapeError):
        synthesize(g, ScatterSystem(Free(), UnitSystem(mass=2.0)), SpaceGrid.uniform(0, 1, 3),
                   TimeGrid.uniform(0, 1, 3))


def test_photon_kind_enforced():
    g, sys = _free_packet()
    with pytest.raises(KindError):
        synthesize_photon(g, SpaceGrid.uniform(0, 1, 3), TimeGrid.uniform(0, 1, 3))


def test_photon_flux_is_c_times_density():
    disp = Dispersion(DispersionKind.PHOTON, UnitSystem(c=1.0))
    chi = make_gaussian_amplitude(5.0, 1.0, WavenumberGrid.uniform(1.0, 9.0, 400), x0=-5.0,
                                  dispersion=disp)
    f = synthesize_photon(chi, SpaceGrid.uniform(-20, 20, 801), TimeGrid.uniform(0, 5, 6))
    assert np.allclose(f.flux, f.rho, atol=1e-14)
    assert np.allclose(f.norm(), 1.0, atol=1e-6)
