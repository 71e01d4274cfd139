import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timeop.errors import DomainError, PacketError
from timeop.kg_position import (
    KGPacket,
    commutator_check,
    ellipsoid_detail,
    nw_mean_detail,
    plain_position_mean,
    radial_correlations,
    random_packet,
    uncertainty_correlations,
    validate,
)


def _gauss(s=0.6, d=(0.0, 0.0, 0.0), c=(0.0, 0.0, 0.0)):
    def f(px, py, pz):
        r2 = (px - c[0]) ** 2 + (py - c[1]) ** 2 + (pz - c[2]) ** 2
        return np.exp(-r2 / (4 * s**2) - 1j * (px * d[0] + py * d[1] + pz * d[2]))
    return f


def test_displaced_gaussian_has_nw_mean_at_displacement():
    d = (1.2, -0.7, 0.4)
    pkt = KGPacket.from_function(_gauss(d=d, c=(0.5, 0.0, -0.3)), 1.0, n=48)
    nw = nw_mean_detail(pkt)
    assert np.allclose(nw.bilinear, d, atol=1e-8)
    assert nw.discrepancy <= 1e-8


def test_translation_shifts_nw_mean():
    pkt = KGPacket.from_function(_gauss(c=(0.3, 0.2, 0.0)), 1.0, n=48)
    before = nw_mean_detail(pkt).bilinear
    after = nw_mean_detail(pkt.translated((0.5, 1.0, -1.5))).bilinear
    assert np.allclose(after - before, (0.5, 1.0, -1.5), atol=1e-8)


def test_plain_operator_splits_into_nw_and_ellipsoid():
    rng = np.random.default_rng(3)
    pkt = random_packet(rng, n=48)
    plain = plain_position_mean(pkt)
    ell = ellipsoid_detail(pkt)
    assert np.allclose(plain.real, nw_mean_detail(pkt).bilinear, atol=1e-10)
    assert np.allclose(plain.imag, ell.by_parts, atol=1e-8)
    assert ell.discrepancy <= 1e-8


def test_isotropic_packet_has_zero_ellipsoid_offset():
    pkt = KGPacket.from_function(_gauss(), 1.0, n=48)
    assert np.allclose(ellipsoid_detail(pkt).by_parts, 0.0, atol=1e-12)


def test_radial_reduction_matches_grid():
    s, m0 = 0.6, 1.0
    pkt = KGPacket.from_function(_gauss(s), m0, n=64)
    rep = uncertainty_correlations(pkt)
    prof = lambda p: np.exp(-p**2 / (4 * s**2))
    dprof = lambda p: -p / (2 * s**2) * prof(p)
    da, db, rhs = radial_correlations(prof, dprof, m0)
    assert rep.delta_alpha == pytest.approx([da] * 3, rel=1e-4)
    assert rep.delta_beta == pytest.approx([db] * 3, rel=1e-4)
    assert np.diag(rep.rhs) == pytest.approx([rhs] * 3, rel=1e-4)


def test_random_packets_satisfy_localization_bound():
    rng = np.random.default_rng(11)
    for _ in range(5):
        pkt = random_packet(rng)
        rep = uncertainty_correlations(pkt)
        assert rep.holds()
        assert nw_mean_detail(pkt).discrepancy <= 1e-8


def test_commutator_residual_is_second_order():
    f = _gauss(0.7, d=(0.0, 0.3, 0.0))
    pts = np.array([[0.3, -0.2, 0.5], [1.0, 0.4, -0.7]])
    r1 = commutator_check(f, pts, 1.0, h=1e-2)
    r2 = commutator_check(f, pts, 1.0, h=5e-3)
    assert r2 < 1e-4
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


def test_unnormalized_packet_rejected():
    pkt = KGPacket.from_function(_gauss(), 1.0, n=32, normalize=False)
    with pytest.raises(PacketError):
        validate(pkt)


def test_packet_truncated_at_boundary_rejected():
    pkt = KGPacket.from_function(_gauss(3.0), 1.0, n=32)
    with pytest.raises(PacketError):
        nw_mean_detail(pkt)


def test_rest_mass_must_be_positive():
    with pytest.raises(DomainError):
        KGPacket.from_function(_gauss(), 0.0, n=16)


def test_csv_roundtrip(tmp_path):
    pkt = KGPacket.from_function(_gauss(d=(0.5, 0.0, 0.0)), 1.0, n=16, half_width=5.0)
    path = tmp_path / "pkt.csv"
    pkt.to_csv(path)
    back = KGPacket.from_csv(path, 1.0)
    assert np.array_equal(back.axis, pkt.axis)
    assert np.array_equal(back.values, pkt.values)


@settings(max_examples=15, deadline=None)
@given(
    d=st.tuples(*[st.floats(-2.0, 2.0)] * 3),
    c=st.tuples(*[st.floats(-1.0, 1.0)] * 3),
    s=st.floats(0.45, 0.7),
    m0=st.floats(0.5, 2.0),
)
def test_nw_mean_property(d, c, s, m0):
    pkt = KGPacket.from_function(_gauss(s, d, c), m0, n=40)
    nw = nw_mean_detail(pkt)
    assert np.allclose(nw.bilinear, d, atol=1e-6)
    assert uncertainty_correlations(pkt).holds()
