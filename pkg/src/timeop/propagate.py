"""Spectral synthesis of time-dependent packets and their density/flux fields.

A massive packet is the superposition

    Psi(x, t) = (2 pi)^(-1/2) sum_k w_k g(k) phi(x, k) exp(-i E(k) t / hbar)

evaluated as a single matrix product.  With the incident-amplitude-one
normalization of ``phi`` this packet has unit norm when ``g`` does.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core_model import (
    Dispersion,
    DispersionKind,
    Grid,
    ScatterSystem,
    SpaceGrid,
    SpectralAmplitude,
    TimeGrid,
    UnitSystem,
    stationary_matrix,
)
from .errors import DomainError, KindError, ShapeError

EPS_CONT = 1e-2
SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class PacketField:
    """Sampled packet on a (time, space) grid; arrays have shape (nt, nx)."""

    space: Grid
    time: Grid
    psi: np.ndarray
    dpsi: np.ndarray
    rho: np.ndarray
    flux: np.ndarray
    dispersion: Dispersion
    s0: np.ndarray | None = None
    sx: np.ndarray | None = None

    @property
    def units(self) -> UnitSystem:
        return self.dispersion.units

    @property
    def x(self) -> np.ndarray:
        return self.space.nodes

    @property
    def t(self) -> np.ndarray:
        return self.time.nodes

    def norm(self) -> np.ndarray:
        """Integral of rho over x at every time node."""
        return self.rho @ self.space.weights

    def centroid(self) -> np.ndarray:
        return (self.rho * self.x) @ self.space.weights / self.norm()

    def x_index(self, x: float) -> int:
        if not self.space.contains(x):
            raise DomainError(f"probe x={x} lies outside the space grid")
        return int(np.argmin(np.abs(self.x - x)))

    def flux_at(self, x: float) -> np.ndarray:
        """j(x, t) at an arbitrary x, linearly interpolated between nodes."""
        if not self.space.contains(x):
            raise DomainError(f"probe x={x} lies outside the space grid")
        return self._interp_columns(self.flux, x)

    def rho_at(self, x: float) -> np.ndarray:
        if not self.space.contains(x):
            raise DomainError(f"probe x={x} lies outside the space grid")
        return self._interp_columns(self.rho, x)

    def _interp_columns(self, values: np.ndarray, x: float) -> np.ndarray:
        i = int(np.clip(np.searchsorted(self.x, x) - 1, 0, self.x.size - 2))
        s = (x - self.x[i]) / (self.x[i + 1] - self.x[i])
        return (1.0 - s) * values[:, i] + s * values[:, i + 1]

    def to_csv(self, path) -> None:
        header = ["x", "t", "re_psi", "im_psi", "rho", "flux"]
        photon = self.s0 is not None
        if photon:
            header += ["s0", "sx"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for it, t in enumerate(self.t):
                for ix, x in enumerate(self.x):
                    row = [x, t, self.psi[it, ix].real, self.psi[it, ix].imag,
                           self.rho[it, ix], self.flux[it, ix]]
                    if photon:
                        row += [self.s0[it, ix], self.sx[it, ix]]
                    w.writerow([f"{v:.12e}" for v in row])


def _as_nodes(grid_or_array) -> np.ndarray:
    if isinstance(grid_or_array, Grid):
        return grid_or_array.nodes
    return np.atleast_1d(np.asarray(grid_or_array, dtype=float))


def synthesize_points(g: SpectralAmplitude, sys: ScatterSystem, x, t):
    """Psi and dPsi/dx on the outer product of arbitrary x and t arrays."""
    if g.dispersion.kind is not DispersionKind.MASSIVE:
        raise KindError("synthesize needs a massive dispersion; use synthesize_photon")
    gk = g.to_wavenumber()
    k = gk.nodes
    x = _as_nodes(x)
    t = _as_nodes(t)
    disp = sys.dispersion
    phi, dphi = stationary_matrix(sys, k, x, derivative=True)
    E = disp.energy(k)
    phase = np.exp(-1j * np.outer(t, E) / sys.units.hbar) * (gk.weights * gk.values)[None, :]
    return phase @ phi / SQRT_2PI, phase @ dphi / SQRT_2PI


def synthesize(g: SpectralAmplitude, sys: ScatterSystem, space: Grid, time: Grid) -> PacketField:
    """Wave packet built from the stationary states of ``sys``."""
    if not isinstance(space, Grid) or not isinstance(time, Grid):
        raise ShapeError("space and time must be Grid instances")
    if g.dispersion.units != sys.units:
        raise ShapeError("amplitude and system use different unit systems")
    psi, dpsi = synthesize_points(g, sys, space, time)
    u = sys.units
    rho = np.abs(psi) ** 2
    flux = (u.hbar / u.mass) * np.imag(np.conj(psi) * dpsi)
    return PacketField(space, time, psi, dpsi, rho, flux, sys.dispersion)


def synthesize_photon(chi: SpectralAmplitude, space: Grid, time: Grid) -> PacketField:
    """One-dimensional photon packet with a single scalar polarization mode.

    The mode function F(x, t) = i (2 pi)^(-1/2) sum_k w chi(k) exp(i k (x - c t))
    supplies equal electric and magnetic amplitudes, from which the energy
    density s0 = (|E|^2 + |H|^2) / (16 pi) and the Poynting flux
    sx = c Re(E* H) / (8 pi) follow.  ``rho`` and ``flux`` are both divided by
    the conserved total energy, so that they are a normalized density and
    its current.
    """
    if chi.dispersion.kind is not DispersionKind.PHOTON:
        raise KindError("synthesize_photon needs a photon dispersion")
    ck = chi.to_wavenumber()
    if np.any(ck.nodes <= 0):
        raise DomainError("photon wavenumbers must be positive")
    c = chi.dispersion.units.c
    x = space.nodes
    t = time.nodes
    k = ck.nodes
    amp = ck.weights * ck.values
    spatial = np.exp(1j * np.outer(k, x))
    temporal = np.exp(-1j * c * np.outer(t, k)) * amp[None, :]
    F = 1j * (temporal @ spatial) / SQRT_2PI
    dF = 1j * (temporal @ (1j * k[:, None] * spatial)) / SQRT_2PI
    Efield = Hfield = F
    s0 = (np.abs(Efield) ** 2 + np.abs(Hfield) ** 2) / (16 * np.pi)
    sx = c * np.real(np.conj(Efield) * Hfield) / (8 * np.pi)
    total = np.sum(ck.weights * np.abs(ck.values) ** 2) / (8 * np.pi)
    if total <= 0:
        raise DomainError("photon amplitude has zero norm")
    return PacketField(space, time, F, dF, s0 / total, sx / total, chi.dispersion, s0, sx)


def flux_split(field: PacketField, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Split j(x, t) into its non-negative and negative parts (zero goes to j+)."""
    j = field.flux_at(x)
    plus = np.where(j >= 0, j, 0.0)
    minus = np.where(j < 0, j, 0.0)
    return plus, minus


def continuity_residual(field: PacketField) -> float:
    """Relative max |d rho/dt + dj/dx| over interior nodes (finite differences)."""
    if not (field.space.is_uniform and field.time.is_uniform):
        raise ShapeError("continuity check needs uniform grids")
    drho = np.gradient(field.rho, field.t, axis=0)
    dj = np.gradient(field.flux, field.x, axis=1)
    res = np.abs(drho + dj)[1:-1, 1:-1]
    scale = max(np.max(np.abs(drho)), np.max(np.abs(dj)), 1e-300)
    return float(np.max(res) / scale)


def packet_tail_fraction(g: SpectralAmplitude, sys: ScatterSystem, x: float, time: Grid) -> float:
    """Fraction of the total |j(x,t)| integral not captured by ``time``.

    The total is estimated on a window three times wider with the same node
    density.
    """
    psi, dpsi = synthesize_points(g, sys, [x], time)
    u = sys.units
    span = time.max - time.min
    wide = TimeGrid.uniform(time.min - span, time.max + span, 3 * time.n - 2)
    psi_w, dpsi_w = synthesize_points(g, sys, [x], wide)
    jw = np.abs((u.hbar / u.mass) * np.imag(np.conj(psi_w) * dpsi_w))[:, 0]
    j = np.abs((u.hbar / u.mass) * np.imag(np.conj(psi) * dpsi))[:, 0]
    total = jw @ wide.weights
    if total == 0:
        return 0.0
    return float(max(0.0, 1.0 - (j @ time.weights) / total))


def expand_time_window(
    g: SpectralAmplitude,
    sys: ScatterSystem,
    probes,
    time: Grid,
    capture: float = 1e-6,
    max_doublings: int = 6,
) -> Grid:
    """Widen a time grid (keeping its node density) until every probe captures
    at least ``1 - capture`` of its flux integral, up to a hard cap."""
    current = time
    for _ in range(max_doublings + 1):
        if all(packet_tail_fraction(g, sys, x, current) <= capture for x in probes):
            return current
        span = current.max - current.min
        current = TimeGrid.uniform(current.min - span / 2, current.max + span / 2, 2 * current.n - 1)
    return current
