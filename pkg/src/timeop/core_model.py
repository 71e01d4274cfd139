"""Shared domain types: units, dispersion relations, grids, spectral amplitudes
and the one-dimensional / radial scattering systems used throughout the package.

All containers are frozen dataclasses holding numpy arrays that are never
modified in place, so they can be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import CoverageError, DomainError, KindError, ShapeError

EPS_NORM = 1e-8
EPS_ODE = 1e-8
EPS_CONV = 1e-4


# ---------------------------------------------------------------------------
# Units and dispersion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants for a calculation (natural units by default)."""

    hbar: float = 1.0
    mass: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "c"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be strictly positive, got {value!r}")

    @classmethod
    def half_mass(cls) -> "UnitSystem":
        """hbar = 1 and 2m = 1, so the kinetic operator is -d^2/dx^2."""
        return cls(hbar=1.0, mass=0.5, c=1.0)


class DispersionKind(str, enum.Enum):
    MASSIVE = "massive"
    PHOTON = "photon"


@dataclass(frozen=True)
class Dispersion:
    """Energy-wavenumber relation E(k) for a massive particle or a photon."""

    kind: DispersionKind = DispersionKind.MASSIVE
    units: UnitSystem = field(default_factory=UnitSystem)

    def energy(self, k):
        k = np.asarray(k, dtype=float)
        u = self.units
        if self.kind is DispersionKind.MASSIVE:
            return (u.hbar * k) ** 2 / (2.0 * u.mass)
        return u.hbar * u.c * np.abs(k)

    def wavenumber(self, E):
        """Positive branch k(E)."""
        E = np.asarray(E, dtype=float)
        u = self.units
        if self.kind is DispersionKind.MASSIVE:
            return np.sqrt(2.0 * u.mass * E) / u.hbar
        return E / (u.hbar * u.c)

    def dE_dk(self, k):
        k = np.asarray(k, dtype=float)
        u = self.units
        if self.kind is DispersionKind.MASSIVE:
            return u.hbar**2 * k / u.mass
        return np.full_like(k, u.hbar * u.c) * np.sign(k)

    def group_velocity_k(self, k):
        return self.dE_dk(k) / self.units.hbar

    def group_velocity(self, E):
        """v(E) = (1/hbar) dE/dk evaluated on the positive branch."""
        return self.group_velocity_k(self.wavenumber(E))


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Sample axis with quadrature weights.

    ``rule`` is either ``"trapezoid"`` (uniform nodes, the default) or
    ``"gauss"`` (Gauss-Legendre nodes mapped onto ``[min, max]``).
    """

    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "trapezoid"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ShapeError("a grid needs at least two nodes")
        if weights.shape != nodes.shape:
            raise ShapeError("weights and nodes differ in shape")
        if np.any(np.diff(nodes) <= 0):
            raise ShapeError("grid nodes must be strictly increasing")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        self._validate()

    def _validate(self):
        pass

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int):
        if n < 2 or not hi > lo:
            raise ShapeError(f"invalid uniform grid [{lo}, {hi}] with n={n}")
        nodes = np.linspace(lo, hi, int(n))
        h = nodes[1] - nodes[0]
        weights = np.full(nodes.size, h)
        weights[0] = weights[-1] = 0.5 * h
        return cls(nodes, weights, "trapezoid")

    @classmethod
    def gauss_legendre(cls, lo: float, hi: float, n: int):
        if n < 2 or not hi > lo:
            raise ShapeError(f"invalid Gauss-Legendre grid [{lo}, {hi}] with n={n}")
        x, w = np.polynomial.legendre.leggauss(int(n))
        half = 0.5 * (hi - lo)
        return cls(lo + half * (x + 1.0), half * w, "gauss")

    @classmethod
    def build(cls, lo: float, hi: float, n: int, rule: str = "trapezoid"):
        if rule == "trapezoid":
            return cls.uniform(lo, hi, n)
        if rule == "gauss":
            return cls.gauss_legendre(lo, hi, n)
        raise DomainError(f"unknown quadrature rule {rule!r}")

    @property
    def min(self) -> float:
        return float(self.nodes[0])

    @property
    def max(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.nodes)
        return bool(np.allclose(d, d[0], rtol=1e-10, atol=0.0))

    @property
    def spacing(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def integrate(self, values, axis: int = -1):
        values = np.moveaxis(np.asarray(values), axis, -1)
        if values.shape[-1] != self.n:
            raise ShapeError("integrand length does not match the grid")
        return values @ self.weights

    def refined(self):
        """Same interval with (roughly) twice the resolution."""
        return type(self).build(self.min, self.max, 2 * self.n - 1, self.rule)

    def contains(self, x: float) -> bool:
        return self.min <= x <= self.max


class SpaceGrid(Grid):
    pass


class TimeGrid(Grid):
    pass


class WavenumberGrid(Grid):
    pass


class EnergyGrid(Grid):
    """Energy axis; the point E = 0 is excluded by construction."""

    def _validate(self):
        if self.nodes[0] <= 0:
            raise DomainError("EnergyGrid.min must be strictly positive")


# ---------------------------------------------------------------------------
# Spectral amplitudes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralAmplitude:
    """Complex weights g on a wavenumber ("k") or energy ("E") grid."""

    grid: Grid
    values: np.ndarray
    rep: str = "k"
    dispersion: Dispersion = field(default_factory=Dispersion)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.nodes.shape:
            raise ShapeError("amplitude values do not match the grid")
        if not np.all(np.isfinite(values)):
            raise DomainError("amplitude values must be finite")
        if self.rep not in ("k", "E"):
            raise DomainError(f"unknown representation {self.rep!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def normalized(self) -> "SpectralAmplitude":
        n = self.norm()
        if n == 0:
            raise DomainError("cannot normalize a zero amplitude")
        return SpectralAmplitude(self.grid, self.values / n, self.rep, self.dispersion)

    def is_normalized(self, tol: float = EPS_NORM) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def to_energy(self) -> "SpectralAmplitude":
        """Change variables k -> E with |g_E|^2 dE = |g_k|^2 dk (k > 0 only)."""
        if self.rep == "E":
            return self
        k = self.nodes
        if np.any(k <= 0):
            raise DomainError("energy representation needs a strictly positive k grid")
        jac = self.dispersion.dE_dk(k)
        E = self.dispersion.energy(k)
        grid = EnergyGrid(E, self.weights * jac, self.grid.rule)
        return SpectralAmplitude(grid, self.values / np.sqrt(jac), "E", self.dispersion)

    def to_wavenumber(self) -> "SpectralAmplitude":
        if self.rep == "k":
            return self
        E = self.nodes
        k = self.dispersion.wavenumber(E)
        jac = self.dispersion.dE_dk(k)
        grid = WavenumberGrid(k, self.weights / jac, self.grid.rule)
        return SpectralAmplitude(grid, self.values * np.sqrt(jac), "k", self.dispersion)

    def mean_wavenumber(self) -> float:
        g = self.to_wavenumber()
        p = np.abs(g.values) ** 2 * g.weights
        return float(np.sum(p * g.nodes) / np.sum(p))


def make_gaussian_amplitude(
    kbar: float,
    a: float,
    grid: Grid,
    x0: float = 0.0,
    dispersion: Dispersion | None = None,
    min_coverage: float = 4.0,
) -> SpectralAmplitude:
    """Normalized Gaussian g(k) = A exp(-a^2 (k - kbar)^2) exp(-i k x0).

    The factor exp(-i k x0) places the packet centroid at x0 at t = 0.  The
    density |g|^2 has standard deviation 1/(2a); the grid must reach at least
    ``min_coverage`` of those on both sides of ``kbar``.
    """
    if a <= 0:
        raise DomainError("Gaussian width parameter a must be positive")
    sigma = 1.0 / (2.0 * a)
    lo, hi = grid.min, grid.max
    coverage = min(kbar - lo, hi - kbar) / sigma
    if coverage < min_coverage:
        raise CoverageError(
            f"grid [{lo:g}, {hi:g}] covers only {coverage:.2f} sigma around kbar={kbar:g}"
        )
    k = grid.nodes
    values = np.exp(-(a**2) * (k - kbar) ** 2) * np.exp(-1j * k * x0)
    amp = SpectralAmplitude(grid, values, "k", dispersion or Dispersion())
    return amp.normalized()


def single_node_amplitude(k: float, dispersion: Dispersion | None = None) -> SpectralAmplitude:
    """A one-wavenumber (plane wave) amplitude represented on a two-node grid."""
    grid = WavenumberGrid(np.array([k, k + 1.0]), np.array([1.0, 0.0]))
    return SpectralAmplitude(grid, np.array([1.0, 0.0]), "k", dispersion or Dispersion())


# ---------------------------------------------------------------------------
# Scattering systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Free:
    pass


@dataclass(frozen=True)
class RectBarrier1D:
    V0: float
    x_left: float
    x_right: float

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise DomainError("barrier width must be positive")

    @property
    def width(self) -> float:
        return self.x_right - self.x_left

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.x_left) & (x <= self.x_right), self.V0, 0.0)


@dataclass(frozen=True)
class SphericalWell:
    """Attractive well of depth U0 (> 0) and radius a_radius: V = -U0 for r < a."""

    U0: float
    a_radius: float

    def __post_init__(self):
        if self.a_radius <= 0:
            raise DomainError("well radius must be positive")
        if not np.isfinite(self.U0):
            raise DomainError("well depth must be finite")


Potential = Union[Free, RectBarrier1D, SphericalWell]


@dataclass(frozen=True)
class ScatterSystem:
    potential: Potential = field(default_factory=Free)
    units: UnitSystem = field(default_factory=UnitSystem)

    @property
    def dispersion(self) -> Dispersion:
        return Dispersion(DispersionKind.MASSIVE, self.units)


@dataclass(frozen=True)
class StationaryCoefficients:
    """Plane-wave coefficients of the left-incident barrier solution.

    Left:   exp(ikx) + r exp(-ikx)
    Inside: A exp(iqx) + B exp(-iqx),  q = sqrt(2 mu (E - V0)) / hbar (complex)
    Right:  t exp(ikx)
    """

    k: np.ndarray
    q: np.ndarray
    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    t: np.ndarray

    @property
    def transmission(self):
        return np.abs(self.t) ** 2

    @property
    def reflection(self):
        return np.abs(self.r) ** 2


def barrier_coefficients(barrier: RectBarrier1D, k, units: UnitSystem) -> StationaryCoefficients:
    """Solve the interface matching conditions, vectorized over k > 0."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    E = (units.hbar * k) ** 2 / (2 * units.mass)
    q = np.sqrt(2 * units.mass * (E - barrier.V0) + 0j) / units.hbar
    q = np.where(np.abs(q) < 1e-12, 1e-12 + 0j, q)
    x1, x2 = barrier.x_left, barrier.x_right
    # Right interface: A e^{iq x2} + B e^{-iq x2} = t e^{ik x2}, q(A e^{iq x2} - B e^{-iq x2}) = k t e^{ik x2}
    # -> A = t e^{i(k-q)x2}(q+k)/(2q),  B = t e^{i(k+q)x2}(q-k)/(2q)
    Ap = np.exp(1j * (k - q) * x2) * (q + k) / (2 * q)
    Bp = np.exp(1j * (k + q) * x2) * (q - k) / (2 * q)
    # Left interface: e^{ik x1} + r e^{-ik x1} = A e^{iq x1} + B e^{-iq x1}
    #                 k(e^{ik x1} - r e^{-ik x1}) = q(A e^{iq x1} - B e^{-iq x1})
    u = Ap * np.exp(1j * q * x1) + Bp * np.exp(-1j * q * x1)
    v = q * (Ap * np.exp(1j * q * x1) - Bp * np.exp(-1j * q * x1))
    # adding: 2k e^{ik x1} = t (k u + v)
    t = 2 * k * np.exp(1j * k * x1) / (k * u + v)
    r = (t * u - np.exp(1j * k * x1)) * np.exp(1j * k * x1)
    return StationaryCoefficients(k, q, r, t * Ap, t * Bp, t)


def stationary_matrix(sys: ScatterSystem, k, x, derivative: bool = False):
    """phi(x, k) sampled as an array of shape (len(k), len(x)).

    The incident amplitude is one in every case, so the free and barrier
    solutions share the delta(k - k') 2 pi normalization.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pot = sys.potential
    kk = k[:, None]
    xx = x[None, :]
    if isinstance(pot, Free):
        phi = np.exp(1j * kk * xx)
        return (phi, 1j * kk * phi) if derivative else phi
    if isinstance(pot, RectBarrier1D):
        if np.any(k <= 0):
            raise DomainError("barrier stationary states need k > 0")
        c = barrier_coefficients(pot, k, sys.units)
        left = xx < pot.x_left
        right = xx > pot.x_right
        q = c.q[:, None]
        ein, ein_m = np.exp(1j * kk * xx), np.exp(-1j * kk * xx)
        qin, qin_m = np.exp(1j * q * xx), np.exp(-1j * q * xx)
        r, A, B, t = (c.r[:, None], c.A[:, None], c.B[:, None], c.t[:, None])
        phi = np.where(left, ein + r * ein_m, np.where(right, t * ein, A * qin + B * qin_m))
        if not derivative:
            return phi
        dphi = np.where(
            left,
            1j * kk * (ein - r * ein_m),
            np.where(right, 1j * kk * t * ein, 1j * q * (A * qin - B * qin_m)),
        )
        return phi, dphi
    raise KindError("stationary_matrix handles only one-dimensional systems")


def stationary_state(sys: ScatterSystem, E: float, space: Grid | np.ndarray) -> np.ndarray:
    """Stationary solution phi(x, E) on the space grid (left incidence)."""
    if E <= 0:
        raise DomainError("stationary states are defined for E > 0 only")
    x = space.nodes if isinstance(space, Grid) else np.asarray(space, dtype=float)
    k = sys.dispersion.wavenumber(E)
    return stationary_matrix(sys, [k], x)[0]


def stationary_residual(sys: ScatterSystem, E: float, space: Grid | np.ndarray) -> float:
    """Max residual of the stationary equation and of the interface matching.

    In each constant-potential region the solution is a combination of
    exponentials whose second derivative is known exactly, so the residual
    of -hbar^2/(2 mu) phi'' + V phi - E phi is evaluated from the local
    wavenumber.  Continuity of phi and phi' at the barrier edges is checked
    by evaluating the adjacent region formulas at the interface.
    """
    x = space.nodes if isinstance(space, Grid) else np.asarray(space, dtype=float)
    u = sys.units
    k = sys.dispersion.wavenumber(E)
    pot = sys.potential
    phi = stationary_state(sys, E, x)
    if isinstance(pot, Free):
        V = np.zeros_like(x)
        local = np.full(x.shape, k + 0j)
    elif isinstance(pot, RectBarrier1D):
        V = pot.potential(x)
        q = np.sqrt(2 * u.mass * (E - pot.V0) + 0j) / u.hbar
        local = np.where(V > 0, q, k + 0j)
    else:
        raise KindError("residual check handles only one-dimensional systems")
    second = -(local**2) * phi
    res = -(u.hbar**2) / (2 * u.mass) * second + (V - E) * phi
    scale = max(E, 1.0) * max(np.max(np.abs(phi)), 1.0)
    worst = float(np.max(np.abs(res)) / scale)
    if isinstance(pot, RectBarrier1D):
        c = barrier_coefficients(pot, [k], u)
        q, r, A, B, t = c.q[0], c.r[0], c.A[0], c.B[0], c.t[0]
        for xe, outer, douter in (
            (pot.x_left,
             lambda y: np.exp(1j * k * y) + r * np.exp(-1j * k * y),
             lambda y: 1j * k * (np.exp(1j * k * y) - r * np.exp(-1j * k * y))),
            (pot.x_right,
             lambda y: t * np.exp(1j * k * y),
             lambda y: 1j * k * t * np.exp(1j * k * y)),
        ):
            inner = A * np.exp(1j * q * xe) + B * np.exp(-1j * q * xe)
            dinner = 1j * q * (A * np.exp(1j * q * xe) - B * np.exp(-1j * q * xe))
            worst = max(worst, abs(inner - outer(xe)), abs(dinner - douter(xe)) / max(k, 1.0))
    return worst


def transmission_probability(sys: ScatterSystem, E: float) -> tuple[float, float]:
    """(|T|^2, |R|^2) at energy E for a one-dimensional system."""
    if E <= 0:
        raise DomainError("E must be positive")
    pot = sys.potential
    if isinstance(pot, Free):
        return 1.0, 0.0
    if isinstance(pot, RectBarrier1D):
        c = barrier_coefficients(pot, [sys.dispersion.wavenumber(E)], sys.units)
        return float(c.transmission[0]), float(c.reflection[0])
    raise KindError("transmission is defined for one-dimensional systems")
