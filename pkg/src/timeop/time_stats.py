"""Time statistics of one-dimensional packets.

The flux through a point, split by direction, is read as a distribution of
passage times.  From it follow mean passage times, traversal and reflection
durations, dwell times and the time-energy uncertainty product.  The same
means are also available in the energy representation, where time acts as
-i hbar d/dE.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core_model import (
    EPS_NORM,
    Free,
    Grid,
    RectBarrier1D,
    ScatterSystem,
    SpectralAmplitude,
    UnitSystem,
    stationary_matrix,
)
from .errors import DomainError, EmptyFluxError, ShapeError
from .propagate import PacketField, flux_split

EPS_DWELL = 1e-2
EPS_U = 1e-6
FLUX_FLOOR = 1e-12


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    higher: list = field(default_factory=list)
    probabilistic: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TimeDistribution:
    """Normalized weight over the nodes of a time grid."""

    time: Grid
    weights: np.ndarray
    kind: str
    probe: tuple

    @property
    def t(self) -> np.ndarray:
        return self.time.nodes

    def total(self) -> float:
        return float(self.weights @ self.time.weights)

    def moment(self, n: int) -> float:
        return float((self.weights * self.t**n) @ self.time.weights)

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        m = self.mean()
        return float((self.weights * (self.t - m) ** 2) @ self.time.weights)

    def report(self, max_order: int = 4) -> MomentReport:
        var = self.variance()
        return MomentReport(
            mean=self.mean(),
            variance=var,
            higher=[self.moment(n) for n in range(2, max_order + 1)],
            probabilistic=self.kind != "total",
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "weight"])
            for t, v in zip(self.t, self.weights):
                w.writerow([f"{t:.12e}", f"{v:.12e}"])


def _directed_flux(field: PacketField, x: float, sign: str) -> np.ndarray:
    if sign in ("+", "plus"):
        return flux_split(field, x)[0]
    if sign in ("-", "minus"):
        return -flux_split(field, x)[1]
    if sign == "total":
        return field.flux_at(x)
    raise DomainError(f"sign must be '+', '-' or 'total', got {sign!r}")


def passage_distribution(field: PacketField, x: float, sign: str = "+") -> TimeDistribution:
    """Normalized passage-time distribution W(t, x) for the given flux direction."""
    j = _directed_flux(field, x, sign)
    total = j @ field.time.weights
    scale = max(float(np.max(np.abs(field.flux))), 1e-300)
    if abs(total) <= FLUX_FLOOR * max(scale * (field.time.max - field.time.min), 1.0):
        raise EmptyFluxError(f"no {sign} flux through x={x}")
    kind = {"+": "plus", "plus": "plus", "-": "minus", "minus": "minus"}.get(sign, "total")
    return TimeDistribution(field.time, j / total, kind, (float(x),))


def mean_passage_time(field: PacketField, x: float, sign: str = "+") -> MomentReport:
    return passage_distribution(field, x, sign).report()


def traversal_time(field: PacketField, x_i: float, x_f: float) -> float:
    """Difference of mean rightward passage times at x_f and x_i."""
    if x_f < x_i:
        raise DomainError("traversal needs x_i <= x_f")
    if x_f == x_i:
        # evaluate once so that an empty flux is still reported
        mean_passage_time(field, x_i, "+")
        return 0.0
    return mean_passage_time(field, x_f, "+").mean - mean_passage_time(field, x_i, "+").mean


def reflection_time(field: PacketField, x_i: float, x_f: float) -> float:
    """Mean leftward passage at x_f minus mean rightward passage at x_i."""
    if x_f > x_i:
        raise DomainError("reflection needs x_f <= x_i")
    return mean_passage_time(field, x_f, "-").mean - mean_passage_time(field, x_i, "+").mean


def _interval_integral(field: PacketField, x_i: float, x_f: float) -> np.ndarray:
    """Integral of rho over [x_i, x_f] at every time node (trapezoid)."""
    x = field.x
    inside = (x > x_i) & (x < x_f)
    xs = np.concatenate([[x_i], x[inside], [x_f]])
    cols = np.column_stack([field.rho_at(x_i), field.rho[:, inside], field.rho_at(x_f)])
    return np.trapezoid(cols, xs, axis=1)


def dwell_time(field: PacketField, x_i: float, x_f: float) -> tuple[float, float]:
    """Dwell time in the interval [x_i, x_f] in two forms.

    Form A integrates the density over the interval and over time; form B
    uses the first time-moments of the net flux at both ends.  Both are
    divided by the incident (rightward) flux integral at x_i.
    """
    if x_f < x_i:
        raise DomainError("dwell interval needs x_i <= x_f")
    jp = flux_split(field, x_i)[0]
    w = field.time.weights
    incident = jp @ w
    if incident <= FLUX_FLOOR:
        raise EmptyFluxError(f"no incident flux at x={x_i}")
    if x_f == x_i:
        return 0.0, 0.0
    form_a = float(_interval_integral(field, x_i, x_f) @ w / incident)
    t = field.t
    form_b = float(((t * field.flux_at(x_f)) @ w - (t * field.flux_at(x_i)) @ w) / incident)
    return form_a, form_b


# ---------------------------------------------------------------------------
# Energy representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyMean:
    mean: float
    alternative_mean: float
    alternative_imag: float


def _energy_rep_profile(g: SpectralAmplitude, sys: ScatterSystem, x: float):
    """G(x, E) on the (uniform) wavenumber nodes of g.

    G is the amplitude whose energy integral against exp(-iEt/hbar) gives
    Psi(x, t); with Psi built from g(k) dk this is G = g(k) phi(x, k) dk/dE.
    """
    gk = g.to_wavenumber()
    k = gk.nodes
    if np.any(k <= 0):
        raise DomainError("energy representation needs k > 0")
    if not gk.grid.is_uniform:
        raise ShapeError("energy-representation derivatives need a uniform k grid")
    disp = sys.dispersion
    dEdk = disp.dE_dk(k)
    gE = gk.values / dEdk
    phi = stationary_matrix(sys, k, [x])[:, 0]
    return k, gk.weights * dEdk, gE * phi, disp.group_velocity_k(k), dEdk


def _d_dk(values, k):
    """Fourth-order centered difference on a uniform grid, second order at the edges."""
    h = k[1] - k[0]
    out = np.gradient(values, h, edge_order=2)
    if values.size >= 5:
        out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
    return out


def _t_hat(values, k, dEdk, hbar):
    return -1j * hbar * _d_dk(values, k) / dEdk


def energy_rep_mean(g: SpectralAmplitude, sys: ScatterSystem, x: float) -> EnergyMean:
    """Mean passage time from the symmetrized energy-representation integrand.

    mean = Re int (1/2)[G* t(vG) + (vG)* t G] dE / int v|G|^2 dE with
    t = -i hbar d/dE.  The other ordering, int (vG)* t G dE, has the same real
    part up to boundary terms; its imaginary part is reported as a diagnostic.
    """
    hbar = sys.units.hbar
    k, wE, G, v, dEdk = _energy_rep_profile(g, sys, x)
    vG = v * G
    t_vG = _t_hat(vG, k, dEdk, hbar)
    t_G = _t_hat(G, k, dEdk, hbar)
    den = np.sum(wE * v * np.abs(G) ** 2)
    if den <= 0:
        raise EmptyFluxError("energy-representation flux vanishes")
    sym = 0.5 * (np.conj(G) * t_vG + np.conj(vG) * t_G)
    alt = np.conj(vG) * t_G
    return EnergyMean(
        mean=float(np.real(np.sum(wE * sym)) / den),
        alternative_mean=float(np.real(np.sum(wE * alt)) / den),
        alternative_imag=float(np.imag(np.sum(wE * alt)) / den),
    )


def stationary_phase_time(sys: ScatterSystem, E: float, x: float, h: float = 1e-5) -> float:
    """hbar d arg(phi(x, E)) / dE by a centered difference (one-node limit)."""
    disp = sys.dispersion
    ks = disp.wavenumber(np.array([E - h, E + h]))
    phi = stationary_matrix(sys, ks, [x])[:, 0]
    dphase = np.angle(phi[1] / phi[0])
    return float(sys.units.hbar * dphase / (2 * h))


def bilinear_mean_time(g: SpectralAmplitude, x: float, sys: ScatterSystem | None = None) -> float:
    """Mean time from the bilinear form hbar Im(u*, du/dE) with u = sqrt(v) G.

    For an amplitude with a single nonzero node this reduces to the phase
    time hbar d arg(g phi)/dE at that node.
    """
    sys = sys or ScatterSystem(Free(), g.dispersion.units)
    gk = g.to_wavenumber()
    nonzero = np.flatnonzero(np.abs(gk.values) * gk.weights > 0)
    if nonzero.size == 1:
        E = float(sys.dispersion.energy(gk.nodes[nonzero[0]]))
        return stationary_phase_time(sys, E, x)
    hbar = sys.units.hbar
    k, wE, G, v, dEdk = _energy_rep_profile(g, sys, x)
    u = np.sqrt(v) * G
    du = _d_dk(u, k) / dEdk
    den = np.sum(wE * np.abs(u) ** 2)
    return float(hbar * np.sum(wE * np.imag(np.conj(u) * du)) / den)


# ---------------------------------------------------------------------------
# Uncertainty and the hamiltonian-form time operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyResult:
    delta_E: float
    delta_t: float
    product: float

    def satisfies(self, hbar: float = 1.0, slack: float = EPS_U) -> bool:
        return self.product >= hbar / 2 - slack


def passing_energy_density(g: SpectralAmplitude, sys: ScatterSystem, dist: TimeDistribution):
    """Energy nodes, quadrature weights and flux-weighted energy density of the
    particles counted by ``dist`` (transmitted or reflected channel)."""
    gk = g.to_wavenumber()
    k = gk.nodes
    disp = sys.dispersion
    dEdk = disp.dE_dk(k)
    E = disp.energy(k)
    # v |G|^2 dE with G = g(k) dk/dE reduces to |g(k)|^2 dk / hbar
    dens = np.abs(gk.values) ** 2 / dEdk
    pot = sys.potential
    if isinstance(pot, RectBarrier1D):
        from .core_model import barrier_coefficients

        c = barrier_coefficients(pot, k, sys.units)
        x = dist.probe[0]
        if x > pot.x_right:
            dens = dens * c.transmission
        elif dist.kind == "minus":
            dens = dens * c.reflection
    return E, gk.weights * dEdk, dens


def uncertainty_product(g: SpectralAmplitude, dist: TimeDistribution,
                        sys: ScatterSystem | None = None) -> UncertaintyResult:
    """Delta E from the flux-weighted energy distribution, Delta t from ``dist``."""
    if abs(dist.total() - 1.0) > 1e-6 and dist.kind != "total":
        raise DomainError("time distribution is not normalized")
    sys = sys or ScatterSystem(Free(), g.dispersion.units)
    E, w, dens = passing_energy_density(g, sys, dist)
    p = w * dens
    p = p / np.sum(p)
    Em = np.sum(p * E)
    dE = float(np.sqrt(np.sum(p * (E - Em) ** 2)))
    dt = float(np.sqrt(max(dist.variance(), 0.0)))
    return UncertaintyResult(dE, dt, dE * dt)


def apply_time_operator(f, p: float, units: UnitSystem, h: float | None = None) -> complex:
    """Momentum-representation time operator applied to a callable f(p).

    T = -(mu/2)(p^-1 X + X p^-1 + i hbar p^-2) with X = i hbar d/dp reduces to
    -i hbar mu f'(p)/p; the derivative uses a five-point stencil.
    """
    if p == 0:
        raise DomainError("time operator is singular at p = 0")
    h = h if h is not None else 1e-3 * max(abs(p), 1.0)
    d = (-f(p + 2 * h) + 8 * f(p + h) - 8 * f(p - h) + f(p - 2 * h)) / (12 * h)
    return -1j * units.hbar * units.mass * d / p


def tq_eigencheck(k: float, x_probe, units: UnitSystem | None = None) -> float:
    """Max relative deviation of T exp(ikx) from (x/v) exp(ikx) over the probes.

    Deviations are relative to |x/v| except at x = 0, where they are absolute.
    """
    units = units or UnitSystem()
    if k <= 0:
        raise DomainError("eigencheck needs k > 0")
    p = units.hbar * k
    v = p / units.mass
    worst = 0.0
    for x in np.atleast_1d(np.asarray(x_probe, dtype=float)):
        f = lambda q, x=x: np.exp(1j * q * x / units.hbar)
        h = 1e-3 * max(p, 1.0)
        if x != 0.0:
            h = min(h, 0.02 * units.hbar / abs(x))
        got = apply_time_operator(f, p, units, h=h)
        want = (x / v) * f(p)
        dev = abs(got - want)
        worst = max(worst, dev if x == 0.0 else dev / abs(want))
    return float(worst)


def moments_json(reports: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: v.to_dict() for k, v in reports.items()}, fh, indent=2, sort_keys=True)
