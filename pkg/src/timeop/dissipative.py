"""First-order successive approximation for a dissipative Schrodinger equation.

The time-dependent potential is V(x, t) = V0(x) + gamma W_A(x, t) with the
Albrecht term W_A = <p>(x - <x>).  Writing the packet as a Fourier integral
over energies in [0, E_cut] turns the equation into a stationary one whose
dissipative source couples five energies through E'' = E + E1 - E2 + E3 - E4.
With phi = phi0 + gamma phi1 the order-gamma equation is

    (-d^2/dx^2 + V0 - E_star) phi1 = i S[phi0](x) / g(E_star),

where S is the sextuple integral over (x1, x2, E1..E4).  Units are
hbar = 1, 2m = 1 throughout.

Everything is discretized on one uniform x grid with the three-point
Laplacian, and the energy axis uses midpoint nodes E_i = (i + 1/2) h.  On
that lattice the combination E1 - E2 + E3 - E4 only takes the values m h, so
the six-fold tensor sum factorizes into two-energy kernels followed by a
discrete convolution; the result is identical to the brute-force tensor
quadrature on the same nodes.  Base solutions phi0(E, x) are exact solutions
of the discrete equation with scattering boundary rows (incident from the
left), so the gamma^0 residual is at round-off level.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .core_model import EPS_ODE, EnergyGrid, SpaceGrid
from .errors import (
    DivisionGuardError,
    DomainError,
    NormalizationError,
    ShapeError,
    SolvabilityError,
)
from .propagate import PacketField

G_FLOOR = 1e-10
EPS_SOLV = 1e-8


# ---------------------------------------------------------------------------
# Albrecht term
# ---------------------------------------------------------------------------


def albrecht_term(field_: PacketField, time_index: int = 0) -> np.ndarray:
    """W_A(x) = <p>(x - <x>) from the packet at one time node (hbar = 1)."""
    psi = field_.psi[time_index]
    dpsi = field_.dpsi[time_index]
    w = field_.space.weights
    norm = float(np.sum(w * np.abs(psi) ** 2))
    if norm <= 0:
        raise NormalizationError("cannot average over a zero-norm field")
    x = field_.x
    mean_x = float(np.sum(w * x * np.abs(psi) ** 2) / norm)
    mean_p = float(field_.units.hbar * np.sum(w * np.imag(np.conj(psi) * dpsi)) / norm)
    return mean_p * (x - mean_x)


def albrecht_parameters(field_: PacketField, time_index: int = 0) -> tuple[float, float]:
    """(<p>, <x>) as used by :func:`albrecht_term`."""
    W = albrecht_term(field_, time_index)
    x = field_.x
    slope = (W[-1] - W[0]) / (x[-1] - x[0])
    root = x[0] - W[0] / slope if slope != 0 else float(np.nan)
    return float(slope), float(root)


# ---------------------------------------------------------------------------
# scenario and discrete operators
# ---------------------------------------------------------------------------


def midpoint_energy_grid(E_cut: float, n: int) -> EnergyGrid:
    if E_cut <= 0 or n < 2:
        raise DomainError("need E_cut > 0 and at least two energy nodes")
    h = E_cut / n
    nodes = (np.arange(n) + 0.5) * h
    return EnergyGrid(nodes, np.full(n, h), "midpoint")


@dataclass(frozen=True)
class DissipationScenario:
    """Inputs of the order-gamma problem.

    ``g`` is a callable amplitude on energies; it is treated as zero outside
    [0, E_cut] and rescaled at construction so that sum w |g|^2 = 1 on the
    energy grid.  ``boundary`` is ``"outgoing"`` (scattering base states) or
    ``"dirichlet"`` (a box, for bound base states).  ``family(E, x)``, when
    given, replaces the discrete scattering states as the base solutions.
    """

    space: SpaceGrid
    V0: np.ndarray
    gamma: float
    energy: EnergyGrid
    g: Callable
    E_star: float
    E_cut: float
    boundary: str = "outgoing"
    g_scale: float = 1.0
    family: Callable | None = None

    @classmethod
    def build(cls, space: SpaceGrid, V0, gamma: float, E_cut: float, n_energy: int,
              g: Callable, E_star: float, boundary: str = "outgoing",
              family: Callable | None = None):
        if gamma < 0:
            raise DomainError("gamma must be non-negative")
        if not 0 < E_star < E_cut:
            raise DomainError("E_star must lie inside (0, E_cut)")
        if not space.is_uniform:
            raise ShapeError("the dissipative solver needs a uniform space grid")
        V = np.asarray(V0(space.nodes) if callable(V0) else V0, dtype=float)
        if V.shape != space.nodes.shape:
            raise ShapeError("V0 must be sampled on the space grid")
        if boundary not in ("outgoing", "dirichlet"):
            raise DomainError(f"unknown boundary type {boundary!r}")
        egrid = midpoint_energy_grid(E_cut, n_energy)
        norm = float(np.sum(egrid.weights * np.abs(g(egrid.nodes)) ** 2))
        if norm <= 0:
            raise NormalizationError("spectral amplitude vanishes on the energy grid")
        V.flags.writeable = False
        return cls(space, V, float(gamma), egrid, g, float(E_star), float(E_cut),
                   boundary, 1.0 / np.sqrt(norm), family)

    @property
    def h_energy(self) -> float:
        return float(self.energy.weights[0])

    def amplitude(self, E) -> np.ndarray:
        E = np.asarray(E, dtype=float)
        inside = (E > 0) & (E <= self.E_cut * (1 + 1e-12))
        safe = np.where(inside, E, self.energy.nodes[0])
        return np.where(inside, self.g_scale * np.asarray(self.g(safe), dtype=complex), 0.0)

    def with_gamma(self, gamma: float) -> "DissipationScenario":
        return DissipationScenario(self.space, self.V0, float(gamma), self.energy, self.g,
                                   self.E_star, self.E_cut, self.boundary, self.g_scale,
                                   self.family)

    def refined_energy(self) -> "DissipationScenario":
        """Same scenario with twice as many energy nodes."""
        egrid = midpoint_energy_grid(self.E_cut, 2 * self.energy.n)
        norm = float(np.sum(egrid.weights * np.abs(self.g(egrid.nodes)) ** 2))
        return DissipationScenario(self.space, self.V0, self.gamma, egrid, self.g,
                                   self.E_star, self.E_cut, self.boundary, 1.0 / np.sqrt(norm),
                                   self.family)


def _dx(scn) -> float:
    return float(scn.space.nodes[1] - scn.space.nodes[0])


def apply_operator(scn: DissipationScenario, phi: np.ndarray, E: float) -> np.ndarray:
    """(-D2 + V0 - E) phi on interior nodes; boundary entries are zero."""
    h = _dx(scn)
    out = np.zeros_like(phi, dtype=complex)
    out[1:-1] = (-(phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
                 + (scn.V0[1:-1] - E) * phi[1:-1])
    return out


def _edge_phase(scn, E: float, V_edge: float) -> complex:
    """exp(i kappa h) for the discrete free wave at energy E above V_edge."""
    h = _dx(scn)
    c = 1.0 - 0.5 * h**2 * (E - V_edge)
    if not -1.0 < c < 1.0:
        raise DomainError(f"E={E} is not propagating on the x grid at the boundary")
    return complex(np.exp(1j * np.arccos(c)))


def _banded_system(scn, E: float):
    """Banded matrix (upper, main, lower rows) of the discrete problem."""
    n = scn.space.n
    h = _dx(scn)
    ab = np.zeros((3, n), complex)
    ab[1, 1:-1] = 2 / h**2 + scn.V0[1:-1] - E
    ab[0, 2:] = -1 / h**2
    ab[2, :-2] = -1 / h**2
    if scn.boundary == "outgoing":
        eL = _edge_phase(scn, E, scn.V0[0])
        eR = _edge_phase(scn, E, scn.V0[-1])
        ab[1, 0], ab[0, 1] = 1.0, -eL
        ab[1, -1], ab[2, -2] = 1.0, -eR
    else:
        ab[1, 0], ab[0, 1] = 1.0, 0.0
        ab[1, -1], ab[2, -2] = 1.0, 0.0
    return ab


def base_state(scn: DissipationScenario, E: float) -> np.ndarray:
    """phi0(E, x): discrete scattering state with unit incident amplitude."""
    if scn.family is not None:
        return np.asarray(scn.family(E, scn.space.nodes), dtype=complex)
    if scn.boundary != "outgoing":
        raise DomainError("base-state families need outgoing boundaries")
    ab = _banded_system(scn, E)
    eL = _edge_phase(scn, E, scn.V0[0])
    x0 = scn.space.nodes[0]
    kappa = np.angle(eL) / _dx(scn)
    rhs = np.zeros(scn.space.n, complex)
    rhs[0] = np.exp(1j * kappa * x0) * (1 - eL**2)
    return linalg.solve_banded((1, 1), ab, rhs)


def discrete_derivative(scn, phi: np.ndarray) -> np.ndarray:
    return np.gradient(phi, _dx(scn), axis=-1)


class _Family:
    """Cache of g(E) phi(E, x) and its derivative over lattice energies."""

    def __init__(self, scn: DissipationScenario, correction: dict | None = None, gamma: float = 0.0):
        self.scn = scn
        self.cache: dict = {}
        self.correction = correction or {}
        self.gamma = gamma

    @staticmethod
    def key(E: float) -> float:
        return round(float(E), 11)

    def get(self, E: float):
        key = self.key(E)
        if key not in self.cache:
            gE = complex(self.scn.amplitude(E))
            if gE == 0:
                self.cache[key] = None
            else:
                u = gE * base_state(self.scn, E)
                if self.gamma and key in self.correction:
                    u = u + self.gamma * self.correction[key]
                self.cache[key] = (u, discrete_derivative(self.scn, u))
        return self.cache[key]


def _kernels(scn: DissipationScenario, fam: _Family):
    """Lattice coefficients CN_m, CM_m of the (x1, x2, E1..E4) sums."""
    E = scn.energy.nodes
    w = scn.energy.weights
    wx = scn.space.weights
    x = scn.space.nodes
    n = E.size
    U = np.empty((n, scn.space.n), complex)
    dU = np.empty_like(U)
    for i, Ei in enumerate(E):
        item = fam.get(Ei)
        if item is None:
            U[i] = dU[i] = 0.0
        else:
            U[i], dU[i] = item
    P = -1j * (np.conj(U) * wx) @ dU.T * np.outer(w, w)
    N = (np.conj(U) * wx) @ U.T * np.outer(w, w)
    M = (np.conj(U) * (wx * x)) @ U.T * np.outer(w, w)
    # collapse each pair onto its index difference d = i - j, d in [-(n-1), n-1]
    def by_diff(A):
        return np.array([np.trace(A, offset=-d) for d in range(-(n - 1), n)])
    A, B, C = by_diff(P), by_diff(N), by_diff(M)
    return np.convolve(A, B), np.convolve(A, C)


def source_term(scn: DissipationScenario, E: float, fam: _Family | None = None) -> np.ndarray:
    """S(x) at energy E: the sextuple integral without the i/g(E) factor."""
    fam = fam or _Family(scn)
    CN, CM = _kernels(scn, fam)
    n = scn.energy.n
    h = scn.h_energy
    x = scn.space.nodes
    S = np.zeros(scn.space.n, complex)
    for idx, m in enumerate(range(-2 * (n - 1), 2 * (n - 1) + 1)):
        if CN[idx] == 0 and CM[idx] == 0:
            continue
        item = fam.get(E + m * h)
        if item is None:
            continue
        S += item[0] * (x * CN[idx] - CM[idx])
    return S


def rhs_order1(scn: DissipationScenario, E: float | None = None, fam: _Family | None = None) -> np.ndarray:
    """Source i S(x)/g(E) of the order-gamma equation (default E = E_star)."""
    E = scn.E_star if E is None else E
    gE = complex(scn.amplitude(E))
    peak = float(np.max(np.abs(scn.amplitude(scn.energy.nodes))))
    if abs(gE) < G_FLOOR * max(peak, 1e-300):
        raise DivisionGuardError(f"|g(E)| = {abs(gE):.3e} is below the division floor")
    return 1j * source_term(scn, E, fam) / gE


# ---------------------------------------------------------------------------
# boundary-value solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbedSolution:
    x: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    residual0: float
    residual1: float
    gamma: float
    info: dict = field(default_factory=dict)

    @property
    def phi(self) -> np.ndarray:
        return self.phi0 + self.gamma * self.phi1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "re_phi0", "im_phi0", "re_phi1", "im_phi1"])
            for row in zip(self.x, self.phi0.real, self.phi0.imag, self.phi1.real, self.phi1.imag):
                w.writerow([f"{v:.12e}" for v in row])

    def report(self) -> dict:
        return {"gamma": self.gamma, "residual0": self.residual0,
                "residual1": self.residual1, **{k: v for k, v in self.info.items()
                                                 if isinstance(v, (int, float, str))}}

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.report(), fh, indent=2, sort_keys=True)


def _norm(scn, v) -> float:
    return float(np.sqrt(np.sum(scn.space.weights * np.abs(v) ** 2)))


def _solve_bvp(scn: DissipationScenario, rhs: np.ndarray, E: float,
               phi0: np.ndarray | None = None) -> tuple[np.ndarray, dict]:
    """(-D2 + V0 - E) u = rhs with homogeneous boundary rows."""
    b = np.asarray(rhs, dtype=complex).copy()
    b[0] = b[-1] = 0.0
    info: dict = {}
    if scn.boundary == "outgoing":
        u = linalg.solve_banded((1, 1), _banded_system(scn, E), b)
        if not np.all(np.isfinite(u)):
            raise SolvabilityError("boundary-value system is singular")
        return u, info
    # Dirichlet box: symmetric tridiagonal, solved in its eigenbasis so that
    # a resonant eigenvalue can be detected and projected out
    h = _dx(scn)
    diag = 2 / h**2 + scn.V0[1:-1]
    off = np.full(diag.size - 1, -1 / h**2)
    lam, vec = linalg.eigh_tridiagonal(diag, off)
    coef = vec.T @ b[1:-1]
    gap = lam - E
    scale = max(np.max(np.abs(lam)), 1.0)
    singular = np.abs(gap) < EPS_SOLV * scale
    if np.any(singular):
        overlap = float(np.max(np.abs(coef[singular])) / max(np.linalg.norm(b[1:-1]), 1e-300))
        info["resonant_overlap"] = overlap
        if overlap > EPS_SOLV:
            raise SolvabilityError(
                f"E={E} is an eigenvalue and the source overlaps its eigenvector ({overlap:.3e})")
    gap = np.where(singular, 1.0, gap)
    c = np.where(singular, 0.0, coef / gap)
    u = np.zeros(scn.space.n, complex)
    u[1:-1] = vec @ c
    if phi0 is not None and not np.any(singular):
        info["resonant_overlap"] = 0.0
    return u, info


def solve_order0(scn: DissipationScenario) -> tuple[np.ndarray, float]:
    """phi0(E_star, x) and its relative residual."""
    if scn.boundary == "outgoing":
        phi0 = base_state(scn, scn.E_star)
    else:
        h = _dx(scn)
        diag = 2 / h**2 + scn.V0[1:-1]
        off = np.full(diag.size - 1, -1 / h**2)
        lam, vec = linalg.eigh_tridiagonal(diag, off)
        j = int(np.argmin(np.abs(lam - scn.E_star)))
        if abs(lam[j] - scn.E_star) > EPS_SOLV * max(abs(lam[j]), 1.0):
            raise DomainError("with Dirichlet boundaries E_star must be a box eigenvalue")
        phi0 = np.zeros(scn.space.n, complex)
        phi0[1:-1] = vec[:, j]
    res = _norm(scn, apply_operator(scn, phi0, scn.E_star)) / max(_norm(scn, phi0), 1e-300)
    return phi0, float(res)


def solve_order1(scn: DissipationScenario, rhs: np.ndarray | None = None) -> PerturbedSolution:
    """phi0 and the first-order correction phi1 at E_star.

    With outgoing boundaries the discrete problem is uniquely solvable; with
    Dirichlet boundaries and E_star on a box eigenvalue the homogeneous
    solution is fixed by orthogonality to phi0, and a source that overlaps
    phi0 raises :class:`SolvabilityError`.
    """
    phi0, res0 = solve_order0(scn)
    if rhs is None:
        rhs = rhs_order1(scn)
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.shape != phi0.shape:
        raise ShapeError("source must be sampled on the space grid")
    phi1, info = _solve_bvp(scn, rhs, scn.E_star, phi0)
    r = apply_operator(scn, phi1, scn.E_star) - rhs
    r[0] = r[-1] = 0.0
    rn = _norm(scn, rhs)
    res1 = _norm(scn, r) / rn if rn > 0 else _norm(scn, r)
    info["rhs_norm"] = rn
    if res1 > EPS_ODE and rn > 0:
        info["residual_warning"] = f"residual {res1:.3e} exceeds {EPS_ODE}"
    return PerturbedSolution(scn.space.nodes.copy(), phi0, phi1, res0, float(res1), scn.gamma, info)


# ---------------------------------------------------------------------------
# consistency checks
# ---------------------------------------------------------------------------


def order1_family(scn: DissipationScenario) -> dict:
    """u(E) = g(E) phi1(E, x) at every lattice energy that enters S at E_star.

    Solving L_E u = i S[phi0](E) avoids the 1/g(E) factor, so nodes where g
    is tiny are harmless.
    """
    base = _Family(scn)
    n = scn.energy.n
    h = scn.h_energy
    wanted = set(_Family.key(E) for E in scn.energy.nodes)
    for m in range(-2 * (n - 1), 2 * (n - 1) + 1):
        E = scn.E_star + m * h
        if scn.amplitude(E) != 0:
            wanted.add(_Family.key(E))
    out = {}
    for key in sorted(wanted):
        src = 1j * source_term(scn, key, base)
        u, _ = _solve_bvp(scn, src, key)
        out[key] = u
    return out


def full_equation_residual(scn: DissipationScenario, gamma: float, solution: PerturbedSolution,
                           family: dict) -> float:
    """Norm of the full stationary equation at E_star for phi0 + gamma phi1.

    Every energy in the source uses the corrected family, so the remainder
    is the neglected O(gamma^2) part.
    """
    fam = _Family(scn, family, gamma)
    phi = solution.phi0 + gamma * solution.phi1
    lhs = apply_operator(scn, phi, scn.E_star)
    src = 1j * gamma * source_term(scn, scn.E_star, fam) / complex(scn.amplitude(scn.E_star))
    r = lhs - src
    r[0] = r[-1] = 0.0
    return _norm(scn, r)


@dataclass(frozen=True)
class GammaSweep:
    gammas: list
    deviation: list
    residual: list
    r_squared: float
    ratio_spread: float
    residual0: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def gamma_sweep(scn: DissipationScenario, gammas=(1e-3, 2e-3, 4e-3)) -> GammaSweep:
    """Linearity of ||phi - phi0|| in gamma and O(gamma^2) scaling of the
    full-equation residual.  ``ratio_spread`` is max/min of residual/gamma^2."""
    sol = solve_order1(scn)
    family = order1_family(scn)
    dev, res = [], []
    for gmm in gammas:
        dev.append(_norm(scn, gmm * sol.phi1))
        res.append(full_equation_residual(scn, gmm, sol, family))
    g = np.asarray(gammas, float)
    d = np.asarray(dev)
    A = np.vstack([g, np.ones_like(g)]).T
    coef, *_ = np.linalg.lstsq(A, d, rcond=None)
    pred = A @ coef
    ss = np.sum((d - d.mean()) ** 2)
    r2 = 1 - np.sum((d - pred) ** 2) / ss if ss > 0 else 1.0
    ratios = np.asarray(res) / g**2
    spread = float(ratios.max() / ratios.min()) if ratios.min() > 0 else float("inf")
    return GammaSweep([float(v) for v in g], [float(v) for v in d], [float(v) for v in res],
                      float(r2), spread, sol.residual0)


def fourier_roundtrip_error(scn: DissipationScenario) -> float:
    """Forward transform to time and back on the exact discrete-orthogonality
    time grid t_j = 2 pi j/(N h); returns the max error in g(E) E phi(E, x)."""
    E = scn.energy.nodes
    h = scn.h_energy
    n = E.size
    t = 2 * np.pi * np.arange(n) / (n * h)
    U = np.array([scn.amplitude(e) * e * base_state(scn, e) for e in E])
    psi_t = np.exp(-1j * np.outer(t, E)) @ U
    back = np.exp(1j * np.outer(E, t)) @ psi_t / n
    return float(np.max(np.abs(back - U)) / max(np.max(np.abs(U)), 1e-300))


def reduction_residual(scn: DissipationScenario) -> float:
    """gamma = 0 check: the transformed equation g E phi = g(-D2 + V0) phi
    holds node-for-node on the energy grid (max relative residual)."""
    worst = 0.0
    for e in scn.energy.nodes:
        gphi = scn.amplitude(e) * base_state(scn, e)
        r = apply_operator(scn, gphi, e)
        worst = max(worst, float(np.max(np.abs(r)) / max(np.max(np.abs(gphi)), 1e-300) / max(e, 1.0)))
    return worst


def default_scenario(gamma: float = 0.0, n_energy: int = 8, nx: int = 81,
                     half_width: float = 2.5, E_cut: float = 4.0, E_star: float | None = None,
                     barrier_height: float = 2.0, barrier_halfwidth: float = 0.5,
                     E_center: float = 2.0, E_sigma: float = 0.6) -> DissipationScenario:
    """Rectangular barrier with a Gaussian energy amplitude."""
    space = SpaceGrid.uniform(-half_width, half_width, nx)
    V0 = np.where(np.abs(space.nodes) <= barrier_halfwidth, barrier_height, 0.0)
    g = lambda E: np.exp(-((np.asarray(E) - E_center) ** 2) / (4 * E_sigma**2)).astype(complex)
    egrid = midpoint_energy_grid(E_cut, n_energy)
    E_star = float(egrid.nodes[n_energy // 2]) if E_star is None else E_star
    return DissipationScenario.build(space, V0, gamma, E_cut, n_energy, g, E_star)


__all__ = [
    "DissipationScenario", "PerturbedSolution", "GammaSweep", "albrecht_term",
    "albrecht_parameters", "base_state", "rhs_order1", "source_term", "solve_order0",
    "solve_order1", "order1_family", "full_equation_residual", "gamma_sweep",
    "fourier_roundtrip_error", "reduction_residual", "default_scenario",
    "midpoint_energy_grid", "apply_operator",
]
