"""Time as an observable for discrete energy spectra.

A packet built from commensurate levels recurs with period T = 2 pi hbar / D,
where D is the largest common divisor of the level spacings.  Inside one
cycle the time operator acts as a periodic saw-tooth, which makes it
selfadjoint and gives a modified time-energy relation whose right side
depends on |psi| at the cycle edge.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core_model import EPS_NORM
from .errors import DomainError, NoCycleError

EPS_D = 1e-9
N_MAX = 10**6


def _rationalize(r: float, eps: float, qmax: int) -> tuple[int, int] | None:
    """Smallest-denominator continued-fraction convergent p/q of r with
    |q r - p| <= eps and q <= qmax, or None.

    The test bounds the phase drift accumulated per recurrence of the
    smallest spacing, which is the physically relevant commensurability
    criterion.
    """
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    x = r
    for _ in range(64):
        a = math.floor(x)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > qmax:
            return None
        if abs(k * r - h) <= eps:
            return h, k
        frac = x - a
        if frac <= 0:
            return (h, k) if abs(k * r - h) <= eps else None
        x = 1.0 / frac
    return None


def poincare_period(levels, hbar: float = 1.0, eps_d: float = EPS_D, n_max: int = N_MAX):
    """(D, T) for a set of level energies.

    Spacings are taken relative to the lowest level and divided by the
    smallest one; each ratio is reduced to a fraction p/q, and D is the
    smallest spacing times gcd of the resulting integers over their common
    denominator.
    """
    eps = np.sort(np.unique(np.asarray(levels, dtype=float)))
    if eps.size < 2:
        raise DomainError("a recurrence period needs at least two distinct levels")
    spacings = eps[1:] - eps[0]
    s_min = float(spacings[0])
    fracs = []
    for s in spacings:
        pq = _rationalize(float(s / s_min), eps_d, n_max)
        if pq is None:
            raise NoCycleError(f"spacing ratio {float(s / s_min)!r} is not commensurate within {eps_d}")
        fracs.append(pq)
    L = 1
    for _, q in fracs:
        L = L * q // math.gcd(L, q)
    ints = [p * (L // q) for p, q in fracs]
    G = 0
    for n in ints:
        G = math.gcd(G, n)
    D = s_min * G / L
    return D, 2 * math.pi * hbar / D


def sawtooth_eval(t, T: float):
    """Periodic saw-tooth equal to t on [-T/2, T/2) with jumps of -T."""
    if T <= 0:
        raise DomainError("period must be positive")
    t = np.asarray(t, dtype=float)
    out = t - T * np.floor((t + T / 2) / T)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DiscreteSpectrumState:
    energies: np.ndarray
    amplitudes: np.ndarray
    D: float
    T: float
    hbar: float = 1.0

    @classmethod
    def build(cls, energies, amplitudes, hbar: float = 1.0, eps_d: float = EPS_D,
              normalize: bool = True):
        e = np.asarray(energies, dtype=float)
        g = np.asarray(amplitudes, dtype=complex)
        if e.shape != g.shape or e.ndim != 1 or e.size == 0:
            raise DomainError("energies and amplitudes must be equal-length vectors")
        norm = float(np.sum(np.abs(g) ** 2))
        if normalize:
            g = g / np.sqrt(norm)
        elif abs(norm - 1) > EPS_NORM:
            raise DomainError("level populations must sum to one")
        if np.unique(e).size < 2:
            # a single level never changes: the recurrence time is arbitrary,
            # so the caller's period (default 2 pi hbar) is used
            D = 1.0
            T = 2 * math.pi * hbar
        else:
            D, T = poincare_period(e, hbar, eps_d)
        return cls(e, g, D, T, hbar)

    @classmethod
    def single_level(cls, energy: float, T: float, hbar: float = 1.0):
        return cls(np.array([energy], float), np.array([1.0 + 0j]), 2 * math.pi * hbar / T, T, hbar)

    def psi(self, t):
        """psi(t) = sum g_n exp(-i (e_n - e_0) t / hbar), common phase dropped."""
        t = np.asarray(t, dtype=float)
        phase = np.exp(-1j * np.multiply.outer(t, self.energies - self.energies.min()) / self.hbar)
        return phase @ self.amplitudes

    def energy_variance(self) -> float:
        p = np.abs(self.amplitudes) ** 2
        m = np.sum(p * self.energies)
        return float(np.sum(p * (self.energies - m) ** 2))

    def autocorrelation(self, t):
        p = np.abs(self.amplitudes) ** 2
        t = np.asarray(t, dtype=float)
        return np.abs(np.exp(-1j * np.multiply.outer(t, self.energies) / self.hbar) @ p) ** 2


@dataclass(frozen=True)
class SawToothReport:
    t_mean: float
    t_var: float
    energy_var: float
    product: float
    rhs_bound: float
    robertson_bound: float
    gamma_c: float
    equality_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def discrete_uncertainty(state: DiscreteSpectrumState, gamma_c: float = 0.0,
                         n_nodes: int = 512) -> SawToothReport:
    """Saw-tooth time moments over one cycle and both sides of the relation.

    The cycle is (gamma_c - T/2, gamma_c + T/2]; inside it the saw-tooth is
    the identity, so the moments are plain time moments of |psi(t)|^2,
    integrated by Gauss-Legendre quadrature.  ``rhs_bound`` is
    hbar^2 [1 - T |psi(T/2 + gamma_c)|^2 / int |psi|^2 dt]; ``robertson_bound``
    is (hbar^2/4) times the square of the bracket, which is what the
    commutator of the saw-tooth with H guarantees.
    """
    T = state.T
    if not abs(gamma_c) < T / 2:
        raise DomainError("gamma_c must lie in (-T/2, T/2)")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    t = gamma_c + 0.5 * T * x
    w = 0.5 * T * w
    rho = np.abs(state.psi(t)) ** 2
    total = float(np.sum(w * rho))
    mean = float(np.sum(w * rho * t) / total)
    var = float(np.sum(w * rho * (t - mean) ** 2) / total)
    edge = float(np.abs(state.psi(T / 2 + gamma_c)) ** 2)
    bracket = 1.0 - T * edge / total
    hb2 = state.hbar**2
    dE2 = state.energy_variance()
    product = dE2 * var
    rhs = hb2 * bracket
    return SawToothReport(
        t_mean=mean,
        t_var=var,
        energy_var=dE2,
        product=product,
        rhs_bound=rhs,
        robertson_bound=0.25 * hb2 * bracket**2,
        gamma_c=gamma_c,
        equality_gap=product - rhs,
    )


def quasi_cycle_peak(state: DiscreteSpectrumState, T: float | None = None,
                     window: float = 0.25, n: int = 20001) -> tuple[float, float]:
    """Time and height of the autocorrelation maximum within T(1 +- window)."""
    T = state.T if T is None else T
    t = np.linspace(T * (1 - window), T * (1 + window), n)
    a = state.autocorrelation(t)
    i = int(np.argmax(a))
    return float(t[i]), float(a[i])


def write_cycle_trace(state: DiscreteSpectrumState, path, n: int = 401, gamma_c: float = 0.0):
    """CSV with t, saw(t) and |psi(t)|^2 over one cycle."""
    T = state.T
    t = np.linspace(gamma_c - T / 2, gamma_c + T / 2, n)
    saw = gamma_c + sawtooth_eval(t - gamma_c, T)
    rho = np.abs(state.psi(t)) ** 2
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "saw", "abs_psi_sq"])
        for row in zip(t, saw, rho):
            wr.writerow([f"{v:.12e}" for v in row])
