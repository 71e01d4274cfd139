"""Position operator of a spin-zero relativistic particle in momentum space.

With the invariant measure d^3p / p0 the operator i grad_p is not hermitian.
Its hermitian part is the Newton-Wigner operator
X_j = i d/dp_j - (i/2) p_j / p0^2, whose mean is a point-like position; the
anti-hermitian part is i B_j with B_j = p_j / (2 p0^2), whose mean gives the
semi-axes of a localization ellipsoid.  The commutator [X_i, B_j] is
(i / 2p0^2)(delta_ij - 2 p_i p_j / p0^2), which bounds the product of the
spreads of the two parts.

Natural units (hbar = c = 1) are used throughout.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, PacketError

EPS_SURF = 1e-6
EPS_KG_NORM = 1e-8


@dataclass(frozen=True)
class KGPacket:
    """Momentum-space amplitude on a cubic tensor grid (uniform, periodic-safe)."""

    axis: np.ndarray
    values: np.ndarray
    m0: float

    @property
    def dp(self) -> float:
        return float(self.axis[1] - self.axis[0])

    @property
    def mesh(self):
        return np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")

    @property
    def p0(self) -> np.ndarray:
        px, py, pz = self.mesh
        return np.sqrt(px**2 + py**2 + pz**2 + self.m0**2)

    def measure(self) -> np.ndarray:
        """Quadrature weights d^3p / p0 (the integrand decays, so plain sums)."""
        return self.dp**3 / self.p0

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.sum(np.conj(a) * b * self.measure()))

    def norm2(self) -> float:
        return float(np.real(self.inner(self.values, self.values)))

    def gradient(self, f: np.ndarray | None = None) -> list[np.ndarray]:
        """Spectral (FFT) derivatives along the three momentum axes."""
        f = self.values if f is None else f
        n = self.axis.size
        freq = 2 * np.pi * np.fft.fftfreq(n, d=self.dp)
        F = np.fft.fftn(f)
        out = []
        for ax in range(3):
            shape = [1, 1, 1]
            shape[ax] = n
            out.append(np.fft.ifftn(1j * freq.reshape(shape) * F))
        return out

    def edge_ratio(self) -> float:
        v = np.abs(self.values)
        faces = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max(),
                    v[:, :, 0].max(), v[:, :, -1].max())
        return float(faces / v.max())

    @classmethod
    def from_function(cls, func, m0: float, half_width: float = 7.0, n: int = 64,
                      normalize: bool = True) -> "KGPacket":
        if m0 <= 0:
            raise DomainError("rest mass must be positive")
        axis = np.linspace(-half_width, half_width, n, endpoint=False)
        px, py, pz = np.meshgrid(axis, axis, axis, indexing="ij")
        values = np.asarray(func(px, py, pz), dtype=complex)
        pkt = cls(axis, values, float(m0))
        if normalize:
            pkt = cls(axis, values / np.sqrt(pkt.norm2()), float(m0))
        return pkt

    def translated(self, d) -> "KGPacket":
        """Multiply by exp(-i p . d), i.e. shift the packet by d in space."""
        px, py, pz = self.mesh
        phase = np.exp(-1j * (px * d[0] + py * d[1] + pz * d[2]))
        return KGPacket(self.axis, self.values * phase, self.m0)

    def to_csv(self, path) -> None:
        px, py, pz = self.mesh
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["px", "py", "pz", "re", "im"])
            for row in zip(px.ravel(), py.ravel(), pz.ravel(),
                           self.values.real.ravel(), self.values.imag.ravel()):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, m0: float) -> "KGPacket":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        axis = np.unique(data[:, 0])
        n = axis.size
        if data.shape[0] != n**3:
            raise PacketError("fixture is not a cubic tensor grid")
        values = (data[:, 3] + 1j * data[:, 4]).reshape(n, n, n)
        return cls(axis, values, float(m0))


def validate(pkt: KGPacket, eps_norm: float = EPS_KG_NORM, eps_surf: float = EPS_SURF) -> None:
    if abs(pkt.norm2() - 1.0) > eps_norm:
        raise PacketError(f"packet norm {pkt.norm2():.12g} differs from one")
    if pkt.edge_ratio() > eps_surf:
        raise PacketError(f"packet does not decay at the grid boundary (ratio {pkt.edge_ratio():.3g})")


@dataclass(frozen=True)
class NWMean:
    bilinear: np.ndarray
    operator: np.ndarray
    operator_imag: np.ndarray

    @property
    def discrepancy(self) -> float:
        """Largest difference between the two forms, counting the imaginary
        part the operator form must shed to be hermitian."""
        return float(max(np.max(np.abs(self.bilinear - self.operator)),
                         np.max(np.abs(self.operator_imag))))


def nw_mean_detail(pkt: KGPacket) -> NWMean:
    """Newton-Wigner mean in the bilinear form and as the single operator."""
    validate(pkt)
    phi = pkt.values
    grad = pkt.gradient()
    mu = pkt.measure()
    p = pkt.mesh
    p0sq = pkt.p0**2
    bil = np.array([-np.sum(np.imag(np.conj(phi) * g) * mu) for g in grad])
    op = np.array([
        np.sum(1j * np.conj(phi) * g * mu) - 0.5j * np.sum(np.abs(phi) ** 2 * pj / p0sq * mu)
        for g, pj in zip(grad, p)
    ])
    return NWMean(bil, op.real, op.imag)


def nw_mean_position(pkt: KGPacket) -> np.ndarray:
    return nw_mean_detail(pkt).bilinear


@dataclass(frozen=True)
class EllipsoidSizes:
    by_parts: np.ndarray
    direct: np.ndarray

    @property
    def discrepancy(self) -> float:
        return float(np.max(np.abs(self.by_parts - self.direct)))


def ellipsoid_detail(pkt: KGPacket) -> EllipsoidSizes:
    validate(pkt)
    phi = pkt.values
    mu = pkt.measure()
    p0sq = pkt.p0**2
    by_parts = np.array([0.5 * np.sum(np.abs(phi) ** 2 * pj / p0sq * mu) for pj in pkt.mesh])
    direct = np.array([np.sum(np.real(np.conj(phi) * g) * mu) for g in pkt.gradient()])
    return EllipsoidSizes(by_parts, direct)


def ellipsoid_sizes(pkt: KGPacket) -> np.ndarray:
    return ellipsoid_detail(pkt).by_parts


def plain_position_mean(pkt: KGPacket) -> np.ndarray:
    """<i grad_p> with the invariant measure (complex vector)."""
    validate(pkt)
    phi = pkt.values
    mu = pkt.measure()
    return np.array([np.sum(1j * np.conj(phi) * g * mu) for g in pkt.gradient()])


@dataclass(frozen=True)
class LocalizationReport:
    x_nw: np.ndarray
    y_size: np.ndarray
    delta_alpha: np.ndarray
    delta_beta: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    spread_definition: str = "std of hermitian part and of p_j/(2 p0^2)"

    def holds(self, eps: float = 0.0) -> bool:
        return bool(np.all(self.lhs >= self.rhs - eps))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


def uncertainty_correlations(pkt: KGPacket) -> LocalizationReport:
    """Spreads of the hermitian and anti-hermitian parts and the bound matrix."""
    validate(pkt)
    phi = pkt.values
    mu = pkt.measure()
    p = pkt.mesh
    p0sq = pkt.p0**2
    rho = np.abs(phi) ** 2 * mu
    grad = pkt.gradient()
    x_nw = np.empty(3)
    d_alpha = np.empty(3)
    d_beta = np.empty(3)
    y = np.empty(3)
    for i in range(3):
        X_phi = 1j * grad[i] - 0.5j * p[i] / p0sq * phi
        mean = np.real(np.sum(np.conj(phi) * X_phi * mu))
        second = np.sum(np.abs(X_phi) ** 2 * mu)
        x_nw[i] = mean
        d_alpha[i] = np.sqrt(max(second - mean**2, 0.0))
        B = p[i] / (2 * p0sq)
        bm = np.sum(B * rho)
        y[i] = bm
        d_beta[i] = np.sqrt(max(np.sum(B**2 * rho) - bm**2, 0.0))
    rhs = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            kern = ((1.0 if i == j else 0.0) - 2 * p[i] * p[j] / p0sq) / p0sq
            rhs[i, j] = 0.25 * abs(np.sum(kern * rho))
    lhs = np.outer(d_alpha, d_beta)
    return LocalizationReport(x_nw, y, d_alpha, d_beta, lhs, rhs)


def radial_correlations(profile, dprofile, m0: float, p_max: float = 12.0, n: int = 4001):
    """Diagonal spreads and bound for a real isotropic packet Phi(|p|).

    Angular averages replace p_i^2 by p^2/3, so all integrals become radial
    ones with the weight 4 pi p^2 dp / p0.  Returns (delta_alpha, delta_beta,
    rhs_diag) per component.
    """
    p = np.linspace(0.0, p_max, n)
    p0sq = p**2 + m0**2
    w = 4 * np.pi * p**2 / np.sqrt(p0sq)
    f = profile(p)
    df = dprofile(p)
    norm = np.trapezoid(w * f**2, p)
    alpha2 = np.trapezoid(w * (df - p * f / (2 * p0sq)) ** 2, p) / (3 * norm)
    beta2 = np.trapezoid(w * f**2 * p**2 / (12 * p0sq**2), p) / norm
    rhs = 0.25 * abs(np.trapezoid(w * f**2 * (1 - 2 * p**2 / (3 * p0sq)) / p0sq, p) / norm)
    return float(np.sqrt(alpha2)), float(np.sqrt(beta2)), float(rhs)


def commutator_check(func, points, m0: float, h: float = 1e-3) -> float:
    """Max residual of [X_i, B_j] f = (i / 2p0^2)(delta_ij - 2 p_i p_j / p0^2) f.

    ``func`` maps arrays (px, py, pz) to complex values; derivatives use
    centered differences of step h, so the residual is O(h^2).  Residuals
    are relative to |f| (absolute where the right side vanishes).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    eye = np.eye(3)

    def B(q, j):
        return q[..., j] / (2 * (np.sum(q**2, axis=-1) + m0**2))

    def f(q):
        return func(q[..., 0], q[..., 1], q[..., 2])

    for i in range(3):
        step = h * eye[i]
        for j in range(3):
            Bf = lambda q, j=j: B(q, j) * f(q)
            d_Bf = (Bf(points + step) - Bf(points - step)) / (2 * h)
            d_f = (f(points + step) - f(points - step)) / (2 * h)
            lhs = 1j * d_Bf - B(points, j) * 1j * d_f
            p0sq = np.sum(points**2, axis=-1) + m0**2
            kern = (eye[i, j] - 2 * points[:, i] * points[:, j] / p0sq) / (2 * p0sq)
            rhs = 1j * kern * f(points)
            scale = np.where(np.abs(rhs) > 1e-12, np.abs(rhs), 1.0)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return worst


def random_packet(rng: np.random.Generator, m0: float = 1.0, n: int = 64,
                  half_width: float = 7.0, n_terms: int = 2) -> KGPacket:
    """Sum of Gaussians with random centres, widths, phases and displacements."""
    centres = rng.uniform(-1.0, 1.0, size=(n_terms, 3))
    widths = rng.uniform(0.45, 0.7, size=n_terms)
    shifts = rng.uniform(-2.0, 2.0, size=(n_terms, 3))
    phases = rng.uniform(0, 2 * np.pi, size=n_terms)
    weights = rng.uniform(0.5, 1.0, size=n_terms)

    def func(px, py, pz):
        out = np.zeros(px.shape, complex)
        for c, s, d, ph, a in zip(centres, widths, shifts, phases, weights):
            r2 = (px - c[0]) ** 2 + (py - c[1]) ** 2 + (pz - c[2]) ** 2
            out += a * np.exp(-r2 / (4 * s**2) - 1j * (px * d[0] + py * d[1] + pz * d[2]) + 1j * ph)
        return out

    return KGPacket.from_function(func, m0, half_width, n)
