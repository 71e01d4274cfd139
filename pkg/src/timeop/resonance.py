"""s-wave resonances of an attractive spherical well seen through an exploring state.

The exploring state has radial function u(r) = sqrt(2b) exp(-b r), i.e.
<k00|phi> = sqrt(2b)/(k^2 + b^2) with the plane-wave normalization
sin(kr)/k.  Everything the module needs follows from the diagonal resolvent
element g(z) = <phi|(z - H)^-1|phi>:

* the resonance factor F0 = g(E+)/conj(g(E+)), of modulus one;
* the coupling lambda0 = Im(1/g(E+)) and the level E_phi = E - Re(1/g(E+));
* the complex roots of 1 - i alpha g(z) = 0 after continuing g across the
  positive real axis.

For a piecewise-constant potential and an exponential exploring state all
radial integrals are sums of exponentials, so g is evaluated in closed form.
Default units are hbar = 1, 2m = 1.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from .core_model import SphericalWell, UnitSystem
from .errors import ConvergenceError, DegenerateCouplingError, DomainError, NoResonanceError

EPS_POLE = 1e-8
EPS_RESIDUAL = 1e-6
_HALF_MASS = UnitSystem.half_mass()


# ---------------------------------------------------------------------------
# exponential-sum algebra for radial integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ExpSum:
    """f(r) = sum_j c_j exp(s_j r) with complex c_j, s_j."""

    c: np.ndarray
    s: np.ndarray

    @staticmethod
    def of(pairs):
        c, s = zip(*pairs)
        return _ExpSum(np.array(c, complex), np.array(s, complex))

    def __mul__(self, other: "_ExpSum") -> "_ExpSum":
        return _ExpSum(np.outer(self.c, other.c).ravel(), np.add.outer(self.s, other.s).ravel())

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(np.multiply.outer(r, self.s)) @ self.c

    def antiderivative_from(self, x0: float) -> "_ExpSum":
        """F(r) = int_x0^r f; every rate must be non-zero."""
        c = self.c / self.s
        const = -np.sum(c * np.exp(self.s * x0))
        return _ExpSum(np.append(c, const), np.append(self.s, 0.0))

    def integral(self, x0: float, x1: float) -> complex:
        """Definite integral.  For x1 = np.inf every term is replaced by its
        analytic continuation -c exp(s x0)/s, which is the convergent value
        when Re s < 0 and continues it onto the second sheet otherwise."""
        total = 0j
        for c, s in zip(self.c, self.s):
            if s == 0:
                if np.isinf(x1):
                    if c != 0:
                        raise DomainError("non-decaying term in an infinite integral")
                    continue
                total += c * (x1 - x0)
                continue
            upper = 0.0 if np.isinf(x1) else np.exp(s * x1)
            total += c / s * (upper - np.exp(s * x0))
        return complex(total)


def _sin(K, shift=0.0):
    """sin(K (r - shift)) as an exponential sum."""
    e = np.exp(-1j * K * shift)
    return _ExpSum.of([(e / 2j, 1j * K), (-1 / (e * 2j), -1j * K)])


def _cos(K, shift=0.0):
    e = np.exp(-1j * K * shift)
    return _ExpSum.of([(e / 2, 1j * K), (1 / (e * 2), -1j * K)])


@dataclass(frozen=True)
class _Radial:
    """Regular and outgoing solutions of -u'' + c2 V u = k^2 u for complex k."""

    k: complex
    K: complex
    a: float
    inner_reg: _ExpSum
    outer_reg: _ExpSum
    inner_out: _ExpSum
    outer_out: _ExpSum
    wronskian: complex


def _radial(well: SphericalWell, z: complex, units: UnitSystem) -> _Radial:
    c2 = 2 * units.mass / units.hbar**2
    k = np.sqrt(complex(c2 * z))  # principal branch: Re k >= 0, cut on the negative axis
    K = np.sqrt(complex(c2 * (z + well.U0)))
    a = well.a_radius
    A, Ap = np.sin(K * a), K * np.cos(K * a)
    outer_reg = _ExpSum(
        (A * _cos(k, a).c + (Ap / k) * _sin(k, a).c), _cos(k, a).s
    )
    inner_reg = _sin(K)
    ua, upa = np.exp(1j * k * a), 1j * k * np.exp(1j * k * a)
    C = ua * np.sin(K * a) + upa / K * np.cos(K * a)
    D = ua * np.cos(K * a) - upa / K * np.sin(K * a)
    inner_out = _ExpSum(C * _sin(K).c + D * _cos(K).c, _sin(K).s)
    outer_out = _ExpSum.of([(1.0, 1j * k)])
    W = A * upa - Ap * ua
    return _Radial(k, K, a, inner_reg, outer_reg, inner_out, outer_out, W)


def exploring_function(b: float) -> _ExpSum:
    return _ExpSum.of([(np.sqrt(2 * b), -b)])


def resolvent_element(well: SphericalWell, b: float, z: complex,
                      units: UnitSystem = _HALF_MASS) -> complex:
    """g(z) = <phi|(z - H)^-1|phi> continued from the upper half-plane.

    For real z > 0 this is the boundary value g(E + i0); below the positive
    real axis it is the continuation onto the second sheet.
    """
    if b <= 0:
        raise DomainError("exploring-state parameter b must be positive")
    rad = _radial(well, z, units)
    phi = exploring_function(b)
    a = rad.a
    # C(r) = int_0^r u_reg phi
    c_in = (rad.inner_reg * phi).antiderivative_from(0.0)
    c_a = c_in(a)
    c_out = (rad.outer_reg * phi).antiderivative_from(a)
    c_out = _ExpSum(np.append(c_out.c, c_a), np.append(c_out.s, 0.0))
    I = 2 * ((rad.inner_out * phi * c_in).integral(0.0, a)
             + (rad.outer_out * phi * c_out).integral(a, np.inf))
    c2 = 2 * units.mass / units.hbar**2
    return complex(c2 * I / rad.wronskian)


def resolvent_vector(well: SphericalWell, b: float, z: complex, r,
                     units: UnitSystem = _HALF_MASS) -> np.ndarray:
    """((z - H)^-1 phi)(r) on a radial grid (the eigenvector shape of the
    quasi-hermitian problem up to normalization)."""
    rad = _radial(well, z, units)
    phi = exploring_function(b)
    a = rad.a
    r = np.asarray(r, dtype=float)
    c2 = 2 * units.mass / units.hbar**2
    c_in = (rad.inner_reg * phi).antiderivative_from(0.0)
    c_out = (rad.outer_reg * phi).antiderivative_from(a)
    # int_r^inf u_out phi = total_out - int_a^r u_out phi  (for r > a)
    cum_out_out = (rad.outer_out * phi).antiderivative_from(a)
    total_out = (rad.outer_out * phi).integral(a, np.inf)
    total_in = (rad.inner_out * phi).integral(0.0, a)
    out = np.empty(r.shape, complex)
    inside = r < a
    ri, ro = r[inside], r[~inside]
    cum_out_in = (rad.inner_out * phi).antiderivative_from(0.0)
    out[inside] = (rad.inner_out(ri) * c_in(ri)
                   + rad.inner_reg(ri) * (total_in - cum_out_in(ri) + total_out))
    out[~inside] = (rad.outer_out(ro) * (c_in(a) + c_out(ro))
                    + rad.outer_reg(ro) * (total_out - cum_out_out(ro)))
    return c2 * out / rad.wronskian


# ---------------------------------------------------------------------------
# phase shifts and the resonance factor
# ---------------------------------------------------------------------------


def _wavenumbers(well: SphericalWell, E, units: UnitSystem):
    c2 = 2 * units.mass / units.hbar**2
    E = np.asarray(E, dtype=float)
    return np.sqrt(c2 * E), np.sqrt(c2 * (E + well.U0))


def phase_shift_l0(well: SphericalWell, E, units: UnitSystem = _HALF_MASS):
    """s-wave phase shift, continuous in E and vanishing at high energy."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise DomainError("phase shifts are defined for E > 0")
    k, K = _wavenumbers(well, E, units)
    a = well.a_radius
    theta = np.arctan2(k * np.sin(K * a), K * np.cos(K * a))
    # theta is defined modulo pi; follow the branch nearest K a
    theta = theta + np.pi * np.round((K * a - theta) / np.pi)
    delta = theta - k * a
    return delta if delta.ndim else float(delta)


def s_matrix_l0(well, E, units: UnitSystem = _HALF_MASS):
    return np.exp(2j * np.asarray(phase_shift_l0(well, E, units)))


def scattering_length(well: SphericalWell, units: UnitSystem = _HALF_MASS) -> float:
    """Zero-energy log-derivative matching: a_s = a - tan(K0 a)/K0."""
    K0 = np.sqrt(2 * units.mass * well.U0) / units.hbar
    a = well.a_radius
    if K0 == 0:
        return 0.0
    return float(a - np.tan(K0 * a) / K0)


@dataclass(frozen=True)
class ResonanceFactor:
    F0: complex
    lambda0: float
    E_phi: float
    phase: float
    background_phase: float
    lambda0_overlap: float


def energy_normalized_overlap(well: SphericalWell, b: float, E: float,
                              units: UnitSystem = _HALF_MASS) -> float:
    """<phi|psi_E> with the real standing wave normalized to delta(E - E')."""
    c2 = 2 * units.mass / units.hbar**2
    k, K = _wavenumbers(well, E, units)
    a = well.a_radius
    delta = phase_shift_l0(well, E, units)
    N = np.sin(k * a + delta) / np.sin(K * a)
    inner = (K - np.exp(-a * b) * (b * np.sin(K * a) + K * np.cos(K * a))) / (b**2 + K**2)
    outer = np.exp(-a * b) * (b * np.sin(k * a + delta) + k * np.cos(k * a + delta)) / (b**2 + k**2)
    return float(np.sqrt(2 * b) * (N * inner + outer) * np.sqrt(c2 / (np.pi * k)))


def resonance_factor(well: SphericalWell, b: float, E: float,
                     units: UnitSystem = _HALF_MASS) -> ResonanceFactor:
    """F0(E) with its coupling lambda0, level E_phi and the background phase.

    ``lambda0`` comes from the resolvent; ``lambda0_overlap`` recomputes it
    as pi |<phi|psi_E>|^2 / |g|^2 from the radial overlap, as a cross-check.
    """
    if E <= 0:
        raise DomainError("resonance factor is defined for E > 0")
    g = resolvent_element(well, b, E + 0j, units)
    inv = 1.0 / g
    lam = inv.imag
    ov = energy_normalized_overlap(well, b, E, units)
    lam_ov = np.pi * ov**2 / abs(g) ** 2
    if lam <= 0 and lam_ov == 0:
        raise DegenerateCouplingError(f"exploring state decouples from the continuum at E={E}")
    F0 = g / np.conj(g)
    phase = float(np.arctan2(lam, -inv.real))  # BW phase in (0, pi), pi/2 at E = E_phi
    delta = phase_shift_l0(well, E, units)
    background = float(delta - phase)
    return ResonanceFactor(complex(F0), float(lam), float(E - inv.real), phase, background, float(lam_ov))


def resonance_scan(well, b, energies, units: UnitSystem = _HALF_MASS):
    """Rows (E, delta0, arg F0, |1 - S0|^2, |F0|) over an energy list."""
    rows = []
    for E in energies:
        rf = resonance_factor(well, b, float(E), units)
        d = phase_shift_l0(well, float(E), units)
        S = np.exp(2j * d)
        rows.append((float(E), float(d), float(np.angle(rf.F0)), float(abs(1 - S) ** 2), float(abs(rf.F0))))
    return rows


def write_scan_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["E", "delta0", "arg_F0", "one_minus_S0_sq", "abs_F0"])
        for row in rows:
            w.writerow([f"{v:.12e}" for v in row])


# ---------------------------------------------------------------------------
# exploring-state parameter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExploringSolution:
    b: float
    ab: float
    n: int
    K: float
    Ka: float
    E_R: float
    mode: str
    residual: float
    all_roots: list = field(default_factory=list)
    below_threshold: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _threshold_equation(x: float, Ka: float, n: int) -> float:
    """Real part of the resonance system in the k -> 0 limit, in units of a.

    With cos(Ka) = 0 the regular solution is (-1)^n sin(K r) inside and
    tends to a constant outside, so Re<phi|psi+> = (1/2)<phi|k00> becomes
    (-1)^n int_0^1 sin(Ka s) e^(-x s) ds + e^(-x)/x - 1/(2 x^2) = 0, x = ab.
    """
    inner = (Ka - np.exp(-x) * (x * np.sin(Ka) + Ka * np.cos(Ka))) / (x**2 + Ka**2)
    return (-1) ** n * inner + np.exp(-x) / x - 1.0 / (2 * x**2)


def _finite_equation(b: float, well: SphericalWell, E: float, units: UnitSystem) -> float:
    """Re<phi|psi+> - (1/2)<phi|k00> at finite k (plane-wave normalization)."""
    k, K = _wavenumbers(well, E, units)
    a = well.a_radius
    delta = phase_shift_l0(well, E, units)
    N = np.sin(k * a + delta) / np.sin(K * a)
    inner = (K - np.exp(-a * b) * (b * np.sin(K * a) + K * np.cos(K * a))) / (b**2 + K**2)
    outer = np.exp(-a * b) * (b * np.sin(k * a + delta) + k * np.cos(k * a + delta)) / (b**2 + k**2)
    overlap_R = np.sqrt(2 * b) * (N * inner + outer) / k
    k00 = np.sqrt(2 * b) / (k**2 + b**2)
    return float(np.cos(delta) * overlap_R - 0.5 * k00)


def _bracket_roots(f, lo, hi, n=4000):
    xs = np.geomspace(lo, hi, n)
    v = np.array([f(x) for x in xs])
    roots = []
    for i in range(n - 1):
        if np.isfinite(v[i]) and np.isfinite(v[i + 1]) and np.sign(v[i]) != np.sign(v[i + 1]):
            roots.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-14))
    return roots


def solve_exploring_state(well: SphericalWell, n: int = 0, mode: str = "threshold",
                          units: UnitSystem = _HALF_MASS) -> ExploringSolution:
    """Exploring-state parameter b for the resonance family cos(Ka) = 0.

    ``mode="threshold"`` solves the real (width-free) equation in the
    low-energy limit k -> 0, where it depends only on ab and Ka.
    ``mode="finite"`` solves the same equation at the actual k of E_R,
    which must then be positive.
    """
    if n < 0:
        raise DomainError("n must be a non-negative integer")
    a = well.a_radius
    c2 = 2 * units.mass / units.hbar**2
    Ka = (n + 0.5) * np.pi
    K = Ka / a
    E_R = K**2 / c2 - well.U0
    if mode == "threshold":
        f = lambda x: _threshold_equation(x, Ka, n)
        roots = _bracket_roots(f, 1e-2, 50.0)
        scale = 1.0
    elif mode == "finite":
        if E_R <= 0:
            raise NoResonanceError(f"E_R = {E_R:.6g} is below threshold for n={n}")
        f = lambda x: _finite_equation(x / a, well, E_R, units)
        roots = _bracket_roots(f, 1e-2, 50.0)
        scale = 1.0
    else:
        raise DomainError(f"unknown mode {mode!r}")
    if not roots:
        raise NoResonanceError(f"no exploring-state root for n={n} ({mode})")
    x = roots[0]
    return ExploringSolution(
        b=x / a, ab=x, n=n, K=float(K), Ka=float(Ka), E_R=float(E_R), mode=mode,
        residual=abs(float(f(x))) * scale, all_roots=[float(r) for r in roots],
        below_threshold=bool(E_R <= 0),
    )


# ---------------------------------------------------------------------------
# complex eigenvalues
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceSolution:
    E_R: float
    gamma0: float
    b: float
    alpha: float
    E_complex: complex
    residual: float
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["E_complex"] = [self.E_complex.real, self.E_complex.imag]
        return d


def dispersion_residual(well, b, z, alpha, units: UnitSystem = _HALF_MASS) -> complex:
    """1/g(z) - i alpha, which vanishes where 1 - i alpha g(z) = 0."""
    return 1.0 / resolvent_element(well, b, z, units) - 1j * alpha


def complex_pole(well: SphericalWell, b: float, guess: complex, alpha: float = 0.0,
                 units: UnitSystem = _HALF_MASS, tol: float = EPS_POLE,
                 max_iter: int = 100, max_step: float | None = None) -> ResonanceSolution:
    """Root of 1 - i alpha <phi|(z - H)^-1|phi> = 0 by damped complex Newton.

    The resolvent element is continued from above the positive real axis,
    so roots with Im z < 0 lie on the second sheet.  With alpha = 0 the root
    is the decaying pole E_R - i gamma0 itself; as alpha grows towards the
    coupling lambda0 the root rises to the real axis.
    """
    z = complex(guess)
    step_cap = max_step if max_step is not None else 0.25 * max(abs(z), 1.0)
    trace = []
    h = 1e-6 * max(abs(z), 1.0)
    for it in range(1, max_iter + 1):
        f = dispersion_residual(well, b, z, alpha, units)
        trace.append((z.real, z.imag, abs(f)))
        if not np.isfinite(f):
            raise ConvergenceError("dispersion relation is not finite", trace)
        df = (dispersion_residual(well, b, z + h, alpha, units)
              - dispersion_residual(well, b, z - h, alpha, units)) / (2 * h)
        if df == 0:
            raise ConvergenceError("vanishing derivative in Newton step", trace)
        step = -f / df
        if abs(step) > step_cap:
            step *= step_cap / abs(step)
        z = z + step
        if abs(step) <= tol * max(abs(z), 1.0):
            g = resolvent_element(well, b, z, units)
            residual = abs(1 - 1j * alpha * g) if alpha else abs(1.0 / g)
            if residual > EPS_RESIDUAL:
                # a vanishing step with a large residual means the iteration
                # stalled on the branch cut of k = sqrt(c2 z)
                raise ConvergenceError(f"iteration stalled with residual {residual:.3g}", trace)
            c2 = 2 * units.mass / units.hbar**2
            k = np.sqrt(complex(c2 * z))
            if alpha == 0 and abs(k + 1j * b) <= 1e-6 * max(b, 1.0):
                # the continued overlap <phi|k> itself has a pole at k = -i b;
                # a root there belongs to the exploring state, not to H
                raise ConvergenceError("iteration reached the exploring-state singularity k = -i b", trace)
            return ResonanceSolution(
                E_R=z.real, gamma0=-z.imag, b=b, alpha=alpha, E_complex=z,
                residual=float(residual), iterations=it,
                diagnostics={"trace": trace},
            )
    raise ConvergenceError("complex Newton iteration did not converge", trace)


def alpha_continuation(well: SphericalWell, b: float, start: complex, alphas,
                       units: UnitSystem = _HALF_MASS, max_step: float = 0.05):
    """Follow the root of 1 - i alpha g(z) = 0 through a sequence of alpha
    values, seeding each solve with the previous root."""
    z = complex(start)
    out = []
    for alpha in alphas:
        sol = complex_pole(well, b, z, alpha=float(alpha), units=units, max_step=max_step)
        z = sol.E_complex
        out.append(sol)
    return out


def pole_eigenvector(well: SphericalWell, sol: ResonanceSolution, r,
                     units: UnitSystem = _HALF_MASS) -> np.ndarray:
    """(z - H)^-1 phi at the root, scaled to unit value of <phi|.> (the
    quasi-hermitian eigenvector on a radial grid)."""
    v = resolvent_vector(well, sol.b, sol.E_complex, r, units)
    g = resolvent_element(well, sol.b, sol.E_complex, units)
    return v / g


def phase_crossing(well: SphericalWell, b: float, E_lo: float, E_hi: float,
                   units: UnitSystem = _HALF_MASS):
    """Energy where the resonance-factor phase crosses pi/2 and its slope."""
    f = lambda E: resonance_factor(well, b, E, units).phase - np.pi / 2
    try:
        E = optimize.brentq(f, E_lo, E_hi, xtol=1e-12)
    except ValueError as exc:
        raise NoResonanceError("resonance-factor phase does not cross pi/2 in the interval") from exc
    h = 1e-5 * max(abs(E), 1.0)
    slope = (f(E + h) - f(E - h)) / (2 * h)
    return float(E), float(slope)


# ---------------------------------------------------------------------------
# decay of the unstable state
# ---------------------------------------------------------------------------


def lorentzian_density(E0: float, gamma0: float):
    return lambda E: (gamma0 / np.pi) / ((E - E0) ** 2 + gamma0**2)


def survival_amplitude(spectral_density, t, E_max: float, E_min: float = 0.0,
                       points=None) -> np.ndarray:
    """A(t) = int_E_min^E_max rho(E) exp(-i E t) dE by oscillatory quadrature."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, complex)
    for i, ti in enumerate(t):
        if ti == 0:
            re = integrate.quad(spectral_density, E_min, E_max, points=points, limit=400)[0]
            im = 0.0
        else:
            re = integrate.quad(spectral_density, E_min, E_max, weight="cos", wvar=ti, limit=400)[0]
            im = -integrate.quad(spectral_density, E_min, E_max, weight="sin", wvar=ti, limit=400)[0]
        out[i] = re + 1j * im
    return out


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    window: tuple
    late_ratio: float


def fit_decay_rate(t, amplitude, upper: float = 0.9, lower: float = 0.1) -> DecayFit:
    """Log-linear fit of |A(t)|/|A(0)| over the window where it falls from upper to lower.

    ``late_ratio`` compares the last sample with the fitted exponential, a
    measure of the non-exponential tail.
    """
    t = np.asarray(t, dtype=float)
    mag = np.abs(amplitude) / abs(amplitude[0])
    mask = (mag <= upper) & (mag >= lower)
    if mask.sum() < 3:
        raise DomainError("too few samples inside the fit window")
    slope, intercept = np.polyfit(t[mask], np.log(mag[mask]), 1)
    pred = intercept + slope * t[mask]
    resid = np.log(mag[mask]) - pred
    ss = np.sum((np.log(mag[mask]) - np.mean(np.log(mag[mask]))) ** 2)
    r2 = 1 - np.sum(resid**2) / ss if ss > 0 else 1.0
    late = mag[-1] / np.exp(intercept + slope * t[-1])
    return DecayFit(float(-slope), float(intercept), float(r2),
                    (float(t[mask][0]), float(t[mask][-1])), float(late))
