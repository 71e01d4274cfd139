"""Registry of invariant checks grouped into verification suites.

Every check is a function taking a tolerance mapping and returning a
:class:`Check`.  The command line ``verify`` command and the acceptance tests
draw from this registry; :func:`registry_complete` confirms that every
listed invariant is registered in exactly one suite.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import discrete_time as dt
from . import dissipative as ds
from . import kg_position as kg
from . import resonance as rs
from .core_model import (
    Free,
    RectBarrier1D,
    ScatterSystem,
    SpaceGrid,
    SphericalWell,
    TimeGrid,
    UnitSystem,
    WavenumberGrid,
    make_gaussian_amplitude,
)
from .propagate import continuity_residual, expand_time_window, synthesize
from .time_stats import (
    dwell_time,
    passage_distribution,
    traversal_time,
    tq_eigencheck,
    uncertainty_product,
)

DEFAULT_TOLERANCES = {
    "traversal_rel": 0.02,
    "eigencheck": 1e-6,
    "dwell_free_rel": 0.01,
    "dwell_barrier_rel": 0.02,
    "uncertainty_slack": 1e-6,
    "continuity": 5e-2,
    "discrete_quad": 1e-4,
    "discrete_var": 1e-6,
    "kg_equiv": 1e-8,
    "ab_lo": 0.6,
    "ab_hi": 0.8,
    "Ka": 1e-10,
    "F0_unit": 1e-10,
    "bg_identity": 1e-6,
    "decay_rel": 0.05,
    "gamma0_residual": 1e-10,
    "r_squared": 0.999,
    "ratio_spread": 2.0,
    "roundtrip": 1e-8,
    "symmetric_rhs": 1e-8,
    "e_halving": 0.05,
}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "passed", bool(self.passed))

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# shared scenario builders
# ---------------------------------------------------------------------------


def gaussian_packet_field(kbar: float, a: float, x0: float, space: tuple, time: tuple,
                          barrier: RectBarrier1D | None = None, nk: int = 600,
                          probes=(), units: UnitSystem | None = None):
    """Packet, system and sampled field for a Gaussian amplitude.

    ``space`` and ``time`` are (lo, hi, n) triples; the time window is widened
    until every probe captures its flux (see ``expand_time_window``).
    """
    units = units or UnitSystem()
    sys = ScatterSystem(barrier if barrier is not None else Free(), units)
    half = 6.0 / (2.0 * a)
    kgrid = WavenumberGrid.uniform(max(kbar - half, 1e-3), kbar + half, nk)
    g = make_gaussian_amplitude(kbar, a, kgrid, x0=x0, dispersion=sys.dispersion)
    tgrid = TimeGrid.uniform(*time)
    if probes:
        tgrid = expand_time_window(g, sys, probes, tgrid)
    field = synthesize(g, sys, SpaceGrid.uniform(*space), tgrid)
    return g, sys, field


@functools.lru_cache(maxsize=None)
def free_reference_field():
    return gaussian_packet_field(5.0, 1.0, -10.0, (-12.0, 22.0, 681), (-3.0, 12.0, 601),
                                 probes=(-5.0, 5.0, 15.0, 20.0))


@functools.lru_cache(maxsize=None)
def barrier_reference_field():
    return gaussian_packet_field(5.0, 2.0, -20.0, (-60.0, 60.0, 2401), (-4.0, 14.0, 721),
                                 barrier=RectBarrier1D(14.0, 0.0, 0.5))


def representative_well() -> SphericalWell:
    """U0 a^2 = 10 with a = 1 in units hbar = 1, 2m = 1."""
    return SphericalWell(10.0, 1.0)


# ---------------------------------------------------------------------------
# continuous-time checks
# ---------------------------------------------------------------------------


def check_traversal_free(tol) -> Check:
    _, _, field = free_reference_field()
    vbar = 5.0
    worst = 0.0
    for xi, xf in ((-5.0, 5.0), (-5.0, 15.0), (5.0, 20.0)):
        tau = traversal_time(field, xi, xf)
        worst = max(worst, abs(tau - (xf - xi) / vbar) / ((xf - xi) / vbar))
    return Check("traversal_free", worst, tol["traversal_rel"], worst <= tol["traversal_rel"])


def check_eigencheck(tol) -> Check:
    worst = max(tq_eigencheck(k, [-5.0, 0.0, 1.0, 7.5]) for k in (1.0, 5.0, 10.0))
    return Check("plane_wave_eigencheck", worst, tol["eigencheck"], worst <= tol["eigencheck"])


def check_dwell_free(tol) -> Check:
    _, _, field = free_reference_field()
    worst = 0.0
    for xi, xf in ((-5.0, 5.0), (0.0, 10.0)):
        a, b = dwell_time(field, xi, xf)
        worst = max(worst, abs(a - b) / abs(a))
    return Check("dwell_equivalence_free", worst, tol["dwell_free_rel"], worst <= tol["dwell_free_rel"])


def check_dwell_barrier(tol) -> Check:
    _, _, field = barrier_reference_field()
    worst = 0.0
    for xi, xf in ((-5.0, 5.0), (-2.0, 2.0), (-1.0, 1.5)):
        a, b = dwell_time(field, xi, xf)
        worst = max(worst, abs(a - b) / abs(a))
    return Check("dwell_equivalence_barrier", worst, tol["dwell_barrier_rel"],
                 worst <= tol["dwell_barrier_rel"])


def uncertainty_sweep():
    """(label, product) for the ten-scenario time-energy fixture sweep."""
    out = []
    free_cases = [(5.0, 1.0, -9.0), (5.0, 1.0, 5.0), (5.0, 1.0, 20.0), (3.0, 1.5, 0.0), (8.0, 0.7, 10.0)]
    for kbar, a, x in free_cases:
        g, sys, field = gaussian_packet_field(kbar, a, -10.0, (x - 1.0, x + 1.0, 21), (-4.0, 10.0, 801),
                                              probes=(x,))
        d = passage_distribution(field, x, "+")
        out.append((f"free k={kbar} a={a} x={x}", uncertainty_product(g, d, sys).product))
    barrier_cases = [(14.0, 5.0, 5.0, "+"), (14.0, 5.0, -5.0, "-"), (14.0, 5.0, -5.0, "+"),
                     (10.0, 4.0, 5.0, "+"), (10.0, 4.0, -5.0, "-")]
    cache = {}
    for V0, kbar, x, sign in barrier_cases:
        key = (V0, kbar)
        if key not in cache:
            cache[key] = gaussian_packet_field(kbar, 2.0, -20.0, (-6.0, 6.0, 241), (-4.0, 16.0, 801),
                                               barrier=RectBarrier1D(V0, 0.0, 0.5))
        g, sys, field = cache[key]
        d = passage_distribution(field, x, sign)
        out.append((f"barrier V0={V0} k={kbar} x={x} {sign}", uncertainty_product(g, d, sys).product))
    return out


def check_uncertainty(tol) -> Check:
    prods = [p for _, p in uncertainty_sweep()]
    low = min(prods)
    bound = 0.5 - tol["uncertainty_slack"]
    return Check("time_energy_uncertainty", low, bound, low >= bound, f"{len(prods)} scenarios")


def check_continuity(tol) -> Check:
    _, _, field = barrier_reference_field()
    r = continuity_residual(field)
    return Check("continuity_residual", r, tol["continuity"], r <= tol["continuity"])


# ---------------------------------------------------------------------------
# discrete-spectrum checks
# ---------------------------------------------------------------------------


def check_single_level(tol) -> Check:
    T = 2 * math.pi
    rep = dt.discrete_uncertainty(dt.DiscreteSpectrumState.single_level(0.7, T))
    err = max(abs(rep.rhs_bound), abs(rep.t_var - T**2 / 12))
    return Check("single_level_sawtooth", err, tol["discrete_var"], err <= tol["discrete_var"])


def two_level_report():
    return dt.discrete_uncertainty(dt.DiscreteSpectrumState.build([0.0, 1.0], [1.0, 1.0]))


def check_two_level_sides(tol) -> Check:
    rep = two_level_report()
    lhs_oracle = (math.pi**2 / 3 - 2) / 4
    err = max(abs(rep.product - lhs_oracle), abs(rep.rhs_bound - 1.0))
    return Check("two_level_both_sides", err, tol["discrete_quad"], err <= tol["discrete_quad"])


def check_two_level_relation(tol) -> Check:
    """The literal equality of the two sides; recorded, expected to fail."""
    rep = two_level_report()
    gap = abs(rep.product - rep.rhs_bound)
    return Check("two_level_literal_equality", gap, tol["discrete_quad"], gap <= tol["discrete_quad"],
                 "product vs right side; see the decision ledger")


def check_robertson(tol) -> Check:
    worst = math.inf
    for weights in ([1.0, 1.0], [1.0, 2.0, 0.5], [0.3, 1.0, 1.0, 0.2]):
        levels = np.arange(len(weights), dtype=float)
        rep = dt.discrete_uncertainty(dt.DiscreteSpectrumState.build(levels, weights))
        worst = min(worst, rep.product - rep.robertson_bound)
    return Check("sawtooth_robertson_bound", worst, 0.0, worst >= -tol["discrete_quad"])


def check_poincare(tol) -> Check:
    _, T = dt.poincare_period([0.0, 2.0, 6.0])
    err = abs(T - math.pi)
    return Check("poincare_period", err, 1e-12, err <= 1e-12)


# ---------------------------------------------------------------------------
# Klein-Gordon checks
# ---------------------------------------------------------------------------


def _kg_packets(n_packets: int = 20, seed: int = 20240601):
    rng = np.random.default_rng(seed)
    return [kg.random_packet(rng) for _ in range(n_packets)]


def kg_results(n_packets: int = 20, seed: int = 20240601):
    out = []
    for pkt in _kg_packets(n_packets, seed):
        out.append((kg.nw_mean_detail(pkt), kg.uncertainty_correlations(pkt)))
    return out


def check_kg(tol, results=None) -> list[Check]:
    results = results or kg_results()
    disc = max(nw.discrepancy for nw, _ in results)
    margin = min(float(np.min(rep.lhs - rep.rhs)) for _, rep in results)
    return [
        Check("newton_wigner_equivalence", disc, tol["kg_equiv"], disc <= tol["kg_equiv"]),
        Check("localization_correlation", margin, 0.0, margin >= 0.0, f"{len(results)} packets"),
    ]


def check_commutator(tol) -> Check:
    f = lambda px, py, pz: np.exp(-(px**2 + py**2 + pz**2) / 2 + 0.3j * px)
    pts = np.array([[0.3, -0.2, 0.5], [1.0, 0.4, -0.7], [-0.5, 0.9, 0.1]])
    r = kg.commutator_check(f, pts, 1.0, h=1e-3)
    return Check("xb_commutator", r, 1e-4, r <= 1e-4)


# ---------------------------------------------------------------------------
# resonance checks
# ---------------------------------------------------------------------------


def check_ab_band(tol) -> list[Check]:
    sol = rs.solve_exploring_state(representative_well(), 0)
    return [
        Check("exploring_state_ab", sol.ab, tol["ab_hi"], tol["ab_lo"] <= sol.ab <= tol["ab_hi"],
              f"band [{tol['ab_lo']}, {tol['ab_hi']}]"),
        Check("exploring_state_Ka", abs(sol.Ka - math.pi / 2), tol["Ka"], abs(sol.Ka - math.pi / 2) <= tol["Ka"]),
    ]


def check_F0_unit(tol) -> Check:
    well = representative_well()
    b = rs.solve_exploring_state(well, 0).b
    rows = rs.resonance_scan(well, b, np.linspace(0.05, 30.0, 200))
    dev = max(abs(r[4] - 1.0) for r in rows)
    return Check("resonance_factor_unimodular", dev, tol["F0_unit"], dev <= tol["F0_unit"])


def check_F0_crossing(tol) -> list[Check]:
    well = representative_well()
    b = rs.solve_exploring_state(well, 0).b
    E_c, slope = rs.phase_crossing(well, b, 0.02, 1.0)
    rf = rs.resonance_factor(well, b, E_c)
    dev = abs(rf.F0 + 1.0)
    S = np.exp(2j * rs.phase_shift_l0(well, E_c))
    ident = abs(abs(1 - S) ** 2 - 4 * math.cos(rf.background_phase) ** 2)
    return [
        Check("resonance_factor_minus_one", dev, 1e-8, dev <= 1e-8 and slope > 0,
              f"E_phi={E_c:.6g}, phase slope={slope:.4g}"),
        Check("background_phase_identity", ident, tol["bg_identity"], ident <= tol["bg_identity"]),
    ]


def check_pole_migration(tol) -> Check:
    """Root of 1 - i alpha g = 0 reaches the real axis as alpha -> lambda0."""
    well = representative_well()
    b = rs.solve_exploring_state(well, 0).b
    E_c, _ = rs.phase_crossing(well, b, 0.02, 1.0)
    lam = rs.resonance_factor(well, b, E_c).lambda0
    path = rs.alpha_continuation(well, b, E_c - 0.05j, lam * np.array([0.6, 0.8, 0.9, 0.99, 1.0]))
    ims = [abs(s.E_complex.imag) for s in path]
    monotone = all(x >= y for x, y in zip(ims, ims[1:]))
    return Check("pole_migrates_to_real_axis", ims[-1], 1e-8, ims[-1] <= 1e-8 and monotone)


def check_decay(tol) -> Check:
    t = np.linspace(0.0, 40.0, 401)
    A = rs.survival_amplitude(rs.lorentzian_density(10.0, 0.1), t, 100.0)
    fit = rs.fit_decay_rate(t, A)
    rel = abs(fit.rate - 0.1) / 0.1
    return Check("lorentzian_decay_rate", rel, tol["decay_rel"], rel <= tol["decay_rel"],
                 f"rate={fit.rate:.6g}")


# ---------------------------------------------------------------------------
# dissipative checks
# ---------------------------------------------------------------------------


def check_gamma_zero(tol) -> Check:
    scn = ds.default_scenario(gamma=0.0)
    sol = ds.solve_order1(scn)
    err = max(sol.residual0, float(np.max(np.abs(sol.phi - sol.phi0))))
    return Check("gamma_zero_recovers_base", err, tol["gamma0_residual"], err <= tol["gamma0_residual"])


def check_gamma_sweep(tol) -> list[Check]:
    sw = ds.gamma_sweep(ds.default_scenario())
    return [
        Check("gamma_linearity", sw.r_squared, tol["r_squared"], sw.r_squared >= tol["r_squared"]),
        Check("full_residual_order_gamma2", sw.ratio_spread, tol["ratio_spread"],
              sw.ratio_spread <= tol["ratio_spread"]),
    ]


def check_fourier(tol) -> list[Check]:
    scn = ds.default_scenario()
    rt = ds.fourier_roundtrip_error(scn)
    red = ds.reduction_residual(scn)
    return [
        Check("fourier_roundtrip", rt, tol["roundtrip"], rt <= tol["roundtrip"]),
        Check("fourier_reduction", red, 1e-10, red <= 1e-10),
    ]


def check_symmetric_rhs(tol) -> Check:
    space = SpaceGrid.uniform(-2.5, 2.5, 81)
    g = lambda E: np.exp(-((np.asarray(E) - 2.0) ** 2) / 0.72).astype(complex)
    scn = ds.DissipationScenario.build(space, np.zeros(space.n), 0.0, 4.0, 8, g, 2.25,
                                       family=lambda E, x: np.cos(np.sqrt(E) * x))
    n = float(np.sqrt(np.sum(space.weights * np.abs(ds.rhs_order1(scn)) ** 2)))
    return Check("symmetric_rhs_vanishes", n, tol["symmetric_rhs"], n <= tol["symmetric_rhs"])


def check_energy_halving(tol) -> Check:
    scn = ds.default_scenario()
    w = scn.space.weights
    a = float(np.sqrt(np.sum(w * np.abs(ds.rhs_order1(scn)) ** 2)))
    b = float(np.sqrt(np.sum(w * np.abs(ds.rhs_order1(scn.refined_energy())) ** 2)))
    rel = abs(a - b) / b
    return Check("rhs_energy_grid_halving", rel, tol["e_halving"], rel <= tol["e_halving"])


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def _flatten(x):
    return x if isinstance(x, list) else [x]


SUITES = {
    "continuous": [check_traversal_free, check_eigencheck, check_dwell_free, check_dwell_barrier,
                   check_uncertainty, check_continuity],
    "discrete": [check_single_level, check_two_level_sides, check_two_level_relation,
                 check_robertson, check_poincare],
    "kg": [check_kg, check_commutator],
    "resonance": [check_ab_band, check_F0_unit, check_F0_crossing, check_pole_migration, check_decay],
    "dissipative": [check_gamma_zero, check_gamma_sweep, check_fourier, check_symmetric_rhs,
                    check_energy_halving],
}

INVARIANTS = {
    "traversal_free", "plane_wave_eigencheck", "dwell_equivalence_free", "dwell_equivalence_barrier",
    "time_energy_uncertainty", "continuity_residual", "single_level_sawtooth", "two_level_both_sides",
    "two_level_literal_equality", "sawtooth_robertson_bound", "poincare_period",
    "newton_wigner_equivalence", "localization_correlation", "xb_commutator", "exploring_state_ab",
    "exploring_state_Ka", "resonance_factor_unimodular", "resonance_factor_minus_one",
    "background_phase_identity", "pole_migrates_to_real_axis", "lorentzian_decay_rate",
    "gamma_zero_recovers_base", "gamma_linearity", "full_residual_order_gamma2", "fourier_roundtrip",
    "fourier_reduction", "symmetric_rhs_vanishes", "rhs_energy_grid_halving",
}

#: checks that document a known deviation; their failure does not fail a suite
EXPECTED_FAILURES = {"two_level_literal_equality"}


def run_suite(name: str, tolerances: dict | None = None) -> list[Check]:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    names = list(SUITES) if name == "all" else [name]
    out = []
    for suite in names:
        for fn in SUITES[suite]:
            out.extend(_flatten(fn(tol)))
    return out


def registry_complete() -> bool:
    """True when each invariant name is produced by exactly one registered check.

    Names are read from the check functions' source, which avoids running
    the (expensive) checks just to enumerate them.
    """
    import inspect
    import re

    seen: dict = {}
    for suite, fns in SUITES.items():
        for fn in fns:
            for nm in re.findall(r'Check\(\s*"(\w+)"', inspect.getsource(fn)):
                seen.setdefault(nm, []).append(suite)
    return set(seen) == INVARIANTS and all(len(v) == 1 for v in seen.values())
