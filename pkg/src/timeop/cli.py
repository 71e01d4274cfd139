"""Command line front end: scenario runner and verification suites.

    timeop run scenario.json [--out DIR] [--tol NAME=VALUE ...]
    timeop verify {all,continuous,discrete,kg,resonance,dissipative}

Exit codes: 0 success, 1 a declared check failed, 2 input error,
3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks as ck
from . import discrete_time as dt
from . import dissipative as ds
from . import kg_position as kg
from . import resonance as rs
from .core_model import RectBarrier1D, SphericalWell
from .errors import ConvergenceError, TimeOpError
from .propagate import continuity_residual, synthesize_photon
from .time_stats import (
    dwell_time,
    mean_passage_time,
    moments_json,
    passage_distribution,
    traversal_time,
    uncertainty_product,
)

KINDS = ("passage", "dwell", "photon", "discrete", "kg", "resonance", "dissipative")
SUITE_NAMES = ("all",) + tuple(ck.SUITES)


class InputError(TimeOpError):
    """Malformed or invalid scenario input (exit code 2)."""


# ---------------------------------------------------------------------------
# scenario schema
# ---------------------------------------------------------------------------

SCHEMA = {
    "passage": {
        "kbar": 5.0, "a": 1.0, "x0": -10.0, "probes": [-5.0, 5.0, 15.0],
        "space": [-12.0, 22.0, 681], "time": [-3.0, 12.0, 601], "nk": 600, "barrier": None,
    },
    "dwell": {
        "kbar": 5.0, "a": 2.0, "x0": -20.0, "intervals": [[-5.0, 5.0], [-2.0, 2.0]],
        "space": [-60.0, 60.0, 2401], "time": [-4.0, 14.0, 721], "nk": 600,
        "barrier": {"V0": 14.0, "x_left": 0.0, "x_right": 0.5},
    },
    "photon": {
        "kbar": 5.0, "a": 1.0, "x0": -10.0, "c": 1.0, "probes": [0.0, 5.0],
        "space": [-15.0, 15.0, 601], "time": [-5.0, 25.0, 601], "nk": 400,
    },
    "discrete": {"levels": [0.0, 1.0], "amplitudes": [1.0, 1.0], "gamma_c": 0.0, "hbar": 1.0},
    "kg": {"n_packets": 5, "seed": 1, "m0": 1.0, "n": 48, "half_width": 7.0},
    "resonance": {
        "U0": 10.0, "a": 1.0, "n": 0, "mode": "threshold", "scan": [0.05, 30.0, 200],
        "pole_seed": None,
    },
    "dissipative": {
        "n_energy": 8, "nx": 81, "half_width": 2.5, "E_cut": 4.0, "E_star": None,
        "barrier_height": 2.0, "barrier_halfwidth": 0.5, "E_center": 2.0, "E_sigma": 0.6,
        "gammas": [1e-3, 2e-3, 4e-3],
    },
}


@dataclass
class Scenario:
    name: str
    kind: str
    parameters: dict
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "out"


def _line_col_message(exc: json.JSONDecodeError, path) -> str:
    return f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(_line_col_message(exc, source)) from exc
    if not isinstance(raw, dict):
        raise InputError(f"{source}: top level must be an object")
    for key in ("name", "kind"):
        if key not in raw:
            raise InputError(f"{source}: missing field '{key}'")
    unknown = set(raw) - {"name", "kind", "parameters", "tolerances", "output_dir"}
    if unknown:
        raise InputError(f"{source}: unknown field(s) {sorted(unknown)}")
    kind = raw["kind"]
    if kind not in KINDS:
        raise InputError(f"{source}: field 'kind' must be one of {list(KINDS)}, got {kind!r}")
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise InputError(f"{source}: field 'parameters' must be an object")
    schema = SCHEMA[kind]
    bad = set(params) - set(schema)
    if bad:
        raise InputError(f"{source}: unknown parameter(s) for kind {kind!r}: {sorted(bad)}")
    merged = {**schema, **params}
    for key, default in schema.items():
        val = merged[key]
        if isinstance(default, float) and not isinstance(val, (int, float)):
            raise InputError(f"{source}: parameters.{key} must be a number")
        if isinstance(default, int) and not isinstance(default, bool) and not isinstance(val, int):
            raise InputError(f"{source}: parameters.{key} must be an integer")
        if isinstance(default, list) and not isinstance(val, list):
            raise InputError(f"{source}: parameters.{key} must be a list")
    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict) or any(k not in ck.DEFAULT_TOLERANCES for k in tols):
        raise InputError(f"{source}: tolerances must map known names ({sorted(ck.DEFAULT_TOLERANCES)}) to numbers")
    return Scenario(str(raw["name"]), kind, merged, {k: float(v) for k, v in tols.items()},
                    str(raw.get("output_dir", "out")))


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    scenario: str
    kind: str
    files: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed or c.name in ck.EXPECTED_FAILURES for c in self.checks)

    def to_dict(self, timing: bool = False) -> dict:
        d = {"scenario": self.scenario, "kind": self.kind, "files": sorted(self.files),
             "checks": [c.to_dict() for c in self.checks], "results": self.results,
             "passed": self.ok}
        if timing:
            d["wall_time"] = self.wall_time
        return d


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


def _barrier(params):
    if params is None:
        return None
    try:
        return RectBarrier1D(float(params["V0"]), float(params["x_left"]), float(params["x_right"]))
    except (KeyError, TypeError) as exc:
        raise InputError("parameters.barrier needs V0, x_left and x_right") from exc


def _run_passage(sc: Scenario, out: Path, tol, rep: RunReport, threads: int):
    p = sc.parameters
    probes = [float(x) for x in p["probes"]]
    g, sys_, field_ = ck.gaussian_packet_field(p["kbar"], p["a"], p["x0"], tuple(p["space"]),
                                               tuple(p["time"]), barrier=_barrier(p["barrier"]),
                                               nk=p["nk"], probes=tuple(probes))
    reports, cols = {}, []
    for x in probes:
        d = passage_distribution(field_, x, "+")
        reports[f"x={x:g}"] = {**d.report().to_dict(),
                               "uncertainty": uncertainty_product(g, d, sys_).product}
        cols.append(d.weights)
    path = out / f"{sc.name}_W_plus.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["t"] + [f"W_plus_x={x:g}" for x in probes]) + "\n")
        for i, t in enumerate(field_.t):
            fh.write(",".join(f"{v:.12e}" for v in [t] + [c[i] for c in cols]) + "\n")
    mpath = out / f"{sc.name}_moments.json"
    _dump_json(reports, mpath)
    rep.files += [path.name, mpath.name]
    if p["barrier"] is None:
        vbar = p["kbar"] * sys_.units.hbar / sys_.units.mass
        worst = 0.0
        for xi, xf in zip(probes, probes[1:]):
            tau = traversal_time(field_, xi, xf)
            worst = max(worst, abs(tau - (xf - xi) / vbar) / ((xf - xi) / vbar))
        rep.checks.append(ck.Check("traversal_vs_free_motion", worst, tol["traversal_rel"],
                                   worst <= tol["traversal_rel"]))
    low = min(r["uncertainty"] for r in reports.values())
    bound = 0.5 * sys_.units.hbar - tol["uncertainty_slack"]
    rep.checks.append(ck.Check("time_energy_uncertainty", low, bound, low >= bound))
    rep.results = reports


def _run_dwell(sc, out, tol, rep, threads):
    p = sc.parameters
    _, _, field_ = ck.gaussian_packet_field(p["kbar"], p["a"], p["x0"], tuple(p["space"]),
                                            tuple(p["time"]), barrier=_barrier(p["barrier"]), nk=p["nk"])
    rows, worst = [], 0.0
    for xi, xf in p["intervals"]:
        a, b = dwell_time(field_, float(xi), float(xf))
        rows.append({"x_i": xi, "x_f": xf, "density_form": a, "flux_form": b})
        worst = max(worst, abs(a - b) / abs(a))
    key = "dwell_free_rel" if p["barrier"] is None else "dwell_barrier_rel"
    rep.checks.append(ck.Check("dwell_equivalence", worst, tol[key], worst <= tol[key]))
    rep.checks.append(ck.Check("continuity_residual", continuity_residual(field_), tol["continuity"],
                               continuity_residual(field_) <= tol["continuity"]))
    rep.results = {"dwell": rows}


def _run_photon(sc, out, tol, rep, threads):
    from .core_model import Dispersion, DispersionKind, SpaceGrid, TimeGrid, UnitSystem, WavenumberGrid
    from .core_model import make_gaussian_amplitude

    p = sc.parameters
    disp = Dispersion(DispersionKind.PHOTON, UnitSystem(c=p["c"]))
    half = 6.0 / (2.0 * p["a"])
    kgrid = WavenumberGrid.uniform(max(p["kbar"] - half, 1e-3), p["kbar"] + half, p["nk"])
    chi = make_gaussian_amplitude(p["kbar"], p["a"], kgrid, x0=p["x0"], dispersion=disp)
    field_ = synthesize_photon(chi, SpaceGrid.uniform(*p["space"]), TimeGrid.uniform(*p["time"]))
    res = {}
    for x in p["probes"]:
        res[f"x={x:g}"] = mean_passage_time(field_, float(x), "+")
    xs = sorted(float(x) for x in p["probes"])
    speed = (xs[-1] - xs[0]) / (res[f"x={xs[-1]:g}"].mean - res[f"x={xs[0]:g}"].mean)
    rel = abs(speed - p["c"]) / p["c"]
    rep.checks.append(ck.Check("photon_passage_speed", rel, 1e-6, rel <= 1e-6))
    path = out / f"{sc.name}_moments.json"
    moments_json(res, path)
    rep.files.append(path.name)
    rep.results = {"passage": {k: v.to_dict() for k, v in res.items()}, "speed": speed}


def _run_discrete(sc, out, tol, rep, threads):
    p = sc.parameters
    state = dt.DiscreteSpectrumState.build(p["levels"], p["amplitudes"], hbar=p["hbar"])
    r = dt.discrete_uncertainty(state, gamma_c=p["gamma_c"])
    path = out / f"{sc.name}_cycle.csv"
    dt.write_cycle_trace(state, path, gamma_c=p["gamma_c"])
    rep.files.append(path.name)
    gap = r.product - r.robertson_bound
    rep.checks.append(ck.Check("sawtooth_robertson_bound", gap, 0.0, gap >= -tol["discrete_quad"]))
    rep.results = {"D": state.D, "T": state.T, **r.to_dict()}


def _run_kg(sc, out, tol, rep, threads):
    p = sc.parameters
    rng = np.random.default_rng(p["seed"])
    pkts = [kg.random_packet(rng, m0=p["m0"], n=p["n"], half_width=p["half_width"])
            for _ in range(p["n_packets"])]
    work = lambda pk: (kg.nw_mean_detail(pk), kg.uncertainty_correlations(pk))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        results = list(ex.map(work, pkts))
    rep.checks += ck.check_kg(tol, results)
    rep.results = {"packets": [r.to_dict() for _, r in results]}


def _run_resonance(sc, out, tol, rep, threads):
    p = sc.parameters
    well = SphericalWell(p["U0"], p["a"])
    sol = rs.solve_exploring_state(well, p["n"], mode=p["mode"])
    lo, hi, n = p["scan"]
    energies = np.linspace(lo, hi, int(n))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        rows = [r[0] for r in ex.map(lambda E: rs.resonance_scan(well, sol.b, [E]), energies)]
    path = out / f"{sc.name}_scan.csv"
    rs.write_scan_csv(rows, path)
    rep.files.append(path.name)
    dev = max(abs(r[4] - 1) for r in rows)
    res = {"exploring_state": sol.to_dict(), "scattering_length": rs.scattering_length(well)}
    if p["n"] == 0 and abs(p["U0"] * p["a"] ** 2 - 10.0) < 1e-12:
        rep.checks.append(ck.Check("exploring_state_ab", sol.ab, tol["ab_hi"],
                                   tol["ab_lo"] <= sol.ab <= tol["ab_hi"]))
    rep.checks.append(ck.Check("resonance_factor_unimodular", dev, tol["F0_unit"], dev <= tol["F0_unit"]))
    if p["pole_seed"] is not None:
        seed = complex(*p["pole_seed"])
        pole = rs.complex_pole(well, sol.b, seed)
        res["pole"] = {k: v for k, v in pole.to_dict().items() if k != "diagnostics"}
        rep.checks.append(ck.Check("pole_lower_half_plane", pole.E_complex.imag, 0.0, pole.E_complex.imag < 0))
    jpath = out / f"{sc.name}_resonance.json"
    _dump_json(res, jpath)
    rep.files.append(jpath.name)
    rep.results = res


def _run_dissipative(sc, out, tol, rep, threads):
    p = sc.parameters
    kwargs = {k: p[k] for k in ("n_energy", "nx", "half_width", "E_cut", "E_star", "barrier_height",
                                "barrier_halfwidth", "E_center", "E_sigma")}
    scn = ds.default_scenario(**kwargs)
    sol = ds.solve_order1(scn)
    sweep = ds.gamma_sweep(scn, tuple(p["gammas"]))
    path = out / f"{sc.name}_phi.csv"
    sol.to_csv(path)
    rep.files.append(path.name)
    rep.checks += [
        ck.Check("gamma_zero_recovers_base", sol.residual0, tol["gamma0_residual"],
                 sol.residual0 <= tol["gamma0_residual"]),
        ck.Check("gamma_linearity", sweep.r_squared, tol["r_squared"], sweep.r_squared >= tol["r_squared"]),
        ck.Check("full_residual_order_gamma2", sweep.ratio_spread, tol["ratio_spread"],
                 sweep.ratio_spread <= tol["ratio_spread"]),
    ]
    rep.results = {"solution": sol.report(), "sweep": sweep.to_dict()}


HANDLERS = {
    "passage": _run_passage, "dwell": _run_dwell, "photon": _run_photon, "discrete": _run_discrete,
    "kg": _run_kg, "resonance": _run_resonance, "dissipative": _run_dissipative,
}


def run(scenario: Scenario, out_dir=None, tol_overrides=None, threads: int = 1) -> RunReport:
    out = Path(out_dir or scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tol = {**ck.DEFAULT_TOLERANCES, **scenario.tolerances, **(tol_overrides or {})}
    rep = RunReport(scenario.name, scenario.kind)
    start = time.perf_counter()
    HANDLERS[scenario.kind](scenario, out, tol, rep, threads)
    rep.wall_time = time.perf_counter() - start
    path = out / f"{scenario.name}_report.json"
    rep.files.append(path.name)
    _dump_json(rep.to_dict(), path)
    return rep


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or name not in ck.DEFAULT_TOLERANCES:
            raise InputError(f"--tol expects NAME=VALUE with NAME in {sorted(ck.DEFAULT_TOLERANCES)}")
        try:
            out[name] = float(value)
        except ValueError as exc:
            raise InputError(f"--tol {name}: {value!r} is not a number") from exc
    return out


def _print_table(checks) -> None:
    width = max([len(c.name) for c in checks] + [5])
    print(f"{'check':<{width}}  {'value':>12}  {'bound':>12}  status")
    for c in checks:
        status = "PASS" if c.passed else ("XFAIL" if c.name in ck.EXPECTED_FAILURES else "FAIL")
        print(f"{c.name:<{width}}  {c.value:>12.4e}  {c.bound:>12.4e}  {status}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override")
    common.add_argument("--threads", type=int, default=1, help="worker threads inside modules")
    parser = argparse.ArgumentParser(prog="timeop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="run a JSON scenario file")
    p_run.add_argument("file")
    p_ver = sub.add_parser("verify", parents=[common], help="run a built-in verification suite")
    p_ver.add_argument("suite", choices=SUITE_NAMES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        tol = _parse_tol(args.tol)
        if args.command == "run":
            scenario = load_scenario(args.file)
            rep = run(scenario, args.out, tol, args.threads)
            _print_table(rep.checks)
            print(f"wrote {len(rep.files)} file(s) in {rep.wall_time:.2f} s")
            return 0 if rep.ok else 1
        if not ck.registry_complete():
            print("error: invariant registry is incomplete", file=sys.stderr)
            return 2
        start = time.perf_counter()
        checks = ck.run_suite(args.suite, tol)
        _print_table(checks)
        print(f"suite {args.suite}: {len(checks)} check(s) in {time.perf_counter() - start:.2f} s")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            _dump_json({"suite": args.suite, "checks": [c.to_dict() for c in checks]},
                       Path(args.out) / f"verify_{args.suite}.json")
        ok = all(c.passed or c.name in ck.EXPECTED_FAILURES for c in checks)
        return 0 if ok else 1
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return exc.exit_code
    except TimeOpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
