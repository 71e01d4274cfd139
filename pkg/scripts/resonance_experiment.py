"""Exploring-state root, resonance-factor scan, phase crossing, pole
migration and Jost poles for a spherical square well (hbar = 1, 2m = 1)."""

import argparse
import json
from pathlib import Path

import numpy as np

from timeop import resonance as rs
from timeop.core_model import SphericalWell
from timeop.errors import ConvergenceError, NoResonanceError


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--U0", type=float, default=10.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--out", default="out/resonance_experiment")
    ap.add_argument("--seeds", type=complex, nargs="*", default=[12.2 - 5j, 46 - 24j, 103 - 41j])
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    well = SphericalWell(args.U0, args.a)

    summary = {"U0": args.U0, "a": args.a, "scattering_length": rs.scattering_length(well)}
    roots = {}
    for n in range(3):
        try:
            roots[n] = rs.solve_exploring_state(well, n).to_dict()
        except NoResonanceError as exc:
            roots[n] = {"error": str(exc)}
    summary["exploring_roots"] = roots
    b = roots[0]["b"]

    rows = rs.resonance_scan(well, b, np.linspace(0.05, 30.0, 600))
    rs.write_scan_csv(rows, out / "scan.csv")

    E_c, slope = rs.phase_crossing(well, b, 0.02, 1.0)
    rf = rs.resonance_factor(well, b, E_c)
    summary["crossing"] = {"E": E_c, "phase_slope": slope, "lambda0": rf.lambda0,
                           "lambda0_overlap": rf.lambda0_overlap,
                           "background_phase": rf.background_phase}

    path = rs.alpha_continuation(well, b, E_c - 0.05j, rf.lambda0 * np.linspace(0.5, 1.0, 11))
    summary["alpha_path"] = [[s.alpha, s.E_complex.real, s.E_complex.imag] for s in path]

    poles = []
    for seed in args.seeds:
        try:
            s = rs.complex_pole(well, b, seed)
            poles.append([s.E_R, s.gamma0])
        except ConvergenceError as exc:
            poles.append({"seed": [seed.real, seed.imag], "error": str(exc)})
    summary["jost_poles"] = poles

    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps({k: summary[k] for k in ("crossing", "jost_poles")}, indent=2))


if __name__ == "__main__":
    main()
