"""Acceptance criteria 1-9 as named groups of registered checks.

Each criterion runs its checks, times them against a runtime budget and
produces a one-line PASS/FAIL summary.  The test suite and
``scripts/run_acceptance.py`` both use :func:`evaluate`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import checks as ck


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    checks: tuple
    budget: float | None = None
    #: checks reported alongside the criterion but not part of its verdict
    informational: tuple = ()


@dataclass
class CriterionResult:
    criterion: Criterion
    checks: list
    extra: list
    elapsed: float
    passed: bool = field(init=False)

    def __post_init__(self):
        within = self.criterion.budget is None or self.elapsed <= self.criterion.budget
        self.passed = within and all(c.passed for c in self.checks)

    def line(self) -> str:
        c = self.criterion
        status = "PASS" if self.passed else "FAIL"
        parts = [f"{x.name}={x.value:.4g} (bound {x.bound:.4g})" for x in self.checks]
        parts += [f"[info] {x.name}={x.value:.4g}" for x in self.extra]
        budget = f" / {c.budget:g} s" if c.budget is not None else ""
        return f"CRITERION {c.number} {status}: {c.title}; " + "; ".join(parts) + f"; {self.elapsed:.2f} s{budget}"


CRITERIA = (
    Criterion(1, "free-motion traversal time", (ck.check_traversal_free,), 10.0),
    Criterion(2, "plane-wave eigencheck", (ck.check_eigencheck,), 1.0),
    Criterion(3, "dwell-time equivalence", (ck.check_dwell_free, ck.check_dwell_barrier), 60.0),
    Criterion(4, "time-energy uncertainty sweep", (ck.check_uncertainty,)),
    Criterion(5, "discrete spectrum saw-tooth", (ck.check_single_level, ck.check_two_level_sides), 5.0,
              informational=(ck.check_two_level_relation,)),
    Criterion(6, "Newton-Wigner equivalence and localization", (ck.check_kg,), 60.0),
    Criterion(7, "resonance anchor", (ck.check_ab_band, ck.check_F0_unit), 30.0),
    Criterion(8, "Lorentzian decay law", (ck.check_decay,)),
    Criterion(9, "dissipative solver", (ck.check_gamma_zero, ck.check_gamma_sweep), 120.0),
)


def _run(fns, tol) -> list:
    out = []
    for fn in fns:
        r = fn(tol)
        out.extend(r if isinstance(r, list) else [r])
    return out


def evaluate(number: int, tolerances: dict | None = None) -> CriterionResult:
    tol = {**ck.DEFAULT_TOLERANCES, **(tolerances or {})}
    crit = CRITERIA[number - 1]
    start = time.perf_counter()
    checks = _run(crit.checks, tol)
    elapsed = time.perf_counter() - start
    extra = _run(crit.informational, tol)
    return CriterionResult(crit, checks, extra, elapsed)
