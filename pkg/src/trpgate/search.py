"""Twist-strength scans, minimum search and window-convergence checks."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import DEFAULT_SETTINGS, IntegrationError, IntegratorSettings, evolve
from .profiles import SweepProfile, resonance_times

CONVERGENCE_TOLERANCE = 1e-3
SWEEP_HEADER = ("eta", "P", "norm_drift", "tau0", "wall_ms")


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


@dataclass(frozen=True)
class SweepSpec:
    """An evenly spaced scan of ``eta`` at fixed ``n`` and ``lambda``.

    ``steps == 1`` is a single-point scan and needs ``eta_lo == eta_hi``.
    ``tau0 = None`` resolves the window per point from its resonances.
    """

    n: int
    lam: float
    eta_lo: float
    eta_hi: float
    steps: int
    settings: IntegratorSettings = DEFAULT_SETTINGS
    tau0: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not (math.isfinite(self.eta_lo) and math.isfinite(self.eta_hi)):
            raise ValueError("eta bounds must be finite")
        if self.steps == 1 and self.eta_lo != self.eta_hi:
            raise ValueError("a single-step sweep needs eta_lo == eta_hi")
        if self.steps >= 2 and not self.eta_lo < self.eta_hi:
            raise ValueError(
                f"empty eta range [{self.eta_lo}, {self.eta_hi}] for {self.steps} steps")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        # Fail early on an unusable order or window.
        SweepProfile.from_dimensionless(self.n, self.lam, self.eta_lo, tau0=self.tau0)

    def etas(self) -> np.ndarray:
        # Rounded so grid points print as typed (3.97e-3, not 3.9700000000000004e-3).
        grid = np.linspace(self.eta_lo, self.eta_hi, int(self.steps))
        return np.array([float(f"{x:.15g}") for x in grid])

    def describe(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "eta_lo": self.eta_lo,
            "eta_hi": self.eta_hi,
            "steps": int(self.steps),
            "tau0": self.tau0,
            "integrator": dataclasses.asdict(self.settings),
        }

    def settings_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class SweepRow(NamedTuple):
    eta: float
    P: float
    norm_drift: float
    tau0: float
    wall_ms: float
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple

    @property
    def etas(self) -> np.ndarray:
        return np.array([r.eta for r in self.rows])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([r.P for r in self.rows])

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.error is not None]

    def write_csv(self, fh, timing: bool = False) -> None:
        """Rows as CSV.  Wall times are left blank unless ``timing`` is set,
        which keeps the file byte-identical between runs."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in self.rows:
            p = None if math.isnan(r.P) else r.P
            d = None if math.isnan(r.norm_drift) else r.norm_drift
            w.writerow([_fmt(r.eta), _fmt(p), _fmt(d), _fmt(r.tau0),
                        _fmt(r.wall_ms) if timing else ""])

    def metadata(self) -> dict:
        return {
            "spec": self.spec.describe(),
            "settings_hash": self.spec.settings_hash(),
            "tau0_used": [r.tau0 for r in self.rows],
            "wall_ms": [r.wall_ms for r in self.rows],
            "errors": {_fmt(r.eta): r.error for r in self.rows if r.error is not None},
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }


def _run_row(spec: SweepSpec, eta: float) -> SweepRow:
    profile = SweepProfile.from_dimensionless(spec.n, spec.lam, float(eta), tau0=spec.tau0)
    start = time.perf_counter()
    try:
        traj = evolve(profile, spec.settings, n_points=2)
    except IntegrationError as exc:
        wall = 1e3 * (time.perf_counter() - start)
        return SweepRow(float(eta), math.nan, math.nan, profile.tau0, wall, str(exc))
    wall = 1e3 * (time.perf_counter() - start)
    return SweepRow(float(eta), traj.final_p, traj.norm_drift, profile.tau0, wall)


def sweep_eta(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Final transition probability at each grid point of ``spec``.

    Rows come back in grid order whatever the worker count.  A row whose
    integration fails carries ``P = nan`` and the error message.
    """
    etas = spec.etas()
    if workers > 1 and len(etas) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda e: _run_row(spec, e), etas))
    else:
        rows = [_run_row(spec, e) for e in etas]
    return SweepResult(spec=spec, rows=tuple(rows))


class NoInteriorMinimum(ValueError):
    """The coarse scan's lowest point sits on the bracket edge."""


class Minimum(NamedTuple):
    eta: float
    P: float


def find_minimum(n: int, lam: float, bracket: Sequence[float], tolerance: float = 1e-7,
                 settings: IntegratorSettings = DEFAULT_SETTINGS,
                 objective: Optional[Callable[[float], float]] = None,
                 coarse_points: int = 11, tau0: Optional[float] = None) -> Minimum:
    """Locate the minimum of P(eta) inside ``bracket`` to within ``tolerance`` in eta.

    A coarse grid first checks that the lowest value is interior (so the
    discrete slope changes sign); golden-section search then refines on the
    two neighbouring grid cells.  ``objective`` replaces the ODE-based P(eta).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")
    if coarse_points < 3:
        raise ValueError("coarse_points must be at least 3")
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if objective is None:
        def objective(eta):
            profile = SweepProfile.from_dimensionless(n, lam, eta, tau0=tau0)
            return evolve(profile, settings, n_points=2).final_p

    grid = np.linspace(lo, hi, coarse_points)
    values = np.array([objective(float(x)) for x in grid])
    k = int(np.argmin(values))
    if k == 0 or k == len(grid) - 1:
        raise NoInteriorMinimum(
            f"P(eta) is lowest at the bracket edge eta={grid[k]:.6g}; "
            f"no interior minimum in [{lo:.6g}, {hi:.6g}]")

    a, c = float(grid[k - 1]), float(grid[k + 1])
    width = c - a
    # scipy's golden tolerance is relative to |x|; on u = 1 + (eta - a)/width,
    # which stays within [1, 2], it becomes an absolute tolerance on eta.
    res = minimize_scalar(lambda u: objective(a + (u - 1.0) * width),
                          bracket=(1.0, 1.5, 2.0), method="golden",
                          tol=tolerance / (4.0 * width), options={"maxiter": 500})
    eta_star = a + (float(res.x) - 1.0) * width
    if not a <= eta_star <= c:
        eta_star = float(grid[k])
    return Minimum(eta_star, float(objective(eta_star)))


@dataclass(frozen=True)
class ConvergenceReport:
    """P at each window of a ladder.

    ``converged`` is None for a single-window ladder.  Otherwise it is true
    when successive changes stay within ``CONVERGENCE_TOLERANCE`` and every
    window contains all the resonances.
    """

    rows: tuple
    converged: Optional[bool]
    covers_resonances: bool
    max_change: Optional[float]


def convergence_report(n: int, lam: float, eta: float, ladder: Sequence[float],
                       settings: IntegratorSettings = DEFAULT_SETTINGS) -> ConvergenceReport:
    ladder = [float(t) for t in ladder]
    if not ladder:
        raise ValueError("ladder must not be empty")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"ladder must be strictly increasing, got {ladder}")
    reach = max(abs(t) for t in resonance_times(n, eta).times)
    rows = []
    for tau0 in ladder:
        profile = SweepProfile.from_dimensionless(n, lam, eta, tau0=tau0)
        rows.append((tau0, evolve(profile, settings, n_points=2).final_p))
    covers = all(tau0 / 2 > reach for tau0 in ladder)
    if len(rows) == 1:
        return ConvergenceReport(tuple(rows), None, covers, None)
    change = max(abs(q[1] - p[1]) for p, q in zip(rows, rows[1:]))
    return ConvergenceReport(tuple(rows), bool(covers and change <= CONVERGENCE_TOLERANCE),
                             covers, change)
