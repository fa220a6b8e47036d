"""Twisted rapid passage sweep profiles.

A profile inverts the longitudinal field linearly (``a*t``) while the
transverse field of magnitude ``b`` twists with azimuth
``phi_n(t) = (2/n) * B * t**n``.  Everything is in angular-frequency units
with hbar = 1; experimental quantities quoted in Hz are converted at the
boundary (see :class:`ExperimentalParams`).

Dimensionless form: ``tau = (a/b) t``, ``lambda = a / b**2`` and
``eta_n = (B/a) (b/a)**(n-2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MIN_HALF_WINDOW = 10.0
DEFAULT_MIN_TAU0 = 120.0
TAU0_RESONANCE_FACTOR = 6.0


class Regime(str, enum.Enum):
    """Resonance regime of a polynomial twist (sign of the twist x parity of n)."""

    POSITIVE_ODD = "sgn(B)=+1, n odd"
    POSITIVE_EVEN = "sgn(B)=+1, n even"
    NEGATIVE_ODD = "sgn(B)=-1, n odd"
    NEGATIVE_EVEN = "sgn(B)=-1, n even"
    TWISTLESS = "twistless (B=0)"
    QUADRATIC = "quadratic twist (n=2)"
    DEGENERATE = "degenerate (n=2, B=a): z-field vanishes identically"


@dataclass(frozen=True)
class DimensionlessParams:
    lam: float
    eta: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not math.isfinite(self.eta):
            raise ValueError(f"eta must be finite, got {self.eta}")


@dataclass(frozen=True)
class ResonanceSet:
    """Real resonance times (dimensionless, ascending) and their regime."""

    times: tuple
    regime: Regime

    @property
    def degenerate(self) -> bool:
        return self.regime is Regime.DEGENERATE

    def __len__(self):
        return len(self.times)


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"twist order n must be an integer >= 1, got {n!r}")
    return int(n)


def resonance_times(n: int, eta: float) -> ResonanceSet:
    """Zeros of the rotating-frame z-field ``tau - eta * tau**(n-1)``.

    Besides ``tau = 0`` these are the real roots of ``tau**(n-2) = 1/eta``,
    taken in closed form.
    """
    n = _check_order(n)
    if n < 2:
        raise ValueError("resonance times are defined for n >= 2")
    if n == 2:
        regime = Regime.DEGENERATE if eta == 1.0 else Regime.QUADRATIC
        return ResonanceSet((0.0,), regime)
    if eta == 0.0:
        return ResonanceSet((0.0,), Regime.TWISTLESS)

    r = abs(eta) ** (-1.0 / (n - 2))
    if n % 2 == 0:
        if eta > 0:
            return ResonanceSet((-r, 0.0, r), Regime.POSITIVE_EVEN)
        return ResonanceSet((0.0,), Regime.NEGATIVE_EVEN)
    if eta > 0:
        return ResonanceSet((0.0, r), Regime.POSITIVE_ODD)
    return ResonanceSet((-r, 0.0), Regime.NEGATIVE_ODD)


def default_tau0(n: int, eta: float) -> float:
    """Window policy: ``max(120, 6 * max|tau*|)`` over the resonance times."""
    if n < 2:
        extent = abs(eta)
    else:
        extent = max(abs(t) for t in resonance_times(n, eta).times)
    return max(DEFAULT_MIN_TAU0, TAU0_RESONANCE_FACTOR * extent)


def eta_from_theory(n: int, a: float, b: float, B: float) -> DimensionlessParams:
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    n = _check_order(n)
    return DimensionlessParams(lam=a / b**2, eta=(B / a) * (b / a) ** (n - 2))


def twist_from_eta(n: int, a: float, b: float, eta: float) -> float:
    """Inverse of :func:`eta_from_theory`: the twist strength B giving ``eta``."""
    n = _check_order(n)
    return eta * a * (a / b) ** (n - 2)


@dataclass(frozen=True)
class SweepProfile:
    """One TRP pulse.

    ``tau0`` is the dimensionless window; ``None`` resolves it with
    :func:`default_tau0`.  ``tau0 = 0`` is accepted as the null sweep.
    """

    n: int
    b: float
    a: float
    B: float
    tau0: Optional[float] = None
    # Exact (lambda, eta) when built from them; the dimensional round trip
    # can otherwise move eta by an ulp.
    _exact: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "n", _check_order(self.n))
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"b must be positive and finite, got {self.b}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive and finite, got {self.a}")
        if not math.isfinite(self.B):
            raise ValueError(f"B must be finite, got {self.B}")
        if self._exact is not None:
            lam, eta = self._exact
            derived = eta_from_theory(self.n, self.a, self.b, self.B)
            if not (math.isclose(lam, derived.lam, rel_tol=1e-12)
                    and math.isclose(eta, derived.eta, rel_tol=1e-12, abs_tol=1e-300)):
                raise ValueError("dimensionless pair inconsistent with (a, b, B)")
        if self.tau0 is None:
            object.__setattr__(self, "tau0", default_tau0(self.n, self.eta))
        tau0 = float(self.tau0)
        if tau0 != 0.0 and not tau0 / 2 >= MIN_HALF_WINDOW:
            raise ValueError(
                f"tau0/2 must be >= {MIN_HALF_WINDOW} (aT/2 >> b), got tau0={tau0}")
        object.__setattr__(self, "tau0", tau0)

    @classmethod
    def from_dimensionless(cls, n, lam, eta, tau0=None, b=1.0) -> "SweepProfile":
        a = lam * b**2
        return cls(n=n, b=b, a=a, B=twist_from_eta(n, a, b, eta), tau0=tau0,
                   _exact=(float(lam), float(eta)))

    @property
    def params(self) -> DimensionlessParams:
        return DimensionlessParams(self.lam, self.eta)

    @property
    def lam(self) -> float:
        if self._exact is not None:
            return self._exact[0]
        return self.a / self.b**2

    @property
    def eta(self) -> float:
        if self._exact is not None:
            return self._exact[1]
        return (self.B / self.a) * (self.b / self.a) ** (self.n - 2)

    @property
    def duration(self) -> float:
        """Sweep duration T = tau0 * b / a."""
        return self.tau0 * self.b / self.a

    def to_time(self, tau):
        return np.asarray(tau) * (self.b / self.a)

    def to_tau(self, t):
        return np.asarray(t) * (self.a / self.b)

    def resonances(self) -> ResonanceSet:
        return resonance_times(self.n, self.eta)

    def window(self):
        return (-self.tau0 / 2, self.tau0 / 2)


def phase(profile: SweepProfile, t):
    """Twist azimuth ``(2/n) B t**n``."""
    return (2.0 / profile.n) * profile.B * np.asarray(t, dtype=float) ** profile.n


def phase_rate(profile: SweepProfile, t):
    """Time derivative of :func:`phase`, ``2 B t**(n-1)``."""
    return 2.0 * profile.B * np.asarray(t, dtype=float) ** (profile.n - 1)


def lab_frame_field(profile: SweepProfile, t, detuning=0.0):
    """Lab-frame field vector(s), shape ``(..., 3)``.

    The transverse component turns clockwise about z (azimuth ``-phi``), the
    sense in which a spin with H = -sigma.F precesses; this is what puts the
    rotating-frame z-field at ``a t - phi'/2``.  ``detuning`` is a constant
    added to the z-component (resonance offset).
    """
    t = np.asarray(t, dtype=float)
    phi = phase(profile, t)
    b = profile.b
    return np.stack(
        [b * np.cos(phi), -b * np.sin(phi), profile.a * t + detuning], axis=-1)


def rotating_frame_field(profile: SweepProfile, t, detuning=0.0):
    """Field seen in the frame co-rotating with the transverse field, ``(x, z)``."""
    t = np.asarray(t, dtype=float)
    z = profile.a * t - 0.5 * phase_rate(profile, t) + detuning
    return np.stack([np.full_like(z, profile.b), z], axis=-1)


def energy_gap(profile: SweepProfile, t):
    """Rotating-frame level splitting ``2 sqrt(b^2 + z^2)``; minimal (2b) at resonance."""
    z = rotating_frame_field(profile, t)[..., 1]
    return 2.0 * np.hypot(profile.b, z)


def sweep_bandwidth(profile: SweepProfile) -> float:
    """Largest |rotating-frame z-field| reached inside the window (angular units).

    A resonance offset larger than this is never crossed during the sweep.
    """
    lo, hi = profile.window()
    n = profile.n
    candidates = [lo, hi]
    if n >= 3 and profile.eta != 0.0:
        # Interior extrema of tau - eta tau^(n-1): (n-1) eta tau^(n-2) = 1.
        candidates += [t for t in resonance_times(n, profile.eta * (n - 1)).times
                       if lo < t < hi]
    z = rotating_frame_field(profile, profile.to_time(np.array(candidates)))[:, 1]
    return float(np.max(np.abs(z)))


@dataclass(frozen=True)
class ExperimentalParams:
    """NMR-side parameterization, frequencies quoted in Hz.

    The eta_3/eta_4 formulas are dimensionless ratios, so a common
    2*pi cancels in them.  Dimensional results (T_4, the theory-side a and b)
    are computed from the quoted numbers verbatim unless ``angular`` is set,
    in which case the quoted values are first converted to rad/s.
    """

    A: float
    delta: float
    omega1: float
    B_exp: float = 0.0
    omega0: float = 0.0
    angular: bool = False

    def __post_init__(self):
        for name in ("A", "delta", "omega1"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def unit_scale(self) -> float:
        return 2.0 * math.pi if self.angular else 1.0


def _check_translatable_order(n):
    if n not in (3, 4):
        raise ValueError(f"experimental translation is defined for n in (3, 4), got {n}")


def eta_from_experiment(n: int, exp: ExperimentalParams, B_exp: Optional[float] = None) -> float:
    """eta_3 = 3 B delta omega1 / (4 A^2);  eta_4 = B delta omega1^2 / (2 A^3)."""
    _check_translatable_order(n)
    B = exp.B_exp if B_exp is None else B_exp
    if n == 3:
        return 3.0 * B * exp.delta * exp.omega1 / (4.0 * exp.A**2)
    return B * exp.delta * exp.omega1**2 / (2.0 * exp.A**3)


def twist_from_experiment(n: int, exp: ExperimentalParams, eta: float) -> float:
    """Experimental twist strength B that produces the target ``eta``."""
    _check_translatable_order(n)
    if n == 3:
        return 4.0 * eta * exp.A**2 / (3.0 * exp.delta * exp.omega1)
    return 2.0 * eta * exp.A**3 / (exp.delta * exp.omega1**2)


def inversion_time_quartic(A: float, omega1: float, lam: float) -> float:
    """T_4 = 4 A / (omega1^2 lambda)."""
    if not (A > 0 and omega1 > 0 and lam > 0):
        raise ValueError("A, omega1 and lambda must be positive")
    return 4.0 * A / (omega1**2 * lam)


def frequency_schedules(profile: SweepProfile, exp: ExperimentalParams, t):
    """Detector and rf frequency sweeps ``(omega_det, omega_rf)`` in angular units.

    omega_det = omega0 + 2 a t and omega_rf = omega_det - phi_n'; the rf sweep
    crosses the Larmor frequency omega0 exactly at the resonance times.
    """
    t = np.asarray(t, dtype=float)
    omega0 = 2.0 * math.pi * exp.omega0
    det = omega0 + 2.0 * profile.a * t
    return det, det - phase_rate(profile, t)


def translate(n: int, exp: ExperimentalParams, lam: float, eta: Optional[float] = None) -> dict:
    """Both parameterizations of one cubic or quartic pulse.

    ``eta`` given: B_exp is solved for; otherwise eta follows from ``exp.B_exp``.
    The theory side uses b = omega1/2 (rotating component of a linearly
    polarized drive of amplitude omega1) and a = lambda b^2, under which the
    quartic inversion time is exactly T_4 = A / a.
    """
    _check_translatable_order(n)
    if eta is None:
        eta = eta_from_experiment(n, exp)
        B_exp = exp.B_exp
    else:
        B_exp = twist_from_experiment(n, exp, eta)
    s = exp.unit_scale
    b = 0.5 * s * exp.omega1
    a = lam * b**2
    out = {
        "n": n,
        "lambda": lam,
        "eta": eta,
        "a": a,
        "b": b,
        "B": twist_from_eta(n, a, b, eta),
        "A_hz": exp.A,
        "delta_hz": exp.delta,
        "omega1_hz": exp.omega1,
        "B_exp": B_exp,
        "angular": exp.angular,
    }
    if n == 4:
        out["T4_s"] = inversion_time_quartic(s * exp.A, s * exp.omega1, lam)
    return out
