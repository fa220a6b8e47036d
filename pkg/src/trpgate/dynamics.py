"""Single-qubit dynamics under a twisted rapid passage sweep.

The spinor is integrated in the fixed lab basis (sigma_z eigenbasis,
components ``(c_up, c_down)``) in dimensionless time, where the equation of
motion reads ``i dpsi/dtau = -(1/lambda) sigma.f(tau) psi`` with
``f = F/b``.  The trajectory reports the amplitudes ``S``, ``I`` on the
instantaneous eigenstates ``|E-(t)>``, ``|E+(t)>`` and ``P = |I|^2``.

Which eigenstates.  Once the transverse field twists, the eigenstates of the
lab-frame field are not stationary states of the motion away from resonance:
the field spins much faster than the qubit precesses, and the lab-basis P
carries an O(1/tau) oscillation that never settles at a finite window edge.
By default S, I and P therefore refer to the *dressed* eigenstates, those of
the field seen in the co-rotating frame mapped back into the lab basis, with
labels chosen to coincide with the lab ``E-``/``E+`` (see
:func:`dressed_frame`).  Both sets reduce to sigma_z eigenstates far from the
crossings, so the two definitions share the same infinite-window limit, but
the dressed one is already converged at any window that holds the
resonances.  Without twist the two bases are identical.
``IntegratorSettings(basis="lab")`` selects the lab eigenstates throughout.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np

from . import _ode
from .profiles import SweepProfile, lab_frame_field, phase, rotating_frame_field

FAULT_TOLERANCE_THRESHOLD = 1e-4
TRAJECTORY_HEADER = ("tau", "Re_S", "Im_S", "Re_I", "Im_I", "P")


class IntegrationError(RuntimeError):
    """The adaptive stepper gave up; ``tau`` is where it stopped."""

    def __init__(self, message, tau):
        super().__init__(f"{message} at tau={tau!r}")
        self.tau = tau


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = 1.0
    n_points: int = 4096
    frame: str = "lab"
    basis: str = "dressed"
    max_steps: int = 50_000_000

    def __post_init__(self):
        for name in ("rtol", "atol"):
            v = getattr(self, name)
            if not 0.0 < v <= 1e-6:
                raise ValueError(f"{name} must lie in (0, 1e-6], got {v}")
        if not self.max_step > 0:
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if self.frame not in ("lab", "rotating"):
            raise ValueError(f"frame must be 'lab' or 'rotating', got {self.frame!r}")
        if self.basis not in ("dressed", "lab"):
            raise ValueError(f"basis must be 'dressed' or 'lab', got {self.basis!r}")


DEFAULT_SETTINGS = IntegratorSettings()


@dataclass(frozen=True)
class AdiabaticFrame:
    """Instantaneous eigenpairs of H = -sigma.F.

    ``minus`` has its Bloch vector along +F and energy ``e_minus = -|F|``.
    Spinors carry the gauge of :func:`eigenbasis`.
    """

    e_minus: np.ndarray
    e_plus: np.ndarray
    minus: np.ndarray
    plus: np.ndarray


def eigenbasis(F):
    """Eigenspinors of ``-sigma.F`` for field vector(s) ``F`` of shape (..., 3).

    Gauge: the up component is real and non-negative, i.e.
    ``|E-> = (cos(theta/2), e^{i phi} sin(theta/2))`` and
    ``|E+> = (sin(theta/2), -e^{i phi} cos(theta/2))``.  This is smooth in F
    as long as the transverse part does not vanish while F points along -z.
    """
    F = np.asarray(F, dtype=float)
    fx, fy, fz = F[..., 0], F[..., 1], F[..., 2]
    ft = np.hypot(fx, fy)
    f = np.hypot(ft, fz)
    # Half-angle cosines without cancellation on either hemisphere.
    with np.errstate(divide="ignore", invalid="ignore"):
        c_up = np.sqrt((f + fz) / (2 * f))
        s_dn = np.sqrt((f - fz) / (2 * f))
        c = np.where(fz >= 0, c_up, ft / (2 * f * s_dn))
        s = np.where(fz >= 0, ft / (2 * f * c_up), s_dn)
    c = np.where(f == 0, 1.0, c)
    s = np.where(f == 0, 0.0, s)
    ph = np.exp(1j * np.arctan2(fy, fx))
    minus = np.stack([c + 0j, ph * s], axis=-1)
    plus = np.stack([s + 0j, -ph * c], axis=-1)
    return f, minus, plus


def adiabatic_frame(profile: SweepProfile, t, detuning=0.0) -> AdiabaticFrame:
    f, minus, plus = eigenbasis(lab_frame_field(profile, t, detuning))
    return AdiabaticFrame(e_minus=-f, e_plus=f, minus=minus, plus=plus)


def dressed_frame(profile: SweepProfile, t, detuning=0.0) -> AdiabaticFrame:
    """Eigenbasis of the co-rotating-frame field, expressed in the lab basis.

    The dressed field is the lab field with its z-component replaced by the
    rotating-frame one.  Labels follow the lab eigenstates: where the two
    z-components have opposite sign (outside an outer resonance), ``minus`` is
    the state anti-parallel to the dressed field.  The labels therefore swap
    exactly at the outer resonance times, where both dressed states lie in
    the transverse plane.
    """
    lab = lab_frame_field(profile, t, detuning)
    z = rotating_frame_field(profile, t, detuning)[..., 1]
    dressed = lab.copy()
    dressed[..., 2] = z
    flip = (lab[..., 2] * z) < 0
    f, minus, plus = eigenbasis(dressed)
    m = np.where(flip[..., None], plus, minus)
    p = np.where(flip[..., None], minus, plus)
    return AdiabaticFrame(e_minus=-f, e_plus=f, minus=m, plus=p)


def _to_rotating(profile, t, psi, inverse=False):
    # Lab state psi = V chi with V = diag(e^{i phi/2}, e^{-i phi/2}).
    half = 0.5 * phase(profile, t)
    sign = 1.0 if inverse else -1.0
    out = np.array(psi, dtype=complex, copy=True)
    out[..., 0] *= np.exp(sign * 1j * half)
    out[..., 1] *= np.exp(-sign * 1j * half)
    return out


class TrajectoryPoint(NamedTuple):
    tau: float
    S: complex
    I: complex
    P: float


@dataclass(frozen=True)
class Trajectory:
    """Output of :func:`evolve` on a uniform tau grid (array-valued fields)."""

    tau: np.ndarray
    S: np.ndarray
    I: np.ndarray
    P: np.ndarray
    states: np.ndarray = field(repr=False)
    final_p: float
    norm_drift: float
    n_steps: int
    nfev: int

    def __iter__(self) -> Iterator[TrajectoryPoint]:
        for k in range(len(self.tau)):
            yield TrajectoryPoint(float(self.tau[k]), complex(self.S[k]),
                                  complex(self.I[k]), float(self.P[k]))

    def __len__(self):
        return len(self.tau)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_trajectory_csv(self, fh)


def write_trajectory_csv(traj: Trajectory, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for k in range(len(traj.tau)):
        s, i = traj.S[k], traj.I[k]
        w.writerow([f"{v:.17g}" for v in (traj.tau[k], s.real, s.imag, i.real, i.imag, traj.P[k])])


def _integrate(profile, psi0, tau_grid, settings, detuning):
    """Run the stepper on ``tau_grid`` and return lab-basis states."""
    frame = _ode.LAB if settings.frame == "lab" else _ode.ROTATING
    offset = detuning / profile.b
    y0 = np.asarray(psi0, dtype=np.complex128)
    t_grid = profile.to_time(tau_grid)
    if frame == _ode.ROTATING:
        y0 = _to_rotating(profile, t_grid[0], y0)
    ys, status, t_fail, n_acc, nfev = _ode.integrate(
        frame, profile.n, profile.lam, profile.eta, offset, y0,
        np.ascontiguousarray(tau_grid, dtype=np.float64),
        settings.rtol, settings.atol, settings.max_step, settings.max_steps)
    if status == _ode.STEP_TOO_SMALL:
        raise IntegrationError("step size underflow", float(t_fail))
    if status == _ode.TOO_MANY_STEPS:
        raise IntegrationError(f"exceeded {settings.max_steps} steps", float(t_fail))
    if frame == _ode.ROTATING:
        ys = _to_rotating(profile, t_grid, ys, inverse=True)
    return ys, n_acc, nfev


def propagate(profile: SweepProfile, psi0, settings: IntegratorSettings = DEFAULT_SETTINGS,
              detuning=0.0, n_points=2):
    """Evolve an arbitrary lab-basis spinor across the window.

    Returns ``(tau_grid, states)``; no projection is applied.
    """
    lo, hi = profile.window()
    tau_grid = np.linspace(lo, hi, n_points)
    ys, _, _ = _integrate(profile, psi0, tau_grid, settings, detuning)
    return tau_grid, ys


def _basis_frame(profile, t, settings, detuning):
    if settings.basis == "dressed":
        return dressed_frame(profile, t, detuning)
    return adiabatic_frame(profile, t, detuning)


def evolve(profile: SweepProfile, settings: IntegratorSettings = DEFAULT_SETTINGS,
           detuning=0.0, n_points: Optional[int] = None) -> Trajectory:
    """Integrate from ``-tau0/2`` to ``tau0/2`` starting in the ``E-`` state.

    The step sequence does not depend on the output grid, so ``final_p`` is
    bit-identical for any ``n_points``.
    """
    n_points = settings.n_points if n_points is None else n_points
    lo, hi = profile.window()
    tau_grid = np.linspace(lo, hi, n_points)
    t_grid = profile.to_time(tau_grid)
    frames = _basis_frame(profile, t_grid, settings, detuning)
    ys, n_acc, nfev = _integrate(profile, frames.minus[0], tau_grid, settings, detuning)

    S = np.einsum("ki,ki->k", frames.minus.conj(), ys)
    I = np.einsum("ki,ki->k", frames.plus.conj(), ys)
    P = np.abs(I) ** 2
    norm = np.sum(np.abs(ys) ** 2, axis=1)
    final_p = float(P[-1])
    return Trajectory(tau=tau_grid, S=S, I=I, P=P, states=ys, final_p=final_p,
                      norm_drift=float(np.max(np.abs(1.0 - norm))),
                      n_steps=int(n_acc), nfev=int(nfev))


def final_probability(lam, n, eta, settings: IntegratorSettings = DEFAULT_SETTINGS,
                      tau0=None) -> float:
    """Transition probability at the end of the sweep for dimensionless parameters."""
    profile = SweepProfile.from_dimensionless(n, lam, eta, tau0=tau0)
    return evolve(profile, settings, n_points=2).final_p


def landau_zener(lam: float) -> float:
    """exp(-pi / lambda), exact for the linear twistless sweep."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return math.exp(-math.pi / lam)


def pi_pulse_duration(omega1: float) -> float:
    if not omega1 > 0:
        raise ValueError(f"omega1 must be positive, got {omega1}")
    return math.pi / omega1


class NotGateError(NamedTuple):
    error: float
    fault_tolerant: bool


def not_gate_error(profile: SweepProfile,
                   settings: IntegratorSettings = DEFAULT_SETTINGS) -> NotGateError:
    """Error probability of the NOT gate realized by one sweep.

    A transition leaves the qubit in its initial computational state, so the
    transition probability is the gate error.
    """
    p = evolve(profile, settings, n_points=2).final_p
    return NotGateError(p, p < FAULT_TOLERANCE_THRESHOLD)
