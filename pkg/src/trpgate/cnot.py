"""CNOT gate from a twisted rapid passage sweep on an Ising-coupled qubit pair.

Basis ordering is ``|00>, |01>, |10>, |11>`` (control first, index
``2*c + t``) with ``|0> = |up>``.  The coupling splits the target resonance
into ``omega_minus`` (control in ``|0>``) and ``omega_plus`` (control in
``|1>``).  The sweep is centred on ``omega_plus``.

Refocusing is idealized: the control qubit does not evolve during the sweep,
so the gate is block diagonal in the control index and each block is a
single-qubit sweep.  The control-1 block crosses resonance.  The control-0
block sees the same sweep shifted by the level offset ``omega_plus -
omega_minus = 2 pi J``, i.e. a constant ``pi J`` on the z-field of
``H = -sigma.F``.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorSettings, propagate
from .profiles import SweepProfile, sweep_bandwidth

BASIS = ("00", "01", "10", "11")

# The control-0 block precesses through ~offset*tau0/lambda radians; at
# rtol=1e-12 its norm drifts by about 3e-13 per unit offset, which would
# exhaust a 1e-9 unitarity budget at offsets of a few thousand b.
CNOT_SETTINGS = IntegratorSettings(rtol=1e-13, atol=1e-15)


class SelectivityWarning(UserWarning):
    """The control-0 offset is inside the sweep bandwidth, so both blocks may be driven."""


@dataclass(frozen=True)
class TwoQubitSystem:
    omega_c: float
    omega_t: float
    J: float

    def __post_init__(self):
        vals = (self.omega_c, self.omega_t, self.J)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"system parameters must be finite, got {vals}")
        if not (self.omega_c > self.omega_t > math.pi * self.J > 0):
            raise ValueError(
                "require omega_c > omega_t > pi*J > 0, got "
                f"omega_c={self.omega_c}, omega_t={self.omega_t}, J={self.J}")

    @property
    def omega_plus(self) -> float:
        return self.omega_t + math.pi * self.J

    @property
    def omega_minus(self) -> float:
        return self.omega_t - math.pi * self.J

    @property
    def control0_offset(self) -> float:
        """z-field shift seen by the target when the control is ``|0>``."""
        return 0.5 * (self.omega_plus - self.omega_minus)


@dataclass(frozen=True)
class LevelStructure:
    energies: tuple
    omega_plus: float
    omega_minus: float


def level_structure(sys: TwoQubitSystem) -> LevelStructure:
    """Diagonal energies of ``-w_c Iz_c - w_t Iz_t + 2 pi J Iz_c Iz_t``.

    The transition frequencies are differenced from the target part alone;
    the control term is common to both levels of a pair and would otherwise
    cost digits when omega_c is much larger than the gap.
    """
    energies, target = [], []
    for c in (0, 1):
        for t in (0, 1):
            iz_c = 0.5 if c == 0 else -0.5
            iz_t = 0.5 if t == 0 else -0.5
            e_t = -sys.omega_t * iz_t + 2 * math.pi * sys.J * iz_c * iz_t
            target.append(e_t)
            energies.append(-sys.omega_c * iz_c + e_t)
    return LevelStructure(
        energies=tuple(energies),
        omega_plus=target[3] - target[2],
        omega_minus=target[1] - target[0],
    )


@dataclass(frozen=True)
class GateMatrix:
    """4x4 gate in the ``BASIS`` ordering; column j is the image of basis state j."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"gate must be 4x4, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(4))))

    def is_unitary(self, tol=1e-9) -> bool:
        return self.unitarity_error() <= tol

    def transition_probabilities(self) -> np.ndarray:
        """``|U_ij|^2``: probability that basis state j ends in basis state i."""
        return np.abs(self.matrix) ** 2

    def to_dict(self) -> dict:
        return {
            "basis": list(BASIS),
            "layout": "row-major, entries [re, im]",
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
        }

    @classmethod
    def from_dict(cls, d) -> "GateMatrix":
        if list(d.get("basis", BASIS)) != list(BASIS):
            raise ValueError(f"unexpected basis ordering {d.get('basis')}")
        return cls(np.array([[complex(re, im) for re, im in row] for row in d["matrix"]]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def ideal_cnot() -> GateMatrix:
    return GateMatrix(np.array([[1, 0, 0, 0],
                                [0, 1, 0, 0],
                                [0, 0, 0, 1],
                                [0, 0, 1, 0]], dtype=complex))


def gate_fidelity(U_sim: GateMatrix, U_ref: GateMatrix) -> float:
    """Worst-case basis-state overlap ``min_j |<U_ref e_j | U_sim e_j>|^2``."""
    overlaps = np.einsum("ij,ij->j", U_ref.matrix.conj(), U_sim.matrix)
    return float(min(1.0, np.min(np.abs(overlaps) ** 2)))


def column_phases(U_sim: GateMatrix, U_ref: GateMatrix) -> np.ndarray:
    """Phase of each simulated column relative to the reference column (radians)."""
    overlaps = np.einsum("ij,ij->j", U_ref.matrix.conj(), U_sim.matrix)
    return np.angle(overlaps)


def _column(profile, settings, detuning, j):
    psi0 = np.zeros(2, dtype=complex)
    psi0[j] = 1.0
    _, states = propagate(profile, psi0, settings, detuning=detuning)
    return states[-1]


def simulate_cnot(sys: TwoQubitSystem, profile: SweepProfile,
                  settings: IntegratorSettings = CNOT_SETTINGS,
                  workers: int = 1) -> GateMatrix:
    """Gate produced by one refocused sweep through the ``omega_plus`` resonance.

    The four target evolutions are independent and may run on ``workers``
    threads; the result does not depend on the thread count.  Warns with
    :class:`SelectivityWarning` when the control-0 offset does not clear the
    sweep bandwidth.
    """
    offset = sys.control0_offset
    if profile.tau0 > 0 and offset <= sweep_bandwidth(profile):
        warnings.warn(
            f"control-0 offset pi*J={offset:.6g} lies inside the sweep bandwidth "
            f"{sweep_bandwidth(profile):.6g}; the control-0 block is also driven",
            SelectivityWarning, stacklevel=2)
    jobs = [(offset, 0), (offset, 1), (0.0, 0), (0.0, 1)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            cols = list(ex.map(lambda job: _column(profile, settings, *job), jobs))
    else:
        cols = [_column(profile, settings, *job) for job in jobs]
    U = np.zeros((4, 4), dtype=complex)
    U[0:2, 0] = cols[0]
    U[0:2, 1] = cols[1]
    U[2:4, 2] = cols[2]
    U[2:4, 3] = cols[3]
    return GateMatrix(U)
