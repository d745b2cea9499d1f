"""Scalar diagnostics separating the robust coherent family from fragile states."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from leakybox.errors import PreconditionError
from leakybox.hilbert import DensityMatrix, PureState, purity
from leakybox.states import CoherentTrack, csib

PHASE_FLOOR = 1e-14

CSV_COLUMNS = ("t", "mean_N", "var_N", "fano", "purity", "fidelity_csib", "phase", "j_t", "mu_t")


def _as_density(state) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.projector()
    return state


def mean_and_variance(rho) -> tuple:
    p = _as_density(rho).diagonal
    n = np.arange(p.size, dtype=float)
    mean = float(p @ n)
    var = float(p @ (n - mean) ** 2)
    return mean, var


def fano_factor(rho) -> float:
    mean, var = mean_and_variance(rho)
    return var / mean if mean > 0 else float("nan")


def coherence_sum(rho) -> complex:
    """Sum of the first sub-diagonal, ``sum_N rho[N+1, N]``."""
    return complex(np.trace(_as_density(rho).rho, offset=-1))


def fidelity_to_csib(rho) -> tuple:
    """Overlap with the coherent state sharing ``rho``'s mean and first-coherence phase.

    Returns ``(fidelity, CoherentTrack)``. When the first coherence vanishes the
    track's phase is 0 and ``phase_defined`` is False.
    """
    rho = _as_density(rho)
    mean, _ = mean_and_variance(rho)
    if not mean > 0:
        raise PreconditionError(f"fidelity fit needs <N> > 0, got {mean!r}")
    s = coherence_sum(rho)
    if abs(s) < PHASE_FLOOR:
        track = CoherentTrack(math.sqrt(mean), 0.0, phase_defined=False)
    else:
        track = CoherentTrack(math.sqrt(mean), cmath.phase(s))
    ref = csib(track.alpha, rho.basis, tail_tol=None)
    fid = float(np.vdot(ref.amp, rho.rho @ ref.amp).real)
    return fid, track


def energy_density(state, eigenenergy, V: float) -> float:
    """``sum_N rho_NN E(N) / V`` for a ladder-diagonal Hamiltonian."""
    p = _as_density(state).diagonal
    n = np.arange(p.size)
    energies = np.array([eigenenergy(int(k)) for k in n], dtype=float)
    return float(p @ energies) / V


@dataclass
class RunRecord:
    times: list = field(default_factory=list)
    mean_N: list = field(default_factory=list)
    var_N: list = field(default_factory=list)
    fano: list = field(default_factory=list)
    purity: list = field(default_factory=list)
    fidelity_csib: list = field(default_factory=list)
    phase: list = field(default_factory=list)
    j_t: list = field(default_factory=list)
    mu_t: list = field(default_factory=list)
    phase_defined: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    final_state: DensityMatrix | None = None

    def append(self, t: float, rho: DensityMatrix, j: float, mu: float) -> None:
        mean, var = mean_and_variance(rho)
        self.times.append(float(t))
        self.mean_N.append(mean)
        self.var_N.append(var)
        self.fano.append(var / mean if mean > 0 else float("nan"))
        self.purity.append(purity(rho))
        if mean > 0:
            fid, track = fidelity_to_csib(rho)
        else:
            fid, track = 1.0, CoherentTrack(0.0, 0.0, phase_defined=False)
        self.fidelity_csib.append(fid)
        self.phase.append(track.phase)
        self.phase_defined.append(track.phase_defined)
        self.j_t.append(float(j))
        self.mu_t.append(float(mu))

    def __len__(self) -> int:
        return len(self.times)

    def columns(self) -> dict:
        return {
            "t": self.times,
            "mean_N": self.mean_N,
            "var_N": self.var_N,
            "fano": self.fano,
            "purity": self.purity,
            "fidelity_csib": self.fidelity_csib,
            "phase": self.phase,
            "j_t": self.j_t,
            "mu_t": self.mu_t,
        }

    def as_arrays(self) -> dict:
        return {k: np.asarray(v, dtype=float) for k, v in self.columns().items()}

    def integrated_rate(self) -> np.ndarray:
        """Cumulative ``integral j dt`` over the recorded times (trapezoid rule)."""
        t = np.asarray(self.times)
        j = np.asarray(self.j_t)
        out = np.zeros_like(t)
        if t.size > 1:
            out[1:] = np.cumsum(0.5 * (j[1:] + j[:-1]) * np.diff(t))
        return out
