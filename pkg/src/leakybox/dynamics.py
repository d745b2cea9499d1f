"""Leakage dynamics of the reduced density matrix.

``step_master`` is the finite-step propagator everything else is checked
against. Two independent routes serve as oracles:

* ``step_channel_oracle`` applies the exact amplitude-damping channel with
  survival probability ``exp(-j dt)``;
* ``step_generator_oracle`` integrates the continuous-time generator whose
  Euler step is ``step_master``.

All three propagators share the same exact phase rotation
``rho_NM -> exp(-i (N-M) mu dt) rho_NM``. The rotation commutes with the
damping part, so treating it exactly costs nothing in generality.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from leakybox.errors import PreconditionError, TruncationError
from leakybox.hilbert import DensityMatrix
from leakybox.observables import RunRecord, mean_and_variance
from leakybox.physics import (
    PhysicsParams,
    StepPolicy,
    chemical_potential,
    leak_rate,
    step_for_rate,
)
from leakybox.states import TAIL_TOL

# Re-choose the time step once <N> has drifted this much since the last choice.
DT_DRIFT = 0.10

KRAUS_FLOOR = 1e-24


@dataclass(frozen=True)
class EvolutionConfig:
    params: PhysicsParams = field(default_factory=PhysicsParams)
    policy: StepPolicy = field(default_factory=StepPolicy)
    t_end: float = 1.0
    density_update: bool = False
    record_every: int = 1

    def __post_init__(self):
        if not self.t_end > 0:
            raise PreconditionError(f"t_end must be > 0, got {self.t_end!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise PreconditionError(f"record_every must be an integer >= 1, got {self.record_every!r}")


@lru_cache(maxsize=32)
def _ladder_tables(dim: int) -> tuple:
    """``(N+M)/2`` on the full grid and ``sqrt((N+1)(M+1))`` on the feed block."""
    n = np.arange(dim, dtype=float)
    half_sum = 0.5 * (n[:, None] + n[None, :])
    feed = np.sqrt(np.outer(n[1:], n[1:]))
    half_sum.setflags(write=False)
    feed.setflags(write=False)
    return half_sum, feed


def phase_rotation(rho: np.ndarray, mu: float, dt: float, hbar: float = 1.0) -> np.ndarray:
    """``rho_NM * exp(-i (N-M) mu dt / hbar)``.

    Built as ``u_N conj(u_M)`` with a unit diagonal, so Hermiticity survives
    to rounding.
    """
    u = np.exp(-1j * np.arange(rho.shape[0]) * (mu * dt / hbar))
    w = np.outer(u, u.conj())
    # |u_N|^2 is 1; fused multiply-adds can leave imaginary dust on the diagonal.
    np.fill_diagonal(w, 1.0)
    return rho * w


def _damping_increment(rho: np.ndarray, j: float) -> np.ndarray:
    """Dissipator ``j (L rho L^+ - {N, rho}/2)`` with ``L|N> = sqrt(N)|N-1>``."""
    half_sum, feed = _ladder_tables(rho.shape[0])
    out = (-j) * half_sum * rho
    out[:-1, :-1] += j * feed * rho[1:, 1:]
    return out


def _check_step_args(rho: DensityMatrix, j: float, dt: float) -> None:
    if not j >= 0:
        raise PreconditionError(f"leak rate must be >= 0, got {j!r}")
    if not dt > 0:
        raise PreconditionError(f"time step must be > 0, got {dt!r}")


def step_master(rho: DensityMatrix, mu: float, j: float, dt: float) -> DensityMatrix:
    """One finite step of the leakage map.

    ``rho_NM <- e^{-i(N-M) mu dt} [rho_NM (1 - (N+M) j dt / 2)
    + rho_{N+1,M+1} sqrt((N+1)(M+1)) j dt]``, with the feed term absent at
    the top of the basis.
    """
    _check_step_args(rho, j, dt)
    mean, _ = mean_and_variance(rho)
    if mean * j * dt >= 1.0:
        raise PreconditionError(
            f"step violates <N> j dt < 1 (<N>={mean:.6g}, j={j:.6g}, dt={dt:.6g})"
        )
    m = rho.rho
    out = m + dt * _damping_increment(m, j)
    out = phase_rotation(out, mu, dt)
    return DensityMatrix(rho.basis, out, rho.tail_mass, rho.lossy)


def damping_kraus_weights(eta: float, dim: int, k: int) -> np.ndarray:
    """Nonzero entries ``<N|K_k|N+k>`` of the k-th damping Kraus operator, N = 0..dim-k-1."""
    n = np.arange(dim - k, dtype=float)
    if eta == 1.0:
        return np.ones_like(n) if k == 0 else np.zeros_like(n)
    log_w = gammaln(n + k + 1) - gammaln(n + 1) - gammaln(k + 1)
    if eta > 0:
        log_w = log_w + n * math.log(eta)
    else:
        log_w = np.where(n == 0, log_w, -np.inf)
    if k:
        log_w = log_w + k * math.log1p(-eta)
    return np.exp(0.5 * log_w)


def step_channel_oracle(rho: DensityMatrix, mu: float, j: float, dt: float) -> DensityMatrix:
    """Exact amplitude-damping channel with survival ``exp(-j dt)``, then the phase rotation."""
    _check_step_args(rho, j, dt)
    m = rho.rho
    dim = m.shape[0]
    eta = math.exp(-j * dt)
    out = np.zeros_like(m)
    for k in range(dim):
        w = damping_kraus_weights(eta, dim, k)
        # Weights fall off like (1 - eta)^{k/2}; later terms are below rounding.
        if k and np.max(w) ** 2 < KRAUS_FLOOR:
            break
        out[: dim - k, : dim - k] += np.outer(w, w) * m[k:, k:]
    out = phase_rotation(out, mu, dt)
    return DensityMatrix(rho.basis, out, rho.tail_mass, rho.lossy)


def step_generator_oracle(
    rho: DensityMatrix, mu: float, j: float, dt: float, substeps: int = 1000, method: str = "rk4"
) -> DensityMatrix:
    """Integrate the damping generator over ``dt`` in ``substeps`` fixed steps.

    ``method`` is ``"rk4"`` (classical fourth order) or ``"euler"``; a single
    Euler substep reproduces ``step_master`` exactly.
    """
    _check_step_args(rho, j, dt)
    if int(substeps) != substeps or substeps < 1:
        raise PreconditionError(f"substeps must be an integer >= 1, got {substeps!r}")
    h = dt / substeps
    m = rho.rho.copy()
    if method == "euler":
        for _ in range(substeps):
            m = m + h * _damping_increment(m, j)
    elif method == "rk4":
        for _ in range(substeps):
            k1 = _damping_increment(m, j)
            k2 = _damping_increment(m + 0.5 * h * k1, j)
            k3 = _damping_increment(m + 0.5 * h * k2, j)
            k4 = _damping_increment(m + h * k3, j)
            m = m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise PreconditionError(f"unknown integration method {method!r}")
    m = phase_rotation(m, mu, dt)
    return DensityMatrix(rho.basis, m, rho.tail_mass, rho.lossy)


def _rates(params: PhysicsParams, n: float) -> tuple:
    return chemical_potential(params, n), leak_rate(params, n)


def evolve(rho0: DensityMatrix, cfg: EvolutionConfig, propagator=step_master) -> RunRecord:
    """Step ``rho0`` to ``cfg.t_end`` and record observables.

    ``mu`` and ``j`` are evaluated at the start of each step; with
    ``density_update`` off they stay at their initial-density values. The last
    step is shortened to land on ``t_end`` exactly.
    """
    rho0.check()
    top = float(rho0.rho[-1, -1].real)
    if rho0.tail_mass > TAIL_TOL or top > TAIL_TOL:
        raise TruncationError(
            f"initial state reaches the basis edge (tail {rho0.tail_mass:.3e}, "
            f"top population {top:.3e}); raise n_max"
        )
    params, policy = cfg.params, cfg.policy
    V = params.box_volume_V
    mean, _ = mean_and_variance(rho0)
    if not mean > 0:
        raise PreconditionError("initial state has no bosons to leak")
    mu, j = _rates(params, mean / V)

    record = RunRecord(
        meta={
            "params": params.describe(),
            "policy": {"safety_c": policy.safety_c, "energy_cutoff_Ec": policy.energy_cutoff_Ec},
            "t_end": cfg.t_end,
            "density_update": cfg.density_update,
            "record_every": cfg.record_every,
            "n_max": rho0.basis.n_max,
            "propagator": propagator.__name__,
            "warnings": [],
        }
    )
    if policy.energy_cutoff_Ec is None:
        record.meta["warnings"].append("energy cutoff not set; the lower step bound is unchecked")

    rho = rho0
    record.append(0.0, rho, j, mu)
    t = 0.0
    steps = 0
    dt = step_for_rate(policy, mean, j, params.hbar)
    mean_at_choice = mean
    while t < cfg.t_end:
        if abs(mean - mean_at_choice) > DT_DRIFT * mean_at_choice:
            dt = step_for_rate(policy, mean, j, params.hbar)
            mean_at_choice = mean
        h = dt
        last = t + h >= cfg.t_end * (1.0 - 1e-12)
        if last:
            h = cfg.t_end - t
        rho = propagator(rho, mu, j, h)
        t = cfg.t_end if last else t + h
        steps += 1
        mean, _ = mean_and_variance(rho)
        if cfg.density_update:
            mu, j = _rates(params, mean / V)
        if last or steps % cfg.record_every == 0:
            record.append(t, rho, j, mu)
    record.meta["steps"] = steps
    record.final_state = rho
    return record
