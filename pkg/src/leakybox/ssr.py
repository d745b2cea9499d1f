"""Two boxes plus an environment at fixed total boson number.

The composite state has four factors: box one, box two, the environment's
boson number ``M = n_total - N - N'``, and an abstract environment label
``l``. Every nonzero amplitude therefore conserves the total number.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from leakybox.errors import PreconditionError
from leakybox.hilbert import BasisSpec, CompositeState, DensityMatrix, PureState, partial_trace
from leakybox.states import csib

NORM_DEFICIT_TOL = 1e-8


def _box_cutoff(magnitude: float) -> int:
    return max(1, math.floor(magnitude**2 + 10.0 * magnitude))


@dataclass(frozen=True)
class TwoBoxConfig:
    n_total: int = 40
    alpha_mag: float = 2.0
    alpha_phase: float = 0.0
    alpha_prime_mag: float = math.sqrt(3.0)
    env_labels: int = 2
    env_coeffs: tuple = field(default=(1 / math.sqrt(2.0), 1 / math.sqrt(2.0)))
    # Only the difference alpha_phase - alpha_prime_phase is physical.
    alpha_prime_phase: float = 0.0

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.env_coeffs)
        object.__setattr__(self, "env_coeffs", coeffs)
        if len(coeffs) != self.env_labels:
            raise PreconditionError(
                f"{len(coeffs)} environment coefficients given for {self.env_labels} labels"
            )
        norm = sum(abs(c) ** 2 for c in coeffs)
        if abs(norm - 1.0) > 1e-12:
            raise PreconditionError(f"environment coefficients have norm^2 {norm!r}, expected 1")
        if self.alpha_mag < 0 or self.alpha_prime_mag < 0:
            raise PreconditionError("coherent amplitudes must have non-negative magnitude")
        need = math.ceil(self.alpha_mag**2 + self.alpha_prime_mag**2)
        if int(self.n_total) != self.n_total or self.n_total < need:
            raise PreconditionError(
                f"n_total={self.n_total!r} must be an integer >= {need}"
            )

    @property
    def alpha(self) -> complex:
        return cmath.rect(self.alpha_mag, self.alpha_phase)

    @property
    def alpha_prime(self) -> complex:
        return cmath.rect(self.alpha_prime_mag, self.alpha_prime_phase)

    def box_bases(self) -> tuple:
        n1 = min(_box_cutoff(self.alpha_mag), self.n_total)
        n2 = min(_box_cutoff(self.alpha_prime_mag), self.n_total)
        return BasisSpec(max(n1, 1)), BasisSpec(max(n2, 1))


def _log_coherent(alpha: complex, n: np.ndarray) -> np.ndarray:
    """Complex log of ``alpha^n / sqrt(n!)``; ``alpha = 0`` handled by the caller."""
    return n * (math.log(abs(alpha)) + 1j * cmath.phase(alpha)) - 0.5 * gammaln(n + 1)


def build_total_state(cfg: TwoBoxConfig, max_norm_deficit=NORM_DEFICIT_TOL) -> CompositeState:
    """Number-conserving superposition of two coherent boxes and the environment.

    Branches with ``N + N' > n_total`` or beyond the per-box cutoffs are
    dropped and the rest renormalized. ``1 - norm`` of the dropped state is
    stored in ``meta["norm_deficit"]`` and must not exceed
    ``max_norm_deficit`` (``None`` disables the check).
    """
    b1, b2 = cfg.box_bases()
    env_n = BasisSpec(max(cfg.n_total, 1))
    labels = BasisSpec(max(cfg.env_labels - 1, 1))
    amp = np.zeros((b1.dim, b2.dim, env_n.dim, labels.dim), dtype=complex)

    n1 = np.arange(b1.dim)
    n2 = np.arange(b2.dim)
    box1 = np.zeros(b1.dim, dtype=complex)
    box2 = np.zeros(b2.dim, dtype=complex)
    if cfg.alpha_mag == 0:
        box1[0] = 1.0
    else:
        box1 = np.exp(-0.5 * cfg.alpha_mag**2 + _log_coherent(cfg.alpha, n1))
    if cfg.alpha_prime_mag == 0:
        box2[0] = 1.0
    else:
        box2 = np.exp(-0.5 * cfg.alpha_prime_mag**2 + _log_coherent(cfg.alpha_prime, n2))
    coeffs = np.zeros(labels.dim, dtype=complex)
    coeffs[: cfg.env_labels] = cfg.env_coeffs

    for N in range(b1.dim):
        for Np in range(b2.dim):
            M = cfg.n_total - N - Np
            if M < 0:
                break
            amp[N, Np, M, :] = box1[N] * box2[Np] * coeffs

    norm = float(np.linalg.norm(amp))
    deficit = 1.0 - norm
    if max_norm_deficit is not None and deficit > max_norm_deficit:
        raise PreconditionError(
            f"truncated total state keeps norm {norm:.12f} (deficit {deficit:.3e} > "
            f"{max_norm_deficit:.1e}); raise n_total"
        )
    amp /= norm
    return CompositeState(
        (b1, b2, env_n, labels),
        amp,
        tail_mass=1.0 - norm**2,
        meta={"norm_deficit": deficit, "n_total": cfg.n_total},
    )


def total_number_spread(state: CompositeState) -> tuple:
    """Smallest and largest ``N + N' + M`` over branches with nonzero amplitude."""
    idx = np.nonzero(state.amp)
    totals = idx[0] + idx[1] + idx[2]
    return int(totals.min()), int(totals.max())


def reduce_to_box_one(state: CompositeState) -> DensityMatrix:
    rho = partial_trace(state, 0)
    # The total state is renormalized, so the reduced trace is 1 up to rounding.
    return DensityMatrix(rho.basis, rho.rho, rho.tail_mass, lossy=False)


def conditioned_state(cfg: TwoBoxConfig) -> PureState:
    """Box-one state once the relative phase to box two is known.

    This is the maximal-information assignment ``| |alpha| e^{i phase} >``, an
    information-theoretic convention rather than a dynamical result.
    """
    b1, _ = cfg.box_bases()
    theta = cfg.alpha_phase - cfg.alpha_prime_phase
    return csib(cmath.rect(cfg.alpha_mag, theta), b1, tail_tol=None)
