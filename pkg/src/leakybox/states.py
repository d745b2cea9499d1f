"""Initial-state constructors in the ladder basis."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtrc

from leakybox.errors import PreconditionError, TruncationError
from leakybox.hilbert import BasisSpec, DensityMatrix, PureState, default_n_max

TAIL_TOL = 1e-10


@dataclass(frozen=True)
class CoherentTrack:
    """Magnitude and phase of a coherent-state parameter ``alpha = magnitude * e^{i phase}``.

    ``phase_defined`` is False when the phase could not be estimated (the
    state carries no first off-diagonal coherence) and ``phase`` was set to 0.
    """

    magnitude: float
    phase: float
    phase_defined: bool = True

    @property
    def alpha(self) -> complex:
        return cmath.rect(self.magnitude, self.phase)


@dataclass(frozen=True)
class GaussianNumberProfile:
    """Pure state with a Gaussian number distribution of given mean and Fano factor."""

    mean: float
    fano: float
    phase_slope: float = 0.0

    def __post_init__(self):
        if not self.mean >= 0:
            raise PreconditionError(f"profile mean must be >= 0, got {self.mean!r}")
        if not self.fano > 0:
            raise PreconditionError(f"profile Fano factor must be > 0, got {self.fano!r}")
        if math.sqrt(self.fano * self.mean) > self.mean / 3:
            warnings.warn(
                f"number spread sqrt(F*mean)={math.sqrt(self.fano * self.mean):.3g} is not "
                f"small against mean={self.mean:.3g}; the profile is poorly localized",
                stacklevel=2,
            )

    @property
    def sigma(self) -> float:
        return math.sqrt(self.fano * self.mean)


def _check_tail(tail: float, tail_tol, what: str) -> None:
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(
            f"{what}: truncated tail mass {tail:.3e} exceeds {tail_tol:.1e}; raise n_max"
        )


def poisson_basis(mean: float, tail_tol=TAIL_TOL) -> BasisSpec:
    """Ten-sigma cutoff, raised until the Poisson tail above it is within ``tail_tol``.

    Below a mean of a few the ten-sigma rule alone leaves a tail near 1e-9.
    """
    n_max = default_n_max(mean)
    if tail_tol is not None and mean > 0:
        while pdtrc(n_max, mean) > tail_tol:
            n_max += 1
    return BasisSpec(n_max)


def number_state(N: int, basis: BasisSpec | None = None) -> PureState:
    if basis is None:
        basis = BasisSpec(max(int(N), 1))
    if int(N) != N or not 0 <= N <= basis.n_max:
        raise PreconditionError(f"number {N!r} outside basis 0..{basis.n_max}")
    amp = np.zeros(basis.dim, dtype=complex)
    amp[int(N)] = 1.0
    return PureState(basis, amp)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Untruncated-normalization amplitudes ``e^{-|a|^2/2} a^M / sqrt(M!)`` for M < dim."""
    mag = abs(alpha)
    amp = np.zeros(dim, dtype=complex)
    if mag == 0.0:
        amp[0] = 1.0
        return amp
    m = np.arange(dim)
    log_mag = -0.5 * mag**2 + m * math.log(mag) - 0.5 * gammaln(m + 1)
    return np.exp(log_mag) * np.exp(1j * m * cmath.phase(alpha))


def csib(alpha: complex, basis: BasisSpec | None = None, tail_tol=TAIL_TOL) -> PureState:
    """Coherent state over the ladder basis, renormalized after truncation.

    Pass ``tail_tol=None`` to skip the truncation check (used when fitting).
    """
    if basis is None:
        basis = poisson_basis(abs(alpha) ** 2, tail_tol)
    amp = coherent_amplitudes(alpha, basis.dim)
    tail = float(pdtrc(basis.n_max, abs(alpha) ** 2)) if alpha != 0 else 0.0
    _check_tail(tail, tail_tol, f"coherent state alpha={alpha}")
    amp /= np.linalg.norm(amp)
    return PureState(basis, amp, tail)


def gaussian_basis(profile: GaussianNumberProfile) -> BasisSpec:
    # Same ten-sigma rule as default_n_max, with the profile's own variance.
    return BasisSpec(max(1, math.ceil(profile.mean + 10.0 * math.sqrt(max(profile.sigma**2, 1.0)))))


def gaussian_profile_state(
    profile: GaussianNumberProfile, basis: BasisSpec | None = None, tail_tol=TAIL_TOL
) -> PureState:
    """``c_N ~ exp(-(N-mean)^2 / (4 F mean)) e^{i N slope}`` on N >= 0.

    Only the mass above ``n_max`` counts as truncation tail; the profile is
    defined on the non-negative integers to begin with.
    """
    if basis is None:
        basis = gaussian_basis(profile)
    mean, fano = profile.mean, profile.fano
    width = 4.0 * fano * max(mean, 1e-300)
    hi = max(basis.n_max, math.ceil(mean + 40.0 * profile.sigma) + 1)
    n = np.arange(hi + 1, dtype=float)
    logw = -((n - mean) ** 2) / width
    w = np.exp(2.0 * (logw - logw.max()))
    tail = float(w[basis.dim:].sum() / w.sum())
    _check_tail(tail, tail_tol, f"Gaussian profile mean={mean}, F={fano}")
    amp = np.exp(logw[: basis.dim] - logw.max()) * np.exp(1j * n[: basis.dim] * profile.phase_slope)
    amp /= np.linalg.norm(amp)
    return PureState(basis, amp, tail)


def poisson_weights(mean: float, dim: int) -> np.ndarray:
    if mean == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    n = np.arange(dim)
    return np.exp(-mean + n * math.log(mean) - gammaln(n + 1))


def poisson_mixture(mean: float, basis: BasisSpec | None = None, tail_tol=TAIL_TOL) -> DensityMatrix:
    """Diagonal Poisson mixture of ladder states, renormalized after truncation."""
    if mean < 0:
        raise PreconditionError(f"Poisson mean must be >= 0, got {mean!r}")
    if basis is None:
        basis = poisson_basis(mean, tail_tol)
    tail = float(pdtrc(basis.n_max, mean)) if mean > 0 else 0.0
    _check_tail(tail, tail_tol, f"Poisson mixture mean={mean}")
    p = poisson_weights(mean, basis.dim)
    p /= p.sum()
    return DensityMatrix(basis, np.diag(p).astype(complex), tail)


def phase_average(
    magnitude: float,
    basis: BasisSpec | None = None,
    quadrature_points: int | None = None,
    tail_tol=TAIL_TOL,
) -> DensityMatrix:
    """Uniform average of coherent-state projectors over the phase circle.

    Uses the trapezoid rule on ``[-pi, pi)``, which is exact for every phase
    harmonic the truncated basis can carry once enough points are used.
    """
    if basis is None:
        basis = poisson_basis(magnitude**2, tail_tol)
    needed = 2 * basis.n_max + 2
    if quadrature_points is None:
        quadrature_points = needed
    if quadrature_points < needed:
        raise PreconditionError(
            f"{quadrature_points} quadrature points cannot resolve phase harmonics up to "
            f"order {basis.n_max}; need at least {needed}"
        )
    ref = csib(magnitude, basis, tail_tol)
    theta = -math.pi + 2.0 * math.pi * np.arange(quadrature_points) / quadrature_points
    n = np.arange(basis.dim)
    # Row k holds the amplitudes of |magnitude e^{i theta_k}>.
    a = ref.amp[None, :] * np.exp(1j * np.outer(theta, n))
    rho = a.T @ a.conj() / quadrature_points
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(basis, rho, ref.tail_mass)
