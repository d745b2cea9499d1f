"""Truncated ladder-basis linear algebra.

Index ``N`` of every vector or matrix is the boson number of the ladder state
``|N,G>``; index 0 is the vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from leakybox.errors import PreconditionError

# Largest tensor-product amplitude count we are willing to allocate.
MAX_COMPOSITE_DIM = 4_000_000

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


def default_n_max(mean: float) -> int:
    """Truncation that leaves a negligible number tail for a state of this mean."""
    mean = max(float(mean), 0.0)
    return max(1, math.ceil(mean + 10.0 * math.sqrt(max(mean, 1.0))))


@dataclass(frozen=True)
class BasisSpec:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise PreconditionError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def numbers(self) -> np.ndarray:
        return np.arange(self.dim, dtype=float)

    @classmethod
    def for_mean(cls, mean: float) -> "BasisSpec":
        return cls(default_n_max(mean))


@dataclass(frozen=True)
class PureState:
    """Amplitude vector over a ladder basis.

    ``tail_mass`` records the probability discarded by truncation before the
    constructor renormalized.
    """

    basis: BasisSpec
    amp: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (self.basis.dim,):
            raise PreconditionError(
                f"amplitude vector has shape {amp.shape}, basis needs ({self.basis.dim},)"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def normalized(self) -> "PureState":
        return PureState(self.basis, self.amp / self.norm, self.tail_mass)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.amp, self.amp.conj()), self.tail_mass)


@dataclass(frozen=True)
class DensityMatrix:
    basis: BasisSpec
    rho: np.ndarray
    tail_mass: float = 0.0
    lossy: bool = False

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.basis.dim, self.basis.dim):
            raise PreconditionError(
                f"density matrix has shape {rho.shape}, basis needs "
                f"({self.basis.dim}, {self.basis.dim})"
            )
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.rho).real.copy()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho)[0])

    def check(self, psd: bool = False) -> None:
        """Raise if the matrix is not a valid density operator."""
        herm = self.hermiticity_error()
        if herm > HERMITIAN_TOL:
            raise PreconditionError(f"density matrix not Hermitian (max deviation {herm:.3e})")
        if not self.lossy and abs(self.trace - 1.0) > TRACE_TOL:
            raise PreconditionError(f"density matrix trace is {self.trace!r}, expected 1")
        if psd:
            lam = self.min_eigenvalue()
            if lam < -PSD_TOL:
                raise PreconditionError(f"density matrix has negative eigenvalue {lam:.3e}")


@dataclass(frozen=True)
class CompositeState:
    factors: tuple
    amp: np.ndarray
    tail_mass: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        factors = tuple(self.factors)
        dims = tuple(b.dim for b in factors)
        amp = np.asarray(self.amp, dtype=complex)
        if amp.size != math.prod(dims):
            raise PreconditionError(
                f"{amp.size} amplitudes do not match factor dimensions {dims}"
            )
        amp = amp.reshape(dims)
        amp.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "amp", amp)

    @property
    def dims(self) -> tuple:
        return tuple(b.dim for b in self.factors)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))


def lowering_apply(state: PureState) -> PureState:
    """Apply the ladder operator ``|N> -> sqrt(N) |N-1>``; no renormalization."""
    out = np.zeros_like(state.amp)
    n = np.arange(1, state.basis.dim)
    out[:-1] = np.sqrt(n) * state.amp[1:]
    return PureState(state.basis, out, state.tail_mass)


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2), computed as the Frobenius norm squared of a Hermitian matrix."""
    m = rho.rho
    return float(np.vdot(m, m).real)


def tensor(a, b: PureState, max_dim: int = MAX_COMPOSITE_DIM) -> CompositeState:
    if isinstance(a, PureState):
        a = CompositeState((a.basis,), a.amp, a.tail_mass)
    total = a.amp.size * b.basis.dim
    if total > max_dim:
        raise PreconditionError(
            f"tensor product would hold {total} amplitudes (cap {max_dim})"
        )
    amp = np.multiply.outer(a.amp, b.amp)
    return CompositeState(a.factors + (b.basis,), amp, a.tail_mass + b.tail_mass)


def partial_trace(state: CompositeState, keep: int) -> DensityMatrix:
    """Reduced density matrix of factor ``keep``; trace equals the state's norm squared."""
    nf = len(state.factors)
    if not isinstance(keep, (int, np.integer)) or not 0 <= keep < nf:
        raise PreconditionError(f"factor index {keep!r} out of range for {nf} factors")
    psi = np.moveaxis(state.amp, keep, 0).reshape(state.dims[keep], -1)
    rho = psi @ psi.conj().T
    # Symmetrize away rounding so Hermiticity holds to the last bit.
    rho = 0.5 * (rho + rho.conj().T)
    lossy = abs(state.norm - 1.0) > TRACE_TOL
    return DensityMatrix(state.factors[keep], rho, state.tail_mass, lossy=lossy)

