"""Density-dependent chemical potential, leak rate, and time-step window.

Units have hbar = 1: energies and inverse times share a unit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from leakybox.errors import PreconditionError, StepWindowError

HBAR = 1.0


@dataclass(frozen=True)
class LinearMu:
    """Mean-field chemical potential ``mu = g * n``."""

    g: float = 1.0

    def __call__(self, n: float) -> float:
        return self.g * n


@dataclass(frozen=True)
class PowerMu:
    """``mu = g * n**exponent``."""

    g: float = 1.0
    exponent: float = 0.5

    def __call__(self, n: float) -> float:
        return self.g * n**self.exponent


@dataclass(frozen=True)
class SqrtDos:
    """Free three-dimensional environment, ``D(mu) = scale * sqrt(mu)``."""

    scale: float = 1.0

    def __call__(self, mu: float) -> float:
        return self.scale * math.sqrt(mu)


@dataclass(frozen=True)
class ConstantDos:
    value: float = 1.0 / (2.0 * math.pi)

    def __call__(self, mu: float) -> float:
        return self.value


def _describe(model) -> dict:
    out = {"model": type(model).__name__}
    try:
        out.update(asdict(model))
    except TypeError:
        out["callable"] = repr(model)
    return out


@dataclass(frozen=True)
class PhysicsParams:
    coupling_lambda_sq: float = 1.0
    wall_volume_v: float = 1.0
    box_volume_V: float = 1.0
    condensate_fraction: float = 1.0
    order_unity_K: float = 1.0
    dos_model: object = field(default_factory=ConstantDos)
    mu_model: object = field(default_factory=LinearMu)
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("coupling_lambda_sq", "wall_volume_v", "box_volume_V", "order_unity_K"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not 0 < self.condensate_fraction <= 1:
            raise PreconditionError(
                f"condensate_fraction must lie in (0, 1], got {self.condensate_fraction!r}"
            )
        if self.hbar != HBAR:
            raise PreconditionError("only hbar = 1 units are supported")

    def prefactor(self) -> float:
        """Everything in the leak rate except the density of states."""
        return (
            self.order_unity_K
            * (2.0 * math.pi / self.hbar)
            * self.condensate_fraction
            * self.coupling_lambda_sq
            * self.wall_volume_v**2
            / self.box_volume_V
        )

    def describe(self) -> dict:
        return {
            "coupling_lambda_sq": self.coupling_lambda_sq,
            "wall_volume_v": self.wall_volume_v,
            "box_volume_V": self.box_volume_V,
            "condensate_fraction": self.condensate_fraction,
            "order_unity_K": self.order_unity_K,
            "dos_model": _describe(self.dos_model),
            "mu_model": _describe(self.mu_model),
            "hbar": self.hbar,
        }


@dataclass(frozen=True)
class StepPolicy:
    safety_c: float = 0.01
    energy_cutoff_Ec: float | None = None

    def __post_init__(self):
        if not 0 < self.safety_c <= 0.1:
            raise PreconditionError(f"safety_c must lie in (0, 0.1], got {self.safety_c!r}")
        if self.energy_cutoff_Ec is not None and not self.energy_cutoff_Ec > 0:
            raise PreconditionError(
                f"energy_cutoff_Ec must be > 0 when set, got {self.energy_cutoff_Ec!r}"
            )


def chemical_potential(params: PhysicsParams, n: float) -> float:
    if not n > 0:
        raise PreconditionError(f"density must be > 0, got {n!r}")
    mu = float(params.mu_model(n))
    if not mu > 0:
        raise PreconditionError(f"chemical potential model returned {mu!r} at n={n!r}")
    return mu


def leak_rate(params: PhysicsParams, n: float) -> float:
    """Per-boson escape rate j(n)."""
    mu = chemical_potential(params, n)
    dos = float(params.dos_model(mu))
    if not dos >= 0:
        raise PreconditionError(f"density-of-states model returned {dos!r} at mu={mu!r}")
    return params.prefactor() * dos


def calibrate_dos(params: PhysicsParams, n: float, target_j: float) -> PhysicsParams:
    """Rescale the density-of-states model so that ``leak_rate(params, n) == target_j``."""
    if not target_j > 0:
        raise PreconditionError(f"target leak rate must be > 0, got {target_j!r}")
    current = leak_rate(params, n)
    if current == 0:
        raise PreconditionError("cannot calibrate a vanishing density of states")
    model = params.dos_model
    ratio = target_j / current
    if isinstance(model, SqrtDos):
        model = SqrtDos(model.scale * ratio)
    elif isinstance(model, ConstantDos):
        model = ConstantDos(model.value * ratio)
    else:
        raise PreconditionError(f"cannot calibrate density-of-states model {model!r}")
    return replace(params, dos_model=model)


def step_for_rate(policy: StepPolicy, mean_N: float, j: float, hbar: float = HBAR) -> float:
    """Time step ``safety_c / (<N> j)`` inside the admissible window.

    Raises StepWindowError when an energy cutoff is set and either the window
    is empty or the chosen step falls below its lower edge ``hbar / Ec``.
    """
    if not mean_N > 0:
        raise PreconditionError(f"mean boson number must be > 0, got {mean_N!r}")
    if not j > 0:
        raise StepWindowError(f"leak rate {j!r} leaves the step bound undefined")
    upper = 1.0 / (mean_N * j)
    dt = policy.safety_c * upper
    if policy.energy_cutoff_Ec is not None:
        lower = hbar / policy.energy_cutoff_Ec
        if lower >= upper:
            raise StepWindowError(
                f"empty step window: hbar/Ec = {lower:.6g} >= 1/(<N> j) = {upper:.6g}"
            )
        if dt < lower:
            raise StepWindowError(
                f"chosen step {dt:.6g} is below hbar/Ec = {lower:.6g}; raise safety_c"
            )
    return dt


def choose_dt(policy: StepPolicy, params: PhysicsParams, mean_N: float, V: float | None = None) -> float:
    if not mean_N > 0:
        raise PreconditionError(f"mean boson number must be > 0, got {mean_N!r}")
    V = params.box_volume_V if V is None else V
    return step_for_rate(policy, mean_N, leak_rate(params, mean_N / V), params.hbar)
