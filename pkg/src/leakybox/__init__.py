"""Reduced density-operator dynamics of interacting bosons leaking out of a box."""

from leakybox.errors import (
    ConfigError,
    PreconditionError,
    StepWindowError,
    TruncationError,
)
from leakybox.hilbert import (
    BasisSpec,
    CompositeState,
    DensityMatrix,
    PureState,
    lowering_apply,
    partial_trace,
    purity,
    tensor,
)
from leakybox.states import (
    CoherentTrack,
    GaussianNumberProfile,
    csib,
    gaussian_profile_state,
    number_state,
    phase_average,
    poisson_basis,
    poisson_mixture,
)
from leakybox.physics import (
    PhysicsParams,
    StepPolicy,
    calibrate_dos,
    chemical_potential,
    choose_dt,
    leak_rate,
)
from leakybox.observables import (
    RunRecord,
    energy_density,
    fano_factor,
    fidelity_to_csib,
    mean_and_variance,
)
from leakybox.dynamics import (
    EvolutionConfig,
    evolve,
    step_channel_oracle,
    step_generator_oracle,
    step_master,
)

from leakybox.ssr import (
    TwoBoxConfig,
    build_total_state,
    conditioned_state,
    reduce_to_box_one,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "CompositeState", "ConfigError", "CoherentTrack", "DensityMatrix",
    "EvolutionConfig", "GaussianNumberProfile", "PhysicsParams", "PreconditionError",
    "PureState", "RunRecord", "StepPolicy", "StepWindowError", "TruncationError",
    "TwoBoxConfig", "build_total_state", "calibrate_dos", "chemical_potential", "choose_dt",
    "conditioned_state", "csib", "energy_density", "evolve", "fano_factor", "fidelity_to_csib",
    "gaussian_profile_state", "leak_rate", "lowering_apply", "mean_and_variance",
    "number_state", "partial_trace", "phase_average", "poisson_basis", "poisson_mixture",
    "purity", "reduce_to_box_one", "step_channel_oracle", "step_generator_oracle",
    "step_master", "tensor",
]
