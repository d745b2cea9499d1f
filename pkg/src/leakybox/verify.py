"""Named numerical checks executed by ``leakybox verify``.

Each check returns ``{"name", "residual", "tolerance", "pass"}``; a check
passes when ``residual <= tolerance``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from leakybox.dynamics import (
    EvolutionConfig,
    evolve,
    step_channel_oracle,
    step_generator_oracle,
    step_master,
)
from leakybox.hilbert import BasisSpec, DensityMatrix, lowering_apply
from leakybox.observables import energy_density
from leakybox.physics import ConstantDos, PhysicsParams, StepPolicy, calibrate_dos
from leakybox.ssr import TwoBoxConfig, build_total_state, reduce_to_box_one, total_number_spread
from leakybox.states import csib, number_state, phase_average, poisson_mixture

DEFAULTS = {
    "order_mean": 9.0,
    "generator_mean": 25.0,
    "generator_jdt": 0.05,
    "generator_substeps": 1000,
    "literal_mean": 25.0,
    "literal_n_max": 60,
    "literal_jdt": 1e-3,
    "literal_mu_dt": 0.37,
    "eigen_n_max": 120,
    "energy_mean": 100.0,
    "energy_volume": 1e4,
    "energy_g": 1.0,
    "binomial_N": 50,
    "binomial_jt": 0.1,
    "binomial_safety_c": 2.5e-4,
}

_INT_KEYS = {"generator_substeps", "literal_n_max", "eigen_n_max", "binomial_N"}

TOLERANCES = {
    "master_channel_order": 0.5,
    "generator_channel_agreement": 1e-10,
    "single_step_literal": 5.0,
    "single_step_halving": 0.5,
    "binomial_endpoint_master": 1e-4,
    "binomial_endpoint_channel": 1e-8,
    "ssr_number_conservation": 0.0,
    "ssr_offdiagonal": 1e-12,
    "ssr_poisson_tv": 1e-10,
    "ssr_phase_average": 1e-10,
    "ssr_env_invariance": 1e-12,
    "eigenvalue_relation": 1e-9,
    "energy_density_gap": 1e-10,
}

EIGEN_ALPHAS = (1.0, 2.0 * cmath.exp(1j * math.pi / 4), math.sqrt(30.0))


def verify_settings(cfg) -> tuple:
    """Validate the ``[verify]`` section; return ``(settings, tolerances)``."""
    settings = dict(DEFAULTS)
    tolerances = dict(TOLERANCES)
    for key in cfg.data.get("verify", {}):
        if key.startswith("tol_"):
            name = key[4:]
            if name not in TOLERANCES:
                raise cfg.error(f"no check named {name!r}", "verify", key)
            tolerances[name] = cfg.get_float("verify", key, nonneg=True)
        elif key in DEFAULTS:
            if key in _INT_KEYS:
                settings[key] = cfg.get_int("verify", key, lo=1)
            else:
                settings[key] = cfg.get_float("verify", key, positive=True)
        else:
            raise cfg.error("unknown key", "verify", key)
    return settings, tolerances


def coherent_projector_formula(mean: float, phase: float, dim: int, shrink: float = 0.0,
                               phase_shift: float = 0.0) -> np.ndarray:
    """Closed-form coherent-state matrix elements after a decay step.

    ``rho_NM = e^{-mean (1-shrink)} e^{i(N-M)(phase - phase_shift)}
    mean^{(N+M)/2} (1-shrink)^{(N+M)/2} / sqrt(N! M!)``.
    """
    n = np.arange(dim, dtype=float)
    log_a = 0.5 * (-mean * (1.0 - shrink) + n * math.log(mean) + n * math.log1p(-shrink)) - 0.5 * gammaln(n + 1)
    a = np.exp(log_a) * np.exp(1j * n * (phase - phase_shift))
    return np.outer(a, a.conj())


def master_channel_gaps(rho: DensityMatrix, jdts=(1e-2, 5e-3, 2.5e-3), mu: float = 0.5) -> list:
    return [
        float(np.max(np.abs(step_master(rho, mu, 1.0, x).rho - step_channel_oracle(rho, mu, 1.0, x).rho)))
        for x in jdts
    ]


def literal_step_residual(mean: float, n_max: int, jdt: float, mu_dt: float, phase: float = 0.3) -> float:
    """Max entrywise gap between one map step on a coherent projector and the closed form."""
    basis = BasisSpec(n_max)
    # The criterion fixes n_max, so the truncation check is relaxed to what that basis allows.
    start = csib(cmath.rect(math.sqrt(mean), phase), basis, tail_tol=1e-8).projector()
    out = step_master(start, mu_dt / jdt, 1.0, jdt)
    ref = coherent_projector_formula(mean, phase, basis.dim, jdt, mu_dt)
    return float(np.max(np.abs(out.rho - ref)))


def binomial_tv(N0: int, jt: float, propagator, safety_c: float) -> float:
    params = calibrate_dos(PhysicsParams(dos_model=ConstantDos()), float(N0), 1.0)
    cfg = EvolutionConfig(params, StepPolicy(safety_c), t_end=jt, record_every=10**9)
    rho0 = number_state(N0, BasisSpec.for_mean(N0)).projector()
    rec = evolve(rho0, cfg, propagator=propagator)
    p = rec.final_state.diagonal
    q = binom.pmf(np.arange(p.size), N0, math.exp(-jt))
    return 0.5 * float(np.sum(np.abs(p - q)))


def eigenvalue_residual(alpha: complex, n_max: int) -> float:
    state = csib(alpha, BasisSpec(n_max), tail_tol=None)
    return float(np.linalg.norm(lowering_apply(state).amp - alpha * state.amp))


def energy_gap_error(mean: float, V: float, g: float) -> float:
    """Relative error of the coherent/number energy-density gap against ``g <N> / (2 V^2)``."""
    basis = BasisSpec.for_mean(mean)

    def energy(N):
        return g * N * N / (2.0 * V)

    coherent = energy_density(csib(math.sqrt(mean), basis), energy, V)
    fixed = energy_density(number_state(round(mean), basis), energy, V)
    expected = g * mean / (2.0 * V * V)
    return abs(abs(coherent - fixed) - expected) / expected


def ssr_residuals(cfg: TwoBoxConfig, max_norm_deficit=1e-8) -> dict:
    state = build_total_state(cfg, max_norm_deficit)
    reduced = reduce_to_box_one(state)
    low, high = total_number_spread(state)
    rho = reduced.rho
    offdiag = float(np.max(np.abs(rho - np.diag(np.diag(rho)))))
    mean = cfg.alpha_mag**2
    poisson = poisson_mixture(mean, reduced.basis, tail_tol=None)
    tv = 0.5 * float(np.sum(np.abs(reduced.diagonal - poisson.diagonal)))
    averaged = phase_average(cfg.alpha_mag, reduced.basis, tail_tol=None)
    pa_gap = float(np.max(np.abs(rho - averaged.rho)))
    other = TwoBoxConfig(
        n_total=cfg.n_total,
        alpha_mag=cfg.alpha_mag,
        alpha_phase=cfg.alpha_phase,
        alpha_prime_mag=cfg.alpha_prime_mag,
        env_labels=1,
        env_coeffs=(1.0,),
    )
    env_gap = float(np.max(np.abs(rho - reduce_to_box_one(build_total_state(other, max_norm_deficit)).rho)))
    return {
        "ssr_number_conservation": float(max(abs(low - cfg.n_total), abs(high - cfg.n_total))),
        "ssr_offdiagonal": offdiag,
        "ssr_poisson_tv": tv,
        "ssr_phase_average": pa_gap,
        "ssr_env_invariance": env_gap,
        "norm_deficit": state.meta["norm_deficit"],
    }


def run_checks(settings=None, tolerances=None, ssr_cfg: TwoBoxConfig | None = None) -> list:
    s = dict(DEFAULTS)
    s.update(settings or {})
    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    ssr_cfg = ssr_cfg or TwoBoxConfig()
    residuals = {}

    order_state = csib(math.sqrt(s["order_mean"])).projector()
    gaps = master_channel_gaps(order_state)
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    residuals["master_channel_order"] = max(abs(r - 4.0) for r in ratios)

    gen_state = csib(math.sqrt(s["generator_mean"])).projector()
    jdt = s["generator_jdt"]
    residuals["generator_channel_agreement"] = float(np.max(np.abs(
        step_generator_oracle(gen_state, 0.5, 1.0, jdt, s["generator_substeps"]).rho
        - step_channel_oracle(gen_state, 0.5, 1.0, jdt).rho
    )))

    x = s["literal_jdt"]
    r1 = literal_step_residual(s["literal_mean"], s["literal_n_max"], x, s["literal_mu_dt"])
    r2 = literal_step_residual(s["literal_mean"], s["literal_n_max"], x / 2, s["literal_mu_dt"] / 2)
    residuals["single_step_literal"] = r1 / x**2
    residuals["single_step_halving"] = abs(r1 / r2 - 4.0)

    residuals["binomial_endpoint_master"] = binomial_tv(
        s["binomial_N"], s["binomial_jt"], step_master, s["binomial_safety_c"]
    )
    residuals["binomial_endpoint_channel"] = binomial_tv(
        s["binomial_N"], s["binomial_jt"], step_channel_oracle, 0.01
    )

    ssr = ssr_residuals(ssr_cfg)
    for key in TOLERANCES:
        if key.startswith("ssr_"):
            residuals[key] = ssr[key]

    residuals["eigenvalue_relation"] = max(eigenvalue_residual(a, s["eigen_n_max"]) for a in EIGEN_ALPHAS)
    residuals["energy_density_gap"] = energy_gap_error(s["energy_mean"], s["energy_volume"], s["energy_g"])

    return [
        {"name": name, "residual": residuals[name], "tolerance": tol[name],
         "pass": bool(residuals[name] <= tol[name])}
        for name in TOLERANCES
    ]
