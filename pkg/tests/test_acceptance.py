"""Acceptance gate: one test per criterion, A1 to A10.

Each test records a one-line summary that the terminal report prints under
"acceptance gate". Tolerances are pinned here and are not tuned to pass.
"""

import cmath
import math
import time

import numpy as np
import pytest

from leakybox.dynamics import (
    EvolutionConfig,
    evolve,
    step_channel_oracle,
    step_generator_oracle,
    step_master,
)
from leakybox.hilbert import BasisSpec, lowering_apply, purity
from leakybox.observables import fano_factor
from leakybox.physics import ConstantDos, LinearMu, PhysicsParams, SqrtDos, StepPolicy, calibrate_dos
from leakybox.report import analytic_residuals
from leakybox.ssr import TwoBoxConfig, build_total_state, reduce_to_box_one
from leakybox.states import (
    GaussianNumberProfile,
    csib,
    gaussian_profile_state,
    number_state,
    phase_average,
    poisson_mixture,
)
from leakybox.verify import (
    binomial_tv,
    energy_gap_error,
    literal_step_residual,
    master_channel_gaps,
)

pytestmark = pytest.mark.acceptance

V = 1e4
J = 1e-3
T_END = 200.0


def params_for(mean, dos=None, j=J):
    dos = ConstantDos() if dos is None else dos
    return calibrate_dos(PhysicsParams(box_volume_V=V, dos_model=dos, mu_model=LinearMu(1.0)), mean / V, j)


def gate(record_property, criterion, ok, detail):
    record_property("criterion", criterion)
    record_property("detail", detail)
    assert ok, f"{criterion}: {detail}"


def test_A1_mean_decay(record_property):
    start = time.perf_counter()
    cfg = EvolutionConfig(params_for(100.0), StepPolicy(0.01), t_end=T_END)
    rec = evolve(csib(10.0).projector(), cfg)
    elapsed = time.perf_counter() - start
    a = rec.as_arrays()
    err = float(np.max(np.abs(a["mean_N"] / (100.0 * np.exp(-J * a["t"])) - 1.0)))
    gate(record_property, "A1", err <= 1e-3 and elapsed < 5.0,
         f"max rel err {err:.3e} (<= 1e-3), runtime {elapsed:.2f} s (< 5 s)")


def test_A2_fano_relaxation(record_property):
    start = time.perf_counter()
    cases = [
        ("number 100", 0.0, number_state(100, BasisSpec.for_mean(100)).projector()),
        ("gaussian F=0.2", 0.2, gaussian_profile_state(GaussianNumberProfile(100.0, 0.2)).projector()),
        ("gaussian F=3", 3.0, gaussian_profile_state(GaussianNumberProfile(100.0, 3.0)).projector()),
    ]
    parts, ok = [], True
    for label, f0, rho in cases:
        rec = evolve(rho, EvolutionConfig(params_for(100.0), StepPolicy(0.01), t_end=T_END))
        a = rec.as_arrays()
        pred = 1.0 + (f0 - 1.0) * np.exp(-J * a["t"])
        if f0 == 0.0:
            err = float(np.max(np.abs(a["fano"] - pred)))
            ok &= err <= 2e-3
            parts.append(f"{label} abs {err:.2e}")
        else:
            err = float(np.max(np.abs(a["fano"] / pred - 1.0)))
            ok &= err <= 0.02
            parts.append(f"{label} rel {err:.2e}")
    elapsed = time.perf_counter() - start
    gate(record_property, "A2", ok and elapsed < 30.0,
         ", ".join(parts) + f" (<= 2e-3 abs / 2% rel), runtime {elapsed:.1f} s (< 30 s)")


def test_A3_csib_robustness(record_property):
    cfg = EvolutionConfig(params_for(100.0, SqrtDos()), StepPolicy(0.01), t_end=T_END, density_update=True)
    rec = evolve(csib(10.0).projector(), cfg)
    a = rec.as_arrays()
    phase_err = analytic_residuals(rec)["phase_rotation_max_rel"]
    p_min, f_min = float(a["purity"].min()), float(a["fidelity_csib"].min())
    ok = p_min >= 0.999 and f_min >= 0.9999 and phase_err is not None and phase_err <= 1e-3
    gate(record_property, "A3", ok,
         f"purity min {p_min:.12f} (>= 0.999, max {a['purity'].max():.6f}), fidelity min "
         f"{f_min:.12f} (>= 0.9999), phase advance rel err {phase_err:.2e} (<= 1e-3), "
         f"j {a['j_t'][0]:.3e} -> {a['j_t'][-1]:.3e}")


def test_A4_fragility(record_property):
    jt = J * T_END
    band = 0.02
    parts, ok = [], True
    cases = [
        ("number 100", 0.2, number_state(100, BasisSpec.for_mean(100)).projector()),
        ("gaussian F=3", 0.9, gaussian_profile_state(GaussianNumberProfile(100.0, 3.0)).projector()),
    ]
    for label, threshold, rho in cases:
        master = float(evolve(rho, EvolutionConfig(params_for(100.0), t_end=T_END)).purity[-1])
        # The channel is a semigroup, so one application covers the whole interval.
        channel = purity(step_channel_oracle(rho, 0.0, 1.0, jt))
        ok &= master < threshold + band and channel < threshold + band and abs(master - channel) <= band
        strict = "below" if master < threshold else "not below"
        parts.append(f"{label} purity {master:.4f} (channel {channel:.4f}, {strict} {threshold})")
    gate(record_property, "A4", ok, "; ".join(parts) + f"; thresholds held to +-{band} against the channel")


def test_A5_single_step_literal(record_property):
    x, mu_dt = 1e-3, 0.37
    r1 = literal_step_residual(25.0, 60, x, mu_dt)
    r2 = literal_step_residual(25.0, 60, x / 2, mu_dt / 2)
    ratio = r1 / r2
    gate(record_property, "A5", r1 <= 5 * x * x and 3.5 <= ratio <= 4.5,
         f"residual {r1:.3e} = {r1 / x**2:.3f} (j dt)^2 (<= 5), halving ratio {ratio:.4f} (in [3.5, 4.5])")


def test_A6_oracle_order(record_property):
    gaps = master_channel_gaps(csib(3.0).projector())
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    rho = csib(5.0).projector()
    agree = float(np.max(np.abs(step_generator_oracle(rho, 0.5, 1.0, 0.05).rho
                                - step_channel_oracle(rho, 0.5, 1.0, 0.05).rho)))
    ok = all(3.5 <= r <= 4.5 for r in ratios) and agree <= 1e-10
    gate(record_property, "A6", ok,
         f"ratios {', '.join(f'{r:.4f}' for r in ratios)} (in [3.5, 4.5]), generator vs channel "
         f"{agree:.2e} (<= 1e-10)")


def test_A7_binomial_endpoint(record_property):
    safety_c = 2.5e-4
    tv_master = binomial_tv(50, 0.1, step_master, safety_c)
    tv_channel = binomial_tv(50, 0.1, step_channel_oracle, 0.01)
    gate(record_property, "A7", tv_master <= 1e-4 and tv_channel <= 1e-8,
         f"TV master {tv_master:.3e} at safety_c {safety_c:g} (<= 1e-4), channel {tv_channel:.3e} (<= 1e-8)")


def test_A8_ssr_suite(record_property):
    start = time.perf_counter()
    cfg = TwoBoxConfig(n_total=24, alpha_mag=2.0, alpha_prime_mag=math.sqrt(3.0))
    # Built without the norm-deficit guard so every residual is measured.
    total = build_total_state(cfg, max_norm_deficit=None)
    rho = reduce_to_box_one(total)
    offdiag = float(np.max(np.abs(rho.rho - np.diag(np.diag(rho.rho)))))
    tv = 0.5 * float(np.sum(np.abs(rho.diagonal - poisson_mixture(4.0, rho.basis, tail_tol=None).diagonal)))
    pa_gap = float(np.max(np.abs(rho.rho - phase_average(2.0, rho.basis, tail_tol=None).rho)))
    env_gap = 0.0
    for coeffs in [(1.0, 0.0), (0.6, 0.8j)]:
        other = reduce_to_box_one(build_total_state(
            TwoBoxConfig(n_total=24, alpha_prime_mag=math.sqrt(3.0), env_coeffs=coeffs), max_norm_deficit=None))
        env_gap = max(env_gap, float(np.max(np.abs(other.rho - rho.rho))))
    elapsed = time.perf_counter() - start
    ok = offdiag < 1e-12 and tv <= 1e-10 and pa_gap <= 1e-10 and env_gap <= 1e-12 and elapsed < 5.0
    gate(record_property, "A8", ok,
         f"n_total 24: off-diag {offdiag:.1e} (< 1e-12), TV to Poisson {tv:.2e} (<= 1e-10), "
         f"phase-average gap {pa_gap:.2e} (<= 1e-10), env {env_gap:.1e} (<= 1e-12), "
         f"norm deficit {total.meta['norm_deficit']:.2e}, runtime {elapsed:.2f} s")


def test_A9_eigenvalue_relation(record_property):
    parts, ok = [], True
    for alpha in (1.0, 2.0 * cmath.exp(1j * math.pi / 4), math.sqrt(30.0)):
        n_max = math.ceil(abs(alpha) ** 2 + 10 * abs(alpha))
        state = csib(alpha, BasisSpec(n_max), tail_tol=None)
        resid = lowering_apply(state).amp - alpha * state.amp
        full = float(np.linalg.norm(resid))
        # The top entry is -alpha c_{n_max}, the image of the cut-off tail.
        inner = float(np.linalg.norm(resid[:-1]))
        ok &= full <= 1e-9
        parts.append(f"|a|={abs(alpha):.3f} n_max={n_max}: {full:.2e} (below top {inner:.1e})")
    gate(record_property, "A9", ok, "; ".join(parts) + " (<= 1e-9)")


def test_A10_energy_density(record_property):
    err = energy_gap_error(100.0, V, 1.0)
    gate(record_property, "A10", err <= 1e-10,
         f"gap rel err {err:.2e} against g <N> / (2 V^2) at V = 1e4 (<= 1e-10)")


def test_fano_of_profiles_matches_request():
    # Guards A2's relative tolerance: the profile constructor is accurate to 2%.
    for f in (0.2, 3.0):
        assert fano_factor(gaussian_profile_state(GaussianNumberProfile(100.0, f))) == pytest.approx(f, rel=0.02)
