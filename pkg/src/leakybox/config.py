"""Strict INI run configuration.

Schema (every key optional unless marked *)::

    [run]
    t_end*            float > 0
    density_update    bool            (false)
    record_every      int >= 1        (1)
    n_max             int >= 1        (ten-sigma rule for the initial state)

    [initial_state]
    kind*             number | csib | gaussian | poisson | phase_avg
    N                 int             (kind = number)
    alpha, alpha_phase                (kind = csib)
    mean, fano, phase_slope           (kind = gaussian)
    mean                              (kind = poisson)
    magnitude, quadrature_points      (kind = phase_avg)

    [physics]
    box_volume, wall_volume, lambda_sq, condensate_fraction, K
    mu_model          linear | power  (linear);  mu_g (1), mu_exponent (0.5)
    dos_model         sqrt | constant (sqrt);    dos_scale (1)
    leak_rate         float > 0: rescale the DOS so j(n(0)) equals this

    [policy]
    safety_c (0.01), energy_cutoff

    [output]
    csv (timeseries.csv), summary (summary.json), plots (false)

    [ssr]       n_total, alpha_mag, alpha_phase, alpha_prime_mag, env_labels, env_coeffs
    [verify]    see ``leakybox.verify.DEFAULTS`` and ``tol_<check>`` overrides
    [sweep]     max_runs (64)
    [grid]      section.key = v1, v2, ...

Unknown sections and keys are errors.
"""

from __future__ import annotations

import configparser
import copy
import math
import re
from dataclasses import dataclass

from leakybox.errors import ConfigError, PreconditionError
from leakybox.hilbert import BasisSpec, DensityMatrix
from leakybox.physics import (
    ConstantDos,
    LinearMu,
    PhysicsParams,
    PowerMu,
    SqrtDos,
    StepPolicy,
    calibrate_dos,
)
from leakybox.dynamics import EvolutionConfig
from leakybox.observables import mean_and_variance
from leakybox import states
from leakybox.ssr import TwoBoxConfig

STATE_KEYS = {
    "number": {"N"},
    "csib": {"alpha", "alpha_phase"},
    "gaussian": {"mean", "fano", "phase_slope"},
    "poisson": {"mean"},
    "phase_avg": {"magnitude", "quadrature_points"},
}

SCHEMA = {
    "run": {"t_end", "density_update", "record_every", "n_max"},
    "initial_state": {"kind"} | set().union(*STATE_KEYS.values()),
    "physics": {
        "box_volume", "wall_volume", "lambda_sq", "condensate_fraction", "K",
        "mu_model", "mu_g", "mu_exponent", "dos_model", "dos_scale", "leak_rate",
    },
    "policy": {"safety_c", "energy_cutoff"},
    "output": {"csv", "summary", "plots"},
    "ssr": {"n_total", "alpha_mag", "alpha_phase", "alpha_prime_mag", "env_labels", "env_coeffs"},
    "verify": None,  # validated by leakybox.verify
    "sweep": {"max_runs"},
    "grid": None,  # keys are section.key paths
}

_KEY_LINE = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> dict:
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        m = _SECTION_LINE.match(line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = lineno
            continue
        m = _KEY_LINE.match(line)
        if m and section is not None:
            where[(section, m.group(1).strip())] = lineno
    return where


@dataclass
class RunConfig:
    """Parsed configuration: raw string values by section, plus typed accessors."""

    data: dict
    lines: dict

    # -- construction -----------------------------------------------------
    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=(";",))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            if line is None and getattr(exc, "errors", None):
                line = exc.errors[0][0]
            raise ConfigError(f"cannot parse configuration: {exc}", line=line) from exc
        data = {s: dict(parser.items(s)) for s in parser.sections()}
        cfg = cls(data, _line_index(text))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration file {path}: {exc}") from exc
        return cls.from_text(text)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = cls({s: {k: str(v) for k, v in kv.items()} for s, kv in data.items()}, {})
        cfg.validate()
        return cfg

    def to_text(self) -> str:
        out = []
        for section, kv in self.data.items():
            out.append(f"[{section}]")
            out.extend(f"{k} = {v}" for k, v in kv.items())
            out.append("")
        return "\n".join(out)

    def with_override(self, path: str, value) -> "RunConfig":
        section, key = path.split(".", 1)
        data = copy.deepcopy(self.data)
        data.setdefault(section, {})[key] = str(value)
        data.pop("grid", None)
        cfg = RunConfig(data, self.lines)
        cfg.validate()
        return cfg

    # -- raw access -------------------------------------------------------
    def error(self, message: str, section: str, key: str | None = None) -> ConfigError:
        path = section if key is None else f"{section}.{key}"
        return ConfigError(message, path=path, line=self.lines.get((section, key)))

    def has(self, section: str, key: str) -> bool:
        return key in self.data.get(section, {})

    def get_str(self, section, key, default=None, required=False):
        sec = self.data.get(section, {})
        if key not in sec:
            if required:
                raise self.error("required key is missing", section, key)
            return default
        return sec[key].strip()

    def get_float(self, section, key, default=None, required=False, positive=False,
                  nonneg=False, lo=None, hi=None):
        raw = self.get_str(section, key, None, required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise self.error(f"expected a number, got {raw!r}", section, key) from None
        if not math.isfinite(value):
            raise self.error(f"expected a finite number, got {raw!r}", section, key)
        if positive and not value > 0:
            raise self.error(f"must be > 0, got {value!r}", section, key)
        if nonneg and value < 0:
            raise self.error(f"must be >= 0, got {value!r}", section, key)
        if lo is not None and value < lo:
            raise self.error(f"must be >= {lo}, got {value!r}", section, key)
        if hi is not None and value > hi:
            raise self.error(f"must be <= {hi}, got {value!r}", section, key)
        return value

    def get_int(self, section, key, default=None, required=False, lo=None):
        raw = self.get_str(section, key, None, required)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise self.error(f"expected an integer, got {raw!r}", section, key) from None
        if lo is not None and value < lo:
            raise self.error(f"must be >= {lo}, got {value!r}", section, key)
        return value

    def get_bool(self, section, key, default=False):
        raw = self.get_str(section, key, None)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise self.error(f"expected a boolean, got {raw!r}", section, key)

    def get_choice(self, section, key, choices, default=None, required=False):
        raw = self.get_str(section, key, default, required)
        if raw is not None and raw not in choices:
            raise self.error(f"must be one of {sorted(choices)}, got {raw!r}", section, key)
        return raw

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        for section, keys in self.data.items():
            if section not in SCHEMA:
                raise self.error(f"unknown section [{section}]", section)
            allowed = SCHEMA[section]
            if allowed is None:
                continue
            for key in keys:
                if key not in allowed:
                    raise self.error("unknown key", section, key)
        if "initial_state" in self.data:
            kind = self.get_choice("initial_state", "kind", STATE_KEYS, required=True)
            for key in self.data["initial_state"]:
                if key != "kind" and key not in STATE_KEYS[kind]:
                    raise self.error(f"key not valid for kind = {kind}", "initial_state", key)
        for key in self.data.get("grid", {}):
            if "." not in key:
                raise self.error("grid keys must be section.key paths", "grid", key)
            section, sub = key.split(".", 1)
            if section not in ("run", "initial_state", "physics", "policy", "ssr"):
                raise self.error(f"cannot sweep over section [{section}]", "grid", key)
            if sub not in SCHEMA[section]:
                raise self.error(f"unknown target key {sub!r}", "grid", key)
            self.grid_values(key)
        # Typed accessors raise field-addressed errors; run them eagerly.
        if "run" in self.data:
            self.run_settings()
        if "initial_state" in self.data:
            self.state_spec()
        self.policy()
        self.physics_base()
        self.output()
        self.max_runs()
        if "ssr" in self.data:
            self.ssr()
        if "verify" in self.data:
            from leakybox.verify import verify_settings

            verify_settings(self)

    # -- typed views ------------------------------------------------------
    def run_settings(self) -> dict:
        return {
            "t_end": self.get_float("run", "t_end", required=True, positive=True),
            "density_update": self.get_bool("run", "density_update", False),
            "record_every": self.get_int("run", "record_every", 1, lo=1),
            "n_max": self.get_int("run", "n_max", None, lo=1),
        }

    def state_spec(self) -> dict:
        kind = self.get_choice("initial_state", "kind", STATE_KEYS, required=True)
        s = "initial_state"
        if kind == "number":
            return {"kind": kind, "N": self.get_int(s, "N", required=True, lo=0)}
        if kind == "csib":
            return {
                "kind": kind,
                "alpha": self.get_float(s, "alpha", required=True, nonneg=True),
                "alpha_phase": self.get_float(s, "alpha_phase", 0.0),
            }
        if kind == "gaussian":
            return {
                "kind": kind,
                "mean": self.get_float(s, "mean", required=True, positive=True),
                "fano": self.get_float(s, "fano", required=True, positive=True),
                "phase_slope": self.get_float(s, "phase_slope", 0.0),
            }
        if kind == "poisson":
            return {"kind": kind, "mean": self.get_float(s, "mean", required=True, positive=True)}
        return {
            "kind": kind,
            "magnitude": self.get_float(s, "magnitude", required=True, positive=True),
            "quadrature_points": self.get_int(s, "quadrature_points", None, lo=2),
        }

    def policy(self) -> StepPolicy:
        return StepPolicy(
            safety_c=self.get_float("policy", "safety_c", 0.01, positive=True, hi=0.1),
            energy_cutoff_Ec=self.get_float("policy", "energy_cutoff", None, positive=True),
        )

    def physics_base(self) -> PhysicsParams:
        s = "physics"
        mu_kind = self.get_choice(s, "mu_model", {"linear", "power"}, "linear")
        g = self.get_float(s, "mu_g", 1.0, positive=True)
        if mu_kind == "linear":
            mu = LinearMu(g)
        else:
            mu = PowerMu(g, self.get_float(s, "mu_exponent", 0.5, positive=True))
        dos_kind = self.get_choice(s, "dos_model", {"sqrt", "constant"}, "sqrt")
        scale = self.get_float(s, "dos_scale", 1.0, positive=True)
        dos = SqrtDos(scale) if dos_kind == "sqrt" else ConstantDos(scale)
        self.get_float(s, "leak_rate", None, positive=True)
        return PhysicsParams(
            coupling_lambda_sq=self.get_float(s, "lambda_sq", 1.0, positive=True),
            wall_volume_v=self.get_float(s, "wall_volume", 1.0, positive=True),
            box_volume_V=self.get_float(s, "box_volume", 1.0, positive=True),
            condensate_fraction=self.get_float(s, "condensate_fraction", 1.0, positive=True, hi=1.0),
            order_unity_K=self.get_float(s, "K", 1.0, positive=True),
            dos_model=dos,
            mu_model=mu,
        )

    def ssr(self) -> TwoBoxConfig:
        s = "ssr"
        base = TwoBoxConfig()
        labels = self.get_int(s, "env_labels", None, lo=1)
        raw = self.get_str(s, "env_coeffs", None)
        if raw is None:
            if labels is None:
                coeffs, labels = base.env_coeffs, base.env_labels
            else:
                coeffs = (1 / math.sqrt(labels),) * labels
        else:
            try:
                coeffs = tuple(complex(c.strip().replace(" ", "")) for c in raw.split(","))
            except ValueError:
                raise self.error(f"expected comma-separated complex numbers, got {raw!r}", s,
                                 "env_coeffs") from None
            if labels is None:
                labels = len(coeffs)
        try:
            return TwoBoxConfig(
                n_total=self.get_int(s, "n_total", base.n_total, lo=0),
                alpha_mag=self.get_float(s, "alpha_mag", base.alpha_mag, nonneg=True),
                alpha_phase=self.get_float(s, "alpha_phase", base.alpha_phase),
                alpha_prime_mag=self.get_float(s, "alpha_prime_mag", base.alpha_prime_mag, nonneg=True),
                env_labels=labels,
                env_coeffs=coeffs,
            )
        except PreconditionError as exc:
            raise self.error(str(exc), s) from None

    def max_runs(self) -> int:
        return self.get_int("sweep", "max_runs", 64, lo=0)

    def grid_values(self, key: str) -> list:
        raw = self.data["grid"][key]
        values = []
        for item in raw.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                values.append(float(item))
            except ValueError:
                section, sub = "grid", key
                raise self.error(f"grid value {item!r} is not numeric", section, sub) from None
        return values

    def grid(self) -> dict:
        return {k: self.grid_values(k) for k in sorted(self.data.get("grid", {}))}

    def output(self) -> dict:
        return {
            "csv": self.get_str("output", "csv", "timeseries.csv"),
            "summary": self.get_str("output", "summary", "summary.json"),
            "plots": self.get_bool("output", "plots", False),
        }

    # -- builders (numerical preconditions raise PreconditionError) ----------
    def initial_state(self) -> DensityMatrix:
        spec = self.state_spec()
        n_max = self.run_settings()["n_max"]
        basis = BasisSpec(n_max) if n_max is not None else None
        kind = spec["kind"]
        if kind == "number":
            if basis is None:
                basis = BasisSpec.for_mean(spec["N"])
            return states.number_state(spec["N"], basis).projector()
        if kind == "csib":
            alpha = spec["alpha"] * complex(math.cos(spec["alpha_phase"]), math.sin(spec["alpha_phase"]))
            return states.csib(alpha, basis).projector()
        if kind == "gaussian":
            profile = states.GaussianNumberProfile(spec["mean"], spec["fano"], spec["phase_slope"])
            return states.gaussian_profile_state(profile, basis).projector()
        if kind == "poisson":
            return states.poisson_mixture(spec["mean"], basis)
        return states.phase_average(spec["magnitude"], basis, spec["quadrature_points"])

    def physics(self, rho0: DensityMatrix) -> PhysicsParams:
        params = self.physics_base()
        target = self.get_float("physics", "leak_rate", None, positive=True)
        if target is not None:
            mean, _ = mean_and_variance(rho0)
            if not mean > 0:
                raise PreconditionError("cannot calibrate the leak rate for an empty initial state")
            params = calibrate_dos(params, mean / params.box_volume_V, target)
        return params

    def evolution(self, rho0: DensityMatrix) -> EvolutionConfig:
        run = self.run_settings()
        return EvolutionConfig(
            params=self.physics(rho0),
            policy=self.policy(),
            t_end=run["t_end"],
            density_update=run["density_update"],
            record_every=run["record_every"],
        )
