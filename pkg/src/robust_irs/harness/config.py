"""Experiment configuration: YAML file with defaults, dotted overrides, validation."""

import copy
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Optional

import yaml

from ..solver_mu import MuSolverConfig
from ..solver_su import SuSolverConfig

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SWEEP_PARAMS",
    "default_config_dict",
    "load_config",
    "from_dict",
    "apply_overrides",
]

# parameters a sweep may vary
SWEEP_PARAMS = ("p_u_dbm", "N", "N_r", "P_dbm", "K", "q_a", "q_theta", "T0", "M")

# YAML section -> keys it may hold (all map onto flat ExperimentConfig fields)
SECTIONS = {
    "system": ("K", "M", "N", "irs_ny", "P_dbm", "sigma2_dbm"),
    "geometry": ("ap_ref", "irs_ref", "cluster_center", "cluster_radius"),
    "pathloss": ("c0_db", "alpha_au", "alpha_ai", "alpha_iu"),
    "rician_db": ("beta_au_db", "beta_ai_db", "beta_iu_db"),
    "training": ("N_r", "p_u_dbm", "eps2_dbm", "train_q_theta", "T0"),
    "reflection": ("q_a", "q_theta"),
    "experiment": ("trials", "master_seed", "workers", "solver"),
    "baselines": ("no_irs", "nonrobust", "random_bcd"),
    "sweep": ("param", "values"),
    "solver_su": None,
    "solver_mu": None,
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    K: int = 1
    M: int = 4
    N: int = 20
    irs_ny: int = 4
    P_dbm: float = 26.0
    sigma2_dbm: float = -80.0
    ap_ref: tuple = (2.0, 0.0, 0.0)
    irs_ref: tuple = (0.0, 45.0, 2.0)
    cluster_center: tuple = (3.0, 45.0, 0.0)
    cluster_radius: float = 3.0
    c0_db: float = -30.0
    alpha_au: float = 3.6
    alpha_ai: float = 2.2
    alpha_iu: float = 2.2
    # None: Rayleigh (linear factor 0); "inf": pure LoS
    beta_au_db: Optional[float] = None
    beta_ai_db: Optional[float] = 3.0
    beta_iu_db: Optional[float] = None
    N_r: Optional[int] = None
    p_u_dbm: float = 10.0
    eps2_dbm: float = -80.0
    train_q_theta: object = "auto"
    T0: Optional[int] = None
    q_a: Optional[int] = 1
    q_theta: Optional[int] = 1
    trials: int = 50
    master_seed: int = 0
    workers: int = 1
    solver: str = "auto"
    no_irs: bool = True
    nonrobust: bool = True
    random_bcd: bool = False
    sweep_param: Optional[str] = None
    sweep_values: tuple = ()
    solver_su: dict = field(default_factory=dict)
    solver_mu: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def n_pilots(self):
        return self.N + 1 if self.N_r is None else self.N_r

    @property
    def training_q_theta(self):
        """Phase bits of the training patterns (None: continuous DFT)."""
        if self.train_q_theta != "auto":
            return self.train_q_theta
        if self.q_theta is None:
            return None
        # phases fixed at zero for data still train with 1-bit patterns
        return max(self.q_theta, 1)

    def validate(self):
        for name in ("K", "M", "N", "irs_ny", "trials", "workers"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)!r}")
        if self.N % self.irs_ny:
            raise ConfigError(f"N={self.N} is not a multiple of irs_ny={self.irs_ny}")
        if self.n_pilots < self.N + 1:
            raise ConfigError(f"N_r={self.N_r} must be >= N+1={self.N + 1}")
        if self.T0 is not None and self.T0 <= self.n_pilots:
            raise ConfigError(f"T0={self.T0} must exceed the number of pilots {self.n_pilots}")
        for name in ("q_a", "q_theta"):
            bits = getattr(self, name)
            if bits is not None and (not isinstance(bits, int) or bits < 0):
                raise ConfigError(f"{name} must be a nonnegative integer or null, got {bits!r}")
        tq = self.train_q_theta
        if tq != "auto" and tq is not None and (not isinstance(tq, int) or tq < 1):
            raise ConfigError(f"train_q_theta must be 'auto', null or >= 1, got {tq!r}")
        if self.cluster_radius < 0:
            raise ConfigError("cluster_radius must be nonnegative")
        for name in ("alpha_au", "alpha_ai", "alpha_iu"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("ap_ref", "irs_ref", "cluster_center"):
            if len(getattr(self, name)) != 3:
                raise ConfigError(f"{name} must be a 3-D position")
        if self.solver not in ("auto", "su", "mu"):
            raise ConfigError(f"solver must be auto, su or mu, got {self.solver!r}")
        if self.solver == "su" and self.K != 1:
            raise ConfigError("the single-user solver needs K = 1")
        if self.sweep_param is not None and self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"cannot sweep {self.sweep_param!r}; allowed: {', '.join(SWEEP_PARAMS)}")
        if self.sweep_param is None and self.sweep_values:
            raise ConfigError("sweep values given without a sweep parameter")
        for value in self.sweep_values:
            self.at(value)
        for name, cls in (("solver_su", SuSolverConfig), ("solver_mu", MuSolverConfig)):
            try:
                cls(**getattr(self, name))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: {exc}") from None

    def at(self, value):
        """Copy with the sweep parameter set to ``value`` (validated)."""
        if self.sweep_param is None:
            return self
        try:
            return replace(self, **{self.sweep_param: value, "sweep_param": None, "sweep_values": ()})
        except ConfigError as exc:
            raise ConfigError(f"sweep value {self.sweep_param}={value!r}: {exc}") from None


def default_config_dict():
    text = resources.files("robust_irs.harness").joinpath("default_config.yaml").read_text()
    return yaml.safe_load(text)


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, val in (extra or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _parse_number(value):
    if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity"):
        return float("inf")
    return value


def from_dict(data):
    """Build an :class:`ExperimentConfig` from a nested mapping (merged over defaults)."""
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    merged = _merge(default_config_dict(), data)
    flat = {}
    for section, body in merged.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        allowed = SECTIONS[section]
        if allowed is None:
            flat[section] = dict(body)
            continue
        for key, val in body.items():
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}")
            if section == "sweep":
                key = "sweep_" + key
            flat[key] = val
    for name in ("ap_ref", "irs_ref", "cluster_center"):
        if name in flat:
            flat[name] = tuple(float(x) for x in flat[name])
    flat["sweep_values"] = tuple(flat.get("sweep_values") or ())
    for name in ("beta_au_db", "beta_ai_db", "beta_iu_db"):
        flat[name] = _parse_number(flat.get(name))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(flat) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(data, overrides):
    """Apply ``section.key=value`` strings (values parsed as YAML) to a nested dict."""
    data = copy.deepcopy(data or {})
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        if len(keys) != 2 or not all(keys):
            raise ConfigError(f"override key {path!r} must be section.key")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None
        data.setdefault(keys[0], {})
        if not isinstance(data[keys[0]], dict):
            raise ConfigError(f"section {keys[0]!r} must be a mapping")
        data[keys[0]][keys[1]] = value
    return data


def load_config(path=None, overrides=()):
    """Read a YAML config (or just the defaults), apply overrides, validate.

    Raises
    ------
    ConfigError
        On malformed YAML, unknown keys or invalid values.
    OSError
        If ``path`` cannot be read.
    """
    data = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return from_dict(apply_overrides(data, overrides))
