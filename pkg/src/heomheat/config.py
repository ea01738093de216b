"""
TOML run configuration.

A config has a schema header, a ``[system]`` table (a named builder plus its
non-bath parameters, or an explicit Hamiltonian), one ``[bath.<name>]`` table
per bath, a ``[solver]`` table and an optional ``[propagation]`` table::

    schema_version = 1

    [system]
    builder = "two_level"
    omega0 = 1.0
    cold_coupling = "tilted"

    [bath.h]
    zeta = 0.1
    gamma = 2.0
    beta = 0.5

    [solver]
    depth = 8

Any key can be overridden from the environment: ``HEOMHEAT_BATH__C__ZETA=0.3``
sets ``bath.c.zeta`` (path components joined by double underscores, value
parsed as a TOML literal).
"""

import copy
import dataclasses
import os
import sys

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bath import BathSpec
from .dynamics import SolverOptions
from .models import BUILDERS, Drive, SystemModel, _matrix_from_lists, \
    _matrix_to_lists

__all__ = [
    "SCHEMA_VERSION", "ENV_PREFIX", "ConfigError", "Config", "load_config",
    "loads_config", "dump_config", "dumps_config", "build_model",
    "solver_options", "config_from_model", "set_path", "get_path",
    "parameter_paths", "apply_env_overrides",
]

SCHEMA_VERSION = 1
ENV_PREFIX = "HEOMHEAT_"

BATH_FIELDS = ("zeta", "gamma", "beta", "scheme", "n_terms")
NUMERIC_BATH_FIELDS = ("zeta", "gamma", "beta", "n_terms")
#: builder parameters that describe baths and so live in [bath.*] tables
_BATH_PARAMS = {"zeta", "zeta_h", "zeta_c", "beta", "beta_h", "beta_c",
                "beta_w", "gamma", "n_terms", "scheme"}
PROPAGATION_DEFAULTS = {"t_end": 50.0, "n_out": 101, "dt": 0.0,
                        "adaptive": False, "atol": 1e-10, "initial": "ground"}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclasses.dataclass
class Config:
    """Plain-data view of a TOML config (nested dicts, no numpy)."""

    system: dict
    baths: dict
    solver: dict = dataclasses.field(default_factory=dict)
    propagation: dict = dataclasses.field(default_factory=dict)
    drives: list = dataclasses.field(default_factory=list)

    def to_dict(self):
        out = {"schema_version": SCHEMA_VERSION,
               "system": copy.deepcopy(self.system),
               "bath": copy.deepcopy(self.baths)}
        if self.solver:
            out["solver"] = dict(self.solver)
        if self.propagation:
            out["propagation"] = dict(self.propagation)
        if self.drives:
            out["drive"] = copy.deepcopy(self.drives)
        return out

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r}; expected "
                f"{SCHEMA_VERSION}")
        unknown = set(d) - {"system", "bath", "solver", "propagation", "drive"}
        if unknown:
            raise ConfigError(f"unknown top-level tables {sorted(unknown)}")
        if "system" not in d:
            raise ConfigError("config needs a [system] table")
        solver = d.get("solver", {})
        valid = {f.name for f in dataclasses.fields(SolverOptions)}
        bad = set(solver) - valid
        if bad:
            raise ConfigError(f"unknown solver keys {sorted(bad)}; valid: "
                              f"{sorted(valid)}")
        prop = d.get("propagation", {})
        bad = set(prop) - set(PROPAGATION_DEFAULTS)
        if bad:
            raise ConfigError(f"unknown propagation keys {sorted(bad)}")
        for name, table in d.get("bath", {}).items():
            bad = set(table) - set(BATH_FIELDS) - {"coupling"}
            if bad:
                raise ConfigError(f"unknown keys {sorted(bad)} in [bath.{name}]")
        return cls(d["system"], d.get("bath", {}), solver, prop,
                   d.get("drive", []))

    def copy(self):
        return Config.from_dict(self.to_dict())


def loads_config(text, env=None):
    """Parse TOML text; ``env`` (default ``os.environ``) supplies overrides."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    cfg = Config.from_dict(data)
    return apply_env_overrides(cfg, os.environ if env is None else env)


def load_config(path, env=None):
    with open(path, "rb") as fh:
        text = fh.read().decode()
    return loads_config(text, env)


def dumps_config(cfg):
    return tomli_w.dumps(cfg.to_dict())


def dump_config(cfg, path):
    with open(path, "w") as fh:
        fh.write(dumps_config(cfg))


def _parse_literal(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_env_overrides(cfg, env):
    """Copy of ``cfg`` with every ``HEOMHEAT_A__B__C`` variable applied."""
    out = cfg
    for key in sorted(env):
        if not key.startswith(ENV_PREFIX):
            continue
        path = ".".join(p.lower() for p in key[len(ENV_PREFIX):].split("__"))
        if out is cfg:
            out = cfg.copy()
        set_path(out, path, _parse_literal(env[key]))
    return out


def _tables(cfg):
    return {"system": cfg.system, "bath": cfg.baths, "solver": cfg.solver,
            "propagation": cfg.propagation}


def set_path(cfg, path, value):
    """Set a dotted parameter path in place; ``bath.*.x`` sets every bath."""
    parts = path.split(".")
    tables = _tables(cfg)
    if parts[0] not in tables:
        raise ConfigError(f"unknown parameter path {path!r}; valid paths: "
                          f"{', '.join(parameter_paths(cfg))}")
    if parts[0] == "bath":
        if len(parts) != 3:
            raise ConfigError(f"bath paths look like bath.<name>.<field>, got "
                              f"{path!r}")
        if parts[1] == "*":
            names = build_model(cfg).bath_names
        else:
            names = [parts[1]]
        for name in names:
            cfg.baths.setdefault(name, {})[parts[2]] = value
        return
    if len(parts) != 2:
        raise ConfigError(f"unknown parameter path {path!r}")
    tables[parts[0]][parts[1]] = value


def get_path(cfg, path):
    parts = path.split(".")
    if parts[0] == "bath":
        model = build_model(cfg)
        name = model.bath_names[0] if parts[1] == "*" else parts[1]
        return getattr(model.baths[model.bath_index(name)], parts[2])
    return _tables(cfg)[parts[0]][parts[1]]


def parameter_paths(cfg):
    """Dotted paths of every numeric parameter a sweep may vary."""
    paths = []
    for key, val in cfg.system.items():
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            paths.append(f"system.{key}")
    model = build_model(cfg)
    for b in model.baths:
        paths += [f"bath.{b.name}.{f}" for f in NUMERIC_BATH_FIELDS]
    paths += [f"bath.*.{f}" for f in NUMERIC_BATH_FIELDS]
    paths += ["solver.depth", "solver.tol"]
    return paths


def _bath_from_table(name, table, default=None):
    fields = {}
    if default is not None:
        fields = {f: getattr(default, f) for f in BATH_FIELDS}
    for f in BATH_FIELDS:
        if f in table:
            fields[f] = table[f]
    missing = [f for f in ("zeta", "gamma", "beta") if f not in fields]
    if missing:
        raise ConfigError(f"[bath.{name}] is missing {missing}")
    fields["n_terms"] = int(fields.get("n_terms", 2))
    return BathSpec(name=name, **fields)


def build_model(cfg):
    """Instantiate the :class:`SystemModel` described by ``cfg``."""
    system = dict(cfg.system)
    builder = system.pop("builder", None)
    drives = tuple(Drive.from_dict(d) for d in cfg.drives)
    if builder is not None:
        if builder not in BUILDERS:
            raise ConfigError(f"unknown builder {builder!r}; available: "
                              f"{sorted(BUILDERS)}")
        try:
            model = BUILDERS[builder](**system)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for builder {builder!r}: {exc}") \
                from exc
        baths, couplings = list(model.baths), list(model.couplings)
        for name, table in cfg.baths.items():
            if name not in model.bath_names:
                raise ConfigError(f"builder {builder!r} has no bath {name!r}; "
                                  f"baths are {model.bath_names}")
            k = model.bath_index(name)
            baths[k] = _bath_from_table(name, table, baths[k])
            if "coupling" in table:
                couplings[k] = _matrix_from_lists(table["coupling"])
        return model.replace(baths=tuple(baths), couplings=tuple(couplings),
                             drives=drives)
    if "hamiltonian" not in system:
        raise ConfigError("[system] needs either `builder` or `hamiltonian`")
    H = _matrix_from_lists(system["hamiltonian"])
    baths, couplings = [], []
    for name, table in cfg.baths.items():
        if "coupling" not in table:
            raise ConfigError(f"[bath.{name}] needs a `coupling` matrix")
        baths.append(_bath_from_table(name, table))
        couplings.append(_matrix_from_lists(table["coupling"]))
    return SystemModel(H, tuple(baths), tuple(couplings), drives)


def solver_options(cfg, **overrides):
    opts = SolverOptions(**cfg.solver)
    return dataclasses.replace(opts, **overrides)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def config_from_model(model, solver=None, propagation=None):
    """Config that rebuilds ``model`` (inverse of :func:`build_model`)."""
    baths = {}
    for b, V in zip(model.baths, model.couplings):
        table = {f: _plain(getattr(b, f)) for f in BATH_FIELDS}
        if model.builder is None:
            table["coupling"] = _matrix_to_lists(V)
        baths[b.name] = table
    if model.builder is not None:
        system = {"builder": model.builder}
        system.update({k: _plain(v) for k, v in model.parameters.items()
                       if k not in _BATH_PARAMS})
    else:
        system = {"hamiltonian": _matrix_to_lists(model.hamiltonian)}
    solver = {} if solver is None else {
        k: _plain(v) for k, v in dataclasses.asdict(solver).items()}
    return Config(system, baths, solver, dict(propagation or {}),
                  [d.to_dict() for d in model.drives])
