"""INI-style configuration files for the command-line tools.

Sections and keys are a closed set: unknown names are hard errors, because a
silently ignored typo in a physical constant is worse than a refusal to run.

    [params]   d1 d2 eps nu coupling          (all optional, default 1.0)
    [bc]       alpha1 alpha2 beta1 beta2 voltage length   (length default 1.0)
    [grid]     n kind strength                (1D solver grid)
    [evolve]   nx ny dt t_end output_every initial initial_lo initial_hi
               seed initial_file delta
    [sweep]    any [params]/[bc] key = comma-separated values
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .core import Grid1D, PhysParams, StripBC, ValidationError


class ConfigError(ValueError):
    """Malformed configuration (maps to exit code 64)."""


_SCHEMA = {
    "params": {"d1", "d2", "eps", "nu", "coupling"},
    "bc": {"alpha1", "alpha2", "beta1", "beta2", "voltage", "length"},
    "grid": {"n", "kind", "strength"},
    "evolve": {"nx", "ny", "dt", "t_end", "output_every", "initial",
               "initial_lo", "initial_hi", "seed", "initial_file", "delta"},
    "sweep": None,  # validated against params/bc keys below
}


@dataclass(frozen=True)
class GridSpec:
    n: int = 129
    kind: str = "uniform"
    strength: float = 2.0

    def build(self, length: float) -> Grid1D:
        if self.kind == "uniform":
            return Grid1D.uniform(self.n, length)
        if self.kind == "graded":
            return Grid1D.graded(self.n, length, self.strength)
        raise ConfigError(f"unknown grid kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; evolve settings stay a plain dict because they
    are combined with CLI overrides before an EvolveConfig is built."""

    params: PhysParams
    bc: StripBC
    grid: GridSpec
    evolve: dict
    sweep: dict


def _getfloat(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r} in [{section.name}]")
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {section[key]!r} is not a number") from None


def _getint(section, key, default=None):
    v = _getfloat(section, key, default)
    if v != int(v):
        raise ConfigError(f"[{section.name}] {key} must be an integer")
    return int(v)


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    for name in cp.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        allowed = _SCHEMA[name]
        if allowed is None:
            allowed = _SCHEMA["params"] | _SCHEMA["bc"]
        for key in cp[name]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{name}]")

    if "bc" not in cp:
        raise ConfigError("missing required section [bc]")

    p = cp["params"] if "params" in cp else cp["DEFAULT"]
    try:
        params = PhysParams(
            d1=_getfloat(p, "d1", 1.0), d2=_getfloat(p, "d2", 1.0),
            eps=_getfloat(p, "eps", 1.0), nu=_getfloat(p, "nu", 1.0),
            coupling=_getfloat(p, "coupling", 1.0))
        b = cp["bc"]
        bc = StripBC(
            alpha1=_getfloat(b, "alpha1"), alpha2=_getfloat(b, "alpha2"),
            beta1=_getfloat(b, "beta1"), beta2=_getfloat(b, "beta2"),
            voltage=_getfloat(b, "voltage", 0.0),
            length=_getfloat(b, "length", 1.0))
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    grid = GridSpec()
    if "grid" in cp:
        g = cp["grid"]
        grid = GridSpec(n=_getint(g, "n", 129),
                        kind=g.get("kind", "uniform"),
                        strength=_getfloat(g, "strength", 2.0))
        if grid.n < 3:
            raise ConfigError("[grid] n must be >= 3")

    evolve = {}
    if "evolve" in cp:
        e = cp["evolve"]
        evolve = {
            "nx": _getint(e, "nx", 64), "ny": _getint(e, "ny", 32),
            "dt": _getfloat(e, "dt", 0.01), "t_end": _getfloat(e, "t_end", 1.0),
            "output_every": _getint(e, "output_every", 1),
            "initial": e.get("initial", "linear-ramp"),
            "delta": _getfloat(e, "delta", 0.0),
        }
        for opt in ("initial_lo", "initial_hi"):
            if opt in e:
                evolve[opt] = _getfloat(e, opt)
        if "seed" in e:
            evolve["seed"] = _getint(e, "seed")
        if "initial_file" in e:
            evolve["initial_file"] = e["initial_file"]

    sweep = {}
    if "sweep" in cp:
        for key, raw in cp["sweep"].items():
            try:
                values = [float(tok) for tok in raw.replace(",", " ").split()]
            except ValueError:
                raise ConfigError(f"[sweep] {key}: values must be numbers") from None
            if not values:
                raise ConfigError(f"[sweep] {key}: empty value list")
            sweep[key] = values

    return RunConfig(params=params, bc=bc, grid=grid, evolve=evolve, sweep=sweep)


def apply_overrides(cfg: RunConfig, **fields) -> RunConfig:
    """Return a copy with selected [params]/[bc] values replaced (used by
    sweeps)."""
    pkeys = {k: v for k, v in fields.items() if k in _SCHEMA["params"]}
    bkeys = {k: v for k, v in fields.items() if k in _SCHEMA["bc"]}
    unknown = set(fields) - set(pkeys) - set(bkeys)
    if unknown:
        raise ConfigError(f"cannot sweep over unknown keys {sorted(unknown)}")
    params = cfg.params
    if pkeys:
        d = {k: getattr(params, k) for k in ("d1", "d2", "eps", "nu", "coupling")}
        d.update(pkeys)
        params = PhysParams(**d)
    bc = cfg.bc
    if bkeys:
        d = {k: getattr(bc, k) for k in ("alpha1", "alpha2", "beta1", "beta2",
                                         "voltage", "length")}
        d.update(bkeys)
        bc = StripBC(**d)
    return RunConfig(params=params, bc=bc, grid=cfg.grid, evolve=cfg.evolve,
                     sweep=cfg.sweep)
