"""Run configuration and its INI-style text format.

Schema (every key optional unless noted; defaults shown)::

    [run]
    name = run
    geometry = interval          ; interval | radial
    n_dim = 3                    ; radial only
    tau = 1.0                    ; interval only, radial fixes tau = 1
    n_cells = 128
    q = 3.0                      ; moment exponent on the interval, > 2
    diag_cadence = 10            ; steps between diagnostic samples
    lambda_exponent = printed    ; printed | derived
    vt_power = 0.5               ; exponent on ||v_t|| in the radial bound

    [diffusion]
    family = constant            ; constant | integrable_power | critical_power
    c = 1.0
    p = 2.0
    n = 3

    [time]
    dt_init = 1e-4
    dt_min = 1e-12
    dt_max = 1e-2
    cfl_safety = 0.9
    t_end = 1.0
    u_blowup_threshold =         ; empty: min(1e6 * mean, capacity_fraction * grid capacity)
    capacity_fraction = 0.5
    max_steps = 10000000

    [init]
    u0 = bump                    ; bump | constant | perturbed | radial_concentrated | radial_plateau
    mass = 1.0                   ; interval: total mass m; radial: mean density M
    width = 0.25                 ; bump width / plateau radius
    profile = plateau            ; plateau | smooth
    placement = right            ; left | right | center
    target_m2_ratio = 1e-3       ; radial_concentrated: M_2(0) / M_2(constant state)
    amplitude = 0.1              ; perturbed
    mode = 1                     ; perturbed
    v0 = admissible              ; admissible | constant | match | quasi_steady | zero
    v0_excess = 0.5              ; admissible: fraction of the (v_0) window
    v0_value = 1.0               ; constant

    [majorant]
    r_max = 1e4
    samples = 400

Radial runs default to ``u0 = radial_concentrated`` and ``v0 = quasi_steady``.
A document without any section header is read as flat ``key = value``
pairs; ``m``/``M`` are accepted for ``mass`` and ``a`` for ``family``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .grid import TimeControls
from .kinetics import DiffusionSpec, Family, KineticsError


class ConfigError(ValueError):
    pass


_SCHEMA: dict[str, dict[str, type]] = {
    "run": {"name": str, "geometry": str, "n_dim": int, "tau": float, "n_cells": int,
            "q": float, "diag_cadence": int, "lambda_exponent": str, "vt_power": float},
    "diffusion": {"family": str, "c": float, "p": float, "n": int},
    "time": {"dt_init": float, "dt_min": float, "dt_max": float, "cfl_safety": float,
             "t_end": float, "u_blowup_threshold": float, "capacity_fraction": float,
             "max_steps": int},
    "init": {"u0": str, "mass": float, "width": float, "profile": str, "placement": str,
             "target_m2_ratio": float, "amplitude": float, "mode": int, "v0": str,
             "v0_excess": float, "v0_value": float},
    "majorant": {"r_max": float, "samples": int},
}
_ALIASES = {"m": "mass", "M": "mass", "a": "family"}
_KEY_SECTION = {k: s for s, keys in _SCHEMA.items() for k in keys}


@dataclass(frozen=True)
class InitRecipe:
    u0: str = "bump"
    mass: float = 1.0
    width: float = 0.25
    profile: str = "plateau"
    placement: str = "right"
    target_m2_ratio: float = 1e-3
    amplitude: float = 0.1
    mode: int = 1
    v0: str = "admissible"
    v0_excess: float = 0.5
    v0_value: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    geometry: str = "interval"
    n_dim: int = 1
    tau: float = 1.0
    spec: DiffusionSpec = field(default_factory=DiffusionSpec.constant)
    n_cells: int = 128
    controls: TimeControls = field(default_factory=TimeControls)
    init: InitRecipe = field(default_factory=InitRecipe)
    q: float = 3.0
    diag_cadence: int = 10
    r_max: float = 1e4
    majorant_samples: int = 400
    lambda_exponent: str = "printed"
    vt_power: float = 0.5
    name: str = "run"

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["spec"] = self.spec.describe()
        return d

    def with_(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def validate(cfg: RunConfig) -> None:
    if cfg.geometry not in ("interval", "radial"):
        raise ConfigError(f"geometry must be interval or radial, got {cfg.geometry!r}")
    if cfg.geometry == "radial":
        if cfg.n_dim < 3:
            raise ConfigError("radial geometry needs n_dim >= 3")
        if cfg.tau != 1.0:
            raise ConfigError("the radial system has tau = 1")
        if cfg.spec.family is Family.INTEGRABLE_POWER:
            raise ConfigError("integrable_power diffusion belongs to the interval problem")
        if cfg.spec.family is Family.CRITICAL_POWER and cfg.spec.n != cfg.n_dim:
            raise ConfigError(f"critical_power n={cfg.spec.n} needs radial n_dim={cfg.spec.n}")
        if cfg.init.u0 in ("bump", "perturbed_1d"):
            raise ConfigError(f"u0 = {cfg.init.u0} is interval data")
    else:
        if cfg.n_dim != 1:
            raise ConfigError("interval geometry has n_dim = 1")
        if cfg.spec.family is Family.CRITICAL_POWER:
            raise ConfigError(
                f"critical_power n={cfg.spec.n} requires geometry = radial with n_dim = {cfg.spec.n}")
        if cfg.init.u0.startswith("radial"):
            raise ConfigError(f"u0 = {cfg.init.u0} is radial data")
        if not cfg.tau > 0:
            raise ConfigError("tau must be positive")
    if not cfg.q > 2:
        raise ConfigError("q must exceed 2")
    if cfg.n_cells < 4:
        raise ConfigError("n_cells must be at least 4")
    if cfg.diag_cadence < 1:
        raise ConfigError("diag_cadence must be >= 1")
    if cfg.lambda_exponent not in ("printed", "derived"):
        raise ConfigError("lambda_exponent must be printed or derived")
    if cfg.init.u0 not in ("bump", "constant", "perturbed", "radial_concentrated", "radial_plateau"):
        raise ConfigError(f"unknown u0 recipe {cfg.init.u0!r}")
    if cfg.init.v0 not in ("admissible", "constant", "match", "quasi_steady", "zero"):
        raise ConfigError(f"unknown v0 recipe {cfg.init.v0!r}")
    if cfg.init.profile not in ("plateau", "smooth"):
        raise ConfigError(f"unknown profile {cfg.init.profile!r}")
    if cfg.init.placement not in ("left", "right", "center"):
        raise ConfigError(f"unknown placement {cfg.init.placement!r}")
    if not cfg.init.width > 0:
        raise ConfigError("width must be positive")
    if cfg.vt_power <= 0:
        raise ConfigError("vt_power must be positive")
    if not cfg.init.mass > 0:
        raise ConfigError("mass must be positive")


def _read_sections(text: str) -> dict[str, dict[str, str]]:
    flat = not any(line.strip().startswith("[") for line in text.splitlines())
    parser = configparser.ConfigParser(strict=True, interpolation=None,
                                       inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep case, so M and m are both accepted aliases
    try:
        parser.read_string("[__flat__]\n" + text if flat else text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in section [{exc.section}]") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    out: dict[str, dict[str, str]] = {s: {} for s in _SCHEMA}
    unknown = []
    for sec in parser.sections():
        for key, val in parser.items(sec):
            key = _ALIASES.get(key, key)
            target = _KEY_SECTION.get(key)
            if sec == "__flat__":
                if target is None:
                    unknown.append(key)
                    continue
            elif sec not in _SCHEMA:
                unknown.append(f"[{sec}]")
                break
            elif key not in _SCHEMA[sec]:
                unknown.append(f"{sec}.{key}")
                continue
            else:
                target = sec
            if key in out[target]:
                raise ConfigError(f"duplicate key {key!r}")
            out[target][key] = val
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))
    return out


def _convert(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    raw = raw.strip()
    if kind is str:
        return raw
    try:
        return kind(float(raw)) if kind is int else float(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot read {raw!r} as {kind.__name__}") from exc


def parse_config(text: str) -> RunConfig:
    raw = _read_sections(text)
    vals = {s: {k: _convert(s, k, v) for k, v in kv.items() if v.strip() != ""}
            for s, kv in raw.items()}
    run, dif, tim, ini, maj = (vals[s] for s in ("run", "diffusion", "time", "init", "majorant"))

    geometry = run.get("geometry", "interval")
    if geometry in ("interval1d", "1d"):
        geometry = "interval"
    if geometry in ("ball", "radialball"):
        geometry = "radial"
    n_dim = run.get("n_dim", dif.get("n", 3) if geometry == "radial" else 1)
    if geometry == "interval" and "n_dim" not in run:
        n_dim = 1

    family = dif.get("family", "constant")
    try:
        if family == "constant":
            spec = DiffusionSpec.constant(dif.get("c", 1.0))
        elif family == "integrable_power":
            spec = DiffusionSpec.integrable_power(dif.get("p", 2.0))
        elif family == "critical_power":
            spec = DiffusionSpec.critical_power(dif.get("n", n_dim if geometry == "radial" else 3))
        else:
            raise ConfigError(f"unknown diffusion family {family!r}")
    except KineticsError as exc:
        raise ConfigError(str(exc)) from exc

    try:
        controls = TimeControls(**tim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"time controls: {exc}") from exc

    init_defaults = {}
    if geometry == "radial":
        init_defaults = {"u0": "radial_concentrated", "v0": "quasi_steady"}
    init = InitRecipe(**{**init_defaults, **ini})

    kwargs = dict(geometry=geometry, n_dim=int(n_dim), spec=spec, controls=controls, init=init)
    for key in ("tau", "n_cells", "q", "diag_cadence", "lambda_exponent", "vt_power", "name"):
        if key in run:
            kwargs[key] = run[key]
    if "r_max" in maj:
        kwargs["r_max"] = maj["r_max"]
    if "samples" in maj:
        kwargs["majorant_samples"] = maj["samples"]
    return RunConfig(**kwargs)


def dump_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips every field)."""
    spec = cfg.spec
    lines = ["[run]", f"name = {cfg.name}", f"geometry = {cfg.geometry}"]
    if cfg.geometry == "radial":
        lines.append(f"n_dim = {cfg.n_dim}")
    lines += [f"tau = {cfg.tau!r}", f"n_cells = {cfg.n_cells}", f"q = {cfg.q!r}",
              f"diag_cadence = {cfg.diag_cadence}", f"lambda_exponent = {cfg.lambda_exponent}",
              f"vt_power = {cfg.vt_power!r}", "", "[diffusion]", f"family = {spec.family.value}"]
    lines += [f"{k} = {v!r}" for k, v in spec.describe().items() if k != "family"]
    lines += ["", "[time]"]
    for f in dataclasses.fields(cfg.controls):
        val = getattr(cfg.controls, f.name)
        lines.append(f"{f.name} = {'' if val is None else repr(val)}")
    lines += ["", "[init]"]
    lines += [f"{f.name} = {getattr(cfg.init, f.name)}" if isinstance(getattr(cfg.init, f.name), str)
              else f"{f.name} = {getattr(cfg.init, f.name)!r}" for f in dataclasses.fields(cfg.init)]
    lines += ["", "[majorant]", f"r_max = {cfg.r_max!r}", f"samples = {cfg.majorant_samples}", ""]
    return "\n".join(lines)
