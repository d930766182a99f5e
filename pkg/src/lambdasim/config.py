"""Run configuration: an INI file with fixed sections, parsed into dataclasses.

Grammar (every key optional unless noted, unknown sections or keys rejected)::

    [run]          scenario = evolve | sweep | transfer | validate   (required)
                   name, description, desk_scale = true | false
    [system]       omega2, delta_p, delta_c, omega31, omega21
    [losses]       kappa (both modes), kappa1, kappa2, r13, r23, r12, g31, g32, g21
    [electronic]   c1, c2, c3  (Python complex literals, e.g. 0.6 or 0.8j)
    [probe]        kind = vacuum | fock | coherent | squeezed | custom
    [coupling]     mean, phase, n, amplitudes (comma list), cutoff
    [truncation]   k_max, m_max (integer or auto), tail (auto tolerance),
                   max_tail (largest accepted discarded mass)
    [grid]         t_end (required), dt, record_every
    [observables]  probes (comma list), coherence_order = auto | full | integer,
                   snapshots (comma list of times for W_km grids)
    [sweep]        deltas = default | comma list | start:stop:step, window = t0, t1
    [validate]     channels (comma list), tolerance, checkpoints

Frequencies, rates and times are in units of Omega_1, which is fixed to 1.
"""
from __future__ import annotations

import configparser
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evolution import TimeGrid
from .fock_basis import Truncation
from .initial_states import (ConfigurationError, ElectronicSpec, FieldSpec, field_state,
                             suggest_cutoff)
from .master_equation import LossConfig, SystemConfig
from .observables import DEFAULT_PROBES, PROBE_ORDER
from .spectra import default_delta_grid

SCENARIOS = ("evolve", "sweep", "transfer", "validate")
VALIDATION_CHANNELS = ("lossless", "detuned", "cavity", "radiative", "dephasing_matched",
                       "dephasing_halved", "dephasing_literal")

SCHEMA = {
    "run": {"scenario", "name", "description", "desk_scale"},
    "system": {"omega2", "delta_p", "delta_c", "omega31", "omega21"},
    "losses": {"kappa", "kappa1", "kappa2", "r13", "r23", "r12", "g31", "g32", "g21"},
    "electronic": {"c1", "c2", "c3"},
    "probe": {"kind", "mean", "phase", "n", "amplitudes", "cutoff"},
    "coupling": {"kind", "mean", "phase", "n", "amplitudes", "cutoff"},
    "truncation": {"k_max", "m_max", "tail", "max_tail"},
    "grid": {"t_end", "dt", "record_every"},
    "observables": {"probes", "coherence_order", "snapshots"},
    "sweep": {"deltas", "window"},
    "validate": {"channels", "tolerance", "checkpoints"},
}
REQUIRED = {"run": {"scenario"}, "grid": {"t_end"}}


@dataclass(frozen=True)
class SweepSettings:
    deltas: tuple
    window: tuple


@dataclass(frozen=True)
class ValidateSettings:
    channels: tuple = ("lossless", "detuned", "cavity", "radiative", "dephasing_matched")
    tolerance: float = 1e-6
    checkpoints: int = 10


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    name: str
    description: str
    desk_scale: bool
    system: SystemConfig
    losses: LossConfig
    electronic: ElectronicSpec
    probe: FieldSpec
    coupling: FieldSpec
    truncation: Truncation
    grid: TimeGrid
    probes: tuple
    coherence_order: object
    snapshots: tuple
    sweep: SweepSettings | None = None
    validate: ValidateSettings | None = None
    tail_mass: tuple = field(default=(0.0, 0.0))

    def echo(self) -> dict:
        """Plain-data view of the resolved configuration for the manifest."""
        out = {}
        for key in ("scenario", "name", "description", "desk_scale", "probes",
                    "coherence_order", "snapshots", "tail_mass"):
            out[key] = getattr(self, key)
        for key in ("system", "losses", "probe", "coupling", "truncation", "grid"):
            out[key] = asdict(getattr(self, key))
        out["electronic"] = [str(complex(c)) for c in self.electronic.amplitudes]
        out["probe"]["amplitudes"] = [str(complex(c)) for c in self.probe.amplitudes]
        out["coupling"]["amplitudes"] = [str(complex(c)) for c in self.coupling.amplitudes]
        if self.sweep is not None:
            out["sweep"] = {"deltas": list(self.sweep.deltas), "window": list(self.sweep.window)}
        if self.validate is not None:
            out["validate"] = asdict(self.validate)
            out["validate"]["channels"] = list(self.validate.channels)
        out["probes"] = list(out["probes"])
        out["snapshots"] = list(out["snapshots"])
        out["tail_mass"] = list(out["tail_mass"])
        return out


def _float(section: dict, key: str, default: float) -> float:
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigurationError(f"{key} = {section[key]!r} is not a number") from None


def _int(section: dict, key: str, default):
    if key not in section:
        return default
    try:
        return int(section[key])
    except ValueError:
        raise ConfigurationError(f"{key} = {section[key]!r} is not an integer") from None


def _bool(value: str) -> bool:
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{value!r} is not a boolean")


def _list(value: str) -> list:
    return [item.strip() for item in str(value).split(",") if item.strip()]


def _complex(value: str) -> complex:
    try:
        return complex(str(value).replace(" ", ""))
    except ValueError:
        raise ConfigurationError(f"{value!r} is not a complex number") from None


def _field(section: dict, name: str) -> FieldSpec:
    kind = section.get("kind", "vacuum")
    cutoff = _int(section, "cutoff", None)
    if kind == "custom":
        if "amplitudes" not in section:
            raise ConfigurationError(f"[{name}] custom field needs amplitudes")
        spec = FieldSpec.custom([_complex(a) for a in _list(section["amplitudes"])])
    else:
        spec = FieldSpec(kind, mean=_float(section, "mean", 0.0), phase=_float(section, "phase", 0.0),
                         n=_int(section, "n", 0))
    if cutoff is not None:
        spec = FieldSpec(spec.kind, spec.mean, spec.phase, spec.n, spec.amplitudes, cutoff)
    return spec


def _cutoff(value, spec: FieldSpec, tail: float, name: str) -> int:
    if value is None or str(value).strip() == "auto":
        return suggest_cutoff(spec, tail)
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{name} = {value!r} is neither an integer nor 'auto'") from None


def _deltas(value: str) -> tuple:
    """'default', or a comma list whose items are numbers or start:stop:step ranges."""
    value = str(value).strip()
    if value == "default":
        return tuple(float(d) for d in default_delta_grid())
    out = []
    for item in _list(value):
        if ":" in item:
            try:
                parts = [float(x) for x in item.split(":")]
            except ValueError:
                raise ConfigurationError(f"bad detuning range {item!r}") from None
            if len(parts) != 3 or parts[2] <= 0:
                raise ConfigurationError(f"range {item!r} must be start:stop:step with step > 0")
            n = int(round((parts[1] - parts[0]) / parts[2]))
            out += [float(x) for x in np.round(parts[0] + parts[2] * np.arange(n + 1), 12)]
        else:
            out.append(float(item))
    if len(set(out)) != len(out):
        raise ConfigurationError("duplicate detunings in sweep list")
    return tuple(out)


def check_schema(sections: dict) -> None:
    for name, body in sections.items():
        if name not in SCHEMA:
            raise ConfigurationError(f"unknown section [{name}]")
        unknown = set(body) - SCHEMA[name]
        if unknown:
            raise ConfigurationError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    for name, keys in REQUIRED.items():
        missing = keys - set(sections.get(name, {}))
        if missing:
            raise ConfigurationError(f"missing keys in [{name}]: {', '.join(sorted(missing))}")


def from_sections(sections: dict) -> RunConfig:
    """Validate and resolve a mapping of section name -> {key: value}."""
    sections = {name: {k: str(v) for k, v in body.items()} for name, body in sections.items()}
    check_schema(sections)
    get = lambda name: sections.get(name, {})
    run = get("run")
    scenario = run["scenario"].strip()
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")

    try:
        s = get("system")
        system = SystemConfig(1.0, _float(s, "omega2", 1.0), _float(s, "delta_p", 0.0),
                              _float(s, "delta_c", 0.0), _float(s, "omega31", 100.0),
                              _float(s, "omega21", 0.0))
        lo = get("losses")
        if "kappa" in lo and ("kappa1" in lo or "kappa2" in lo):
            raise ConfigurationError("give either kappa or kappa1/kappa2, not both")
        kappa = _float(lo, "kappa", 0.0)
        losses = LossConfig(_float(lo, "kappa1", kappa), _float(lo, "kappa2", kappa),
                            *(_float(lo, k, 0.0) for k in ("r13", "r23", "r12", "g31", "g32", "g21")))
        e = get("electronic")
        electronic = ElectronicSpec(*(_complex(e.get(k, d)) for k, d in
                                      (("c1", "1"), ("c2", "0"), ("c3", "0"))))
        probe = _field(get("probe"), "probe")
        coupling = _field(get("coupling"), "coupling")

        tr = get("truncation")
        tail = _float(tr, "tail", 1e-4)
        max_tail = _float(tr, "max_tail", 1e-2)
        k_max = _cutoff(tr.get("k_max"), probe, tail, "k_max")
        m_max = _cutoff(tr.get("m_max"), coupling, tail, "m_max")
        truncation = Truncation(k_max, m_max)
        masses = []
        for spec, limit, name in ((probe, k_max, "probe"), (coupling, m_max, "coupling")):
            cut = spec.cutoff if spec.cutoff is not None else limit
            if cut > limit:
                raise ConfigurationError(f"{name} cutoff {cut} exceeds truncation {limit}")
            if spec.kind == "custom" and len(spec.amplitudes) - 1 > cut and \
                    np.any(np.asarray(spec.amplitudes)[cut + 1:] != 0):
                raise ConfigurationError(f"{name} amplitudes extend beyond the truncation {cut}")
            with warnings.catch_warnings():
                # the discarded mass is recorded in the config instead
                warnings.simplefilter("ignore")
                mass = field_state(spec, cut).tail_mass if spec.kind in ("coherent", "squeezed") else 0.0
            if mass > max_tail:
                raise ConfigurationError(
                    f"truncation {cut} too small for the {name} field (mean {spec.photon_mean}): "
                    f"discarded mass {mass:.3g} > max_tail {max_tail}")
            masses.append(mass)

        g = get("grid")
        grid = TimeGrid(_float(g, "t_end", 0.0), _float(g, "dt", 0.01),
                        _int(g, "record_every", 1))

        ob = get("observables")
        probes = tuple(_list(ob["probes"])) if "probes" in ob else DEFAULT_PROBES
        unknown = set(probes) - set(PROBE_ORDER)
        if unknown:
            raise ConfigurationError(f"unknown observables: {', '.join(sorted(unknown))}")
        order = ob.get("coherence_order", "auto").strip()
        if order not in ("auto", "full"):
            order = _int(ob, "coherence_order", 0)
            if order < 0:
                raise ConfigurationError("coherence_order must be >= 0")
        snapshots = tuple(float(x) for x in _list(ob.get("snapshots", "")))
        for ts in snapshots:
            if not 0 <= ts <= grid.t_end:
                raise ConfigurationError(f"snapshot time {ts} outside [0, {grid.t_end}]")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None

    sweep = validate = None
    if scenario == "sweep":
        sw = get("sweep")
        deltas = _deltas(sw.get("deltas", "default"))
        window = tuple(float(x) for x in _list(sw.get("window", f"0, {grid.t_end}")))
        if len(window) != 2 or not 0 <= window[0] < window[1] <= grid.t_end:
            raise ConfigurationError(f"averaging window {window} outside [0, {grid.t_end}]")
        if not deltas:
            raise ConfigurationError("sweep needs at least one detuning")
        sweep = SweepSettings(deltas, window)
    elif "sweep" in sections:
        raise ConfigurationError("[sweep] only applies to the sweep scenario")
    if scenario == "validate":
        va = get("validate")
        channels = tuple(_list(va["channels"])) if "channels" in va else ValidateSettings.channels
        bad = set(channels) - set(VALIDATION_CHANNELS)
        if bad:
            raise ConfigurationError(f"unknown validation channels: {', '.join(sorted(bad))}")
        validate = ValidateSettings(channels, _float(va, "tolerance", 1e-6),
                                    _int(va, "checkpoints", 10))
        if truncation.dim > 48:
            raise ConfigurationError(f"validation needs dimension <= 48, got {truncation.dim}")
    elif "validate" in sections:
        raise ConfigurationError("[validate] only applies to the validate scenario")

    return RunConfig(scenario, run.get("name", "run"), run.get("description", ""),
                     _bool(run.get("desk_scale", "false")), system, losses, electronic,
                     probe, coupling, truncation, grid, probes, order, snapshots,
                     sweep, validate, tuple(masses))


def read_sections_text(text: str, source: str = "<string>") -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {source}: {exc}") from None
    return {name: dict(parser[name]) for name in parser.sections()}


def read_sections(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} not found")
    return read_sections_text(path.read_text(), str(path))


def load(path) -> RunConfig:
    return from_sections(read_sections(path))


def to_ini(sections: dict) -> str:
    lines = []
    for name, body in sections.items():
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in body.items()]
        lines.append("")
    return "\n".join(lines)
