"""Scenario configuration: INI file, environment overrides and CLI flags.

Every key lives in one section of the file.  Precedence is
defaults < file < environment (``SGSPIN_<KEY>``) < command-line flag.
Unknown sections or keys are rejected before anything runs.
"""
import configparser
from dataclasses import dataclass, field, fields
import math
import os
import re

from .detector import MODELS, SWEEP_THETAS
from .errors import ConfigError
from .units import PhysParams, UNIT_SYSTEMS

ENV_PREFIX = "SGSPIN_"
_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0),
         "-x": (-1.0, 0.0, 0.0), "-y": (0.0, -1.0, 0.0), "-z": (0.0, 0.0, -1.0)}


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float(text):
    t = str(text).strip().lower()
    # allow simple multiples of pi such as "pi/2" or "2*pi/3"
    m = re.fullmatch(r"(?:([0-9.eE+-]+)\s*\*?\s*)?pi(?:\s*/\s*([0-9.eE+-]+))?", t)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    v = float(t)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {text!r}")
    return v


def _opt_float(text):
    t = str(text).strip().lower()
    return None if t in ("", "none", "auto") else _float(t)


def _floats(text):
    t = str(text).strip()
    if not t:
        return ()
    return tuple(_float(v) for v in re.split(r"[,\s]+", t) if v)


def _dims(text):
    vals = tuple(int(v) for v in re.split(r"[,\sx]+", str(text).strip()) if v)
    if len(vals) == 1:
        vals = vals * 3
    if len(vals) != 3 or min(vals) < 1:
        raise ValueError(f"dims must be one or three positive integers, got {text!r}")
    return vals


def _models(text):
    names = tuple(v for v in re.split(r"[,\s]+", str(text).strip()) if v)
    for n in names:
        if n not in MODELS and n != "all":
            raise ValueError(f"unknown model {n!r}; choose from {', '.join(MODELS)} or all")
    if "all" in names:
        return MODELS
    return names


def _axis(text):
    t = str(text).strip().lower()
    if t in ("", "none"):
        return None
    if t in _AXES:
        return _AXES[t]
    vals = tuple(float(v) for v in re.split(r"[,\s]+", t) if v)
    if len(vals) != 3 or not any(vals):
        raise ValueError(f"spin axis must be x, y, z or three numbers, got {text!r}")
    return vals


def _method(text):
    t = str(text).strip().lower()
    if t not in ("analytic", "spectral"):
        raise ValueError("method must be analytic or spectral")
    return t


def _unit_system(text):
    t = str(text).strip()
    if t not in UNIT_SYSTEMS:
        raise ValueError(f"unit system must be one of {UNIT_SYSTEMS}")
    return t


# key -> (section, parser, help)
SCHEMA = {
    "model": ("run", _models, "model(s) to run: " + ", ".join(MODELS) + " or all"),
    "output_dir": ("run", str, "directory for summaries, CSVs and grid dumps"),
    "flight_time": ("run", _opt_float, "screen flight time in units of m d^2/hbar (auto if empty)"),
    "separation_time": ("run", _opt_float, "lump read-out time in units of m d^2/hbar (auto if empty)"),
    "method": ("run", _method, "free evolution for field models: analytic or spectral"),
    "check_force": ("run", _bool, "compare forces against mu eta zhat"),
    "dump_grids": ("run", _bool, "write binary grid dumps of densities"),
    "hbar": ("params", _float, "reduced Planck constant"),
    "mass": ("params", _float, "electron mass"),
    "charge_e": ("params", _float, "elementary charge magnitude"),
    "c": ("params", _float, "speed of light"),
    "B0": ("params", _float, "uniform field strength"),
    "eta": ("params", _float, "field gradient"),
    "dt_field": ("params", _float, "time spent in the field"),
    "d": ("params", _float, "packet width"),
    "R": ("params", _float, "sphere radius"),
    "unit_system": ("params", _unit_system, "hartree-atomic or gaussian-cgs-raw"),
    "dims": ("grid", _dims, "grid nodes per axis (one or three integers)"),
    "halfwidth": ("grid", _floats, "field-model box halfwidth in units of d (one or three numbers)"),
    "quadrature_dims": ("grid", _dims, "nodes per axis for the rigid-sphere quadratures (box 1.5 R)"),
    "spin_theta": ("spin", _float, "polar angle of the prepared spin (radians, 'pi/2' accepted)"),
    "spin_phi": ("spin", _float, "azimuth of the prepared spin"),
    "spin_axis": ("spin", _axis, "spin axis (x, y, z or three numbers); overrides the angles"),
    "include_sigma_x": ("toggles", _bool, "keep the sigma_x term in the in-field kick"),
    "consistency_c_fix": ("toggles", _bool, "point-particle dipole force with k = 1 (False: k = 1/c)"),
    "sweep_thetas": ("sweep", _floats, "polar angles for the sweep subcommand (default k pi/6, k = 0..6; empty for none)"),
}
SECTIONS = tuple(dict.fromkeys(s for s, _, _ in SCHEMA.values()))
_PARAM_KEYS = ("hbar", "mass", "charge_e", "c", "B0", "eta", "dt_field", "d", "R", "unit_system")


@dataclass
class ScenarioConfig:
    model: tuple = ("rigid_sphere",)
    output_dir: str = "sgspin-out"
    flight_time: float = None
    separation_time: float = None
    method: str = "analytic"
    check_force: bool = False
    dump_grids: bool = False
    hbar: float = PhysParams.hbar
    mass: float = PhysParams.mass
    charge_e: float = PhysParams.charge_e
    c: float = PhysParams.c
    B0: float = PhysParams.B0
    eta: float = PhysParams.eta
    dt_field: float = PhysParams.dt_field
    d: float = PhysParams.d
    R: float = PhysParams.R
    unit_system: str = PhysParams.unit_system
    dims: tuple = (64, 64, 64)
    halfwidth: tuple = (6.0,)
    quadrature_dims: tuple = (256, 256, 256)
    spin_theta: float = 0.0
    spin_phi: float = 0.0
    spin_axis: tuple = None
    include_sigma_x: bool = False
    consistency_c_fix: bool = True
    sweep_thetas: tuple = SWEEP_THETAS
    sources: dict = field(default_factory=dict, compare=False, repr=False)

    def params(self):
        try:
            p = PhysParams(**{k: getattr(self, k) for k in _PARAM_KEYS})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return p.to_atomic()

    def spin_angles(self):
        """(theta, phi) of the prepared spin, from the axis when one is given."""
        if self.spin_axis is None:
            return float(self.spin_theta), float(self.spin_phi)
        x, y, z = self.spin_axis
        r = math.sqrt(x * x + y * y + z * z)
        return math.acos(max(-1.0, min(1.0, z / r))), math.atan2(y, x)

    def spin_vector(self):
        th, ph = self.spin_angles()
        return (math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th))

    def box_halfwidth(self):
        hw = tuple(self.halfwidth) or (6.0,)
        if len(hw) == 1:
            hw = hw * 3
        if len(hw) != 3 or min(hw) <= 0:
            raise ConfigError("halfwidth must be one or three positive numbers", "halfwidth")
        return tuple(h * self.params().d for h in hw)

    def as_dict(self):
        out = {}
        for f in fields(self):
            if f.name == "sources":
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _apply(cfg, key, raw, origin, line=None):
    if key not in SCHEMA:
        raise ConfigError(f"unknown key (from {origin})", key, line)
    _, parse, _ = SCHEMA[key]
    try:
        value = parse(raw) if not isinstance(raw, bool) else raw
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{exc} (from {origin})", key, line) from None
    setattr(cfg, key, value)
    cfg.sources[key] = origin


def _line_numbers(text):
    """Map (section, key) -> line number by a light scan of the file."""
    where, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m:
            where.setdefault((section, m.group(1).strip()), i)
    return where


def parse_config_text(text, cfg=None, origin="config"):
    cfg = cfg or ScenarioConfig()
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keep B0, R as written
    lines = _line_numbers(text)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed configuration: {exc.message if hasattr(exc, 'message') else exc}",
                          line=line) from None
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((section, None)))
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in SCHEMA:
                raise ConfigError(f"unknown key in [{section}]", key, line)
            if SCHEMA[key][0] != section:
                raise ConfigError(f"key belongs in [{SCHEMA[key][0]}], not [{section}]", key, line)
            _apply(cfg, key, raw, origin, line)
    return cfg


def load_config(path=None, env=None, overrides=None):
    """Build a config from file, environment and explicit overrides."""
    cfg = ScenarioConfig()
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        parse_config_text(text, cfg, origin=str(path))
    env = os.environ if env is None else env
    for name, raw in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        key = _env_key(name[len(ENV_PREFIX):])
        if key is None:
            continue  # SGSPIN_DISABLE_NUMBA and friends are not scenario keys
        _apply(cfg, key, raw, f"environment {name}")
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        _apply(cfg, key, raw, "command line")
    cfg.params()  # validate physics early
    return cfg


_RESERVED_ENV = {"DISABLE_NUMBA"}


def _env_key(suffix):
    if suffix in _RESERVED_ENV:
        return None
    for key in SCHEMA:
        if key.upper() == suffix:
            return key
    raise ConfigError(f"unknown environment override {ENV_PREFIX}{suffix}", suffix.lower())


def flag_name(key):
    return "--" + key.replace("_", "-").lower()


def add_config_flags(parser, keys=None):
    """Add ``--kebab-case`` flags for config keys to an argparse parser.

    Values stay as strings here; they are parsed with the same rules as the
    file when merged.
    """
    for key in keys or SCHEMA:
        _, parse, help_text = SCHEMA[key]
        kw = dict(dest=f"cfg_{key}", default=None, help=help_text)
        if parse is _bool:
            kw.update(nargs="?", const="true", metavar="BOOL")
        parser.add_argument(flag_name(key), **kw)


def overrides_from_args(args):
    return {k[len("cfg_"):]: v for k, v in vars(args).items()
            if k.startswith("cfg_") and v is not None}


def write_example(path):
    """Write a commented config file listing every key with its default."""
    cfg = ScenarioConfig()
    lines = ["# sgspin scenario configuration", ""]
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for key, (sec, _, help_text) in SCHEMA.items():
            if sec != section:
                continue
            v = getattr(cfg, key)
            if isinstance(v, tuple):
                v = ", ".join(str(x) for x in v)
            elif v is None:
                v = ""
            lines.append(f"# {help_text}")
            lines.append(f"{key} = {v}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
