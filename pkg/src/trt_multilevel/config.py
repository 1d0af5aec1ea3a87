"""Run configuration and its INI-style file format.

Sections and keys::

    [problem]   length, T_initial, left_boundary, right_boundary, T_left,
                T_right, cv_coefficient, cv_temperature, opacity,
                opacity_value, speed_of_light, radiation_constant
    [grids]     cells, groups, hnu_a, hnu_b, hnu_max, quadrature_half,
                dt, t_end
    [iteration] epsilon, epsilon_cycle, lmax, max_outer, clip_negative,
                oracle_tolerance, oracle_max_iterations
    [output]    directory, snapshot_times, spectrum, residuals

Defaults reproduce the Fleck-Cummings test.  Unknown sections or keys are
rejected.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field

from .physics import A_RAD, C_LIGHT
from .transport import BOUNDARY_KINDS, PRESCRIBED

OPACITY_MODELS = ("fleck_cummings", "constant")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # problem
    length: float = 4.0
    T_initial: float = 1e-3
    left_boundary: str = PRESCRIBED
    right_boundary: str = "vacuum"
    T_left: float = 1.0
    T_right: float = 1.0
    cv_coefficient: float = 0.5917
    cv_temperature: float = 1.0
    opacity: str = "fleck_cummings"
    opacity_value: float = 1.0
    speed_of_light: float = C_LIGHT
    radiation_constant: float = A_RAD
    # grids
    cells: int = 10
    groups: int = 256
    hnu_a: float = 1e-4
    hnu_b: float = 10.0
    hnu_max: float = 1e7
    quadrature_half: int = 8
    dt: float = 2e-3
    t_end: float = 0.3
    # iteration
    epsilon: float = 1e-6
    epsilon_cycle: float = 1e-7
    lmax: int = 4
    max_outer: int = 500
    clip_negative: bool = False
    oracle_tolerance: float = 1e-8
    oracle_max_iterations: int = 20000
    # output
    directory: str = "output"
    snapshot_times: tuple = field(default_factory=tuple)
    spectrum: bool = False
    residuals: bool = False

    def validate(self):
        positive = [
            "length", "T_initial", "cv_coefficient", "cv_temperature", "speed_of_light",
            "radiation_constant", "hnu_a", "hnu_b", "hnu_max", "dt", "epsilon",
            "epsilon_cycle", "oracle_tolerance",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if not self.epsilon > self.epsilon_cycle:
            raise ConfigError("need epsilon > epsilon_cycle > 0")
        for name in ("cells", "quadrature_half", "lmax", "max_outer", "oracle_max_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.groups < 3:
            raise ConfigError("groups must be at least 3")
        if not self.hnu_a < self.hnu_b < self.hnu_max:
            raise ConfigError("need hnu_a < hnu_b < hnu_max")
        for side in ("left_boundary", "right_boundary"):
            if getattr(self, side) not in BOUNDARY_KINDS:
                raise ConfigError(f"{side} must be one of {BOUNDARY_KINDS}")
        if self.left_boundary == PRESCRIBED and not self.T_left > 0:
            raise ConfigError("T_left must be positive")
        if self.right_boundary == PRESCRIBED and not self.T_right > 0:
            raise ConfigError("T_right must be positive")
        if self.opacity not in OPACITY_MODELS:
            raise ConfigError(f"opacity must be one of {OPACITY_MODELS}")
        if self.opacity == "constant" and not self.opacity_value > 0:
            raise ConfigError("opacity_value must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ConfigError(f"dt={self.dt} does not divide t_end={self.t_end}")
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes).validate()


SECTIONS = {
    "problem": [
        "length", "T_initial", "left_boundary", "right_boundary", "T_left", "T_right",
        "cv_coefficient", "cv_temperature", "opacity", "opacity_value",
        "speed_of_light", "radiation_constant",
    ],
    "grids": ["cells", "groups", "hnu_a", "hnu_b", "hnu_max", "quadrature_half", "dt", "t_end"],
    "iteration": [
        "epsilon", "epsilon_cycle", "lmax", "max_outer", "clip_negative",
        "oracle_tolerance", "oracle_max_iterations",
    ],
    "output": ["directory", "snapshot_times", "spectrum", "residuals"],
}

_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _convert(name, raw):
    kind = _TYPES[name]
    try:
        if kind in (float, "float"):
            return float(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (bool, "bool"):
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind in (tuple, "tuple"):
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text):
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _convert(key, raw)
    return RunConfig(**values).validate()


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def dump_config(cfg):
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            val = getattr(cfg, key)
            if isinstance(val, tuple):
                val = ", ".join(repr(v) for v in val)
            elif isinstance(val, bool):
                val = str(val).lower()
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
