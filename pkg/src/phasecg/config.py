"""Line-oriented run configuration: ``[section]`` headers, ``key = value`` lines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .grid import ConfigurationError, GridSpec


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(_float(t) for t in text.split(","))


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("pi", "+pi"):
        return math.pi
    if "pi" in t:
        # forms like pi/8, 3pi/8, 3*pi/8
        num, _, den = t.partition("/")
        num = num.replace("*", "").replace("pi", "") or "1"
        return float(num) * math.pi / (float(den) if den else 1.0)
    return float(t)


def _strings(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _int(text: str) -> int:
    if not text.strip().lstrip("-").isdigit():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(text)


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


# section -> key -> (parser, default); default None means "derived" or "unset"
SCHEMA = {
    "grid": {
        "n_z": (_int, 256),
        "n_p": (_int, None),
        "length_z": (_float, 40.0),
        "z_min": (_float, None),
    },
    "potential": {
        "kind": (_choice("free", "harmonic", "quartic", "tabulated"), "harmonic"),
        "a": (_float, 0.0),
        "b": (_float, 0.0),
        "c": (_float, 1.0),
        "lam": (_float, 0.0),
        "mass": (_float, 1.0),
        "values_file": (str, ""),
    },
    "initial": {
        "kind": (_choice("gaussian", "eigenstate", "quantum-file", "classical-file",
                         "random", "gaussian-sweep"), "gaussian"),
        "x_mean": (_float, 0.0),
        "p_mean": (_float, 0.0),
        "delta_x": (_float, 0.5),
        "delta_p": (_float, 0.5),
        "n": (_int, 0),
        "omega": (_float, 1.0),
        "embed": (_choice("pure", "mixed"), "pure"),
        "file": (str, ""),
        "seed": (_int, 0),
        "products": (_floats, (0.0625, 0.125, 0.25, 0.5, 1.0)),
    },
    "evolution": {
        "law": (_choice("h_w", "liouville"), "h_w"),
        "dt": (_float, 1e-3),
        "n_steps": (_int, 100),
        "sample_every": (_int, 10),
    },
    "observables": {
        "moments": (_strings, ("z", "p", "z^2", "p^2", "z*p")),
        "classical": (_bool, True),
        "quantum": (_bool, True),
        "statistical": (_bool, True),
        "energy": (_bool, True),
        "marginals": (_bool, True),
        "sharpened_beta": (_floats, ()),
    },
    "diagnostics": {
        "purity": (_bool, True),
        "coupling": (_bool, False),
        "locality": (_bool, False),
    },
    "output": {
        "directory": (str, "out"),
        "snapshots": (_bool, False),
        "figures": (_bool, True),
    },
}

REQUIRED_SECTIONS = ("grid",)


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, section):
        return self.values[section]

    def grid(self) -> GridSpec:
        g = self.values["grid"]
        return GridSpec(g["n_z"], g["n_p"], g["z_min"], g["length_z"])

    def line_of(self, section, key):
        return self.lines.get((section, key))

    def resolve_path(self, text: str) -> Path:
        p = Path(text)
        return p if p.is_absolute() else self.base_dir / p

    def manifest(self) -> dict:
        out = {}
        for sec, keys in self.values.items():
            out[sec] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in keys.items()}
        return out


def parse_config(text: str, base_dir=None) -> RunConfig:
    raw: dict = {}
    lines: dict = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"malformed section header {stripped!r}", lineno)
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in raw:
                raise ConfigError(f"duplicate section [{section}] (first at line "
                                  f"{lines[(section, None)]})", lineno)
            raw.setdefault(section, {})
            lines[(section, None)] = lineno
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in lines:
            raise ConfigError(f"duplicate key {key!r} in [{section}] "
                              f"(lines {lines[(section, key)]} and {lineno})", lineno)
        parser = SCHEMA[section][key][0]
        try:
            raw[section][key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}", lineno) from None
        lines[(section, key)] = lineno
    for sec in REQUIRED_SECTIONS:
        if sec not in raw:
            raise ConfigError(f"missing required section [{sec}]")
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {k: raw.get(sec, {}).get(k, default) for k, (_, default) in keys.items()}
    cfg = RunConfig(values, lines, Path(base_dir) if base_dir else Path.cwd())
    _derive_and_check(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _derive_and_check(cfg: RunConfig) -> None:
    g = cfg.values["grid"]
    if g["n_p"] is None:
        g["n_p"] = g["n_z"] // 2
    if g["z_min"] is None:
        g["z_min"] = -0.5 * g["length_z"]
    try:
        grid = cfg.grid()
    except ConfigurationError as exc:
        key = "n_p" if str(exc).startswith("n_p") else "n_z"
        if str(exc).startswith("length"):
            key = "length_z"
        line = cfg.line_of("grid", key)
        raise ConfigError(str(exc), line) from None

    pot = cfg.values["potential"]
    if pot["mass"] <= 0:
        raise ConfigError("potential.mass must be positive", cfg.line_of("potential", "mass"))
    if pot["kind"] == "tabulated":
        if not pot["values_file"]:
            raise ConfigError("tabulated potential requires values_file",
                              cfg.line_of("potential", "kind"))
        if not cfg.resolve_path(pot["values_file"]).is_file():
            raise ConfigError(f"file not found: {pot['values_file']}",
                              cfg.line_of("potential", "values_file"))

    ini = cfg.values["initial"]
    if ini["kind"] in ("quantum-file", "classical-file"):
        if not ini["file"] or not cfg.resolve_path(ini["file"]).is_file():
            raise ConfigError(f"initial-state file not found: {ini['file']!r}",
                              cfg.line_of("initial", "file") or cfg.line_of("initial", "kind"))
    if ini["kind"] == "gaussian" and not (ini["delta_x"] > 0 and ini["delta_p"] > 0):
        raise ConfigError("gaussian widths must be positive", cfg.line_of("initial", "delta_x"))
    if ini["kind"] == "eigenstate" and not 0 <= ini["n"] <= 10:
        raise ConfigError("eigenstate index must be in 0..10", cfg.line_of("initial", "n"))
    if ini["kind"] == "gaussian-sweep" and not all(s > 0 for s in ini["products"]):
        raise ConfigError("sweep products must be positive", cfg.line_of("initial", "products"))

    ev = cfg.values["evolution"]
    if ev["n_steps"] < 0:
        raise ConfigError("n_steps must be nonnegative", cfg.line_of("evolution", "n_steps"))
    if ev["sample_every"] < 1:
        raise ConfigError("sample_every must be positive", cfg.line_of("evolution", "sample_every"))
    if not (math.isfinite(ev["dt"]) and ev["dt"] > 0):
        raise ConfigError("dt must be positive", cfg.line_of("evolution", "dt"))
    guard = ev["dt"] * max(abs(grid.p)) / pot["mass"] * (2 * math.pi / grid.length_z)
    if guard >= math.pi:
        raise ConfigError(f"dt violates the phase-advance bound ({guard:.3g} >= pi)",
                          cfg.line_of("evolution", "dt"))

    obs = cfg.values["observables"]
    from .observables import MomentRequest
    for text in obs["moments"]:
        try:
            MomentRequest.parse(text)
        except ValueError as exc:
            raise ConfigError(str(exc), cfg.line_of("observables", "moments")) from None
    for beta in obs["sharpened_beta"]:
        if not 0 <= beta <= math.pi / 2 + 1e-12:
            raise ConfigError("sharpened_beta values must lie in [0, pi/2]",
                              cfg.line_of("observables", "sharpened_beta"))
