"""TOML run configuration with line-precise validation."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

from .multipliers import Coefficients, InadmissibleCoefficients
from .spectral import Grid3
from .timestepper import PROFILES, SCHEMES, InitialDataSpec, SchemeConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

SCENARIOS = ("simulate", "verify-operators", "verify-decay", "cross-check")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based, or None when not attributable."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class DecaySettings:
    points_per_axis: int = 128
    box_length: float = 16.0
    heat_width: float = 0.5
    heat_window: tuple[float, float] = (1.0, 8.0)
    dispersive_window: tuple[float, float] = (15.0, 45.0)
    samples: int = 16
    tolerance: float = 0.15


@dataclass(frozen=True)
class CrossCheckSettings:
    director_dt: float = 0.005
    angle_dt: tuple[float, ...] = (0.1, 0.05, 0.025)
    t_end: float = 1.0
    tolerance: float = 1e-5
    # a second-order scheme's order estimate scatters about 2; one-decimal rounding is the pass rule
    min_order: float = 1.95


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: Grid3
    coefficients: Coefficients
    initial: InitialDataSpec
    scheme: SchemeConfig
    cadence: int = 10
    diag_order: int = 4
    snapshot_every: int = 0
    figures: bool = True
    output_dir: str = "out"
    decay: DecaySettings = field(default_factory=DecaySettings)
    cross_check: CrossCheckSettings = field(default_factory=CrossCheckSettings)

    def with_seed(self, seed: int) -> "RunConfig":
        from dataclasses import replace

        return replace(self, initial=replace(self.initial, seed=seed))

    def with_output(self, out: str) -> "RunConfig":
        from dataclasses import replace

        return replace(self, output_dir=out)

    def as_sections(self) -> dict:
        g, c, i, s, d, x = self.grid, self.coefficients, self.initial, self.scheme, self.decay, self.cross_check
        return {
            "": {"scenario": self.scenario},
            "grid": {"points_per_axis": g.points_per_axis, "box_length": g.box_length,
                     "dealias_fraction": g.dealias_fraction},
            "coefficients": c.as_dict(),
            "initial_data": {"epsilon0": i.epsilon0, "seed": i.seed, "band": list(i.band), "profile": i.profile},
            "scheme": {"dt": s.dt, "t_end": s.t_end, "scheme": s.scheme, "cfl_safety": s.cfl_safety,
                       "reprojection_period": s.reprojection_period},
            "diagnostics": {"cadence": self.cadence, "order": self.diag_order,
                            "snapshot_every": self.snapshot_every, "figures": self.figures},
            "output": {"directory": self.output_dir},
            "decay": {"points_per_axis": d.points_per_axis, "box_length": d.box_length,
                      "heat_width": d.heat_width, "heat_window": list(d.heat_window),
                      "dispersive_window": list(d.dispersive_window), "samples": d.samples,
                      "tolerance": d.tolerance},
            "cross_check": {"director_dt": x.director_dt, "angle_dt": list(x.angle_dt), "t_end": x.t_end,
                            "tolerance": x.tolerance, "min_order": x.min_order},
        }

    def to_toml(self) -> str:
        """Canonical form: every section and key, defaults filled, fixed order."""
        out = []
        for name, table in self.as_sections().items():
            if name:
                out.append(f"\n[{name}]")
            for key, value in table.items():
                out.append(f"{key} = {_toml_value(value)}")
        return "\n".join(out).lstrip() + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- schema ------------------------------------------------------------------

_SCHEMA = {
    "grid": {"points_per_axis": int, "box_length": float, "dealias_fraction": float},
    "coefficients": {"nu1": float, "nu4": float, "nu5": float},
    "initial_data": {"epsilon0": float, "seed": int, "band": list, "profile": str},
    "scheme": {"dt": float, "t_end": float, "scheme": str, "cfl_safety": float, "reprojection_period": int},
    "diagnostics": {"cadence": int, "order": int, "snapshot_every": int, "figures": bool},
    "output": {"directory": str},
    "decay": {"points_per_axis": int, "box_length": float, "heat_width": float, "heat_window": list,
              "dispersive_window": list, "samples": int, "tolerance": float},
    "cross_check": {"director_dt": float, "angle_dt": list, "t_end": float, "tolerance": float,
                    "min_order": float},
}
_REQUIRED = {"grid": ("points_per_axis",), "coefficients": ("nu1", "nu4", "nu5"), "scheme": ("t_end",)}


class _Locator:
    """Maps (section, key) to the line where it is written."""

    _section = re.compile(r"^\s*\[\s*([A-Za-z0-9_\-]+)\s*\]")
    _key = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")

    def __init__(self, text: str):
        self.lines: dict[tuple[str, str | None], int] = {}
        section = ""
        for no, line in enumerate(text.splitlines(), start=1):
            m = self._section.match(line)
            if m:
                section = m.group(1)
                self.lines.setdefault((section, None), no)
                continue
            m = self._key.match(line)
            if m:
                self.lines.setdefault((section, m.group(1)), no)

    def __call__(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section, key)) or self.lines.get((section, None))


def _typed(value, kind, where: str, line):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}", line)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}", line)
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{where} must be of type {kind.__name__}, got {value!r}", line)
    return value


def _pair(value, where: str, line) -> tuple[float, float]:
    if len(value) != 2:
        raise ConfigError(f"{where} must have exactly two entries", line)
    return tuple(_typed(x, float, where, line) for x in value)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", int(m.group(1)) if m else None) from exc
    loc = _Locator(text)

    scenario = raw.pop("scenario", "simulate")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}", loc("", "scenario"))
    for name, value in raw.items():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown key or section {name!r}", loc("", name) or loc(name))
        if not isinstance(value, dict):
            raise ConfigError(f"{name!r} must be a table", loc("", name))
    sec: dict[str, dict] = {}
    for name, schema in _SCHEMA.items():
        table = raw.get(name, {})
        for key in table:
            if key not in schema:
                raise ConfigError(f"unknown key {name}.{key}", loc(name, key))
        for key in _REQUIRED.get(name, ()):
            if key not in table:
                raise ConfigError(f"missing required key {name}.{key}", loc(name))
        sec[name] = {k: _typed(v, schema[k], f"{name}.{k}", loc(name, k)) for k, v in table.items()}

    def build(section, factory, **kw):
        try:
            return factory(**kw)
        except InadmissibleCoefficients as exc:
            raise ConfigError(str(exc), loc(section, _first_bad_key(exc))) from exc
        except ValueError as exc:
            key = next((k for k in kw if k in str(exc)), None)
            raise ConfigError(f"[{section}] {exc}", loc(section, key)) from exc

    g = sec["grid"]
    grid = build("grid", Grid3, **g)
    coeffs = build("coefficients", Coefficients, **sec["coefficients"])

    i = dict(sec["initial_data"])
    if "band" in i:
        i["band"] = _pair(i["band"], "initial_data.band", loc("initial_data", "band"))
    i.setdefault("epsilon0", 1e-3)
    initial = build("initial_data", InitialDataSpec, **i)

    s = dict(sec["scheme"])
    if "dt" not in s:
        s["dt"] = 0.5 * grid.spacing * s.get("cfl_safety", 1.0)
    scheme = build("scheme", SchemeConfig, **s)
    if scheme.dt > scheme.cfl_safety * grid.spacing:
        raise ConfigError(
            f"scheme.dt = {scheme.dt} exceeds cfl_safety * grid spacing = {scheme.cfl_safety * grid.spacing:.6g}",
            loc("scheme", "dt"),
        )

    d = sec["diagnostics"]
    for key in ("cadence",):
        if key in d and d[key] < 1:
            raise ConfigError(f"diagnostics.{key} must be positive", loc("diagnostics", key))
    for key in ("order", "snapshot_every"):
        if key in d and d[key] < 0:
            raise ConfigError(f"diagnostics.{key} must be nonnegative", loc("diagnostics", key))

    dec = dict(sec["decay"])
    for key in ("heat_window", "dispersive_window"):
        if key in dec:
            dec[key] = _pair(dec[key], f"decay.{key}", loc("decay", key))
    decay = build("decay", DecaySettings, **dec)
    if decay.samples < 8:
        raise ConfigError("decay.samples must be at least 8", loc("decay", "samples"))

    x = dict(sec["cross_check"])
    if "angle_dt" in x:
        x["angle_dt"] = tuple(_typed(v, float, "cross_check.angle_dt", loc("cross_check", "angle_dt"))
                              for v in x["angle_dt"])
        if not x["angle_dt"]:
            raise ConfigError("cross_check.angle_dt must not be empty", loc("cross_check", "angle_dt"))
    cross = build("cross_check", CrossCheckSettings, **x)

    return RunConfig(
        scenario=scenario,
        grid=grid,
        coefficients=coeffs,
        initial=initial,
        scheme=scheme,
        cadence=d.get("cadence", 10),
        diag_order=d.get("order", 4),
        snapshot_every=d.get("snapshot_every", 0),
        figures=d.get("figures", True),
        output_dir=sec["output"].get("directory", "out"),
        decay=decay,
        cross_check=cross,
    )


def _first_bad_key(exc: Exception) -> str:
    msg = str(exc)
    for key, token in (("nu4", "ν4>0 violated"), ("nu1", "ν1>-2"), ("nu5", "ν5>-ν4 violated")):
        if token in msg:
            return key
    return "nu4"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
