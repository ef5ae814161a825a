"""Experiment configuration: a TOML file with sections experiment, model,
boundary, slicing, grid, spectrum, series and output.

Validation errors carry the offending key and, where it can be located, the
line number in the source file.
"""
from __future__ import annotations

import re
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .errors import ConfigError
from .model import MODEL_KINDS, PARTITIONS, LagrangianModel, PhysicalUnits
from .slicing import AVERAGE_TARGETS, AveragedPotentialRule

__all__ = [
    "EXPERIMENT_KINDS",
    "ModelSpec",
    "BoundarySpec",
    "SlicingSpec",
    "GridSpec",
    "SpectrumSpec",
    "SeriesSpec",
    "OutputSpec",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "build_model",
]

EXPERIMENT_KINDS = ("convergence", "spectrum", "series")
FORMATS = ("csv", "json", "both")
SECTIONS = ("experiment", "model", "boundary", "slicing", "grid", "spectrum", "series", "output")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "harmonic"
    omega: float = 1.0
    beta: float = 0.0
    poly_coeffs: tuple = ()
    partition: str = "full"
    mass: float = 1.0
    hbar: float = 1.0


@dataclass(frozen=True)
class BoundarySpec:
    t_a: float = 0.0
    t_b: float = 1.0
    x_a: float = 0.0
    x_b: float = 0.0


@dataclass(frozen=True)
class SlicingSpec:
    N: tuple = (8, 16, 32, 64)
    rules: tuple = ("midpoint", "integral_average")
    reference: str = "straight_line"
    average_target: str = "residual"
    total_time: float = 1.0
    reference_N: int = 1024


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -8.0
    x_max: float = 8.0
    points: int = 301


@dataclass(frozen=True)
class SpectrumSpec:
    levels: int = 3
    epsilon: float = 0.01
    total_time: float = 1.0
    rule: str = "midpoint"


@dataclass(frozen=True)
class SeriesSpec:
    basis: str = "sine"
    N: tuple = (4, 10)
    methods: tuple = ("slice", "projection")
    samples_per_segment: int = 32
    seed: int = 0
    jacobian_N: tuple = (5, 11, 21, 41, 81)
    fluctuation_omega_T: tuple = (0.5, 1.0, 1.5707963267948966, 2.5)
    fluctuation_modes: int = 10_000
    figure1_paths: int = 5


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    format: str = "both"
    timing: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    kind: str
    model: ModelSpec = field(default_factory=ModelSpec)
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    slicing: SlicingSpec = field(default_factory=SlicingSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    spectrum: SpectrumSpec = field(default_factory=SpectrumSpec)
    series: SeriesSpec = field(default_factory=SeriesSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def echo(self) -> dict:
        """Fully resolved configuration (defaults filled in) as plain data."""
        out = asdict(self)
        for section in out.values():
            if isinstance(section, dict):
                for k, v in section.items():
                    if isinstance(v, tuple):
                        section[k] = list(v)
        return out


_SPECS = {
    "model": ModelSpec,
    "boundary": BoundarySpec,
    "slicing": SlicingSpec,
    "grid": GridSpec,
    "spectrum": SpectrumSpec,
    "series": SeriesSpec,
    "output": OutputSpec,
}


def _line_index(text):
    """Map 'section.key' to the 1-based line where the key is assigned."""
    index = {}
    section = ""
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]")
    assign = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            section = m.group(1)
            index.setdefault(section, lineno)
            continue
        m = assign.match(line)
        if m:
            key = f"{section}.{m.group(1)}" if section else m.group(1)
            index.setdefault(key, lineno)
    return index


class _Checker:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, key, message):
        section = key.split(".")[0]
        raise ConfigError(message, field=key, line=self.lines.get(key, self.lines.get(section)))

    def number(self, key, value, *, positive=False, nonneg=False, integer=False):
        kinds = (int,) if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, kinds):
            self.fail(key, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
        if positive and not value > 0:
            self.fail(key, f"must be positive, got {value!r}")
        if nonneg and value < 0:
            self.fail(key, f"must be non-negative, got {value!r}")
        return int(value) if integer else float(value)

    def choice(self, key, value, allowed):
        if value not in allowed:
            self.fail(key, f"{value!r} is not one of {', '.join(map(str, allowed))}")
        return value

    def int_list(self, key, value, *, minimum=1):
        if not isinstance(value, (list, tuple)) or not value:
            self.fail(key, "must be a non-empty list")
        out = tuple(self.number(key, v, integer=True) for v in value)
        if any(v < minimum for v in out):
            self.fail(key, f"entries must be >= {minimum}")
        if any(b <= a for a, b in zip(out, out[1:])):
            self.fail(key, "entries must be strictly ascending")
        return out


def _section(raw, name, checker):
    data = raw.get(name, {})
    if not isinstance(data, dict):
        checker.fail(name, "must be a table")
    spec = _SPECS[name]
    known = spec.__dataclass_fields__
    for key in data:
        if key not in known:
            checker.fail(f"{name}.{key}", f"unknown key (expected one of {', '.join(known)})")
    return data


def parse_config(text: str) -> ExperimentConfig:
    lines = _line_index(text)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", line=int(m.group(1)) if m else None) from exc
    chk = _Checker(lines)
    for name in raw:
        if name not in SECTIONS:
            chk.fail(name, f"unknown section (expected one of {', '.join(SECTIONS)})")

    exp = raw.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("missing [experiment] table", field="experiment")
    for key in exp:
        if key not in ("id", "kind"):
            chk.fail(f"experiment.{key}", "unknown key (expected id, kind)")
    if "kind" not in exp:
        chk.fail("experiment.kind", "missing experiment kind")
    kind = chk.choice("experiment.kind", exp["kind"], EXPERIMENT_KINDS)
    exp_id = exp.get("id", kind)
    if not isinstance(exp_id, str) or not re.fullmatch(r"[A-Za-z0-9_.\-]+", exp_id):
        chk.fail("experiment.id", "must be a non-empty name of letters, digits, '_', '-', '.'")

    d = _section(raw, "model", chk)
    model = ModelSpec(
        kind=chk.choice("model.kind", d.get("kind", ModelSpec.kind), MODEL_KINDS),
        omega=chk.number("model.omega", d.get("omega", ModelSpec.omega), nonneg=True),
        beta=chk.number("model.beta", d.get("beta", ModelSpec.beta), nonneg=True),
        poly_coeffs=tuple(chk.number("model.poly_coeffs", c) for c in d.get("poly_coeffs", ())),
        partition=chk.choice("model.partition", d.get("partition", ModelSpec.partition), PARTITIONS),
        mass=chk.number("model.mass", d.get("mass", 1.0), positive=True),
        hbar=chk.number("model.hbar", d.get("hbar", 1.0), positive=True),
    )
    if model.kind == "custom_polynomial" and not model.poly_coeffs:
        chk.fail("model.poly_coeffs", "custom_polynomial needs poly_coeffs")
    if model.kind == "damped_harmonic" and model.beta <= 0:
        chk.fail("model.beta", "damped_harmonic needs beta > 0")

    d = _section(raw, "boundary", chk)
    boundary = BoundarySpec(**{k: chk.number(f"boundary.{k}", d.get(k, getattr(BoundarySpec, k)))
                               for k in ("t_a", "t_b", "x_a", "x_b")})
    if not boundary.t_b > boundary.t_a:
        chk.fail("boundary.t_b", "t_b must exceed t_a")

    d = _section(raw, "slicing", chk)
    rules = d.get("rules", list(SlicingSpec.rules))
    if isinstance(rules, str):
        rules = [rules]
    if not isinstance(rules, list) or not rules:
        chk.fail("slicing.rules", "must be a non-empty list of rule names")
    rule_names = tuple(r.value for r in AveragedPotentialRule)
    slicing = SlicingSpec(
        N=chk.int_list("slicing.N", d.get("N", list(SlicingSpec.N))),
        rules=tuple(chk.choice("slicing.rules", r, rule_names) for r in rules),
        reference=chk.choice("slicing.reference", d.get("reference", SlicingSpec.reference),
                             ("straight_line", "harmonic")),
        average_target=chk.choice("slicing.average_target",
                                  d.get("average_target", SlicingSpec.average_target), AVERAGE_TARGETS),
        total_time=chk.number("slicing.total_time", d.get("total_time", SlicingSpec.total_time),
                              positive=True),
        reference_N=chk.number("slicing.reference_N", d.get("reference_N", SlicingSpec.reference_N),
                               integer=True, positive=True),
    )
    if slicing.reference == "harmonic" and model.omega <= 0:
        chk.fail("slicing.reference", "harmonic reference needs model.omega > 0")

    d = _section(raw, "grid", chk)
    grid = GridSpec(
        x_min=chk.number("grid.x_min", d.get("x_min", GridSpec.x_min)),
        x_max=chk.number("grid.x_max", d.get("x_max", GridSpec.x_max)),
        points=chk.number("grid.points", d.get("points", GridSpec.points), integer=True),
    )
    if not grid.x_max > grid.x_min:
        chk.fail("grid.x_max", "x_max must exceed x_min")
    if grid.points < 3:
        chk.fail("grid.points", "need at least 3 points")

    d = _section(raw, "spectrum", chk)
    spectrum = SpectrumSpec(
        levels=chk.number("spectrum.levels", d.get("levels", SpectrumSpec.levels), integer=True),
        epsilon=chk.number("spectrum.epsilon", d.get("epsilon", SpectrumSpec.epsilon), positive=True),
        total_time=chk.number("spectrum.total_time", d.get("total_time", SpectrumSpec.total_time),
                              positive=True),
        rule=chk.choice("spectrum.rule", d.get("rule", SpectrumSpec.rule), rule_names),
    )
    if not 1 <= spectrum.levels <= 10:
        chk.fail("spectrum.levels", "must be between 1 and 10")

    d = _section(raw, "series", chk)
    methods = d.get("methods", list(SeriesSpec.methods))
    if not isinstance(methods, list) or not methods:
        chk.fail("series.methods", "must be a non-empty list")
    series = SeriesSpec(
        basis=chk.choice("series.basis", d.get("basis", SeriesSpec.basis), ("sine", "free")),
        N=chk.int_list("series.N", d.get("N", list(SeriesSpec.N)), minimum=2),
        methods=tuple(chk.choice("series.methods", m, ("slice", "projection")) for m in methods),
        samples_per_segment=chk.number("series.samples_per_segment",
                                       d.get("samples_per_segment", SeriesSpec.samples_per_segment),
                                       integer=True, positive=True),
        seed=chk.number("series.seed", d.get("seed", SeriesSpec.seed), integer=True, nonneg=True),
        jacobian_N=chk.int_list("series.jacobian_N", d.get("jacobian_N", list(SeriesSpec.jacobian_N)),
                                minimum=2),
        fluctuation_omega_T=tuple(
            chk.number("series.fluctuation_omega_T", v, nonneg=True)
            for v in d.get("fluctuation_omega_T", list(SeriesSpec.fluctuation_omega_T))),
        fluctuation_modes=chk.number("series.fluctuation_modes",
                                     d.get("fluctuation_modes", SeriesSpec.fluctuation_modes),
                                     integer=True, positive=True),
        figure1_paths=chk.number("series.figure1_paths", d.get("figure1_paths", SeriesSpec.figure1_paths),
                                 integer=True, nonneg=True),
    )

    d = _section(raw, "output", chk)
    timing = d.get("timing", False)
    if not isinstance(timing, bool):
        chk.fail("output.timing", "must be true or false")
    directory = d.get("directory", OutputSpec.directory)
    if not isinstance(directory, str) or not directory:
        chk.fail("output.directory", "must be a non-empty string")
    output = OutputSpec(
        directory=directory,
        format=chk.choice("output.format", d.get("format", OutputSpec.format), FORMATS),
        timing=timing,
    )
    return ExperimentConfig(exp_id, kind, model, boundary, slicing, grid, spectrum, series, output)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc.strerror or exc}") from exc
    return parse_config(text)


def build_model(spec: ModelSpec, partition: Optional[str] = None) -> LagrangianModel:
    units = PhysicalUnits(hbar=spec.hbar, mass=spec.mass)
    part = partition or spec.partition
    try:
        if spec.kind == "free":
            return LagrangianModel.free(units)
        if spec.kind == "harmonic":
            return LagrangianModel.harmonic(spec.omega, units, partition=part)
        if spec.kind == "damped_harmonic":
            return LagrangianModel.damped_harmonic(spec.omega, spec.beta, units)
        if spec.kind == "quartic":
            return LagrangianModel.quartic(0.25, units, partition=part, omega=spec.omega)
        return LagrangianModel.custom_polynomial(spec.poly_coeffs, units, partition=part, omega=spec.omega)
    except ValueError as exc:
        raise ConfigError(str(exc), field="model") from exc
