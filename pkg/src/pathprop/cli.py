"""Batch experiment driver.

``pathprop run CONFIG`` executes one experiment (convergence study, spectrum
extraction or series comparison) and writes result records plus plot data.
``pathprop oracle NAME`` prints closed-form reference values.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional

import numpy as np

from . import io
from .config import ExperimentConfig, build_model, load_config
from .errors import ConfigError, PathPropError
from .kernel import (
    SpaceGrid,
    build_kernel_matrix,
    compose,
    extract_spectrum,
    free_kernel_exact,
    harmonic_kernel_exact,
)
from .model import LagrangianModel, PhysicalUnits
from .modes import (
    asymptotic_jacobian,
    fluctuation_factor,
    fourier_sine_basis,
    free_mode_basis,
    series_by_projection,
    slice_to_series,
)
from .slicing import STRAIGHT_LINE, Reference, ShortTimeKernel, TimeGrid, interpolate_sliced

__all__ = [
    "ResultRecord",
    "run_convergence",
    "run_spectrum",
    "run_series_comparison",
    "run_experiment",
    "emit",
    "records_from_json",
    "main",
    "EXIT_OK",
    "EXIT_IO",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
]

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
RECORD_FIELDS = ("experiment", "inputs", "metric", "value", "reference", "error")


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    inputs: dict
    metric: str
    value: float
    reference: Optional[float] = None
    error: Optional[float] = None
    wall_clock: float = field(default=0.0, compare=False)


def _record(experiment, inputs, metric, value, reference=None, wall_clock=0.0):
    value = float(value)
    ref = None if reference is None else float(reference)
    err = None if ref is None else abs(value - ref)
    return ResultRecord(experiment, dict(inputs), metric, value, ref, err, float(wall_clock))


def _map(fn, items, threads):
    """Ordered map; results follow the order of ``items`` whatever the schedule."""
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _reference(cfg: ExperimentConfig):
    if cfg.slicing.reference == "harmonic":
        return Reference.harmonic(cfg.model.omega)
    return STRAIGHT_LINE


def _space_grid(cfg: ExperimentConfig) -> SpaceGrid:
    g = cfg.grid
    return SpaceGrid(g.x_min, g.x_max, g.points)


def _harmonic_oracle(cfg, level):
    return cfg.model.hbar * cfg.model.omega * (level + 0.5)


def _box_oracle(cfg, grid, level):
    # hard-wall grid: the discrete kernel vanishes one spacing beyond each end
    L = grid.width + 2 * grid.dx
    return (cfg.model.hbar * np.pi * (level + 1)) ** 2 / (2 * cfg.model.mass * L**2)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_convergence(cfg: ExperimentConfig, threads: int = 1):
    """Error-versus-N table per averaged-potential rule (imaginary time).

    Free particle: sup-norm error of the composed Euclidean kernel against the
    closed form on the central half of the grid.  Harmonic model: E0 against
    hbar omega / 2.  Otherwise: E0 against the same rule run at reference_N.
    """
    model = build_model(cfg.model)
    grid = _space_grid(cfg)
    T = cfg.slicing.total_time
    ref = _reference(cfg)

    def kernel(rule, N):
        return ShortTimeKernel(model, rule, T / N, ref, cfg.slicing.average_target)

    def ground(rule, N):
        return extract_spectrum(kernel(rule, N), grid, T / N, T, 1, estimate_error=False).energies[0]

    records = []
    for rule in cfg.slicing.rules:
        if cfg.model.kind == "free":
            x = grid.x
            central = np.abs(x - 0.5 * (grid.x_min + grid.x_max)) <= grid.width / 4
            exact = free_kernel_exact(x[:, None], x[None, :], T, mass=model.mass, hbar=model.hbar,
                                      euclidean=True)

            def one(N, rule=rule):
                t0 = time.perf_counter()
                K = compose(build_kernel_matrix(kernel(rule, N), grid, "imaginary"), N).entries / grid.dx
                err = np.max(np.abs(K - exact)[np.ix_(central, central)])
                return _record(cfg.id, {"rule": rule, "N": N, "epsilon": T / N}, "kernel_sup_error",
                               err, 0.0, time.perf_counter() - t0)
        else:
            if cfg.model.kind == "harmonic":
                oracle = _harmonic_oracle(cfg, 0)
            else:
                oracle = ground(rule, cfg.slicing.reference_N)

            def one(N, rule=rule, oracle=oracle):
                t0 = time.perf_counter()
                e0 = ground(rule, N)
                return _record(cfg.id, {"rule": rule, "N": N, "epsilon": T / N}, "E0", e0, oracle,
                               time.perf_counter() - t0)

        records.extend(_map(one, cfg.slicing.N, threads))
    return records


def run_spectrum(cfg: ExperimentConfig, threads: int = 1, out_dir=None):
    """Lowest levels of the Euclidean kernel, with errors against the exact
    harmonic or hard-wall box levels, or a doubled-resolution self-reference."""
    model = build_model(cfg.model)
    grid = _space_grid(cfg)
    sp = cfg.spectrum
    kern = ShortTimeKernel(model, sp.rule, sp.epsilon, _reference(cfg), cfg.slicing.average_target)
    t0 = time.perf_counter()
    spec = extract_spectrum(kern, grid, sp.epsilon, sp.total_time, sp.levels)
    elapsed = time.perf_counter() - t0
    if cfg.model.kind == "harmonic":
        refs, source = [_harmonic_oracle(cfg, n) for n in range(sp.levels)], "oracle"
    elif cfg.model.kind == "free":
        refs, source = [_box_oracle(cfg, grid, n) for n in range(sp.levels)], "box_oracle"
    else:
        dense = SpaceGrid(grid.x_min, grid.x_max, 2 * grid.points - 1)
        refs = extract_spectrum(kern, dense, sp.epsilon, sp.total_time, sp.levels,
                                estimate_error=False).energies
        source = "dense_grid"
    records = [
        _record(cfg.id, {"level": n, "rule": sp.rule, "epsilon": sp.epsilon, "reference_source": source},
                f"E{n}", e, r, elapsed)
        for n, (e, r) in enumerate(zip(spec.energies, refs))
    ]
    if out_dir is not None:
        out_dir = FsPath(out_dir)
        io.write_spectrum_csv(out_dir / f"{cfg.id}_spectrum.csv", spec)
        io.write_spectrum_json(out_dir / f"{cfg.id}_spectrum.json", spec, cfg.model.kind, sp.rule)
    return records


def _smooth_deviation(rng, t_a, T):
    """A smooth random deviation vanishing at both ends (decaying sine content)."""
    k = np.arange(1, 7)
    c = rng.standard_normal(len(k)) / k**2

    def f(t):
        return np.sin(np.pi * np.outer(np.asarray(t) - t_a, k) / T) @ c

    return f


def run_series_comparison(cfg: ExperimentConfig, threads: int = 1, out_dir=None):
    """Slice-fit and projection series against sliced paths, Jacobian trend
    against the asymptotic form, and harmonic fluctuation factors.

    Plot files (when ``out_dir`` is given): ``fig1_sliced_paths.dat`` and
    ``fig2_{method}_N{N}.dat`` with columns t, y_slice, y_series,
    ydot_slice, ydot_series.
    """
    bc, s = cfg.boundary, cfg.series
    T = bc.t_b - bc.t_a
    interval = (bc.t_a, bc.t_b)
    make_basis = fourier_sine_basis if s.basis == "sine" else free_mode_basis
    out_dir = None if out_dir is None else FsPath(out_dir)
    records = []

    rng = np.random.default_rng(s.seed)
    if out_dir is not None and s.figure1_paths:
        N1 = s.N[0]
        tg = TimeGrid(bc.t_a, bc.t_b, N1)
        t = np.linspace(bc.t_a, bc.t_b, N1 * s.samples_per_segment + 1)
        cols = [t]
        line = bc.x_a + (bc.x_b - bc.x_a) * (tg.times() - bc.t_a) / T
        spread = max(1.0, abs(bc.x_b - bc.x_a))
        for _ in range(s.figure1_paths):
            pts = line + spread * 0.5 * rng.standard_normal(N1 + 1)
            pts[0], pts[-1] = bc.x_a, bc.x_b
            cols.append(interpolate_sliced(pts, tg, STRAIGHT_LINE, t)[0])
        io.write_columns(out_dir / "fig1_sliced_paths.dat", cols,
                         ["t"] + [f"x{k + 1}" for k in range(s.figure1_paths)])

    f = _smooth_deviation(rng, bc.t_a, T)
    for N in s.N:
        tg = TimeGrid(bc.t_a, bc.t_b, N)
        y = f(tg.times())
        y[0] = y[-1] = 0.0
        t = np.linspace(bc.t_a, bc.t_b, N * s.samples_per_segment + 1)
        y_sl, yd_sl = interpolate_sliced(y, tg, STRAIGHT_LINE, t)
        basis = make_basis(interval, N - 1)
        for method in s.methods:
            t0 = time.perf_counter()
            if method == "slice":
                pair = slice_to_series(basis, tg)
                amps = pair.slice_to_series @ y[1:-1]
                used = basis
            else:
                a, pair = series_by_projection(basis, y, tg)
                amps = a.a
                used = basis.subset(np.arange(len(amps)))
            y_se = used.synthesize(amps, t)
            yd_se = used.synthesize(amps, t, derivative=True)
            elapsed = time.perf_counter() - t0
            inputs = {"basis": s.basis, "method": method, "N": N}
            records.append(_record(cfg.id, inputs, "path_sup_difference",
                                   np.max(np.abs(y_se - y_sl)), None, elapsed))
            records.append(_record(cfg.id, inputs, "derivative_sup_difference",
                                   np.max(np.abs(yd_se - yd_sl)), None, elapsed))
            records.append(_record(cfg.id, inputs, "log_jacobian", pair.log_jacobian, None, elapsed))
            if out_dir is not None:
                io.write_columns(out_dir / f"fig2_{method}_N{N}.dat", [t, y_sl, y_se, yd_sl, yd_se],
                                 ["t", "y_slice", "y_series", "ydot_slice", "ydot_series"])
                io.write_matrix_csv(out_dir / f"transform_{method}_N{N}.csv", pair.slice_to_series)
        if out_dir is not None:
            io.write_mode_table(out_dir / f"modes_{s.basis}_N{N}.csv", basis)

    def jac(N):
        tg = TimeGrid(bc.t_a, bc.t_b, N)
        t0 = time.perf_counter()
        _, pair = series_by_projection(make_basis(interval, N - 1), np.zeros(N + 1), tg)
        # the asymptotic form counts the amplitude -> slice direction
        return _record(cfg.id, {"basis": s.basis, "N": N}, "log_jacobian_amplitudes_to_slices",
                       -pair.log_jacobian, asymptotic_jacobian(s.basis, N, interval),
                       time.perf_counter() - t0)

    records.extend(_map(jac, s.jacobian_N, threads))

    units = PhysicalUnits(hbar=cfg.model.hbar, mass=cfg.model.mass)

    def fluct(wT):
        t0 = time.perf_counter()
        omega = wT / T
        model = LagrangianModel.harmonic(omega, units) if omega > 0 else LagrangianModel.free(units)
        F = fluctuation_factor(model, interval, s.fluctuation_modes)
        if omega > 0:
            exact = np.sqrt(units.mass * omega / (2j * np.pi * units.hbar * np.sin(omega * T)))
        else:
            exact = np.sqrt(units.mass / (2j * np.pi * units.hbar * T))
        return _record(cfg.id, {"omega_T": wT, "modes": s.fluctuation_modes},
                       "fluctuation_factor_relative_error", abs(F / exact - 1), 0.0,
                       time.perf_counter() - t0)

    records.extend(_map(fluct, s.fluctuation_omega_T, threads))
    return records


_RUNNERS = {
    "convergence": run_convergence,
    "spectrum": run_spectrum,
    "series": run_series_comparison,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1):
    runner = _RUNNERS[cfg.kind]
    if cfg.kind == "convergence":
        return runner(cfg, threads)
    return runner(cfg, threads, out_dir)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return io.format_float(v)
    return str(v)


def _record_dict(r: ResultRecord, timing: bool):
    d = {k: getattr(r, k) for k in RECORD_FIELDS}
    if timing:
        d["wall_clock"] = r.wall_clock
    return d


def emit(records, out_dir, fmt="both", *, experiment="experiment", config_echo=None, timing=False):
    """Write ``{experiment}_records.csv`` and/or ``.json`` plus the config echo.

    CSV has one metric per row with inputs as a compact JSON object; floats
    use 17 significant digits.  JSON holds the config echo and full records.
    Wall-clock times are written only when ``timing`` is set, so repeated
    runs are byte-identical.  Returns the list of written paths.
    """
    out_dir = FsPath(out_dir)
    written = []
    fields = list(RECORD_FIELDS) + (["wall_clock"] if timing else [])
    if fmt in ("csv", "both"):
        path = out_dir / f"{experiment}_records.csv"
        with io._open(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fields)
            for r in records:
                d = _record_dict(r, timing)
                d["inputs"] = json.dumps(r.inputs, sort_keys=True, separators=(",", ":"))
                w.writerow([_csv_value(d[k]) for k in fields])
        written.append(path)
    if fmt in ("json", "both"):
        path = out_dir / f"{experiment}_records.json"
        doc = {"config": config_echo, "records": [_record_dict(r, timing) for r in records]}
        with io._open(path) as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    if config_echo is not None:
        path = out_dir / f"{experiment}_config.json"
        with io._open(path) as fh:
            json.dump(config_echo, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def records_from_json(text: str):
    doc = json.loads(text)
    return [ResultRecord(**{k: d[k] for k in RECORD_FIELDS}, wall_clock=d.get("wall_clock", 0.0))
            for d in doc["records"]]


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _oracle(args):
    m, hb = args.mass, args.hbar
    if args.name == "harmonic_spectrum":
        return {"omega": args.omega,
                "energies": [hb * args.omega * (n + 0.5) for n in range(args.levels)]}
    if args.name == "free_kernel":
        K = free_kernel_exact(args.x_b, args.x_a, args.T, mass=m, hbar=hb, euclidean=args.euclidean)
    else:
        K = harmonic_kernel_exact(args.x_b, args.x_a, args.T, args.omega, mass=m, hbar=hb,
                                  euclidean=args.euclidean)
    K = complex(K)
    return {"x_a": args.x_a, "x_b": args.x_b, "T": args.T, "euclidean": args.euclidean,
            "re": K.real, "im": K.imag}


def build_parser():
    p = argparse.ArgumentParser(prog="pathprop", description="Path-integral propagator experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a TOML configuration")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.directory)")
    r.add_argument("--format", choices=("csv", "json", "both"), help="record format")
    r.add_argument("--threads", type=int, default=1, help="worker threads over the N list")
    r.add_argument("--timing", action="store_true", help="include wall-clock times in records")

    o = sub.add_parser("oracle", help="print closed-form reference values")
    o.add_argument("name", choices=("free_kernel", "harmonic_kernel", "harmonic_spectrum"))
    o.add_argument("--x-a", type=float, default=0.0)
    o.add_argument("--x-b", type=float, default=0.0)
    o.add_argument("--T", type=float, default=1.0)
    o.add_argument("--omega", type=float, default=1.0)
    o.add_argument("--levels", type=int, default=5)
    o.add_argument("--mass", type=float, default=1.0)
    o.add_argument("--hbar", type=float, default=1.0)
    o.add_argument("--euclidean", action="store_true", help="imaginary-time kernel")
    return p


def _err(msg):
    print(f"pathprop: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            print(json.dumps(_oracle(args), sort_keys=True))
            return EXIT_OK
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", field="--threads")
        cfg = load_config(args.config)
        if args.out or args.format or args.timing:
            out = dataclasses.replace(
                cfg.output,
                directory=args.out or cfg.output.directory,
                format=args.format or cfg.output.format,
                timing=args.timing or cfg.output.timing,
            )
            cfg = dataclasses.replace(cfg, output=out)
        out_dir = FsPath(cfg.output.directory)
        try:
            records = run_experiment(cfg, out_dir, args.threads)
        except PathPropError:
            raise
        except ValueError as exc:
            raise ConfigError(f"invalid experiment settings: {exc}") from exc
        emit(records, out_dir, cfg.output.format, experiment=cfg.id,
             config_echo=cfg.echo(), timing=cfg.output.timing)
    except ConfigError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    except PathPropError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    except OSError as exc:
        _err(f"I/O failure: {exc}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
