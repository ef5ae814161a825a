"""Plain-text exports: kernel matrices, spectra, mode tables, transforms and
whitespace-column plot data.  Floats are written with 17 significant digits
so files round-trip exactly and repeated runs are byte-identical."""
from __future__ import annotations

import csv
import json
from pathlib import Path as FsPath

import numpy as np

__all__ = [
    "FLOAT_FMT",
    "format_float",
    "write_kernel_csv",
    "write_spectrum_csv",
    "spectrum_record",
    "write_spectrum_json",
    "write_mode_table",
    "write_matrix_csv",
    "write_columns",
]

FLOAT_FMT = "%.17g"


def format_float(x) -> str:
    return FLOAT_FMT % float(x)


def _open(path):
    path = FsPath(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_matrix_csv(path, matrix, header=None):
    """Real matrices as plain CSV; complex ones as interleaved re, im columns."""
    m = np.atleast_2d(np.asarray(matrix))
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if np.iscomplexobj(m):
            if header is None:
                header = [f"{p}{j}" for j in range(m.shape[1]) for p in ("re", "im")]
            w.writerow(header)
            for row in m:
                w.writerow([format_float(v) for z in row for v in (z.real, z.imag)])
        else:
            if header is not None:
                w.writerow(header)
            for row in m:
                w.writerow([format_float(v) for v in row])


def write_kernel_csv(path, kmat):
    """Long format: x_i, x_j, Re K, Im K (K excludes the folded-in dx)."""
    x = kmat.grid.x
    k = np.asarray(kmat.entries) / kmat.grid.dx
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_i", "x_j", "re", "im"])
        for i, xi in enumerate(x):
            for j, xj in enumerate(x):
                z = complex(k[i, j])
                w.writerow([format_float(xi), format_float(xj), format_float(z.real), format_float(z.imag)])


def write_spectrum_csv(path, spectrum):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "energy", "estimated_error"])
        for n, (e, err) in enumerate(zip(spectrum.energies, spectrum.errors)):
            w.writerow([n, format_float(e), format_float(err)])


def spectrum_record(spectrum, model: str, rule: str) -> dict:
    g = spectrum.grid
    return {
        "model": model,
        "rule": rule,
        "epsilon": float(spectrum.epsilon),
        "grid": {"x_min": float(g.x_min), "x_max": float(g.x_max), "points": int(g.points)},
        "energies": [float(e) for e in spectrum.energies],
        "errors": [float(e) for e in spectrum.errors],
    }


def write_spectrum_json(path, spectrum, model: str, rule: str):
    with _open(path) as fh:
        json.dump(spectrum_record(spectrum, model, rule), fh, indent=2)
        fh.write("\n")


def write_mode_table(path, basis):
    """CSV columns t, u_1 .. u_M."""
    header = ["t"] + [f"u{int(n)}" for n in basis.labels]
    write_matrix_csv(path, np.column_stack([basis.grid, basis.modes.T]), header=header)


def write_columns(path, columns, header):
    """gnuplot-style data: '# ' header line, then whitespace-separated columns."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with _open(path) as fh:
        np.savetxt(fh, data, fmt=FLOAT_FMT, header=" ".join(header))
