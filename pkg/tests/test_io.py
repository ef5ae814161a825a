import csv
import json

import numpy as np

from pathprop import io
from pathprop.kernel import SpaceGrid, build_kernel_matrix, extract_spectrum
from pathprop.model import LagrangianModel
from pathprop.modes import fourier_sine_basis
from pathprop.slicing import ShortTimeKernel


def test_format_float_round_trips():
    for x in (0.1, 1 / 3, np.pi * 1e-300, -2.5e17):
        assert float(io.format_float(x)) == x


def test_complex_matrix_interleaved(tmp_path):
    path = tmp_path / "m.csv"
    io.write_matrix_csv(path, np.array([[1 + 2j, 3.0], [0.5j, -1.0]]))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["re0", "im0", "re1", "im1"]
    assert [float(v) for v in rows[1]] == [1.0, 2.0, 3.0, 0.0]


def test_kernel_csv_excludes_dx(tmp_path):
    g = SpaceGrid(-1, 1, 3)
    kmat = build_kernel_matrix(ShortTimeKernel(LagrangianModel.free(), epsilon=0.1), g, "imaginary")
    path = tmp_path / "k.csv"
    io.write_kernel_csv(path, kmat)
    rows = list(csv.reader(path.open()))
    assert len(rows) == 1 + 9
    assert float(rows[5][2]) == kmat.entries[1, 1] / g.dx


def test_spectrum_files(tmp_path):
    spec = extract_spectrum(ShortTimeKernel(LagrangianModel.harmonic(1.0)), SpaceGrid(-6, 6, 81), 0.05, 1.0, 2)
    io.write_spectrum_csv(tmp_path / "s.csv", spec)
    io.write_spectrum_json(tmp_path / "s.json", spec, "harmonic", "midpoint")
    rows = list(csv.reader((tmp_path / "s.csv").open()))
    assert rows[0] == ["level", "energy", "estimated_error"] and len(rows) == 3
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["energies"] == spec.energies.tolist() and doc["grid"]["points"] == 81


def test_mode_table_and_columns(tmp_path):
    b = fourier_sine_basis((0, 1), 3, samples=11)
    io.write_mode_table(tmp_path / "modes.csv", b)
    rows = list(csv.reader((tmp_path / "modes.csv").open()))
    assert rows[0] == ["t", "u1", "u2", "u3"] and len(rows) == 12
    io.write_columns(tmp_path / "d.dat", [b.grid, b.modes[0]], ["t", "u1"])
    text = (tmp_path / "d.dat").read_text()
    assert text.splitlines()[0] == "# t u1"
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "d.dat")[:, 1], b.modes[0])


def test_parent_directories_created(tmp_path):
    io.write_columns(tmp_path / "a" / "b" / "c.dat", [[1.0, 2.0]], ["x"])
    assert (tmp_path / "a" / "b" / "c.dat").exists()
