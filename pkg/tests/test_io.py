import json

import numpy as np
import pytest

from slowlight import io
from slowlight.model import PhysicalParams, SimulationGrid
from slowlight.modulation import Constant
from slowlight.soliton import SolitonSolution
from slowlight.solver import Scenario, simulate


@pytest.fixture(scope="module")
def result():
    sol = SolitonSolution(PhysicalParams.from_amplitude(4.5, 3.0), Constant(-1.0))
    return simulate(Scenario.from_soliton(sol, SimulationGrid(-14.0, 2.0, 161, 1.0, 41), stride=4))


def test_grid_round_trip(result, tmp_path):
    sums = io.write_grids(result, tmp_path, extra={"note": "x"})
    arrays, manifest = io.read_grids(tmp_path)
    for name, arr in result.arrays().items():
        assert np.array_equal(arrays[name], arr)
        assert manifest[f"sha256.{name}"] == sums[name]
    assert int(manifest["n_zeta"]) == 11 and int(manifest["n_tau"]) == 161
    assert float(manifest["h_zeta"]) == result.h_zeta
    assert manifest["params.nu0"] == "4.5" and manifest["note"] == "x"


def test_grid_layout_is_zeta_major_little_endian(result, tmp_path):
    io.write_grids(result, tmp_path)
    raw = np.fromfile(tmp_path / "psi3.bin", dtype="<f8")
    assert raw.size == 2 * result.psi3.size
    assert raw[0] == result.psi3[0, 0].real and raw[1] == result.psi3[0, 0].imag
    assert raw[2] == result.psi3[0, 1].real


def test_checksum_mismatch_detected(result, tmp_path):
    io.write_grids(result, tmp_path)
    path = tmp_path / "omega_a.bin"
    data = bytearray(path.read_bytes())
    data[10] ^= 1
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError):
        io.read_grids(tmp_path)
    arrays, _ = io.read_grids(tmp_path, verify=False)
    assert arrays["omega_a"].shape == result.omega_a.shape


def test_manifest_sorted_and_parsable(tmp_path):
    io.write_manifest(tmp_path / "m.txt", {"b": 1.5, "a": True, "c": "text = with equals"})
    lines = (tmp_path / "m.txt").read_text().splitlines()
    assert lines == ["a = true", "b = 1.5", "c = text = with equals"]
    assert io.read_manifest(tmp_path / "m.txt")["c"] == "text = with equals"


def test_slice_csv_round_trip(result, tmp_path):
    io.write_slice_csv(tmp_path / "s.csv", result, 5)
    data = io.read_slice_csv(tmp_path / "s.csv")
    assert tuple(data) == io.SLICE_COLUMNS
    assert np.array_equal(data["tau"], result.tau)
    assert np.all(data["zeta"] == result.zeta[5])
    assert np.array_equal(data["psi1_re"] + 1j * data["psi1_im"], result.psi1[5])
    assert np.array_equal(data["omega_b_im"], result.omega_b[5].imag)


def test_table_and_heatmap(tmp_path):
    io.write_table(tmp_path / "t.dat", "x y", [np.arange(3.0), np.array([0.1, 1e-300, -2.5])])
    rows = np.loadtxt(tmp_path / "t.dat")
    assert rows.shape == (3, 2) and rows[1, 1] == 1e-300
    zeta, tau = np.linspace(0, 1, 450), np.linspace(-1, 1, 30)
    io.write_heatmap(tmp_path / "h.dat", zeta, tau, np.ones((450, 30)), max_points=200)
    h = np.loadtxt(tmp_path / "h.dat")
    assert h.shape == (150 * 30, 3)
    assert (tmp_path / "h.dat").read_text().startswith("# zeta tau abs_omega_a")


def test_report_json_and_text(tmp_path):
    report = {"passed": np.bool_(True), "value": np.float64(1.25), "n": np.int64(3),
              "series": np.array([1.0, 2.0]), "bad": float("nan"),
              "entries": [{"name": "a", "x": 1}, {"name": "b", "x": 2}]}
    io.write_report(tmp_path / "report", report)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["passed"] is True and data["n"] == 3 and data["series"] == [1.0, 2.0]
    assert data["bad"] == "nan"
    text = (tmp_path / "report.txt").read_text().splitlines()
    assert "entries[1].x = 2" in text and "value = 1.25" in text and "passed = true" in text
