import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hamming_privacy.cli import (
    fixture_path,
    fmt_float,
    load_mechanism,
    load_source_set,
    main,
    mechanism_to_json,
)

DATA = Path(__file__).parent / "data"


def run_cli(*args, capsys=None):
    """Invoke the entry point in-process; returns (exit_code, stdout, stderr)."""
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


class TestFixtures:
    def test_all_tables_ship(self):
        for name in ("table1", "table2", "table3a", "table3b", "table3c",
                     "table4a", "table4b", "table4c"):
            S = load_source_set(fixture_path(name))
            assert S.M in (6, 10)

    def test_table1_values(self):
        S = load_source_set(fixture_path("table1"))
        assert np.allclose(S.vertex_matrix, [[0.7, 0.15, 0.06, 0.04, 0.03, 0.02]])

    def test_table4c_has_eight_vertices(self):
        S = load_source_set(fixture_path("table4c"))
        assert len(S) == 8 and S.M == 10


class TestClassifyCommand:
    def test_table1(self, capsys):
        code, out, _ = run_cli("classify", str(fixture_path("table1")), capsys=capsys)
        assert code == 0
        assert out.strip() == "ClassII ordering=[1,2,3,4,5,6]"

    def test_table3a(self, capsys):
        code, out, _ = run_cli("classify", str(fixture_path("table3a")), capsys=capsys)
        assert code == 0
        assert out.strip() == "ClassIII folding={id,(1 2)} cap=nonempty"

    def test_binary_extremes(self, capsys):
        code, out, _ = run_cli("classify", str(fixture_path("binary_extremes")), capsys=capsys)
        assert code == 0
        assert out.strip() == "ClassI"


class TestThresholdsCommand:
    def test_table1(self, capsys):
        code, out, _ = run_cli("thresholds", str(fixture_path("table1")), capsys=capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "D^(1)=0.02"
        assert lines[-1] == "D^(6)=1"
        assert float(lines[4].split("=")[1]) == pytest.approx(0.30, abs=1e-9)


class TestCurveCommand:
    def test_golden_table1(self, tmp_path, capsys):
        out_csv = tmp_path / "curve.csv"
        code, _, _ = run_cli(
            "curve", str(fixture_path("table1")), "--metric", "dp",
            "--dmin", "0.05", "--dmax", "0.3", "--step", "0.05",
            "--out", str(out_csv), capsys=capsys,
        )
        assert code == 0
        assert out_csv.read_text() == (DATA / "golden_table1.csv").read_text()

    def test_class1_both_metrics(self, tmp_path, capsys):
        out_csv = tmp_path / "c1.csv"
        code, _, _ = run_cli(
            "curve", str(fixture_path("class1_m10")), "--metric", "both",
            "--dmin", "0.5", "--dmax", "0.51", "--step", "0.1",
            "--out", str(out_csv), capsys=capsys,
        )
        assert code == 0
        header, row = out_csv.read_text().strip().splitlines()
        assert header == "D,eps_dp,eps_dp_lower,eps_dp_upper,eps_it,k_star"
        cells = row.split(",")
        assert float(cells[1]) == pytest.approx(math.log(9), abs=1e-9)
        assert float(cells[4]) == pytest.approx(0.510826, abs=1e-6)

    def test_class3_rows_fill_bound_columns(self, tmp_path, capsys):
        out_csv = tmp_path / "c3.csv"
        code, _, _ = run_cli(
            "curve", str(fixture_path("table3a")), "--dmin", "0.2",
            "--dmax", "0.3", "--step", "0.05", "--out", str(out_csv),
            capsys=capsys,
        )
        assert code == 0
        for line in out_csv.read_text().strip().splitlines()[1:]:
            cells = line.split(",")
            assert cells[1] == "" and cells[5] == ""
            lo, up = float(cells[2]), float(cells[3])
            assert lo <= up + 1e-9

    def test_log_base_2(self, tmp_path, capsys):
        nats_csv, bits_csv = tmp_path / "e.csv", tmp_path / "b.csv"
        for base, path in (("e", nats_csv), ("2", bits_csv)):
            code, _, _ = run_cli(
                "curve", str(fixture_path("table1")), "--dmin", "0.1",
                "--dmax", "0.11", "--step", "0.05", "--log-base", base,
                "--out", str(path), capsys=capsys,
            )
            assert code == 0
        nats = float(nats_csv.read_text().splitlines()[1].split(",")[1])
        bits = float(bits_csv.read_text().splitlines()[1].split(",")[1])
        assert bits == pytest.approx(nats / math.log(2), abs=1e-12)

    def test_rows_strictly_increasing_in_d(self, tmp_path, capsys):
        out_csv = tmp_path / "grid.csv"
        code, _, _ = run_cli(
            "curve", str(fixture_path("table1")), "--dmin", "0.01",
            "--dmax", "0.2", "--step", "0.01", "--out", str(out_csv),
            capsys=capsys,
        )
        assert code == 0
        ds = [float(l.split(",")[0]) for l in out_csv.read_text().strip().splitlines()[1:]]
        assert all(b > a for a, b in zip(ds, ds[1:]))

    def test_bad_range_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            "curve", str(fixture_path("table1")), "--dmin", "0.5",
            "--dmax", "0.4", "--out", str(tmp_path / "x.csv"), capsys=capsys,
        )
        assert code == 2
        assert "dmin" in err


class TestDpOptVerifyRoundTrip:
    def test_mechanism_round_trips(self, tmp_path, capsys):
        src = str(fixture_path("table2"))
        code, out, _ = run_cli("dp-opt", src, "--distortion", "0.3", capsys=capsys)
        assert code == 0
        fields = dict(line.split("=", 1) for line in out.strip().splitlines())
        leakage = float(fields["leakage"])
        mech_file = tmp_path / "mech.json"
        mech_file.write_text(fields["mechanism"])

        code, out, _ = run_cli("verify", str(mech_file), src,
                               "--distortion", "0.3", capsys=capsys)
        assert code == 0
        report = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert report["valid"] == "true"
        assert float(report["eps_dp"]) == pytest.approx(leakage, abs=1e-7)

    def test_class3_prints_bounds(self, capsys):
        code, out, _ = run_cli("dp-opt", str(fixture_path("table3a")),
                               "--distortion", "0.3", capsys=capsys)
        assert code == 0
        fields = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert float(fields["leakage_lower"]) <= float(fields["leakage_upper"]) + 1e-9


class TestItOptCommand:
    def test_binary(self, tmp_path, capsys):
        src = tmp_path / "binary.json"
        src.write_text(json.dumps({"M": 2, "vertices": [[0.7, 0.3]]}))
        code, out, _ = run_cli("it-opt", str(src), "--distortion", "0.1", capsys=capsys)
        assert code == 0
        fields = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert float(fields["leakage"]) == pytest.approx(0.285781, abs=2e-4)


class TestOracleCommand:
    def test_binary(self, tmp_path, capsys):
        src = tmp_path / "binary.json"
        src.write_text(json.dumps({"M": 2, "vertices": [[0.7, 0.3]]}))
        code, out, _ = run_cli("oracle", str(src), "--grid", "0.01",
                               "--distortion", "0.1", capsys=capsys)
        assert code == 0
        assert float(out.strip().split("=")[1]) == pytest.approx(math.log(9), abs=1e-3)

    def test_m_too_large_exits_2(self, capsys):
        code, _, err = run_cli("oracle", str(fixture_path("table1")),
                               "--grid", "0.05", "--distortion", "0.3", capsys=capsys)
        assert code == 2


class TestErrorHandling:
    def test_malformed_json_exits_2_with_location(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"M": 3, "vertices": [[0.5, 0.3, 0.2],]}')
        code, _, err = run_cli("classify", str(bad), capsys=capsys)
        assert code == 2
        assert "bad.json:1:" in err

    def test_schema_violation_names_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"M": 3, "vertices": [[0.5, 0.5]]}))
        code, _, err = run_cli("classify", str(bad), capsys=capsys)
        assert code == 2
        assert "vertices[0]" in err

    def test_missing_file_exits_2(self, capsys):
        code, _, err = run_cli("classify", "/nonexistent/source.json", capsys=capsys)
        assert code == 2

    def test_invalid_distribution_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"M": 2, "vertices": [[0.9, 0.3]]}))
        code, _, err = run_cli("classify", str(bad), capsys=capsys)
        assert code == 2


class TestSerialization:
    def test_float_17_digits_round_trip(self):
        for x in (0.1, 1 / 3, 0.30000000000000004, 1e-17):
            assert float(fmt_float(x)) == x
        assert fmt_float(math.inf) == "inf"

    def test_mechanism_json_round_trip_exact_on_dyadic(self, tmp_path):
        from hamming_privacy.core import mechanism

        Q = mechanism([[0.6875, 0.3125, 0.0], [0.3125, 0.6875, 0.0], [0.3125, 0.6875, 0.0]])
        path = tmp_path / "mech.json"
        path.write_text(mechanism_to_json(Q))
        back = load_mechanism(path)
        assert np.array_equal(back.rows, Q.rows)

    def test_mechanism_json_round_trip_within_renormalization(self, tmp_path):
        from hamming_privacy.mechanisms import symmetric_mechanism

        Q = symmetric_mechanism(5, 1 / 3)
        path = tmp_path / "mech.json"
        path.write_text(mechanism_to_json(Q))
        back = load_mechanism(path)
        assert np.allclose(back.rows, Q.rows, atol=1e-15, rtol=0.0)


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "hamming_privacy.cli", "classify",
         str(fixture_path("table1"))],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("ClassII")
