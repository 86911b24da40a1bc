import json
import math

import numpy as np
import pytest

from bbcap import cli
from bbcap.region import contains, region_from_dict


@pytest.fixture(autouse=True)
def clean_precision_env(monkeypatch):
    monkeypatch.delenv("BBC_CAPACITY_PRECISION", raising=False)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRegionCommand:
    def test_unconstrained_region_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "region", "--etas", "0.2,0.3", "--ns", "inf", "--format", "json"
        )
        assert code == 0
        data = json.loads(out)
        assert data["m"] == 2 and data["energy"] == "unconstrained"
        bounds = {tuple(c["subset"]): c["bound_bits"] for c in data["constraints"]}
        assert bounds[(1,)] == pytest.approx(math.log2(1.4), abs=1e-9)
        assert bounds[(2,)] == pytest.approx(math.log2(1.6), abs=1e-9)
        assert bounds[(1, 2)] == pytest.approx(1.0, abs=1e-12)

    def test_finite_energy_region(self, capsys):
        code, out, _ = run_cli(capsys, "region", "--etas", "0.2,0.3", "--ns", "1.0")
        data = json.loads(out)
        assert code == 0 and data["energy"] == 1.0
        bounds = {tuple(c["subset"]): c["bound_bits"] for c in data["constraints"]}
        assert bounds[(1,)] == pytest.approx(0.2841665387161574, abs=1e-9)

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(capsys, "region", "--etas", "0.2,0.3", "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "subset,bound_bits"
        assert lines[1].startswith("1,0.485426827")
        assert lines[3].startswith("1+2,1")

    def test_unbounded_region_flagged(self, capsys):
        code, out, _ = run_cli(capsys, "region", "--etas", "0.6,0.4")
        data = json.loads(out)
        assert code == 0
        assert all(c.get("unbounded") is True for c in data["constraints"])
        assert "inf" not in out.lower().replace("infinity", "inf")

    def test_deterministic_output(self, capsys):
        _, first, _ = run_cli(capsys, "region", "--etas", "0.2,0.3")
        _, second, _ = run_cli(capsys, "region", "--etas", "0.2,0.3")
        assert first == second

    def test_round_trip_membership(self, capsys, monkeypatch):
        monkeypatch.setenv("BBC_CAPACITY_PRECISION", "17")
        _, out, _ = run_cli(capsys, "region", "--etas", "0.2,0.3", "--ns", "2.5")
        rebuilt = region_from_dict(json.loads(out))
        from bbcap.region import capacity_region
        from bbcap.channel import BroadcastChannelSpec

        original = capacity_region(BroadcastChannelSpec((0.2, 0.3)), 2.5)
        rng = np.random.RandomState(8)
        for _ in range(300):
            p = rng.uniform(-0.05, 0.9, size=2)
            assert contains(original, p) == contains(rebuilt, p)

    def test_domain_error_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "region", "--etas", "0.2,1.3")
        assert code == 1 and "transmittance" in err


class TestVerticesCommand:
    def test_pentagon_json(self, capsys):
        code, out, _ = run_cli(capsys, "vertices", "--etas", "0.2,0.3")
        data = json.loads(out)
        assert code == 0 and len(data["vertices"]) == 5
        assert [0.485426827, 0.514573173] in data["vertices"]

    def test_csv_header(self, capsys):
        _, out, _ = run_cli(capsys, "vertices", "--etas", "0.2,0.3", "--format", "csv")
        assert out.splitlines()[0] == "r1_bits,r2_bits"


class TestBoundaryCommand:
    def test_csv_through_corners(self, capsys):
        code, out, _ = run_cli(
            capsys, "boundary", "--etas", "0.2,0.3", "--points", "200", "--format", "csv"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "r1_bits,r2_bits"
        assert len(lines) - 1 >= 200
        assert "0.485426827,0.514573173" in lines
        assert "0.321928095,0.678071905" in lines

    def test_line_endings_and_file_output(self, capsys, tmp_path):
        target = tmp_path / "boundary.csv"
        code, out, _ = run_cli(
            capsys, "boundary", "--etas", "0.2,0.3", "--points", "5",
            "--output", str(target),
        )
        assert code == 0 and out == ""
        raw = target.read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")

    def test_wrong_m_is_domain_error(self, capsys):
        code, _, err = run_cli(capsys, "boundary", "--etas", "0.5")
        assert code == 1 and "m = 2" in err


class TestConvergenceCommand:
    def test_gaps_shrink(self, capsys):
        code, out, _ = run_cli(
            capsys, "convergence", "--etas", "0.2,0.3",
            "--ns-grid", "1,10,100,10000", "--format", "json",
        )
        assert code == 0
        rows = json.loads(out)
        by_subset = {}
        for row in rows:
            by_subset.setdefault(tuple(row["subset"]), []).append(row["gap_bits"])
        for gaps in by_subset.values():
            assert all(g > 0 for g in gaps)
            assert all(b < a for a, b in zip(gaps, gaps[1:]))
        final = {tuple(r["subset"]): r["gap_bits"] for r in rows if r["ns"] == 10000}
        assert max(final.values()) < 1e-3

    def test_zero_energy_row(self, capsys):
        _, out, _ = run_cli(
            capsys, "convergence", "--etas", "0.2,0.3", "--ns-grid", "0", "--format", "csv"
        )
        for line in out.splitlines()[1:]:
            assert line.split(",")[2] == "0"


class TestVerifyCommand:
    def test_all_pass_report(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--etas", "0.2,0.3", "--ns", "0.5", "--cutoff", "25"
        )
        assert code == 0
        data = json.loads(out)
        assert data["pass"] is True
        assert data["max_abs_dev"] < 1e-6
        assert len(data["cases"]) == 4  # three subsets + purity
        assert len(data["schmidt"]) == 2
        assert all(s["pass"] for s in data["schmidt"])

    def test_insufficient_cutoff_is_inconclusive(self, capsys):
        code, _, err = run_cli(
            capsys, "verify", "--etas", "0.2,0.3", "--ns", "0.5", "--cutoff", "10"
        )
        assert code == 2 and "inconclusive" in err

    def test_high_energy_is_inconclusive(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--etas", "0.2,0.3", "--ns", "3")
        assert code == 2 and "inconclusive" in err

    def test_explicit_ordering(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--etas", "0.2,0.3", "--ns", "0.2",
            "--ordering", "E,B2,B1",
        )
        assert code == 0 and json.loads(out)["pass"] is True

    def test_infinite_energy_rejected(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--etas", "0.2,0.3", "--ns", "inf")
        assert code == 1 and "finite" in err

    def test_csv_report(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--etas", "0.2,0.3", "--ns", "0.2", "--format", "csv"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "case,gaussian_bits,fock_bits,closed_form_bits,abs_dev,tail_mass,pass"
        assert len(lines) == 5
        assert all(line.endswith(",true") for line in lines[1:])


class TestUsageAndPrecision:
    def test_unknown_flag_named(self, capsys):
        code, _, err = run_cli(capsys, "region", "--etas", "0.2,0.3", "--bogus")
        assert code == 1 and "--bogus" in err

    def test_malformed_etas_named(self, capsys):
        code, _, err = run_cli(capsys, "region", "--etas", "a,b")
        assert code == 1 and "--etas" in err

    def test_malformed_ns(self, capsys):
        code, _, err = run_cli(capsys, "region", "--etas", "0.2,0.3", "--ns", "-3")
        assert code == 1 and "--ns" in err

    def test_precision_env_var(self, capsys, monkeypatch):
        monkeypatch.setenv("BBC_CAPACITY_PRECISION", "3")
        _, out, _ = run_cli(capsys, "region", "--etas", "0.2,0.3", "--format", "csv")
        assert "1,0.485\n" in out

    def test_bad_precision_env_var(self, capsys, monkeypatch):
        monkeypatch.setenv("BBC_CAPACITY_PRECISION", "fifty")
        code, _, err = run_cli(capsys, "region", "--etas", "0.2,0.3")
        assert code == 1 and "BBC_CAPACITY_PRECISION" in err
