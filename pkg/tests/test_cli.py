import json
import subprocess
import sys

import pytest

from friedlander import cli

# fast invocations of every subcommand; the heavy trace defaults are covered
# by the acceptance run
FAST = {
    "airy-zeros": ["airy-zeros", "--count", "12"],
    "spectrum": ["spectrum", "--emax", "60"],
    "bohr-sommerfeld": ["bohr-sommerfeld", "--mmax", "30", "--sector", "0.5,2"],
    "lengths": ["lengths", "--kmax", "20", "--lmax", "3"],
    "geodesic": ["geodesic", "--k", "3", "--ell", "2"],
    "geodesic-trajectory": ["geodesic", "--k", "2", "--ell", "1", "--emit-trajectory", "--samples", "8"],
    "trace": ["trace", "--cutoff", "10", "--tmin", "4", "--tmax", "6"],
    "trace-peaks": ["trace", "peaks", "--cutoff", "40", "--kmax", "40", "--lmax", "3"],
    "trace-asymmetry": ["trace", "asymmetry", "--cutoffs", "10,20", "--delta", "0.2"],
    "symbols": ["symbols", "--claim", "F:gamma2:cl:1", "--jmax", "1", "--kmax", "1"],
    "poisson-check": ["poisson-check"],
}


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(FAST))
def test_subcommand_is_deterministic(name, capsys):
    code1, out1, _ = run(FAST[name], capsys)
    code2, out2, _ = run(FAST[name], capsys)
    assert code1 == 0 and code2 == 0
    assert out1 == out2
    assert out1.startswith("# config: ")


def test_airy_zeros_csv_content(capsys):
    _, out, _ = run(["airy-zeros", "--count", "3"], capsys)
    _, table = cli.load_table_text(out)
    assert table.columns[:2] == ["m", "t_m"]
    assert table.rows[0][1] == pytest.approx(2.3381074104597670, abs=5e-15)
    # 17 significant digits survive the round trip
    assert table.rows[0][1] == cli.zero_table(3).zeros[0]
    assert "2.3381074104597648" in out


def test_json_output(capsys):
    _, out, _ = run(["lengths", "--kmax", "3", "--lmax", "2", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["config"]["kmax"] == 3
    assert [(r["k"], r["ell"]) for r in doc["rows"]][:3] == [(1, 1), (2, 1), (3, 1)]
    assert doc["meta"]["gap_below_1"] > 0


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_from_file_round_trip(fmt, tmp_path, capsys):
    ref = tmp_path / f"ref.{fmt}"
    argv = ["spectrum", "--emax", "40", "--format", fmt]
    assert cli.main(argv + ["--out", str(ref)]) == 0
    code, out, _ = run(argv + ["--from-file", str(ref)], capsys)
    report = json.loads(out)
    assert code == 0 and report["match"] and report["config_match"]


def test_from_file_detects_mismatch(tmp_path, capsys):
    ref = tmp_path / "ref.csv"
    cli.main(["spectrum", "--emax", "40", "--out", str(ref)])
    text = ref.read_text().replace("3.3381074104597648", "3.3381074104597652", 1)
    ref.write_text(text)
    code, out, _ = run(["spectrum", "--emax", "40", "--from-file", str(ref)], capsys)
    report = json.loads(out)
    assert code == 1 and not report["match"] and report["mismatches"] >= 1
    code, out, _ = run(["spectrum", "--emax", "40", "--from-file", str(ref), "--rtol", "1e-12"], capsys)
    assert code == 0


def test_usage_errors_exit_2(capsys):
    for argv in (["spectrum"], ["geodesic", "--k", "0", "--ell", "1"], ["nosuch"], ["trace", "--sector", "7"]):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


def test_numerical_errors_exit_1(capsys):
    code, out, err = run(["trace", "--cutoff", "50", "--dt", "0.5"], capsys)
    assert code == 1 and out == "" and err.startswith("error:")
    code, _, err = run(["symbols", "--claim", "F:gamma9:1,1"], capsys)
    assert code == 1 and "error:" in err
    code, _, err = run(["poisson-check", "--A", "1,0,-1"], capsys)
    assert code == 1


def test_zeros_cache(tmp_path, capsys):
    cache = tmp_path / "z.csv"
    _, a, _ = run(["airy-zeros", "--count", "20", "--zeros-cache", str(cache)], capsys)
    assert cache.exists()
    _, b, _ = run(["airy-zeros", "--count", "20", "--zeros-cache", str(cache)], capsys)
    assert a == b


def test_console_script_in_fresh_processes():
    cmd = [sys.executable, "-m", "friedlander", "geodesic", "--k", "1", "--ell", "1"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and b"5.383482315316" in a
