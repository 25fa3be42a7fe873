import csv
import json
import math

import pytest

from wfield_ucc.cli import main
from wfield_ucc.experiments import CSV_COLUMNS

SMALL = """
[experiment]
id = small
L = 4
u_grid = 0, 1
sectors = {sectors}
trotter_steps = 1

[optimizer]
max_iterations = {iters}
restarts = 0
"""


def write_cfg(tmp_path, sectors="1, 2", iters=2000, u_grid=None):
    text = SMALL.format(sectors=sectors, iters=iters)
    if u_grid is not None:
        text = text.replace("u_grid = 0, 1", f"u_grid = {u_grid}")
    path = tmp_path / "small.ini"
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_writes_csv_and_json(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    rows = read_csv(tmp_path / "a" / "small_spectrum.csv")
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    # C(4,1) + C(4,2) patterns per coupling
    assert len(rows) == 2 * (4 + 6)
    assert all(r["method"] == "projection" and r["wallclock_ms"] == "" for r in rows)
    payload = json.loads((tmp_path / "a" / "small_spectrum.json").read_text())
    assert payload["config"]["L"] == 4 and len(payload["rows"]) == len(rows)


def test_spectrum_is_byte_identical_across_runs(tmp_path):
    cfg = write_cfg(tmp_path)
    main(["spectrum", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "4"])
    main(["spectrum", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "4", "--jobs", "2"])
    a = (tmp_path / "a" / "small_spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "small_spectrum.csv").read_bytes()


def test_empty_u_grid_gives_header_only(tmp_path):
    cfg = write_cfg(tmp_path, u_grid="")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "small_spectrum.csv") == []


def test_gaps_at_full_filling_are_error_rows(tmp_path):
    cfg = write_cfg(tmp_path, sectors="2, 4")
    assert main(["gaps", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "small_gaps.csv")
    edge = [r for r in rows if r["N"] == "4" and r["pattern"] != "neutral"]
    assert edge and all(r["method"] == "error" and r["energy"] == "" for r in edge)
    mid = [r for r in rows if r["N"] == "2" and r["U"] == "0.0"]
    assert {r["pattern"] for r in mid} == {"neutral", "g_plus", "g_minus", "g"}
    for r in mid:
        assert math.isfinite(float(r["energy"]))
        if r["pattern"] != "neutral":
            assert float(r["abs_error"]) < 1e-6


def test_strict_flags_unconverged(tmp_path):
    cfg = write_cfg(tmp_path, iters=1)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path), "--strict"]) == 1


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nL = 4\ncolour = blue\n")
    assert main(["spectrum", "--config", str(bad)]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["gaps", "--config", str(tmp_path / "missing.ini")]) == 2


def test_validate_writes_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    code = main(["validate", "--config", cfg, "--out", str(tmp_path)])
    report = json.loads((tmp_path / "small_validate.json").read_text())
    assert code == (0 if report["passed"] else 1)
    names = {c["name"] for c in report["checks"]}
    assert {"unitarity", "projection_equivalence", "oracle_reconstruction", "linearity"} <= names
    out = capsys.readouterr().out
    assert out.count("PASS") + out.count("FAIL") == len(report["checks"])


def test_subcommand_required():
    with pytest.raises(SystemExit):
        main([])
