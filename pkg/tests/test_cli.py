"""CLI driver: flag handling, exit codes, stats records, subcommands."""

import json

import pytest

from classgroup import oracle
from classgroup.classnumber import WindowViolation
from classgroup.cli import (
    EXIT_CONFIG, EXIT_MISMATCH, EXIT_OK, EXIT_WINDOW, _parse_family, main,
)
from classgroup.elimination import EliminationError
from classgroup.forms import is_fundamental
from classgroup.sieve import CollectBudget, SieveError


def test_compute_minus_23(capsys):
    assert main(["compute", "--delta", "-23"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Cl(-23) = C(3)" in out
    assert "h = 3, certified in [" in out


def test_compute_trivial_group(capsys):
    assert main(["compute", "--delta", "-4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Cl(-4) = trivial" in out and "h = 1" in out


def test_parse_family():
    assert _parse_family("6") == -4 * (10**6 + 1)
    assert _parse_family("10^6+1") == -4 * (10**6 + 1)
    assert _parse_family(" 10^3+1 ") == -4004
    with pytest.raises(ValueError):
        _parse_family("0")


def test_compute_family_flag(capsys):
    assert main(["compute", "--delta-family", "1"]) == EXIT_OK
    first = capsys.readouterr().out
    assert f"Cl(-44) = " in first
    want = oracle.group_structure(-44)
    got = first.split("= ", 1)[1].splitlines()[0]
    assert got == " x ".join(f"C({d})" for d in want)
    assert main(["compute", "--delta-family", "10^1+1"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == first.splitlines()[0]


def test_delta_flags_are_exclusive_and_required():
    with pytest.raises(SystemExit) as e:
        main(["compute"])
    assert e.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["compute", "--delta", "-23", "--delta-family", "1"])
    assert e.value.code == EXIT_CONFIG


def test_bad_delta_rejected():
    with pytest.raises(SystemExit) as e:
        main(["compute", "--delta", "-5"])
    assert e.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["compute", "--delta", "23"])
    assert e.value.code == EXIT_CONFIG


def test_fb_size_and_b1_are_alternatives(capsys):
    rc = main(["compute", "--delta", "-23", "--fb-size", "5", "--b1", "50"])
    assert rc == EXIT_CONFIG
    assert "bad configuration" in capsys.readouterr().err


def test_no_command():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_CONFIG


def test_pipeline_failures_map_to_exit_codes(capsys, monkeypatch):
    def boom(exc):
        def _raise(*a, **k):
            raise exc
        return _raise

    monkeypatch.setattr("classgroup.cli.group_structure",
                        boom(WindowViolation("h = 9 outside [4, 8)")))
    assert main(["compute", "--delta", "-23"]) == EXIT_WINDOW
    assert "window violation" in capsys.readouterr().err

    monkeypatch.setattr("classgroup.cli.group_structure",
                        boom(EliminationError("surplus exhausted")))
    assert main(["compute", "--delta", "-23"]) == EXIT_WINDOW

    monkeypatch.setattr("classgroup.cli.group_structure",
                        boom(SieveError("factor base empty")))
    assert main(["compute", "--delta", "-23"]) == EXIT_CONFIG

    monkeypatch.setattr("classgroup.cli.group_structure",
                        boom(CollectBudget("budget exhausted")))
    assert main(["compute", "--delta", "-23"]) == EXIT_CONFIG


def test_stats_records(tmp_path, capsys):
    path = tmp_path / "stats.jsonl"
    assert main(["compute", "--delta", "-3299", "--stats", str(path)]) == 0
    capsys.readouterr()
    records = [json.loads(line) for line in path.read_text().splitlines()]
    kinds = [r["record"] for r in records]
    for kind in ("config", "hstar", "collect", "eliminate", "class_number",
                 "result", "timings"):
        assert kind in kinds
    result = next(r for r in records if r["record"] == "result")
    assert result["delta"] == -3299 and result["h"] == 27
    assert result["divisors"] == [3, 9]


def test_stats_deterministic_modulo_timings(tmp_path, capsys):
    lines = []
    for name in ("a.jsonl", "b.jsonl"):
        path = tmp_path / name
        assert main(["compute", "--delta", "-3299", "--seed", "3",
                     "--stats", str(path)]) == EXIT_OK
        lines.append([ln for ln in path.read_text().splitlines()
                      if json.loads(ln)["record"] != "timings"])
    capsys.readouterr()
    assert lines[0] == lines[1]


def test_tune_tolerance_grid(tmp_path, capsys):
    path = tmp_path / "stats.jsonl"
    rc = main(["tune", "--delta", "-3299", "--t-grid", "2.0,3.0",
               "--seeds", "1,2", "--stats", str(path)])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "tune tolerance on delta=-3299" in out
    assert "best: tolerance = " in out
    points = [json.loads(ln) for ln in path.read_text().splitlines()]
    assert [p["value"] for p in points if p["record"] == "tune_point"] \
        == [2.0, 3.0]
    for p in points:
        if p["record"] == "tune_point":
            assert len(p["seconds"]) == 2 and p["error"] is None


def test_tune_requires_exactly_one_grid():
    with pytest.raises(SystemExit) as e:
        main(["tune", "--delta", "-23"])
    assert e.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["tune", "--delta", "-23", "--t-grid", "2.0",
              "--ratio-grid", "12,120"])
    assert e.value.code == EXIT_CONFIG


def test_tune_rejects_empty_grid():
    with pytest.raises(SystemExit) as e:
        main(["tune", "--delta", "-23", "--t-grid", ","])
    assert e.value.code == EXIT_CONFIG


def test_verify_small_range(capsys):
    assert main(["verify", "--verify-range", "3:40"]) == EXIT_OK
    out = capsys.readouterr().out
    count = sum(1 for d in range(3, 41) if is_fundamental(-d))
    assert f"verified {count} fundamental discriminants in [3, 40]: " \
           f"0 mismatches" in out


def test_verify_empty_range(capsys):
    assert main(["verify", "--verify-range", "40:30"]) == EXIT_OK
    assert "verified 0 fundamental" in capsys.readouterr().out


def test_verify_sample(capsys):
    assert main(["verify", "--verify-range", "3:200", "--sample", "5"]) \
        == EXIT_OK
    assert "verified 5 fundamental" in capsys.readouterr().out


def test_verify_bad_ranges():
    for bad in ("abc", "3:abc", "-5:40", "0:99999999999"):
        with pytest.raises(SystemExit) as e:
            main(["verify", "--verify-range", bad])
        assert e.value.code == EXIT_CONFIG


def test_verify_mismatch_exit_code(capsys, monkeypatch, tmp_path):
    monkeypatch.setattr("classgroup.cli.oracle_structure", lambda d: [999])
    path = tmp_path / "stats.jsonl"
    rc = main(["verify", "--verify-range", "3:15", "--stats", str(path)])
    assert rc == EXIT_MISMATCH
    out = capsys.readouterr().out
    assert "MISMATCH delta=" in out
    summary = json.loads(path.read_text().splitlines()[-1])
    assert summary["record"] == "verify_summary"
    assert summary["mismatches"] == summary["checked"] > 0


def test_compute_relations_flag(tmp_path, capsys):
    path = tmp_path / "rels.txt"
    assert main(["compute", "--delta", "-3299",
                 "--relations", str(path)]) == EXIT_OK
    capsys.readouterr()
    assert path.exists() and path.stat().st_size > 0
