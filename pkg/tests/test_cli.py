import json
from pathlib import Path

import pytest

from timeop import checks as ck
from timeop.cli import InputError, main, parse_scenario

FIXTURES = sorted((Path(__file__).resolve().parents[1] / "fixtures").glob("*.json"))


@pytest.mark.parametrize("path", FIXTURES, ids=[p.stem for p in FIXTURES])
def test_fixture_runs_and_is_reproducible(path, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(path), "--out", str(a)]) == 0
    assert main(["run", str(path), "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    assert any(f.endswith("_report.json") for f in files)
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    report = json.loads(next(a.glob("*_report.json")).read_text())
    assert report["passed"] is True


def test_malformed_json_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "name": "x",\n  "kind": "discrete",,\n}\n')
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:3:" in err


@pytest.mark.parametrize(
    "text",
    [
        '{"kind": "discrete"}',
        '{"name": "x", "kind": "teleport"}',
        '{"name": "x", "kind": "discrete", "colour": 1}',
        '{"name": "x", "kind": "discrete", "parameters": {"levels": 3}}',
        '{"name": "x", "kind": "discrete", "parameters": {"warp": 3}}',
        '{"name": "x", "kind": "kg", "parameters": {"seed": 1.5}}',
        '{"name": "x", "kind": "discrete", "tolerances": {"nonsense": 1}}',
        '[1, 2]',
    ],
)
def test_invalid_scenarios(text):
    with pytest.raises(InputError):
        parse_scenario(text)


def test_missing_file_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_bad_tolerance_override(tmp_path):
    assert main(["run", str(FIXTURES[0]), "--tol", "bogus=1", "--out", str(tmp_path)]) == 2
    assert main(["run", str(FIXTURES[0]), "--tol", "discrete_quad=abc", "--out", str(tmp_path)]) == 2


def test_tight_tolerance_fails_run(tmp_path):
    kg = next(p for p in FIXTURES if p.stem == "kg_packets")
    assert main(["run", str(kg), "--tol", "kg_equiv=1e-30", "--out", str(tmp_path)]) == 1


def test_threads_must_be_positive():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "discrete", "--threads", "0"])
    assert exc.value.code == 2


def test_verify_discrete_suite(tmp_path, capsys):
    assert main(["verify", "discrete", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "XFAIL" in out
    data = json.loads((tmp_path / "verify_discrete.json").read_text())
    assert {c["name"] for c in data["checks"]} >= {"poincare_period", "two_level_both_sides"}


def test_registry_is_complete():
    assert ck.registry_complete()
    names = set()
    for suite in ck.SUITES:
        names |= {c.name for c in ck.run_suite(suite, ck.DEFAULT_TOLERANCES)}
    assert names == set(ck.INVARIANTS)
