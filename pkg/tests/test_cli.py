import json

import pytest

from dirmoments.cli import ConfigError, main, resolve, resolve_jobs


def test_polys_prints_coefficients(tmp_path, capsys):
    assert main(["polys", "--k", "3", "--l", "3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "1479, -8343, 19764, -25452, 19278, -8694, 2268, -324, 27, -2" in out
    assert "w33_symmetric_sum_42: holds" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and rep["config"]["k"] == 3


def test_polys_44_reports_failing_literal_identity(tmp_path):
    assert main(["polys", "--k", "4", "--l", "4", "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "report.json").read_text())
    ids = rep["suites"][0]["metrics"]["identities"]
    assert ids["w44_at_2"] is False and ids["w44_at_2_doubled_is_g4"] is True


def test_adc_csv_layout_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["adc", "--X", "1e3", "--r", "1..4", "--out", str(d)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    raw = (a / "tables" / "adc.csv").read_bytes()
    assert b"\r" not in raw
    header = raw.decode().splitlines()[0].split(",")
    assert header[:2] == ["X", "r"] and header[-1] == "relative"
    assert len(raw.decode().splitlines()) == 5


def test_config_layering(tmp_path):
    cfg = {"seed": 4, "adc": {"X": [1e3], "r": "1..3"}, "moment": {"eta": 0.1}}
    assert resolve("adc", {"r": "2,5"}, cfg)["r"] == "2,5"
    res = resolve("adc", {}, cfg)
    assert res["X"] == [1e3] and res["seed"] == 4 and res["r"] == "1..3"
    with pytest.raises(ConfigError):
        resolve("adc", {}, {"nonsense": 1})
    with pytest.raises(ConfigError):
        resolve("adc", {}, {"adc": {"eta": 0.1}})
    with pytest.raises(ConfigError):
        resolve("polys", {"k": "two"}, None)


def test_jobs_fallback(monkeypatch):
    monkeypatch.setenv("DM_JOBS", "3")
    assert resolve_jobs(None) == 3
    assert resolve_jobs(2) == 2
    assert resolve_jobs(None, 5) == 5
    monkeypatch.setenv("DM_JOBS", "x")
    with pytest.raises(ConfigError):
        resolve_jobs(None)


def test_exit_codes(tmp_path, capsys):
    assert main(["nonexistent"]) == 2
    assert main(["adc", "--r", "0..2", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["polys", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["h-check", "--R", "2000", "--Q", "2000", "--out", str(tmp_path)]) == 0
