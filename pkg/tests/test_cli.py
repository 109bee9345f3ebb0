import json
import subprocess
import sys
from pathlib import Path

import pytest

from kpfay import SolutionSpec, dumps, load_config, parse_config, vacuum_tau
from kpfay.cli import comparable, describe, main, run, summary_text
from kpfay.config import WORKERS_ENV

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL_JET = """
N = 2
J = 3
d = 3
S_box = 1
solution.kind = jet
checks = signs, fay, limits, prop2, prop3, sato, algebra, negative_controls
"""


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def test_soliton_run_exits_zero(tmp_path, capsys):
    code = main(["verify", "--config", str(CONFIGS / "soliton_n1.conf"), "--report", str(tmp_path / "r")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("exit 0")
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload["schema"] == "kpfay-report/1"
    assert payload["exit_code"] == 0
    assert (tmp_path / "r.txt").read_text() == out


def test_narrow_band_reports_overflow():
    code, payload = run(load_config(CONFIGS / "narrow_band.conf"))
    assert code == 1
    records = payload["suites"]["lax"]["records"]
    assert any("BandOverflow" in r.get("message", "") for r in records)


def test_unobtainable_tau_exits_two(tmp_path, capsys):
    cfg = write(tmp_path / "c.conf", "N = 4\nd = 1\nJ = 1\nsolution.kind = jet\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    code, payload = run(load_config(cfg))
    assert code == 2
    assert payload["error"].startswith("Inconsistent")
    assert "could not obtain tau" in summary_text(payload)


def test_bad_config_exits_two(tmp_path, capsys):
    cfg = write(tmp_path / "c.conf", "N = 2\nN = 2\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "ConfigInvalid" in capsys.readouterr().err


def test_describe_constant_tau(tmp_path, capsys):
    path = write(tmp_path / "vac.tau", dumps(vacuum_tau(SolutionSpec("vacuum", n=3, d=2, J=2, radius=1))))
    assert main(["describe", str(path)]) == 0
    assert "all charges: 1" in capsys.readouterr().out


def test_describe_truncated_file(tmp_path, capsys):
    text = dumps(vacuum_tau(SolutionSpec("vacuum", n=2, d=2, J=2, radius=1)))
    path = write(tmp_path / "cut.tau", text[: len(text) // 2])
    assert main(["describe", str(path)]) == 2
    err = capsys.readouterr().err
    assert "ParseError" in err and "line" in err


def test_describe_jet(jet3):
    text = describe(jet3)
    assert "(0, 0, 0): degree" in text
    assert "all charges" not in text


def test_solve_then_verify_round_trip(tmp_path, capsys):
    conf = write(tmp_path / "jet.conf", SMALL_JET)
    out = tmp_path / "jet.tau"
    assert main(["solve", "--config", str(conf), "--out", str(out)]) == 0
    replay = write(tmp_path / "replay.conf", SMALL_JET.replace("solution.kind = jet", "input = jet.tau"))
    code_a, direct = run(load_config(conf))
    code_b, replayed = run(load_config(replay))
    assert code_a == code_b == 0
    assert direct["suites"] == replayed["suites"]
    assert direct["negative_controls"] == replayed["negative_controls"]


def test_input_with_the_wrong_component_count(tmp_path):
    write(tmp_path / "vac.tau", dumps(vacuum_tau(SolutionSpec("vacuum", n=2, d=2, J=2, radius=1))))
    conf = write(tmp_path / "c.conf", "N = 3\ninput = vac.tau\n")
    code, payload = run(load_config(conf))
    assert code == 2


def test_reports_do_not_depend_on_workers(monkeypatch):
    cfg = parse_config(SMALL_JET)
    monkeypatch.setenv(WORKERS_ENV, "1")
    _, one = run(cfg)
    monkeypatch.setenv(WORKERS_ENV, "2")
    _, two = run(cfg)
    assert two["timings"]["workers"] == 2
    assert comparable(one) == comparable(two)


def test_every_negative_control_is_caught():
    code, payload = run(parse_config(SMALL_JET))
    assert code == 0
    verdicts = {r["params"]["suite"]: r["status"] for r in payload["negative_controls"]}
    assert set(verdicts) == {"signs", "fay", "limits", "prop2", "prop3", "sato", "algebra"}
    # prop3 needs charges two steps out: nothing to fault inside radius 1
    assert payload["suites"]["prop3"]["counts"] == {"OutsideWindow": 6}
    assert verdicts.pop("prop3") == "SkippedInsufficientN"
    assert set(verdicts.values()) == {"pass"}


def test_console_module_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "kpfay", "--version"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("kpfay ")


def test_missing_verb_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
