"""CLI subcommands: run, replay, and usage errors."""

import json
from pathlib import Path

import pytest

from townsim.cli import main

DATA = Path(__file__).parent / "data"


def test_run_writes_report_with_pass_rate(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main(
        [
            "run",
            "--task", str(DATA / "buy_chicken.task.json"),
            "--backend", "scripted-v1",
            "--report", str(report_path),
            "--logs", str(tmp_path / "logs"),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["task_id"] == "buy-chicken"
    assert report["pass_rate"] == 1.0
    assert report["backend_calls_total"] > 0
    out = capsys.readouterr().out
    assert "[PASS] buy-chicken seed=1" in out
    assert "pass_rate 1.0" in out
    log_file = Path(report["episodes"][0]["log"])
    assert log_file.exists()


def test_run_seed_base_override(tmp_path):
    report_path = tmp_path / "report.json"
    code = main(
        [
            "run",
            "--task", str(DATA / "buy_chicken.task.json"),
            "--seed-base", "100",
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert [e["seed"] for e in report["episodes"]] == [100]


def test_run_missing_task_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["run"])
    assert exit_info.value.code == 2
    assert "--task" in capsys.readouterr().err


def test_run_unknown_backend_override_is_typed_error(tmp_path, capsys):
    code = main(
        [
            "run",
            "--task", str(DATA / "buy_chicken.task.json"),
            "--backend", "gpt9",
            "--report", str(tmp_path / "r.json"),
        ]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_replay_reprints_event_stream(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    main(
        [
            "run",
            "--task", str(DATA / "buy_chicken.task.json"),
            "--report", str(report_path),
            "--logs", str(tmp_path / "logs"),
        ]
    )
    log = json.loads(report_path.read_text())["episodes"][0]["log"]
    capsys.readouterr()
    code = main(["replay", "--log", log])
    assert code == 0
    out = capsys.readouterr().out
    assert "[tick 0 #0] system building_placed" in out
    assert "purchase" in out
    assert "episode_end" in out


def test_replay_missing_file(capsys):
    code = main(["replay", "--log", "/nonexistent/events.jsonl"])
    assert code == 1
    assert "no such log" in capsys.readouterr().err


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as exit_info:
        main([])
    assert exit_info.value.code == 2


def test_serve_world_loader_reads_config_dir():
    from townsim.cli import _load_serve_world

    config, world_map = _load_serve_world(DATA / "world")
    assert config.equipment[1].kind == "counter"
    assert world_map.width == 12
    assert world_map.placements[0].building_id == 1
