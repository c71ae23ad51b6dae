import json

import numpy as np
import pytest

from app.core.config import get_settings
from app.core.exceptions import ConfigError, StorageError
from app.db.files import (
    atomic_write,
    check_snapshot_size,
    load_config,
    make_header,
    read_metrics,
    read_trajectory,
    snapshots_from_rows,
    write_metrics,
    write_oracle_grid,
    write_report,
    write_trajectory,
)
from app.models.particles import ParticleState
from app.models.run_config import RunConfig
from app.models.scenario import CheckReport, ReportFormat, VerifyReport


def _snapshots():
    a = ParticleState(points=[[1.0, 0.0], [0.0, 1.0], [np.sqrt(0.5), np.sqrt(0.5)]])
    b = a.advanced([[0.0, 1.0], [-1.0, 0.0], [0.6, 0.8]], dt=0.1, ds=0.05)
    return [a, b]


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write(target, "первый")
    atomic_write(target, b"second")
    assert target.read_bytes() == b"second"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_atomic_write_reports_storage_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(StorageError):
        atomic_write(blocker / "child.txt", "data")


def test_trajectory_round_trip(tmp_path):
    path = tmp_path / "traj.csv"
    snaps = _snapshots()
    digest = write_trajectory(path, snaps, make_header("trajectory", {"beta": 1.0}, seed=3))
    header, data = read_trajectory(path)
    assert header["content_hash"] == digest
    assert header["seed"] == 3 and header["config"] == {"beta": 1.0}
    assert header["rows"] == 6
    restored = snapshots_from_rows(data)
    assert [s.step for s in restored] == [0, 1]
    assert restored[1].time == pytest.approx(0.1)
    # %.17g сохраняет числа без потерь
    np.testing.assert_array_equal(restored[1].points, snaps[1].points)


def test_trajectory_hash_detects_tampering(tmp_path):
    path = tmp_path / "traj.csv"
    write_trajectory(path, _snapshots(), make_header("trajectory"))
    text = path.read_text(encoding="utf-8")
    last = "1" if text[-2] != "1" else "2"
    path.write_text(text[:-2] + last + "\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_trajectory(path)


def test_trajectory_schema_mismatch(tmp_path):
    path = tmp_path / "traj.csv"
    write_trajectory(path, _snapshots(), make_header("trajectory"))
    first, rest = path.read_text(encoding="utf-8").split("\n", 1)
    header = json.loads(first[2:])
    header["schema"] = "v0"
    path.write_text("# " + json.dumps(header) + "\n" + rest, encoding="utf-8")
    with pytest.raises(ConfigError):
        read_trajectory(path)


def test_trajectory_requires_snapshots(tmp_path):
    with pytest.raises(ConfigError):
        write_trajectory(tmp_path / "traj.csv", [], make_header("trajectory"))


def test_load_config(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"scenario": "1a", "beta": 5.0}), encoding="utf-8")
    assert load_config(good, RunConfig).beta == 5.0

    broken = tmp_path / "broken.json"
    broken.write_text("{scenario: 1a", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken, RunConfig)

    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({"scenario": "custom", "d": 2}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(invalid, RunConfig)

    with pytest.raises(StorageError):
        load_config(tmp_path / "missing.json", RunConfig)


def test_snapshot_size_warning(monkeypatch):
    assert not check_snapshot_size(10, 3, 5)
    monkeypatch.setenv("TOKENFLOW_SNAPSHOT_WARN_BYTES", "1000")
    get_settings.cache_clear()
    assert check_snapshot_size(10, 3, 5)


def test_metrics_round_trip_and_kind(tmp_path):
    path = tmp_path / "metrics.json"
    write_metrics(path, {"energy": [{"t": 0.0, "value": 1.5}]}, make_header("metrics", seed=1))
    header, series = read_metrics(path)
    assert header["seed"] == 1
    assert series["energy"][0]["value"] == 1.5

    wrong = tmp_path / "wrong.json"
    write_metrics(wrong, {}, make_header("trajectory"))
    with pytest.raises(ConfigError):
        read_metrics(wrong)


def test_oracle_grid_layout(tmp_path):
    path = tmp_path / "oracle.csv"
    grid = np.linspace(0, 2 * np.pi, 4, endpoint=False)
    write_oracle_grid(path, [0.0, 0.5], grid, [np.ones(4), 2 * np.ones(4)], make_header("oracle"))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1] == "t,theta,density"
    assert len(lines) == 2 + 8
    assert lines[-1].startswith("0.5,")


def test_write_report_formats(tmp_path):
    report = VerifyReport(seed=1, threads=1, checks=[
        CheckReport(check_id="ok_check", passed=True, values={"x": 1.0}),
        CheckReport(check_id="bad_check", passed=False, message="слишком медленно"),
    ])
    written = write_report(tmp_path, report, [ReportFormat.MARKDOWN, ReportFormat.HTML])
    assert sorted(p.name for p in written) == ["report.html", "report.json", "report.md"]

    doc = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert doc["passed"] is False
    assert doc["failed"] == ["bad_check"]
    assert "bad_check" in (tmp_path / "report.md").read_text(encoding="utf-8")
    assert "<table>" in (tmp_path / "report.html").read_text(encoding="utf-8")


def test_write_report_always_writes_json(tmp_path):
    written = write_report(tmp_path, VerifyReport(seed=0, threads=1), [])
    assert [p.name for p in written] == ["report.json"]
