import json

import pytest

from anchorplay.audit import LogFormatError, audit_events, check_trace
from anchorplay.cli import cmd_trace_check
from anchorplay.scenario import Mode
from corrupt import alter_truth, duplicate_disable, insert_enable_while_moving, reorder_times


def metrics_of(res):
    return json.loads(json.dumps(res.metrics.to_dict()))


def write(tmp_path, lines, metrics=None, name="events.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    if metrics is not None:
        (tmp_path / "metrics.json").write_text(json.dumps(metrics))
    return path


def test_clean_logs_pass_and_recount_matches(short_runs):
    for mode in Mode:
        cfg, res, lines = short_runs[mode]
        report = audit_events(lines, metrics_of(res))
        assert report.ok, report.first_problem
        assert report.recount["camera_duty_cycle"] == res.metrics.camera_duty_cycle
        assert report.recount["crowding"]["pushes_proxy"] == res.metrics.crowding.pushes_proxy


def test_inserted_enable_while_moving_is_reported_at_its_line(short_runs, tmp_path, capsys):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    bad, lineno = insert_enable_while_moving(lines)
    report = audit_events(bad, metrics_of(res))
    assert not report.ok
    assert report.first_problem.startswith(f"line {lineno}:")
    assert cmd_trace_check(write(tmp_path, bad, metrics_of(res))) == 3
    assert f"line {lineno}" in capsys.readouterr().err


def test_duplicate_disable_fails(short_runs):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    bad, lineno = duplicate_disable(lines)
    report = audit_events(bad, metrics_of(res))
    assert report.first_problem.startswith(f"line {lineno}:")


def test_reordered_times_fail(short_runs):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    bad, lineno = reorder_times(lines)
    report = audit_events(bad, metrics_of(res))
    assert any(n == lineno and "backwards" in msg for n, msg in report.problems)


def test_altered_truth_breaks_recount(short_runs):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    bad, _ = alter_truth(lines)
    report = audit_events(bad, metrics_of(res))
    assert not report.ok
    assert any("crowding" in msg for _, msg in report.problems)


def test_malformed_json_is_a_format_error(short_runs, tmp_path):
    _, _, lines = short_runs[Mode.ANCHORPLAY]
    bad = list(lines)
    bad[10] = bad[10][:-5]
    with pytest.raises(LogFormatError) as err:
        audit_events(bad)
    assert err.value.line == 11
    assert cmd_trace_check(write(tmp_path, bad)) == 2


def test_metrics_mismatch_fails(short_runs):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    m = metrics_of(res)
    m["rewards_collected"] += 1
    assert not audit_events(lines, m).ok


def test_truncated_log_misses_ticks(short_runs):
    _, _, lines = short_runs[Mode.ANCHORPLAY]
    report = audit_events(lines[:-50])
    assert any("Truth records" in msg for _, msg in report.problems)


def test_baseline_losses_are_allowed(short_runs):
    _, res, lines = short_runs[Mode.BASELINE]
    assert res.metrics.tracking_loss_events > 0
    assert audit_events(lines).ok


def test_header_required():
    with pytest.raises(LogFormatError):
        audit_events(['{"t": 0.0, "agent": 0, "kind": "Reward", "payload": {}}'])
    with pytest.raises(LogFormatError):
        audit_events([])
    with pytest.raises(LogFormatError):
        audit_events(['{"t": 0.0, "agent": 0, "kind": "Teleport", "payload": {}}'])


def test_check_trace_reads_sibling_metrics(short_runs, tmp_path):
    _, res, lines = short_runs[Mode.ANCHORPLAY]
    m = metrics_of(res)
    m["exclusion_violations"] = 5
    path = write(tmp_path, lines, m)
    assert not check_trace(path).ok
    good = tmp_path / "good.json"
    good.write_text(json.dumps(metrics_of(res)))
    assert check_trace(path, metrics_path=good).ok
