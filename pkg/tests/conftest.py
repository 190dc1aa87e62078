import dataclasses

import pytest

from anchorplay.eventlog import iter_lines
from anchorplay.scenario import Mode, standard_scenario
from anchorplay.sim import run_scenario


def short_config(seed=3, mode=Mode.ANCHORPLAY, duration=40.0, **kw):
    return dataclasses.replace(standard_scenario(seed), mode=mode, duration=duration, **kw)


@pytest.fixture(scope="session")
def short_runs():
    """One 40 s run per mode, shared across modules."""
    out = {}
    for mode in Mode:
        cfg = short_config(mode=mode)
        res = run_scenario(cfg)
        out[mode] = (cfg, res, list(iter_lines(cfg, res.events, res.trace)))
    return out


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
