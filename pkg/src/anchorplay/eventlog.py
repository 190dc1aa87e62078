"""JSONL event-log writer.

Line 1 is a ``Scenario`` record describing the run (mode, tick, markers,
radii). Every tick then contributes its events in emission order followed by
one ``Truth`` record with all agents' ground-truth positions and speeds at the
end of the tick. All records share the fields ``t``, ``agent``, ``kind`` and
``payload``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterator, Sequence

from . import __version__
from .scenario import ScenarioConfig
from .sim import SimEvent, Trace


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


def scenario_record(config: ScenarioConfig) -> dict:
    return {
        "t": 0.0,
        "agent": None,
        "kind": "Scenario",
        "payload": {
            "version": __version__,
            "mode": config.mode.value,
            "seed": config.seed,
            "tick_dt": config.tick_dt,
            "n_ticks": config.n_ticks,
            "n_agents": config.n_agents,
            "v_eps": config.v_eps,
            "crowd_radius": config.crowd_radius,
            "contact_radius": config.contact_radius,
            "markers": [{"id": m.id, "position": list(m.position)} for m in config.markers],
        },
    }


def event_record(event: SimEvent) -> dict:
    return {"t": event.t, "agent": event.agent, "kind": event.kind.value, "payload": event.payload}


def iter_lines(config: ScenarioConfig, events: Sequence[SimEvent], trace: Trace | None) -> Iterator[str]:
    yield _dumps(scenario_record(config))
    i = 0
    n = len(events)
    while i < n and events[i].tick == 0:
        yield _dumps(event_record(events[i]))
        i += 1
    if trace is None:
        for e in events[i:]:
            yield _dumps(event_record(e))
        return
    positions = trace.positions.tolist()
    speeds = trace.speeds.tolist()
    times = trace.times.tolist()
    for k in range(1, len(times) + 1):
        while i < n and events[i].tick == k:
            yield _dumps(event_record(events[i]))
            i += 1
        yield _dumps({"t": times[k - 1], "agent": None, "kind": "Truth",
                      "payload": {"pos": positions[k - 1], "speed": speeds[k - 1]}})
    for e in events[i:]:
        yield _dumps(event_record(e))


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_event_log(path: Path, config: ScenarioConfig, events: Sequence[SimEvent],
                    trace: Trace | None) -> None:
    atomic_write_text(path, "\n".join(iter_lines(config, events, trace)) + "\n")


def write_json(path: Path, data) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n")
