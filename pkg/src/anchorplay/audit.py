"""Stand-alone event-log auditor.

Re-derives everything it checks from the log itself: camera command
alternation, the camera/motion exclusion (from the per-tick ``Truth``
snapshots), reward uniqueness per camera session, and the run metrics
(duty cycle, losses, rewards, crowding), which it then compares against
``metrics.json``. Deliberately shares no code with the simulator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

KINDS = {"Scenario", "Truth", "StateChange", "CameraEnable", "CameraDisable", "CueEmit",
         "StepDetected", "SearchMiss", "TrackingLoss", "Reward", "NearCollision"}
FLOAT_TOL = 1e-12


class LogFormatError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class AuditReport:
    problems: list[tuple[int, str]] = field(default_factory=list)
    recount: dict = field(default_factory=dict)
    lines: int = 0

    @property
    def ok(self) -> bool:
        return not self.problems

    def fail(self, line: int, message: str) -> None:
        self.problems.append((line, message))

    @property
    def first_problem(self) -> Optional[str]:
        if not self.problems:
            return None
        line, msg = min(self.problems)
        return f"line {line}: {msg}"


def _parse(raw: str, lineno: int) -> dict:
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(rec, dict) or set(rec) != {"t", "agent", "kind", "payload"}:
        raise LogFormatError("record must have exactly the fields t, agent, kind, payload", lineno)
    if rec["kind"] not in KINDS:
        raise LogFormatError(f"unknown kind {rec['kind']!r}", lineno)
    if not isinstance(rec["t"], (int, float)) or not math.isfinite(rec["t"]):
        raise LogFormatError("t must be a finite number", lineno)
    if not isinstance(rec["payload"], dict):
        raise LogFormatError("payload must be an object", lineno)
    return rec


def audit_events(lines, metrics: Optional[dict] = None) -> AuditReport:
    """Audit an iterable of JSONL lines; raises LogFormatError on malformed input."""
    report = AuditReport()
    header = None
    camera: list[bool] = []
    enabled_at: list[int] = []
    session_rewards: list[set] = []
    last_t = -math.inf
    ticks = 0
    cam_ticks = 0
    excl = 0
    losses = rewards = near = 0
    crowd_max = 0
    pushes = 0
    occupancy: dict[str, list[int]] = {}

    for lineno, raw in enumerate(lines, 1):
        raw = raw.strip()
        if not raw:
            continue
        rec = _parse(raw, lineno)
        report.lines = lineno
        kind, t, agent, p = rec["kind"], rec["t"], rec["agent"], rec["payload"]

        if header is None:
            if kind != "Scenario":
                raise LogFormatError("first record must be a Scenario header", lineno)
            header = p
            try:
                n = int(p["n_agents"])
                v_eps = float(p["v_eps"])
                crowd2 = float(p["crowd_radius"]) ** 2
                contact2 = float(p["contact_radius"]) ** 2
                marks = [(m["id"], float(m["position"][0]), float(m["position"][1])) for m in p["markers"]]
                anchorplay = p["mode"] == "AnchorPlay"
            except (KeyError, TypeError, ValueError, IndexError):
                raise LogFormatError("incomplete Scenario header", lineno) from None
            camera = [False] * n
            enabled_at = [0] * n
            session_rewards = [set() for _ in range(n)]
            occupancy = {mid: [0] * (n + 1) for mid, _, _ in marks}
            continue
        if kind == "Scenario":
            raise LogFormatError("duplicate Scenario header", lineno)

        if t < last_t:
            report.fail(lineno, f"time goes backwards ({t} < {last_t})")
        last_t = t

        if kind == "Truth":
            pos, spd = p.get("pos"), p.get("speed")
            if not (isinstance(pos, list) and isinstance(spd, list) and len(pos) == n and len(spd) == n):
                raise LogFormatError("Truth record needs pos and speed for every agent", lineno)
            ticks += 1
            for a in range(n):
                if camera[a]:
                    cam_ticks += 1
                    if spd[a] > v_eps:
                        excl += 1
                        if anchorplay:
                            report.fail(enabled_at[a] or lineno,
                                        f"agent {a} camera on while ground-truth speed {spd[a]} > {v_eps} "
                                        f"(truth line {lineno})")
            for mid, mx, my in marks:
                c = 0
                for a in range(n):
                    dx = pos[a][0] - mx
                    dy = pos[a][1] - my
                    if dx * dx + dy * dy <= crowd2:
                        c += 1
                occupancy[mid][c] += 1
                if c > crowd_max:
                    crowd_max = c
            for a in range(n):
                for b in range(a + 1, n):
                    dx = pos[a][0] - pos[b][0]
                    dy = pos[a][1] - pos[b][1]
                    if dx * dx + dy * dy <= contact2:
                        pushes += 1
            continue

        if not isinstance(agent, int) or not 0 <= agent < n:
            raise LogFormatError(f"agent {agent!r} out of range", lineno)
        if kind == "CameraEnable":
            if camera[agent]:
                report.fail(lineno, f"agent {agent}: CameraEnable while camera already enabled")
            camera[agent] = True
            enabled_at[agent] = lineno
            session_rewards[agent] = set()
            if anchorplay and float(p.get("speed", 0.0)) > v_eps:
                report.fail(lineno, f"agent {agent}: CameraEnable while moving at {p.get('speed')} m/s")
        elif kind == "CameraDisable":
            if not camera[agent]:
                report.fail(lineno, f"agent {agent}: CameraDisable while camera already disabled")
            camera[agent] = False
            enabled_at[agent] = 0
        elif kind == "TrackingLoss":
            losses += 1
            if anchorplay:
                report.fail(lineno, f"agent {agent}: tracking loss in AnchorPlay mode")
        elif kind == "Reward":
            rewards += 1
            marker = p.get("marker")
            if anchorplay:
                if not camera[agent]:
                    report.fail(lineno, f"agent {agent}: reward with camera off")
                elif marker in session_rewards[agent]:
                    report.fail(lineno, f"agent {agent}: second reward for {marker} in one visit")
                session_rewards[agent].add(marker)
        elif kind == "NearCollision":
            near += 1

    if header is None:
        raise LogFormatError("empty log", max(report.lines, 1))
    if ticks != int(header.get("n_ticks", ticks)):
        report.fail(report.lines, f"log has {ticks} Truth records, header promises {header['n_ticks']}")

    report.recount = {
        "camera_duty_cycle": cam_ticks / (ticks * n) if ticks else 0.0,
        "exclusion_violations": excl,
        "tracking_loss_events": losses,
        "rewards_collected": rewards,
        "near_collision_count": near,
        "crowding": {"max_concurrent_per_anchor": crowd_max, "pushes_proxy": pushes, "occupancy": occupancy},
    }
    if metrics is not None:
        _compare(report, metrics)
    return report


def _compare(report: AuditReport, metrics: dict) -> None:
    r = report.recount
    where = report.lines
    for key in ("exclusion_violations", "tracking_loss_events", "rewards_collected", "near_collision_count"):
        if metrics.get(key) != r[key]:
            report.fail(where, f"metrics.json {key}={metrics.get(key)} but log recount gives {r[key]}")
    duty = metrics.get("camera_duty_cycle")
    if not isinstance(duty, (int, float)) or abs(duty - r["camera_duty_cycle"]) > FLOAT_TOL:
        report.fail(where, f"metrics.json camera_duty_cycle={duty} but log recount gives {r['camera_duty_cycle']}")
    crowd = metrics.get("crowding", {})
    for key, val in r["crowding"].items():
        if crowd.get(key) != val:
            report.fail(where, f"metrics.json crowding.{key} differs from log recount")


def check_trace(events_path: Path, metrics_path: Optional[Path] = None) -> AuditReport:
    """Audit a log file; compares against ``metrics.json`` next to it when present."""
    events_path = Path(events_path)
    if metrics_path is None:
        candidate = events_path.with_name("metrics.json")
        metrics_path = candidate if candidate.exists() else None
    metrics = None
    if metrics_path is not None:
        metrics = json.loads(Path(metrics_path).read_text(encoding="utf-8"))
    with open(events_path, encoding="utf-8") as fh:
        return audit_events(fh, metrics)
