"""Hand-style corruptions of a valid event log.

Each helper takes the log lines and returns (corrupted lines, 1-based number
of the offending line).
"""

import json


def rec(line):
    return json.loads(line)


def insert_enable_while_moving(lines):
    camera = {}
    for i, line in enumerate(lines):
        r = rec(line)
        if r["kind"] == "CameraEnable":
            camera[r["agent"]] = True
        elif r["kind"] == "CameraDisable":
            camera[r["agent"]] = False
        elif r["kind"] == "Truth" and i > 200:
            for a, v in enumerate(r["payload"]["speed"]):
                if v > 0.5 and not camera.get(a):
                    bad = json.dumps({"t": r["t"], "agent": a, "kind": "CameraEnable", "payload": {"speed": v}})
                    return lines[:i] + [bad] + lines[i:], i + 1
    raise AssertionError("no moving agent found")


def duplicate_disable(lines):
    i = next(i for i, l in enumerate(lines) if rec(l)["kind"] == "CameraDisable")
    return lines[:i + 1] + [lines[i]] + lines[i + 1:], i + 2


def reorder_times(lines):
    i = next(i for i in range(1000, len(lines)) if rec(lines[i])["t"] < rec(lines[i + 1])["t"])
    out = list(lines)
    out[i], out[i + 1] = out[i + 1], out[i]
    return out, i + 2


def alter_truth(lines):
    for i, line in enumerate(lines):
        r = rec(line)
        if r["kind"] != "Truth" or i < 500:
            continue
        (x0, y0), (x1, y1) = r["payload"]["pos"][:2]
        if (x0 - x1) ** 2 + (y0 - y1) ** 2 > 4.0:
            r["payload"]["pos"][0] = [x1, y1]
            out = list(lines)
            out[i] = json.dumps(r)
            return out, i + 1
    raise AssertionError("no far-apart pair found")


def truncate_json(lines, index=10):
    out = list(lines)
    out[index] = out[index][:-5]
    return out, index + 1
