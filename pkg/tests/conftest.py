import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


def decode(m):
    return np.array(m[0]) + 1j * np.array(m[1])


@pytest.fixture(scope="session")
def oracle_values():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# per-criterion outcomes, printed as one line each after the run
_CRITERIA = pytest.StashKey()


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    num, title = mark.args
    rows = item.config.stash.setdefault(_CRITERIA, {})
    entry = rows.setdefault(num, {"title": title, "ok": True, "notes": []})
    entry["ok"] &= call.excinfo is None
    entry["notes"] += [v for k, v in item.user_properties if k == "detail"]
    if call.excinfo is not None:
        entry["notes"].append(f"{item.name} failed")


def pytest_terminal_summary(terminalreporter, config):
    rows = config.stash.get(_CRITERIA, {})
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(rows):
        e = rows[num]
        notes = "; ".join(e["notes"])
        terminalreporter.write_line(f"[{'PASS' if e['ok'] else 'FAIL'}] {num:2d}. {e['title']}" + (f" ({notes})" if notes else ""))

