import math
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def bisect_quantile(p: float, lo: float = -40.0, hi: float = 40.0) -> float:
    """Reference inverse normal CDF by bisection on ``math.erfc``."""
    if p > 0.5:
        # bisect on the exact lower tail; 1 - p is exact for p in [0.5, 1]
        return -bisect_quantile(1.0 - p, lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_terminal_summary(terminalreporter):
    results = getattr(__import__("sys").modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    subs = {k: v for k, v in results.items() if k.startswith("7")}
    for key in ("1", "2", "3", "4", "5", "6", "7", "8", "9"):
        if key == "7" and subs:
            failed = [f"{k}: {d}" for k, (ok, d) in sorted(subs.items()) if not ok]
            status = "FAIL" if failed else "PASS"
            tr.write_line(f"[{status}] criterion 7: property suite, {len(subs) - len(failed)}/"
                          f"{len(subs)} properties hold")
            for k, (ok, d) in sorted(subs.items()):
                tr.write_line(f"    [{'PASS' if ok else 'FAIL'}] {k} {d}")
        elif key in results:
            ok, detail = results[key]
            tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
