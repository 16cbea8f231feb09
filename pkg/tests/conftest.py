from collections import defaultdict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, list[tuple[bool, str]]] = defaultdict(list)


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records an acceptance outcome and asserts it."""

    def record(n: int, ok: bool, detail: str) -> None:
        _CRITERIA[n].append((bool(ok), detail))
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        ok = all(p for p, _ in parts)
        failed = [d for p, d in parts if not p]
        detail = "; ".join(failed) if failed else "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({sum(p for p, _ in parts)}/{len(parts)} checks) {detail}")
