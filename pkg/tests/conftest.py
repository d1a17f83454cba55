import numpy as np
import pytest

from helpers import ACCEPTANCE


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        ok = all(passed for _, passed, _ in checks)
        parts = "; ".join(f"{name} {'ok' if passed else 'FAILED'} ({detail})" for name, passed, detail in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}: {parts}")
