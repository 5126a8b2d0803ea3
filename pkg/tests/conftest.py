import numpy as np
import pytest
from hypothesis import settings

from nygrad.model import QuadraticProblem

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        _ACCEPTANCE.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


def diag3(lam, x0, b=(0.0, 0.0, 0.0)) -> QuadraticProblem:
    return QuadraticProblem(np.asarray(lam, float), np.asarray(b, float), np.asarray(x0, float))
