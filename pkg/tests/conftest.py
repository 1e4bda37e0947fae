import pytest

from noninf.core import ObservedTable, TrialDesign

# (x_t, n_t, x_c, n_c, delta0, alpha)
EXAMPLES = {
    1: (5, 8, 10, 19, 0.10, 0.5),
    2: (5, 6, 2, 6, 0.12, 0.05),
    3: (7, 18, 5, 25, 0.10, 0.05),
}

_ACCEPTANCE: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    _ACCEPTANCE.append(line)
    print(line)


@pytest.fixture
def acceptance():
    return record_acceptance


def example(k: int):
    xt, nt, xc, nc, d0, a = EXAMPLES[k]
    return ObservedTable(xt, xc), TrialDesign(nt, nc), d0, a


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
