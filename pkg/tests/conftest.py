import pytest

from planarspeed.nonlinearity import make_builtin


@pytest.fixture
def cosine():
    return make_builtin("shifted_cosine", 2, 1)


@pytest.fixture
def touching():
    return make_builtin("touching", 1)


@pytest.fixture
def const():
    return make_builtin("constant", -1)


BUILTINS = [
    ("constant", (-1.0,)),
    ("constant", (0.0,)),
    ("shifted_cosine", (2.0, 1.0)),
    ("shifted_cosine", (3.0, 0.5)),
    ("shifted_cosine", (1.0, 1.0)),
    ("touching", (1.0,)),
    ("touching", (2.5,)),
]


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
