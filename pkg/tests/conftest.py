import pytest

from cellfree_ee import model

ACCEPTANCE_LINES = []


@pytest.fixture
def params():
    return model.reference_params()


@pytest.fixture
def power():
    return model.PowerModel()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
