import pytest

from propkit.uniform import UniformGroupModel, builtin_models


@pytest.fixture(scope="session")
def models():
    return builtin_models(6)


@pytest.fixture(scope="session")
def ab32():
    return UniformGroupModel("abelian", 3, 2, 6)


@pytest.fixture(scope="session")
def sl2_3():
    return UniformGroupModel("sl2", 3, None, 6)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
