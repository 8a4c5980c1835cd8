import random

import pytest

from ubic import bgroup, ipe


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(scope="session")
def group32():
    return bgroup.group_gen(32, random.Random(7))


@pytest.fixture(scope="session")
def message_scheme(group32):
    return ipe.setup(group32, 2, ipe.Mode.MESSAGE, random.Random(11))


# -- acceptance summary: one PASS/FAIL line per criterion -----------------------

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.failed:
        status = "PASS" if report.passed else "FAIL"
        _ACCEPTANCE[props["criterion"]] = (status, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"[{status}] {name}" + (f" :: {detail}" if detail else ""))
