import random

import pytest

from dtkpabe.group import get_group


@pytest.fixture(scope="session")
def bls():
    return get_group("bls12-381")


@pytest.fixture(scope="session")
def toy():
    return get_group("toy")


@pytest.fixture(params=["toy", "bls12-381"])
def group(request):
    return get_group(request.param)


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
