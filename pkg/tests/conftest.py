import os

import pytest

from coupled_igdt import data_path, load_prices, load_system


@pytest.fixture(scope="session")
def tiny3():
    return load_system(data_path("tiny3.json"))


@pytest.fixture(scope="session")
def tiny3_prices(tiny3):
    return load_prices(data_path("tiny3_prices.csv"), tiny3.horizon)


@pytest.fixture(scope="session")
def analytic():
    return load_system(data_path("tiny3_analytic.json"))


@pytest.fixture(scope="session")
def tiny3_base(tiny3, tiny3_prices):
    from coupled_igdt import base_cost
    return base_cost(tiny3, tiny3_prices)


@pytest.fixture
def tiny3_dict():
    import json
    with open(data_path("tiny3.json")) as fh:
        return json.load(fh)


# acceptance criteria report -------------------------------------------------

ACCEPTANCE = {}


def record(criterion: int, passed, detail: str) -> None:
    """Store one acceptance line; ``passed`` is True, False or None (skipped)."""
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        tag = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {k}: {tag}  {detail}")
