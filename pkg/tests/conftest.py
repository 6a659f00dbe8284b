import math

import pytest

from blastsim.rockdyn import RigidBlock

# (criterion, verdict, detail) rows collected by the acceptance module
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def prototype_block():
    """10 m tall, 15 degree slenderness, 2000 kg/m^3 block used throughout."""
    return RigidBlock.from_slenderness(10.0, math.radians(15.0), density=2000.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
