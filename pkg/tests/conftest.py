import pytest

from shishkin_sdfem import CoefficientSet, MeshConfig, build_mesh, make_stabilization

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Store a pass/fail line so it is printed in the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mesh24():
    return build_mesh(MeshConfig(24, 1e-6))


@pytest.fixture(scope="session")
def coeffs6():
    return CoefficientSet(1e-6)


@pytest.fixture(scope="session")
def stab24(mesh24, coeffs6):
    return make_stabilization(mesh24, coeffs6, 1.0)
