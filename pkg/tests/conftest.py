import pytest

from aggsched import AggregationState, BandwidthMatrix

# toy instance keys
A, B, C, D, E, F = range(1, 7)


@pytest.fixture
def toy_state():
    """v1={A,B,C}, v2=v3={D,E,F}, destination v0 holds nothing; w = B = 1."""
    return AggregationState.all_to_one([[], [A, B, C], [D, E, F], [D, E, F]], destination=0, tuple_width=1.0)


@pytest.fixture
def toy_bw():
    return BandwidthMatrix.uniform(4, 1.0)


def random_all_to_one(rng, max_nodes=5, max_keys=32, domain=64):
    n = int(rng.integers(2, max_nodes + 1))
    data = [rng.choice(domain, size=int(rng.integers(0, max_keys + 1)), replace=False) for _ in range(n)]
    return AggregationState.all_to_one(data, 0, 1.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
