import pytest

from brdlab.game import BestResponseTable, Game, GameShape

# three-player two-action example game, payoffs (u1, u2, u3) per profile (a1, a2, a3)
EXAMPLE_PAYOFFS = {
    (1, 1, 2): (3, -1, 0), (1, 2, 2): (-3, 2, 7), (2, 1, 2): (3, 5, -2), (2, 2, 2): (8, 0, 2),
    (1, 1, 1): (4, 1, 0), (1, 2, 1): (1, 3, 7), (2, 1, 1): (5, 0, -2), (2, 2, 1): (-4, 5, 1),
}

# its best-response digraph, one edge per (player, environment)
EXAMPLE_EDGES = [
    ((1, 1, 1), (2, 1, 1)), ((2, 2, 1), (1, 2, 1)), ((1, 1, 1), (1, 2, 1)), ((2, 1, 1), (2, 2, 1)),
    ((2, 1, 2), (1, 1, 2)), ((1, 2, 2), (2, 2, 2)), ((1, 1, 2), (1, 2, 2)), ((2, 2, 2), (2, 1, 2)),
    ((2, 1, 2), (2, 1, 1)), ((1, 1, 2), (1, 1, 1)), ((1, 2, 2), (1, 2, 1)), ((2, 2, 1), (2, 2, 2)),
]

ACCEPTANCE_LINES = []


def table_from_edges(shape, edges):
    br = [[0] * shape.n_envs(i) for i in range(shape.n)]
    for src, dst in edges:
        (i,) = [j for j in range(shape.n) if src[j] != dst[j]]
        br[i][shape.env_index(shape.index(src), i)] = dst[i]
    return BestResponseTable(shape, br)


@pytest.fixture
def example_shape():
    return GameShape((2, 2, 2))


@pytest.fixture
def example_game(example_shape):
    return Game.from_profiles(example_shape, EXAMPLE_PAYOFFS)


@pytest.fixture
def example_table(example_shape):
    return table_from_edges(example_shape, EXAMPLE_EDGES)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
