from pathlib import Path

import numpy as np
import pytest

import oracles
from dcdclust.graph import from_matrix

DATA = Path(__file__).parent / "data"


def random_graph(n, seed, extra=2):
    return from_matrix(np.array(oracles.random_connected_graph(n, oracles.rng(seed), extra), float))


def cliques(sizes):
    n = sum(sizes)
    A = np.zeros((n, n))
    truth = np.repeat(np.arange(len(sizes)), sizes)
    for c in range(len(sizes)):
        idx = np.flatnonzero(truth == c)
        A[np.ix_(idx, idx)] = 1.0
    return from_matrix(A), truth


@pytest.fixture
def iris():
    X = np.loadtxt(DATA / "iris.csv", delimiter=",")
    y = np.loadtxt(DATA / "iris_labels.txt", dtype=np.int64)
    return X, y


@pytest.fixture
def data_dir():
    return DATA


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
