import numpy as np
import pytest

from decowalk.graphwalk import DecoratedGraph, complete_graph_with_loops
from decowalk.groups import CyclicGroup


@pytest.fixture
def k2_z2():
    Z2 = CyclicGroup(2)
    return complete_graph_with_loops([Z2.identity, Z2.element(1)])


@pytest.fixture
def k2_z3():
    Z3 = CyclicGroup(3)
    return complete_graph_with_loops([Z3.identity, Z3.element(1)])


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def graph(A, decorations, directed=False):
    return DecoratedGraph(np.array(A), tuple(decorations), directed)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
