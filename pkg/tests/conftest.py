"""Shared fixtures: tiny hand-built networks and the acceptance reporter."""

from __future__ import annotations

import pytest

from evonet.model import (
    Edge,
    EdgeKind,
    GridPosition,
    LinkState,
    Network,
    Node,
    NodeKind,
    make_edge,
)

# Summary lines for tests/test_acceptance.py, printed at the end of the run.
_acceptance_outcomes: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_outcomes.append((name, "PASS" if report.passed else "FAIL"))
    elif report.when == "setup" and (report.failed or report.skipped):
        _acceptance_outcomes.append((name, "FAIL" if report.failed else "SKIP"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance_outcomes:
        terminalreporter.write_line(f"[acceptance] {status} {name}")


def client(node_id: int, x: int, y: int, traffic: float = 5.0) -> Node:
    return Node(id=node_id, kind=NodeKind.CLIENT, pos=GridPosition(x, y), traffic=traffic)


def server(node_id: int, x: int, y: int, capacity: float = 100.0) -> Node:
    return Node(id=node_id, kind=NodeKind.SERVER, pos=GridPosition(x, y), traffic=capacity)


def build_net(nodes, pairs=(), weight: float | None = None) -> Network:
    """Network from nodes plus edges named by endpoint id pairs."""
    by_id = {n.id: n for n in nodes}
    edges = []
    for a, b in pairs:
        edges.append(make_edge(by_id[a], by_id[b], weight=weight))
    return Network(nodes=tuple(nodes), edges=tuple(edges))


def fail_edge(edge: Edge, steps: int = 1) -> Edge:
    from dataclasses import replace

    return replace(edge, state=LinkState.FAILED, steps_since_failure=steps)


@pytest.fixture
def line_pair() -> Network:
    """Two clients and one server in a row, no edges."""
    return build_net([client(0, 0, 0), client(1, 10, 0), server(2, 20, 0)])


__all__ = [
    "EdgeKind",
    "build_net",
    "client",
    "fail_edge",
    "server",
]
