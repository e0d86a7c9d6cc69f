"""Directed communication topologies.

Self-loops are implicit: every node is its own in- and out-neighbour and
loops are never stored in the edge set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GraphError


@dataclass(frozen=True)
class DirectedGraph:
    """Node count plus a set of ordered ``(src, dst)`` pairs; ``src`` sends to ``dst``."""

    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise GraphError(f"node count must be a positive integer, got {self.n!r}")
        edges = frozenset((int(s), int(d)) for s, d in self.edges)
        for s, d in edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise GraphError(f"edge ({s}, {d}) out of range for n={self.n}")
            if s == d:
                raise GraphError(f"self-loop ({s}, {d}) given explicitly; loops are implicit")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", edges)

    def _check(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} out of range for n={self.n}")

    def in_neighbors(self, i: int) -> set[int]:
        self._check(i)
        return {s for s, d in self.edges if d == i} | {i}

    def out_neighbors(self, i: int) -> set[int]:
        self._check(i)
        return {d for s, d in self.edges if s == i} | {i}

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true iff ``j`` is an in-neighbour of ``i``.

        The diagonal is always true.
        """
        adj = np.eye(self.n, dtype=bool)
        for s, d in self.edges:
            adj[d, s] = True
        return adj

    def reversed(self) -> DirectedGraph:
        return DirectedGraph(self.n, frozenset((d, s) for s, d in self.edges))


def _reaches_all(n, successors):
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in successors[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every node reaches every other node along directed edges.

    One breadth-first sweep from node 0 on the graph and one on its reverse.
    """
    fwd = [[] for _ in range(g.n)]
    bwd = [[] for _ in range(g.n)]
    for s, d in sorted(g.edges):
        fwd[s].append(d)
        bwd[d].append(s)
    return _reaches_all(g.n, fwd) and _reaches_all(g.n, bwd)


def random_strongly_connected(n: int, extra_edge_prob: float, seed: int) -> DirectedGraph:
    """Random digraph built from a Hamiltonian cycle plus Bernoulli extra edges.

    The cycle visits the nodes in a random order, so the result is strongly
    connected by construction. Every other ordered pair ``(s, d)``, ``s != d``,
    is then added independently with probability `extra_edge_prob`, scanning
    pairs in lexicographic order. Deterministic in `seed`.
    """
    if n < 1:
        raise GraphError("n must be >= 1")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise GraphError("extra_edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = set()
    if n > 1:
        for a, b in zip(order, np.roll(order, -1)):
            edges.add((int(a), int(b)))
    for s in range(n):
        for d in range(n):
            if s != d and (s, d) not in edges and rng.random() < extra_edge_prob:
                edges.add((s, d))
    return DirectedGraph(n, frozenset(edges))


def write_edge_list(g: DirectedGraph, path) -> None:
    lines = [f"n {g.n}"] + [f"{s} {d}" for s, d in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_edge_list(text: str, undirected: bool = False) -> DirectedGraph:
    """Parse the ``src dst`` edge-list format.

    Lines starting with ``#`` are comments. An optional ``n <count>`` line fixes
    the node count; otherwise it is the largest index plus one. Labels that are
    not all non-negative integers are mapped to dense indices in order of first
    appearance. With `undirected`, every line adds both directions.
    """
    declared_n = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphError(f"line {lineno}: expected two fields, got {line!r}")
        if tokens[0] == "n":
            try:
                declared_n = int(tokens[1])
            except ValueError:
                raise GraphError(f"line {lineno}: bad node count {tokens[1]!r}") from None
            continue
        if tokens[0] == tokens[1]:
            raise GraphError(f"line {lineno}: self-loop {tokens[0]} -> {tokens[1]}")
        pairs.append((lineno, tokens[0], tokens[1]))

    labels = [t for _, s, d in pairs for t in (s, d)]
    if all(t.isdigit() for t in labels):
        index = {t: int(t) for t in labels}
    else:
        index = {}
        for t in labels:
            index.setdefault(t, len(index))

    n = declared_n if declared_n is not None else max(index.values(), default=-1) + 1
    if n < 1:
        raise GraphError("edge list defines no nodes")
    edges = set()
    for lineno, s, d in pairs:
        a, b = index[s], index[d]
        if a >= n or b >= n:
            raise GraphError(f"line {lineno}: node index exceeds declared n={n}")
        edges.add((a, b))
        if undirected:
            edges.add((b, a))
    return DirectedGraph(n, frozenset(edges))


def read_edge_list(path, undirected: bool = False) -> DirectedGraph:
    return parse_edge_list(Path(path).read_text(), undirected=undirected)
