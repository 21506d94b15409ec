"""Directed graphs, strongly connected components and structural monitor suggestions.

Nodes are 1-based throughout this module, matching the edge-list file format.
An edge ``i -> j`` with weight ``w`` means node ``j`` depends on node ``i``;
in matrix form ``A[i-1, j-1] == w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError

__all__ = [
    "Digraph",
    "SccPartition",
    "incident_matrix",
    "matrix_to_digraph",
    "inference_diagram",
    "scc",
    "lsb_monitor_sets",
    "format_edge_list",
    "parse_edge_list",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"node count must be nonnegative, got {self.n}")
        seen = set()
        clean = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ParameterError(f"edge ({i}, {j}) outside node range 1..{self.n}")
            if (i, j) in seen:
                raise ParameterError(f"duplicate edge ({i}, {j})")
            if not math.isfinite(w) or w == 0.0:
                raise ParameterError(f"edge ({i}, {j}) has invalid weight {w!r}")
            seen.add((i, j))
            clean.append((i, j, w))
        clean.sort()
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def successors(self) -> list[list[int]]:
        """Adjacency lists indexed by node (index 0 unused)."""
        adj = [[] for _ in range(self.n + 1)]
        for i, j, _ in self.edges:
            adj[i].append(j)
        return adj

    def edge_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.edges}

    def with_weights(self, weights) -> "Digraph":
        weights = list(weights)
        if len(weights) != len(self.edges):
            raise ParameterError("weight count does not match edge count")
        return Digraph(self.n, tuple((i, j, w) for (i, j, _), w in zip(self.edges, weights)))

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, _, _ in self.edges:
            deg[i - 1] += 1
        return deg

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for _, j, _ in self.edges:
            deg[j - 1] += 1
        return deg


@dataclass(frozen=True)
class SccPartition:
    components: tuple[tuple[int, ...], ...]
    condensation: frozenset[tuple[int, int]]
    roots: tuple[int, ...]

    def component_of(self) -> dict[int, int]:
        return {v: c for c, comp in enumerate(self.components) for v in comp}


def incident_matrix(g: Digraph) -> np.ndarray:
    m = np.zeros((g.n, g.n))
    for i, j, w in g.edges:
        m[i - 1, j - 1] = w
    return m


def matrix_to_digraph(m) -> Digraph:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    rows, cols = np.nonzero(m)
    return Digraph(m.shape[0], tuple((int(i) + 1, int(j) + 1, float(m[i, j])) for i, j in zip(rows, cols)))


def inference_diagram(g: Digraph) -> Digraph:
    """Transpose of ``g``: every edge ``i -> j`` becomes ``j -> i``."""
    return Digraph(g.n, tuple((j, i, w) for i, j, w in g.edges))


def _tarjan(n, adj):
    # Iterative Tarjan; recursion depth would otherwise scale with n.
    index = [0] * (n + 1)
    low = [0] * (n + 1)
    on_stack = [False] * (n + 1)
    visited = [False] * (n + 1)
    stack = []
    comps = []
    counter = 1
    for root in range(1, n + 1):
        if visited[root]:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                visited[v] = True
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            nbrs = adj[v]
            while pos < len(nbrs):
                w = nbrs[pos]
                pos += 1
                if not visited[w]:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def scc(g: Digraph) -> SccPartition:
    """Strongly connected components, ordered by their smallest node."""
    comps = sorted((tuple(sorted(c)) for c in _tarjan(g.n, g.successors())), key=lambda c: c[0])
    owner = {v: c for c, comp in enumerate(comps) for v in comp}
    cond = frozenset(
        (owner[i], owner[j]) for i, j, _ in g.edges if owner[i] != owner[j]
    )
    has_in = {b for _, b in cond}
    roots = tuple(c for c in range(len(comps)) if c not in has_in)
    return SccPartition(tuple(comps), cond, roots)


def lsb_monitor_sets(g: Digraph) -> list[tuple[int, ...]]:
    """Root components of the inference diagram; one node of each must be monitored."""
    part = scc(inference_diagram(g))
    return [part.components[c] for c in part.roots]


def format_edge_list(g: Digraph) -> str:
    lines = [f"nodes {g.n}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in g.edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Digraph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "nodes":
            if n is not None or len(parts) != 2:
                raise ParameterError(f"line {lineno}: malformed or repeated 'nodes' header")
            try:
                n = int(parts[1])
            except ValueError:
                raise ParameterError(f"line {lineno}: node count must be an integer") from None
            continue
        if n is None:
            raise ParameterError(f"line {lineno}: edge before 'nodes <n>' header")
        if len(parts) not in (2, 3):
            raise ParameterError(f"line {lineno}: expected 'from to weight'")
        try:
            w = float(parts[2]) if len(parts) == 3 else 1.0
            edges.append((int(parts[0]), int(parts[1]), w))
        except ValueError:
            raise ParameterError(f"line {lineno}: cannot parse {line!r}") from None
    if n is None:
        raise ParameterError("missing 'nodes <n>' header")
    return Digraph(n, tuple(edges))


def read_edge_list(path) -> Digraph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(g: Digraph, path) -> None:
    Path(path).write_text(format_edge_list(g), newline="\n")
