"""Undirected graph and partition primitives used by every pipeline stage.

Graphs are immutable after construction: adjacency is stored as sorted
tuples so iteration order is deterministic, which the seeded solvers rely
on for reproducibility.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import InputError


class Graph:
    """Simple undirected graph over dense node ids 0..n-1."""

    __slots__ = ("node_count", "adjacency", "max_degree", "_two_hop")

    def __init__(self, node_count: int, edges):
        if node_count < 0:
            raise InputError("node_count must be nonnegative")
        adj = [[] for _ in range(node_count)]
        seen = set()
        for u, v in edges:
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise InputError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            if u == v:
                raise InputError(f"self-loop at node {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise InputError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            adj[u].append(v)
            adj[v].append(u)
        self.node_count = node_count
        self.adjacency = tuple(tuple(sorted(nbrs)) for nbrs in adj)
        self.max_degree = max((len(a) for a in self.adjacency), default=0)
        self._two_hop = None

    @classmethod
    def empty(cls, node_count: int) -> "Graph":
        return cls(node_count, [])

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int):
        return self.adjacency[v]

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self):
        """Iterate edges as (u, v) pairs with u < v, in sorted order."""
        for u in range(self.node_count):
            for v in self.adjacency[u]:
                if u < v:
                    yield (u, v)

    def two_hop(self, v: int) -> frozenset:
        """All nodes within distance 2 of v, excluding v. Memoized; the
        resampling stage queries these sets every iteration."""
        if self._two_hop is None:
            self._two_hop = {}
        cached = self._two_hop.get(v)
        if cached is None:
            cached = frozenset(neighbors_within(self, v, 2))
            self._two_hop[v] = cached
        return cached

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count()}, max_degree={self.max_degree})"


def neighbors_within(g: Graph, v: int, k: int) -> set:
    """Nodes at graph distance <= k from v, excluding v itself.

    k = 0 returns the empty set. Computed by truncated BFS.
    """
    if not 0 <= v < g.node_count:
        raise InputError(f"node {v} out of range")
    if k < 0:
        raise InputError("hop count must be nonnegative")
    if k == 0:
        return set()
    found = {v}
    frontier = deque([(v, 0)])
    while frontier:
        u, dist = frontier.popleft()
        if dist == k:
            continue
        for w in g.adjacency[u]:
            if w not in found:
                found.add(w)
                frontier.append((w, dist + 1))
    found.discard(v)
    return found


@dataclass(frozen=True)
class Partition:
    """Ordered partition of 0..n-1 into parts 0..part_count-1.

    Used both as the event partition driving the staged solver and as a
    node partition of a plain graph; part order is meaningful (parts are
    processed in index order).
    """

    part_count: int
    assignment: tuple

    def __post_init__(self):
        if self.part_count < 1:
            raise InputError("partition needs at least one part")
        for i, p in enumerate(self.assignment):
            if not 0 <= p < self.part_count:
                raise InputError(f"item {i} assigned to invalid part {p}")

    @property
    def size(self) -> int:
        return len(self.assignment)

    def part_of(self, i: int) -> int:
        return self.assignment[i]

    def parts(self):
        """Members of each part, in ascending id order."""
        out = [[] for _ in range(self.part_count)]
        for i, p in enumerate(self.assignment):
            out[p].append(i)
        return out

    @classmethod
    def singleton(cls, n: int) -> "Partition":
        return cls(1, tuple([0] * n))

    @classmethod
    def round_robin(cls, n: int, r: int) -> "Partition":
        return cls(r, tuple(i % r for i in range(n)))

    @classmethod
    def contiguous(cls, n: int, r: int) -> "Partition":
        """Split 0..n-1 into r contiguous blocks with sizes differing by <= 1."""
        if r < 1 or r > max(n, 1):
            raise InputError(f"cannot split {n} items into {r} parts")
        base, extra = divmod(n, r)
        assignment = []
        for p in range(r):
            width = base + (1 if p < extra else 0)
            assignment.extend([p] * width)
        return cls(r, tuple(assignment))


def per_part_neighbor_counts(g: Graph, part: Partition, v: int) -> list:
    """Count of v's neighbors landing in each part; entries sum to deg(v)."""
    if part.size != g.node_count:
        raise InputError(
            f"partition covers {part.size} nodes but graph has {g.node_count}"
        )
    if not 0 <= v < g.node_count:
        raise InputError(f"node {v} out of range")
    counts = [0] * part.part_count
    for w in g.adjacency[v]:
        counts[part.assignment[w]] += 1
    return counts


def load_graph(path) -> Graph:
    """Read an edge-list file: one ``u v`` pair per line, '#' comments.

    The first non-comment line must be ``n <node_count>``. Duplicates and
    self-loops are rejected.
    """
    edges = []
    node_count = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if node_count is None:
                if fields[0] != "n" or len(fields) != 2:
                    raise InputError(f"{path}:{lineno}: expected header 'n <count>'")
                node_count = int(fields[1])
                continue
            if len(fields) != 2:
                raise InputError(f"{path}:{lineno}: expected 'u v'")
            edges.append((int(fields[0]), int(fields[1])))
    if node_count is None:
        raise InputError(f"{path}: missing 'n <count>' header")
    return Graph(node_count, edges)


def save_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n {g.node_count}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
