"""Graph analysis of sparsity patterns.

A sparsity pattern is the undirected graph of the specified off-diagonal
positions of a partial matrix (diagonal positions are always specified and
are not stored).  This module certifies chordality, produces perfect
elimination orderings, enumerates maximal cliques, and builds clique trees
whose separators are the overlap blocks subtracted by the local inverse
assembly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


class NotChordalError(Exception):
    """An operation that requires a chordal pattern got a non-chordal one."""

    def __init__(self, message: str, fill_positions=None):
        super().__init__(message)
        self.fill_positions = tuple(fill_positions or ())


class DisconnectedPatternError(Exception):
    """Pattern has multiple connected components; decompose first."""


class NonOverlappingError(Exception):
    """Consecutive staircase intervals are disjoint (pattern would split)."""


def _normalize_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class SparsityPattern:
    """Undirected graph of specified off-diagonal positions.

    Edges are stored as (i, j) pairs with i < j; the pattern is symmetric by
    construction and never contains self-loops.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "SparsityPattern":
        if n < 1:
            raise ValueError("pattern needs at least one node")
        norm = set()
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range for n={n}")
            norm.add(_normalize_edge(i, j))
        return SparsityPattern(n=n, edges=frozenset(norm))

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        nbrs: dict[int, set[int]] = {v: set() for v in range(self.n)}
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return {v: frozenset(s) for v, s in nbrs.items()}

    def has_edge(self, i: int, j: int) -> bool:
        return _normalize_edge(i, j) in self.edges

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adjacency[v]

    @cached_property
    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self.adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.n


@dataclass(frozen=True)
class ChordalityResult:
    """Outcome of is_chordal: a certifying PEO, or a chordless cycle."""

    chordal: bool
    peo: tuple[int, ...] | None = None
    cycle: tuple[int, ...] | None = None


@dataclass(frozen=True)
class CliqueTree:
    """Maximal cliques plus a spanning tree whose edges carry separators.

    Blocks are ordered cliques first, then separators (one per tree edge, in
    tree-edge order).  Node sets inside each block are ascending.
    """

    n: int
    cliques: tuple[tuple[int, ...], ...]
    tree_edges: tuple[tuple[int, int, tuple[int, ...]], ...]

    @property
    def separators(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sep for _, _, sep in self.tree_edges)

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return self.cliques + self.separators

    @property
    def c_b(self) -> int:
        return len(self.cliques)

    @property
    def c_o(self) -> int:
        return len(self.tree_edges)

    @property
    def c(self) -> int:
        return self.c_b + self.c_o

    @property
    def d_k(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def m(self) -> int:
        return sum(self.d_k)

    def rooted_traversal(self) -> list[tuple[int, tuple[int, ...] | None]]:
        """Cliques in a root-to-leaf order.

        Returns (clique_index, separator_to_parent) pairs; the root (the
        largest clique, ties broken by lowest minimum node) has separator
        None.  Children are visited in ascending clique-index order.
        """
        root = max(range(self.c_b), key=lambda k: (len(self.cliques[k]), -min(self.cliques[k])))
        nbrs: dict[int, list[tuple[int, tuple[int, ...]]]] = {k: [] for k in range(self.c_b)}
        for a, b, sep in self.tree_edges:
            nbrs[a].append((b, sep))
            nbrs[b].append((a, sep))
        order: list[tuple[int, tuple[int, ...] | None]] = [(root, None)]
        seen = {root}
        queue = [root]
        while queue:
            k = queue.pop(0)
            for nxt, sep in sorted(nbrs[k]):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append((nxt, sep))
                    queue.append(nxt)
        return order


def mcs_ordering(p: SparsityPattern) -> tuple[int, ...]:
    """Maximum cardinality search visit order.

    Repeatedly visits the unvisited node with the most visited neighbors,
    breaking ties by lowest node index.  For a chordal pattern the reverse
    of this order is a perfect elimination ordering.
    """
    weight = [0] * p.n
    unvisited = set(range(p.n))
    order = []
    for _ in range(p.n):
        v = max(unvisited, key=lambda u: (weight[u], -u))
        order.append(v)
        unvisited.remove(v)
        for u in p.neighbors(v):
            if u in unvisited:
                weight[u] += 1
    return tuple(order)


def zero_fill_check(p: SparsityPattern, order: Sequence[int]) -> list[tuple[int, int]]:
    """Symbolic elimination in the given order; returns the fill positions.

    An empty list means the order is a perfect elimination ordering: the
    triangular factors have zeros wherever the pattern does.  Fill edges are
    added as elimination proceeds, so all fill is reported, not just the
    first occurrence.
    """
    if sorted(order) != list(range(p.n)):
        raise ValueError("order must be a permutation of the pattern's nodes")
    adj = {v: set(p.neighbors(v)) for v in range(p.n)}
    eliminated = set()
    fills = set()
    for v in order:
        live = sorted(adj[v] - eliminated)
        for a, b in itertools.combinations(live, 2):
            if b not in adj[a]:
                fills.add((a, b))
                adj[a].add(b)
                adj[b].add(a)
        eliminated.add(v)
    return sorted(fills)


def _chordless_cycle(p: SparsityPattern) -> tuple[int, ...]:
    # For every node v and non-adjacent pair x, y of its neighbors, look for
    # an x-y path avoiding the rest of N[v]; v plus that path is a chordless
    # cycle of length >= 4.  Some triple succeeds whenever p is not chordal.
    for v in range(p.n):
        nv = p.neighbors(v)
        for x, y in itertools.combinations(sorted(nv), 2):
            if p.has_edge(x, y):
                continue
            banned = (nv | {v}) - {x, y}
            parent = {x: None}
            queue = [x]
            while queue:
                cur = queue.pop(0)
                if cur == y:
                    path = []
                    node = y
                    while node is not None:
                        path.append(node)
                        node = parent[node]
                    return tuple([v] + path[::-1])
                for u in sorted(p.neighbors(cur)):
                    if u not in parent and u not in banned:
                        parent[u] = cur
                        queue.append(u)
    raise AssertionError("no chordless cycle found in a non-chordal pattern")


def is_chordal(p: SparsityPattern) -> ChordalityResult:
    """Chordality test with a certificate either way.

    Chordal: returns a perfect elimination ordering (reverse MCS order).
    Not chordal: returns a chordless cycle of length >= 4.
    """
    peo = mcs_ordering(p)[::-1]
    if not zero_fill_check(p, peo):
        return ChordalityResult(chordal=True, peo=peo)
    return ChordalityResult(chordal=False, cycle=_chordless_cycle(p))


def maximal_cliques(p: SparsityPattern, peo: Sequence[int]) -> list[tuple[int, ...]]:
    """Maximal cliques of a chordal pattern, from a certifying PEO.

    Each candidate clique is a node together with its later neighbors in the
    PEO; candidates contained in another are dropped.  Raises NotChordalError
    when the supplied ordering produces fill.
    """
    fills = zero_fill_check(p, peo)
    if fills:
        raise NotChordalError("ordering is not a perfect elimination ordering", fills)
    pos = {v: i for i, v in enumerate(peo)}
    candidates = [
        frozenset({v} | {u for u in p.neighbors(v) if pos[u] > pos[v]}) for v in peo
    ]
    kept: list[frozenset[int]] = []
    for c in sorted(candidates, key=len, reverse=True):
        if not any(c <= k for k in kept):
            kept.append(c)
    return sorted(tuple(sorted(c)) for c in kept)


def clique_tree(p: SparsityPattern, cliques: Sequence[Sequence[int]]) -> CliqueTree:
    """Maximum-weight spanning tree of the clique intersection graph.

    Edge weight is the intersection size; ties are broken by clique index so
    the result is deterministic.  Separators attached to the tree edges
    satisfy the running intersection property.  Disconnected patterns are
    rejected: counts and the spanning-tree invariant only make sense per
    component.
    """
    if not p.is_connected:
        raise DisconnectedPatternError("pattern has multiple components")
    cl = sorted(tuple(sorted(c)) for c in cliques)
    if len(cl) == 1:
        return CliqueTree(n=p.n, cliques=(cl[0],), tree_edges=())

    sets = [frozenset(c) for c in cl]
    candidates = []
    for a, b in itertools.combinations(range(len(cl)), 2):
        w = len(sets[a] & sets[b])
        if w > 0:
            candidates.append((-w, a, b))
    candidates.sort()

    parent = list(range(len(cl)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for negw, a, b in candidates:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b, tuple(sorted(sets[a] & sets[b]))))
    if len(edges) != len(cl) - 1:
        raise DisconnectedPatternError("clique intersection graph is not connected")
    return CliqueTree(n=p.n, cliques=tuple(cl), tree_edges=tuple(sorted(edges)))


def analyze(p: SparsityPattern) -> CliqueTree:
    """Convenience: certify chordality and build the clique tree in one step."""
    res = is_chordal(p)
    if not res.chordal:
        raise NotChordalError(f"pattern has a chordless cycle {list(res.cycle)}")
    return clique_tree(p, maximal_cliques(p, res.peo))


def band_pattern(n: int, w: int) -> SparsityPattern:
    """Band pattern: positions (i, j) with |i - j| <= w."""
    if not 0 <= w < n:
        raise ValueError(f"need 0 <= w < n, got w={w}, n={n}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, min(i + w + 1, n))]
    return SparsityPattern.from_edges(n, edges)


def staircase_pattern(block_ranges: Sequence[tuple[int, int]]) -> SparsityPattern:
    """Union of overlapping index intervals, each a full diagonal block.

    Intervals are half-open [start, stop); they must start at 0, cover the
    index range without gaps, and each consecutive pair must overlap in at
    least one node (disjoint neighbors would split the pattern, which raises
    NonOverlappingError).
    """
    if not block_ranges:
        raise ValueError("need at least one interval")
    ranges = [(int(s), int(e)) for s, e in block_ranges]
    if ranges[0][0] != 0:
        raise ValueError("first interval must start at 0")
    for (s1, e1), (s2, e2) in zip(ranges, ranges[1:]):
        if s1 >= e1 or s2 >= e2:
            raise ValueError("intervals must be non-empty")
        if s2 <= s1 or e2 <= e1:
            raise ValueError("intervals must strictly advance")
        if s2 >= e1:
            raise NonOverlappingError(f"intervals [{s1},{e1}) and [{s2},{e2}) are disjoint")
    if ranges[-1][0] >= ranges[-1][1]:
        raise ValueError("intervals must be non-empty")
    n = ranges[-1][1]
    edges = []
    for s, e in ranges:
        edges.extend(itertools.combinations(range(s, e), 2))
    return SparsityPattern.from_edges(n, edges)
