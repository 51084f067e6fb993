"""Decorated block trees: the bijection between rooted connected graphs of a
block-stable class and plane trees whose vertices carry well-labelled sets of
derived blocks, together with its exact inverse and the counting formula for
the number of graphs sharing a given (undecorated) tree shape.

The tree has one vertex per graph vertex; the decoration of a tree vertex v
is the set of derived blocks attached at v (each block with v's label
removed), relabelled order-isomorphically to ``{1..d}`` where d is the
outdegree of v.  Children are attached in increasing order of that label, so
the i-th child subtree corresponds to the i-th smallest labelled atom of the
decoration.  Re-gluing blocks along their unlabelled vertex and restoring a
label allocation inverts the construction exactly.
"""

from __future__ import annotations

import math
import sys
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .domains import RATIONAL_POLY_U, NumericDomain
from .graphs import LabelledGraph, block_decompose
from .series import series_exp

__all__ = [
    "PlaneTree",
    "LabelledBlock",
    "Decoration",
    "DecoratedBlockTree",
    "LabelAllocation",
    "build_block_tree",
    "rebuild_graph",
    "count_graphs_for_tree",
    "enumerate_plane_trees",
    "tree_degree_stats",
    "ranked_vertices",
    "dumps_decorated",
]

MAX_PLANE_TREE_N = 12


@dataclass(frozen=True)
class PlaneTree:
    """Plane tree with vertices numbered in depth-first preorder, children
    left to right; vertex 0 is the root."""

    children: tuple

    def __post_init__(self):
        n = len(self.children)
        if n == 0:
            raise ValueError("a plane tree has at least one vertex")
        if sum(len(c) for c in self.children) != n - 1:
            raise ValueError("outdegrees must sum to n - 1")

    @property
    def n(self) -> int:
        return len(self.children)

    def outdegrees(self) -> tuple:
        return tuple(len(c) for c in self.children)

    @staticmethod
    def from_outdegrees(degs: Sequence[int]) -> "PlaneTree":
        """Build from the preorder outdegree sequence."""
        n = len(degs)
        children: list = [[] for _ in range(n)]
        stack = []  # (vertex, remaining children to attach)
        for v, d in enumerate(degs):
            if v > 0:
                if not stack:
                    raise ValueError("outdegree sequence is not a preorder encoding")
                parent = stack[-1][0]
                children[parent].append(v)
                stack[-1][1] -= 1
                if stack[-1][1] == 0:
                    stack.pop()
            if d > 0:
                stack.append([v, d])
        if stack:
            raise ValueError("outdegree sequence is not a preorder encoding")
        return PlaneTree(tuple(tuple(c) for c in children))

    @staticmethod
    def single() -> "PlaneTree":
        return PlaneTree(((),))

    def parents(self) -> tuple:
        par = [-1] * self.n
        for v, ch in enumerate(self.children):
            for w in ch:
                par[w] = v
        return tuple(par)


@dataclass(frozen=True)
class LabelledBlock:
    """One derived block inside a decoration: its shape (well-labelled with
    1..size plus the unlabelled vertex 0) and the sorted set of decoration
    labels its atoms carry; shape label i corresponds to ``labels[i-1]``
    (the unique order-preserving assignment)."""

    graph: LabelledGraph
    labels: tuple

    def __post_init__(self):
        if not self.graph.has_unlabelled:
            raise ValueError("decoration blocks must be derived (unlabelled vertex)")
        if len(self.labels) != self.graph.size:
            raise ValueError("label set must match the block size")
        if tuple(sorted(self.labels)) != tuple(self.labels):
            object.__setattr__(self, "labels", tuple(sorted(self.labels)))

    @property
    def size(self) -> int:
        return self.graph.size


@dataclass(frozen=True)
class Decoration:
    """Well-labelled set of derived blocks: the label sets of the entries
    partition {1..total_size}."""

    blocks: tuple

    def __post_init__(self):
        labels = [v for b in self.blocks for v in b.labels]
        if sorted(labels) != list(range(1, len(labels) + 1)):
            raise ValueError("decoration blocks must be jointly well-labelled")
        key = tuple(
            sorted(range(len(self.blocks)), key=lambda i: self.blocks[i].labels)
        )
        object.__setattr__(self, "blocks", tuple(self.blocks[i] for i in key))

    @property
    def total_size(self) -> int:
        return sum(b.size for b in self.blocks)

    @staticmethod
    def empty() -> "Decoration":
        return Decoration(())


@dataclass(frozen=True)
class DecoratedBlockTree:
    tree: PlaneTree
    decorations: tuple

    def __post_init__(self):
        if len(self.decorations) != self.tree.n:
            raise ValueError("one decoration per tree vertex required")
        for v, dec in enumerate(self.decorations):
            if dec.total_size != len(self.tree.children[v]):
                raise ValueError(
                    f"decoration size {dec.total_size} != outdegree "
                    f"{len(self.tree.children[v])} at vertex {v}"
                )


@dataclass(frozen=True)
class LabelAllocation:
    """Root label plus, per tree vertex, the set of original labels handed to
    its children's atoms; disjoint union with the root label is {1..n}."""

    root_label: int
    label_sets: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "label_sets", tuple(tuple(sorted(s)) for s in self.label_sets)
        )
        used = [self.root_label]
        for s in self.label_sets:
            used.extend(s)
        if sorted(used) != list(range(1, len(used) + 1)):
            raise ValueError("allocation must partition {1..n} together with the root label")


def _attach_vertex(block_vertices: Sequence[int], dist: dict) -> int:
    """The unique vertex of the block closest to the root."""
    return min(block_vertices, key=lambda v: dist[v])


def build_block_tree(g: LabelledGraph) -> tuple:
    """Decorated block tree of a rooted connected graph, plus the label
    allocation that makes the construction exactly invertible.

    Returns ``(DecoratedBlockTree, LabelAllocation)``.
    """
    if g.root is None:
        raise ValueError("build_block_tree needs a rooted graph")
    if g.has_unlabelled:
        raise ValueError("build_block_tree operates on fully labelled graphs")
    if not g.is_connected():
        raise ValueError("build_block_tree needs a connected graph")
    n = g.size
    if n == 1:
        tree = PlaneTree.single()
        return (
            DecoratedBlockTree(tree, (Decoration.empty(),)),
            LabelAllocation(g.root, ((),)),
        )

    dec = block_decompose(g)
    adj = g.adjacency()

    # BFS distances orient each block at its vertex closest to the root.
    dist = {g.root: 0}
    queue = deque([g.root])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)

    attached: dict = {}  # graph vertex -> list of blocks attached there
    for b in dec.blocks:
        a = _attach_vertex(b.vertices, dist)
        attached.setdefault(a, []).append(b)

    children_of: list = []
    decorations: list = []
    label_sets: list = []
    order_of: dict = {}

    def emit(v: int) -> int:
        """Create the tree vertex for graph vertex v; returns its DFS index."""
        idx = len(children_of)
        order_of[v] = idx
        children_of.append(None)
        decorations.append(None)
        label_sets.append(None)
        blocks_here = attached.get(v, [])
        atoms = sorted(w for b in blocks_here for w in b.vertices if w != v)
        # well-labelling of the decoration: i-th smallest original label -> i+1
        phi_label = {w: i + 1 for i, w in enumerate(atoms)}
        derived = []
        for b in blocks_here:
            own = sorted(w for w in b.vertices if w != v)
            shape_label = {w: i + 1 for i, w in enumerate(own)}
            edges = tuple(
                (
                    0 if a == v else shape_label[a],
                    0 if bb == v else shape_label[bb],
                )
                for a, bb in b.edges
            )
            shape = LabelledGraph.make(len(own), edges, has_unlabelled=True)
            derived.append(LabelledBlock(shape, tuple(phi_label[w] for w in own)))
        decorations[idx] = Decoration(tuple(derived))
        label_sets[idx] = tuple(atoms)
        kids = tuple(emit(w) for w in atoms)
        children_of[idx] = kids
        return idx

    old_limit = sys.getrecursionlimit()
    try:
        sys.setrecursionlimit(max(old_limit, 3 * n + 100))
        emit(g.root)
    finally:
        sys.setrecursionlimit(old_limit)

    tree = PlaneTree(tuple(children_of))
    return (
        DecoratedBlockTree(tree, tuple(decorations)),
        LabelAllocation(g.root, tuple(label_sets)),
    )


def rebuild_graph(t: DecoratedBlockTree, alloc: LabelAllocation) -> LabelledGraph:
    """Glue the decoration blocks of every tree vertex along their unlabelled
    vertex and identify atoms with child subtrees in plane order; the exact
    inverse of :func:`build_block_tree`."""
    tree = t.tree
    n = tree.n
    if len(alloc.label_sets) != n:
        raise ValueError("allocation does not match the tree")
    for v in range(n):
        if len(alloc.label_sets[v]) != len(tree.children[v]):
            raise ValueError(f"allocation size mismatch at tree vertex {v}")

    graph_label = [0] * n
    graph_label[0] = alloc.root_label
    edges = []
    stack = [0]
    while stack:
        v = stack.pop()
        kids = tree.children[v]
        labels = alloc.label_sets[v]  # sorted; i-th smallest -> atom i+1
        for i, w in enumerate(kids):
            graph_label[w] = labels[i]
            stack.append(w)
        for block in t.decorations[v].blocks:
            for a, b in block.graph.edges:
                # shape label -> decoration label -> child in plane order
                ga = graph_label[v] if a == 0 else graph_label[kids[block.labels[a - 1] - 1]]
                gb = graph_label[v] if b == 0 else graph_label[kids[block.labels[b - 1] - 1]]
                edges.append((ga, gb))
    return LabelledGraph.make(n, edges, root=alloc.root_label)


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


def _multinomial(total: int, parts: tuple) -> int:
    num = _factorial(total)
    for p in parts:
        num //= _factorial(p)
    return num


def decoration_counts(cls, order: int, domain: NumericDomain = RATIONAL_POLY_U, u=None) -> list:
    """EGF counts phi_k of weighted decorations of size k = 0..order, i.e.
    ``k! [y^k] exp(u B')``; over the formal-u domain these are polynomials
    in the block weight."""
    from .classes import bprime_series  # local import to avoid a cycle
    from .domains import UPoly
    from .series import series_scale

    bp = bprime_series(cls, order, domain)
    if u is None:
        if domain.kind != "rational_poly_u":
            raise ValueError("a formal block weight needs the rational_poly_u domain")
        u_elem = UPoly.u()
    else:
        u_elem = domain.coerce(u)
    phi = series_exp(series_scale(bp, u_elem))
    return [phi.egf_count(k) for k in range(order + 1)]


def count_graphs_for_tree(t: PlaneTree, cls, domain: NumericDomain = RATIONAL_POLY_U, u=None):
    """Number of rooted graphs of the class whose block tree equals t:
    ``prod_i phi_{d_i} * n * multinomial(n-1; d_1..d_n)``; a polynomial in the
    block weight over the formal-u domain."""
    degs = t.outdegrees()
    counts = decoration_counts(cls, max(degs) if degs else 0, domain, u=u)
    with domain.context():
        dec = domain.one()
        for d in degs:
            dec = dec * counts[d]
        return dec * (t.n * _multinomial(t.n - 1, degs))


def enumerate_plane_trees(n: int) -> Iterator[PlaneTree]:
    """All plane trees on n vertices (Catalan(n-1) of them), deterministic order."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_PLANE_TREE_N:
        raise ValueError(f"plane-tree enumeration supports at most n = {MAX_PLANE_TREE_N}")

    def forests(total: int):
        if total == 0:
            yield ()
            return
        for first in range(1, total + 1):
            for left in trees(first):
                for rest in forests(total - first):
                    yield (left,) + rest

    def trees(size: int):
        for forest in forests(size - 1):
            degs = [len(forest)]
            for sub in forest:
                degs.extend(sub)
            yield tuple(degs)

    for degs in trees(n):
        yield PlaneTree.from_outdegrees(degs)


def tree_degree_stats(t: PlaneTree) -> tuple:
    """Outdegrees sorted in decreasing order (ties broken by DFS index)."""
    return tuple(sorted(t.outdegrees(), reverse=True))


def ranked_vertices(t: PlaneTree) -> tuple:
    """Vertices ordered by decreasing outdegree, ties by DFS index."""
    degs = t.outdegrees()
    return tuple(sorted(range(t.n), key=lambda v: (-degs[v], v)))


def _block_line(b: LabelledBlock) -> str:
    """One-line block dump in decoration labels; 0 is the unlabelled slot."""
    relabel = {0: 0, **{i + 1: lab for i, lab in enumerate(b.labels)}}
    edges = " ".join(
        f"{min(relabel[x], relabel[y])},{max(relabel[x], relabel[y])}" for x, y in b.graph.edges
    )
    return f"{b.size};{edges}"


def dumps_decorated(t: DecoratedBlockTree) -> str:
    """Nested parenthesized dump: per vertex ``[block|block|...]`` with blocks
    in the one-line graph format using decoration labels."""

    def rec(v: int) -> str:
        dec = "|".join(_block_line(b) for b in t.decorations[v].blocks)
        inner = "".join(rec(w) for w in t.tree.children[v])
        return f"([{dec}]{inner})"

    return rec(0)
