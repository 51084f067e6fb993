"""Labelled simple graphs, 2-connectivity, block decomposition, small-n
planarity, and exhaustive enumeration oracles.

Vertices are integers: labels are exactly ``1..size``; a derived graph
additionally has the unlabelled vertex ``0``.  The size of a graph is its
number of labelled vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

__all__ = [
    "LabelledGraph",
    "Block",
    "BlockDecomposition",
    "BlockCutTree",
    "block_decompose",
    "block_cut_tree",
    "is_2connected",
    "is_planar",
    "enumerate_graphs",
    "consistent_relabel",
    "to_exchange",
    "from_exchange",
]

MAX_ENUM_N = 7
MAX_PLANARITY_N = 12


@dataclass(frozen=True)
class LabelledGraph:
    """Simple graph on labels 1..size, optional root, optional unlabelled vertex 0."""

    size: int
    edges: tuple
    root: Optional[int] = None
    has_unlabelled: bool = False

    def __post_init__(self):
        lo = 0 if self.has_unlabelled else 1
        seen = set()
        for e in self.edges:
            a, b = e
            if not (lo <= a < b <= self.size):
                raise ValueError(f"edge {e} out of range for size {self.size}")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        if tuple(sorted(self.edges)) != tuple(self.edges):
            object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        if self.root is not None and not (1 <= self.root <= self.size):
            raise ValueError(f"root {self.root} is not a label of the graph")

    @staticmethod
    def make(size: int, edges: Iterable, root: Optional[int] = None, has_unlabelled: bool = False) -> "LabelledGraph":
        norm = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
        return LabelledGraph(size, norm, root, has_unlabelled)

    @property
    def n_vertices(self) -> int:
        return self.size + (1 if self.has_unlabelled else 0)

    def vertices(self) -> tuple:
        first = (0,) if self.has_unlabelled else ()
        return first + tuple(range(1, self.size + 1))

    def adjacency(self) -> dict:
        adj = {v: [] for v in self.vertices()}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for v in adj:
            adj[v].sort()
        return adj

    def is_connected(self) -> bool:
        verts = self.vertices()
        if len(verts) <= 1:
            return True
        adj = self.adjacency()
        seen = {verts[0]}
        stack = [verts[0]]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(verts)

    def with_root(self, root: int) -> "LabelledGraph":
        return LabelledGraph(self.size, self.edges, root, self.has_unlabelled)

    def unrooted(self) -> "LabelledGraph":
        return LabelledGraph(self.size, self.edges, None, self.has_unlabelled)


@dataclass(frozen=True)
class Block:
    """One block: its edges and the vertices they span, canonically sorted."""

    edges: tuple
    vertices: tuple

    @staticmethod
    def from_edges(edges: Iterable) -> "Block":
        es = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
        vs = tuple(sorted({v for e in es for v in e}))
        return Block(es, vs)

    def is_cycle_or_edge(self) -> bool:
        return len(self.edges) == 1 or len(self.edges) == len(self.vertices)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple
    cut_vertices: frozenset

    def block_sizes(self) -> tuple:
        """Vertex counts of the blocks, descending."""
        return tuple(sorted((len(b.vertices) for b in self.blocks), reverse=True))


def block_decompose(g: LabelledGraph) -> BlockDecomposition:
    """The unique maximal-2-connected decomposition of a connected graph.

    Single depth-first search with lowpoint values and an edge stack.
    """
    if g.n_vertices < 2:
        raise ValueError("block decomposition needs at least 2 vertices")
    if not g.is_connected():
        raise ValueError("block decomposition needs a connected graph")

    adj = g.adjacency()
    start = g.vertices()[0]
    disc: dict = {}
    low: dict = {}
    edge_stack: list = []
    raw_blocks: list = []
    counter = 0

    disc[start] = low[start] = counter
    counter += 1
    stack = [(start, None, iter(adj[start]))]
    while stack:
        v, parent, it = stack[-1]
        advanced = False
        for w in it:
            if w == parent:
                continue
            if w not in disc:
                edge_stack.append((v, w))
                disc[w] = low[w] = counter
                counter += 1
                stack.append((w, v, iter(adj[w])))
                advanced = True
                break
            if disc[w] < disc[v]:
                edge_stack.append((v, w))
                if disc[w] < low[v]:
                    low[v] = disc[w]
        if advanced:
            continue
        stack.pop()
        if stack:
            u = stack[-1][0]
            if low[v] < low[u]:
                low[u] = low[v]
            if low[v] >= disc[u]:
                block_edges = []
                while True:
                    e = edge_stack.pop()
                    block_edges.append(e)
                    if e == (u, v):
                        break
                raw_blocks.append(block_edges)

    blocks = tuple(sorted((Block.from_edges(es) for es in raw_blocks),
                          key=lambda b: (b.vertices, b.edges)))
    seen_in: dict = {}
    for b in blocks:
        for v in b.vertices:
            seen_in[v] = seen_in.get(v, 0) + 1
    cuts = frozenset(v for v, c in seen_in.items() if c >= 2)
    return BlockDecomposition(blocks, cuts)


@dataclass(frozen=True)
class BlockCutTree:
    """Bipartite tree over block nodes ('block', index) and cut nodes ('cut', label)."""

    decomposition: BlockDecomposition
    nodes: tuple
    edges: tuple

    def is_tree(self) -> bool:
        n = len(self.nodes)
        if len(self.edges) != n - 1:
            return False
        adj = {u: [] for u in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = set()
        stack = [self.nodes[0]]
        seen.add(self.nodes[0])
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n


def block_cut_tree(g: LabelledGraph) -> BlockCutTree:
    """Tree joining each cut vertex to the blocks containing it."""
    dec = block_decompose(g)
    nodes = tuple(("block", i) for i in range(len(dec.blocks))) + tuple(
        ("cut", v) for v in sorted(dec.cut_vertices)
    )
    edges = tuple(
        (("block", i), ("cut", v))
        for i, b in enumerate(dec.blocks)
        for v in b.vertices
        if v in dec.cut_vertices
    )
    return BlockCutTree(dec, nodes, edges)


def is_2connected(g: LabelledGraph) -> bool:
    """True iff g is a single edge, or has >= 3 vertices, is connected and
    has no cut vertex.  A single vertex is not 2-connected."""
    nv = g.n_vertices
    if nv < 2:
        return False
    if not g.is_connected():
        return False
    if nv == 2:
        return len(g.edges) == 1
    dec = block_decompose(g)
    return len(dec.blocks) == 1


# -- planarity oracle ------------------------------------------------------


def _set_partitions(elems: tuple, q: int):
    """All partitions of elems into exactly q nonempty blocks (as masks over elems)."""
    n = len(elems)
    if n < q:
        return
    assignment = [0] * n

    def rec(i: int, used: int):
        if n - i < q - used:
            return
        if i == n:
            if used == q:
                masks = [0] * q
                for j, a in enumerate(assignment):
                    masks[a] |= 1 << elems[j]
                yield tuple(masks)
            return
        for a in range(min(used + 1, q)):
            assignment[i] = a
            extra = 1 if a == used else 0
            yield from rec(i + 1, used + extra)

    yield from rec(1, 1)  # first element always in block 0


def _mask_connected(mask: int, adj_masks: list) -> bool:
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        nxt = 0
        f = frontier
        while f:
            v = (f & -f).bit_length() - 1
            f &= f - 1
            nxt |= adj_masks[v]
        frontier = nxt & mask & ~seen
        seen |= frontier
    return seen == mask


def _has_clique5_minor(n: int, adj_masks: list) -> bool:
    verts = tuple(range(n))
    for r in range(5, n + 1):
        for sub in itertools.combinations(verts, r):
            for parts in _set_partitions(sub, 5):
                if not all(_mask_connected(p, adj_masks) for p in parts):
                    continue
                ok = True
                for i in range(5):
                    nbr = 0
                    m = parts[i]
                    while m:
                        v = (m & -m).bit_length() - 1
                        m &= m - 1
                        nbr |= adj_masks[v]
                    for j in range(5):
                        if j != i and not (nbr & parts[j]):
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    return True
    return False


def _has_k33_minor(n: int, adj_masks: list) -> bool:
    verts = tuple(range(n))
    for r in range(6, n + 1):
        for sub in itertools.combinations(verts, r):
            for parts in _set_partitions(sub, 6):
                if not all(_mask_connected(p, adj_masks) for p in parts):
                    continue
                nbrs = []
                for p in parts:
                    nbr = 0
                    m = p
                    while m:
                        v = (m & -m).bit_length() - 1
                        m &= m - 1
                        nbr |= adj_masks[v]
                    nbrs.append(nbr)
                for left in itertools.combinations(range(6), 3):
                    if 0 not in left:
                        continue
                    right = [i for i in range(6) if i not in left]
                    if all(nbrs[i] & parts[j] for i in left for j in right):
                        return True
    return False


def is_planar(g: LabelledGraph) -> bool:
    """Small-n planarity oracle: edge-count pruning plus exhaustive search
    for a K5 or K3,3 minor.  Supports at most 12 vertices."""
    nv = g.n_vertices
    if nv > MAX_PLANARITY_N:
        raise ValueError(f"planarity oracle supports at most {MAX_PLANARITY_N} vertices")
    if nv <= 4:
        return True
    if len(g.edges) > 3 * nv - 6:
        return False
    verts = g.vertices()
    index = {v: i for i, v in enumerate(verts)}
    adj_masks = [0] * nv
    for a, b in g.edges:
        adj_masks[index[a]] |= 1 << index[b]
        adj_masks[index[b]] |= 1 << index[a]
    if _has_clique5_minor(nv, adj_masks):
        return False
    if nv >= 6 and _has_k33_minor(nv, adj_masks):
        return False
    return True


# -- exhaustive enumeration ------------------------------------------------


def _edge_pairs(n: int) -> list:
    return [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]


def _mask_is_connected_graph(mask: int, n: int, pairs: list) -> bool:
    adj = [0] * (n + 1)
    for i, (a, b) in enumerate(pairs):
        if mask >> i & 1:
            adj[a] |= 1 << b
            adj[b] |= 1 << a
    target = ((1 << n) - 1) << 1
    seen = 2  # vertex 1
    frontier = 2
    while frontier:
        nxt = 0
        f = frontier
        while f:
            v = (f & -f).bit_length() - 1
            f &= f - 1
            nxt |= adj[v]
        frontier = nxt & ~seen
        seen |= nxt
    return seen == target


def graph_from_mask(n: int, mask: int, pairs: Optional[list] = None) -> LabelledGraph:
    if pairs is None:
        pairs = _edge_pairs(n)
    edges = tuple(pairs[i] for i in range(len(pairs)) if mask >> i & 1)
    return LabelledGraph(n, edges)


def iter_graph_masks(n: int, min_edges: int = 0, max_edges: Optional[int] = None) -> Iterator[int]:
    """All edge-set bitmasks on n labelled vertices with an edge-count window."""
    pairs = _edge_pairs(n)
    m = len(pairs)
    if max_edges is None:
        max_edges = m
    for k in range(min_edges, max_edges + 1):
        for combo in itertools.combinations(range(m), k):
            mask = 0
            for i in combo:
                mask |= 1 << i
            yield mask


def enumerate_graphs(n: int, predicate: Optional[Callable[[LabelledGraph], bool]] = None) -> Iterator[LabelledGraph]:
    """All labelled simple graphs on {1..n} satisfying the predicate, in a
    fixed deterministic (lexicographic edge-set) order.  n <= 7."""
    if n > MAX_ENUM_N:
        raise ValueError(f"exhaustive enumeration supports at most n = {MAX_ENUM_N}")
    if n < 1:
        raise ValueError("n must be positive")
    pairs = _edge_pairs(n)
    for mask in range(1 << len(pairs)):
        g = graph_from_mask(n, mask, pairs)
        if predicate is None or predicate(g):
            yield g


def iter_connected_masks(n: int, max_edges: Optional[int] = None) -> Iterator[int]:
    """Bitmasks of connected graphs on {1..n}; fast path for oracles."""
    pairs = _edge_pairs(n)
    m = len(pairs)
    cap = m if max_edges is None else max_edges
    for mask in range(1 << m):
        if mask.bit_count() < n - 1 or mask.bit_count() > cap:
            continue
        if _mask_is_connected_graph(mask, n, pairs):
            yield mask


def consistent_relabel(g: LabelledGraph, keep: Iterable) -> LabelledGraph:
    """Restriction of g to the kept labels, relabelled to {1..k} by the unique
    order-preserving map.  The unlabelled vertex, if any, is dropped."""
    kept = sorted(set(keep))
    if not kept:
        raise ValueError("keep must be a nonempty label subset")
    if kept[0] < 1 or kept[-1] > g.size:
        raise ValueError("keep contains labels outside the graph")
    mapping = {old: i + 1 for i, old in enumerate(kept)}
    edges = tuple(
        (mapping[a], mapping[b])
        for a, b in g.edges
        if a in mapping and b in mapping
    )
    root = mapping.get(g.root) if g.root is not None else None
    return LabelledGraph.make(len(kept), edges, root)


# -- exchange format -------------------------------------------------------


def to_exchange(g: LabelledGraph) -> str:
    """One-line graph format ``n;u,v u,v ...;root`` with sorted edge pairs."""
    if g.has_unlabelled:
        raise ValueError("exchange format covers fully labelled graphs only")
    edges = " ".join(f"{a},{b}" for a, b in g.edges)
    root = "" if g.root is None else str(g.root)
    return f"{g.size};{edges};{root}"


def from_exchange(line: str) -> LabelledGraph:
    parts = line.strip().split(";")
    if len(parts) != 3:
        raise ValueError(f"malformed graph line: {line!r}")
    n = int(parts[0])
    edges = []
    if parts[1].strip():
        for tok in parts[1].split():
            a, b = tok.split(",")
            edges.append((int(a), int(b)))
    root = int(parts[2]) if parts[2].strip() else None
    return LabelledGraph.make(n, edges, root)
