"""Samplers: Boltzmann generation of weighted rooted graphs, size-conditioned
block trees, conditioned decorations, and the full fixed-size pipeline whose
output law is exactly the block-weighted law on rooted class members.

Size conditioning draws the outdegree sequence of the block tree from n
i.i.d. offspring variables conditioned to sum to n-1 and applies the unique
cycle rotation.  Small instances use plain batched rejection; large ones use
an exact divide-and-conquer scheme that splits the conditioned sum with the
true conditional law at every step (tables of sum distributions for the
halving sizes, built by convolution), falling back to rejection on blocks
where it is cheap.  Determinism: identical (algorithm, seed, stream) handles
reproduce identical output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .blocktree import Decoration, DecoratedBlockTree, LabelAllocation, LabelledBlock, PlaneTree, rebuild_graph
from .classes import BlockClassSpec
from .graphs import LabelledGraph, block_decompose, iter_connected_masks, graph_from_mask
from .phase import ReproductionLaw, phi_pick_tables, reproduction_law, solve_phase

__all__ = [
    "RngHandle",
    "SampleOutput",
    "boltzmann_phi",
    "boltzmann_cstar",
    "boltzmann_cstar_size",
    "bienayme_conditioned",
    "conditioned_outdegrees",
    "decoration_conditioned",
    "sample_pnu",
    "exact_small_sampler",
    "cstar_value",
]

REJECTION_ONLY_N = 256  # conditioned trees up to this size use plain rejection
DIRECT_CONV_N = 1024  # split tables by direct convolution up to this size
DEFAULT_DRAW_BUDGET = 10**9


@dataclass(frozen=True)
class RngHandle:
    """Reproducible random source: a fixed, documented generator (PCG64 as
    shipped in numpy) plus a 64-bit seed and a stream index for replicates."""

    seed: int
    stream: int = 0
    algorithm: str = "pcg64"

    def generator(self) -> np.random.Generator:
        if self.algorithm != "pcg64":
            raise ValueError(f"unknown rng algorithm {self.algorithm!r}")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def with_stream(self, stream: int) -> "RngHandle":
        return replace(self, stream=stream)


RngLike = Union[RngHandle, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class SampleOutput:
    """One sample: the block tree, per-vertex decorations (size tuples for
    abstract classes, Decoration objects for concrete ones), the rebuilt
    rooted graph for concrete classes, and the weights used."""

    tree: PlaneTree
    decorations: tuple
    graph: Optional[LabelledGraph]
    u: float
    n: Optional[int] = None
    x: Optional[float] = None

    def decoration_sizes(self, v: int) -> tuple:
        dec = self.decorations[v]
        if isinstance(dec, Decoration):
            return tuple(b.size for b in dec.blocks)
        return tuple(dec)


# -- Poisson and phi tables --------------------------------------------------


def _poisson_inversion(gen: np.random.Generator, lam: float) -> int:
    """Inversion sampling; shipped configurations keep the mean small
    (u B'(y) well below 30), where inversion is exact and fast."""
    target = gen.random()
    p = math.exp(-lam)
    cdf = p
    k = 0
    while target > cdf:
        k += 1
        p *= lam / k
        cdf += p
        if k > 10**6:
            raise RuntimeError("Poisson inversion ran away; mean too large?")
    return k


_PHI_TABLE_CACHE: dict = {}


def _phi_tables(cls: BlockClassSpec, y: float, u: float, tail_eps: float = 1e-9):
    """(lam, size_cdf) for the Boltzmann decoration sampler at point y:
    the block count is Poisson(u B'(y)) and each block has size j with
    probability b'_j y^j / (j! B'(y)).  The size table is truncated once its
    missing mass falls below tail_eps (renormalized; documented bias)."""
    key = (id(cls), float(y), float(u))
    hit = _PHI_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    bp = cls.bprime_value(y)
    lam = u * bp
    cap = min(cls.weight_cap, 2 * 10**6)
    qs = []
    acc = 0.0
    k = 0
    while k < cap:
        k += 1
        term = cls.ordinary_weight_float(k) * y**k
        qs.append(term)
        acc += term
        if acc >= bp * (1.0 - tail_eps):
            break
    q = np.array(qs)
    cdf = np.cumsum(q)
    cdf /= cdf[-1]
    out = (lam, cdf)
    _PHI_TABLE_CACHE[key] = out
    return out


def _draw_phi_sizes(gen: np.random.Generator, lam: float, size_cdf: np.ndarray) -> list:
    k = _poisson_inversion(gen, lam)
    if k == 0:
        return []
    return [int(j) + 1 for j in np.searchsorted(size_cdf, gen.random(k))]


def _uniform_decoration(cls: BlockClassSpec, sizes: Sequence[int], gen: np.random.Generator) -> Decoration:
    """Blocks of the given sizes with a uniform well-labelling of {1..total}."""
    total = int(sum(sizes))
    perm = [int(v) + 1 for v in gen.permutation(total)]
    entries = []
    pos = 0
    for j in sizes:
        labels = tuple(sorted(perm[pos : pos + j]))
        pos += j
        shape = cls.block_sampler(j, gen)
        entries.append(LabelledBlock(shape, labels))
    return Decoration(tuple(entries))


def boltzmann_phi(cls: BlockClassSpec, y: float, u: float, rng: RngLike):
    """One Boltzmann decoration at parameter y: a Poisson(u B'(y)) number of
    independent derived blocks, sizes biased by b'_j y^j / j!.  Returns a
    tuple of sizes for abstract classes, a Decoration otherwise."""
    if not 0 < y <= cls.radius * (1 + 1e-12):
        raise ValueError(f"y = {y} outside (0, rho_B]")
    gen = _as_generator(rng)
    lam, cdf = _phi_tables(cls, y, u)
    sizes = _draw_phi_sizes(gen, lam, cdf)
    if cls.abstract or cls.block_sampler is None:
        if not cls.abstract and cls.block_sampler is None:
            raise ValueError(f"class {cls.name} has no block sampler")
        return tuple(sizes)
    return _uniform_decoration(cls, sizes, gen)


# -- Boltzmann sampler for the rooted class ---------------------------------


def cstar_value(cls: BlockClassSpec, x: float, u: float) -> float:
    """Value of the weighted rooted series at x <= rho(u): the smallest
    positive root of y = x exp(u B'(y))."""
    sol = solve_phase(cls, u)
    if not 0 < x <= sol.rho * (1 + 1e-12):
        raise ValueError(f"x = {x} outside (0, rho(u) = {sol.rho}]")
    lo, hi = 0.0, sol.y
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid - x * math.exp(u * cls.bprime_value(mid)) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def boltzmann_cstar(
    cls: BlockClassSpec,
    x: float,
    u: float,
    rng: RngLike,
    max_size: Optional[int] = None,
) -> Optional[SampleOutput]:
    """Boltzmann sampler of the u-weighted rooted class at parameter x:
    P(output g) proportional to u^{b(g)} x^{|g|} / |g|!.

    Runs on an explicit work stack.  When ``max_size`` is given, generation
    aborts once the size provably exceeds it and None is returned (used for
    bucketed statistics; the law conditioned on size <= max_size is
    unaffected)."""
    gen = _as_generator(rng)
    yv = cstar_value(cls, x, u)
    lam, cdf = _phi_tables(cls, yv, u)
    degs: list = []
    sizes_per_vertex: list = []
    stack = [1]
    while stack:
        if stack[-1] == 0:
            stack.pop()
            continue
        stack[-1] -= 1
        sizes = _draw_phi_sizes(gen, lam, cdf)
        d = sum(sizes)
        degs.append(d)
        sizes_per_vertex.append(sizes)
        if max_size is not None and (len(degs) + sum(stack) + d) > max_size:
            return None
        if d:
            stack.append(d)
    tree = PlaneTree.from_outdegrees(degs)
    if cls.abstract:
        decorations = tuple(tuple(s) for s in sizes_per_vertex)
        return SampleOutput(tree, decorations, None, u=u, x=x)
    # blocks were drawn i.i.d.: labels are a uniform reshuffle in draw order
    decorations = tuple(
        _uniform_decoration(cls, sizes, gen) if sizes else Decoration.empty()
        for sizes in sizes_per_vertex
    )
    return _finish_labelled(cls, tree, decorations, gen, u=u, x=x)


def boltzmann_cstar_size(
    cls: BlockClassSpec, x: float, u: float, rng: RngLike, max_size: Optional[int] = None
) -> Optional[int]:
    """Size-only fast path of :func:`boltzmann_cstar` (same size law)."""
    gen = _as_generator(rng)
    yv = cstar_value(cls, x, u)
    lam, cdf = _phi_tables(cls, yv, u)
    total = 1
    pending = 1
    while pending:
        pending -= 1
        k = _poisson_inversion(gen, lam)
        if k:
            d = int(np.searchsorted(cdf, gen.random(k)).sum()) + k
            total += d
            pending += d
        if max_size is not None and total > max_size:
            return None
    return total


def _finish_labelled(
    cls: BlockClassSpec,
    tree: PlaneTree,
    decorations: tuple,
    gen: np.random.Generator,
    u: float,
    n: Optional[int] = None,
    x: Optional[float] = None,
) -> SampleOutput:
    """Uniform label allocation (root uniform, the rest partitioned uniformly
    into per-vertex sets sized by outdegree) and graph rebuild."""
    nv = tree.n
    dtree = DecoratedBlockTree(tree, decorations)
    root_label = int(gen.integers(1, nv + 1))
    rest = [lab for lab in range(1, nv + 1) if lab != root_label]
    order = gen.permutation(nv - 1) if nv > 1 else []
    shuffled = [rest[int(i)] for i in order]
    label_sets = []
    pos = 0
    for v in range(nv):
        d = len(tree.children[v])
        label_sets.append(tuple(sorted(shuffled[pos : pos + d])))
        pos += d
    alloc = LabelAllocation(root_label, tuple(label_sets))
    graph = rebuild_graph(dtree, alloc)
    return SampleOutput(tree, decorations, graph, u=u, n=n, x=x)


# -- size-conditioned block trees --------------------------------------------


class _ConditionedSumSampler:
    """Outdegree sequences of exactly k i.i.d. draws conditioned on their sum,
    sampled exactly by recursive halving with the true split law.

    ``p`` is the (n-1)-truncated, renormalized offspring law; tables hold the
    distribution of the sum of k draws (restricted to 0..n-1) for every k in
    the halving set of n."""

    REJECT_DRAWS = 4096  # switch to rejection once k / P(sum) drops below this

    def __init__(self, law: ReproductionLaw, n: int):
        self.law = law
        self.n = n
        p = law.truncated_renormalized(n)
        if p[0] <= 0:
            raise ValueError("offspring law gives no leaves; conditioning impossible")
        self.p = np.concatenate([p, np.zeros(n - len(p))]) if len(p) < n else p
        self.cdf = np.cumsum(self.p)
        self.tables: dict = {1: self.p}
        self._build(n)
        if self.tables[n][n - 1] <= 0:
            raise ValueError(f"P(sum of {n} outdegrees = {n - 1}) vanishes; law is degenerate")

    def _build(self, k: int) -> None:
        if k in self.tables:
            return
        k1, k2 = k // 2, k - k // 2
        self._build(k1)
        self._build(k2)
        a, b = self.tables[k1], self.tables[k2]
        if self.n <= DIRECT_CONV_N:
            conv = np.convolve(a, b)[: self.n]
        else:
            from scipy.signal import fftconvolve

            conv = fftconvolve(a, b)[: self.n]
            np.clip(conv, 0.0, None, out=conv)
        if len(conv) < self.n:
            conv = np.concatenate([conv, np.zeros(self.n - len(conv))])
        self.tables[k] = conv

    def _reject_block(self, gen: np.random.Generator, k: int, s: int, expected: float) -> Optional[np.ndarray]:
        budget = int(16 * expected) + 16
        batch = max(1, min(int(2 * expected) + 1, max(1, 200_000 // k)))
        done = 0
        while done < budget:
            draws = np.searchsorted(self.cdf, gen.random((batch, int(k)))).astype(np.int64)
            sums = draws.sum(axis=1)
            hits = np.nonzero(sums == s)[0]
            if hits.size:
                return draws[hits[0]]
            done += batch
        return None

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        n = self.n
        out = np.zeros(n, dtype=np.int64)
        stack = [(0, n, n - 1)]
        while stack:
            off, k, s = stack.pop()
            if s == 0:
                continue  # outdegrees already zero
            if k == 1:
                out[off] = s
                continue
            fk = self.tables[k]
            ps = fk[s]
            if ps > 0:
                expected = 1.0 / ps
                if k * expected <= self.REJECT_DRAWS:
                    seq = self._reject_block(gen, k, s, expected)
                    if seq is not None:
                        out[off : off + k] = seq
                        continue
            k1 = k // 2
            k2 = k - k1
            f1, f2 = self.tables[k1], self.tables[k2]
            w = f1[: s + 1] * f2[s :: -1][: s + 1]
            total = w.sum()
            if total <= 0:
                raise ValueError("conditioned split has no mass; law is degenerate")
            cum = np.cumsum(w)
            a = int(np.searchsorted(cum, gen.random() * total))
            a = min(a, s)
            stack.append((off, k1, a))
            stack.append((off + k1, k2, s - a))
        return out


_SPLIT_CACHE: dict = {}


def _split_sampler(law: ReproductionLaw, n: int) -> _ConditionedSumSampler:
    key = (id(law), n)
    hit = _SPLIT_CACHE.get(key)
    if hit is None:
        hit = _ConditionedSumSampler(law, n)
        _SPLIT_CACHE[key] = hit  # holds a reference to law, keeping the id stable
    return hit


def _rotate_outdegrees(degs: np.ndarray) -> np.ndarray:
    """Cycle lemma: the unique rotation of an outdegree sequence with sum n-1
    whose depth-first walk stays nonnegative (rotate past the first minimum
    of the walk)."""
    walk = np.cumsum(degs - 1)
    idx = int(np.argmin(walk))
    return np.concatenate([degs[idx + 1 :], degs[: idx + 1]])


def _rotate_to_tree(degs: np.ndarray) -> PlaneTree:
    return PlaneTree.from_outdegrees([int(d) for d in _rotate_outdegrees(degs)])


def conditioned_outdegrees(law: ReproductionLaw, n: int, rng: RngLike) -> np.ndarray:
    """Preorder outdegree sequence of Bienaymé(law, n): identical law (and
    identical random stream) as :func:`bienayme_conditioned`, without building
    the tree object.  Used by the statistics harness at large n."""
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    gen = _as_generator(rng)
    if n <= REJECTION_ONLY_N:
        return _rejection_outdegrees(law, n, gen, DEFAULT_DRAW_BUDGET)
    sampler = _split_sampler(law, n)
    return _rotate_outdegrees(sampler.sample(gen))


def _rejection_outdegrees(
    law: ReproductionLaw, n: int, gen: np.random.Generator, draw_budget: int
) -> np.ndarray:
    p = law.truncated_renormalized(n)
    if p[0] <= 0:
        raise ValueError("offspring law gives no leaves; conditioning impossible")
    cdf = np.cumsum(p)
    batch = max(8, min(4096, 65536 // n))
    done = 0
    while done < draw_budget:
        draws = np.searchsorted(cdf, gen.random((batch, n))).astype(np.int64)
        sums = draws.sum(axis=1)
        hits = np.nonzero(sums == n - 1)[0]
        if hits.size:
            return _rotate_outdegrees(draws[hits[0]])
        done += batch * n
    raise RuntimeError(
        f"rejection budget of {draw_budget} outdegree draws exhausted at n = {n}"
    )


def bienayme_conditioned(
    law: ReproductionLaw,
    n: int,
    rng: RngLike,
    draw_budget: int = DEFAULT_DRAW_BUDGET,
) -> PlaneTree:
    """A branching-process tree with the given offspring law conditioned to
    have exactly n vertices: n i.i.d. outdegrees from the (n-1)-truncated,
    renormalized law conditioned to sum to n-1 (an identical law; truncation
    introduces no bias), rotated into a valid preorder."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return PlaneTree.single()
    gen = _as_generator(rng)
    if n <= REJECTION_ONLY_N:
        return PlaneTree.from_outdegrees(
            [int(d) for d in _rejection_outdegrees(law, n, gen, draw_budget)]
        )
    sampler = _split_sampler(law, n)
    return _rotate_to_tree(sampler.sample(gen))


# -- conditioned decorations -------------------------------------------------


def _decoration_tables(cls: BlockClassSpec, u: float, cap: int):
    """(f, w): ordinary coefficients of exp(u B') and the pick weights
    w[j] = j u b'_j / j!, up to degree cap (shared cache with the law)."""
    return phi_pick_tables(cls, u, max(cap, 256))


def _conditioned_sizes(f: np.ndarray, w: np.ndarray, d: int, gen: np.random.Generator) -> list:
    """Block sizes of a weighted decoration conditioned to total size d:
    repeatedly pick the size of the block holding the smallest remaining
    label, with P(j | total c) = j u b'_j/j! * f_{c-j} / (c f_c)."""
    sizes = []
    cur = d
    while cur > 0:
        if cur == 1:
            sizes.append(1)
            break
        wv = w[1 : cur + 1] * f[cur - 1 :: -1][:cur]
        total = wv.sum()
        if total <= 0:
            raise ValueError(f"no decoration of size {cur} has positive weight")
        cum = np.cumsum(wv)
        j = int(np.searchsorted(cum, gen.random() * total)) + 1
        j = min(j, cur)
        sizes.append(j)
        cur -= j
    return sizes


def _conditioned_concrete(cls: BlockClassSpec, sizes: list, d: int, gen: np.random.Generator) -> Decoration:
    """Labelled decoration: the first block takes the smallest remaining label
    plus a uniform choice of companions; block shapes drawn uniformly."""
    avail = list(range(1, d + 1))
    entries = []
    for j in sizes:
        first = avail.pop(0)
        if j > 1:
            picked_idx = sorted(gen.choice(len(avail), size=j - 1, replace=False).tolist())
            chosen = [first] + [avail[i] for i in picked_idx]
            for i in reversed(picked_idx):
                avail.pop(i)
        else:
            chosen = [first]
        shape = cls.block_sampler(j, gen)
        entries.append(LabelledBlock(shape, tuple(sorted(chosen))))
    return Decoration(tuple(entries))


def decoration_conditioned(cls: BlockClassSpec, u: float, d: int, rng: RngLike):
    """A weighted decoration conditioned to have total size d (weight
    u^{#blocks}); returns a size tuple for abstract classes, a Decoration
    otherwise."""
    if d < 0:
        raise ValueError("size must be nonnegative")
    gen = _as_generator(rng)
    if d == 0:
        return () if cls.abstract else Decoration.empty()
    f, w = _decoration_tables(cls, u, d)
    if f[d] <= 0:
        raise ValueError(f"class {cls.name} has no decoration of size {d}")
    sizes = _conditioned_sizes(f, w, d, gen)
    if cls.abstract:
        return tuple(sizes)
    if cls.block_sampler is None:
        raise ValueError(f"class {cls.name} has no block sampler")
    return _conditioned_concrete(cls, sizes, d, gen)


# -- the full fixed-size pipeline --------------------------------------------


_LAW_CACHE: dict = {}


def _law_for(cls: BlockClassSpec, u: float, support: int) -> ReproductionLaw:
    key = (id(cls), float(u))
    hit = _LAW_CACHE.get(key)
    if hit is None or len(hit.probs) < support + 1:
        hit = reproduction_law(cls, u, support)
        _LAW_CACHE[key] = hit
    return hit


def sample_pnu(cls: BlockClassSpec, u: float, n: int, rng: RngLike) -> SampleOutput:
    """One sample of the u-weighted law on rooted connected class members of
    size n: conditioned block tree, per-vertex conditioned decorations, and a
    uniform allocation of labels (root label uniform, the rest partitioned
    uniformly into the decoration label sets)."""
    if n < 1:
        raise ValueError("n must be positive")
    gen = _as_generator(rng)
    if n == 1:
        tree = PlaneTree.single()
        decorations = ((),) if cls.abstract else (Decoration.empty(),)
        graph = None if cls.abstract else LabelledGraph.make(1, [], root=1)
        return SampleOutput(tree, decorations, graph, u=u, n=n)
    law = _law_for(cls, u, n - 1)
    tree = bienayme_conditioned(law, n, gen)
    f, w = _decoration_tables(cls, u, n - 1)
    if cls.abstract:
        decorations = tuple(
            tuple(_conditioned_sizes(f, w, len(ch), gen)) if ch else ()
            for ch in tree.children
        )
        return SampleOutput(tree, decorations, None, u=u, n=n)
    decorations = tuple(
        _conditioned_concrete(cls, _conditioned_sizes(f, w, len(ch), gen), len(ch), gen)
        if ch
        else Decoration.empty()
        for ch in tree.children
    )
    return _finish_labelled(cls, tree, decorations, gen, u=u, n=n)


# -- exact small-n oracle sampler --------------------------------------------


_EXACT_TABLE_CACHE: dict = {}


def _exact_table(cls: BlockClassSpec, u: float, n: int):
    key = (id(cls), float(u), n)
    hit = _EXACT_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    items = []
    weights = []
    if n == 1:
        items.append(LabelledGraph.make(1, [], root=1))
        weights.append(1.0)
    else:
        for mask in iter_connected_masks(n):
            g = graph_from_mask(n, mask)
            if cls.membership is not None and not cls.membership(g):
                continue
            b = len(block_decompose(g).blocks)
            for r in range(1, n + 1):
                items.append(g.with_root(r))
                weights.append(float(u) ** b)
    cdf = np.cumsum(np.array(weights))
    out = (items, cdf)
    _EXACT_TABLE_CACHE[key] = out
    return out


def exact_small_sampler(cls: BlockClassSpec, u: float, n: int, rng: RngLike) -> LabelledGraph:
    """Direct sample from the u-weighted law by enumerating all rooted
    connected class members (n <= 6) and inverse-CDF lookup."""
    if n > 6:
        raise ValueError("exact enumeration sampler supports n <= 6")
    if cls.abstract:
        raise ValueError("exact sampler needs a concrete class")
    gen = _as_generator(rng)
    items, cdf = _exact_table(cls, u, n)
    i = int(np.searchsorted(cdf, gen.random() * cdf[-1]))
    return items[min(i, len(items) - 1)]
