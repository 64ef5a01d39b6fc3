"""Unordered binary trees as canonical plane representatives.

A class under recursive child swaps is represented by the unique plane tree
in which, at every internal vertex, code(left) >= code(right) for the
length-then-lexicographic order on codes (code length is 3n - 2, monotone in
the leaf count, so sizes compare first).  Class equality is string equality
of canonical codes.

The a-good machinery (distinct contraction marks, distinct child sizes at
every I_0 vertex of the trimming) makes the skeleton a class function with a
symmetry-free normal form (x_left > x_right at every branch), and the
decompose/reconstruct pair below realizes the resulting bijection.
"""

from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .enumeration import CountTable, Family, catalan_count, enumeration_cap_check, we_count
from .errors import (
    CapExceeded,
    InvalidInput,
    NotAGood,
    OrderViolation,
    SizeMismatch,
)
from . import plane as pl
from .plane import PlaneTree, Skeleton, preorder, subtree_at, trim

ENUM_CAP = 15
MEAN_HEIGHT_CAP = 12


def _key(t: PlaneTree) -> tuple[int, str]:
    # code length is monotone in leaf count: length-then-lex == (leaves, code)
    return (t.leaf_count, t.code)


def canonical_plane(t: PlaneTree) -> PlaneTree:
    """Rebuild t with children swapped bottom-up into canonical order."""
    built: dict[int, PlaneTree] = {}
    stack: list[tuple[PlaneTree, bool]] = [(t, False)]
    while stack:
        nd, expanded = stack.pop()
        if nd.is_leaf:
            built[id(nd)] = nd
        elif expanded:
            l, r = built[id(nd.left)], built[id(nd.right)]
            if _key(l) < _key(r):
                l, r = r, l
            built[id(nd)] = PlaneTree(l, r)
        else:
            stack.append((nd, True))
            stack.append((nd.right, False))
            stack.append((nd.left, False))
    return built[id(t)]


@dataclass(frozen=True)
class UnorderedTree:
    """A ~-class, held as its canonical plane representative."""

    plane: PlaneTree

    @property
    def code(self) -> str:
        return self.plane.code

    @property
    def n(self) -> int:
        return self.plane.leaf_count

    def __repr__(self) -> str:
        return f"UnorderedTree({self.code!r})"


def canonicalize(t: PlaneTree | UnorderedTree) -> UnorderedTree:
    if isinstance(t, UnorderedTree):
        return t
    return UnorderedTree(canonical_plane(t))


def equivalent(t: PlaneTree | UnorderedTree, t2: PlaneTree | UnorderedTree) -> bool:
    return canonicalize(t).code == canonicalize(t2).code


def orbit(t: PlaneTree) -> list[PlaneTree]:
    """All plane representatives of t's class (exponential; small trees only)."""
    if t.is_leaf:
        return [t]
    out: dict[str, PlaneTree] = {}
    for l in orbit(t.left):
        for r in orbit(t.right):
            for cand in (PlaneTree(l, r), PlaneTree(r, l)):
                out.setdefault(cand.code, cand)
    return list(out.values())


_ENUM_CACHE: dict[int, list[PlaneTree]] = {1: [pl.leaf()]}


def _enum_canonical(n: int) -> list[PlaneTree]:
    if n in _ENUM_CACHE:
        return _ENUM_CACHE[n]
    out: list[PlaneTree] = []
    for n2 in range(1, n // 2 + 1):
        n1 = n - n2
        if n1 > n2:
            for a in _enum_canonical(n1):
                for b in _enum_canonical(n2):
                    out.append(PlaneTree(a, b))
        else:
            half = sorted(_enum_canonical(n1), key=_key)
            for i in range(len(half)):
                for j in range(i + 1):
                    out.append(PlaneTree(half[i], half[j]))
    out.sort(key=_key)
    _ENUM_CACHE[n] = out
    return out


def enumerate_unordered(n: int) -> list[UnorderedTree]:
    """All canonical forms with n leaves, each once, sorted by code."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    enumeration_cap_check(n, ENUM_CAP, "enumerate_unordered")
    return [UnorderedTree(t) for t in _enum_canonical(n)]


@contextmanager
def _recursion_room(depth: int):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, depth))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _randbelow(rng: np.random.Generator, m: int) -> int:
    """Exactly uniform arbitrary-precision integer in [0, m)."""
    k = m.bit_length()
    chunks = (k + 31) // 32
    shift = 32 * chunks - k
    while True:
        r = 0
        for _ in range(chunks):
            r = (r << 32) | int(rng.integers(0, 1 << 32))
        r >>= shift
        if r < m:
            return r


def sample_unordered_uniform(
    n: int, rng: np.random.Generator, counts: CountTable | None = None
) -> UnorderedTree:
    """Exactly uniform tree on n-leaf unordered trees.

    Recursive: the split multiset {n1, n2} is drawn with probability
    t_{n1} t_{n2} / t_n (n1 > n2) or (t_h (t_h + 1)/2) / t_n (n1 = n2 = h);
    unequal splits recurse independently, equal splits draw an ordered pair
    and keep distinct pairs with probability 1/2 (retry otherwise), which is
    uniform over multisets.  Thresholds are exact integers.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if counts is None:
        counts = CountTable(Family.UNORDERED)
    counts.extend_to(n)
    t = counts.counts

    def samp(m: int) -> PlaneTree:
        if m == 1:
            return pl.leaf()
        r = _randbelow(rng, t[m])
        acc = 0
        n2 = 0
        for n2 in range(1, m // 2 + 1):
            n1 = m - n2
            acc += t[n1] * t[n2] if n1 > n2 else t[n2] * (t[n2] + 1) // 2
            if r < acc:
                break
        n1 = m - n2
        if n1 > n2:
            return PlaneTree(samp(n1), samp(n2))
        while True:
            a, b = samp(n2), samp(n2)
            if a.code == b.code or rng.random() < 0.5:
                break
        return PlaneTree(a, b) if _key(a) >= _key(b) else PlaneTree(b, a)

    with _recursion_room(4 * n + 100):
        return UnorderedTree(samp(n))


def _rep(t: PlaneTree | UnorderedTree) -> PlaneTree:
    return t.plane if isinstance(t, UnorderedTree) else t


def is_a_good(t: UnorderedTree | PlaneTree, a: int) -> bool:
    """a-goodness: contraction marks of t[a] pairwise distinct, and distinct
    child subtree sizes at every I_0 vertex of t[a] (a class property)."""
    rep = _rep(t)
    if rep.leaf_count <= a:
        raise InvalidInput(f"needs |t| > a, got |t|={rep.leaf_count}, a={a}")
    tr = trim(rep, a)
    shape, x, pi, _ = pl._contract_full(tr)
    if len(set(x)) != len(x):
        return False
    for i, (_, nd) in enumerate(preorder(shape)):
        if nd.is_leaf:
            u = pi[i]
            if subtree_at(rep, u + (1,)).leaf_count == subtree_at(rep, u + (2,)).leaf_count:
                return False
    return True


def _children_indices(shape: PlaneTree) -> dict[int, tuple[int, int]]:
    """preorder index of an internal vertex -> preorder indices of children."""
    out: dict[int, tuple[int, int]] = {}
    nodes = list(preorder(shape))
    for i, (_, nd) in enumerate(nodes):
        if not nd.is_leaf:
            li = i + 1
            ri = li + (2 * nd.left.leaf_count - 1)
            out[i] = (li, ri)
    return out


@dataclass(frozen=True)
class GoodSkeleton:
    """Normalized skeleton of an a-good tree: marks pairwise distinct and
    strictly decreasing across every sibling pair."""

    shape: PlaneTree
    x: tuple[int, ...]
    y: tuple[int, ...]
    a: int

    @property
    def total_marks(self) -> int:
        return sum(self.x)

    def validate(self) -> None:
        Skeleton(self.shape, self.x, self.y, self.a).validate()
        if len(set(self.x)) != len(self.x):
            raise NotAGood("marks are not pairwise distinct")
        for _, (li, ri) in _children_indices(self.shape).items():
            if not self.x[li] > self.x[ri]:
                raise NotAGood("marks are not decreasing across a sibling pair")

    def as_plane_skeleton(self) -> Skeleton:
        return Skeleton(self.shape, self.x, self.y, self.a)


def _normalize_marked(shape, x, y, payload_x=None, payload_y=None):
    """Reorder sibling subtrees so root marks decrease; permute the x/y data
    and the optional per-vertex / per-leaf payloads the same way."""
    idx = [0]
    lidx = [0]

    def build(nd):
        i = idx[0]
        idx[0] += 1
        if nd.is_leaf:
            j = lidx[0]
            lidx[0] += 1
            return {
                "x": x[i],
                "px": None if payload_x is None else payload_x[i],
                "leaf": (y[j], None if payload_y is None else payload_y[j]),
                "kids": None,
            }
        l = build(nd.left)
        r = build(nd.right)
        return {
            "x": x[i],
            "px": None if payload_x is None else payload_x[i],
            "leaf": None,
            "kids": [l, r],
        }

    root = build(shape)

    def sort(node_):
        if node_["kids"] is None:
            return
        for k in node_["kids"]:
            sort(k)
        if node_["kids"][0]["x"] < node_["kids"][1]["x"]:
            node_["kids"].reverse()

    sort(root)
    bits, xs, ys, pxs, pys = [], [], [], [], []

    def flatten(node_):
        xs.append(node_["x"])
        pxs.append(node_["px"])
        if node_["kids"] is None:
            bits.append(0)
            ys.append(node_["leaf"][0])
            pys.append(node_["leaf"][1])
        else:
            bits.append(1)
            for k in node_["kids"]:
                flatten(k)

    flatten(root)
    new_shape = pl._tree_from_preorder_bits(bits)
    return new_shape, tuple(xs), tuple(ys), tuple(pxs), tuple(pys)


def skeleton_unordered(t: UnorderedTree | PlaneTree, a: int) -> GoodSkeleton:
    """The unique symmetry-free representative of the skeleton of an a-good
    tree; deterministic function of the ~-class."""
    if not is_a_good(t, a):
        raise NotAGood(f"tree is not {a}-good")
    psk = pl.skeleton_plane(_rep(t), a)
    shape, xs, ys, _, _ = _normalize_marked(psk.shape, psk.x, psk.y)
    gs = GoodSkeleton(shape, xs, ys, a)
    gs.validate()
    return gs


def decompose_unordered(
    t: UnorderedTree | PlaneTree, a: int
) -> tuple[GoodSkeleton, list[UnorderedTree], list[tuple[UnorderedTree, UnorderedTree]]]:
    """Split an a-good tree into its good skeleton plus the grafted classes,
    indexed against the fixed fiber section (selector 0): subtrees run over
    shape vertices in preorder, top-down within each chain; forest pairs are
    size-ordered, largest first."""
    if not is_a_good(t, a):
        raise NotAGood(f"tree is not {a}-good")
    rep = _rep(t)
    tr = trim(rep, a)
    shape, x, pi, chains = pl._contract_full(tr)
    nodes = list(preorder(shape))
    chain_parts: list[tuple[UnorderedTree, ...]] = []
    leaf_payload: list[tuple[UnorderedTree, UnorderedTree]] = []
    ys: list[int] = []
    li = 0
    for i, (_, nd) in enumerate(nodes):
        chain_parts.append(
            tuple(canonicalize(subtree_at(rep, addr + (side,))) for addr, side in chains[i])
        )
        if nd.is_leaf:
            u = pi[i]
            c1 = canonicalize(subtree_at(rep, u + (1,)))
            c2 = canonicalize(subtree_at(rep, u + (2,)))
            if c1.n < c2.n:
                c1, c2 = c2, c1
            leaf_payload.append((c1, c2))
            ys.append(c1.n + c2.n)
            li += 1
    xs = tuple(x)
    nshape, nxs, nys, npx, npy = _normalize_marked(
        shape, xs, tuple(ys), payload_x=chain_parts, payload_y=leaf_payload
    )
    gs = GoodSkeleton(nshape, nxs, nys, a)
    gs.validate()
    subtrees = [part for parts in npx for part in parts]
    forests = list(npy)
    return gs, subtrees, forests


def reconstruct_unordered(
    sk: GoodSkeleton,
    subtrees: list[UnorderedTree],
    forests: list[tuple[UnorderedTree, UnorderedTree]],
) -> UnorderedTree:
    """Inverse of decompose_unordered (Pi_0^{-1} = fiber selector 0)."""
    sk.validate()
    a = sk.a
    if len(subtrees) != sk.total_marks:
        raise SizeMismatch(f"need {sk.total_marks} subtrees, got {len(subtrees)}")
    if len(forests) != sk.shape.leaf_count:
        raise SizeMismatch(f"need {sk.shape.leaf_count} forests, got {len(forests)}")
    for s in subtrees:
        if s.n > a:
            raise SizeMismatch(f"grafted subtree has {s.n} > a leaves")
    for (f1, f2), yv in zip(forests, sk.y):
        if f1.n <= f2.n:
            raise OrderViolation("forest pairs must satisfy |t| > |t'|")
        if f1.n > a:
            raise SizeMismatch(f"forest component has {f1.n} > a leaves")
        if f1.n + f2.n != yv:
            raise SizeMismatch(f"forest size {f1.n + f2.n} != leaf mass {yv}")
    t0 = pl.build_fiber_element(sk.shape, sk.x, 0)
    cls = pl.classify(t0)
    s_sorted = sorted(cls.skeleton_leaves)
    i0_sorted = sorted(cls.i0)
    leaf_repl = {u: s.plane for u, s in zip(s_sorted, subtrees)}
    i0_repl = {u: (f1.plane, f2.plane) for u, (f1, f2) in zip(i0_sorted, forests)}
    return canonicalize(pl._graft(t0, leaf_repl, i0_repl))


def height(t: UnorderedTree | PlaneTree) -> int:
    return pl.height(_rep(t))


def exact_mean_height(n: int, family: Family) -> Fraction:
    """Exact mean height under the uniform law, via the height-truncated
    counting recurrences (no enumeration): E[H] = sum_h P(H > h)."""
    enumeration_cap_check(n, MEAN_HEIGHT_CAP, "exact_mean_height")
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if n == 1:
        return Fraction(0)
    total = catalan_count(n) if family is Family.PLANE else we_count(n)

    def step(prev: list[int]) -> list[int]:
        # prev[m] = #trees with m leaves, height <= h; returns the h+1 table
        cur = [0] * (n + 1)
        cur[1] = 1
        for m in range(2, n + 1):
            if family is Family.PLANE:
                s = sum(prev[i] * prev[m - i] for i in range(1, m))
            else:
                s = sum(prev[m - i] * prev[i] for i in range(1, (m + 1) // 2))
                if m % 2 == 0:
                    s += prev[m // 2] * (prev[m // 2] + 1) // 2
            cur[m] = s
        return cur

    table = [0] * (n + 1)
    table[1] = 1  # height <= 0
    mean = Fraction(0)
    while table[n] != total:
        mean += 1 - Fraction(table[n], total)  # adds P(H > h)
        table = step(table)
    return mean
