"""Binary plane trees: structure, sampling, trimming, contraction, skeletons,
reconstruction, and the contour encoding.

Vertices are addressed by words over {1, 2} (tuples here, root = ()).  Every
vertex has 0 or 2 children; |t| is the number of leaves.  The text format is
bit-exact: leaf = "o", internal = "(" + left + right + ")".

The trimming/contraction pipeline: trim(t, a) keeps vertices all of whose
strict ancestors head subtrees with more than a leaves; contract collapses
the single-internal-child chains of a tree to a marked binary tree whose
marks record chain lengths; skeleton_plane adds, at each contracted leaf, the
leaf mass y in (a, 2a] that hung there.  decompose_plane/reconstruct_plane
realize the one-to-one correspondence between a tree with |t| > a and
(skeleton, fiber selector, grafted subtrees, grafted two-tree forests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ForestConstraintViolated,
    InvalidInput,
    MalformedPath,
    SizeMismatch,
)

Address = tuple[int, ...]


class PlaneTree:
    """Immutable binary plane tree; every vertex has 0 or 2 children."""

    __slots__ = ("left", "right", "leaf_count", "_code")

    def __init__(self, left: "PlaneTree | None" = None, right: "PlaneTree | None" = None):
        if (left is None) != (right is None):
            raise InvalidInput("a vertex has 0 or 2 children")
        self.left = left
        self.right = right
        self.leaf_count = 1 if left is None else left.leaf_count + right.leaf_count
        self._code: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def code(self) -> str:
        """Canonical text serialization ('o' / '(LR)'), built iteratively."""
        if self._code is None:
            parts: list[str] = []
            stack: list[PlaneTree | str] = [self]
            while stack:
                item = stack.pop()
                if isinstance(item, str):
                    parts.append(item)
                elif item.is_leaf:
                    parts.append("o")
                else:
                    parts.append("(")
                    stack.extend([")", item.right, item.left])
            self._code = "".join(parts)
        return self._code

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlaneTree):
            return NotImplemented
        return self.leaf_count == other.leaf_count and self.code == other.code

    def __hash__(self) -> int:
        return hash(self.code)

    def __repr__(self) -> str:
        return f"PlaneTree({self.code!r})"


_LEAF = PlaneTree()


def leaf() -> PlaneTree:
    return _LEAF


def node(left: PlaneTree, right: PlaneTree) -> PlaneTree:
    return PlaneTree(left, right)


def parse_tree(text: str) -> PlaneTree:
    """Parse the text format; inverse of PlaneTree.code."""
    text = text.strip()
    stack: list[list [PlaneTree]] = []
    result: PlaneTree | None = None
    for ch in text:
        if ch == "o":
            item: PlaneTree | None = _LEAF
        elif ch == "(":
            stack.append([])
            continue
        elif ch == ")":
            if not stack or len(stack[-1]) != 2:
                raise InvalidInput(f"malformed tree text {text!r}")
            l, r = stack.pop()
            item = PlaneTree(l, r)
        else:
            raise InvalidInput(f"unexpected character {ch!r} in tree text")
        if stack:
            stack[-1].append(item)
            if len(stack[-1]) > 2:
                raise InvalidInput(f"malformed tree text {text!r}")
        elif result is None:
            result = item
        else:
            raise InvalidInput(f"trailing content in tree text {text!r}")
    if result is None or stack:
        raise InvalidInput(f"malformed tree text {text!r}")
    return result


def subtree_at(t: PlaneTree, addr: Address) -> PlaneTree:
    cur = t
    for step in addr:
        if cur.is_leaf:
            raise InvalidInput(f"address {addr} not in tree")
        cur = cur.left if step == 1 else cur.right
    return cur


def preorder(t: PlaneTree):
    """Yield (address, node) in preorder (= lexicographic order on addresses)."""
    stack: list[tuple[Address, PlaneTree]] = [((), t)]
    while stack:
        addr, nd = stack.pop()
        yield addr, nd
        if not nd.is_leaf:
            stack.append((addr + (2,), nd.right))
            stack.append((addr + (1,), nd.left))


def leaf_addresses(t: PlaneTree) -> list[Address]:
    return [a for a, nd in preorder(t) if nd.is_leaf]


def tree_distance(u: Address, v: Address) -> int:
    """Graph distance |u| + |v| - 2|u ^ v| between vertex addresses."""
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return len(u) + len(v) - 2 * k


def height(t: PlaneTree) -> int:
    """Maximal vertex depth."""
    best = 0
    stack = [(t, 0)]
    while stack:
        nd, d = stack.pop()
        if nd.is_leaf:
            if d > best:
                best = d
        else:
            stack.append((nd.left, d + 1))
            stack.append((nd.right, d + 1))
    return best


@dataclass(frozen=True)
class VertexClassification:
    """Leaves, the internal partition by number of internal children, and the
    skeleton leaves (leaf children of I_1 vertices)."""

    leaves: frozenset[Address]
    i0: frozenset[Address]
    i1: frozenset[Address]
    i2: frozenset[Address]
    skeleton_leaves: frozenset[Address]


def classify(t: PlaneTree) -> VertexClassification:
    leaves, i0, i1, i2, skel = [], [], [], [], []
    for addr, nd in preorder(t):
        if nd.is_leaf:
            leaves.append(addr)
            continue
        k = (not nd.left.is_leaf) + (not nd.right.is_leaf)
        (i0, i1, i2)[k].append(addr)
        if k == 1:
            skel.append(addr + (1,) if nd.left.is_leaf else addr + (2,))
    return VertexClassification(
        frozenset(leaves), frozenset(i0), frozenset(i1), frozenset(i2), frozenset(skel)
    )


_ALL_TREES_CACHE: dict[int, list[PlaneTree]] = {}
ALL_TREES_CAP = 14


def all_plane_trees(n: int) -> list[PlaneTree]:
    """Exhaustive enumeration oracle (Catalan many; capped for sanity)."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if n > ALL_TREES_CAP:
        from .errors import CapExceeded

        raise CapExceeded(f"all_plane_trees capped at {ALL_TREES_CAP}")
    if n not in _ALL_TREES_CACHE:
        if n == 1:
            _ALL_TREES_CACHE[1] = [_LEAF]
        else:
            _ALL_TREES_CACHE[n] = [
                PlaneTree(L, R)
                for i in range(1, n)
                for L in all_plane_trees(i)
                for R in all_plane_trees(n - i)
            ]
    return _ALL_TREES_CACHE[n]


def sample_plane_uniform(n: int, rng: np.random.Generator) -> PlaneTree:
    """Exactly uniform tree on n-leaf plane trees, O(n) leaf-insertion growth.

    Each step picks a uniform vertex of the current tree and a side; the new
    internal vertex takes that vertex's place with the fresh leaf on the
    chosen side.  Forgetting the implied leaf labels leaves the uniform law.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if n == 1:
        return _LEAF
    size = 2 * n - 1
    left = [-1] * size
    right = [-1] * size
    parent = [-1] * size  # encodes (parent_index, side) as 2*p + (side-1)
    root = 0
    count = 1  # node slots in use
    for k in range(1, n):
        v = int(rng.integers(0, count))
        side = int(rng.integers(0, 2))
        u, w = count, count + 1  # new internal, new leaf
        count += 2
        pv = parent[v]
        if pv == -1:
            root = u
        else:
            p, s = pv >> 1, pv & 1
            if s == 0:
                left[p] = u
            else:
                right[p] = u
            parent[u] = pv
        if side == 0:
            left[u], right[u] = w, v
            parent[w], parent[v] = 2 * u, 2 * u + 1
        else:
            left[u], right[u] = v, w
            parent[v], parent[w] = 2 * u, 2 * u + 1
    return _tree_from_arrays(left, right, root)


def _tree_from_arrays(left: list[int], right: list[int], root: int) -> PlaneTree:
    built: dict[int, PlaneTree] = {}
    stack = [(root, False)]
    while stack:
        idx, expanded = stack.pop()
        if left[idx] == -1:
            built[idx] = _LEAF
        elif expanded:
            built[idx] = PlaneTree(built[left[idx]], built[right[idx]])
        else:
            stack.append((idx, True))
            stack.append((right[idx], False))
            stack.append((left[idx], False))
    return built[root]


def trim(t: PlaneTree, a: int) -> PlaneTree:
    """t[a]: vertices all of whose strict ancestors head subtrees with > a
    leaves.  Equivalently, every vertex v with |t_v| <= a becomes a leaf.
    The root is always kept; trim(t, 0) = trim(t, 1) = t."""
    if a < 0:
        raise InvalidInput("a must be >= 0")
    if a <= 1:
        return t
    built: dict[int, PlaneTree] = {}
    stack: list[tuple[PlaneTree, bool]] = [(t, False)]
    while stack:
        nd, expanded = stack.pop()
        if nd.is_leaf or nd.leaf_count <= a:
            built[id(nd)] = _LEAF
        elif expanded:
            built[id(nd)] = PlaneTree(built[id(nd.left)], built[id(nd.right)])
        else:
            stack.append((nd, True))
            stack.append((nd.right, False))
            stack.append((nd.left, False))
    return built[id(t)]


@dataclass(frozen=True)
class MarkedTree:
    """Contraction output: shape with one nonnegative integer mark per vertex.

    `x` and `pi` are preorder-aligned with `shape`; pi maps each shape vertex
    to the address (in the input tree) of the I_2/I_0 vertex it stands for.
    """

    shape: PlaneTree
    x: tuple[int, ...]
    pi: tuple[Address, ...]

    @property
    def total_marks(self) -> int:
        return sum(self.x)


# chain info: per shape vertex (preorder), the list of (address, leaf_side)
# of the I_1 vertices collapsed above it, top-down.
_Chains = tuple[tuple[tuple[Address, int], ...], ...]


def _contract_full(t: PlaneTree) -> tuple[PlaneTree, tuple[int, ...], tuple[Address, ...], _Chains]:
    if t.leaf_count < 2:
        raise InvalidInput("contract needs |t| >= 2")
    bits: list[int] = []
    xs: list[int] = []
    pis: list[Address] = []
    chains: list[tuple[tuple[Address, int], ...]] = []
    regions: list[tuple[PlaneTree, Address]] = [(t, ())]
    while regions:
        nd, addr = regions.pop()
        x = 0
        chain: list[tuple[Address, int]] = []
        while True:
            l_leaf, r_leaf = nd.left.is_leaf, nd.right.is_leaf
            if l_leaf and r_leaf:
                bits.append(0)
                xs.append(x)
                pis.append(addr)
                chains.append(tuple(chain))
                break
            if not l_leaf and not r_leaf:
                bits.append(1)
                xs.append(x)
                pis.append(addr)
                chains.append(tuple(chain))
                regions.append((nd.right, addr + (2,)))
                regions.append((nd.left, addr + (1,)))
                break
            side = 1 if l_leaf else 2
            chain.append((addr, side))
            x += 1
            nd = nd.right if l_leaf else nd.left
            addr = addr + (2,) if l_leaf else addr + (1,)
    return _tree_from_preorder_bits(bits), tuple(xs), tuple(pis), tuple(chains)


def _tree_from_preorder_bits(bits: list[int]) -> PlaneTree:
    frames: list[list[PlaneTree]] = []
    result: PlaneTree | None = None

    def attach(item: PlaneTree) -> None:
        nonlocal result
        while True:
            if not frames:
                result = item
                return
            frames[-1].append(item)
            if len(frames[-1]) < 2:
                return
            l, r = frames.pop()
            item = PlaneTree(l, r)

    for b in bits:
        if b == 1:
            frames.append([])
        else:
            attach(_LEAF)
    if result is None or frames:
        raise InvalidInput("invalid preorder bit sequence")
    return result


def contract(t: PlaneTree) -> MarkedTree:
    """Collapse I_1 chains: marks record chain lengths; the chain above the
    root counts from the root itself (x_root = depth of the first I_2/I_0
    vertex)."""
    shape, xs, pis, _ = _contract_full(t)
    return MarkedTree(shape, xs, pis)


@dataclass(frozen=True)
class Skeleton:
    """a-skeleton (shape, x, y): x preorder chain lengths, y leaf masses in
    (a, 2a] in leaf order."""

    shape: PlaneTree
    x: tuple[int, ...]
    y: tuple[int, ...]
    a: int

    @property
    def total_marks(self) -> int:
        return sum(self.x)

    @property
    def total_mass(self) -> int:
        return sum(self.y)

    def to_json(self) -> str:
        return json.dumps(
            {"shape": self.shape.code, "x": list(self.x), "y": list(self.y), "a": self.a}
        )

    @classmethod
    def from_json(cls, text: str) -> "Skeleton":
        d = json.loads(text)
        return cls(parse_tree(d["shape"]), tuple(d["x"]), tuple(d["y"]), int(d["a"]))

    def validate(self) -> None:
        n_vertices = 2 * self.shape.leaf_count - 1
        if len(self.x) != n_vertices or len(self.y) != self.shape.leaf_count:
            raise SizeMismatch("x/y lengths do not match the shape")
        if any(xi < 0 for xi in self.x):
            raise InvalidInput("marks must be nonnegative")
        if any(not (self.a < yi <= 2 * self.a) for yi in self.y):
            raise InvalidInput("leaf masses must lie in (a, 2a]")


def skeleton_plane(t: PlaneTree, a: int) -> Skeleton:
    """Sk_a(t) = (contract(trim(t, a)), leaf masses from the original tree)."""
    if a < 2:
        raise InvalidInput("skeleton needs a >= 2")
    if t.leaf_count <= a:
        raise InvalidInput(f"skeleton needs |t| > a, got |t|={t.leaf_count}, a={a}")
    tr = trim(t, a)
    # |t| > a forces both children of the root into t[a]
    assert not tr.is_leaf
    shape, xs, pis, _ = _contract_full(tr)
    ys = []
    for i, (_, nd) in enumerate(preorder(shape)):
        if nd.is_leaf:
            mass = subtree_at(t, pis[i]).leaf_count
            assert a < mass <= 2 * a, "leaf mass outside (a, 2a]"
            ys.append(mass)
    return Skeleton(shape, xs, tuple(ys), a)


@dataclass(frozen=True)
class TwoForest:
    """A pair of trees with |t| v |t'| <= a < |t| + |t'| (membership in F_a)."""

    first: PlaneTree
    second: PlaneTree

    @property
    def size(self) -> int:
        return self.first.leaf_count + self.second.leaf_count

    def check(self, a: int) -> None:
        if max(self.first.leaf_count, self.second.leaf_count) > a or self.size <= a:
            raise ForestConstraintViolated(
                f"forest sizes ({self.first.leaf_count}, {self.second.leaf_count}) not in F_{a}"
            )


def _chain_order(shape: PlaneTree, x: tuple[int, ...]) -> list[tuple[int, int]]:
    """Chain positions (shape preorder index, position along chain) in the
    canonical bit order: preorder over shape, top-down within a chain."""
    out = []
    for i, _ in enumerate(preorder(shape)):
        for k in range(x[i]):
            out.append((i, k))
    return out


def build_fiber_element(shape: PlaneTree, x: tuple[int, ...], selector: int) -> PlaneTree:
    """The selector-th plane tree contracting to (shape, x).

    Bit i of the selector decides, at the i-th chain position in depth-first
    order, whether the chain leaf hangs left (0) or right (1); selector 0 is
    the fixed section used for unordered reconstruction.
    """
    total = sum(x)
    if not 0 <= selector < (1 << total):
        raise InvalidInput(f"selector must be < 2^{total}")
    bit_of = {}
    for i, (si, k) in enumerate(_chain_order(shape, x)):
        bit_of[(si, k)] = (selector >> i) & 1

    # recurse over the shape with explicit preorder indices (skeleton shapes
    # are small, recursion depth is not a concern here)
    def build(nd: PlaneTree, i: int) -> PlaneTree:
        if nd.is_leaf:
            core = PlaneTree(_LEAF, _LEAF)
        else:
            li = i + 1
            ri = li + 2 * nd.left.leaf_count - 1
            core = PlaneTree(build(nd.left, li), build(nd.right, ri))
        for k in range(x[i] - 1, -1, -1):
            if bit_of[(i, k)] == 0:
                core = PlaneTree(_LEAF, core)
            else:
                core = PlaneTree(core, _LEAF)
        return core

    return build(shape, 0)


def _graft(
    t0: PlaneTree,
    leaf_repl: dict[Address, PlaneTree],
    i0_repl: dict[Address, tuple[PlaneTree, PlaneTree]],
) -> PlaneTree:
    def rebuild(nd: PlaneTree, addr: Address) -> PlaneTree:
        if addr in i0_repl:
            f1, f2 = i0_repl[addr]
            return PlaneTree(f1, f2)
        if nd.is_leaf:
            return leaf_repl.get(addr, nd)
        return PlaneTree(rebuild(nd.left, addr + (1,)), rebuild(nd.right, addr + (2,)))

    return rebuild(t0, ())


def reconstruct_plane(
    sk: Skeleton,
    selector: int,
    subtrees: list[PlaneTree],
    forests: list[TwoForest],
) -> PlaneTree:
    """Inverse of decompose_plane: the unique tree with skeleton `sk`, fiber
    element `selector`, subtrees at the skeleton leaves (lexicographic order)
    and forests at the I_0 vertices (lexicographic order)."""
    sk.validate()
    a = sk.a
    if len(subtrees) != sk.total_marks:
        raise SizeMismatch(f"need {sk.total_marks} subtrees, got {len(subtrees)}")
    if len(forests) != sk.shape.leaf_count:
        raise SizeMismatch(f"need {sk.shape.leaf_count} forests, got {len(forests)}")
    for s in subtrees:
        if s.leaf_count > a:
            raise SizeMismatch(f"grafted subtree has {s.leaf_count} > a leaves")
    for f, y in zip(forests, sk.y):
        f.check(a)
        if f.size != y:
            raise SizeMismatch(f"forest size {f.size} != leaf mass {y}")
    t0 = build_fiber_element(sk.shape, sk.x, selector)
    cls = classify(t0)
    s_sorted = sorted(cls.skeleton_leaves)
    i0_sorted = sorted(cls.i0)
    leaf_repl = dict(zip(s_sorted, subtrees))
    i0_repl = {u: (f.first, f.second) for u, f in zip(i0_sorted, forests)}
    return _graft(t0, leaf_repl, i0_repl)


def decompose_plane(
    t: PlaneTree, a: int
) -> tuple[Skeleton, int, list[PlaneTree], list[TwoForest]]:
    """Split t (with |t| > a) into skeleton, fiber selector and grafted parts."""
    sk = skeleton_plane(t, a)
    tr = trim(t, a)
    _, x, _, chains = _contract_full(tr)
    selector = 0
    bit = 0
    for ch in chains:
        for _, side in ch:
            if side == 2:
                selector |= 1 << bit
            bit += 1
    cls = classify(tr)
    subtrees = [subtree_at(t, u) for u in sorted(cls.skeleton_leaves)]
    forests = [
        TwoForest(subtree_at(t, u + (1,)), subtree_at(t, u + (2,)))
        for u in sorted(cls.i0)
    ]
    return sk, selector, subtrees, forests


@dataclass(frozen=True)
class ContourPath:
    """+-1 step sequence of the wrap-around contour; length 4n - 4."""

    steps: tuple[int, ...]

    def __post_init__(self):
        if len(self.steps) % 4 != 0:
            raise MalformedPath("contour length must be 4n - 4")

    @property
    def n_leaves(self) -> int:
        return (len(self.steps) + 4) // 4

    @property
    def heights(self) -> np.ndarray:
        h = np.zeros(len(self.steps) + 1, dtype=np.int64)
        np.cumsum(self.steps, out=h[1:])
        return h


def contour(t: PlaneTree) -> ContourPath:
    """Heights of the contour exploration, encoded as steps."""
    heights = [0]
    stack: list[tuple[PlaneTree, int, int]] = [(t, 0, 0)]
    while stack:
        nd, d, phase = stack.pop()
        if nd.is_leaf:
            continue
        if phase == 0:
            heights.append(d + 1)
            stack.append((nd, d, 1))
            stack.append((nd.left, d + 1, 0))
        elif phase == 1:
            heights.append(d)
            heights.append(d + 1)
            stack.append((nd, d, 2))
            stack.append((nd.right, d + 1, 0))
        else:
            heights.append(d)
    steps = tuple(
        heights[i + 1] - heights[i] for i in range(len(heights) - 1)
    )
    return ContourPath(steps)


def decode_contour(path: ContourPath) -> PlaneTree:
    """Two-sided inverse of `contour`; raises MalformedPath otherwise."""
    if len(path.steps) == 0:
        return _LEAF
    frames: list[list[PlaneTree]] = [[]]  # frames[0] collects the root's children
    for s in path.steps:
        if s == 1:
            frames.append([])
        elif s == -1:
            if len(frames) <= 1:
                raise MalformedPath("path dips below zero")
            children = frames.pop()
            if len(children) == 0:
                done: PlaneTree = _LEAF
            elif len(children) == 2:
                done = PlaneTree(children[0], children[1])
            else:
                raise MalformedPath("a vertex was left with one child")
            frames[-1].append(done)
            if len(frames[-1]) > 2:
                raise MalformedPath("a vertex got more than two children")
        else:
            raise MalformedPath(f"steps must be +-1, got {s}")
    if len(frames) != 1 or len(frames[0]) != 2:
        raise MalformedPath("path does not return to the root correctly")
    return PlaneTree(frames[0][0], frames[0][1])


def contour_index_of(t: PlaneTree, addr: Address) -> int:
    """Some contour time at which `addr` is visited."""
    target = addr
    time = 0
    nd = t
    cur: Address = ()
    while cur != target:
        step = target[len(cur)]
        if step == 1:
            time += 1
            nd = nd.left
        else:
            time += 4 * nd.left.leaf_count - 4 + 2 if not nd.left.is_leaf else 2
            # crossing the left subtree costs its full contour plus both edge steps
            time += 1
            nd = nd.right
        cur = cur + (step,)
    return time


def rescaled_skeleton(t: PlaneTree, a: int, n: int):
    """Sk_a(t) with x divided by sqrt(n) and y divided by n (shape unchanged)."""
    from .excursions import RealSkeleton

    sk = skeleton_plane(t, a)
    rn = float(np.sqrt(n))
    return RealSkeleton(
        sk.shape,
        tuple(xi / rn for xi in sk.x),
        tuple(yi / n for yi in sk.y),
    )
