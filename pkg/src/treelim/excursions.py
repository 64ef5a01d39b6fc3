"""Piecewise-linear excursions as real trees.

An excursion f >= 0 on [0, sigma] with f(0) = f(sigma) = 0 codes a real tree
through the pseudo-metric d_f(s,t) = f(s) + f(t) - 2 min_[s,t] f.  The mass
of a point is the length of the component of {f > t} below it; trimming at
mass a keeps points of mass >= a.  The recursive sweep below tracks the
unique "long" component upward: it either splits into two long components
(a branch, at level s_a) or runs out (a terminal, at level t_a with final
width Y_a), yielding the real skeleton zeta(f, a) whose theta-image is the
trimmed tree.

All breakpoint arithmetic is float64 with a 1e-9 tie tolerance; ambiguous
ties (equal-height local minima with no strictly lower dip between, which is
exactly what the admissible class excludes) raise NotInClass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CapExceeded, InvalidInput, NotInClass, OutOfDomain
from .plane import ContourPath, PlaneTree, parse_tree, preorder

TIE_TOL = 1e-9


@dataclass(frozen=True)
class Excursion:
    """Piecewise-linear nonnegative function vanishing at both endpoints."""

    ts: np.ndarray
    fs: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        fs = np.asarray(self.fs, dtype=float)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "fs", fs)
        if len(ts) != len(fs) or len(ts) < 2:
            raise InvalidInput("need matching breakpoint arrays of length >= 2")
        if not np.all(np.diff(ts) > 0):
            raise InvalidInput("abscissas must be strictly increasing")
        if fs[0] != 0.0 or fs[-1] != 0.0:
            raise InvalidInput("an excursion vanishes at both endpoints")
        if np.any(fs < 0):
            raise InvalidInput("an excursion is nonnegative")
        ts.flags.writeable = False
        fs.flags.writeable = False

    @property
    def sigma(self) -> float:
        return float(self.ts[-1])

    def evaluate(self, x):
        return np.interp(x, self.ts, self.fs)

    def min_on(self, lo: float, hi: float) -> float:
        """Exact minimum over [lo, hi] (attained at a breakpoint or endpoint)."""
        if lo > hi:
            lo, hi = hi, lo
        i = np.searchsorted(self.ts, lo, side="left")
        j = np.searchsorted(self.ts, hi, side="right")
        best = min(float(self.evaluate(lo)), float(self.evaluate(hi)))
        if i < j:
            inner = self.fs[i:j]
            if len(inner):
                best = min(best, float(inner.min()))
        return best

    def to_json(self) -> str:
        return json.dumps({"t": self.ts.tolist(), "f": self.fs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Excursion":
        d = json.loads(text)
        return cls(np.asarray(d["t"], dtype=float), np.asarray(d["f"], dtype=float))


def contour_excursion(c: ContourPath | PlaneTree) -> Excursion:
    """The contour process as an excursion on [0, 4n-4]."""
    if isinstance(c, PlaneTree):
        from .plane import contour

        c = contour(c)
    h = c.heights.astype(float)
    return Excursion(np.arange(len(h), dtype=float), h)


def contour_mass(a: int) -> int:
    """Contour-length threshold equivalent to leaf-mass a.

    A subtree with m leaves spans a contour component of length 4m - 2
    (its 4m - 4 internal steps plus the two connecting edge halves), so
    leaf masses > a correspond exactly to component lengths > 4a - 2.
    """
    return 4 * a - 2


def pseudo_distance(f: Excursion, s: float, t: float) -> float:
    """d_f(s, t) = f(s) + f(t) - 2 min_[s^t, svt] f, exact on breakpoints."""
    if not (0 <= s <= f.sigma) or not (0 <= t <= f.sigma):
        raise OutOfDomain("arguments must lie in [0, sigma]")
    return float(f.evaluate(s) + f.evaluate(t) - 2.0 * f.min_on(s, t))


def components_above(f: Excursion, level: float) -> list[tuple[float, float]]:
    """Maximal open intervals of {f > level}, endpoints by exact interpolation."""
    if level < 0:
        raise OutOfDomain("level must be >= 0")
    ts, fs = f.ts, f.fs
    out: list[tuple[float, float]] = []
    start: float | None = None
    for i in range(len(ts) - 1):
        a0, a1 = fs[i], fs[i + 1]
        if start is None:
            if a1 > level:
                if a0 > level:
                    start = float(ts[i])  # only possible at i == 0 with level < fs[0]
                else:
                    start = float(ts[i] + (level - a0) * (ts[i + 1] - ts[i]) / (a1 - a0))
        else:
            if a1 <= level:
                if a0 > level:
                    end = float(ts[i] + (a0 - level) * (ts[i + 1] - ts[i]) / (a0 - a1))
                else:
                    end = float(ts[i])
                out.append((start, end))
                start = None
            elif a0 <= level:
                # f touched the level exactly at breakpoint i: component splits
                out.append((start, float(ts[i])))
                start = float(ts[i])
    if start is not None:
        out.append((start, float(ts[-1])))
    return out


def _min_runs(fs: np.ndarray) -> list[tuple[int, int, float]]:
    """Interior local-minimum runs (i, j, height): maximal flat stretches
    fs[i..j] with both neighbors strictly above (i == j is a V-minimum)."""
    runs = []
    m = len(fs)
    i = 1
    while i < m - 1:
        j = i
        while j + 1 < m - 1 and fs[j + 1] == fs[i]:
            j += 1
        if fs[i - 1] > fs[i] and j + 1 < m and fs[j + 1] > fs[j]:
            runs.append((i, j, float(fs[i])))
        i = j + 1
    return runs


@dataclass(frozen=True)
class RealSkeleton:
    """Real-marked skeleton: branch heights / terminal heights on vertices
    (preorder), terminal masses on leaves (leaf order)."""

    shape: PlaneTree
    x: tuple[float, ...]
    y: tuple[float, ...]

    def validate(self) -> None:
        nv = 2 * self.shape.leaf_count - 1
        if len(self.x) != nv or len(self.y) != self.shape.leaf_count:
            raise InvalidInput("x/y lengths do not match the shape")
        if self.x[0] < 0 or any(v <= 0 for v in self.x[1:]):
            raise InvalidInput("marks must be positive (nonnegative at the root)")


@dataclass(frozen=True)
class Branch:
    s_a: float
    left: Excursion
    right: Excursion


@dataclass(frozen=True)
class Terminal:
    t_a: float
    y_a: float


class _Sweeper:
    """Tracks long components of {f > t}; records prune events and the
    component lengths that were compared against the threshold."""

    def __init__(self, f: Excursion, a: float):
        self.f = f
        self.a = float(a)
        self.runs = _min_runs(f.fs)
        self.prunes: list[tuple[float, float, float]] = []  # (lo, hi, detach level)
        self.criticals: list[float] = []

    # -- geometry helpers -------------------------------------------------

    def _extent_at(self, lo: float, hi: float, level: float) -> tuple[float, float]:
        """Crossings of `level` on the outer slopes of the component (lo, hi);
        degenerate (apex, apex) when nothing in the component exceeds level."""
        ts, fs = self.f.ts, self.f.fs
        i = int(np.searchsorted(ts, lo, side="right"))
        while i < len(ts) and ts[i] < hi and fs[i] <= level:
            i += 1
        if i >= len(ts) or ts[i] >= hi:
            mid = 0.5 * (lo + hi)
            return mid, mid
        if fs[i - 1] >= level:
            a_pt = max(lo, float(ts[i - 1]))
        else:
            a_pt = float(ts[i - 1] + (level - fs[i - 1]) * (ts[i] - ts[i - 1]) / (fs[i] - fs[i - 1]))
        j = int(np.searchsorted(ts, hi, side="left")) - 1
        while fs[j] <= level:
            j -= 1
        if fs[j + 1] >= level:
            b_pt = min(hi, float(ts[j + 1]))
        else:
            b_pt = float(ts[j + 1] - (level - fs[j + 1]) * (ts[j + 1] - ts[j]) / (fs[j] - fs[j + 1]))
        return max(lo, a_pt), min(hi, b_pt)

    def _max_on(self, lo: float, hi: float) -> float:
        ts, fs = self.f.ts, self.f.fs
        i = np.searchsorted(ts, lo, side="left")
        j = np.searchsorted(ts, hi, side="right")
        best = max(float(self.f.evaluate(lo)), float(self.f.evaluate(hi)))
        if i < j and len(fs[i:j]):
            best = max(best, float(fs[i:j].max()))
        return best

    def _runs_in(self, lo: float, hi: float) -> list[tuple[int, int, float]]:
        ts = self.f.ts
        return [r for r in self.runs if lo < ts[r[0]] and ts[r[1]] < hi]

    def _length_crossing(
        self, lo: float, hi: float, base: float, stop: float
    ) -> tuple[float, float, float]:
        """First level t* in (base, stop] where the single component around
        (lo, hi) has width exactly a; returns (t*, ext_lo, ext_hi)."""
        ts, fs = self.f.ts, self.f.fs
        i = np.searchsorted(ts, lo, side="right")
        j = np.searchsorted(ts, hi, side="left")
        cand = sorted({float(v) for v in fs[i:j] if base < v <= stop} | {stop})
        prev_t, prev_len = base, hi - lo
        for t in cand:
            al, bl = self._extent_at(lo, hi, t)
            ln = bl - al
            if ln <= self.a:
                if prev_len == ln:
                    frac = 0.0
                else:
                    frac = (prev_len - self.a) / (prev_len - ln)
                tstar = prev_t + frac * (t - prev_t)
                el, eh = self._extent_at(lo, hi, tstar)
                return tstar, el, eh
            prev_t, prev_len = t, ln
        raise NotInClass("component width never reached the threshold")

    # -- sweep ------------------------------------------------------------

    def run(self, lo: float, hi: float, base: float) -> dict:
        """Process one tracked component chain; returns a nested event node."""
        a = self.a
        while True:
            runs = self._runs_in(lo, hi)
            if not runs:
                peak = self._max_on(lo, hi)
                tstar, el, eh = self._length_crossing(lo, hi, base, peak)
                self.prunes.append((el, eh, tstar))
                return {"kind": "terminal", "x": tstar - base, "y": a, "level": tstar}
            level = min(r[2] for r in runs)
            ties = [r for r in runs if r[2] <= level + TIE_TOL]
            if len(ties) > 1 or ties[0][0] != ties[0][1]:
                raise NotInClass(
                    "equal-height local minima with no lower dip between"
                )
            cut = float(self.f.ts[ties[0][0]])
            a_star, b_star = self._extent_at(lo, hi, level)
            y_star = b_star - a_star
            self.criticals.append(y_star)
            if y_star <= a:
                tstar, el, eh = self._length_crossing(lo, hi, base, level)
                self.prunes.append((el, eh, tstar))
                return {"kind": "terminal", "x": tstar - base, "y": a, "level": tstar}
            pieces = [(a_star, cut), (cut, b_star)]
            lens = [p[1] - p[0] for p in pieces]
            self.criticals.extend(lens)
            longs = [p for p, ln in zip(pieces, lens) if ln > a]
            if len(longs) == 2:
                left = self.run(pieces[0][0], pieces[0][1], level)
                right = self.run(pieces[1][0], pieces[1][1], level)
                return {
                    "kind": "branch",
                    "x": level - base,
                    "level": level,
                    "children": (left, right),
                }
            if len(longs) == 1:
                short = pieces[0] if longs[0] is pieces[1] else pieces[1]
                self.prunes.append((short[0], short[1], level))
                lo, hi = longs[0]
                continue
            self.prunes.append((pieces[0][0], pieces[0][1], level))
            self.prunes.append((pieces[1][0], pieces[1][1], level))
            return {"kind": "terminal", "x": level - base, "y": y_star, "level": level}


def _check_domain(f: Excursion, a: float) -> None:
    if a <= 0:
        raise InvalidInput("a must be > 0")
    if f.sigma <= a:
        raise InvalidInput(f"need sigma > a, got sigma={f.sigma}, a={a}")


def _extract(f: Excursion, lo: float, hi: float, level: float) -> Excursion:
    """The sub-excursion f_I - level over I = [lo, hi] (f = level at both ends)."""
    i = np.searchsorted(f.ts, lo, side="right")
    j = np.searchsorted(f.ts, hi, side="left")
    ts = np.concatenate(([lo], f.ts[i:j], [hi])) - lo
    fs = np.concatenate(([level], f.fs[i:j], [level])) - level
    fs[np.abs(fs) < 1e-15] = 0.0
    return Excursion(ts, fs)


def first_branch(f: Excursion, a: float) -> Branch | Terminal:
    """First event of the mass-a sweep: either the level s_a at which two
    components of width > a appear (with the two sub-excursions, which share
    their cut point), or the terminal level t_a with the final width Y_a."""
    _check_domain(f, a)
    sw = _Sweeper(f, a)
    lo, hi, base = 0.0, f.sigma, 0.0
    while True:
        runs = sw._runs_in(lo, hi)
        if not runs:
            peak = sw._max_on(lo, hi)
            tstar, _, _ = sw._length_crossing(lo, hi, base, peak)
            return Terminal(tstar, a)
        level = min(r[2] for r in runs)
        ties = [r for r in runs if r[2] <= level + TIE_TOL]
        if len(ties) > 1 or ties[0][0] != ties[0][1]:
            raise NotInClass("equal-height local minima with no lower dip between")
        cut = float(f.ts[ties[0][0]])
        a_star, b_star = sw._extent_at(lo, hi, level)
        y_star = b_star - a_star
        if y_star <= a:
            tstar, _, _ = sw._length_crossing(lo, hi, base, level)
            return Terminal(tstar, a)
        pieces = [(a_star, cut), (cut, b_star)]
        lens = [p[1] - p[0] for p in pieces]
        longs = [p for p, ln in zip(pieces, lens) if ln > a]
        if len(longs) == 2:
            return Branch(
                level,
                _extract(f, pieces[0][0], pieces[0][1], level),
                _extract(f, pieces[1][0], pieces[1][1], level),
            )
        if len(longs) == 1:
            lo, hi = longs[0]
            continue
        return Terminal(level, y_star)


def _node_to_skeleton(node: dict) -> tuple[list[int], list[float], list[float]]:
    bits, xs, ys = [], [], []

    def go(nd: dict) -> None:
        xs.append(nd["x"])
        if nd["kind"] == "terminal":
            bits.append(0)
            ys.append(nd["y"])
        else:
            bits.append(1)
            go(nd["children"][0])
            go(nd["children"][1])

    go(node)
    return bits, xs, ys


def zeta(f: Excursion, a: float) -> RealSkeleton:
    """The a-real skeleton: recursive branch levels s_a on internal vertices,
    terminal levels t_a on leaves (as x-marks) with terminal masses Y_a."""
    from .plane import _tree_from_preorder_bits

    _check_domain(f, a)
    sw = _Sweeper(f, a)
    root = sw.run(0.0, f.sigma, 0.0)
    bits, xs, ys = _node_to_skeleton(root)
    return RealSkeleton(_tree_from_preorder_bits(bits), tuple(xs), tuple(ys))


class InClass(Enum):
    NEITHER = "neither"
    IN_EA = "in_Ea"
    IN_EA_STAR = "in_Ea_star"


def in_class(f: Excursion, a: float) -> InClass:
    """Membership in the admissible excursion classes.

    E_a-bar: no two equal-height interior local minima without a strictly
    lower dip between (ties below the 1e-9 tolerance count as equal).
    E_a-bar-star additionally requires a to stay clear of the component
    lengths compared against it during the sweep (the decision criticals).
    """
    if a <= 0 or f.sigma <= a:
        return InClass.NEITHER
    runs = _min_runs(f.fs)
    if any(r[0] != r[1] for r in runs):
        return InClass.NEITHER
    by_height = sorted(runs, key=lambda r: (r[2], r[0]))
    for (i, _, h1), (j, _, h2) in zip(by_height, by_height[1:]):
        if abs(h1 - h2) < TIE_TOL:
            lo, hi = sorted((i, j))
            between = float(f.fs[lo : hi + 1].min())
            if between >= min(h1, h2) - TIE_TOL:
                return InClass.NEITHER
    sw = _Sweeper(f, a)
    try:
        sw.run(0.0, f.sigma, 0.0)
    except NotInClass:
        return InClass.NEITHER
    # criticals are the component lengths compared against a at the
    # local-minimum levels; a collision means the skeleton is unstable in a
    if any(abs(c - a) < TIE_TOL for c in sw.criticals):
        return InClass.IN_EA
    return InClass.IN_EA_STAR


def trim_bound_check(f: Excursion, a: float) -> tuple[float, float]:
    """(Hausdorff distance from the tree of f to its mass-a trimming, the
    modulus of continuity omega(f, a)); both exact on piecewise-linear data.

    Every removed point's nearest kept point is its detach ancestor, so the
    Hausdorff distance is the largest (peak height - detach level) over
    pruned components; the bound hausdorff <= omega always holds.
    """
    _check_domain(f, a)
    sw = _Sweeper(f, a)
    sw.run(0.0, f.sigma, 0.0)
    haus = 0.0
    for lo, hi, level in sw.prunes:
        haus = max(haus, sw._max_on(lo, hi) - level)
    return haus, omega_modulus(f, a)


def omega_modulus(f: Excursion, a: float) -> float:
    """sup |f(x) - f(y)| over |x - y| <= a: the optimizing pair has one point
    at a breakpoint and the other at a breakpoint or at distance exactly a,
    so a sweep over that finite candidate set is exact."""
    ts = f.ts
    pts = np.unique(np.concatenate([ts, np.clip(ts - a, 0, f.sigma), np.clip(ts + a, 0, f.sigma)]))
    vals = f.evaluate(pts)
    best = 0.0
    maxq: list[int] = []
    minq: list[int] = []
    left = 0
    for r in range(len(pts)):
        while maxq and vals[maxq[-1]] <= vals[r]:
            maxq.pop()
        maxq.append(r)
        while minq and vals[minq[-1]] >= vals[r]:
            minq.pop()
        minq.append(r)
        while pts[r] - pts[left] > a + 1e-12:
            if maxq[0] == left:
                maxq.pop(0)
            if minq[0] == left:
                minq.pop(0)
            left += 1
        best = max(best, float(vals[maxq[0]] - vals[minq[0]]))
    return best


@dataclass(frozen=True)
class MetricTree:
    """Rooted edge-weighted binary tree: a segment of length `lengths[i]`
    hangs below each shape vertex (preorder indexing)."""

    shape: PlaneTree
    lengths: tuple[float, ...]

    def _paths(self) -> list[tuple[int, ...]]:
        """Root paths as preorder-index tuples, listed in preorder."""
        paths: list[tuple[int, ...]] = []

        def go(nd: PlaneTree, idx: int, parent: tuple[int, ...]) -> int:
            path = parent + (idx,)
            paths.append(path)
            if nd.is_leaf:
                return idx + 1
            nxt = go(nd.left, idx + 1, path)
            return go(nd.right, nxt, path)

        go(self.shape, 0, ())
        return paths

    def point_depths(self) -> np.ndarray:
        """Distance from the root base to the top of each vertex segment,
        preceded by the base point itself (index 0)."""
        paths = self._paths()
        d = np.zeros(len(paths) + 1)
        for k, p in enumerate(paths):
            d[k + 1] = sum(self.lengths[i] for i in p)
        return d

    def distance_matrix(self) -> np.ndarray:
        """Exact pairwise distances on {base} + {segment tops} (preorder)."""
        paths = self._paths()
        pts = [()] + paths
        n = len(pts)
        out = np.zeros((n, n))
        depth = {p: sum(self.lengths[i] for i in p) for p in pts}
        for i in range(n):
            for j in range(i + 1, n):
                pi, pj = pts[i], pts[j]
                k = 0
                while k < len(pi) and k < len(pj) and pi[k] == pj[k]:
                    k += 1
                meet = depth[pi[:k]]
                out[i, j] = out[j, i] = depth[pi] + depth[pj] - 2 * meet
        return out

    @property
    def diameter(self) -> float:
        m = self.distance_matrix()
        return float(m.max())

    def to_json(self) -> str:
        def go(nd: PlaneTree, idx: int) -> tuple[dict, int]:
            obj: dict = {"len": self.lengths[idx]}
            if nd.is_leaf:
                obj["left"] = obj["right"] = None
                return obj, idx + 1
            lobj, nxt = go(nd.left, idx + 1)
            robj, nxt = go(nd.right, nxt)
            obj["left"], obj["right"] = lobj, robj
            return obj, nxt

        return json.dumps(go(self.shape, 0)[0])

    @classmethod
    def from_json(cls, text: str) -> "MetricTree":
        d = json.loads(text)
        lengths: list[float] = []

        def build(obj: dict) -> str:
            # lengths end up preorder: emit before recursing
            lengths.append(float(obj["len"]))
            if obj["left"] is None:
                return "o"
            l = build(obj["left"])
            r = build(obj["right"])
            return "(" + l + r + ")"

        code = build(d)
        return cls(parse_tree(code), tuple(lengths))


def theta(sk: RealSkeleton) -> MetricTree:
    """Graft segments of lengths x along the shape (terminal heights become
    leaf segment lengths; the y-masses play no metric role)."""
    return MetricTree(sk.shape, sk.x)


GH_CAP = 7


def gh_exact_small(A, B) -> float:
    """Exact Gromov-Hausdorff distance between two finite metric spaces with
    at most 7 points each: half the minimal distortion over correspondences,
    by feasibility search over the finite set of candidate distortions."""
    dA = A.distance_matrix() if isinstance(A, MetricTree) else np.asarray(A, dtype=float)
    dB = B.distance_matrix() if isinstance(B, MetricTree) else np.asarray(B, dtype=float)
    na, nb = len(dA), len(dB)
    if na > GH_CAP or nb > GH_CAP:
        raise CapExceeded(f"gh_exact_small capped at {GH_CAP} points")
    cands = np.unique(np.abs(dA.reshape(na, na, 1, 1) - dB.reshape(1, 1, nb, nb)).ravel())

    def feasible(delta: float) -> bool:
        tol = delta + 1e-12
        pairs_for_a = [
            [k for k in range(nb)] for _ in range(na)
        ]
        chosen: list[tuple[int, int]] = []

        def compatible(i: int, k: int) -> bool:
            for j, l in chosen:
                if abs(dA[i, j] - dB[k, l]) > tol:
                    return False
            return True

        def cover(step: int) -> bool:
            if step < na:
                # each A-point needs a partner
                for k in pairs_for_a[step]:
                    if compatible(step, k):
                        chosen.append((step, k))
                        if cover(step + 1):
                            return True
                        chosen.pop()
                return False
            covered_b = {k for _, k in chosen}
            missing = [k for k in range(nb) if k not in covered_b]
            if not missing:
                return True
            k = missing[0]
            for i in range(na):
                if compatible(i, k):
                    chosen.append((i, k))
                    if cover(step):
                        return True
                    chosen.pop()
            return False

        return cover(0)

    lo, hi = 0, len(cands) - 1
    if feasible(float(cands[0])):
        return float(cands[0]) / 2.0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(float(cands[mid])):
            hi = mid
        else:
            lo = mid
    return float(cands[hi]) / 2.0


def brownian_excursion_approx(m: int, rng: np.random.Generator) -> Excursion:
    """Approximate sample of twice the normalized Brownian excursion: the
    contour of a uniform m-leaf plane tree, time scaled to [0, 1], heights
    divided by sqrt(2m)."""
    from .plane import contour, sample_plane_uniform

    if m < 2:
        raise InvalidInput("m must be >= 2")
    t = sample_plane_uniform(m, rng)
    h = contour(t).heights.astype(float)
    ts = np.arange(len(h), dtype=float) / (len(h) - 1)
    return Excursion(ts, h / math.sqrt(2.0 * m))
