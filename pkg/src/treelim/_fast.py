"""numba kernels for the Monte-Carlo hot paths.

Everything here mirrors a pure-Python implementation elsewhere in the
package (samplers in plane/unordered, skeleton extraction in plane, the
contour bridge in excursions); the kernels are cross-validated against those
references in the test suite.  The RNG is splitmix64 threaded through
explicit uint64[1] state arrays, seeded per (seed, stream) so batches form
independent, order-insensitive substreams.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _next_u64(st):
    st[0] = st[0] + _GAMMA
    return _mix64(st[0])


@njit(cache=True, inline="always")
def _u01(st):
    return (_next_u64(st) >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _randbelow(st, m):
    """Exactly uniform integer in [0, m) by bitmask rejection."""
    if m <= 1:
        return 0
    mask = U64(1)
    while mask < U64(m):
        mask = (mask << U64(1)) | U64(1)
    while True:
        r = _next_u64(st) & mask
        if r < U64(m):
            return np.int64(r)


def stream_state(seed: int, stream: int) -> np.ndarray:
    """Deterministic substream state for (seed, stream)."""
    s = (int(seed) * 0x9E3779B97F4A7C15 + int(stream) * 0xD1B54A32D192ED03) % (1 << 64)
    return np.array([s], dtype=np.uint64)


# ---------------------------------------------------------------------------
# plane sampler (leaf-insertion growth) and tree utilities


@njit(cache=True)
def _remy(n, st, left, right, parent):
    """Uniform n-leaf plane tree into preallocated arrays; returns the root."""
    left[0] = -1
    right[0] = -1
    parent[0] = -1
    root = 0
    count = 1
    for k in range(1, n):
        v = _randbelow(st, 2 * k - 1)
        side = _next_u64(st) & U64(1)
        u = count
        w = count + 1
        count += 2
        pv = parent[v]
        if pv == -1:
            root = u
            parent[u] = -1
        else:
            p = pv >> 1
            if pv & 1 == 0:
                left[p] = u
            else:
                right[p] = u
            parent[u] = pv
        if side == U64(0):
            left[u] = w
            right[u] = v
            parent[w] = 2 * u
            parent[v] = 2 * u + 1
        else:
            left[u] = v
            right[u] = w
            parent[v] = 2 * u
            parent[w] = 2 * u + 1
        left[w] = -1
        right[w] = -1
    return root


@njit(cache=True)
def _fill_counts(root, left, right, counts, order):
    """Subtree leaf counts via reversed preorder (children after parents)."""
    tmp = np.empty(len(order), np.int32)
    tmp[0] = root
    top = 1
    n_ord = 0
    while top > 0:
        top -= 1
        v = tmp[top]
        order[n_ord] = v
        n_ord += 1
        if left[v] >= 0:
            tmp[top] = left[v]
            top += 1
            tmp[top] = right[v]
            top += 1
    for i in range(n_ord - 1, -1, -1):
        v = order[i]
        if left[v] < 0:
            counts[v] = 1
        else:
            counts[v] = counts[left[v]] + counts[right[v]]
    return n_ord


@njit(cache=True)
def _fill_heights(root, left, right, heights, order):
    tmp = np.empty(len(order), np.int32)
    tmp[0] = root
    top = 1
    n_ord = 0
    while top > 0:
        top -= 1
        v = tmp[top]
        order[n_ord] = v
        n_ord += 1
        if left[v] >= 0:
            tmp[top] = left[v]
            top += 1
            tmp[top] = right[v]
            top += 1
    for i in range(n_ord - 1, -1, -1):
        v = order[i]
        if left[v] < 0:
            heights[v] = 0
        else:
            hl = heights[left[v]]
            hr = heights[right[v]]
            heights[v] = 1 + (hl if hl > hr else hr)
    return heights[root]


@njit(cache=True)
def _skeleton(root, left, right, counts, a, sbits, xs, ys, pivs):
    """Preorder skeleton of the a-trimming: shape bits (1 internal, 0 leaf),
    chain-length marks, leaf masses, and the I_2/I_0 vertex per position.
    Returns (#vertices, #leaves, 1 if all I_0 child sizes distinct else 0)."""
    pending = np.empty(64, np.int32)
    top = 0
    v = root
    nv = 0
    nl = 0
    distinct = 1
    x = 0
    while True:
        c1 = left[v]
        c2 = right[v]
        n1 = counts[c1]
        n2 = counts[c2]
        if n1 > a and n2 > a:
            sbits[nv] = 1
            xs[nv] = x
            pivs[nv] = v
            nv += 1
            pending[top] = c2
            top += 1
            v = c1
            x = 0
        elif n1 <= a and n2 <= a:
            sbits[nv] = 0
            xs[nv] = x
            pivs[nv] = v
            ys[nl] = n1 + n2
            if n1 == n2:
                distinct = 0
            nv += 1
            nl += 1
            if top == 0:
                return nv, nl, distinct
            top -= 1
            v = pending[top]
            x = 0
        else:
            x += 1
            v = c1 if n1 > a else c2
    return nv, nl, distinct


@njit(cache=True, inline="always")
def _shape_id(sbits, nv):
    """Preorder bit-pattern of the shape as an integer (msb = root)."""
    out = np.int64(1)  # leading sentinel so lengths differ
    for i in range(nv):
        out = (out << 1) | np.int64(sbits[i])
    return out


# ---------------------------------------------------------------------------
# unordered sampler: canonical-form recursive split sampler with alias tables


@njit(cache=True)
def build_alias(raw_probs, offsets, prob, alias):
    """Walker alias tables for each size's split distribution (ragged)."""
    nmax = len(offsets) - 1
    small = np.empty(len(prob), np.int32)
    large = np.empty(len(prob), np.int32)
    for m in range(2, nmax + 1):
        o = offsets[m]
        k = offsets[m + 1] - o
        ns = 0
        nl = 0
        for i in range(k):
            p = raw_probs[o + i] * k
            prob[o + i] = p
            alias[o + i] = i
            if p < 1.0:
                small[ns] = i
                ns += 1
            else:
                large[nl] = i
                nl += 1
        while ns > 0 and nl > 0:
            ns -= 1
            s = small[ns]
            l = large[nl - 1]
            alias[o + s] = l
            prob[o + l] = prob[o + l] - (1.0 - prob[o + s])
            if prob[o + l] < 1.0:
                nl -= 1
                small[ns] = l
                ns += 1
        for i in range(nl):
            prob[o + large[i]] = 1.0
        for i in range(ns):
            prob[o + small[i]] = 1.0


@njit(cache=True, inline="always")
def _draw_split(m, st, offsets, prob, alias):
    """Smaller part n2 of the split multiset {m - n2, n2}."""
    o = offsets[m]
    k = offsets[m + 1] - o
    i = _randbelow(st, k)
    if _u01(st) >= prob[o + i]:
        i = alias[o + i]
    return i + 1


@njit(cache=True)
def _cmp_nodes(i, j, left, right, size):
    """Length-then-lexicographic comparison of canonical codes; tokens
    '(' < ')' < 'o' emitted by twin preorder walks."""
    if size[i] != size[j]:
        return -1 if size[i] < size[j] else 1
    sa = np.empty(4 * size[i] + 8, np.int64)
    sb = np.empty(4 * size[j] + 8, np.int64)
    sa[0] = i
    sb[0] = j
    ta = 1
    tb = 1
    while ta > 0:
        a = sa[ta - 1]
        ta -= 1
        b = sb[tb - 1]
        tb -= 1
        if a == -1:
            toka = 1  # ')'
        elif left[a] < 0:
            toka = 2  # 'o'
        else:
            toka = 0  # '('
        if b == -1:
            tokb = 1
        elif left[b] < 0:
            tokb = 2
        else:
            tokb = 0
        if toka != tokb:
            return -1 if toka < tokb else 1
        if toka == 0:
            sa[ta] = -1
            sa[ta + 1] = right[a]
            sa[ta + 2] = left[a]
            ta += 3
            sb[tb] = -1
            sb[tb + 1] = right[b]
            sb[tb + 2] = left[b]
            tb += 3
    return 0


@njit(cache=True)
def _samp_unordered(m, st, left, right, size, nc, offsets, prob, alias):
    """Canonical representative of a uniform unordered tree, recursively.

    Equal splits draw ordered pairs, keep equal pairs always and distinct
    pairs with probability 1/2, rolling back the node arena on retry.
    """
    if m == 1:
        i = nc[0]
        nc[0] += 1
        left[i] = -1
        right[i] = -1
        size[i] = 1
        return i
    n2 = _draw_split(m, st, offsets, prob, alias)
    n1 = m - n2
    if n1 > n2:
        a = _samp_unordered(n1, st, left, right, size, nc, offsets, prob, alias)
        b = _samp_unordered(n2, st, left, right, size, nc, offsets, prob, alias)
        i = nc[0]
        nc[0] += 1
        left[i] = a
        right[i] = b
        size[i] = m
        return i
    while True:
        mark = nc[0]
        a = _samp_unordered(n2, st, left, right, size, nc, offsets, prob, alias)
        b = _samp_unordered(n2, st, left, right, size, nc, offsets, prob, alias)
        c = _cmp_nodes(a, b, left, right, size)
        if c == 0 or _u01(st) < 0.5:
            break
        nc[0] = mark
    i = nc[0]
    nc[0] += 1
    if c < 0:
        a, b = b, a
    left[i] = a
    right[i] = b
    size[i] = m
    return i


# ---------------------------------------------------------------------------
# batch kernels


@njit(cache=True, nogil=True)
def plane_skeleton_batch(
    n, a, nsamples, seed_state, xlo, dx, nx, ylo, dy, ny,
    hist, shape_ids, shape_counts, shape_sx, shape_sx2, n_tracked,
):
    """Sample plane trees, extract a-skeletons, bin the single-vertex shape
    into the (x, y) grid and accumulate per-shape counts and |x| moments.
    Returns the number of samples processed."""
    st = seed_state.copy()
    size = 2 * n - 1
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    parent = np.empty(size, np.int32)
    counts = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    sbits = np.empty(64, np.int8)
    xs = np.empty(64, np.int64)
    ys = np.empty(64, np.int64)
    pivs = np.empty(64, np.int32)
    for _ in range(nsamples):
        root = _remy(n, st, left, right, parent)
        _fill_counts(root, left, right, counts, order)
        nv, nl, _d = _skeleton(root, left, right, counts, a, sbits, xs, ys, pivs)
        sid = _shape_id(sbits, nv)
        tot = np.int64(0)
        for i in range(nv):
            tot += xs[i]
        for k in range(n_tracked):
            if shape_ids[k] == sid:
                shape_counts[k] += 1
                shape_sx[k] += tot
                shape_sx2[k] += float(tot) * float(tot)
                break
        if nv == 1:
            ix = int(np.floor((xs[0] - xlo) / dx))
            iy = int(np.floor((ys[0] - ylo) / dy))
            if 0 <= ix < nx and 0 <= iy < ny:
                hist[ix, iy] += 1
    return nsamples


@njit(cache=True, nogil=True)
def unordered_skeleton_batch(
    n, a, nsamples, seed_state, offsets, prob, alias,
    xlo, dx, nx, ylo, dy, ny,
    hist, shape_ids, shape_counts, shape_sx, shape_sx2, n_tracked,
):
    """Unordered analog of plane_skeleton_batch: only a-good samples enter
    the histogram and shape statistics; returns (samples, good count)."""
    st = seed_state.copy()
    size = 2 * n + 8
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    tsize = np.empty(size, np.int32)
    counts = tsize  # leaf counts are the sizes for the canonical sampler
    order = np.empty(size, np.int32)
    nc = np.empty(1, np.int64)
    sbits = np.empty(64, np.int8)
    xs = np.empty(64, np.int64)
    ys = np.empty(64, np.int64)
    pivs = np.empty(64, np.int32)
    ngood = 0
    for _ in range(nsamples):
        nc[0] = 0
        root = _samp_unordered(n, st, left, right, tsize, nc, offsets, prob, alias)
        nv, nl, distinct = _skeleton(root, left, right, counts, a, sbits, xs, ys, pivs)
        # a-goodness: pairwise distinct marks and distinct I_0 child sizes
        good = distinct == 1
        if good:
            for i in range(nv):
                for j in range(i + 1, nv):
                    if xs[i] == xs[j]:
                        good = False
                        break
                if not good:
                    break
        if not good:
            continue
        ngood += 1
        sid = _shape_id(sbits, nv)
        tot = np.int64(0)
        for i in range(nv):
            tot += xs[i]
        for k in range(n_tracked):
            if shape_ids[k] == sid:
                shape_counts[k] += 1
                shape_sx[k] += tot
                shape_sx2[k] += float(tot) * float(tot)
                break
        if nv == 1:
            ix = int(np.floor((xs[0] - xlo) / dx))
            iy = int(np.floor((ys[0] - ylo) / dy))
            if 0 <= ix < nx and 0 <= iy < ny:
                hist[ix, iy] += 1
    return nsamples, ngood


@njit(cache=True, nogil=True)
def plane_height_batch(n, nsamples, seed_state, hist):
    st = seed_state.copy()
    size = 2 * n - 1
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    parent = np.empty(size, np.int32)
    heights = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    for _ in range(nsamples):
        root = _remy(n, st, left, right, parent)
        h = _fill_heights(root, left, right, heights, order)
        if h < len(hist):
            hist[h] += 1
    return nsamples


@njit(cache=True, nogil=True)
def unordered_height_batch(n, nsamples, seed_state, offsets, prob, alias, hist):
    st = seed_state.copy()
    size = 2 * n + 8
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    tsize = np.empty(size, np.int32)
    heights = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    nc = np.empty(1, np.int64)
    for _ in range(nsamples):
        nc[0] = 0
        root = _samp_unordered(n, st, left, right, tsize, nc, offsets, prob, alias)
        h = _fill_heights(root, left, right, heights, order)
        if h < len(hist):
            hist[h] += 1
    return nsamples


@njit(cache=True, nogil=True)
def trim_tightness_batch(n, a_values, nsamples, seed_state, offsets, prob, alias, out_removed, out_h):
    """Per sample: the tree height and, per trimming mass a, the maximal
    height of a removed subtree (hanging at a leaf of t[a])."""
    st = seed_state.copy()
    size = 2 * n + 8
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    tsize = np.empty(size, np.int32)
    heights = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    nc = np.empty(1, np.int64)
    na = len(a_values)
    for s in range(nsamples):
        nc[0] = 0
        # the canonical sampler fills tsize with subtree leaf counts
        root = _samp_unordered(n, st, left, right, tsize, nc, offsets, prob, alias)
        h = _fill_heights(root, left, right, heights, order)
        out_h[s] = h
        # leaf counts == tsize already (canonical sampler fills sizes)
        for ia in range(na):
            a = a_values[ia]
            best = 0
            # v is a leaf of t[a] iff counts[v] <= a and (v == root or
            # counts[parent] > a); walk top-down marking boundary vertices
            top = 0
            order[top] = root
            top += 1
            while top > 0:
                top -= 1
                v = order[top]
                if tsize[v] <= a:
                    if heights[v] > best:
                        best = heights[v]
                    continue
                if left[v] >= 0:
                    order[top] = left[v]
                    top += 1
                    order[top] = right[v]
                    top += 1
            out_removed[s, ia] = best
    return nsamples


@njit(cache=True, nogil=True)
def plane_skeleton_moments_batch(
    n, a, nsamples, seed_state,
    shape_ids, shape_counts, shape_sx, shape_sx2, shape_sy, shape_sy2, n_tracked,
):
    """Shape marginals plus |x| and |y| moments of plane a-skeletons."""
    st = seed_state.copy()
    size = 2 * n - 1
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    parent = np.empty(size, np.int32)
    counts = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    sbits = np.empty(64, np.int8)
    xs = np.empty(64, np.int64)
    ys = np.empty(64, np.int64)
    pivs = np.empty(64, np.int32)
    for _ in range(nsamples):
        root = _remy(n, st, left, right, parent)
        _fill_counts(root, left, right, counts, order)
        nv, nl, _d = _skeleton(root, left, right, counts, a, sbits, xs, ys, pivs)
        sid = _shape_id(sbits, nv)
        totx = np.int64(0)
        toty = np.int64(0)
        for i in range(nv):
            totx += xs[i]
        for i in range(nl):
            toty += ys[i]
        for k in range(n_tracked):
            if shape_ids[k] == sid:
                shape_counts[k] += 1
                shape_sx[k] += totx
                shape_sx2[k] += float(totx) * float(totx)
                shape_sy[k] += toty
                shape_sy2[k] += float(toty) * float(toty)
                break
    return nsamples


@njit(cache=True, nogil=True)
def unordered_skeleton_moments_batch(
    n, a, nsamples, seed_state, offsets, prob, alias,
    shape_ids, shape_counts, shape_sx, shape_sx2, shape_sy, shape_sy2, n_tracked,
):
    st = seed_state.copy()
    size = 2 * n + 8
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    tsize = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    nc = np.empty(1, np.int64)
    sbits = np.empty(64, np.int8)
    xs = np.empty(64, np.int64)
    ys = np.empty(64, np.int64)
    pivs = np.empty(64, np.int32)
    ngood = 0
    for _ in range(nsamples):
        nc[0] = 0
        root = _samp_unordered(n, st, left, right, tsize, nc, offsets, prob, alias)
        nv, nl, distinct = _skeleton(root, left, right, tsize, a, sbits, xs, ys, pivs)
        good = distinct == 1
        if good:
            for i in range(nv):
                for j in range(i + 1, nv):
                    if xs[i] == xs[j]:
                        good = False
                        break
                if not good:
                    break
        if not good:
            continue
        ngood += 1
        sid = _shape_id(sbits, nv)
        totx = np.int64(0)
        toty = np.int64(0)
        for i in range(nv):
            totx += xs[i]
        for i in range(nl):
            toty += ys[i]
        for k in range(n_tracked):
            if shape_ids[k] == sid:
                shape_counts[k] += 1
                shape_sx[k] += totx
                shape_sx2[k] += float(totx) * float(totx)
                shape_sy[k] += toty
                shape_sy2[k] += float(toty) * float(toty)
                break
    return nsamples, ngood


@njit(cache=True, nogil=True)
def excursion_skeleton_moments_batch(
    m, eps, nsamples, seed_state,
    shape_ids, shape_counts, shape_sx, shape_sx2, shape_sy, shape_sy2, n_tracked,
):
    """zeta(2^{3/2} e, eps) approximated through contours of uniform m-leaf
    plane trees.

    A subtree with k leaves spans a contour component of length 4k - 2, so
    the sweep at mass eps (time rescaled to [0,1]) coincides with the plane
    skeleton at a_eff = ceil((eps (4m - 4) + 2) / 4) - 1, with contour-unit
    marks x + 1 (off the root) and 4y - 4; heights scaled by sqrt(2)/sqrt(2m)
    match the 2^{3/2} e normalization.  Accumulates sums of the scaled
    |x| and |y| totals.
    """
    st = seed_state.copy()
    size = 2 * m - 1
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    parent = np.empty(size, np.int32)
    counts = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    sbits = np.empty(64, np.int8)
    xs = np.empty(64, np.int64)
    ys = np.empty(64, np.int64)
    pivs = np.empty(64, np.int32)
    sigma = 4.0 * m - 4.0
    thresh = eps * sigma
    a_eff = int(np.ceil((thresh + 2.0) / 4.0)) - 1
    scale_x = 1.0 / np.sqrt(1.0 * m)  # sqrt(2)/sqrt(2m)
    for _ in range(nsamples):
        root = _remy(m, st, left, right, parent)
        _fill_counts(root, left, right, counts, order)
        nv, nl, _d = _skeleton(root, left, right, counts, a_eff, sbits, xs, ys, pivs)
        sid = _shape_id(sbits, nv)
        totx = 0.0
        toty = 0.0
        for i in range(nv):
            totx += (xs[i] + (1.0 if i > 0 else 0.0)) * scale_x
        for i in range(nl):
            toty += (4.0 * ys[i] - 4.0) / sigma
        for k in range(n_tracked):
            if shape_ids[k] == sid:
                shape_counts[k] += 1
                shape_sx[k] += totx
                shape_sx2[k] += totx * totx
                shape_sy[k] += toty
                shape_sy2[k] += toty * toty
                break
    return nsamples
