"""Limit densities of rescaled skeletons, and the exact finite-n laws they
approximate.

The one-dimensional building blocks, all taking a fixed window parameter
epsilon in (0, 1):

  g(x)   = exp(-1/(4x)) / (2 sqrt(pi) x^(3/2)), the stable(1/2) density with
           Laplace transform exp(-sqrt(lambda));
  a_1(x) = (2 sqrt(pi) x^(3/2))^(-1) for x >= epsilon, else 0, and a_k its
           k-fold convolution (a_0 == 1);
  b(y)   = (2 eps - y) / (pi y^2 sqrt(eps (y - eps))) on (eps, 2 eps], the
           closed form of (1/4pi) int_{y-eps}^{eps} du / (u(y-u))^(3/2).

The skeleton density for a shape s with marks x (per vertex) and leaf masses
y is, with z = 1 - |y| and X = |x|,

  psi^s(x, y) = sqrt(pi)/2^(2|s|-2) * sum_k (-X)^(k-2)/k!
                * int_{k eps}^{z} g((z-u)/X^2) a_k(u) du * prod_v b(y_v),

zero when |s| > 1/eps.  The integrals against g are evaluated exactly per
table cell (a_k taken piecewise linear) using the antiderivatives
G(w) = erfc(1/(2 sqrt(w))) and int_0^w v g(v) dv, which keeps the evaluation
uniformly accurate down to X -> 0.

The exact finite-n referee: P(sum_{i<=l} X_i = m, max X_i <= a) by direct
convolution powering of the truncated weight vector, with the
inclusion-exclusion expansion as an independent second evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc

from .enumeration import Family, WeightKind, WeightTable
from .errors import InvalidInput, OutOfDomain
from .plane import PlaneTree, Skeleton, preorder
from .unordered import GoodSkeleton

SQRT_PI = math.sqrt(math.pi)


def g_density(x):
    """Density of the hitting time of 1/sqrt(2) by standard Brownian motion."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise OutOfDomain("g is defined for x > 0")
    out = np.exp(-1.0 / (4.0 * x)) / (2.0 * SQRT_PI * x**1.5)
    return float(out) if out.ndim == 0 else out


def _G(w):
    """int_0^w g = erfc(1/(2 sqrt(w)))."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = erfc(1.0 / (2.0 * np.sqrt(w[pos])))
    return out


def _H(w):
    """int_0^w v g(v) dv = sqrt(w/pi) exp(-1/(4w)) - erfc(1/(2 sqrt(w)))/2."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    wp = w[pos]
    out[pos] = np.sqrt(wp / math.pi) * np.exp(-1.0 / (4.0 * wp)) - 0.5 * erfc(
        1.0 / (2.0 * np.sqrt(wp))
    )
    return out


def b_density(y: float, epsilon: float) -> float:
    """Closed form of the pair-mass density on (eps, 2 eps]."""
    if not 0 < epsilon < 1:
        raise OutOfDomain("epsilon must be in (0, 1)")
    if not epsilon < y <= 2 * epsilon:
        raise OutOfDomain(f"b is defined on (eps, 2 eps], got y={y}")
    return (2 * epsilon - y) / (math.pi * y * y * math.sqrt(epsilon * (y - epsilon)))


def a2_closed_form(x: float, epsilon: float) -> float:
    """a_2 has the same antiderivative as b: (x-2e)/(pi x^2 sqrt(e(x-e)))."""
    if x <= 2 * epsilon:
        return 0.0
    return (x - 2 * epsilon) / (math.pi * x * x * math.sqrt(epsilon * (x - epsilon)))


@dataclass
class DensityContext:
    """Tabulated a_k on a uniform grid, plus the constants psi needs."""

    epsilon: float
    h: float
    k_max: int
    grid: np.ndarray
    tables: dict[int, np.ndarray] = field(default_factory=dict)
    c: float | None = None

    def a_k(self, k: int, x) -> np.ndarray:
        """a_k by linear interpolation of the table (a_0 == 1)."""
        x = np.asarray(x, dtype=float)
        if k == 0:
            return np.ones_like(x)
        if k > self.k_max:
            raise InvalidInput(f"a_{k} not tabulated (k_max={self.k_max})")
        tab = self.tables[k]
        out = np.interp(x, self.grid, tab, left=0.0, right=float(tab[-1]))
        out[x < k * self.epsilon] = 0.0
        return out


def a_k_build(
    epsilon: float,
    k_max: int | None = None,
    h: float = 1e-4,
    c: float | None = None,
    x_max: float = 1.0,
) -> DensityContext:
    """Tabulate a_k = a_1 * a_(k-1) on [0, x_max].

    Each convolution integrates the exact u^(-3/2) kernel against the
    piecewise-linear interpolant of the previous table, cell by cell, so the
    jump of a_1 at epsilon costs nothing (epsilon is snapped onto the grid).
    """
    if not 0 < epsilon < 1:
        raise InvalidInput("epsilon must be in (0, 1)")
    j_eps = max(1, round(epsilon / h))
    h = epsilon / j_eps  # grid-align the support edge
    if k_max is None:
        k_max = int(1.0 / epsilon) + 1
    M = int(math.ceil(x_max / h)) + 1
    grid = np.arange(M + 1) * h
    ctx = DensityContext(epsilon, h, k_max, grid, c=c)
    a1 = np.zeros(M + 1)
    sup = grid >= epsilon - 1e-15
    a1[sup] = 1.0 / (2.0 * SQRT_PI * grid[sup] ** 1.5)
    ctx.tables[1] = a1
    if k_max < 2:
        return ctx
    # exact cell integrals of the a_1 kernel: I0 = int c0 u^-1.5,
    # I1 = int c0 u^-1.5 (u - u0)/h over [u0, u1]
    c0 = 1.0 / (2.0 * SQRT_PI)
    u0 = grid[j_eps:M]
    u1 = grid[j_eps + 1 : M + 1]
    I0 = c0 * 2.0 * (1.0 / np.sqrt(u0) - 1.0 / np.sqrt(u1))
    I1 = (c0 / h) * (2.0 * (np.sqrt(u1) - np.sqrt(u0)) + 2.0 * u0 * (1.0 / np.sqrt(u1) - 1.0 / np.sqrt(u0)))
    w_lo = np.zeros(M + 1)
    w_hi = np.zeros(M + 1)
    w_lo[j_eps:M] = I0 - I1  # multiplies a_{k-1}[j - l]
    w_hi[j_eps:M] = I1  # multiplies a_{k-1}[j - l - 1]
    for k in range(2, k_max + 1):
        prev = ctx.tables[k - 1]
        conv_lo = np.convolve(prev, w_lo[: M + 1])[: M + 1]
        conv_hi = np.convolve(prev, w_hi[: M + 1])[: M + 1]
        ak = conv_lo.copy()
        ak[1:] += conv_hi[:-1]
        # the cell whose argument spans [eps - h, eps] contributes nothing
        # exactly (the integrand vanishes there), but the interpolant ramps
        # across prev's support edge; cancel that spurious term
        edge = (k - 1) * j_eps
        if prev[edge] != 0.0:
            ak[edge:] -= prev[edge] * w_lo[: M + 1 - edge]
        ak[grid < k * epsilon - 1e-12] = 0.0
        ctx.tables[k] = ak
    return ctx


def _cells_for(ctx: DensityContext, k: int, z: float):
    """Piecewise-linear cell data of a_k on [k eps, z]: start abscissas u0,
    values A, slopes B, end abscissas u1 (the last cell is clipped at z)."""
    h, grid, tab = ctx.h, ctx.grid, ctx.tables[k]
    j0 = round(k * ctx.epsilon / h)
    j1 = min(int(math.floor(z / h + 1e-12)), len(grid) - 2)
    js = np.arange(j0, j1 + 1)
    u0 = grid[js]
    u1 = np.minimum(grid[js + 1], z)
    A = tab[js]
    B = (tab[js + 1] - tab[js]) / h
    keep = u1 > u0
    return u0[keep], u1[keep], A[keep], B[keep]


def psi_bracket_vec(ctx: DensityContext, Xs, z: float) -> np.ndarray:
    """sum_k (-X)^(k-2)/k! int_{k eps}^z g((z-u)/X^2) a_k(u) du, as a
    function of X (vectorized).

    Rewritten with J_k/X^2 so no negative powers of X appear; the integrals
    against g use the closed antiderivatives G and H per table cell, which
    stays exact in g even when the mass concentrates (X -> 0).
    """
    Xs = np.atleast_1d(np.asarray(Xs, dtype=float))
    out = np.zeros_like(Xs)
    if z <= 0:
        return out
    pos = Xs > 0
    X = Xs[pos]
    x2 = X * X
    # k = 0: the empty-sum term is the unconstrained local limit
    # g(z/X^2)/X^2 (a_0 is the unit atom at 0, not a density); the exact
    # finite-n law is the referee for this reading
    w0 = z / x2
    total = np.exp(-1.0 / (4.0 * w0)) / (2.0 * SQRT_PI * w0**1.5) / x2
    kmax = min(int(math.floor(z / ctx.epsilon + 1e-12)), ctx.k_max)
    sign, fact, xpow = -1.0, 1.0, X.copy()
    for k in range(1, kmax + 1):
        u0, u1, A, B = _cells_for(ctx, k, z)
        if len(u0):
            P = (A + B * (z - u0))[:, None]
            w_hi = (z - u0)[:, None] / x2[None, :]
            w_lo = (z - u1)[:, None] / x2[None, :]
            gpart = P * (_G(w_hi) - _G(w_lo))
            hpart = (B[:, None] * x2[None, :]) * (_H(w_hi) - _H(w_lo))
            jt = np.sum(gpart - hpart, axis=0)
            total = total + sign * xpow / fact * jt
        sign = -sign
        fact *= k + 1
        xpow = xpow * X
    out[pos] = total
    return out


def psi_bracket(ctx: DensityContext, X: float, z: float) -> float:
    if X <= 0 or z <= 0:
        return 0.0
    return float(psi_bracket_vec(ctx, np.array([X]), z)[0])


def bracket_x_integral(
    ctx: DensityContext,
    z_values,
    moment: int = 0,
    x_max: float = 25.0,
    n_nodes: int = 240,
) -> np.ndarray:
    """int_0^inf X^moment psi_bracket(X, z) dX per z, by Gauss-Legendre on
    [0, x_max] (the bracket decays like exp(-X^2/(4z)), so x_max = 25 loses
    nothing at double precision for z <= 1)."""
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    xs = 0.5 * x_max * (nodes + 1.0)
    ws = 0.5 * x_max * weights
    z_values = np.atleast_1d(np.asarray(z_values, dtype=float))
    out = np.zeros_like(z_values)
    for i, z in enumerate(z_values):
        vals = psi_bracket_vec(ctx, xs, float(z))
        out[i] = float(np.dot(ws * xs**moment, vals))
    return out


@dataclass(frozen=True)
class PsiInput:
    """Shape with positive real marks per vertex (preorder) and leaf masses."""

    shape: PlaneTree
    x: tuple[float, ...]
    y: tuple[float, ...]


def psi(inp: PsiInput, ctx: DensityContext) -> float:
    """The skeleton density psi^s(x, y); zero off its support."""
    s = inp.shape.leaf_count
    if s * ctx.epsilon > 1.0:
        return 0.0
    if any(v <= 0 for v in inp.x):
        return 0.0
    if any(not ctx.epsilon < yv <= 2 * ctx.epsilon for yv in inp.y):
        return 0.0
    z = 1.0 - sum(inp.y)
    if z <= 0:
        return 0.0
    X = sum(inp.x)
    pref = SQRT_PI / 2.0 ** (2 * s - 2)
    by = 1.0
    for yv in inp.y:
        by *= b_density(yv, ctx.epsilon)
    return pref * psi_bracket(ctx, X, z) * by


def _on_delta(shape: PlaneTree, x: tuple[float, ...]) -> bool:
    """x_left > x_right at every internal vertex (the Delta_s cone)."""
    def go(nd: PlaneTree, i: int) -> tuple[bool, int]:
        if nd.is_leaf:
            return True, i + 1
        li = i + 1
        okl, nxt = go(nd.left, li)
        okr, end = go(nd.right, nxt)
        return okl and okr and x[li] > x[nxt], end

    ok, _ = go(shape, 0)
    return ok


def psi_circ(inp: PsiInput, ctx: DensityContext) -> float:
    """Unordered-limit density: 2^(|s|-1) c^(2|s|-1) psi^s(c x, y) on the
    cone x_left > x_right, zero elsewhere."""
    if ctx.c is None:
        raise InvalidInput("DensityContext.c required for psi_circ")
    if not _on_delta(inp.shape, inp.x):
        return 0.0
    s = inp.shape.leaf_count
    cx = tuple(ctx.c * v for v in inp.x)
    return 2.0 ** (s - 1) * ctx.c ** (2 * s - 1) * psi(PsiInput(inp.shape, cx, inp.y), ctx)


# ---------------------------------------------------------------------------
# exact finite-n machinery


def constrained_sum_vector(l: int, a: int, w: WeightTable, m_max: int) -> np.ndarray:
    """P(sum_{i<=l} X_i = m, max X_i <= a) for m = 0..m_max, by convolution
    powering of the truncated weight vector."""
    if l < 0 or a < 0 or m_max < 0:
        raise InvalidInput("l, a, m_max must be >= 0")
    out = np.zeros(m_max + 1)
    out[0] = 1.0
    if l == 0:
        return out
    trunc = np.zeros(min(a, w.N, m_max) + 1)
    hi = min(a, w.N, m_max)
    trunc[1 : hi + 1] = w.weights[1 : hi + 1]

    def mult(p, q):
        if len(p) * len(q) <= 1 << 22:
            r = np.convolve(p, q)
        else:
            r = fftconvolve(p, q)
            np.maximum(r, 0.0, out=r)
        return r[: m_max + 1]

    power = trunc
    e = l
    while True:
        if e & 1:
            out = mult(out, power)
        e >>= 1
        if e == 0:
            break
        power = mult(power, power)
    return out


def exact_constrained_sum(l: int, m: int, a: int, w: WeightTable) -> float:
    """P(sum_{i=1}^l X_i = m, max_i X_i <= a)."""
    if m < 0:
        return 0.0
    return float(constrained_sum_vector(l, a, w, m)[m])


def pair_sum(y: int, a: int, w: WeightTable) -> float:
    """P(X_1 + X_2 = y, X_1 v X_2 <= a)."""
    lo = max(1, y - a)
    hi = min(a, y - 1, w.N)
    if lo > hi or y - lo > w.N:
        return 0.0
    first = w.weights[lo : hi + 1]
    second = w.weights[y - hi : y - lo + 1][::-1]
    return float(np.dot(first, second))


def pair_sum_distinct(y: int, a: int, w: WeightTable) -> float:
    """P(X_1 + X_2 = y, X_1 v X_2 <= a, X_1 != X_2)."""
    p = pair_sum(y, a, w)
    if y % 2 == 0 and y // 2 <= min(a, w.N):
        p -= float(w.weights[y // 2]) ** 2
    return max(p, 0.0)


def inclusion_exclusion_sum(l: int, m: int, a: int, w: WeightTable) -> float:
    """Independent evaluator of exact_constrained_sum via the alternating
    expansion over the |how many variables exceed a| events."""
    if w.N < m:
        raise InvalidInput("weight table too short for the target m")
    if l == 0:
        return 1.0 if m == 0 else 0.0
    full = np.zeros(m + 1)
    full[1 : min(w.N, m) + 1] = w.weights[1 : min(w.N, m) + 1]
    high = np.zeros(m + 1)
    if a + 1 <= min(w.N, m):
        high[a + 1 : min(w.N, m) + 1] = w.weights[a + 1 : min(w.N, m) + 1]
    # A_k = high^(*k), G_j = full^(*j); term_k = sum_r A_k(r) G_{l-k}(m-r)
    total = 0.0
    a_conv = np.zeros(m + 1)
    a_conv[0] = 1.0
    for k in range(0, l + 1):
        g_conv = np.zeros(m + 1)
        g_conv[0] = 1.0
        for _ in range(l - k):
            g_conv = np.convolve(g_conv, full)[: m + 1]
        term = float(np.dot(a_conv, g_conv[m::-1]))
        total += (-1) ** k * math.comb(l, k) * term
        a_conv = np.convolve(a_conv, high)[: m + 1]
        if not a_conv.any():
            break
    return total


def exact_skeleton_law(
    n: int,
    a: int,
    sk: Skeleton | GoodSkeleton,
    family: Family,
    w: WeightTable,
) -> float:
    """Exact probability of observing skeleton `sk` at trimming mass a.

    Plane: P_n(Sk_a = sk) = P(sum X = n - |y|, max <= a) / (2^(2|s|-1) mu_n)
    times prod_u P(X_1 + X_2 = y_u, max <= a).  Unordered: the distinct-value
    pair probabilities, prefactor 1/(2^|s| nu_n); the result is the law
    restricted to (not conditioned on) the a-good event.
    """
    if family is Family.PLANE and w.kind is not WeightKind.MU:
        raise InvalidInput("plane law needs mu weights")
    if family is Family.UNORDERED and w.kind is not WeightKind.NU:
        raise InvalidInput("unordered law needs nu weights")
    if w.N < n:
        raise InvalidInput("weight table must cover n")
    s = sk.shape.leaf_count
    l = sum(sk.x)
    m = n - sum(sk.y)
    if m < 0:
        return 0.0
    main = exact_constrained_sum(l, m, a, w)
    if main == 0.0:
        return 0.0
    if family is Family.PLANE:
        pref = 1.0 / (2.0 ** (2 * s - 1) * float(w.weights[n]))
        pairs = [pair_sum(yv, a, w) for yv in sk.y]
    else:
        pref = 1.0 / (2.0**s * float(w.weights[n]))
        pairs = [pair_sum_distinct(yv, a, w) for yv in sk.y]
    out = pref * main
    for p in pairs:
        out *= p
    return out
