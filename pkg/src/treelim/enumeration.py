"""Exact tree counts, the generating-function constants, and size-weight tables.

Two families are counted by number of leaves: binary plane trees (Catalan
numbers, closed form) and binary unordered trees (Wedderburn-Etherington
numbers, via the coefficient recurrence of the generating function
T(z) = z + (T(z^2) + T(z)^2)/2).  From T we extract the radius of
convergence rho (where T(rho) = 1) and the scale constant
c = sqrt(2 rho + 2 rho^2 T'(rho^2)), plus the probability weights

    mu_n = #plane_n / 2^(2n-1)        (Galton-Watson size law)
    nu_n = rho^n * #unordered_n

used by the exact finite-n skeleton laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from mpmath import mp, mpf

from .errors import CapExceeded, InconsistentCounts, InvalidInput, NonConvergence


class Family(Enum):
    PLANE = "plane"
    UNORDERED = "unordered"


def catalan_count(n: int) -> int:
    """Number of binary plane trees with n leaves: binom(2n-2, n-1)/n."""
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n}")
    return math.comb(2 * n - 2, n - 1) // n


def catalan_convolution_table(N: int) -> list[int]:
    """Independent oracle: plane counts via c_n = sum_{i} c_i c_{n-i}, c_1 = 1.

    Returns the table indexed 0..N with index 0 unused.
    """
    c = [0] * (N + 1)
    c[1] = 1
    for n in range(2, N + 1):
        c[n] = sum(c[i] * c[n - i] for i in range(1, n))
    return c


@dataclass
class CountTable:
    """Exact per-size counts t_1..t_N for one family, arbitrary precision."""

    family: Family
    counts: list[int] = field(default_factory=list)  # counts[0] unused, = 0

    @property
    def N(self) -> int:
        return len(self.counts) - 1 if self.counts else 0

    @classmethod
    def build(cls, family: Family, N: int) -> "CountTable":
        t = cls(family, [0, 1])
        t.extend_to(N)
        return t

    def extend_to(self, N: int) -> None:
        if not self.counts:
            self.counts = [0, 1]
        t = self.counts
        if self.family is Family.PLANE:
            for n in range(len(t), N + 1):
                t.append(catalan_count(n))
            return
        for n in range(len(t), N + 1):
            s = sum(t[i] * t[n - i] for i in range(1, n))
            if n % 2 == 0:
                s += t[n // 2]
            if s % 2 != 0:
                raise InconsistentCounts(f"odd pre-division sum at n={n}")
            t.append(s // 2)

    def __getitem__(self, n: int) -> int:
        if n < 1:
            raise InvalidInput(f"n must be >= 1, got {n}")
        if n > self.N:
            self.extend_to(n)
        return self.counts[n]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"#family={self.family.value}\n")
            for n in range(1, self.N + 1):
                fh.write(f"{n}\t{self.counts[n]}\n")

    @classmethod
    def load(cls, path: str) -> "CountTable":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if not header.startswith("#family="):
                raise InvalidInput(f"bad count cache header: {header!r}")
            family = Family(header.split("=", 1)[1])
            counts = [0]
            for line in fh:
                n_s, v_s = line.split("\t")
                n = int(n_s)
                if n != len(counts):
                    raise InvalidInput(f"non-contiguous count cache at n={n}")
                counts.append(int(v_s))
        return cls(family, counts)


_WE_TABLE = CountTable(Family.UNORDERED)


def we_count(n: int) -> int:
    """Number of binary unordered trees with n leaves (1,1,1,2,3,6,11,...)."""
    return _WE_TABLE[n]


@dataclass
class Constants:
    """rho, c and their certified precision.

    `rho_str` carries rho at full internal precision (decimal string) so that
    c can be recomputed without rerunning the bisection.
    """

    rho: float
    c: float
    precision: float  # certified bound on |T(rho) - 1|
    truncation: int  # number of series terms used
    rho_str: str = ""


def _series_at(counts: list[int], w, terms: int):
    """sum_{n<=terms} t_n w^n together with the geometric tail bound.

    The tail uses t_n <= 4^(n-1) (Catalan domination, so rho_lower = 1/4):
    sum_{n>terms} t_n w^n <= (1/4) (4w)^(terms+1) / (1 - 4w), valid for w < 1/4.
    """
    s = mpf(0)
    for n in range(terms, 0, -1):
        s += counts[n] * w**n
    r = 4 * w
    tail = (r ** (terms + 1)) / (4 * (1 - r)) if r < 1 else mp.inf
    return s, tail


def solve_rho(target_precision: float, max_terms: int = 4096) -> Constants:
    """Find rho with a certified bound |T(rho) - 1| <= target_precision.

    Bisection on z.  The functional equation T(z) = z + (T(z^2) + T(z)^2)/2
    gives (1 - T(z))^2 = 1 - 2z - T(z^2) =: -F(z) on (0, rho], with F strictly
    increasing and F(rho) = 0, so the sign of F brackets rho and
    |T(z) - 1| = sqrt(-F(z)).  T(z^2) sits far inside the disk of convergence
    and is evaluated by truncated series plus the geometric tail bound of
    `_series_at`, keeping every bracketing decision certified.
    """
    if target_precision <= 0:
        raise InvalidInput("target_precision must be > 0")
    eps2 = target_precision**2
    # z must be resolved to ~eps^2; give mpmath comfortable headroom.
    dps = max(30, int(2.4 * -math.log10(min(eps2, 1e-6))) + 20)
    terms = 128
    with mp.workdps(dps):
        while terms <= max_terms:
            _WE_TABLE.extend_to(terms)
            counts = _WE_TABLE.counts
            # rho > 1/4 by Catalan domination; T_N(0.25) > 1 certifies rho < 0.5
            lo, hi = mpf("0.25"), mpf("0.5")
            width_goal = mpf(10) ** (-(dps - 8))
            while hi - lo > width_goal:
                mid = (lo + hi) / 2
                s, tail = _series_at(counts, mid * mid, terms)
                f_lo = 2 * mid + s - 1  # lower bound for F(mid)
                if f_lo > 0:
                    hi = mid
                elif f_lo + tail < 0:
                    lo = mid
                else:
                    # mid sits inside the O(tail) uncertainty window around
                    # rho; lo is still a certified lower bracket, stop here
                    break
            s, tail = _series_at(counts, lo * lo, terms)
            f_abs = abs(2 * lo + s - 1) + tail
            achieved = float(mp.sqrt(f_abs))
            if achieved <= target_precision:
                rho_str = mp.nstr(lo, dps - 5)
                cc = _compute_c_mp(counts, lo, terms)
                return Constants(
                    rho=float(lo),
                    c=float(cc),
                    precision=achieved,
                    truncation=terms,
                    rho_str=rho_str,
                )
            terms *= 2
        raise NonConvergence(
            f"tail bound not below {target_precision} within {max_terms} terms"
        )


def _compute_c_mp(counts: list[int], rho_mp, terms: int):
    """c = sqrt(2 rho + 2 rho^2 T'(rho^2)), term-wise differentiated series."""
    w = rho_mp * rho_mp
    tp = mpf(0)
    for n in range(terms, 0, -1):
        tp += n * counts[n] * w ** (n - 1)
    return mp.sqrt(2 * rho_mp + 2 * rho_mp**2 * tp)


def compute_c(constants: Constants) -> float:
    """Evaluate c from a solved Constants; the derivative series at rho^2
    converges geometrically (ratio 4 rho^2 ~ 0.65), its tail is folded into
    the working precision."""
    terms = max(constants.truncation, 256)
    _WE_TABLE.extend_to(terms)
    with mp.workdps(40):
        rho_mp = mpf(constants.rho_str) if constants.rho_str else mpf(constants.rho)
        return float(_compute_c_mp(_WE_TABLE.counts, rho_mp, terms))


_CONSTANTS_CACHE: dict[float, Constants] = {}


def default_constants(target_precision: float = 1e-12) -> Constants:
    cst = _CONSTANTS_CACHE.get(target_precision)
    if cst is None:
        cst = solve_rho(target_precision)
        _CONSTANTS_CACHE[target_precision] = cst
    return cst


class WeightKind(Enum):
    MU = "mu"
    NU = "nu"


@dataclass
class WeightTable:
    """Float size-weights w_1..w_N with an analytic bound on the lost tail."""

    kind: WeightKind
    weights: np.ndarray  # index 0 unused (0.0)
    tail_mass: float

    @property
    def N(self) -> int:
        return len(self.weights) - 1

    def __getitem__(self, n: int) -> float:
        return float(self.weights[n])


def mu_exact(n: int) -> Fraction:
    """mu_n = #plane_n / 2^(2n-1) as an exact rational."""
    return Fraction(catalan_count(n), 2 ** (2 * n - 1))


# beyond this, exact nu ratios would need the O(N^2) bignum recurrence
_EXACT_NU_CAP = 1200


def weight_table(kind: WeightKind, N: int, constants: Constants | None = None) -> WeightTable:
    """Build mu (plane) or nu (unordered) weights up to index N.

    tail_mass comes from the n^(-3/2) asymptotics: mu_n ~ 1/(2 sqrt(pi) n^1.5)
    and nu_n ~ c/(2 sqrt(pi) n^1.5), integrated past N.
    """
    if N < 1:
        raise InvalidInput("N must be >= 1")
    w = np.zeros(N + 1)
    if kind is WeightKind.MU:
        w[1] = 0.5
        for n in range(1, N):
            w[n + 1] = w[n] * (2 * n - 1) / (2 * (n + 1))
        tail = 1.0 / (math.sqrt(math.pi) * math.sqrt(N))
        return WeightTable(kind, w, tail)
    constants = constants or default_constants()
    rho = constants.rho
    if N <= _EXACT_NU_CAP:
        _WE_TABLE.extend_to(N)
        lr = math.log(rho)
        for n in range(1, N + 1):
            # log-space: rho^n underflows near n ~ 780
            w[n] = math.exp(n * lr + math.log(_WE_TABLE.counts[n]))
    else:
        # same recurrence, rescaled by rho^n so it runs in float64
        w[1] = rho
        half = np.zeros(N + 1)
        for n in range(2, N + 1):
            s = float(np.dot(w[1:n], w[n - 1:0:-1]))
            if n % 2 == 0:
                s += rho ** (n // 2) * w[n // 2]
            w[n] = 0.5 * s
    tail = constants.c / (math.sqrt(math.pi) * math.sqrt(N))
    return WeightTable(kind, w, tail)


def enumeration_cap_check(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceeded(f"{what} capped at {cap}, got n={n}")
