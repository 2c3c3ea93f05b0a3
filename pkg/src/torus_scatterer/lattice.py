"""Lattice points on spheres in Z^d (d = 2, 3) and sums-of-squares arithmetic.

Shells {xi : |xi|^2 = n} are enumerated by a bounded coordinate scan with
lexicographic ordering and memoised in an optional disk-backed cache.  The
module also hosts the census operations behind the trend checks: two-square
counts, close-pair (minimum chord) statistics on circles, spherical strip
counts, linear inner-product solution counts, and the near-collision sets
used by the proximity filters.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

import numpy as np
from filelock import FileLock

# Proof-artifact constants, kept exactly as stated and never tuned: the factor
# 3 in the near-collision thresholds and the factor 5 bounding the correlation
# support radius |zeta| <= 5 sqrt(lambda).
COLLISION_SET_FACTOR = 3
SUPPORT_RADIUS_FACTOR = 5

Point = tuple


@dataclass(frozen=True)
class LatticeShell:
    """All integer vectors of squared norm ``n`` in dimension ``d``."""

    d: int
    n: int
    points: tuple

    @property
    def multiplicity(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class NormSequence:
    """The squared Laplace spectrum N_d intersected with [0, upper]."""

    d: int
    upper: float
    norms: tuple

    def __iter__(self):
        return iter(self.norms)

    def __len__(self):
        return len(self.norms)


@dataclass(frozen=True)
class FourAdicSplit:
    """n = 4^a * n1 with 4 not dividing n1."""

    a: int
    n1: int

    @property
    def value(self) -> int:
        return 4**self.a * self.n1


def _validate_dim(d):
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")


def _scan_shell_2d(n):
    pts = []
    r = isqrt(n)
    for x in range(-r, r + 1):
        rem = n - x * x
        y = isqrt(rem)
        if y * y == rem:
            if y == 0:
                pts.append((x, 0))
            else:
                pts.append((x, -y))
                pts.append((x, y))
    pts.sort()
    return tuple(pts)


class ShellCache:
    """In-memory shell store with optional append-only disk persistence.

    Disk format: one record per line,
    ``d,n,multiplicity,x1,y1[,z1],x2,y2[,z2],...`` with exact integer text.
    Reads require no lock; appends serialise on a sibling ``.lock`` file so
    concurrent processes may share one cache file.
    """

    def __init__(self):
        self._mem = {}
        self._lock = threading.Lock()
        self._path = None

    def attach(self, path):
        self._path = str(path)
        try:
            with open(self._path, "r", encoding="ascii") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    vals = [int(tok) for tok in line.split(",")]
                    d, n, mult = vals[0], vals[1], vals[2]
                    flat = vals[3:]
                    pts = tuple(
                        tuple(flat[i * d : (i + 1) * d]) for i in range(mult)
                    )
                    self._mem[(d, n)] = pts
        except FileNotFoundError:
            pass

    def detach(self):
        self._path = None

    def _append(self, d, n, pts):
        record = [str(d), str(n), str(len(pts))]
        for p in pts:
            record.extend(str(c) for c in p)
        line = ",".join(record) + "\n"
        with FileLock(self._path + ".lock"):
            with open(self._path, "a", encoding="ascii") as fh:
                fh.write(line)

    def get(self, d, n):
        key = (d, n)
        pts = self._mem.get(key)
        if pts is not None:
            return pts
        if d == 2:
            pts = _scan_shell_2d(n)
        else:
            out = []
            r = isqrt(n)
            for x in range(-r, r + 1):
                for yz in self.get(2, n - x * x):
                    out.append((x,) + yz)
            out.sort()
            pts = tuple(out)
        with self._lock:
            self._mem[key] = pts
        if self._path is not None:
            self._append(d, n, pts)
        return pts


shells = ShellCache()


def enumerate_shell(n, d) -> LatticeShell:
    """All xi in Z^d with |xi|^2 = n, lexicographically ordered."""
    _validate_dim(d)
    n = int(n)
    if n < 0:
        raise ValueError("squared norm must be nonnegative")
    return LatticeShell(d=d, n=n, points=shells.get(d, n))


def four_adic_split(n) -> FourAdicSplit:
    """Factor n = 4^a * n1 with 4 not dividing n1; rejects n = 0."""
    n = int(n)
    if n < 1:
        raise ValueError("four-adic valuation requires n >= 1")
    a = 0
    while n % 4 == 0:
        n //= 4
        a += 1
    return FourAdicSplit(a=a, n1=n)


def is_representable(n, d) -> bool:
    """Whether n is a sum of d squares (membership in the Laplace spectrum)."""
    _validate_dim(d)
    n = int(n)
    if n < 0:
        return False
    if n == 0:
        return True
    if d == 3:
        # n = 4^a n1 is a sum of three squares iff n1 != 7 (mod 8)
        return four_adic_split(n).n1 % 8 != 7
    r = isqrt(n)
    for x in range(r + 1):
        rem = n - x * x
        y = isqrt(rem)
        if y * y == rem:
            return True
        if x * x > rem:
            break
    return False


@lru_cache(maxsize=16)
def representation_counts(limit, d):
    """Array r with r[n] = #representations of n as a sum of d squares, n <= limit."""
    _validate_dim(d)
    limit = int(limit)
    if limit < 0:
        raise ValueError("limit must be nonnegative")
    r = isqrt(limit)
    if d == 2:
        chunks = []
        for x in range(0, r + 1):
            ymax = isqrt(limit - x * x)
            y = np.arange(0, ymax + 1, dtype=np.int64)
            n = x * x + y * y
            w = np.full(y.shape, 4, dtype=np.int64)
            w[y == 0] = 2
            if x == 0:
                w //= 2
            chunks.append((n, w))
        n_all = np.concatenate([c[0] for c in chunks])
        w_all = np.concatenate([c[1] for c in chunks])
        return np.bincount(n_all, weights=w_all, minlength=limit + 1).astype(np.int64)
    r2 = representation_counts(limit, 2)
    out = r2.copy()
    for z in range(1, r + 1):
        out[z * z :] += 2 * r2[: limit - z * z + 1]
    return out


def enumerate_norms(X, d) -> NormSequence:
    """All elements of the squared spectrum N_d in [0, X], ascending."""
    _validate_dim(d)
    if X < 0:
        raise ValueError("upper bound must be nonnegative")
    counts = representation_counts(int(math.floor(X)), d)
    norms = tuple(int(v) for v in np.flatnonzero(counts > 0))
    return NormSequence(d=d, upper=float(X), norms=norms)


def nearest_norm(lam, d) -> int:
    """Element of the squared spectrum N_d closest to lam (ties go down).

    Negative lam maps to 0 since the spectrum is nonnegative.
    """
    _validate_dim(d)
    lam = float(lam)
    if lam <= 0:
        return 0
    lo = int(math.floor(lam))
    while lo > 0 and not is_representable(lo, d):
        lo -= 1
    hi = int(math.ceil(lam))
    while not is_representable(hi, d):
        hi += 1
    if abs(lam - lo) <= abs(hi - lam):
        return lo
    return hi


@lru_cache(maxsize=None)
def landau_ramanujan_constant(tol=1e-8):
    """K = 2^{-1/2} prod_{p=3 mod 4} (1-p^{-2})^{-1/2} from the Euler product.

    Primes are taken up to P = 1/(8 tol); the dropped tail of the log-product
    is below sum_{n>P, n=3 mod 4} n^{-2} / 2 <= 1/(8P) <= tol.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    bound = max(1000, int(math.ceil(1.0 / (8.0 * tol))))
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(bound) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.flatnonzero(sieve)
    p3 = primes[primes % 4 == 3].astype(np.float64)
    log_k = -0.5 * math.log(2.0) - 0.5 * float(np.sum(np.log1p(-1.0 / (p3 * p3))))
    return math.exp(log_k)


def landau_count(X):
    """(count, prediction): #{0 < n <= X sum of two squares} vs K X / sqrt(log X)."""
    if X < 10:
        raise ValueError("census requires X >= 10")
    counts = representation_counts(int(math.floor(X)), 2)
    count = int(np.count_nonzero(counts[1:]))
    prediction = landau_ramanujan_constant() * X / math.sqrt(math.log(X))
    return count, prediction


def _min_adjacent_gap_sq(xs, ys):
    """Minimum squared chord among points on a common circle (|pts| >= 2).

    Points on a circle attain their minimum pairwise distance between
    angular neighbours, so one angular sort suffices; distances stay in
    integer arithmetic.
    """
    order = np.argsort(np.arctan2(ys, xs), kind="stable")
    x = xs[order]
    y = ys[order]
    dx = np.diff(np.append(x, x[0]))
    dy = np.diff(np.append(y, y[0]))
    return int(np.min(dx * dx + dy * dy))


_gap_cache = {}


def close_pair_gap_sq(n):
    """Squared minimum gap between distinct lattice points on the circle |xi|^2 = n.

    Returns None when the shell has fewer than two points; raises if n is not
    a sum of two squares.
    """
    n = int(n)
    got = _gap_cache.get(n)
    if got is not None:
        return got if got > 0 else None
    pts = enumerate_shell(n, 2).points
    if not pts:
        raise ValueError(f"{n} is not a sum of two squares")
    if len(pts) < 2:
        _gap_cache[n] = -1
        return None
    xs = np.array([p[0] for p in pts], dtype=np.int64)
    ys = np.array([p[1] for p in pts], dtype=np.int64)
    val = _min_adjacent_gap_sq(xs, ys)
    _gap_cache[n] = val
    return val


def close_pair_gap(n):
    g = close_pair_gap_sq(n)
    return None if g is None else math.sqrt(g)


def has_close_pair(n, eps):
    """Whether the circle |xi|^2 = n carries two points at distance <= n^{1/2-eps}."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    g = close_pair_gap_sq(n)
    if g is None:
        return False
    return g <= float(n) ** (1.0 - 2.0 * eps)


def close_pair_census(X, eps):
    """(close_pair_count, total) over sums of two squares in [1, X]."""
    if X < 10:
        raise ValueError("census requires X >= 10")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    limit = int(math.floor(X))
    r = isqrt(limit)
    xs_all = []
    ys_all = []
    for x in range(-r, r + 1):
        ymax = isqrt(limit - x * x)
        y = np.arange(-ymax, ymax + 1, dtype=np.int64)
        xs_all.append(np.full(y.shape, x, dtype=np.int64))
        ys_all.append(y)
    xs = np.concatenate(xs_all)
    ys = np.concatenate(ys_all)
    ns = xs * xs + ys * ys
    keep = ns > 0
    xs, ys, ns = xs[keep], ys[keep], ns[keep]
    order = np.argsort(ns, kind="stable")
    xs, ys, ns = xs[order], ys[order], ns[order]
    uniq, starts = np.unique(ns, return_index=True)
    starts = np.append(starts, len(ns))
    total = len(uniq)
    close = 0
    for i, n in enumerate(uniq):
        lo, hi = starts[i], starts[i + 1]
        if hi - lo < 2:
            continue
        gap_sq = _min_adjacent_gap_sq(xs[lo:hi], ys[lo:hi])
        if gap_sq <= float(n) ** (1.0 - 2.0 * eps):
            close += 1
    return close, total


def strip_count(n, zeta, bound):
    """#{xi : |xi|^2 = n, |<2 xi - zeta, zeta>| < bound} on the 3D shell."""
    zeta = tuple(int(c) for c in zeta)
    if len(zeta) != 3:
        raise ValueError("zeta must be a 3D lattice point")
    if all(c == 0 for c in zeta):
        raise ValueError("zeta must be nonzero")
    if bound <= 0:
        raise ValueError("strip bound must be positive")
    zsq = sum(c * c for c in zeta)
    count = 0
    for p in enumerate_shell(n, 3).points:
        ip = 2 * (p[0] * zeta[0] + p[1] * zeta[1] + p[2] * zeta[2]) - zsq
        if abs(ip) < bound:
            count += 1
    return count


def _egcd(a, b):
    """(g, u, v) with u*a + v*b = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    if old_r < 0:
        old_r, old_u, old_v = -old_r, -old_u, -old_v
    return old_r, old_u, old_v


def inner_product_solutions(zeta, l, R):
    """#{xt in Z^2 : <xt, zeta> = l, |xt| <= R} via the gcd parameterisation.

    Solutions are xt0 + k(-n/g, m/g) for zeta = (m, n), g = gcd(m, n); the
    admissible k form an interval found from the quadratic |xt|^2 <= R^2 and
    then verified term-by-term in integer arithmetic.
    """
    m, n = int(zeta[0]), int(zeta[1])
    if m == 0 and n == 0:
        raise ValueError("zeta must be nonzero")
    l = int(l)
    g, u, v = _egcd(m, n)
    if l % g != 0:
        return 0
    t = l // g
    x0, y0 = u * t, v * t
    wx, wy = -n // g, m // g
    a = wx * wx + wy * wy
    b = x0 * wx + y0 * wy
    c = x0 * x0 + y0 * y0
    rsq = float(R) * float(R)
    disc = float(b * b) - a * (c - rsq)
    if disc < 0:
        return 0
    root = math.sqrt(disc)
    lo = math.floor((-b - root) / a) - 1
    hi = math.ceil((-b + root) / a) + 1
    count = 0
    for k in range(lo, hi + 1):
        if a * k * k + 2 * b * k + c <= rsq:
            count += 1
    return count


def inner_product_solutions_brute(zeta, l, R):
    """Brute-force twin of :func:`inner_product_solutions` (same comparison rule)."""
    m, n = int(zeta[0]), int(zeta[1])
    if m == 0 and n == 0:
        raise ValueError("zeta must be nonzero")
    l = int(l)
    rsq = float(R) * float(R)
    rr = int(math.floor(float(R)))
    count = 0
    for x in range(-rr, rr + 1):
        for y in range(-rr, rr + 1):
            if x * x + y * y <= rsq and x * m + y * n == l:
                count += 1
    return count


def _require_proximity_args(zeta, delta):
    if all(int(c) == 0 for c in zeta):
        raise ValueError("zeta must be nonzero")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")


def in_collision_set(xi, zeta, delta):
    """Points xi whose shifted copy xi - zeta sits on a distinct nearby sphere:
    0 < |<2 xi - zeta, zeta>| <= 3 |xi|^{2 delta}."""
    _require_proximity_args(zeta, delta)
    xi = tuple(int(c) for c in xi)
    zeta = tuple(int(c) for c in zeta)
    ip = sum((2 * a - b) * b for a, b in zip(xi, zeta))
    if ip == 0:
        return False
    nsq = sum(a * a for a in xi)
    return abs(ip) <= COLLISION_SET_FACTOR * float(nsq) ** delta


def in_collision_image_set(xt, zeta, delta):
    """Image of the collision set under xi -> 2 xi - zeta:
    0 < |<xt, zeta>| <= 3 |(xt + zeta)/2|^{2 delta}."""
    _require_proximity_args(zeta, delta)
    xt = tuple(int(c) for c in xt)
    zeta = tuple(int(c) for c in zeta)
    ip = sum(a * b for a, b in zip(xt, zeta))
    if ip == 0:
        return False
    msq = sum((a + b) * (a + b) for a, b in zip(xt, zeta))
    return abs(ip) <= COLLISION_SET_FACTOR * (msq / 4.0) ** delta
