"""Series engine shared by the spectral solver and the Green's-function norms.

The sums handled here are r_d-weighted resolvents over the squared spectrum,

    S(lam) = sum_n r_d(n) [1/(n - lam) - n/(n^2 + 1)]   (regularised resolvent)
    F(lam) = sum_n r_d(n) / (n - lam)^2                 (squared norm)

whose raw tails decay like X^{d/2 - 2} per unit cutoff, i.e. only X^{-1/2}
overall for d = 3: direct truncation cannot reach useful tolerances.  Each
evaluation therefore splits the range three ways:

  * exact prefix over shells n <= x1 ~ 16 |lam| (vectorised; the near-pole
    band is summed with math.fsum since that is where cancellation lives);
  * binned Taylor blocks over x1 < n <= X: the per-bin moments
    M_k = sum r_d(n) (n - c)^k are lam-independent and precomputed, and the
    resolvent's n-derivatives are closed-form, so a bin costs O(K) per call;
  * analytic tail over n > X through T_s(X) = Z_d(s) - sum_{n<=X} r_d(n)/n^s
    where Z_d(s) = sum_{n>=1} r_d(n)/n^s.  The tail enters as lam^j T_{j+1},
    which amplifies absolute noise in T_s by lam^j, so the T table is built
    in 80-bit extended precision with tree-reduction partial sums; the
    expansion stops at lam^3 and the cutoff X is sized so the first dropped
    term lam^4 T_5(X) stays below 1e-8.

Z_2(s) = 4 zeta(s) beta(s) in closed form; Z_3(s) comes from the theta-kernel
integral representation (rapidly convergent for every s > 3/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lattice

_BIN_SUBDIV = 16  # bins per octave; Taylor ratio stays below 1/30
_MOMENTS = 8
_TAIL_SMAX = 9
_PREFIX_FACTOR = 16  # exact prefix covers n <= 16 |lam|
_BAND = 48  # half-width of the fsum band around lam inside the prefix


class PoleProximityError(ArithmeticError):
    """lam is too close to an element of the squared spectrum."""


@lru_cache(maxsize=64)
def _lattice_zeta_str(d, s):
    """Z_d(s) to 25 significant digits, as a string (seed for any float type)."""
    import mpmath as mp

    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    with mp.workdps(40):
        s_ = mp.mpf(s)
        if d == 2:
            beta = 4**-s_ * (mp.zeta(s_, mp.mpf(1) / 4) - mp.zeta(s_, mp.mpf(3) / 4))
            val = 4 * mp.zeta(s_) * beta
        elif s >= 10:
            # fast-converging: the dropped tail beyond 4096 is < 2 pi 4096^{3/2-s}
            counts = lattice.representation_counts(4096, 3)
            val = mp.fsum(
                mp.mpf(int(counts[n])) / mp.mpf(n) ** s_
                for n in range(1, 4097)
                if counts[n]
            )
        else:

            def theta_cube_minus_one(t):
                return mp.jtheta(3, 0, mp.exp(-mp.pi * t)) ** 3 - 1

            integral = mp.quad(
                lambda t: theta_cube_minus_one(t)
                * (t ** (s_ - 1) + t ** (mp.mpf(1) / 2 - s_)),
                [1, mp.inf],
            )
            val = mp.pi**s_ / mp.gamma(s_) * (integral + 1 / (s_ - mp.mpf(3) / 2) - 1 / s_)
        return mp.nstr(val, 25)


@lru_cache(maxsize=64)
def lattice_zeta(d, s):
    """Z_d(s) = sum over nonzero xi in Z^d of |xi|^{-2s}, as float."""
    return float(_lattice_zeta_str(d, s))


def _tree_sum_ld(arr):
    """Pairwise tree reduction in extended precision: error ~ eps * log2(n)."""
    a = arr.astype(np.longdouble, copy=True)
    while a.size > 4:
        if a.size % 2:
            a = np.append(a, np.longdouble(0))
        a = a[0::2] + a[1::2]
    return a.sum(dtype=np.longdouble)


def cutoff_for(d, lam_max, tol=1e-8):
    """Power-of-two shell cutoff making the dropped lam^4 T_5 term <= tol.

    T_5(X) <= c_d X^{d/2 - 4} with c_2 = pi/4, c_3 = 2 pi / 3.5.
    """
    lam = max(4.0, abs(float(lam_max)))
    if d == 2:
        need = (0.79 * lam**4 / tol) ** 0.25
    else:
        need = (1.80 * lam**4 / tol) ** (1.0 / 3.5)
    need = max(need, 4096.0, 2 * _PREFIX_FACTOR * lam)
    return 1 << max(12, int(math.ceil(math.log2(need))))


@dataclass
class SeriesContext:
    d: int
    limit: int
    norms: np.ndarray  # shells n with r_d(n) > 0, ascending (float64)
    rvals: np.ndarray  # matching multiplicities (float64)
    edges: np.ndarray  # bin edges (int); bin b spans (edges[b], edges[b+1]]
    edge_idx: np.ndarray  # positions of the edges inside `norms`
    centers: np.ndarray  # bin centres
    moments: np.ndarray  # (n_bins, _MOMENTS): sum of r (n - c)^k per bin
    reg_prefix: np.ndarray  # cumulative sum of r n/(n^2+1) at each edge
    tails: np.ndarray  # longdouble T_s(limit), s = 2.._TAIL_SMAX


@lru_cache(maxsize=8)
def series_context(d, limit):
    counts = lattice.representation_counts(limit, d)
    norm_idx = np.flatnonzero(counts[1:]) + 1
    norms = norm_idx.astype(np.float64)
    rvals = counts[norm_idx].astype(np.float64)

    edges = [min(64, limit)]
    while edges[-1] < limit:
        step = max(1, edges[-1] // _BIN_SUBDIV)
        edges.append(min(limit, edges[-1] + step))
    edges = np.array(edges, dtype=np.int64)
    edge_idx = np.searchsorted(norms, edges.astype(np.float64), side="right")
    centers = (edges[:-1] + edges[1:] + 1).astype(np.float64) / 2.0

    nb = len(centers)
    moments = np.zeros((nb, _MOMENTS))
    reg_all = rvals * norms / (norms * norms + 1.0)
    reg_prefix = np.zeros(len(edges))
    reg_prefix[0] = reg_all[: edge_idx[0]].sum()
    for b in range(nb):
        lo, hi = edge_idx[b], edge_idx[b + 1]
        nn = norms[lo:hi] - centers[b]
        powr = rvals[lo:hi].copy()
        for k in range(_MOMENTS):
            moments[b, k] = powr.sum()
            powr = powr * nn
        reg_prefix[b + 1] = reg_prefix[b] + reg_all[lo:hi].sum()

    norms_ld = norm_idx.astype(np.longdouble)
    rvals_ld = counts[norm_idx].astype(np.longdouble)
    tails = np.zeros(_TAIL_SMAX + 1, dtype=np.longdouble)
    inv = 1.0 / norms_ld
    powv = rvals_ld * inv
    for s in range(2, _TAIL_SMAX + 1):
        powv = powv * inv
        tails[s] = np.longdouble(_lattice_zeta_str(d, s)) - _tree_sum_ld(powv)
    return SeriesContext(
        d=d,
        limit=limit,
        norms=norms,
        rvals=rvals,
        edges=edges,
        edge_idx=edge_idx,
        centers=centers,
        moments=moments,
        reg_prefix=reg_prefix,
        tails=tails,
    )


def context_for(d, lam, min_cutoff=None, tol=1e-8):
    limit = cutoff_for(d, lam, min(tol, 1e-8))
    if min_cutoff is not None:
        limit = max(limit, 1 << int(math.ceil(math.log2(min_cutoff))))
    return series_context(d, limit)


def guard_pole(lam, d, tol=1e-12):
    near = lattice.nearest_norm(lam, d)
    if abs(lam - near) < tol:
        raise PoleProximityError(
            f"lambda={lam!r} is within {tol} of the Laplace eigenvalue {near}"
        )


def _prefix_split(ctx, lam):
    """(i1, b0): prefix covers norms[:i1]; bins b0.. are summed via moments."""
    target = max(float(ctx.edges[0]), _PREFIX_FACTOR * abs(lam))
    b0 = int(np.searchsorted(ctx.edges.astype(np.float64), target, side="left"))
    b0 = min(b0, len(ctx.edges) - 1)
    return int(ctx.edge_idx[b0]), b0


def _banded_sum(values, norms, lam):
    """Sum with fsum over the band |n - lam| <= _BAND, plain np.sum elsewhere."""
    lo = int(np.searchsorted(norms, lam - _BAND, side="left"))
    hi = int(np.searchsorted(norms, lam + _BAND, side="right"))
    pieces = [float(np.sum(values[:lo])), float(np.sum(values[hi:]))]
    if hi > lo:
        pieces.append(math.fsum(values[lo:hi]))
    return math.fsum(pieces)


def regularised_resolvent_sum(lam, d, min_cutoff=None, tol=1e-8):
    """sum over n >= 1 of r_d(n) [1/(n - lam) - n/(n^2 + 1)] (no n = 0 term)."""
    lam = float(lam)
    ctx = context_for(d, lam, min_cutoff, tol)
    guard_pole(lam, d)
    i1, b0 = _prefix_split(ctx, lam)
    norms, rvals = ctx.norms, ctx.rvals

    prefix = _banded_sum(rvals[:i1] / (norms[:i1] - lam), norms[:i1], lam)
    prefix -= ctx.reg_prefix[b0]

    centers = ctx.centers[b0:]
    bin_total = 0.0
    if len(centers):
        inv_l = 1.0 / (centers - lam)
        pow_l = inv_l.copy()
        acc = np.zeros(len(centers))
        sign = 1.0
        for k in range(_MOMENTS):
            acc += sign * ctx.moments[b0:, k] * pow_l
            pow_l = pow_l * inv_l
            sign = -sign
        bin_total = math.fsum(acc) - (ctx.reg_prefix[-1] - ctx.reg_prefix[b0])

    lam_ld = np.longdouble(lam)
    T = ctx.tails
    tail = lam_ld * T[2] + (lam_ld * lam_ld + 1) * T[3] + lam_ld**3 * T[4] - T[5] + T[7]
    return math.fsum([prefix, bin_total, float(tail)])


def squared_resolvent_sum(lam, d, min_cutoff=None, tol=1e-8):
    """sum over n >= 1 of r_d(n) / (n - lam)^2 (no n = 0 term)."""
    lam = float(lam)
    ctx = context_for(d, lam, min_cutoff, tol)
    guard_pole(lam, d)
    i1, b0 = _prefix_split(ctx, lam)
    norms, rvals = ctx.norms, ctx.rvals

    diff = norms[:i1] - lam
    prefix = _banded_sum(rvals[:i1] / (diff * diff), norms[:i1], lam)

    centers = ctx.centers[b0:]
    bin_total = 0.0
    if len(centers):
        inv_l = 1.0 / (centers - lam)
        pow_l = inv_l * inv_l
        acc = np.zeros(len(centers))
        sign = 1.0
        for k in range(_MOMENTS):
            acc += sign * (k + 1) * ctx.moments[b0:, k] * pow_l
            pow_l = pow_l * inv_l
            sign = -sign
        bin_total = math.fsum(acc)

    lam_ld = np.longdouble(lam)
    T = ctx.tails
    tail = T[2] + 2 * lam_ld * T[3] + 3 * lam_ld**2 * T[4] + 4 * lam_ld**3 * T[5]
    return math.fsum([prefix, bin_total, float(tail)])
