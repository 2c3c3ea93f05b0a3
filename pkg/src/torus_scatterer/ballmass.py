"""L2 mass of truncated eigenfunctions over balls, exactly and by quadrature.

Because a truncated eigenfunction is a finite trigonometric sum, the mass of
|g|^2 in a ball B_x(r) is itself a finite Fourier sum: with the coefficient
autocorrelation S(zeta) = sum w_xi w_{xi-zeta}, the mass ratio

    mu(x, r) = [integral over B_x(r) of |g|^2] / [vol(B_r)/(2pi)^d]
             = 1 + (1/S(0)) sum_{zeta != 0} S(zeta) psi_d(r |zeta|) cos<x - x0, zeta>

with the normalised ball transform psi_2(rho) = 2 J_1(rho)/rho and
psi_3(rho) = 3 (sin rho - rho cos rho)/rho^3.  No truncation parameter is
involved: mass_ratio is exact up to rounding.  mass_ratio_quadrature is the
independent midpoint-grid oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lattice


class StepTooCoarseError(ValueError):
    """Quadrature step too large relative to the ball radius."""


@dataclass(frozen=True)
class MassQuery:
    """Ball centre and radius; r < pi keeps the ball inside one fundamental domain."""

    x: tuple
    r: float

    def __post_init__(self):
        if not 0 < self.r < math.pi:
            raise ValueError("ball radius must lie in (0, pi)")
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))


@dataclass(frozen=True)
class ModeCorrelation:
    """Autocorrelation table of the window coefficients.

    ``zeta`` holds the distinct difference vectors (lexicographically sorted,
    zero included), ``values`` the matching S(zeta); S(-zeta) = S(zeta) and
    s0 = S(0) = norm_sq.
    """

    d: int
    x0: tuple
    zeta: np.ndarray
    values: np.ndarray
    s0: float

    def pairs(self):
        return [
            (tuple(int(c) for c in z), float(v)) for z, v in zip(self.zeta, self.values)
        ]

    def deviation_bound(self) -> float:
        """Triangle-inequality bound: |mu - 1| <= sum_{zeta != 0} |S| / S0."""
        off = ~(self.zeta == 0).all(axis=1)
        return float(np.sum(np.abs(self.values[off]))) / self.s0


# Cephes-style rational coefficients for J1 on (8, inf); the small-x power
# series handles [0, 8].
_PP1 = (
    7.62125616208173112003e-4,
    7.31397056940917570436e-2,
    1.12719608129684925192e0,
    5.11207951146807644818e0,
    8.42404590141772420927e0,
    5.21451598682361504063e0,
    1.00000000000000000254e0,
)
_PQ1 = (
    5.71323128072548699714e-4,
    6.88455908754495404082e-2,
    1.10514232634061696926e0,
    5.07386386128601488557e0,
    8.39985554327604159757e0,
    5.20982848682361821619e0,
    9.99999999999999997461e-1,
)
_QP1 = (
    5.10862594750176621635e-2,
    4.98213872951233449420e0,
    7.58238284132545283818e1,
    3.66779609360150777800e2,
    7.10856304998926107277e2,
    5.97489612400613639965e2,
    2.11688757100572135698e2,
    2.52070205858023719784e1,
)
_QQ1 = (
    7.42373277035675149943e1,
    1.05644886038262816351e3,
    4.98641058337653607651e3,
    9.56231892404756170795e3,
    7.99704160447350683650e3,
    2.82619278517639096600e3,
    3.36093607810698293419e2,
)
_THREE_PI_QUARTER = 2.35619449019234492885
_SQRT_2_OVER_PI = 0.797884560802865355879892119869


def _polevl(x, coef):
    out = np.full_like(x, coef[0])
    for c in coef[1:]:
        out = out * x + c
    return out


def _p1evl(x, coef):
    out = x + coef[0]
    for c in coef[1:]:
        out = out * x + c
    return out


def bessel_j1(x):
    """J_1 to absolute accuracy ~1e-12: power series on [0, 8], asymptotic
    rational approximation beyond.  Accepts scalars or arrays, x >= 0."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(arr)

    small = arr <= 8.0
    if np.any(small):
        xs = arr[small]
        u = 0.25 * xs * xs
        term = np.full_like(xs, 0.5)
        acc = term.copy()
        for k in range(1, 26):
            term = term * (-u) / (k * (k + 1))
            acc += term
        out[small] = xs * acc

    big = ~small
    if np.any(big):
        xb = arr[big]
        w = 5.0 / xb
        z = w * w
        p = _polevl(z, _PP1) / _polevl(z, _PQ1)
        q = _polevl(z, _QP1) / _p1evl(z, _QQ1)
        xn = xb - _THREE_PI_QUARTER
        out[big] = (
            _SQRT_2_OVER_PI * (p * np.cos(xn) - w * q * np.sin(xn)) / np.sqrt(xb)
        )
    return float(out[0]) if scalar else out


def ball_kernel(rho, d):
    """Normalised Fourier transform of the unit ball: psi_d(0) = 1, |psi_d| <= 1.

    psi_2(rho) = 2 J_1(rho)/rho,  psi_3(rho) = 3 (sin rho - rho cos rho)/rho^3.
    """
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    arr = np.asarray(rho, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(arr)
    tiny = arr < 1e-4
    t2 = arr[tiny] * arr[tiny]
    if d == 2:
        out[tiny] = 1.0 - t2 / 8.0 + t2 * t2 / 192.0
        big = ~tiny
        out[big] = 2.0 * bessel_j1(arr[big]) / arr[big]
    else:
        out[tiny] = 1.0 - t2 / 10.0 + t2 * t2 / 280.0
        big = ~tiny
        xb = arr[big]
        out[big] = 3.0 * (np.sin(xb) - xb * np.cos(xb)) / (xb**3)
    return float(out[0]) if scalar else out


def correlate(f) -> ModeCorrelation:
    """S(zeta) = sum over mode pairs with difference zeta of w_xi w_{xi'}.

    Covers both the equal-norm and the off-norm pairs in one table; the
    support automatically satisfies |zeta| <= 5 sqrt(lam) for lam >= 4.
    Differences are packed into single integers so the group-by is one sort;
    the key order is lexicographic in zeta, which fixes the table ordering.
    """
    xi = f.xi
    w = f.weights
    m = len(w)
    off = int(np.abs(xi).max()) * 2 + 1
    base = 2 * off + 1
    diffs = xi[:, None, :] - xi[None, :, :]
    keys = diffs[..., 0] + off
    for axis in range(1, f.d):
        keys = keys * base + (diffs[..., axis] + off)
    uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
    prods = (w[:, None] * w[None, :]).ravel()
    values = np.bincount(inverse, weights=prods, minlength=len(uniq))
    zeta = np.empty((len(uniq), f.d), dtype=np.int64)
    rem = uniq.copy()
    for axis in range(f.d - 1, -1, -1):
        zeta[:, axis] = rem % base - off
        rem //= base
    if f.lam >= 4:
        radius = lattice.SUPPORT_RADIUS_FACTOR * math.sqrt(f.lam)
        worst = math.sqrt(float((zeta * zeta).sum(axis=1).max()))
        if worst > radius:
            raise AssertionError("correlation support exceeded 5 sqrt(lambda)")
    zero_row = int(np.flatnonzero((zeta == 0).all(axis=1))[0])
    return ModeCorrelation(
        d=f.d, x0=f.x0, zeta=zeta, values=values, s0=float(values[zero_row])
    )


def mass_ratio(f, query, correlation=None) -> float:
    """Exact mass ratio mu(x, r); 1 means perfect equidistribution at (x, r)."""
    corr = correlation if correlation is not None else correlate(f)
    q = query if isinstance(query, MassQuery) else MassQuery(*query)
    znorm = np.sqrt((corr.zeta * corr.zeta).sum(axis=1).astype(np.float64))
    psi = ball_kernel(q.r * znorm, f.d)
    shift = np.asarray(q.x, dtype=np.float64) - np.asarray(f.x0)
    phase = np.exp(1j * (corr.zeta @ shift))
    total = np.sum(corr.values * psi * phase)
    if abs(total.imag) > 1e-10 * (1.0 + abs(total.real)):
        raise AssertionError("mass ratio acquired an imaginary part")
    return float(total.real) / corr.s0


def _grid_axes(q, n_cells, d):
    h = 2.0 * q.r / n_cells
    offsets = -q.r + h * (np.arange(n_cells) + 0.5)
    return h, [q.x[a] + offsets for a in range(d)]


def mass_ratio_quadrature(f, query, h):
    """Midpoint-rule oracle for mass_ratio: (estimate, error_scale).

    Cells of side ~h tile the bounding box; cells whose centre lies in the
    ball contribute |g|^2, and the result is normalised by the number of
    contributing cells (the quadrature's own measure of the ball), which is
    what makes the constant mode exact.  error_scale is the first-order
    boundary-layer estimate d*(h/r).
    """
    q = query if isinstance(query, MassQuery) else MassQuery(*query)
    if h > q.r / 50.0:
        raise StepTooCoarseError(f"step {h} exceeds r/50 = {q.r / 50:.3g}")
    n_cells = int(math.ceil(2.0 * q.r / h))
    h_eff, axes = _grid_axes(q, n_cells, f.d)

    # fold +xi/-xi into a half set: g = w0 + 2 Re sum_half w e^{i<p - x0, xi>}
    keys = f.xi
    nonzero = np.any(keys != 0, axis=1)
    first = np.argmax(keys != 0, axis=1)
    lead = keys[np.arange(len(keys)), first]
    half = nonzero & (lead > 0)
    w0 = float(np.sum(f.weights[~nonzero]))
    xi_h = keys[half]
    w_h = f.weights[half]

    centre = np.asarray(q.x)
    x0 = np.asarray(f.x0)
    rsq = q.r * q.r
    if f.d == 2:
        ex = np.exp(1j * np.outer(axes[0] - x0[0], xi_h[:, 0]))
        ey = np.exp(1j * np.outer(axes[1] - x0[1], xi_h[:, 1]))
        g = w0 + 2.0 * np.real((ex * w_h) @ ey.T)
        dx = axes[0] - centre[0]
        dy = axes[1] - centre[1]
        mask = (dx * dx)[:, None] + (dy * dy)[None, :] <= rsq
        count = int(np.count_nonzero(mask))
        total = float(np.sum((g * g)[mask]))
    else:
        ex = np.exp(1j * np.outer(axes[0] - x0[0], xi_h[:, 0])).astype(np.complex64)
        ey = np.exp(1j * np.outer(axes[1] - x0[1], xi_h[:, 1])).astype(np.complex64)
        ez = np.exp(1j * np.outer(axes[2] - x0[2], xi_h[:, 2])).astype(np.complex64)
        dx2 = (axes[0] - centre[0]) ** 2
        dy2 = (axes[1] - centre[1]) ** 2
        dz2 = (axes[2] - centre[2]) ** 2
        disc = dx2[:, None] + dy2[None, :]
        count = 0
        total = 0.0
        w_c = w_h.astype(np.complex64)
        for k in range(n_cells):
            g_slab = w0 + 2.0 * np.real((ex * (w_c * ez[k])) @ ey.T)
            mask = disc <= rsq - dz2[k]
            count += int(np.count_nonzero(mask))
            total += float(np.sum((g_slab.astype(np.float64) ** 2)[mask]))
    if count == 0:
        raise StepTooCoarseError("no cell centres fell inside the ball")
    estimate = total / (count * f.norm_sq)
    return estimate, f.d * (h_eff / q.r)


def mass_ratio_monte_carlo(f, query, samples, rng):
    """Secondary oracle: mean of |g|^2 over uniform points of the ball, over
    the torus mean (= 1 in the normalisation used here)."""
    q = query if isinstance(query, MassQuery) else MassQuery(*query)
    pts = rng.standard_normal((samples, f.d))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    radii = q.r * rng.random(samples) ** (1.0 / f.d)
    pts = np.asarray(q.x) + pts * radii[:, None]
    phases = (pts - np.asarray(f.x0)) @ f.xi.T
    g = (np.exp(1j * phases) @ f.weights) / math.sqrt(f.norm_sq)
    return float(np.mean(np.abs(g) ** 2))
