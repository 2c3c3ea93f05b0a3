"""Spectral equation of the point scatterer and the interlaced new eigenvalues.

The perturbed eigenvalues are the solutions of

    s(lam) = sum_xi [ 1/(|xi|^2 - lam) - |xi|^2/(|xi|^4 + 1) ] = c0 tan(phi/2)

with c0 = sum_xi 1/(|xi|^4 + 1).  s is strictly increasing between
consecutive Laplace eigenvalues and runs from -inf to +inf on each interval,
so every interval carries exactly one root, plus a single root below zero.
Roots are bracketed just inside each interval, bisected to 1e-9 and polished
with a couple of Newton steps (the derivative is the squared-resolvent sum,
i.e. the Green's-function norm).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from . import _series
from ._series import PoleProximityError
from .lattice import enumerate_norms, nearest_norm

__all__ = [
    "ScattererConfig",
    "SpectrumEntry",
    "PerturbedSpectrum",
    "PoleProximityError",
    "BracketFailureError",
    "SolverError",
    "c0",
    "spectral_function",
    "solve_spectrum",
    "nearest_norm",
]

_BISECT_TOL = 1e-9
_RESIDUAL_TOL = 1e-6
_MAX_DOUBLINGS = 60


class BracketFailureError(ArithmeticError):
    """No sign change found while bracketing a root."""


class SolverError(ArithmeticError):
    """Root accepted by the bracketing logic failed its residual check."""


@dataclass(frozen=True)
class ScattererConfig:
    """Scatterer placement and self-adjoint extension parameter.

    phi = pi (the unperturbed Laplacian) is rejected; x0 lives on the torus
    [0, 2pi)^d.
    """

    d: int
    phi: float = 0.0
    x0: tuple = None
    series_tolerance: float = 1e-9

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if not -math.pi < self.phi < math.pi:
            raise ValueError("phi must lie in the open interval (-pi, pi)")
        if self.series_tolerance <= 0:
            raise ValueError("series tolerance must be positive")
        x0 = self.x0 if self.x0 is not None else (0.0,) * self.d
        x0 = tuple(float(c) % (2 * math.pi) for c in x0)
        if len(x0) != self.d:
            raise ValueError(f"x0 must have {self.d} coordinates")
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class SpectrumEntry:
    lam: float
    lower_norm: int | None  # None marks the interval (-inf, 0)
    upper_norm: int
    residual: float


@dataclass
class PerturbedSpectrum:
    config: ScattererConfig
    entries: tuple

    def lambdas(self):
        return [e.lam for e in self.entries]

    def write_csv(self, fh):
        fh.write("lambda,lower_norm,upper_norm,residual\n")
        for e in self.entries:
            lower = "-inf" if e.lower_norm is None else str(e.lower_norm)
            fh.write(f"{e.lam:.12g},{lower},{e.upper_norm},{e.residual:.6g}\n")


@lru_cache(maxsize=16)
def c0(d, tol=1e-9):
    """c0 = sum_xi 1/(|xi|^4 + 1) = 1 + sum_n r_d(n)/(n^2 + 1).

    Evaluated as 1 + Z_d(2) - sum_n r_d(n)/(n^2 (n^2+1)); the correction
    series is generated from lattice zeta values (alternating in 1/n^2, so
    the truncation error is below the first omitted term).
    """
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    r1 = 2 * d  # multiplicity of the shell n = 1
    corr = r1 / 2.0  # exact n = 1 term of sum r/(n^2 (n^2+1))
    sign = 1.0
    for k in range(40):
        term = _series.lattice_zeta(d, 4 + 2 * k) - r1
        corr += sign * term
        sign = -sign
        if term < tol / 4 and k >= 1:
            break
    return 1.0 + _series.lattice_zeta(d, 2) - corr


def spectral_function(lam, d, tol=1e-9, min_cutoff=None):
    """s(lam) = sum_xi [1/(|xi|^2 - lam) - |xi|^2/(|xi|^4 + 1)].

    Strictly increasing between consecutive Laplace eigenvalues; raises
    PoleProximityError within 1e-12 of the spectrum.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    lam = float(lam)
    body = _series.regularised_resolvent_sum(lam, d, min_cutoff=min_cutoff, tol=tol)
    return -1.0 / lam + body  # the xi = 0 term is 1/(0 - lam)


def norm_sq_function(lam, d, tol=1e-9, min_cutoff=None):
    """sum_xi 1/(|xi|^2 - lam)^2, the squared L2 norm of the Green's function
    in Fourier-coefficient units (also s'(lam))."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    lam = float(lam)
    body = _series.squared_resolvent_sum(lam, d, min_cutoff=min_cutoff, tol=tol)
    return 1.0 / (lam * lam) + body


def _bisect(f, a, b, fa, fb):
    """Bisection on increasing f with f(a) < 0 < f(b); tolerant of rare
    midpoints landing exactly on a Laplace eigenvalue."""
    while b - a > _BISECT_TOL:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        try:
            fm = f(mid)
        except PoleProximityError:
            mid = a + (b - a) * 0.4921875
            fm = f(mid)
        if fm < 0.0:
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return a, b


def _polish(lam, a, b, f, fprime):
    for _ in range(4):
        try:
            val = f(lam)
            der = fprime(lam)
        except PoleProximityError:
            break
        if der <= 0.0:
            break
        step = val / der
        cand = lam - step
        if not a < cand < b:
            break
        lam = cand
        if abs(step) < 1e-15 * max(1.0, abs(lam)):
            break
    return lam


def _solve_interval(n1, n2, f, fprime):
    """Unique root of f in the open interval (n1, n2); f increases from -inf
    to +inf, so the bracket shrinks toward the endpoints until it straddles."""
    gap = n2 - n1
    gamma = min(1e-6, gap / 10.0)
    a = None
    g = gamma
    while g > 1e-11:
        cand = n1 + g
        if f(cand) < 0.0:
            a = cand
            break
        g /= 10.0
    if a is None:
        raise BracketFailureError(f"no sign change above {n1}")
    b = None
    g = gamma
    while g > 1e-11:
        cand = n2 - g
        if f(cand) > 0.0:
            b = cand
            break
        g /= 10.0
    if b is None:
        raise BracketFailureError(f"no sign change below {n2}")
    lo, hi = _bisect(f, a, b, -1.0, 1.0)
    lam = 0.5 * (lo + hi)
    return _polish(lam, n1, n2, f, fprime)


def _solve_below_zero(f, fprime):
    b = None
    g = 1e-6
    while g > 1e-14:
        if f(-g) > 0.0:
            b = -g
            break
        g /= 10.0
    if b is None:
        raise BracketFailureError("no positive value of s just below 0")
    a = -1.0
    for _ in range(_MAX_DOUBLINGS):
        if f(a) < 0.0:
            break
        a *= 2.0
    else:
        raise BracketFailureError(
            "no sign change on (-inf, 0) after 60 bracket doublings"
        )
    lo, hi = _bisect(f, a, b, -1.0, 1.0)
    lam = 0.5 * (lo + hi)
    return _polish(lam, a, b, f, fprime)


def solve_spectrum(X, config, min_cutoff=None) -> PerturbedSpectrum:
    """All new eigenvalues interlacing the Laplace spectrum up to X, plus the
    single eigenvalue below zero.  Bracket failures are raised, never skipped."""
    if X <= 0:
        raise ValueError("spectrum ceiling must be positive")
    d = config.d
    tol = config.series_tolerance
    rhs = c0(d, tol) * math.tan(config.phi / 2.0)
    cutoff = _series.cutoff_for(d, max(float(X), 8.0), min(tol, 1e-8))
    if min_cutoff is not None:
        cutoff = max(cutoff, min_cutoff)

    def f(lam):
        return spectral_function(lam, d, tol, min_cutoff=cutoff) - rhs

    def fprime(lam):
        return norm_sq_function(lam, d, tol, min_cutoff=cutoff)

    norms = enumerate_norms(X, d).norms
    entries = []
    lam0 = _solve_below_zero(f, fprime)
    entries.append(
        SpectrumEntry(lam=lam0, lower_norm=None, upper_norm=0, residual=abs(f(lam0)))
    )
    for n1, n2 in zip(norms[:-1], norms[1:]):
        lam = _solve_interval(n1, n2, f, fprime)
        entries.append(
            SpectrumEntry(lam=lam, lower_norm=n1, upper_norm=n2, residual=abs(f(lam)))
        )
    worst = max(e.residual for e in entries)
    if worst > _RESIDUAL_TOL:
        raise SolverError(f"residual {worst:.3g} exceeds {_RESIDUAL_TOL}")
    return PerturbedSpectrum(config=config, entries=tuple(entries))
