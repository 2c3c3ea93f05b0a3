"""Truncated Green's functions of the scatterer and their L2 bookkeeping.

The eigenfunction attached to a new eigenvalue lam is the normalised Green's
function; its frequency-window truncation keeps the modes with
||xi|^2 - lam| < L (strict), by convention L = lam^delta.  Norms are stored
in Fourier-coefficient units: norm_sq = sum over kept modes of 1/(n-lam)^2,
so that the L2(dy) norm over the 2pi-periodic torus is (2pi)^{d/2} sqrt(norm_sq).
All downstream mass reports are dimensionless ratios, which makes that
constant drop out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _series, lattice, spectrum


class EmptyWindowError(ValueError):
    """No Laplace eigenvalue falls inside the truncation window."""


@dataclass(frozen=True)
class TruncatedEigenfunction:
    """Modes and weights of the window-truncated, unnormalised Green's function.

    ``xi`` is an (M, d) integer array, ``weights`` the matching 1/(n - lam);
    evaluate() divides by sqrt(norm_sq) so the torus mean of |g|^2 equals 1.
    """

    lam: float
    half_width: float
    delta: float
    x0: tuple
    d: int
    xi: np.ndarray
    weights: np.ndarray
    norm_sq: float

    @property
    def modes(self):
        return [(tuple(int(c) for c in row), float(w)) for row, w in zip(self.xi, self.weights)]

    def window_norms(self):
        return sorted({int(v) for v in (self.xi * self.xi).sum(axis=1)})


@dataclass(frozen=True)
class NormReport:
    full_norm_sq: float
    truncated_norm_sq: float
    defect: float
    tail_bound: float


def build_truncated(lam, delta=None, x0=None, d=2, window=None) -> TruncatedEigenfunction:
    """Collect the modes with ||xi|^2 - lam| < L, L = lam^delta (or an explicit
    ``window`` half-width for diagnostic use).  Raises EmptyWindowError when the
    window contains no Laplace eigenvalue."""
    lam = float(lam)
    if window is not None:
        half = float(window)
        if half <= 0:
            raise ValueError("window half-width must be positive")
        delta = math.log(half) / math.log(lam) if lam > 1 else None
    else:
        if delta is None:
            raise ValueError("either delta or window must be given")
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if lam <= 1:
            raise ValueError("window rule L = lam^delta requires lam > 1")
        half = lam**delta
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if x0 is None:
        x0 = (0.0,) * d
    x0 = tuple(float(c) % (2 * math.pi) for c in x0)
    if len(x0) != d:
        raise ValueError(f"x0 must have {d} coordinates")

    lo = max(0, int(math.floor(lam - half)) - 1)
    hi = int(math.ceil(lam + half)) + 1
    rows = []
    wvals = []
    norm_terms = []
    for n in range(lo, hi + 1):
        if not abs(n - lam) < half:
            continue
        if not lattice.is_representable(n, d):
            continue
        if abs(n - lam) < 1e-12:
            raise _series.PoleProximityError(f"lambda={lam} sits on the eigenvalue {n}")
        pts = lattice.enumerate_shell(n, d).points
        w = 1.0 / (n - lam)
        for p in pts:
            rows.append(p)
            wvals.append(w)
        norm_terms.append(len(pts) * w * w)
    if not rows:
        raise EmptyWindowError(
            f"no Laplace eigenvalue within {half:.6g} of lambda={lam:.6g}"
        )
    xi = np.array(rows, dtype=np.int64)
    weights = np.array(wvals, dtype=np.float64)
    return TruncatedEigenfunction(
        lam=lam,
        half_width=half,
        delta=delta,
        x0=x0,
        d=d,
        xi=xi,
        weights=weights,
        norm_sq=math.fsum(norm_terms),
    )


def full_norm_sq(lam, d, tol=1e-9, min_cutoff=None):
    """Untruncated squared norm sum_xi 1/(|xi|^2 - lam)^2 (coefficient units)."""
    return spectrum.norm_sq_function(lam, d, tol=tol, min_cutoff=min_cutoff)


def window_norm_sq(lam, half, d):
    """sum over ||xi|^2 - lam| < half of 1/(|xi|^2 - lam)^2, from shell counts
    only (no point enumeration, so wide diagnostic windows stay cheap)."""
    lam = float(lam)
    if half <= 0:
        raise ValueError("window half-width must be positive")
    hi = int(math.ceil(lam + half)) + 1
    # round the table size to a power of two so the count cache is reused
    counts = lattice.representation_counts(1 << max(8, int(math.ceil(math.log2(hi)))), d)
    lo = max(0, int(math.floor(lam - half)) - 1)
    terms = []
    for n in range(lo, min(hi, len(counts) - 1) + 1):
        if counts[n] and abs(n - lam) < half:
            if abs(n - lam) < 1e-12:
                raise _series.PoleProximityError(
                    f"lambda={lam} sits on the eigenvalue {n}"
                )
            terms.append(counts[n] / (n - lam) ** 2)
    if not terms:
        raise EmptyWindowError(
            f"no Laplace eigenvalue within {half:.6g} of lambda={lam:.6g}"
        )
    return math.fsum(terms)


def truncation_defect(lam, delta, d, tol=1e-9, window=None) -> NormReport:
    """Exact distance between the normalised eigenfunction and its truncation.

    The truncation is an orthogonal frequency projection, so
    ||g - g_L||^2 = 2 (1 - ||G_L|| / ||G||) identically; the report also
    carries the coarse comparison value lam^0.1 / (L ||G||^2).
    """
    lam = float(lam)
    if window is not None:
        half = float(window)
    else:
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if lam <= 1:
            raise ValueError("window rule L = lam^delta requires lam > 1")
        half = lam**delta
    truncated = window_norm_sq(lam, half, d)
    full = full_norm_sq(lam, d, tol=tol)
    full = max(full, truncated)  # the window part never exceeds the full sum
    defect = 2.0 * (1.0 - math.sqrt(truncated / full))
    return NormReport(
        full_norm_sq=full,
        truncated_norm_sq=truncated,
        defect=defect,
        tail_bound=lam**0.1 / (half * full),
    )


def evaluate(f, x) -> complex:
    """g(x) = sum_modes w e^{i <x - x0, xi>} / sqrt(norm_sq)."""
    return complex(evaluate_batch(f, np.asarray(x, dtype=np.float64)[None, :])[0])


def evaluate_batch(f, points) -> np.ndarray:
    """Vectorised evaluate over an (P, d) array of torus points."""
    pts = np.asarray(points, dtype=np.float64)
    phases = (pts - np.asarray(f.x0)) @ f.xi.T
    return (np.exp(1j * phases) @ f.weights) / math.sqrt(f.norm_sq)


def dump_modes(f, fh):
    """CSV mode dump: header line `lambda,L,norm_sq` with its values, then one
    `xi_1,..,xi_d,weight` row per mode."""
    fh.write("lambda,L,norm_sq\n")
    fh.write(f"{f.lam:.12g},{f.half_width:.12g},{f.norm_sq:.12g}\n")
    fh.write(",".join(f"xi_{i+1}" for i in range(f.d)) + ",weight\n")
    for row, w in zip(f.xi, f.weights):
        fh.write(",".join(str(int(c)) for c in row) + f",{w:.12g}\n")
