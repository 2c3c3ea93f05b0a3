"""Discrepancy scans over eigenvalue families, plus the density filters and
arithmetic counting audits.

A scan builds each truncated eigenfunction, takes its mode correlation, and
evaluates the mass ratio on a uniform torus grid for a ladder of radii.  On
the uniform N^d lattice the trigonometric sum collapses to an FFT (frequency
folding mod N is exact evaluation, not an approximation), and the grid is
always augmented with the scatterer position and its antipode.  The reported
supremum is a grid supremum: the continuum sup is not computable and every
report says so in its header.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import ballmass, greens, lattice
from .lattice import nearest_norm

log = logging.getLogger(__name__)

FILTER_GAP = "gap"
FILTER_BR_AVOID = "br_avoid"
FILTER_LAMBDA_PRIME = "lambda_prime_3d"

MODES = ("2d", "3d-all", "3d-filtered")
_THRESHOLD_EXPONENT = {"2d": -0.5, "3d-all": -1.0 / 12.0, "3d-filtered": -1.0 / 6.0}
_DELTA_CAP = {"2d": 1.0 / 6.0, "3d-all": 1.0, "3d-filtered": 1.0 / 16.0}
_DEFAULT_GRID = {"2d": 24, "3d-all": 12, "3d-filtered": 12}


def delta_bound(mode, eps):
    return _DELTA_CAP[mode] * eps


@dataclass(frozen=True)
class ScanPlan:
    mode: str
    eps: float = 0.3
    delta: float = 0.04
    x_grid_n: int = 0  # 0 picks the per-mode default
    r_count: int = 16
    r_grid: tuple | None = None
    lambdas: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        cap = delta_bound(self.mode, self.eps)
        if not 0 < self.delta < cap:
            raise ValueError(
                f"mode {self.mode} requires 0 < delta < {cap:.6g}, got {self.delta}"
            )
        if self.x_grid_n == 0:
            object.__setattr__(self, "x_grid_n", _DEFAULT_GRID[self.mode])
        if self.x_grid_n < 2:
            raise ValueError("x grid must have at least 2 points per axis")
        if self.r_count < 1:
            raise ValueError("need at least one radius")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))

    @property
    def d(self):
        return 2 if self.mode == "2d" else 3


@dataclass(frozen=True)
class DiscrepancyReport:
    lam: float
    filters_passed: frozenset
    sup_dev: float
    argmax_x: tuple
    argmax_r: float
    defect_bar: float
    grid_n: int
    eps: float
    delta: float


def radius_grid(lam, mode, eps, count=16):
    """Log-spaced radii from the mode's threshold lam^(theta+eps) up to pi/2.

    At desk scale the 3D thresholds saturate above pi/2 for moderate eps; the
    grid then falls back to [pi/4, pi/2] so every lam is scanned on the same
    ladder and medians stay comparable.
    """
    lo = float(lam) ** (_THRESHOLD_EXPONENT[mode] + eps)
    hi = math.pi / 2.0
    if lo >= hi:
        lo = hi / 2.0
    if count == 1:
        return (hi,)
    return tuple(np.geomspace(lo, hi, count))


def gap_filter_2d(spec, eta):
    """Eigenvalues whose bracketing norms satisfy n_{k+1} - n_k <= n_k^eta (n_k >= 2)."""
    if spec.config.d != 2:
        raise ValueError("gap filter applies to the two-dimensional spectrum")
    if eta <= 0:
        raise ValueError("eta must be positive")
    kept = []
    for e in spec.entries:
        if e.lower_norm is None or e.lower_norm < 2:
            continue
        if e.upper_norm - e.lower_norm <= float(e.lower_norm) ** eta:
            kept.append(e.lam)
    return kept


def close_pair_avoid_filter(spec, eps, delta):
    """Eigenvalues with no close-pair norm inside (lam - L, lam + L), L = lam^delta.

    Report token: ``br_avoid``.
    """
    if spec.config.d != 2:
        raise ValueError("close-pair avoidance applies to the two-dimensional spectrum")
    if not 0 < delta < eps / 3.0:
        raise ValueError("requires 0 < delta < eps/3")
    kept = []
    for e in spec.entries:
        if e.lam <= 1:
            continue
        half = e.lam**delta
        bad = False
        for n in range(int(math.floor(e.lam - half)) + 1, int(math.ceil(e.lam + half))):
            if n < 1 or abs(n - e.lam) >= half:
                continue
            if not lattice.is_representable(n, 2):
                continue
            if lattice.has_close_pair(n, eps):
                bad = True
                break
        if not bad:
            kept.append(e.lam)
    return kept


def lambda0_preset(spec, eps, delta):
    """The base family used by the proximity-count audits: avoidance at eps/2."""
    return close_pair_avoid_filter(spec, eps / 2.0, delta)


def has_collision_witness(lam, zeta, delta, d=2):
    """Whether some mode with ||xi|^2 - lam| <= L (L = lam^delta) lies in the
    near-collision set of zeta."""
    lam = float(lam)
    if lam <= 1:
        raise ValueError("requires lam > 1")
    half = lam**delta
    for n in range(max(0, int(math.floor(lam - half))), int(math.ceil(lam + half)) + 1):
        if abs(n - lam) > half or not lattice.is_representable(n, d):
            continue
        for p in lattice.enumerate_shell(n, d).points:
            if lattice.in_collision_set(p, zeta, delta):
                return True
    return False


def classify_norm(n, zeta):
    """'N0' when the four-adic valuation of n exceeds that of |zeta|^2, else 'N1'."""
    zeta = tuple(int(c) for c in zeta)
    if all(c == 0 for c in zeta):
        raise ValueError("zeta must be nonzero")
    n = int(n)
    if not lattice.is_representable(n, 3) or n < 1:
        raise ValueError(f"{n} is not a positive sum of three squares")
    a_n = lattice.four_adic_split(n).a
    a_z = lattice.four_adic_split(sum(c * c for c in zeta)).a
    return "N0" if a_n > a_z else "N1"


def has_large_four_free_part(n):
    """Whether the 4-free part n1 of n satisfies n1 > n / log^2 n (natural log)."""
    n = int(n)
    if n < 2 or not lattice.is_representable(n, 3):
        raise ValueError(f"{n} must be a sum of three squares, n >= 2")
    return lattice.four_adic_split(n).n1 > n / math.log(n) ** 2


def lambda_prime_3d(spec):
    """Eigenvalues whose nearest norm has a large 4-free part.

    Report token: ``lambda_prime_3d``.  Eigenvalues whose nearest norm is
    below 2 (where the criterion is vacuous) are dropped.
    """
    if spec.config.d != 3:
        raise ValueError("this filter applies to the three-dimensional spectrum")
    kept = []
    for e in spec.entries:
        n = nearest_norm(e.lam, 3)
        if n >= 2 and has_large_four_free_part(n):
            kept.append(e.lam)
    return kept


def _half_coefficients(corr, radii):
    """(zeta_half, coef): one representative per +-pair plus zero, with
    coef = S psi e^{-i<x0,zeta>} / S0.  Since S(-zeta) = S(zeta), every real
    evaluation equals 2 Re(sum over the half support) - 1."""
    radii = np.asarray(radii, dtype=np.float64)
    z = corr.zeta
    nonzero = np.any(z != 0, axis=1)
    lead = z[np.arange(len(z)), np.argmax(z != 0, axis=1)]
    keep = ~nonzero | (lead > 0)
    zh = z[keep]
    vals = corr.values[keep]
    zsq = (zh * zh).sum(axis=1)
    uniq, inverse = np.unique(zsq, return_inverse=True)
    table = ballmass.ball_kernel(
        np.outer(np.sqrt(uniq.astype(np.float64)), radii).ravel(), corr.d
    ).reshape(len(uniq), len(radii))
    phase0 = np.exp(-1j * (zh @ np.asarray(corr.x0)))
    coef = (vals * phase0)[:, None] * table[inverse] / corr.s0
    return zh, coef


def _mu_grid_half(zh, coef, n_grid, d):
    cells = n_grid**d
    idx = np.ravel_multi_index(tuple(np.mod(zh, n_grid).T), (n_grid,) * d)
    n_r = coef.shape[1]
    flat = np.empty((cells, n_r), dtype=np.complex128)
    for j in range(n_r):
        flat[:, j] = np.bincount(
            idx, weights=coef[:, j].real, minlength=cells
        ) + 1j * np.bincount(idx, weights=coef[:, j].imag, minlength=cells)
    arr = flat.reshape((n_grid,) * d + (n_r,))
    vals = np.fft.ifftn(arr, axes=tuple(range(d))) * cells
    return 2.0 * vals.real.reshape(cells, n_r) - 1.0


def _mu_points_half(zh, coef, points):
    phase = np.exp(1j * (np.asarray(points, dtype=np.float64) @ zh.T))
    return 2.0 * (phase @ coef).real - 1.0


def _mu_grid(corr, radii, n_grid):
    """Exact mass-ratio values on the uniform n_grid^d lattice, all radii at once.

    Folding each frequency mod n_grid is exact at lattice points, so the whole
    evaluation is one scatter plus an inverse FFT.
    """
    zh, coef = _half_coefficients(corr, radii)
    return _mu_grid_half(zh, coef, n_grid, corr.d)


def _mu_at_points(corr, radii, points):
    zh, coef = _half_coefficients(corr, radii)
    return _mu_points_half(zh, coef, points)


def _scan_chunk(args):
    spec, plan, filters_passed = args
    return scan(spec, plan, filters_passed)


def scan_parallel(spec, plan, filters_passed=frozenset(), jobs=1):
    """Per-eigenvalue scans are independent; split them across processes and
    reassemble in eigenvalue order, which leaves the output schedule-free."""
    if jobs <= 1 or len(plan.lambdas) < 2 * jobs:
        return scan(spec, plan, filters_passed)
    from concurrent.futures import ProcessPoolExecutor
    from dataclasses import replace

    chunks = [sorted(plan.lambdas)[i::jobs] for i in range(jobs)]
    tasks = [
        (spec, replace(plan, lambdas=tuple(chunk)), filters_passed)
        for chunk in chunks
        if chunk
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_scan_chunk, tasks))
    merged = [r for part in parts for r in part]
    merged.sort(key=lambda r: r.lam)
    return merged


def scan(spec, plan, filters_passed=frozenset()):
    """One DiscrepancyReport per eigenvalue: grid sup of |mu - 1| with argmax,
    plus the truncation error bar 2 ||g - g_L||.  Empty windows are skipped
    and logged, never silently dropped."""
    d = plan.d
    if spec.config.d != d:
        raise ValueError("plan dimension does not match the spectrum")
    x0 = spec.config.x0
    n_grid = plan.x_grid_n
    reports = []
    for lam in sorted(plan.lambdas):
        if lam <= 1:
            log.info("skipping lambda=%g: window rule needs lam > 1", lam)
            continue
        try:
            f = greens.build_truncated(lam, delta=plan.delta, x0=x0, d=d)
        except greens.EmptyWindowError as exc:
            log.info("skipping lambda=%g: %s", lam, exc)
            continue
        corr = ballmass.correlate(f)
        radii = plan.r_grid if plan.r_grid is not None else radius_grid(
            lam, plan.mode, plan.eps, plan.r_count
        )
        zh, coef = _half_coefficients(corr, radii)
        grid_vals = _mu_grid_half(zh, coef, n_grid, d)
        dev = np.abs(grid_vals - 1.0)
        flat_idx = int(np.argmax(dev))
        best = float(dev.flat[flat_idx])
        pt_idx, r_idx = divmod(flat_idx, len(radii))
        coords = np.unravel_index(pt_idx, (n_grid,) * d)
        best_x = tuple(2.0 * math.pi * c / n_grid for c in coords)
        best_r = float(radii[r_idx])

        extras = np.array([x0, tuple(c + math.pi for c in x0)])
        extra_vals = _mu_points_half(zh, coef, extras)
        extra_dev = np.abs(extra_vals - 1.0)
        for row in range(2):
            j = int(np.argmax(extra_dev[row]))
            if extra_dev[row, j] > best:
                best = float(extra_dev[row, j])
                best_x = tuple(float(c) % (2 * math.pi) for c in extras[row])
                best_r = float(radii[j])

        report_defect = greens.truncation_defect(lam, plan.delta, d)
        reports.append(
            DiscrepancyReport(
                lam=lam,
                filters_passed=frozenset(filters_passed),
                sup_dev=best,
                argmax_x=best_x,
                argmax_r=best_r,
                defect_bar=2.0 * math.sqrt(report_defect.defect),
                grid_n=n_grid,
                eps=plan.eps,
                delta=plan.delta,
            )
        )
    return reports


def proximity_count_audit(X, zeta, delta, eps=0.3, spec=None):
    """(count, bound): eigenvalues of the base family below X carrying a
    collision witness for zeta, against the comparison value X^{1/2+2delta}/|zeta|.

    ``delta`` drives the collision windows and may range over (0, 1/2); the
    avoidance window of the base family has its own, tighter cap eps/6 and is
    clipped to stay valid when the two would collide.
    """
    zeta = tuple(int(c) for c in zeta)
    if all(c == 0 for c in zeta):
        raise ValueError("zeta must be nonzero")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if spec is None:
        from . import spectrum as spectrum_mod

        spec = spectrum_mod.solve_spectrum(X, spectrum_mod.ScattererConfig(d=2))
    delta_avoid = min(delta, 0.99 * eps / 6.0)
    base = [v for v in lambda0_preset(spec, eps, delta_avoid) if 1 < v <= X]
    count = sum(1 for v in base if has_collision_witness(v, zeta, delta))
    bound = X ** (0.5 + 2.0 * delta) / math.sqrt(sum(c * c for c in zeta))
    return count, bound


def strip_ratio_samples(n_samples, norm_ceiling=2000, delta=0.3, seed=20240809):
    """Sampled values of strip_count / (L lam^0.1) for random (shell, zeta) pairs.

    Nested prefixes of the stream are reproducible: doubling n_samples keeps
    the first half identical, which is what the growth check compares.
    """
    rng = np.random.default_rng(seed)
    norms = [
        n
        for n in lattice.enumerate_norms(norm_ceiling, 3).norms
        if n >= 32
    ]
    ratios = []
    while len(ratios) < n_samples:
        n = int(norms[rng.integers(len(norms))])
        box = math.isqrt(n)
        zeta = tuple(int(rng.integers(-box, box + 1)) for _ in range(3))
        if all(c == 0 for c in zeta):
            continue
        half = float(n) ** delta
        count = lattice.strip_count(n, zeta, 2.0 * half)
        ratios.append(count / (half * float(n) ** 0.1))
    return ratios


def write_report_csv(reports, fh, meta=None):
    import csv

    meta = dict(meta or {})
    fh.write("# grid supremum over the declared lattice; the continuum sup is not computable\n")
    for key in sorted(meta):
        fh.write(f"# {key}={meta[key]}\n")
    if not reports:
        fh.write("# empty report\n")
    d = len(reports[0].argmax_x) if reports else 0
    writer = csv.writer(fh, lineterminator="\n")
    header = (
        ["lambda", "filters", "sup_dev"]
        + [f"argmax_x{i+1}" for i in range(d)]
        + ["argmax_r", "defect_bar", "grid_n", "eps", "delta"]
    )
    writer.writerow(header)
    for r in reports:
        writer.writerow(
            [f"{r.lam:.12g}", ",".join(sorted(r.filters_passed)), f"{r.sup_dev:.12g}"]
            + [f"{c:.12g}" for c in r.argmax_x]
            + [
                f"{r.argmax_r:.12g}",
                f"{r.defect_bar:.12g}",
                str(r.grid_n),
                f"{r.eps:.12g}",
                f"{r.delta:.12g}",
            ]
        )


def write_report_json(reports, fh, meta=None):
    payload = {
        "meta": dict(meta or {}),
        "note": "grid supremum over the declared lattice; the continuum sup is not computable",
        "reports": [
            {
                "lambda": r.lam,
                "filters": sorted(r.filters_passed),
                "sup_dev": r.sup_dev,
                "argmax_x": list(r.argmax_x),
                "argmax_r": r.argmax_r,
                "defect_bar": r.defect_bar,
                "grid_n": r.grid_n,
                "eps": r.eps,
                "delta": r.delta,
            }
            for r in reports
        ],
    }
    json.dump(payload, fh, indent=2, sort_keys=True)
    fh.write("\n")
