"""Command-line entry point: spectrum solves, discrepancy scans, arithmetic audits.

Configuration comes from an optional plain-text ``key = value`` file plus
flags overriding it; the only environment variable honoured is the shell
cache path override TORUS_SCATTERER_CACHE.  Exit codes: 0 success,
2 validation error, 3 numerical failure (bracketing or pole proximity).
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import ballmass, equidist, greens, lattice, spectrum

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_MODE_DIM = {"2d": 2, "3d-all": 3, "3d-filtered": 3}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    d: int = 2
    phi: float = 0.0
    x0: tuple = ()
    x: float = 500.0
    eps: float = 0.3
    delta: float = 0.04
    eta: float = 0.2
    mode: str = "2d"
    grid: int = 0
    rgrid: int = 16
    seed: int = 20240809
    jobs: int = 1
    cache: str | None = None
    out: str | None = None
    fmt: str = "csv"
    range_xi: int = 30

    def validate_common(self):
        if self.d not in (2, 3):
            raise ConfigError("--d must be 2 or 3")
        if not -math.pi < self.phi < math.pi:
            raise ConfigError("--phi must lie in the open interval (-pi, pi)")
        if self.x <= 0:
            raise ConfigError("--x must be positive")
        if self.x0 and len(self.x0) != self.d:
            raise ConfigError("--x0 must match the dimension")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")

    def validate_scan(self):
        self.validate_common()
        if self.mode not in _MODE_DIM:
            raise ConfigError("--mode must be one of 2d, 3d-all, 3d-filtered")
        if _MODE_DIM[self.mode] != self.d:
            raise ConfigError(f"mode {self.mode} requires --d {_MODE_DIM[self.mode]}")
        cap = equidist.delta_bound(self.mode, self.eps)
        if not 0 < self.delta < cap:
            raise ConfigError(
                f"mode {self.mode} requires 0 < delta < {cap:.6g} (eps={self.eps})"
            )

    def scatterer(self):
        x0 = self.x0 if self.x0 else (0.0,) * self.d
        return spectrum.ScattererConfig(d=self.d, phi=self.phi, x0=x0)


def _parse_x0(text):
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse --x0 value {text!r}") from exc


def load_config_file(path):
    """Plain `key = value` lines; '#' starts a comment."""
    values = {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"malformed config line: {raw.strip()!r}")
            key, val = (tok.strip() for tok in line.split("=", 1))
            values[key] = val
    return values


_FIELD_PARSERS = {
    "d": int,
    "phi": float,
    "x0": _parse_x0,
    "x": float,
    "eps": float,
    "delta": float,
    "eta": float,
    "mode": str,
    "grid": int,
    "rgrid": int,
    "seed": int,
    "jobs": int,
    "cache": str,
    "out": str,
    "format": str,
    "range-xi": int,
}
_FIELD_DEST = {"format": "fmt", "range-xi": "range_xi"}


def build_config(args):
    cfg = RunConfig()
    file_vals = load_config_file(args.config) if args.config else {}
    for key, raw in file_vals.items():
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, _FIELD_DEST.get(key, key), _FIELD_PARSERS[key](raw))
    for key in _FIELD_PARSERS:
        dest = _FIELD_DEST.get(key, key)
        flag_val = getattr(args, dest, None)
        if flag_val is not None:
            setattr(cfg, dest, flag_val)
    cache = cfg.cache or os.environ.get("TORUS_SCATTERER_CACHE")
    if cache:
        cfg.cache = cache
        lattice.shells.attach(cache)
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torus-scatterer",
        description="Point-scatterer spectra on flat tori and small-scale mass scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--d", type=int, dest="d")
        p.add_argument("--phi", type=float, dest="phi")
        p.add_argument("--x0", type=_parse_x0, dest="x0")
        p.add_argument("--x", type=float, dest="x")
        p.add_argument("--eps", type=float, dest="eps")
        p.add_argument("--delta", type=float, dest="delta")
        p.add_argument("--eta", type=float, dest="eta")
        p.add_argument("--mode", choices=sorted(_MODE_DIM), dest="mode")
        p.add_argument("--grid", type=int, dest="grid")
        p.add_argument("--rgrid", type=int, dest="rgrid")
        p.add_argument("--seed", type=int, dest="seed")
        p.add_argument("--jobs", type=int, dest="jobs")
        p.add_argument("--cache", dest="cache")
        p.add_argument("--out", dest="out")
        p.add_argument("--format", choices=["csv", "json"], dest="fmt")
        p.add_argument("--range-xi", type=int, dest="range_xi")

    add_common(sub.add_parser("spectrum", help="solve the perturbed spectrum"))
    add_common(sub.add_parser("scan", help="discrepancy scan with filters"))
    add_common(sub.add_parser("audit", help="exhaustive arithmetic audits"))
    return parser


def _emit(text, cfg):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_spectrum(cfg):
    cfg.validate_common()
    spec = spectrum.solve_spectrum(cfg.x, cfg.scatterer())
    buf = io.StringIO()
    spec.write_csv(buf)
    _emit(buf.getvalue(), cfg)
    return EXIT_OK


def _mode_filters(spec, cfg):
    if cfg.mode == "2d":
        gap = set(equidist.gap_filter_2d(spec, cfg.eta))
        avoid = set(equidist.close_pair_avoid_filter(spec, cfg.eps, cfg.delta))
        return sorted(gap & avoid), {equidist.FILTER_GAP, equidist.FILTER_BR_AVOID}
    if cfg.mode == "3d-filtered":
        return sorted(equidist.lambda_prime_3d(spec)), {equidist.FILTER_LAMBDA_PRIME}
    return sorted(e.lam for e in spec.entries), set()


def cmd_scan(cfg):
    cfg.validate_scan()
    spec = spectrum.solve_spectrum(cfg.x, cfg.scatterer())
    lams, names = _mode_filters(spec, cfg)
    lams = [v for v in lams if v > 1]
    if not lams:
        sys.stderr.write("warning: no eigenvalues passed the filters\n")
    plan = equidist.ScanPlan(
        mode=cfg.mode,
        eps=cfg.eps,
        delta=cfg.delta,
        x_grid_n=cfg.grid,
        r_count=cfg.rgrid,
        lambdas=lams,
    )
    reports = equidist.scan_parallel(spec, plan, filters_passed=names, jobs=cfg.jobs)
    meta = {
        "mode": cfg.mode,
        "x": f"{cfg.x:g}",
        "phi": f"{cfg.phi:g}",
        "eta": f"{cfg.eta:g}",
        "seed": cfg.seed,
        "grid_n": plan.x_grid_n,
        "r_count": cfg.rgrid,
    }
    buf = io.StringIO()
    if cfg.fmt == "json":
        equidist.write_report_json(reports, buf, meta)
    else:
        equidist.write_report_csv(reports, buf, meta)
    _emit(buf.getvalue(), cfg)
    return EXIT_OK


def _audit_rows(cfg):
    rows = []
    r_xi = cfg.range_xi
    r_zeta = max(2, r_xi // 2)

    # equal-norm pairs land in class N1; distinct-norm N0 pairs differ by >= 1
    box = np.arange(-r_xi, r_xi + 1)
    gx, gy, gz = np.meshgrid(box, box, box, indexing="ij")
    xs = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    keep = (xs * xs).sum(axis=1) <= r_xi * r_xi
    xs = xs[keep]
    nsq = (xs * xs).sum(axis=1)
    part1_bad = 0
    part2_bad = 0
    zbox = np.arange(-r_zeta, r_zeta + 1)
    zg = np.stack(np.meshgrid(zbox, zbox, zbox, indexing="ij"), axis=-1).reshape(-1, 3)
    zg = zg[(zg * zg).sum(axis=1) > 0]
    zg = zg[(zg * zg).sum(axis=1) <= r_zeta * r_zeta]
    max_split = int(nsq.max()) + 3 * 2 * r_xi * r_zeta + int((zg * zg).sum(axis=1).max())
    a_of = np.zeros(max_split + 1, dtype=np.int64)
    for n in range(1, max_split + 1):
        m, a = n, 0
        while m % 4 == 0:
            m //= 4
            a += 1
        a_of[n] = a
    for z in zg:
        zsq = int(z @ z)
        ips = 2 * (xs @ z) - zsq  # |xi|^2 - |xi - z|^2
        a_z = a_of[zsq]
        equal = ips == 0
        positive = nsq > 0
        if np.any(equal & positive & (a_of[nsq] > a_z)):
            part1_bad += 1
        n0 = positive & (a_of[nsq] > a_z)
        if np.any(n0 & (np.abs(ips) < 1)):
            part2_bad += 1
    rows.append(("equal_norm_classification", part1_bad == 0, part1_bad, 0))
    rows.append(("distinct_norm_gap", part2_bad == 0, part2_bad, 0))

    # collision set members map into the image set under xi -> 2 xi - zeta
    r_map = min(20, r_xi)
    mismatches = 0
    checked = 0
    for dlt in (0.1, 0.25):
        for zx in range(-r_map, r_map + 1):
            for zy in range(-r_map, r_map + 1):
                if zx == 0 and zy == 0 or zx * zx + zy * zy > r_map * r_map:
                    continue
                for xx in range(-r_map, r_map + 1):
                    for xy in range(-r_map, r_map + 1):
                        if xx * xx + xy * xy > r_map * r_map:
                            continue
                        if lattice.in_collision_set((xx, xy), (zx, zy), dlt):
                            checked += 1
                            if not lattice.in_collision_image_set(
                                (2 * xx - zx, 2 * xy - zy), (zx, zy), dlt
                            ):
                                mismatches += 1
    rows.append(("collision_set_image", mismatches == 0, mismatches, checked))

    # gcd parameterisation against brute force
    bad = 0
    total = 0
    for zx in range(-6, 7):
        for zy in range(-6, 7):
            if zx == 0 and zy == 0:
                continue
            for l in range(-10, 11):
                for radius in (1.0, 2.5, 7.5):
                    total += 1
                    if lattice.inner_product_solutions(
                        (zx, zy), l, radius
                    ) != lattice.inner_product_solutions_brute((zx, zy), l, radius):
                        bad += 1
    rows.append(("inner_product_dual_route", bad == 0, bad, total))

    # close-pair density shrinks with the ceiling
    lo = lattice.close_pair_census(10**3, 0.3)
    hi = lattice.close_pair_census(10**4, 0.3)
    ratio_lo = lo[0] / lo[1]
    ratio_hi = hi[0] / hi[1]
    rows.append(("close_pair_census_trend", ratio_hi < ratio_lo, ratio_hi, ratio_lo))

    # strip-count growth under sample doubling
    base = equidist.strip_ratio_samples(100, seed=cfg.seed)
    double = equidist.strip_ratio_samples(200, seed=cfg.seed)
    m1, m2 = max(base), max(double)
    rows.append(("strip_count_bound", m2 <= 1.5 * m1, m2, m1))
    return rows


def cmd_audit(cfg):
    cfg.validate_common()
    rows = _audit_rows(cfg)
    buf = io.StringIO()
    buf.write(f"# seed={cfg.seed}\n")
    buf.write("# measured values are reported, not asserted as ground truth\n")
    buf.write("audit,status,measured,reference\n")
    for name, ok, measured, reference in rows:
        buf.write(f"{name},{'pass' if ok else 'fail'},{measured:.12g},{reference:.12g}\n")
    _emit(buf.getvalue(), cfg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = build_config(args)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        return cmd_audit(cfg)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except ArithmeticError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
