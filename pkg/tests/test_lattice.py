import math
import threading
from math import isqrt

import numpy as np
import pytest

from torus_scatterer import lattice


def brute_shell(n, d):
    """Independent oracle: raw box scan."""
    r = isqrt(n)
    pts = []
    if d == 2:
        for x in range(-r, r + 1):
            for y in range(-r, r + 1):
                if x * x + y * y == n:
                    pts.append((x, y))
    else:
        for x in range(-r, r + 1):
            for y in range(-r, r + 1):
                for z in range(-r, r + 1):
                    if x * x + y * y + z * z == n:
                        pts.append((x, y, z))
    return sorted(pts)


def test_shell_origin():
    shell = lattice.enumerate_shell(0, 2)
    assert shell.points == ((0, 0),)
    assert shell.multiplicity == 1


def test_shell_five_matches_brute_force():
    shell = lattice.enumerate_shell(5, 2)
    assert shell.multiplicity == 8
    assert list(shell.points) == brute_shell(5, 2)


def test_shell_seven_3d_empty():
    assert lattice.enumerate_shell(7, 3).multiplicity == 0


@pytest.mark.parametrize("n,d", [(50, 2), (30, 3), (25, 2), (9, 3)])
def test_shell_matches_brute_force(n, d):
    assert list(lattice.enumerate_shell(n, d).points) == brute_shell(n, d)


def test_shell_lexicographic_and_symmetric():
    pts = lattice.enumerate_shell(25, 2).points
    assert list(pts) == sorted(pts)
    as_set = set(pts)
    for p in pts:
        assert (-p[0], -p[1]) in as_set
        assert (p[1], p[0]) in as_set


def test_representable_three_square_rule():
    assert not lattice.is_representable(7, 3)
    assert not lattice.is_representable(28, 3)
    assert lattice.is_representable(0, 3)


def test_representable_matches_multiplicity_2d():
    counts = lattice.representation_counts(10**4, 2)
    for n in range(10**4 + 1):
        assert lattice.is_representable(n, 2) == (counts[n] > 0)


def test_representable_matches_multiplicity_3d():
    for n in range(2001):
        assert lattice.is_representable(n, 3) == (
            lattice.enumerate_shell(n, 3).multiplicity > 0
        )


def test_enumerate_norms_examples():
    assert lattice.enumerate_norms(3, 2).norms == (0, 1, 2)
    assert lattice.enumerate_norms(3, 3).norms == (0, 1, 2, 3)
    assert lattice.enumerate_norms(0.5, 2).norms == (0,)
    assert lattice.enumerate_norms(0.5, 3).norms == (0,)


def test_four_adic_split():
    assert lattice.four_adic_split(28) == lattice.FourAdicSplit(a=1, n1=7)
    assert lattice.four_adic_split(5) == lattice.FourAdicSplit(a=0, n1=5)
    assert lattice.four_adic_split(64) == lattice.FourAdicSplit(a=3, n1=1)
    assert lattice.four_adic_split(64).value == 64
    with pytest.raises(ValueError):
        lattice.four_adic_split(0)


def test_disc_count_matches_shell_sums():
    # sum of r_2(n) over n <= X equals the number of lattice points in the disc
    limit = 10**4
    counts = lattice.representation_counts(limit, 2)
    r = isqrt(limit)
    disc = 0
    for x in range(-r, r + 1):
        disc += 2 * isqrt(limit - x * x) + 1
    assert int(counts.sum()) == disc


def test_landau_count_small():
    # brute enumeration: sums of two squares in (0, 10] are 1,2,4,5,8,9,10
    explicit = [
        n
        for n in range(1, 11)
        if any(
            x * x + y * y == n for x in range(4) for y in range(4)
        )
    ]
    assert explicit == [1, 2, 4, 5, 8, 9, 10]
    count, prediction = lattice.landau_count(10)
    assert count == len(explicit) == 7
    assert prediction > 0


def test_landau_ramanujan_constant():
    # reference digits of the two-squares density constant
    assert abs(lattice.landau_ramanujan_constant() - 0.76422365358922066) < 1e-8


def test_siegel_exponent_trend():
    # multiplicities of 4-free shells grow roughly like sqrt(n1); the exponent
    # log r_3 / log n1 drifts to 1/2 slowly, so this is a trend check with a
    # reported exception list, not a hard bound
    limit = 10**5
    counts = lattice.representation_counts(limit, 3)
    low_decade = []
    high_decade = []
    exceptions = []
    for n1 in range(1000, limit + 1):
        if n1 % 4 == 0 or n1 % 8 == 7:
            continue
        expo = math.log(counts[n1]) / math.log(n1)
        (low_decade if n1 < 10**4 else high_decade).append(expo)
        if not 0.3 <= expo <= 0.7:
            exceptions.append(n1)
    all_expos = low_decade + high_decade
    print(
        f"exponent band [0.3, 0.7] exceptions: {len(exceptions)}/{len(all_expos)}"
        f" (first few: {exceptions[:5]})"
    )
    assert 0.3 <= float(np.median(all_expos)) <= 0.7
    assert 0.2 <= min(all_expos) and max(all_expos) <= 1.0
    assert float(np.median(high_decade)) < float(np.median(low_decade))


def brute_min_gap_sq(n):
    pts = brute_shell(n, 2)
    best = None
    for i, p in enumerate(pts):
        for q in pts[i + 1 :]:
            g = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
            best = g if best is None else min(best, g)
    return best


@pytest.mark.parametrize("n,expected", [(25, 2), (2, 4), (8, 16), (50, 4)])
def test_min_gap_matches_brute_force(n, expected):
    assert brute_min_gap_sq(n) == expected
    assert lattice.close_pair_gap_sq(n) == expected
    assert lattice.close_pair_gap(n) == pytest.approx(math.sqrt(expected))


def test_min_gap_singleton_and_invalid():
    assert lattice.close_pair_gap_sq(0) is None
    with pytest.raises(ValueError):
        lattice.close_pair_gap_sq(3)


def test_close_pair_membership():
    # min gap sqrt(2) on shell 25 exceeds 25^{0.01}
    assert not lattice.has_close_pair(25, 0.49)
    assert lattice.has_close_pair(50, 0.1)  # gap 2 <= 50^{0.4}
    assert not lattice.has_close_pair(0, 0.3)  # singleton shell


def test_close_pair_census_monotone_in_eps():
    tight, total = lattice.close_pair_census(500, 0.499)
    loose, total2 = lattice.close_pair_census(500, 0.1)
    assert total == total2
    assert tight <= loose
    count10, total10 = lattice.close_pair_census(10, 0.3)
    assert total10 == 7


def test_close_pair_census_matches_single_shell_route():
    close, total = lattice.close_pair_census(300, 0.3)
    by_single = 0
    norms = lattice.enumerate_norms(300, 2).norms
    for n in norms:
        if n >= 1 and lattice.has_close_pair(n, 0.3):
            by_single += 1
    assert close == by_single
    assert total == len([n for n in norms if n >= 1])


def test_strip_count_examples():
    # vacuous bound counts the whole shell
    r9 = lattice.enumerate_shell(9, 3).multiplicity
    assert lattice.strip_count(9, (1, 0, 0), 4 * 9 + 1 + 1) == r9
    # parity: |2 xi_1 - 1| < 1 has no integer solutions
    assert lattice.strip_count(9, (1, 0, 0), 1) == 0

    # brute oracle for (6, (2,0,0), 5)
    zeta = (2, 0, 0)
    zsq = 4
    expected = 0
    for p in brute_shell(6, 3):
        ip = 2 * (p[0] * zeta[0] + p[1] * zeta[1] + p[2] * zeta[2]) - zsq
        if abs(ip) < 5:
            expected += 1
    assert expected == 12
    assert lattice.strip_count(6, zeta, 5) == expected


def test_strip_count_monotone_in_bound():
    for bound in (1, 2, 4, 8, 16, 64):
        a = lattice.strip_count(90, (1, 2, 2), bound)
        b = lattice.strip_count(90, (1, 2, 2), bound + 1)
        assert b >= a


def test_strip_count_rejects_zero_zeta():
    with pytest.raises(ValueError):
        lattice.strip_count(9, (0, 0, 0), 1)


def test_inner_product_examples():
    assert lattice.inner_product_solutions((1, 0), 0, 2) == 5
    assert lattice.inner_product_solutions((2, 2), 1, 100) == 0
    assert lattice.inner_product_solutions((1, 1), 0, 1.5) == 3
    assert lattice.inner_product_solutions_brute((1, 1), 0, 1.5) == 3


def test_inner_product_gcd_matches_brute_sample():
    for zeta in [(1, 0), (3, 4), (-2, 5), (6, -9), (7, 7), (0, -4)]:
        for l in (-7, -1, 0, 2, 12):
            for radius in (1.0, 4.5, 12.0):
                assert lattice.inner_product_solutions(
                    zeta, l, radius
                ) == lattice.inner_product_solutions_brute(zeta, l, radius)


def test_collision_sets():
    with pytest.raises(ValueError):
        lattice.in_collision_set((1, 0), (0, 0), 0.2)
    # inner product zero is excluded by the strict positivity
    assert not lattice.in_collision_set((1, 1), (2, 0), 0.2)  # <2xi-z, z> = 0
    # xi = zeta = (1,0), delta = 1/4: |<2xi-z, z>| = 1 <= 3
    assert lattice.in_collision_set((1, 0), (1, 0), 0.25)


def test_collision_set_maps_into_image_set():
    for delta in (0.1, 0.25):
        for zx in range(-8, 9):
            for zy in range(-8, 9):
                if zx == 0 and zy == 0:
                    continue
                for xx in range(-8, 9):
                    for xy in range(-8, 9):
                        if lattice.in_collision_set((xx, xy), (zx, zy), delta):
                            assert lattice.in_collision_image_set(
                                (2 * xx - zx, 2 * xy - zy), (zx, zy), delta
                            )


def test_nearest_norm():
    assert lattice.nearest_norm(2.4, 2) == 2
    assert lattice.nearest_norm(1.5, 3) == 1  # tie resolved downward
    assert lattice.nearest_norm(-5.0, 2) == 0
    assert lattice.nearest_norm(3.9, 2) == 4  # 3 is not a sum of two squares


def test_shell_cache_roundtrip(tmp_path):
    cache_file = tmp_path / "shells.csv"
    store = lattice.ShellCache()
    store.attach(cache_file)
    pts = store.get(2, 25)
    assert pts == lattice.enumerate_shell(25, 2).points
    store.get(3, 6)

    fresh = lattice.ShellCache()
    fresh.attach(cache_file)
    assert fresh._mem[(2, 25)] == pts
    assert fresh.get(3, 6) == lattice.shells.get(3, 6)


def test_shell_cache_concurrent_reads():
    store = lattice.ShellCache()
    results = []

    def worker():
        results.append(store.get(2, 325))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
    assert len(results[0]) == lattice.enumerate_shell(325, 2).multiplicity
