import numpy as np
import pytest

from nsanderson import ensembles, growth, rng as rngmod, spectrum
from nsanderson.deviations import (BridgeCheck, GridTooCoarseError,
                                   LinearLReference, exceedance, measure_trend,
                                   scan_deviation_set,
                                   singular_subdeviation_check, wilson_interval)
from nsanderson.ensembles import constant_ensemble, two_point


def flat_reference(energies, value):
    e = np.asarray(energies, dtype=float)
    return LinearLReference(e, np.full(len(e), float(value)), np.zeros(len(e)))


def test_wilson_interval_contains_p_hat():
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi
    assert wilson_interval(0, 50)[0] == 0.0
    assert wilson_interval(50, 50)[1] == 1.0
    with pytest.raises(ValueError):
        wilson_interval(1, 0)


def test_exceedance_requires_reference(two_point_03):
    with pytest.raises(ValueError, match="reference L missing"):
        exceedance(two_point_03, [4, 8], 0.0, 0.1, 64, 1, "norm", {4: 1.0})


def test_exceedance_zero_for_huge_epsilon(two_point_03):
    # eps above the per-step log-norm bound makes deviations impossible
    L = {n: 0.6 * n for n in (4, 8, 16)}
    eps = np.log(2.0 + 0.5 + 3.0) + 1.0
    curve = exceedance(two_point_03, [4, 8, 16], 0.0, eps, 300, 3, "norm", L)
    assert np.all(curve.counts == 0)
    assert curve.delta_hat is None  # no positive counts to fit


def test_exceedance_n1_exact_enumeration():
    # unequal weights: P(|log sigma_v - L_1| > eps) enumerable by hand
    d = two_point(0.0, 3.0, p0=0.25)
    ens = constant_ensemble(d)
    sigma = lambda v, E: 0.5 * (abs(E - v) + np.sqrt((E - v) ** 2 + 4.0))
    E = 0.0
    vals = np.log([sigma(0.0, E), sigma(3.0, E)])
    L1 = 0.25 * vals[0] + 0.75 * vals[1]
    dev = np.abs(vals - L1)  # deviations 0.75*gap and 0.25*gap
    eps = float(np.sort(dev)[0] + 0.4 * np.diff(np.sort(dev)))
    exact = 0.25  # only the rarer atom deviates beyond eps
    curve = exceedance(ens, [1], E, eps, 2000, 7, "norm", {1: L1})
    assert curve.wilson_lo[0] <= exact <= curve.wilson_hi[0]


def test_exceedance_statistics_ordering(two_point_03):
    # entry <= image(e1) <= norm pointwise, so with a shared reference the
    # sub-deviation side can only grow from norm to entry
    ns = [30, 60]
    table = growth.estimate_growth(two_point_03, [(1, n) for n in ns], [0.0],
                                   3000, 9, tag="ord-ref")
    L = {n: float(table.mean[i, 0]) for i, n in enumerate(ns)}
    eps = 0.08 * L[60] / 60
    p = {}
    for stat in ("norm", "image", "entry"):
        p[stat] = exceedance(two_point_03, ns, 0.0, eps, 600, 11, stat, L,
                             tag=f"ord-{stat}").p_hat
    assert np.all(p["norm"] <= p["image"] + 1e-12)
    assert np.all(p["image"] <= p["entry"] + 1e-12)


def test_exceedance_self_consistent_across_runs(two_point_03):
    # independent runs must produce overlapping 95% Wilson intervals
    ns = [25, 50]
    table = growth.estimate_growth(two_point_03, [(1, n) for n in ns], [0.0],
                                   4000, 31, tag="sc-ref")
    L = {n: float(table.mean[i, 0]) for i, n in enumerate(ns)}
    eps = 0.1 * L[50] / 50
    a = exceedance(two_point_03, ns, 0.0, eps, 700, 33, "norm", L, tag="sc-a")
    b = exceedance(two_point_03, ns, 0.0, eps, 700, 34, "norm", L, tag="sc-b")
    for i in range(len(ns)):
        assert a.wilson_lo[i] <= b.wilson_hi[i]
        assert b.wilson_lo[i] <= a.wilson_hi[i]


def test_negative_decay_slope(two_point_03):
    ns = [40, 80, 160, 240]
    table = growth.estimate_growth(two_point_03, [(1, n) for n in ns], [0.0],
                                   8000, 13, tag="slope-ref")
    L = {n: float(table.mean[i, 0]) for i, n in enumerate(ns)}
    eps = 0.1 * L[240] / 240
    curve = exceedance(two_point_03, ns, 0.0, eps, 800, 15, "norm", L,
                       tag="slope")
    assert curve.slope is not None and curve.slope < 0
    assert curve.monotone_ok


# --- deviation-set scans ------------------------------------------------------

def test_scan_single_site_window():
    # length-1 window: B- = {E : |v - E| <= exp(L - eps)} is one interval
    v, L, eps = 1.0, 0.8, 0.3
    energies = np.linspace(-1.0, 3.0, 401)
    scan = scan_deviation_set(np.array([v]), (5, 5), eps, energies,
                              flat_reference(energies, L))
    assert scan.interval_count() == 1
    iv = scan.intervals[0]
    half = np.exp(L - eps)
    assert iv.lo == pytest.approx(v - half, abs=1e-8)
    assert iv.hi == pytest.approx(v + half, abs=1e-8)
    assert iv.eigenvalue == pytest.approx(v, abs=1e-10)
    assert scan.structure_ok


def test_scan_empty_for_huge_epsilon(two_point_03):
    rng = rngmod.substream(1, "scan")
    v = two_point_03.sample_sites(range(21), rng)
    energies = np.linspace(-0.5, 0.5, 201)
    # enormous margin: even the bisected root neighborhoods shrink to
    # nothing at the refinement tolerance
    scan = scan_deviation_set(v, (0, 20), 50.0, energies,
                              flat_reference(energies, 10.0))
    assert scan.total_length <= 1e-8 * scan.interval_count()


def test_scan_structure_on_randomized_instances(two_point_03):
    energies = np.linspace(-0.5, 0.5, 9)
    n = 40
    window = (n + 1, 3 * n + 1)
    table = growth.estimate_growth(two_point_03, [window], energies, 1000, 3,
                                   tag="scan-ref")
    ref = LinearLReference.from_table(table, window)
    h = float(np.min(table.rate()))
    checked = 0
    t = 0
    while checked < 25 and t < 80:
        blk, off = rngmod.block_of(t)
        t += 1
        pots = ensembles.sample_window_block(
            two_point_03, np.arange(window[0], window[1] + 1), 3, "scan-i", blk)[off]
        op = spectrum.TruncatedOperator(window[0], window[1], pots)
        eigs = spectrum.eigenvalues(op)
        inside = eigs[(eigs >= -0.5) & (eigs <= 0.5)]
        gap = float(np.min(np.diff(inside))) if len(inside) > 1 else 1.0
        npts = int(np.ceil(1.0 / max(gap / 3.0, 1.0 / 60000))) + 1
        if npts > 60000:
            continue
        scan = scan_deviation_set(pots, window, 1.0 * h,
                                  np.linspace(-0.5, 0.5, max(npts, 33)), ref)
        checked += 1
        assert scan.interval_count() <= window[1] - window[0] + 1
        assert scan.structure_ok
        assert all(iv.lo <= iv.eigenvalue <= iv.hi for iv in scan.intervals)
        assert scan.total_length <= 1.0  # contained in J
    assert checked >= 20


def test_scan_grid_too_coarse_raises():
    # two sites with equal potential: eigenvalues v +- 1; a 2-point grid
    # cannot separate anything
    v = np.array([0.0, 0.0])
    energies = np.array([-2.0, 2.0])
    with pytest.raises(GridTooCoarseError):
        scan_deviation_set(v, (0, 1), 0.1, energies,
                           flat_reference(energies, 1.0))


def test_scan_super_deviation_side(two_point_03):
    rng = rngmod.substream(2, "plus")
    v = two_point_03.sample_sites(range(41), rng)
    energies = np.linspace(-0.5, 0.5, 801)
    # a reference far below the actual values puts everything in B+
    scan = scan_deviation_set(v, (0, 40), 0.01, energies,
                              flat_reference(energies, -50.0), side="+")
    assert scan.interval_count() == 1
    assert scan.total_length == pytest.approx(1.0, rel=1e-6)
    # and far above, B+ is empty
    scan = scan_deviation_set(v, (0, 40), 0.01, energies,
                              flat_reference(energies, 500.0), side="+")
    assert scan.interval_count() == 0


def test_measure_trend_zero_for_huge_epsilon(two_point_03):
    trend = measure_trend(two_point_03, [10, 15, 20], 100.0, 4, 5,
                          np.linspace(-0.5, 0.5, 9), ref_trials=100)
    assert np.all(trend.mean_lengths <= 1e-6)


def test_measure_trend_negative_slope(two_point_03):
    energies = np.linspace(-0.5, 0.5, 9)
    table = growth.estimate_growth(two_point_03, [(21, 61)], energies, 500, 5,
                                   tag="mt-h")
    h = float(np.min(table.rate()))
    trend = measure_trend(two_point_03, [20, 40, 60], 0.3 * h, 24, 5,
                          energies, ref_trials=600)
    assert trend.slope is not None and trend.slope < 0
    assert np.all(trend.mean_lengths[np.isfinite(trend.mean_lengths)] <= 1.0)


def test_singular_implies_subdeviation(two_point_03):
    # the implication is asymptotic; n = 60 is past the empirical onset
    # for this ensemble (violations persist at n <= 40)
    energies = np.linspace(-0.5, 0.5, 9)
    n = 60
    window = (n + 1, 3 * n + 1)
    table = growth.estimate_growth(two_point_03, [window], energies, 1500, 19,
                                   tag="bridge-ref")
    ref = LinearLReference.from_table(table, window)
    h = float(np.min(table.rate()))
    check = singular_subdeviation_check(two_point_03, n, h / 8.0, h, ref,
                                        trials=40, seed=19)
    assert isinstance(check, BridgeCheck)
    assert check.probes > 50
    assert check.singular > 0  # probes sit near window eigenvalues
    assert check.violations == 0
