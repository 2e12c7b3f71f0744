"""Large-deviation statistics and the structure of sub-deviation sets.

Exceedance curves estimate P{|statistic - L_n| > eps n} for the product
norm, the image of a fixed unit vector, and the top-left product entry,
against reference growth values L_n from a (much larger) growth run.
Their decay rate in n is always fitted, never assumed.

For a fixed realization, the sub-deviation set

    B-(window, eps) = { E : log|P_window(E)| <= L_ref(E) - length * eps }

is a union of intervals around the roots of the window polynomial,
i.e. around eigenvalues of the truncated operator.  ``scan_deviation_set``
builds those intervals directly: eigenvalues seed the components (the
polynomial vanishes there, so membership is automatic) and every
boundary is refined by bisection on the continuous log|P|; the energy
grid only seeds brackets and separating points.  Reference values are
Monte Carlo estimates interpolated linearly in energy, so all
thresholds here are relative to L-hat, whose standard error rides along
in the scan report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats as sstats

from . import ensembles as ens_mod
from . import parallel, rng as rngmod, spectrum
from .charpoly import (EnergyAtEigenvalueError, charpoly_logabs,
                       charpoly_logabs_grid, is_regular)
from .growth import GrowthTable, estimate_growth
from .transfer import ProductBatch

_WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(count: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z2 = _WILSON_Z**2
    phat = count / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = (_WILSON_Z / denom) * np.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials**2))
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass(frozen=True)
class ExceedanceCurve:
    """Per-n exceedance estimates with Wilson intervals and a fitted decay rate."""

    statistic: str
    epsilon: float
    ns: tuple[int, ...]
    counts: np.ndarray
    trials: int
    p_hat: np.ndarray
    wilson_lo: np.ndarray
    wilson_hi: np.ndarray
    delta_hat: float | None
    slope: float | None
    intercept: float | None
    slope_ci: tuple[float, float] | None
    fit_ns: tuple[int, ...]
    monotone_ok: bool


def _fit_decay(ns, counts, trials):
    """OLS of log p-hat against n over points with at least 5 hits."""
    keep = [i for i, c in enumerate(counts) if c >= 5]
    fit_ns = tuple(int(ns[i]) for i in keep)
    if len(keep) < 3:
        return None, None, None, None, fit_ns
    x = np.array([ns[i] for i in keep], dtype=float)
    y = np.log(np.array([counts[i] / trials for i in keep]))
    res = sstats.linregress(x, y)
    tq = sstats.t.ppf(0.975, len(keep) - 2)
    ci = (res.slope - tq * res.stderr, res.slope + tq * res.stderr)
    return -res.slope, float(res.slope), float(res.intercept), ci, fit_ns


def exceedance(ens: ens_mod.Ensemble, n_list, E: float, epsilon: float,
               trials: int, seed: int, statistic: str = "norm",
               L_reference: Mapping[int, float] | None = None,
               v0: tuple[float, float] = (1.0, 0.0), *,
               tag: str = "exceedance", threads: int = 1) -> ExceedanceCurve:
    """Exceedance curve for one statistic at a single energy.

    ``L_reference`` maps each n to the reference growth value, taken
    from a growth run with far more trials at the same energy.
    statistic is one of "norm", "image", "entry".
    """
    if statistic not in ("norm", "image", "entry"):
        raise ValueError(f"unknown statistic '{statistic}'")
    ns = tuple(int(n) for n in n_list)
    if L_reference is None:
        raise ValueError("reference growth values are required")
    missing = [n for n in ns if n not in L_reference]
    if missing:
        raise ValueError(f"reference L missing for n = {missing}")
    v0arr = np.asarray(v0, dtype=float)
    if abs(np.hypot(v0arr[0], v0arr[1]) - 1.0) > 1e-12:
        raise ValueError("v0 must be a unit vector")
    n_max = max(ns)
    blocks = parallel.split_blocks(trials, rngmod.BLOCK)
    counts = np.zeros((len(blocks), len(ns)), dtype=np.int64)

    def work(i: int):
        blk, nblk = blocks[i]
        sites = np.arange(1, n_max + 1)
        pots = ens_mod.sample_window_block(ens, sites, seed, tag, blk)[:nblk]
        batch = ProductBatch((nblk,))
        targets = {n: j for j, n in enumerate(ns)}
        for j in range(n_max):
            batch.push_site(E - pots[:, j])
            col = targets.get(j + 1)
            if col is None:
                continue
            if statistic == "norm":
                vals = batch.log_norms()
            elif statistic == "image":
                vals = batch.image_log_norms(v0arr)
            else:
                vals, _ = batch.entry_logabs()
            n = j + 1
            counts[i, col] = np.count_nonzero(
                np.abs(vals - L_reference[n]) > epsilon * n)

    parallel.run_indexed(work, len(blocks), threads)
    total = counts.sum(axis=0)
    p_hat = total / trials
    lo, hi = zip(*[wilson_interval(int(c), trials) for c in total])
    lo, hi = np.array(lo), np.array(hi)
    delta_hat, slope, intercept, ci, fit_ns = _fit_decay(ns, total, trials)
    monotone_ok = all(
        p_hat[i + 1] <= p_hat[i] or lo[i + 1] <= hi[i]
        for i in range(len(ns) - 1))
    return ExceedanceCurve(statistic, float(epsilon), ns, total, trials,
                           p_hat, lo, hi, delta_hat, slope, intercept, ci,
                           fit_ns, monotone_ok)


class GridTooCoarseError(ValueError):
    """Two window eigenvalues share one energy-grid cell; refine the grid."""


@dataclass(frozen=True)
class LinearLReference:
    """Monte Carlo growth values interpolated linearly in energy."""

    energies: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    @staticmethod
    def from_table(table: GrowthTable, window: tuple[int, int]) -> "LinearLReference":
        mean, err = table.row(tuple(window))
        return LinearLReference(table.energies, mean, err)

    def __call__(self, E) -> np.ndarray:
        return np.interp(E, self.energies, self.values)

    def stderr_at(self, E) -> np.ndarray:
        return np.interp(E, self.energies, self.stderr)


@dataclass(frozen=True)
class DeviationInterval:
    lo: float
    hi: float
    eigenvalue: float | None

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class DeviationScan:
    """Interval decomposition of one realization's deviation set in energy."""

    window: tuple[int, int]
    epsilon: float
    side: str
    intervals: tuple[DeviationInterval, ...]
    total_length: float
    merged_violations: int
    rootless_violations: int
    ref_stderr_max: float

    def interval_count(self) -> int:
        return len(self.intervals)

    @property
    def structure_ok(self) -> bool:
        """Each interval holds exactly one eigenvalue, count <= window length."""
        a, b = self.window
        return (self.merged_violations == 0 and self.rootless_violations == 0
                and len(self.intervals) <= b - a + 1)


def _bisect_crossing(f, x_neg: float, x_pos: float, tol: float = 1e-10) -> float:
    """Zero crossing of f between f(x_neg) <= 0 and f(x_pos) > 0."""
    for _ in range(200):
        if abs(x_pos - x_neg) <= tol:
            break
        mid = 0.5 * (x_neg + x_pos)
        if f(mid) <= 0.0:
            x_neg = mid
        else:
            x_pos = mid
    return 0.5 * (x_neg + x_pos)


def scan_deviation_set(potentials: np.ndarray, window: tuple[int, int],
                       epsilon: float, E_grid: np.ndarray,
                       L_ref: LinearLReference, side: str = "-") -> DeviationScan:
    """Maximal intervals of {E : log|P(E)| <= L_ref(E) - length*eps} (side "-").

    Side "+" scans the super-deviation set {log|P| >= L_ref + length*eps};
    those components are grid-seeded and carry no eigenvalue.  For side
    "-" the grid must be finer than the smallest eigenvalue gap inside
    its range.  Components holding more than one eigenvalue or none at
    all are reported as structure violations, never silently dropped.
    """
    if side not in ("-", "+"):
        raise ValueError("side must be '-' or '+'")
    a, b = int(window[0]), int(window[1])
    m = b - a + 1
    potentials = np.asarray(potentials, dtype=float)
    if len(potentials) != m:
        raise ValueError("potentials must cover the window")
    E_grid = np.asarray(E_grid, dtype=float)
    if len(E_grid) < 2 or np.any(np.diff(E_grid) <= 0):
        raise ValueError("energy grid must be increasing")
    margin = epsilon * m

    # f <= 0 exactly on the scanned set, for either side.
    if side == "-":
        def f(E: float) -> float:
            return charpoly_logabs(potentials, E) - (float(L_ref(E)) - margin)
    else:
        def f(E: float) -> float:
            return (float(L_ref(E)) + margin) - charpoly_logabs(potentials, E)

    logp, _ = charpoly_logabs_grid(potentials, E_grid)
    if side == "-":
        f_grid = logp - (L_ref(E_grid) - margin)
    else:
        f_grid = (L_ref(E_grid) + margin) - logp
    ref_err = float(np.max(L_ref.stderr_at(E_grid)))

    if side == "+":
        intervals = _grid_components(E_grid, f_grid, f)
        total = sum(iv.length for iv in intervals)
        return DeviationScan((a, b), epsilon, side, tuple(intervals), total,
                             0, 0, ref_err)

    op = spectrum.TruncatedOperator(a, b, potentials)
    eigs = spectrum.eigenvalues(op)
    inside = eigs[(eigs >= E_grid[0]) & (eigs <= E_grid[-1])]
    cells = np.searchsorted(E_grid, inside)
    if len(cells) > 1 and np.any(np.diff(cells) == 0):
        raise GridTooCoarseError("two eigenvalues in one grid cell")

    # Positive separating point between consecutive eigenvalues, if any;
    # a gap with none means the surrounding components merged.
    seps: list[float | None] = []
    for lam0, lam1 in zip(inside[:-1], inside[1:]):
        mask = (E_grid > lam0) & (E_grid < lam1)
        best, best_val = None, 0.0
        if np.any(mask):
            j = int(np.argmax(f_grid[mask]))
            best, best_val = float(E_grid[mask][j]), float(f_grid[mask][j])
        mid = 0.5 * (lam0 + lam1)
        fm = f(mid)
        if fm > best_val:
            best, best_val = mid, fm
        seps.append(best if best_val > 0.0 else None)

    intervals: list[DeviationInterval] = []
    merged = 0
    i = 0
    while i < len(inside):
        j = i
        while j < len(seps) and seps[j] is None:
            j += 1
        merged += j - i
        left = _outer_anchor(E_grid, f_grid, float(inside[i]), lower=True) \
            if i == 0 else seps[i - 1]
        right = _outer_anchor(E_grid, f_grid, float(inside[j]), lower=False) \
            if j == len(seps) else seps[j]
        lo = E_grid[0] if left is None else _bisect_crossing(f, float(inside[i]), left)
        hi = E_grid[-1] if right is None else _bisect_crossing(f, float(inside[j]), right)
        intervals.append(DeviationInterval(
            float(lo), float(hi), float(inside[i]) if i == j else None))
        i = j + 1

    rootless = _grid_components(E_grid, f_grid, f, skip=intervals)
    total = sum(iv.length for iv in intervals) + sum(iv.length for iv in rootless)
    return DeviationScan((a, b), epsilon, side,
                         tuple(intervals) + tuple(rootless), total,
                         merged, len(rootless), ref_err)


def _outer_anchor(E_grid, f_grid, lam: float, lower: bool):
    """Nearest grid point with f > 0 outside the outermost eigenvalue."""
    if lower:
        pos = E_grid[(E_grid < lam) & (f_grid > 0)]
        return float(pos[-1]) if len(pos) else None
    pos = E_grid[(E_grid > lam) & (f_grid > 0)]
    return float(pos[0]) if len(pos) else None


def _grid_components(E_grid, f_grid, f, skip=()):
    """Maximal grid runs of f <= 0, bisected at the edges.

    ``skip`` holds intervals already accounted for; grid points inside
    them are ignored.
    """
    covered = np.zeros(len(E_grid), dtype=bool)
    for iv in skip:
        covered |= (E_grid >= iv.lo) & (E_grid <= iv.hi)
    low = (f_grid <= 0.0) & ~covered
    intervals = []
    i = 0
    while i < len(E_grid):
        if not low[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(E_grid) and low[j + 1]:
            j += 1
        lo = E_grid[0] if i == 0 else _bisect_crossing(
            f, float(E_grid[i]), float(E_grid[i - 1]))
        hi = E_grid[-1] if j == len(E_grid) - 1 else _bisect_crossing(
            f, float(E_grid[j]), float(E_grid[j + 1]))
        intervals.append(DeviationInterval(float(lo), float(hi), None))
        i = j + 1
    return intervals


@dataclass(frozen=True)
class MeasureTrend:
    """Mean total deviation-set length per window size, with a fitted slope."""

    ns: tuple[int, ...]
    epsilons: tuple[float, ...]
    mean_lengths: np.ndarray
    stderrs: np.ndarray
    trials: int
    grid_errors: tuple[int, ...]
    slope: float | None
    fit_ns: tuple[int, ...]


def measure_trend(ens: ens_mod.Ensemble, n_list, epsilon: float,
                  trials: int, seed: int, energies, *, ref_trials: int = 2000,
                  grid_cap: int = 40000, threads: int = 1) -> MeasureTrend:
    """Mean total length of B- over windows [n+1, 3n+1] for each n.

    Each window gets its own common-seed reference growth run on the
    energy grid.  Realizations whose scan grid would exceed ``grid_cap``
    points (eigenvalue gap too small) count as grid errors and are
    excluded from the means, reported per n.
    """
    energies = np.asarray(energies, dtype=float)
    ns = tuple(int(n) for n in n_list)
    means, errs, gerrs = [], [], []
    for n in ns:
        window = (n + 1, 3 * n + 1)
        table = estimate_growth(ens, [window], energies, ref_trials, seed,
                                tag=f"measure-ref-{n}", threads=threads)
        ref = LinearLReference.from_table(table, window)
        span = energies[-1] - energies[0]
        lengths = []
        bad = 0
        for t in range(trials):
            blk, off = rngmod.block_of(t)
            pots = ens_mod.sample_window_block(
                ens, np.arange(n + 1, 3 * n + 2), seed, f"measure-scan-{n}", blk)[off]
            op = spectrum.TruncatedOperator(n + 1, 3 * n + 1, pots)
            eigs = spectrum.eigenvalues(op)
            inside = eigs[(eigs >= energies[0]) & (eigs <= energies[-1])]
            min_gap = np.min(np.diff(inside)) if len(inside) > 1 else span
            npts = int(np.ceil(span / max(min_gap / 3.0, span / grid_cap))) + 1
            if npts > grid_cap:
                bad += 1
                continue
            grid = np.linspace(energies[0], energies[-1], max(npts, 33))
            try:
                scan = scan_deviation_set(pots, window, epsilon, grid, ref)
            except GridTooCoarseError:
                bad += 1
                continue
            lengths.append(scan.total_length)
        gerrs.append(bad)
        if lengths:
            arr = np.array(lengths)
            means.append(float(arr.mean()))
            errs.append(float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0)
        else:
            means.append(np.nan)
            errs.append(np.nan)
    fit = [(n, mu) for n, mu in zip(ns, means) if np.isfinite(mu) and mu > 0]
    slope = None
    fit_ns = tuple(n for n, _ in fit)
    if len(fit) >= 3:
        x = np.array([p[0] for p in fit], dtype=float)
        y = np.log([p[1] for p in fit])
        slope = float(sstats.linregress(x, y).slope)
    return MeasureTrend(ns, (float(epsilon),) * len(ns), np.array(means),
                        np.array(errs), trials, tuple(gerrs), slope, fit_ns)


@dataclass(frozen=True)
class BridgeCheck:
    """Singular-implies-subdeviation cross-check at one window size."""

    n: int
    epsilon: float
    threshold: float
    probes: int
    singular: int
    violations: int


def singular_subdeviation_check(ens: ens_mod.Ensemble, n: int, epsilon: float,
                                h_hat: float, L_ref: LinearLReference,
                                trials: int, seed: int, *,
                                probes_per_realization: int = 8,
                                pad: int = 12,
                                tag: str = "bridge") -> BridgeCheck:
    """Whenever the window midpoint is singular at C = h_hat - 6 eps, the
    probe energy must lie in the sub-deviation set of the same window.

    Probe energies are eigenvalues of a larger box around the window
    (finite-volume stand-ins for generalized eigenvalues) that fall in
    the reference energy range.  A probe that hits the window spectrum
    exactly is singular with log|P| = -inf, hence never a violation.
    """
    C = h_hat - 6.0 * epsilon
    a, b = n + 1, 3 * n + 1
    m = b - a + 1
    x = 2 * n + 1
    lo_e, hi_e = float(L_ref.energies[0]), float(L_ref.energies[-1])
    tested = singular = violations = 0
    for t in range(trials):
        blk, off = rngmod.block_of(t)
        pots_big = ens_mod.sample_window_block(
            ens, np.arange(a - pad, b + pad + 1), seed, tag, blk)[off]
        pots = pots_big[pad:pad + m]
        big = spectrum.TruncatedOperator(a - pad, b + pad, pots_big)
        eigs = spectrum.eigenvalues(big)
        eigs = eigs[(eigs >= lo_e) & (eigs <= hi_e)]
        if len(eigs) > probes_per_realization:
            pick = np.linspace(0, len(eigs) - 1, probes_per_realization).astype(int)
            eigs = eigs[pick]
        for E in eigs:
            tested += 1
            try:
                regular = is_regular(x, n, float(E), pots, C)
            except EnergyAtEigenvalueError:
                singular += 1
                continue
            if regular:
                continue
            singular += 1
            logp, _ = charpoly_logabs_grid(pots, np.asarray(float(E)))
            if float(logp) - float(L_ref(E)) > -m * epsilon:
                violations += 1
    return BridgeCheck(n, epsilon, C, tested, singular, violations)
