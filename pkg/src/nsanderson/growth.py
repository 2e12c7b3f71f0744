"""Monte Carlo estimation of the transfer-product growth functions.

L_[a,b](E) = E[log ||T_[a,b],E||] tracks the typical exponential growth
of the cocycle over a window; L_n / n plays the role the Lyapunov
exponent plays for stationary disorder.  Estimates here use common
random numbers: each trial draws one potential realization and reuses
it for every energy on the grid (and every nested window), so energy
profiles are smooth and the equicontinuity diagnostic is not drowned in
independent sampling noise.

Reductions are pairwise sums over arrays laid out in trial order, so
means are identical for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ensembles as ens_mod
from . import parallel, rng as rngmod
from .transfer import ProductBatch


@dataclass(frozen=True)
class GrowthTable:
    """Mean log-norms over (window, energy) cells with standard errors."""

    windows: tuple[tuple[int, int], ...]
    energies: np.ndarray
    mean: np.ndarray      # (windows, energies)
    stderr: np.ndarray
    trials: int

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError("need at least two trials")
        if not np.all(np.isfinite(self.mean)):
            raise ValueError("growth means must be finite")

    def lengths(self) -> np.ndarray:
        return np.array([b - a + 1 for a, b in self.windows])

    def rate(self) -> np.ndarray:
        """L / length per (window, energy) cell."""
        return self.mean / self.lengths()[:, None]

    def row(self, window: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        i = self.windows.index(tuple(window))
        return self.mean[i], self.stderr[i]


def _window_groups(windows):
    """Group windows by left endpoint; each group is swept in one pass."""
    groups: dict[int, list[tuple[int, int]]] = {}
    for a, b in windows:
        if b < a:
            raise ValueError(f"bad window [{a}, {b}]")
        groups.setdefault(a, []).append((a, b))
    return {a: sorted(ws, key=lambda w: w[1]) for a, ws in sorted(groups.items())}


def sweep_log_norms(ens: ens_mod.Ensemble, windows, energies: np.ndarray,
                    seed: int, tag: str, block: int, nblock: int) -> np.ndarray:
    """log||T_[a,b],E|| for one trial block, shape (windows, energies, nblock).

    All windows and energies share the block's potential draws (common
    random numbers).
    """
    energies = np.asarray(energies, dtype=float)
    windows = [tuple(w) for w in windows]
    out = np.empty((len(windows), len(energies), nblock))
    for a, group in _window_groups(windows).items():
        b_max = group[-1][1]
        sites = np.arange(a, b_max + 1)
        pots = ens_mod.sample_window_block(ens, sites, seed, tag, block)[:nblock]
        batch = ProductBatch((len(energies), nblock))
        ends = {b: windows.index((a, b)) for _, b in group}
        for j, site in enumerate(sites):
            batch.push_site(energies[:, None] - pots[None, :, j])
            hit = ends.get(int(site))
            if hit is not None:
                out[hit] = batch.log_norms()
    return out


def estimate_growth(ens: ens_mod.Ensemble, windows, energies, trials: int,
                    seed: int, *, tag: str = "growth", threads: int = 1) -> GrowthTable:
    """GrowthTable over the given windows and energy grid.

    Windows are (a, b) site pairs; plain integers n mean [1, n].
    """
    windows = tuple((1, int(w)) if np.isscalar(w) else (int(w[0]), int(w[1]))
                    for w in windows)
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if trials < 2:
        raise ValueError("need at least two trials")
    blocks = parallel.split_blocks(trials, rngmod.BLOCK)
    values = np.empty((len(windows), len(energies), trials))

    def work(i: int):
        blk, nblk = blocks[i]
        lo = blk * rngmod.BLOCK
        values[:, :, lo:lo + nblk] = sweep_log_norms(
            ens, windows, energies, seed, tag, blk, nblk)

    parallel.run_indexed(work, len(blocks), threads)
    mean = np.sum(values, axis=2) / trials
    resid = values - mean[:, :, None]
    std = np.sqrt(np.sum(resid * resid, axis=2) / (trials - 1))
    return GrowthTable(windows, energies, mean, std / np.sqrt(trials), trials)


@dataclass(frozen=True)
class RateEstimate:
    """Conservative uniform lower growth rate from a GrowthTable."""

    h_hat: float
    no_growth: bool
    rates: np.ndarray          # L / length per (window, energy)
    discounted: np.ndarray     # (L - 3 stderr) / length
    windows: tuple[tuple[int, int], ...]
    energies: np.ndarray

    def max_relative_rate_change(self) -> float:
        """Largest relative change of the per-length mean rate between
        consecutive windows (windows ordered by length)."""
        order = np.argsort([b - a + 1 for a, b in self.windows])
        r = self.rates[order].mean(axis=1)
        return float(np.max(np.abs(np.diff(r)) / np.abs(r[:-1])))


def estimate_h(table: GrowthTable) -> RateEstimate:
    """h_hat = min over cells of (L - 3 stderr) / length, floored at 0.

    The three-sigma discount errs low on purpose: the lower bound
    L >= n h is what downstream thresholds lean on.  A nonpositive
    minimum is flagged as "no growth detected".
    """
    if len(table.windows) < 3:
        raise ValueError("need at least three window lengths to estimate h")
    lengths = table.lengths()[:, None]
    discounted = (table.mean - 3.0 * table.stderr) / lengths
    h_min = float(np.min(discounted))
    return RateEstimate(
        h_hat=max(h_min, 0.0),
        no_growth=h_min <= 0.0,
        rates=table.rate(),
        discounted=discounted,
        windows=table.windows,
        energies=table.energies,
    )


@dataclass(frozen=True)
class EquicontinuityModulus:
    """Largest adjacent-grid jump of L / length, per window and overall."""

    per_window: np.ndarray
    overall: float
    grid_spacing: float


def equicontinuity_modulus(table: GrowthTable) -> EquicontinuityModulus:
    """max_i |L(E_{i+1}) - L(E_i)| / length per window; sup over windows.

    Requires a uniform energy grid (and, to be meaningful, a
    common-random-number table, which estimate_growth always produces).
    """
    de = np.diff(table.energies)
    if len(de) == 0:
        return EquicontinuityModulus(np.zeros(len(table.windows)), 0.0, 0.0)
    if np.max(de) - np.min(de) > 1e-9 * np.max(np.abs(de)):
        raise ValueError("energy grid must be uniform")
    jumps = np.abs(np.diff(table.mean, axis=1))
    per_window = jumps.max(axis=1) / table.lengths()
    return EquicontinuityModulus(per_window, float(per_window.max()), float(de[0]))


@dataclass(frozen=True)
class DefectStats:
    """Per-realization additivity defect log||T_[a,b]|| + log||T_[b+1,c]|| - log||T_[a,c]||."""

    a: int
    b: int
    c: int
    energy: float
    mean: float
    stderr: float
    min: float
    max: float
    trials: int


def additivity_defect(ens: ens_mod.Ensemble, a: int, b: int, c: int, E: float,
                      trials: int, seed: int, *, tag: str = "additivity",
                      threads: int = 1) -> DefectStats:
    """Split-window defect statistics at a single energy.

    Pointwise submultiplicativity makes every defect nonnegative up to
    roundoff; the mean is the Monte Carlo window-additivity defect of
    the growth functions.
    """
    if not (a <= b < c):
        raise ValueError("need a <= b < c")
    blocks = parallel.split_blocks(trials, rngmod.BLOCK)
    values = np.empty(trials)

    def work(i: int):
        blk, nblk = blocks[i]
        sites = np.arange(a, c + 1)
        pots = ens_mod.sample_window_block(ens, sites, seed, tag, blk)[:nblk]
        split = b - a + 1
        left = ProductBatch((nblk,))
        for j in range(split):
            left.push_site(E - pots[:, j])
        right = ProductBatch((nblk,))
        for j in range(split, len(sites)):
            right.push_site(E - pots[:, j])
        whole = ProductBatch((nblk,))
        for j in range(len(sites)):
            whole.push_site(E - pots[:, j])
        lo = blk * rngmod.BLOCK
        values[lo:lo + nblk] = left.log_norms() + right.log_norms() - whole.log_norms()

    parallel.run_indexed(work, len(blocks), threads)
    mean = float(np.sum(values) / trials)
    std = float(np.sqrt(np.sum((values - mean) ** 2) / (trials - 1)))
    return DefectStats(a, b, c, E, mean, std / np.sqrt(trials),
                       float(values.min()), float(values.max()), trials)
