"""Localization diagnostics: decay fits, SULE constants, dynamical moments.

Spectral localization shows up in finite volume as eigenvectors that
decay exponentially away from a center; dynamical localization as
spatial moments of the evolved delta state staying bounded in time.
This module fits both pictures and runs the delocalized control: the
vanishing-spike ensemble has, almost surely, only finitely many nonzero
sites, so its operator is the free one plus a compact perturbation and
its moments must grow like the free case.

The moment uses the unsquared amplitude,

    M_q(t) = sum_n (1 + |n|)^q |<delta_n, exp(-itH) delta_0>|,

matching the growth target checked here; the squared variant common in
the wider literature is emitted alongside as a labeled extra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ensembles as ens_mod
from . import rng as rngmod, spectrum

EDGE_WIDTH = 10        # monitored boundary strip, see spectrum.edge_mass
EDGE_MASS_LIMIT = 1e-6
PSI_FLOOR = 1e-300     # below this, log|psi| is noise


class FitError(ValueError):
    """Not enough usable sites for a least-squares decay fit."""


@dataclass(frozen=True)
class DecayFit:
    """Exponential decay fit log|psi(x)| ~ -alpha |x - center| + const."""

    center: int
    alpha: float
    n_points: int
    residual_rms: float
    fit_lo: int
    fit_hi: int


def peak_site(psi: np.ndarray, sites: np.ndarray) -> int:
    """Site of max |psi|; ties break toward smaller |site|, then smaller site."""
    amax = np.max(np.abs(psi))
    cands = sites[np.abs(psi) == amax]
    order = np.lexsort((cands, np.abs(cands)))
    return int(cands[order[0]])


def decay_fit(psi: np.ndarray, window: tuple[int, int], *,
              center_exclusion: int = 2, edge_exclusion: int = 10,
              noise_floor: float = 1e-14) -> DecayFit:
    """Least-squares decay rate of a unit vector over its window.

    Excludes the 5 sites nearest the peak (|x - center| <= 2), the 10
    sites nearest each boundary, and sites below ``noise_floor``:
    computed eigenvector entries under ~1e-14 are solver roundoff, not
    signal, and would flatten every strongly localized fit toward the
    noise level.  alpha > 0 means decay.
    """
    a, b = int(window[0]), int(window[1])
    psi = np.asarray(psi, dtype=float)
    if len(psi) != b - a + 1:
        raise ValueError("psi must cover the window")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
        raise ValueError("psi must be normalized")
    sites = np.arange(a, b + 1)
    center = peak_site(psi, sites)
    keep = ((np.abs(sites - center) > center_exclusion)
            & (sites - a >= edge_exclusion) & (b - sites >= edge_exclusion)
            & (np.abs(psi) >= max(PSI_FLOOR, noise_floor)))
    if np.count_nonzero(keep) < 10:
        raise FitError(f"only {np.count_nonzero(keep)} usable sites in window [{a}, {b}]")
    dist = np.abs(sites[keep] - center).astype(float)
    logs = np.log(np.abs(psi[keep]))
    slope, intercept = np.polyfit(dist, logs, 1)
    resid = logs - (slope * dist + intercept)
    return DecayFit(center, float(-slope), int(np.count_nonzero(keep)),
                    float(np.sqrt(np.mean(resid**2))), a, b)


@dataclass(frozen=True)
class SuleFit:
    """Global decay rate plus the per-eigenvector prefactor constants.

    For each eigenvector, ``c_required`` is the smallest C >= 0 with
    |psi(x)| <= C exp(C ln^2(1 + |center|)) exp(-alpha_global |x - center|)
    over the fit region; ``max_c`` is the worst case over the basis.
    """

    alpha_global: float
    alphas: np.ndarray
    centers: np.ndarray
    c_required: np.ndarray
    max_c: float
    no_sule: bool


def _solve_prefactor(g: float, l2: float) -> float:
    """Smallest C > 0 with log C + C*l2 = g (monotone, so bisection)."""
    if l2 == 0.0:
        return float(np.exp(g))
    lo, hi = 1e-300, max(1.0, g / l2) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-12 * hi:
            break
        if np.log(mid) + mid * l2 < g:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sule_fit(spec: spectrum.SpectralData, window: tuple[int, int], *,
             quantile: float = 0.10, edge_exclusion: int = 10,
             alpha_floor: float = 0.01, noise_floor: float = 1e-14) -> SuleFit:
    """Fit the semi-uniform localization bound over a full eigenbasis.

    alpha_global is a low quantile (default 10th percentile) of the
    per-eigenvector decay rates; when it falls below ``alpha_floor`` the
    basis is flagged as not semi-uniformly localized and the prefactors
    are still reported for the floor rate.
    """
    a, b = int(window[0]), int(window[1])
    m = spec.vectors.shape[1]
    alphas = np.empty(m)
    centers = np.empty(m, dtype=int)
    for j in range(m):
        fit = decay_fit(spec.vectors[:, j], (a, b), edge_exclusion=edge_exclusion,
                        noise_floor=noise_floor)
        alphas[j] = fit.alpha
        centers[j] = fit.center
    alpha_global = float(np.quantile(alphas, quantile))
    no_sule = alpha_global <= alpha_floor
    alpha_used = max(alpha_global, alpha_floor)
    sites = np.arange(a, b + 1)
    interior = (sites - a >= edge_exclusion) & (b - sites >= edge_exclusion)
    c_req = np.empty(m)
    for j in range(m):
        absPsi = np.abs(spec.vectors[interior, j])
        pts = absPsi >= max(PSI_FLOOR, noise_floor)
        g = np.log(absPsi[pts]) + alpha_used * np.abs(sites[interior][pts] - centers[j])
        l2 = float(np.log1p(abs(int(centers[j]))) ** 2)
        c_req[j] = _solve_prefactor(float(np.max(g)), l2)
    return SuleFit(alpha_global, alphas, centers, c_req, float(np.max(c_req)), no_sule)


@dataclass(frozen=True)
class MomentTrace:
    """M_q over a time grid with edge-contamination flags.

    M_q(0) = 1 exactly; the constructor tolerance allows the weighted
    roundoff of (1+|n|)^q sums over large windows.
    """

    q: float
    t_grid: np.ndarray
    m_q: np.ndarray
    m_q_squared: np.ndarray
    contaminated: np.ndarray

    def __post_init__(self):
        if self.t_grid[0] == 0.0 and abs(self.m_q[0] - 1.0) > 1e-6:
            raise ValueError("M_q(0) must be 1")

    def sup_uncontaminated(self) -> float:
        good = ~self.contaminated
        if not np.any(good):
            return float("nan")
        return float(np.max(self.m_q[good]))

    def growth_ratio(self) -> float:
        """Last uncontaminated value over the initial value (which is 1)."""
        good = np.flatnonzero(~self.contaminated)
        return float(self.m_q[good[-1]] / self.m_q[good[0]])

    def flat_tail(self, factor: float = 2.0) -> bool:
        """Max/min of M_q over the uncontaminated second half stays below factor."""
        good = np.flatnonzero(~self.contaminated)
        vals = self.m_q[good[len(good) // 2:]]
        return bool(np.max(vals) <= factor * np.min(vals))


def dynamical_moment(op: spectrum.TruncatedOperator, q: float, t_grid,
                     rng: np.random.Generator | None = None,
                     spec: spectrum.SpectralData | None = None) -> MomentTrace:
    """M_q(t) over the grid, from the full eigendecomposition.

    Times with more than EDGE_MASS_LIMIT probability within EDGE_WIDTH
    sites of a window edge are flagged reflection-contaminated; the
    truncation, not the model, owns that mass.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    amps = spectrum.evolve_amplitudes(op, t_grid, rng, spec)
    weights = (1.0 + np.abs(op.sites).astype(float)) ** q
    absamp = np.abs(amps)
    m_q = weights @ absamp
    m_sq = weights @ (absamp * absamp)
    contaminated = spectrum.edge_mass(amps, EDGE_WIDTH) > EDGE_MASS_LIMIT
    return MomentTrace(float(q), t_grid, m_q, m_sq, contaminated)


@dataclass(frozen=True)
class ControlResult:
    """Moment trace of a sampled ensemble against the free-operator run."""

    trace: MomentTrace
    free_trace: MomentTrace
    ratio: float
    free_ratio: float
    verdict: str


def delocalization_control(N: int, q: float, t_grid, seed: int,
                           ens: ens_mod.Ensemble | None = None, *,
                           localized_sup: float = 100.0,
                           tag: str = "dynamics") -> ControlResult:
    """Run the moment trace on [-N, N] and compare with the free operator.

    Default ensemble is the vanishing-spike family (almost surely a
    compact perturbation of the free operator).  Verdict "delocalized"
    when the growth ratio is within a factor 10 of the free run;
    "localized" when the trace stays below ``localized_sup`` with a flat
    tail; otherwise "indeterminate".
    """
    if ens is None:
        ens = ens_mod.vanishing_spike_ensemble(gamma=2.0, c0=1.5, k=4.0,
                                               epsilon_var=0.01)
    sites = np.arange(-N, N + 1)
    blk, off = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(ens, sites, seed, tag, blk)[off]
    op = spectrum.TruncatedOperator(-N, N, pots)
    rng = rngmod.substream(seed, tag + "-eig")
    trace = dynamical_moment(op, q, t_grid, rng)
    free_op = spectrum.TruncatedOperator(-N, N, np.zeros(2 * N + 1))
    free_trace = dynamical_moment(free_op, q, t_grid,
                                  rngmod.substream(seed, tag + "-eig-free"))
    ratio = trace.growth_ratio()
    free_ratio = free_trace.growth_ratio()
    if free_ratio / 10.0 <= ratio <= free_ratio * 10.0:
        verdict = "delocalized"
    elif trace.sup_uncontaminated() <= localized_sup and trace.flat_tail():
        verdict = "localized"
    else:
        verdict = "indeterminate"
    return ControlResult(trace, free_trace, ratio, free_ratio, verdict)
