import numpy as np
import pytest

from nsanderson import ensembles, rng as rngmod, spectrum
from nsanderson.localization import (ControlResult, FitError, MomentTrace,
                                     decay_fit, delocalization_control,
                                     dynamical_moment, peak_site, sule_fit)


def synthetic_exponential(center, rate, window):
    a, b = window
    sites = np.arange(a, b + 1)
    psi = np.exp(-rate * np.abs(sites - center))
    return psi / np.linalg.norm(psi)


def test_decay_fit_recovers_synthetic_rate():
    psi = synthetic_exponential(10, 0.5, (0, 200))
    fit = decay_fit(psi, (0, 200))
    assert fit.center == 10
    assert fit.alpha == pytest.approx(0.5, abs=1e-6)
    assert fit.residual_rms <= 1e-9


def test_decay_fit_requires_normalization():
    with pytest.raises(ValueError, match="normalized"):
        decay_fit(np.ones(50), (0, 49))


def test_decay_fit_needs_enough_sites():
    psi = synthetic_exponential(5, 0.5, (0, 24))
    with pytest.raises(FitError):
        decay_fit(psi, (0, 24))


def test_peak_tie_breaking():
    sites = np.arange(-3, 4)
    psi = np.zeros(7)
    psi[[1, 5]] = 0.7  # sites -2 and 2: tie breaks toward smaller |site|...
    assert peak_site(psi, sites) == -2 or peak_site(psi, sites) == 2
    # exact rule: smaller |site| first, then smaller site
    assert peak_site(psi, sites) == -2
    psi[[1, 5]] = (0.7, 0.7)
    assert peak_site(np.abs(psi), sites) == -2


def test_free_laplacian_rates_are_flat():
    op = spectrum.TruncatedOperator(0, 399, np.zeros(400))
    data = spectrum.spectral_data(op, rngmod.substream(0, "free"))
    rates = [decay_fit(data.vectors[:, j], (0, 399)).alpha
             for j in range(133, 266)]
    assert abs(np.median(rates)) <= 0.01


def test_disorder_rates_are_positive(two_point_08):
    rng = rngmod.substream(1, "dis")
    v = two_point_08.sample_sites(range(400), rng)
    op = spectrum.TruncatedOperator(0, 399, v)
    data = spectrum.spectral_data(op, rngmod.substream(2, "dis"))
    third = np.argsort(data.eigenvalues)[133:266]
    rates = [decay_fit(data.vectors[:, j], (0, 399)).alpha for j in third]
    assert np.median(rates) >= 0.1


def test_sule_fit_on_synthetic_equal_rate_basis():
    # shifted exponentials with one rate: alpha_global recovers it and the
    # prefactor constants stay O(1) regardless of the window size
    a, b = -150, 150
    alpha0 = 0.4
    centers = np.arange(-120, 121, 16)
    vectors = np.column_stack([synthetic_exponential(c, alpha0, (a, b))
                               for c in centers])
    data = spectrum.SpectralData(np.arange(len(centers), dtype=float), vectors)
    fit = sule_fit(data, (a, b))
    assert fit.alpha_global == pytest.approx(alpha0, abs=1e-6)
    assert not fit.no_sule
    assert fit.max_c <= 10.0


def test_sule_stable_under_volume_doubling(two_point_08):
    # alpha_global stays positive and the worst prefactor does not grow
    # by more than 2x when the window doubles
    results = {}
    for N in (200, 400):
        v = two_point_08.sample_sites(range(-N, N + 1),
                                      rngmod.substream(11, f"sule-{N}"))
        op = spectrum.TruncatedOperator(-N, N, v)
        data = spectrum.spectral_data(op, rngmod.substream(12, f"sule-{N}"))
        results[N] = sule_fit(data, (-N, N))
    assert results[200].alpha_global > 0
    assert results[400].alpha_global > 0
    assert results[400].max_c <= 2.0 * results[200].max_c


def test_sule_flags_free_laplacian():
    op = spectrum.TruncatedOperator(-100, 100, np.zeros(201))
    data = spectrum.spectral_data(op, rngmod.substream(3, "free"))
    fit = sule_fit(data, (-100, 100))
    assert fit.alpha_global <= 0.01
    assert fit.no_sule


def test_moment_trace_starts_at_one(two_point_03):
    rng = rngmod.substream(4, "dyn")
    v = two_point_03.sample_sites(range(-30, 31), rng)
    op = spectrum.TruncatedOperator(-30, 30, v)
    trace = dynamical_moment(op, 2.0, np.linspace(0, 5, 6),
                             rngmod.substream(5, "dyn"))
    assert trace.m_q[0] == pytest.approx(1.0, abs=1e-9)
    assert trace.m_q_squared[0] == pytest.approx(1.0, abs=1e-9)
    # M_0(t) >= sum |amp|^2 = 1
    trace0 = dynamical_moment(op, 1e-12, np.linspace(0, 5, 6),
                              rngmod.substream(5, "dyn"))
    assert np.all(trace0.m_q >= 1.0 - 1e-9)


def test_moment_trace_reproducible(two_point_03):
    rng = rngmod.substream(6, "rep")
    v = two_point_03.sample_sites(range(-25, 26), rng)
    op = spectrum.TruncatedOperator(-25, 25, v)
    t = np.linspace(0, 8, 5)
    a = dynamical_moment(op, 2.0, t, rngmod.substream(7, "rep"))
    b = dynamical_moment(op, 2.0, t, rngmod.substream(7, "rep"))
    assert np.array_equal(a.m_q, b.m_q)
    assert np.array_equal(a.m_q_squared, b.m_q_squared)


def test_free_moment_grows(two_point_03):
    N = 200
    op = spectrum.TruncatedOperator(-N, N, np.zeros(2 * N + 1))
    trace = dynamical_moment(op, 2.0, np.linspace(0, 50, 11),
                             rngmod.substream(8, "grow"))
    assert not np.any(trace.contaminated)
    assert trace.growth_ratio() > 1e3


def test_localized_moment_stays_flat(two_point_08):
    rng = rngmod.substream(9, "flat")
    N = 200
    v = two_point_08.sample_sites(range(-N, N + 1), rng)
    op = spectrum.TruncatedOperator(-N, N, v)
    trace = dynamical_moment(op, 2.0, np.linspace(0, 50, 11),
                             rngmod.substream(10, "flat"))
    assert trace.sup_uncontaminated() <= 100.0
    assert trace.flat_tail()


def test_delocalization_control_verdicts(two_point_08):
    t_grid = np.linspace(0, 40, 11)
    ctl = delocalization_control(250, 2.0, t_grid, 21)
    assert isinstance(ctl, ControlResult)
    assert ctl.verdict == "delocalized"
    assert ctl.free_ratio / 10 <= ctl.ratio <= ctl.free_ratio * 10
    loc = delocalization_control(250, 2.0, t_grid, 21, ens=two_point_08)
    assert loc.verdict == "localized"


def test_all_zero_spike_realization_matches_free():
    # a realization with every V = 0 gives literally the free operator;
    # traces agree to solver roundoff (the eigenvector seeds differ)
    ens = ensembles.constant_ensemble(ensembles.point_mass(0.0))
    ctl = delocalization_control(120, 2.0, np.linspace(0, 20, 6), 3, ens=ens)
    assert ctl.trace.m_q == pytest.approx(ctl.free_trace.m_q, rel=1e-9)
    assert ctl.verdict == "delocalized"
