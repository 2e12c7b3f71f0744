import numpy as np
import pytest

from nsanderson import ensembles, growth
from nsanderson.ensembles import constant_ensemble, point_mass


def test_rotation_ensemble_has_zero_growth():
    # V = E makes every factor the rotation by pi/2: ||T_n|| = 1 for all n
    ens = constant_ensemble(point_mass(0.0))
    table = growth.estimate_growth(ens, [4, 7, 8, 64], [0.0], 8, 1)
    for i, (a, b) in enumerate(table.windows):
        n = b - a + 1
        if n % 4 == 0:
            assert table.mean[i, 0] == 0.0
        assert table.mean[i, 0] <= np.log(2.0)
        assert table.stderr[i, 0] == 0.0


def test_two_point_growth_positive_with_three_sigma(two_point_03):
    table = growth.estimate_growth(two_point_03, [200], [0.0], 2000, 5)
    assert table.mean[0, 0] - 3 * table.stderr[0, 0] > 0.0


def test_stderr_scales_like_inverse_sqrt_trials(two_point_03):
    # doubling the trial count shrinks stderr by ~1/sqrt(2); the ratio is
    # itself noisy, so average it over independent repeats
    ratios = []
    for seed in range(6):
        small = growth.estimate_growth(two_point_03, [64], [0.0], 400,
                                       seed, tag=f"small{seed}")
        big = growth.estimate_growth(two_point_03, [64], [0.0], 800,
                                     seed, tag=f"big{seed}")
        ratios.append(big.stderr[0, 0] / small.stderr[0, 0])
    assert 0.6 <= np.mean(ratios) <= 0.85


def test_elliptic_and_hyperbolic_constant_oracle():
    # zero-variance ensemble: L_n / n -> 0 in the elliptic regime and to
    # log of the larger eigenvalue in the hyperbolic regime
    ens = constant_ensemble(point_mass(1.0))
    elliptic = growth.estimate_growth(ens, [512], [0.0], 4, 2)  # |E - v| = 1
    assert elliptic.rate()[0, 0] <= 0.01
    hyperbolic = growth.estimate_growth(ens, [512], [4.0], 4, 2)  # |E - v| = 3
    lam = (3.0 + np.sqrt(5.0)) / 2.0
    assert hyperbolic.rate()[0, 0] == pytest.approx(np.log(lam), abs=3e-3)


def test_h_estimate_conservative(two_point_03):
    table = growth.estimate_growth(two_point_03, [64, 128, 256],
                                   np.linspace(-0.5, 0.5, 5), 500, 7)
    est = growth.estimate_h(table)
    assert est.h_hat > 0.0
    assert not est.no_growth
    assert est.h_hat <= float(np.min(table.rate()))


def test_h_estimate_flags_no_growth():
    ens = constant_ensemble(point_mass(0.0))
    table = growth.estimate_growth(ens, [4, 8, 12], [0.0], 8, 1)
    est = growth.estimate_h(table)
    assert est.h_hat == 0.0
    assert est.no_growth


def test_h_estimate_needs_three_lengths(two_point_03):
    table = growth.estimate_growth(two_point_03, [8, 16], [0.0], 16, 1)
    with pytest.raises(ValueError, match="three window lengths"):
        growth.estimate_h(table)


def test_equicontinuity_modulus_single_energy(two_point_03):
    table = growth.estimate_growth(two_point_03, [16, 32, 64], [0.0], 16, 3)
    mod = growth.equicontinuity_modulus(table)
    assert mod.overall == 0.0


def test_equicontinuity_modulus_n1_analytic(two_point_03):
    # window length 1: L_1(E) averages log||A_{v,E}|| over the atoms, so the
    # grid jump is bounded by spacing times the max slope of the analytic L_1
    # the estimate mixes per-atom curves with empirical weights, so its
    # grid jump is bounded by spacing times the largest per-atom slope
    energies = np.linspace(-0.5, 0.5, 21)
    table = growth.estimate_growth(two_point_03, [1], energies, 300, 9)
    mod = growth.equicontinuity_modulus(table)
    fine = np.linspace(-0.5, 0.5, 4001)
    max_slope = max(
        np.max(np.abs(np.diff([float(ensembles.one_step_log_norm(np.asarray(v), E))
                               for E in fine]))) / (fine[1] - fine[0])
        for v in (0.0, 3.0))
    assert mod.overall <= mod.grid_spacing * max_slope * (1 + 1e-9)


def test_modulus_shrinks_as_length_grows(two_point_03):
    # shared draws across E: the per-length modulus must not blow up with n
    energies = np.linspace(-0.5, 0.5, 33)
    table = growth.estimate_growth(two_point_03, [64, 128, 256], energies,
                                   1500, 11)
    mod = growth.equicontinuity_modulus(table)
    by_len = dict(zip(table.lengths(), mod.per_window))
    assert by_len[256] <= 1.5 * by_len[64]


def test_additivity_defect_nonnegative_and_small(two_point_03):
    stats = growth.additivity_defect(two_point_03, 1, 150, 300, 0.0, 4000, 13)
    assert stats.min >= -1e-8
    table = growth.estimate_growth(two_point_03, [256], [0.0], 500, 13)
    h = table.rate()[0, 0]
    assert stats.mean / 300.0 <= 0.2 * h


def test_additivity_defect_rotation_bounded():
    ens = constant_ensemble(point_mass(0.0))
    stats = growth.additivity_defect(ens, 1, 8, 16, 0.0, 8, 1)
    assert stats.min >= -1e-8
    assert stats.mean <= 2 * np.log(2.0)


def test_thread_count_invariance(two_point_03):
    energies = np.linspace(-0.5, 0.5, 5)
    t1 = growth.estimate_growth(two_point_03, [32, 64], energies, 700, 17,
                                threads=1)
    t8 = growth.estimate_growth(two_point_03, [32, 64], energies, 700, 17,
                                threads=8)
    assert np.array_equal(t1.mean, t8.mean)
    assert np.array_equal(t1.stderr, t8.stderr)
