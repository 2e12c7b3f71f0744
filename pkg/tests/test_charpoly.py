import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsanderson import rng as rngmod
from nsanderson.charpoly import (EnergyAtEigenvalueError, SignedLog,
                                 charpoly_logabs, charpoly_logabs_grid,
                                 charpoly_window, eigenfunction_bridge,
                                 green_entry, is_regular)
from nsanderson.transfer import product_over

from conftest import dense_operator


def solve_forward(potentials, E, psi_before, psi_start):
    """Two-term recursion psi(k+1) = (E - V(k)) psi(k) - psi(k-1)."""
    psi = [psi_before, psi_start]
    for v in potentials:
        psi.append((E - v) * psi[-1] - psi[-2])
    return np.array(psi)


def test_single_site_charpoly():
    quad = charpoly_window(4, 4, 2.0, np.array([7.0]))
    p = quad.charpoly()
    assert p.sign == np.sign(7.0 - 2.0)
    assert p.log_abs == pytest.approx(np.log(5.0), rel=1e-15)


def test_free_charpoly_period_four_pattern():
    # V = 0, E = 0: values cycle 1, 0, -1, 0 in the window length
    pattern = {0: (1, 0.0), 1: (0, -np.inf), 2: (-1, 0.0), 3: (0, -np.inf)}
    for m in range(0, 13):
        quad = charpoly_window(0, m - 1, 0.0, np.zeros(m))
        p = quad.charpoly()
        sign, logabs = pattern[m % 4]
        assert p.sign == sign
        if sign:
            assert p.log_abs == pytest.approx(logabs, abs=1e-12)
        else:
            assert p.log_abs == -np.inf


def test_empty_window_is_one():
    quad = charpoly_window(3, 2, 0.7, np.array([]))
    assert quad.charpoly().sign == 1
    assert quad.charpoly().log_abs == 0.0


def test_charpoly_matches_dense_determinant():
    rng = rngmod.substream(1, "charpoly-oracle")
    for _ in range(200):
        m = int(rng.integers(1, 13))
        v = rng.normal(size=m) * 2.0
        E = float(rng.normal())
        quad = charpoly_window(0, m - 1, E, v)
        sign, logdet = np.linalg.slogdet(dense_operator(v) - E * np.eye(m))
        p = quad.charpoly()
        assert p.sign == int(sign)
        assert p.log_abs == pytest.approx(logdet, rel=1e-9, abs=1e-9)


def test_quad_equals_transfer_entries():
    rng = rngmod.substream(2, "quad-oracle")
    for _ in range(60):
        m = int(rng.integers(1, 40))
        v = rng.choice([0.0, 3.0], size=m)
        E = float(rng.uniform(-0.5, 0.5))
        quad = charpoly_window(0, m - 1, E, v)
        recon = product_over(v, E).reconstruction()
        for ref, got in zip(recon.flat, quad.entries()):
            if ref == 0.0:
                assert got.sign == 0
            else:
                assert got.sign == int(np.sign(ref))
                assert got.log_abs == pytest.approx(np.log(abs(ref)), rel=1e-7,
                                                    abs=1e-9)


def test_quad_determinant_identity():
    rng = rngmod.substream(3, "quad-det")
    for _ in range(40):
        m = int(rng.integers(1, 300))
        v = rng.choice([0.0, 3.0], size=m)
        quad = charpoly_window(0, m - 1, float(rng.uniform(-0.5, 0.5)), v)
        assert quad.det_defect() <= 1e-7


def test_scalar_fast_path_matches_grid_path():
    rng = rngmod.substream(4, "fast")
    v = rng.normal(size=200)
    grid = np.linspace(-1.0, 1.0, 11)
    lp, _ = charpoly_logabs_grid(v, grid)
    for E, ref in zip(grid, lp):
        assert charpoly_logabs(v, float(E)) == pytest.approx(float(ref), rel=1e-10)


def test_exact_zero_gives_sign_zero():
    # window {0, 1} with V = 0: eigenvalues at +-1, so P(1) = 0
    quad = charpoly_window(0, 1, 1.0, np.zeros(2))
    assert quad.charpoly().sign == 0
    assert quad.charpoly().log_abs == -np.inf


# --- Green's function ---------------------------------------------------------

def test_green_scalar_window():
    g = green_entry(0, 0, 2.0, 0, 0, np.array([5.0]))
    assert g.value() == pytest.approx(1.0 / (5.0 - 2.0), rel=1e-12)


def test_green_matches_dense_inverse():
    rng = rngmod.substream(5, "green-oracle")
    done = 0
    while done < 100:
        m = int(rng.integers(2, 51))
        v = rng.normal(size=m) * 2.0
        E = float(rng.normal())
        H = dense_operator(v)
        if np.min(np.abs(np.linalg.eigvalsh(H) - E)) < 1e-3:
            continue
        G = np.linalg.inv(H - E * np.eye(m))
        x, y = sorted(int(i) for i in rng.integers(0, m, size=2))
        g = green_entry(0, m - 1, E, x, y, v)
        assert g.value() == pytest.approx(G[x, y], rel=1e-8)
        done += 1


def test_green_symmetric_access():
    v = np.array([1.0, -0.5, 2.0, 0.3])
    a = green_entry(0, 3, 0.1, 3, 1, v)
    b = green_entry(0, 3, 0.1, 1, 3, v)
    assert (a.sign, a.log_abs) == (b.sign, b.log_abs)


def test_green_corner_is_inverse_charpoly():
    v = np.array([1.0, -0.5, 2.0, 0.3, 0.9])
    E = 0.21
    g = green_entry(0, 4, E, 0, 4, v)
    p = charpoly_window(0, 4, E, v).charpoly()
    assert g.log_abs == pytest.approx(-p.log_abs, rel=1e-12)


def test_green_raises_at_eigenvalue():
    # V = 0 window of odd size has eigenvalue exactly 0
    with pytest.raises(EnergyAtEigenvalueError):
        green_entry(0, 2, 0.0, 0, 1, np.zeros(3))


# --- regularity ----------------------------------------------------------------

def test_regular_at_zero_threshold_when_entries_below_one():
    rng = rngmod.substream(6, "reg")
    v = rng.choice([0.0, 8.0], size=21)
    E = 0.05
    g_lo = green_entry(0, 20, E, 10, 0, v)
    g_hi = green_entry(0, 20, E, 10, 20, v)
    expected = g_lo.log_abs <= 0.0 and g_hi.log_abs <= 0.0
    assert is_regular(10, 10, E, v, 0.0) == expected


def test_free_laplacian_is_singular():
    # corner Green entries of the free window stay O(1); no exponential decay
    n = 60
    v = np.zeros(2 * n + 1)
    assert not is_regular(n, n, 1e-7, v, 0.05)


def test_strong_disorder_mostly_regular(two_point_08):
    from nsanderson import ensembles, growth
    table = growth.estimate_growth(two_point_08, [(1, 200)], [0.0], 2000, 31)
    h = table.mean[0, 0] / 200.0
    n = 50
    regular = 0
    trials = 60
    for t in range(trials):
        blk, off = rngmod.block_of(t)
        pots = ensembles.sample_window_block(
            two_point_08, np.arange(-n, n + 1), 77, "reg", blk)[off]
        try:
            regular += is_regular(0, n, 0.0, pots, 0.5 * h)
        except EnergyAtEigenvalueError:
            pass
    assert regular >= 0.9 * trials


# --- eigenfunction bridge -------------------------------------------------------

def test_bridge_reproduces_recursion_solutions():
    rng = rngmod.substream(7, "bridge")
    for _ in range(20):
        m = int(rng.integers(5, 101))
        v = rng.normal(size=m)
        E = float(rng.uniform(-2, 2))
        psi = solve_forward(v, E, float(rng.normal()), float(rng.normal()))
        # psi[0] = psi(a-1), psi[1 + k] = psi(a + k), psi[m+1] = psi(b+1)
        for x_off in (0, m // 3, m - 1):
            got = eigenfunction_bridge(0, m - 1, x_off, E, v, psi[0], psi[m + 1])
            assert got == pytest.approx(psi[1 + x_off], rel=1e-8, abs=1e-8)


def test_bridge_zero_boundary_gives_zero():
    v = np.array([0.4, -1.0, 0.2])
    assert eigenfunction_bridge(0, 2, 1, 0.3, v, 0.0, 0.0) == 0.0


def test_bridge_symmetric_configuration():
    v = np.array([1.0, 2.0, 1.0])
    E = 0.37
    left = eigenfunction_bridge(0, 2, 0, E, v, 0.8, 0.8)
    right = eigenfunction_bridge(0, 2, 2, E, v, 0.8, 0.8)
    assert left == pytest.approx(right, rel=1e-12)


def test_signed_log_value_round_trip():
    x = SignedLog(-1, np.log(3.5))
    assert x.value() == pytest.approx(-3.5, rel=1e-15)
    assert (x * x).value() == pytest.approx(12.25, rel=1e-15)
    zero = SignedLog(0, -np.inf)
    assert zero.value() == 0.0
    assert (x * zero).sign == 0
