"""Characteristic polynomials, Green's functions, and the regularity test.

Finite-window determinants det(H_[a,b] - E) grow like exp(rate * length)
and overflow doubles near length 350 for typical disorder, so every
polynomial value is carried as (sign, log|value|).  The three-term
recursion

    Q_[a,m] = (E - V(m)) Q_[a,m-1] - Q_[a,m-2],
    Q_[a,a-1] = 1,  Q_[a,a-2] = 0,

computes Q = det(E - H); the four windowed values assemble the exact
entries of the transfer product over [a, b],

    T_[a,b] = [[ Q_[a,b],   -Q_[a+1,b]   ],
               [ Q_[a,b-1], -Q_[a+1,b-1] ]],

whose magnitudes are the four |det(H - E)| polynomials.  Signs of
Green's function entries follow from this identity:

    G_[a,b](x, y) = -Q_[a,x-1] Q_[y+1,b] / Q_[a,b]   for x <= y,

which reproduces (H_[a,b] - E)^{-1} exactly, entry signs included.

Additions in the recursion factor out the dominant exponent (signed
log-sum-exp); exact zeros are (sign 0, -inf).  All routines broadcast
over an energy grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NEG_INF = float("-inf")


class EnergyAtEigenvalueError(ZeroDivisionError):
    """E is an eigenvalue of the truncated window; Green ratio undefined."""


@dataclass(frozen=True)
class SignedLog:
    """A real number x stored as (sign(x), log|x|); zero is (0, -inf)."""

    sign: int
    log_abs: float

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * float(np.exp(self.log_abs))

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return SignedLog(0, NEG_INF)
        return SignedLog(self.sign * other.sign, self.log_abs + other.log_abs)


def _signed_recursion(potentials: np.ndarray, E: np.ndarray):
    """Run the Q recursion over the sites; E may be any array shape.

    Returns (log|Q_cur|, sign_cur, log|Q_prev|, sign_prev) where "cur"
    is the full window and "prev" drops the last site.
    """
    E = np.asarray(E, dtype=float)
    lp_cur = np.zeros(E.shape)
    s_cur = np.ones(E.shape)
    lp_prev = np.full(E.shape, NEG_INF)
    s_prev = np.zeros(E.shape)
    for v in potentials:
        a = E - v
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(a))
        t1 = la + lp_cur
        s1 = np.sign(a) * s_cur
        t2 = lp_prev
        s2 = -s_prev
        m = np.maximum(t1, t2)
        finite = m != NEG_INF
        msafe = np.where(finite, m, 0.0)
        e1 = np.where(np.isneginf(t1), 0.0, np.exp(t1 - msafe))
        e2 = np.where(np.isneginf(t2), 0.0, np.exp(t2 - msafe))
        r = s1 * e1 + s2 * e2
        with np.errstate(divide="ignore"):
            lp_new = np.where(finite & (r != 0.0), msafe + np.log(np.abs(r)), NEG_INF)
        s_new = np.where(finite, np.sign(r), 0.0)
        lp_prev, s_prev = lp_cur, s_cur
        lp_cur, s_cur = lp_new, s_new
    return lp_cur, s_cur, lp_prev, s_prev


def _q_signed(potentials: np.ndarray, E: float) -> SignedLog:
    """Q = det(E - H) over the given window values, as a SignedLog."""
    lp, s, _, _ = _signed_recursion(np.asarray(potentials, dtype=float), np.asarray(E))
    return SignedLog(int(s), float(lp))


def charpoly_logabs_grid(potentials: np.ndarray, E_grid: np.ndarray):
    """(log|P_[a,b]|, sign of the transfer (1,1) entry) over an energy grid."""
    lp, s, _, _ = _signed_recursion(np.asarray(potentials, dtype=float),
                                    np.asarray(E_grid, dtype=float))
    return lp, s


def charpoly_logabs(potentials, E: float) -> float:
    """log|P_[a,b]| at one energy, on plain floats for tight inner loops.

    Same recursion as the signed-log path, renormalized only when the
    pair leaves [1e-100, 1e100]; used heavily by interval bisection.
    """
    p_prev = 0.0
    p_cur = 1.0
    offset = 0.0
    for v in potentials:
        p_cur, p_prev = (E - v) * p_cur - p_prev, p_cur
        s = abs(p_cur)
        if abs(p_prev) > s:
            s = abs(p_prev)
        if s > 1e100 or (s != 0.0 and s < 1e-100):
            p_cur /= s
            p_prev /= s
            offset += np.log(s)
    if p_cur == 0.0:
        return NEG_INF
    return offset + float(np.log(abs(p_cur)))


@dataclass(frozen=True)
class ScaledQuad:
    """The four windowed polynomial values of a window [a, b], in scaled form.

    Stored with the signs of the transfer-product entries, so that
    (full, drop_left, drop_right, drop_both) literally equal
    (t11, t12, t21, t22) of the product over the window; magnitudes are
    |det(H - E)| of the windows [a,b], [a+1,b], [a,b-1], [a+1,b-1].
    """

    window: tuple[int, int]
    full: SignedLog
    drop_left: SignedLog
    drop_right: SignedLog
    drop_both: SignedLog

    def charpoly(self) -> SignedLog:
        """det(H_[a,b] - E), i.e. the full-window value with (-1)^length."""
        a, b = self.window
        flip = -1 if (b - a + 1) % 2 else 1
        return SignedLog(flip * self.full.sign, self.full.log_abs)

    def entries(self) -> tuple[SignedLog, SignedLog, SignedLog, SignedLog]:
        return self.full, self.drop_left, self.drop_right, self.drop_both

    def det_defect(self) -> float:
        """Relative defect of full*drop_both - drop_left*drop_right = 1."""
        d1 = self.full * self.drop_both
        d2 = self.drop_left * self.drop_right
        m = max(d1.log_abs, d2.log_abs)
        if m == NEG_INF:
            return 1.0
        x = d1.sign * np.exp(d1.log_abs - m)
        y = d2.sign * np.exp(d2.log_abs - m)
        with np.errstate(under="ignore"):
            one = np.exp(-m)
        return float(abs(x - y - one) / max(abs(x), abs(y), one))


def charpoly_window(a: int, b: int, E: float, potentials: np.ndarray) -> ScaledQuad:
    """Windowed polynomial quad for [a, b]; ``potentials`` holds V(a..b)."""
    if a > b + 1:
        raise ValueError(f"window [{a}, {b}] is shorter than empty")
    potentials = np.asarray(potentials, dtype=float)
    if a == b + 1:
        one = SignedLog(1, 0.0)
        zero = SignedLog(0, NEG_INF)
        return ScaledQuad((a, b), one, zero, zero, one)
    if len(potentials) != b - a + 1:
        raise ValueError("potentials must cover the window")
    lpA, sA, lpA1, sA1 = _signed_recursion(potentials, np.asarray(float(E)))
    lpB, sB, lpB1, sB1 = _signed_recursion(potentials[1:], np.asarray(float(E)))
    return ScaledQuad(
        (a, b),
        full=SignedLog(int(sA), float(lpA)),
        drop_left=SignedLog(-int(sB), float(lpB)),
        drop_right=SignedLog(int(sA1), float(lpA1)),
        drop_both=SignedLog(-int(sB1), float(lpB1)),
    )


@dataclass(frozen=True)
class GreenEntry:
    """One entry of (H_[a,b] - E)^{-1} in scaled form."""

    window: tuple[int, int]
    x: int
    y: int
    sign: int
    log_abs: float

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * float(np.exp(self.log_abs))


def green_entry(a: int, b: int, E: float, x: int, y: int,
                potentials: np.ndarray) -> GreenEntry:
    """Green's function entry G_[a,b](x, y) via the polynomial ratio.

    Symmetric in (x, y).  Raises EnergyAtEigenvalueError when E is a
    root of the full-window polynomial.
    """
    if x > y:
        x, y = y, x
    if not (a <= x <= y <= b):
        raise ValueError(f"need a <= x <= y <= b, got a={a}, x={x}, y={y}, b={b}")
    potentials = np.asarray(potentials, dtype=float)
    if len(potentials) != b - a + 1:
        raise ValueError("potentials must cover the window")
    q_left = _q_signed(potentials[: x - a], E)
    q_right = _q_signed(potentials[y - a + 1:], E)
    q_full = _q_signed(potentials, E)
    if q_full.sign == 0:
        raise EnergyAtEigenvalueError(f"E = {E} is an eigenvalue of window [{a}, {b}]")
    sign = -q_left.sign * q_right.sign * q_full.sign
    log_abs = q_left.log_abs + q_right.log_abs - q_full.log_abs if sign != 0 else NEG_INF
    return GreenEntry((a, b), x, y, int(sign), float(log_abs))


def is_regular(x: int, n: int, E: float, potentials: np.ndarray, C: float) -> bool:
    """True when both corner Green entries of [x-n, x+n] decay below exp(-C n).

    ``potentials`` holds V over [x-n, x+n].  Comparisons happen in log
    form; raises EnergyAtEigenvalueError when E hits the window spectrum.
    """
    a, b = x - n, x + n
    g_lo = green_entry(a, b, E, x, a, potentials)
    g_hi = green_entry(a, b, E, x, b, potentials)
    bound = -C * n
    return g_lo.log_abs <= bound and g_hi.log_abs <= bound


def eigenfunction_bridge(a: int, b: int, x: int, E: float, potentials: np.ndarray,
                         psi_left: float, psi_right: float) -> float:
    """Interior value -G(x,a) psi(a-1) - G(x,b) psi(b+1) of a solution of H psi = E psi."""
    g_a = green_entry(a, b, E, x, a, potentials)
    g_b = green_entry(a, b, E, x, b, potentials)
    return -g_a.value() * psi_left - g_b.value() * psi_right
