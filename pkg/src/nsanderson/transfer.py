"""One-step transfer matrices and overflow-safe renormalized products.

A solution of psi(n+1) + psi(n-1) + V(n) psi(n) = E psi(n) is propagated by

    [psi(k+1), psi(k)]^T = A(V(k), E) [psi(k), psi(k-1)]^T,
    A(v, E) = [[E - v, -1], [1, 0]],

so A has determinant one and the product over a window [a, b] (later
sites multiplying on the left) is an SL(2, R) cocycle.  Its norm grows
exponentially for localizing disorder, which overflows doubles near
length 350; products are therefore carried as a small "core" matrix
times exp(log_scale), with the core kept at max-abs entry in [1/2, 2].

Operator norms come from the closed-form singular values of a 2x2
matrix; no iterative estimation.  ``ProductBatch`` applies the identical
update arithmetic across whole arrays of realizations so Monte Carlo
sweeps agree with the scalar path bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Single factor entries beyond this signal a pathological potential draw.
FACTOR_LIMIT = 1e100


class FactorOverflowError(ValueError):
    """A single transfer-matrix entry exceeded the representable range."""


def transfer_matrix(v: float, E: float) -> np.ndarray:
    """The 2x2 one-step matrix [[E - v, -1], [1, 0]]."""
    if abs(E - v) > FACTOR_LIMIT:
        raise FactorOverflowError(f"|E - v| = {abs(E - v):.3g} exceeds {FACTOR_LIMIT:.0e}")
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def _sl2_log_opnorm(f: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """log of the largest singular value of core * exp(log_scale).

    ``f`` is the squared Frobenius norm of the core.  Uses det(core) =
    exp(-2 log_scale), which holds exactly for a true SL(2, R) product;
    then sigma_max = (sqrt(f + 2d) + sqrt(f - 2d)) / 2 with d = |det|.
    The result is clamped at 0: an SL(2, R) matrix has operator norm
    >= 1, so any negative value is pure roundoff.
    """
    with np.errstate(under="ignore"):
        d = np.exp(-2.0 * log_scale)
    inner = np.sqrt(f + 2.0 * d) + np.sqrt(np.maximum(f - 2.0 * d, 0.0))
    return np.maximum(log_scale + np.log(0.5 * inner), 0.0)


@dataclass(frozen=True)
class ScaledProduct:
    """A transfer product T = core * exp(log_scale) with det T = 1.

    Immutable value type: ``push`` returns a new product.  ``core`` has
    max-abs entry in [1/2, 2] (identity products start there already).
    """

    core: np.ndarray
    log_scale: float
    length: int

    @staticmethod
    def identity() -> "ScaledProduct":
        return ScaledProduct(np.eye(2), 0.0, 0)

    def push(self, factor: np.ndarray) -> "ScaledProduct":
        """Left-multiply by a one-step matrix [[a, -1], [1, 0]]."""
        a = float(factor[0, 0])
        if not (factor[0, 1] == -1.0 and factor[1, 0] == 1.0 and factor[1, 1] == 0.0):
            raise ValueError("factor is not a one-step transfer matrix")
        if abs(a) > FACTOR_LIMIT:
            raise FactorOverflowError(f"factor entry {a:.3g} exceeds {FACTOR_LIMIT:.0e}")
        c = self.core
        r11 = a * c[0, 0] - c[1, 0]
        r12 = a * c[0, 1] - c[1, 1]
        core = np.array([[r11, r12], [c[0, 0], c[0, 1]]])
        mx = np.max(np.abs(core))
        scale = mx if (mx > 2.0 or mx < 0.5) else 1.0
        return ScaledProduct(core / scale, self.log_scale + np.log(scale), self.length + 1)

    def log_norm(self) -> float:
        """log of the operator 2-norm of the reconstructed product."""
        f = float(np.sum(self.core * self.core))
        return float(_sl2_log_opnorm(np.asarray(f), np.asarray(self.log_scale)))

    def image_log_norm(self, v0: np.ndarray) -> float:
        """log |T v0| for a unit vector v0."""
        v0 = np.asarray(v0, dtype=float)
        if abs(np.hypot(v0[0], v0[1]) - 1.0) > 1e-12:
            raise ValueError("v0 must be a unit vector")
        w = self.core @ v0
        return self.log_scale + float(np.log(np.hypot(w[0], w[1])))

    def reconstruction(self) -> np.ndarray:
        """core * exp(log_scale); only safe for short products."""
        return self.core * np.exp(self.log_scale)

    def det_drift(self) -> float:
        """Relative drift of det(reconstruction) from 1.

        Only meaningful while exp(-2 log_scale) stays above the double
        cancellation floor (log_scale up to roughly 15): beyond that the
        columns of any fixed-precision representation have aligned and
        the determinant of a growing product is unobservable.  Bounded
        (elliptic) products keep it measurable at any length.
        """
        det_core = self.core[0, 0] * self.core[1, 1] - self.core[0, 1] * self.core[1, 0]
        if det_core == 0.0:
            return 1.0
        with np.errstate(over="ignore", under="ignore"):
            log_det = np.log(abs(det_core)) + 2.0 * self.log_scale
            return float(abs(np.sign(det_core) * np.exp(log_det) - 1.0))


def product_over(potentials: np.ndarray, E: float) -> ScaledProduct:
    """Product of one-step matrices over the given site values, left to right order."""
    prod = ScaledProduct.identity()
    for v in np.asarray(potentials, dtype=float):
        prod = prod.push(transfer_matrix(v, E))
    return prod


class ProductBatch:
    """Transfer products evolved in parallel over an array of states.

    ``shape`` indexes independent realizations (and, if 2-d, an energy
    axis); each state carries its own core and log scale.  The per-site
    update is the same arithmetic as ``ScaledProduct.push`` so scalar and
    batch paths produce identical floats.
    """

    def __init__(self, shape: tuple[int, ...]):
        self.c11 = np.ones(shape)
        self.c12 = np.zeros(shape)
        self.c21 = np.zeros(shape)
        self.c22 = np.ones(shape)
        self.log_scale = np.zeros(shape)
        self.length = 0

    def push_site(self, a: np.ndarray) -> None:
        """Advance every state by one site; ``a`` broadcasts E - V over the state shape."""
        a = np.asarray(a, dtype=float)
        if np.max(np.abs(a)) > FACTOR_LIMIT:
            raise FactorOverflowError("factor entry exceeds representable range")
        r11 = a * self.c11 - self.c21
        r12 = a * self.c12 - self.c22
        self.c21 = self.c11
        self.c22 = self.c12
        self.c11 = r11
        self.c12 = r12
        mx = np.maximum(np.maximum(np.abs(self.c11), np.abs(self.c12)),
                        np.maximum(np.abs(self.c21), np.abs(self.c22)))
        scale = np.where((mx > 2.0) | (mx < 0.5), mx, 1.0)
        self.c11 = self.c11 / scale
        self.c12 = self.c12 / scale
        self.c21 = self.c21 / scale
        self.c22 = self.c22 / scale
        self.log_scale = self.log_scale + np.log(scale)
        self.length += 1

    def log_norms(self) -> np.ndarray:
        f = self.c11**2 + self.c12**2 + self.c21**2 + self.c22**2
        return _sl2_log_opnorm(f, self.log_scale)

    def image_log_norms(self, v0: np.ndarray) -> np.ndarray:
        w1 = self.c11 * v0[0] + self.c12 * v0[1]
        w2 = self.c21 * v0[0] + self.c22 * v0[1]
        return self.log_scale + np.log(np.hypot(w1, w2))

    def entry_logabs(self) -> tuple[np.ndarray, np.ndarray]:
        """(log |t11|, sign t11) of the top-left product entry."""
        with np.errstate(divide="ignore"):
            return self.log_scale + np.log(np.abs(self.c11)), np.sign(self.c11)

    def det_drift(self) -> np.ndarray:
        """Relative drift of det from 1 per state; see ScaledProduct.det_drift."""
        det_core = self.c11 * self.c22 - self.c12 * self.c21
        with np.errstate(over="ignore", under="ignore", divide="ignore",
                         invalid="ignore"):
            log_det = np.log(np.abs(det_core)) + 2.0 * self.log_scale
            drift = np.abs(np.sign(det_core) * np.exp(log_det) - 1.0)
        return np.where(det_core == 0.0, 1.0, drift)
