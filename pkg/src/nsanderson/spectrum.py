"""Eigenproblem and quantum dynamics of the truncated operator.

H_[a,b] is the symmetric tridiagonal matrix with the realized potentials
on the diagonal, ones off the diagonal, and Dirichlet boundary
conditions.  Eigenvalues come from Sturm-sequence bisection (the
negative-pivot count of the shifted LDL^T recurrence counts eigenvalues
below the shift), which is embarrassingly parallel over eigenvalue
indices and needs only the tridiagonal structure.  Eigenvectors come
from inverse iteration with Sturm-refined shifts; members of a
near-degenerate cluster are orthogonalized against the cluster vectors
already found.

Time evolution amplitudes <delta_n, exp(-itH) delta_0> use the full
eigendecomposition.  Truncation to a finite window is our approximation
of the whole-line operator, so dynamics callers are expected to monitor
mass near the window edges (see ``edge_mass``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import rng as rngmod

# Pivot floor for the Sturm recurrence; keeps 1/d finite at exact ties.
_TINY = 1e-300


class EigenvectorError(RuntimeError):
    """Inverse iteration failed to reach the residual target."""


@dataclass(frozen=True)
class TruncatedOperator:
    """H restricted to [a, b] with Dirichlet boundary conditions."""

    a: int
    b: int
    diagonal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diagonal", np.asarray(self.diagonal, dtype=float))
        if self.size < 1:
            raise ValueError("window must contain at least one site")
        if len(self.diagonal) != self.size:
            raise ValueError("diagonal must cover the window")

    @property
    def size(self) -> int:
        return self.b - self.a + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.diagonal)) + 2.0)

    def dense(self) -> np.ndarray:
        m = self.size
        H = np.zeros((m, m))
        np.fill_diagonal(H, self.diagonal)
        idx = np.arange(m - 1)
        H[idx, idx + 1] = 1.0
        H[idx + 1, idx] = 1.0
        return H

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = self.diagonal * vec
        out[:-1] += vec[1:]
        out[1:] += vec[:-1]
        return out


def sturm_count(diagonal: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    Counts negative pivots of the LDL^T recurrence
    d_1 = a_1 - s, d_i = (a_i - s) - 1/d_{i-1}; vectorized over shifts.
    """
    shifts = np.asarray(shifts, dtype=float)
    d = diagonal[0] - shifts
    d = np.where(d == 0.0, -_TINY, d)
    count = (d < 0).astype(np.int64)
    for a_i in diagonal[1:]:
        d = (a_i - shifts) - 1.0 / d
        d = np.where(d == 0.0, -_TINY, d)
        count += d < 0
    return count


def eigenvalues(op: TruncatedOperator, tol: float | None = None) -> np.ndarray:
    """All eigenvalues, ascending, by bisection on the Sturm count."""
    diag = op.diagonal
    m = op.size
    scale = max(1.0, float(np.max(np.abs(diag))) + 2.0)
    if tol is None:
        tol = 1e-12 * scale
    lo = np.full(m, float(np.min(diag)) - 2.0)
    hi = np.full(m, float(np.max(diag)) + 2.0)
    want = np.arange(1, m + 1)
    for _ in range(200):
        if np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        below = sturm_count(diag, mid) >= want
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return np.sort(0.5 * (lo + hi))


def count_in_interval(op: TruncatedOperator, alpha: float, beta: float) -> int:
    """Number of eigenvalues in (alpha, beta] from Sturm counts alone."""
    counts = sturm_count(op.diagonal, np.array([alpha, beta]))
    return int(counts[1] - counts[0])


def _solve_shifted(diag: np.ndarray, shift: float, rhs: np.ndarray) -> np.ndarray:
    m = len(diag)
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = diag - shift
    ab[2, :-1] = 1.0
    return solve_banded((1, 1), ab, rhs)


def eigenvector(op: TruncatedOperator, eigenvalue: float,
                rng: np.random.Generator | None = None,
                orth_against: np.ndarray | None = None,
                sweeps: int = 2) -> np.ndarray:
    """Unit eigenvector by inverse iteration from a random seed.

    Deterministic given the generator state.  ``orth_against`` holds
    previously computed vectors of a near-degenerate cluster (columns);
    iterates are re-orthogonalized against them each sweep.  Raises
    EigenvectorError when the residual stays above 1e-8 * ||H||.
    """
    if rng is None:
        rng = rngmod.substream(0, "eigenvector")
    diag = op.diagonal
    scale = op.norm_bound()
    shift = float(eigenvalue)
    vec = rng.standard_normal(op.size)
    vec /= np.linalg.norm(vec)
    target = 1e-8 * scale
    for sweep in range(max(sweeps, 2) + 2):
        if orth_against is not None and orth_against.size:
            vec = vec - orth_against @ (orth_against.T @ vec)
        try:
            new = _solve_shifted(diag, shift, vec)
        except np.linalg.LinAlgError:
            shift += 1e-13 * scale
            new = _solve_shifted(diag, shift, vec)
        if not np.all(np.isfinite(new)):
            shift += 1e-13 * scale
            continue
        nrm = np.linalg.norm(new)
        if nrm == 0.0:
            shift += 1e-13 * scale
            continue
        vec = new / nrm
        if sweep + 1 >= sweeps:
            residual = np.linalg.norm(op.apply(vec) - eigenvalue * vec)
            if residual <= target:
                return vec
    residual = np.linalg.norm(op.apply(vec) - eigenvalue * vec)
    if residual <= target:
        return vec
    raise EigenvectorError(
        f"inverse iteration residual {residual:.3e} above {target:.3e} "
        f"at eigenvalue {eigenvalue!r}")


@dataclass(frozen=True)
class SpectralData:
    """Full eigendecomposition: ascending eigenvalues, orthonormal columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")

    def min_gap(self) -> float:
        if len(self.eigenvalues) < 2:
            return np.inf
        return float(np.min(np.diff(self.eigenvalues)))

    def max_residual(self, op: TruncatedOperator) -> float:
        HV = np.empty_like(self.vectors)
        for j in range(self.vectors.shape[1]):
            HV[:, j] = op.apply(self.vectors[:, j])
        return float(np.max(np.linalg.norm(HV - self.vectors * self.eigenvalues, axis=0)))

    def orthonormality_defect(self) -> float:
        g = self.vectors.T @ self.vectors
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))


def spectral_data(op: TruncatedOperator, rng: np.random.Generator | None = None,
                  polish: bool = True) -> SpectralData:
    """Eigenvalues plus inverse-iteration eigenvectors for the whole window.

    Eigenvalues closer than 1e-8 * scale are treated as one cluster and
    orthogonalized internally.  ``polish`` runs a final QR pass so the
    basis is orthonormal to machine precision (the basis is already
    nearly orthonormal, so eigen-residuals are preserved).
    """
    if rng is None:
        rng = rngmod.substream(0, "eigenvector")
    evals = eigenvalues(op)
    m = op.size
    scale = op.norm_bound()
    cluster_tol = 1e-8 * scale
    vectors = np.empty((m, m))
    cluster_start = 0
    for j in range(m):
        if j > 0 and evals[j] - evals[j - 1] > cluster_tol:
            cluster_start = j
        against = vectors[:, cluster_start:j] if j > cluster_start else None
        vectors[:, j] = eigenvector(op, evals[j], rng, orth_against=against)
    if polish:
        q, r = np.linalg.qr(vectors)
        vectors = q * np.sign(np.diag(r))
    return SpectralData(evals, vectors)


def evolve_amplitudes(op: TruncatedOperator, t_grid: np.ndarray,
                      rng: np.random.Generator | None = None,
                      spec: SpectralData | None = None) -> np.ndarray:
    """Amplitudes <delta_n, exp(-itH) delta_0>, shape (window size, len(t_grid)).

    Site 0 must lie in the window.  amplitude(n, t) =
    sum_j exp(-i t E_j) psi_j(n) psi_j(0) over the full eigenbasis.
    """
    if not (op.a <= 0 <= op.b):
        raise ValueError("window must contain site 0")
    if spec is None:
        spec = spectral_data(op, rng)
    t_grid = np.asarray(t_grid, dtype=float)
    origin = -op.a
    weights = spec.vectors[origin, :]
    phases = np.exp(-1j * np.outer(spec.eigenvalues, t_grid))
    return spec.vectors @ (phases * weights[:, None])


def edge_mass(amplitudes: np.ndarray, width: int = 10) -> np.ndarray:
    """Probability mass within ``width`` sites of either window edge, per time."""
    prob = np.abs(amplitudes) ** 2
    return prob[:width, :].sum(axis=0) + prob[-width:, :].sum(axis=0)
