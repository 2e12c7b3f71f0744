"""Per-site potential distributions and the site -> distribution map.

The model draws V(n) independently with a per-site law.  Four families
cover everything exercised here:

* ``PointMasses``: any finite discrete law.
* ``RareOutlier(a, b, p, eps, tail_gamma)``: a at probability p, b at
  1 - p - eps, and a rare heavy atom at eps^(-1/gamma) at probability
  eps.  Its gamma-moment is |a|^g p + |b|^g (1-p-eps) + 1, bounded by
  2 M^g + 1 with M = max(|a|, |b|).
* ``VanishingSpike(n)``: 0 at probability 1 - 1/n^2 and n at 1/n^2.
  The raw variance is 1 - 1/n^2, yet the law converges weakly to the
  point mass at 0; clamping to [-k, k] exposes this, since the clamped
  variance k^2 (1/n^2)(1 - 1/n^2) vanishes as n grows.  The family is
  the standard counterexample for why "variance bounded below" is the
  wrong non-degeneracy certificate for heavy tails.
* ``QuantileTable``: piecewise-linear inverse CDF for everything else.

Moments of discrete laws are exact enumerations, never sampled; the
quantile family integrates its (piecewise-linear) quantile function
exactly where possible and reports a standard error otherwise.

An ``Ensemble`` maps every site n in Z to a law: an explicit table on a
finite window plus a default rule outside (constant, periodic, or the
spike family indexed by |n|), together with the declared certificate
parameters (gamma, c0) for the moment bound and (k, epsilon_var) for
the clamped-variance floor.  ``audit_assumptions`` checks both
certificates site by site.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import rng as rngmod

PROB_TOL = 1e-12   # normalization slack for <= 1e3 atoms in doubles


class DistributionError(ValueError):
    """Malformed distribution parameters."""


def one_step_log_norm(v: np.ndarray, E: float) -> np.ndarray:
    """log of the operator norm of the one-step matrix [[E-v, -1], [1, 0]].

    Closed form: sigma_max = (|E - v| + sqrt((E - v)^2 + 4)) / 2.
    """
    x = np.abs(np.asarray(E, dtype=float) - v)
    return np.log(0.5 * (x + np.sqrt(x * x + 4.0)))


@dataclass(frozen=True)
class PointMasses:
    """Finite discrete law given as (value, probability) atoms."""

    values: tuple[float, ...]
    probs: tuple[float, ...]
    is_discrete = True

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise DistributionError("need matching, nonempty values and probabilities")
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0):
            raise DistributionError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise DistributionError(f"probabilities sum to {p.sum()!r}, not 1")

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.values, dtype=float), np.asarray(self.probs, dtype=float)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        v, p = self.atoms()
        edges = np.cumsum(p)
        edges[-1] = 1.0
        return v[np.searchsorted(edges, u, side="right").clip(0, len(v) - 1)]


def point_mass(value: float) -> PointMasses:
    return PointMasses((float(value),), (1.0,))


def two_point(v0: float, v1: float, p0: float = 0.5) -> PointMasses:
    return PointMasses((float(v0), float(v1)), (float(p0), 1.0 - float(p0)))


@dataclass(frozen=True)
class RareOutlier:
    """Bounded pair plus a rare heavy atom at eps^(-1/gamma)."""

    a: float
    b: float
    p: float
    eps: float
    tail_gamma: float
    is_discrete = True

    def __post_init__(self):
        if not (0.0 <= self.eps < 1.0):
            raise DistributionError("eps must lie in [0, 1)")
        if not (0.0 < self.p and self.p + self.eps < 1.0):
            raise DistributionError("need 0 < p and p + eps < 1")
        if self.tail_gamma <= 0.0:
            raise DistributionError("tail exponent must be positive")
        if self.eps > 0.0 and -np.log(self.eps) / self.tail_gamma > 709.0:
            raise DistributionError(
                "outlier eps^(-1/gamma) is not representable in doubles")

    def _as_point_masses(self) -> PointMasses:
        if self.eps == 0.0:
            return PointMasses((self.a, self.b), (self.p, 1.0 - self.p))
        spike = self.eps ** (-1.0 / self.tail_gamma)
        return PointMasses((self.a, self.b, spike),
                           (self.p, 1.0 - self.p - self.eps, self.eps))

    def atoms(self):
        return self._as_point_masses().atoms()

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self._as_point_masses().ppf(u)


@dataclass(frozen=True)
class VanishingSpike:
    """0 at probability 1 - 1/n^2, n at probability 1/n^2."""

    n: int
    is_discrete = True

    def __post_init__(self):
        if self.n < 1:
            raise DistributionError("spike index must be >= 1")

    def _as_point_masses(self) -> PointMasses:
        q = 1.0 / float(self.n) ** 2
        if q >= 1.0:
            return point_mass(float(self.n))
        return PointMasses((0.0, float(self.n)), (1.0 - q, q))

    def atoms(self):
        return self._as_point_masses().atoms()

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self._as_point_masses().ppf(u)


@dataclass(frozen=True)
class QuantileTable:
    """Piecewise-linear inverse CDF through (u_i, value_i) nodes."""

    us: tuple[float, ...]
    values: tuple[float, ...]
    is_discrete = False

    def __post_init__(self):
        u = np.asarray(self.us, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(u) != len(v) or len(u) < 2:
            raise DistributionError("need at least two (u, value) nodes")
        if u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) < 0):
            raise DistributionError("quantile grid must run from 0 to 1, nondecreasing")
        if np.any(np.diff(v) < 0):
            raise DistributionError("quantile values must be nondecreasing")

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.us, self.values)

    def pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        u = np.asarray(self.us, dtype=float)
        v = np.asarray(self.values, dtype=float)
        keep = np.diff(u) > 0
        return u[:-1][keep], u[1:][keep], v[:-1][keep], v[1:][keep]


Distribution = Union[PointMasses, RareOutlier, VanishingSpike, QuantileTable]


def sample(dist: Distribution, rng: np.random.Generator) -> float:
    """One draw; deterministic given the generator state."""
    return float(dist.ppf(rng.random()))


def sample_array(dist: Distribution, rng: np.random.Generator, size: int) -> np.ndarray:
    return dist.ppf(rng.random(size))


@dataclass(frozen=True)
class MomentEstimate:
    """A moment value; stderr is 0 and converged True for exact enumerations."""

    value: float
    stderr: float = 0.0
    exact: bool = True
    converged: bool = True


def gamma_moment(dist: Distribution, gamma: float, *,
                 rng: np.random.Generator | None = None,
                 samples: int = 200_000) -> MomentEstimate:
    """E|V|^gamma; exact sum for discrete laws, Monte Carlo otherwise.

    The sampled estimate is flagged unconverged when a single draw
    carries more than 5% of the total mass (heavy-tail dominance).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if dist.is_discrete:
        # Log-space sum: |v|^gamma easily overflows even when the moment
        # itself is tame (heavy outlier atoms carry tiny probabilities).
        v, p = dist.atoms()
        with np.errstate(divide="ignore"):
            t = gamma * np.log(np.abs(v)) + np.log(p)
        m = float(np.max(t))
        if m == -np.inf:
            return MomentEstimate(0.0)
        with np.errstate(under="ignore"):
            return MomentEstimate(float(np.exp(m) * np.sum(np.exp(t - m))))
    if rng is None:
        rng = rngmod.substream(0, "moment-mc")
    draws = np.abs(sample_array(dist, rng, samples)) ** gamma
    total = float(np.sum(draws))
    value = total / samples
    stderr = float(np.std(draws, ddof=1) / np.sqrt(samples))
    converged = total == 0.0 or float(np.max(draws)) <= 0.05 * total
    return MomentEstimate(value, stderr, exact=False, converged=converged)


def _clamp_atoms(dist: Distribution, k: float) -> tuple[np.ndarray, np.ndarray]:
    v, p = dist.atoms()
    return np.clip(v, -k, k), p


def truncated_variance(dist: Distribution, k: float) -> float:
    """Variance of clamp(V, -k, k); exact for every supported family."""
    if k <= 0:
        raise ValueError("truncation radius must be positive")
    if dist.is_discrete:
        w, p = _clamp_atoms(dist, k)
        mean = float(np.sum(p * w))
        return float(np.sum(p * (w - mean) ** 2))
    # Piecewise-linear quantile: clamping keeps pieces linear, so the
    # first two moments integrate in closed form piece by piece.
    u0, u1, v0, v1 = dist.pieces()
    lo_u, hi_u, lo_w, hi_w = _clamped_pieces(u0, u1, v0, v1, k)
    du = hi_u - lo_u
    mean = float(np.sum(du * 0.5 * (lo_w + hi_w)))
    second = float(np.sum(du * (lo_w * lo_w + lo_w * hi_w + hi_w * hi_w) / 3.0))
    return second - mean * mean


def _clamped_pieces(u0, u1, v0, v1, k):
    """Split linear quantile pieces at +-k crossings and clamp values."""
    lo_u, hi_u, lo_w, hi_w = [], [], [], []
    for a0, a1, w0, w1 in zip(u0, u1, v0, v1):
        cuts = [a0]
        for level in (-k, k):
            if (w0 - level) * (w1 - level) < 0:
                cuts.append(a0 + (a1 - a0) * (level - w0) / (w1 - w0))
        cuts.append(a1)
        cuts.sort()
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            if c1 <= c0:
                continue
            y0 = w0 + (w1 - w0) * (c0 - a0) / (a1 - a0)
            y1 = w0 + (w1 - w0) * (c1 - a0) / (a1 - a0)
            lo_u.append(c0)
            hi_u.append(c1)
            lo_w.append(min(max(y0, -k), k))
            hi_w.append(min(max(y1, -k), k))
    return (np.asarray(lo_u), np.asarray(hi_u), np.asarray(lo_w), np.asarray(hi_w))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def log_moments(dist: Distribution, E: float) -> tuple[float, float]:
    """(E log||A||, E log^2||A||) for the one-step matrix at energy E.

    Exact enumeration for discrete laws; 64-node Gauss-Legendre per
    quantile piece otherwise (the integrand has a kink at v = E, which
    the piecewise rule resolves well enough for diagnostics).
    """
    if dist.is_discrete:
        v, p = dist.atoms()
        g = one_step_log_norm(v, E)
        return float(np.sum(p * g)), float(np.sum(p * g * g))
    u0, u1, v0, v1 = dist.pieces()
    mean = 0.0
    mean_sq = 0.0
    for a0, a1, w0, w1 in zip(u0, u1, v0, v1):
        u_nodes = 0.5 * (a1 - a0) * _GL_NODES + 0.5 * (a1 + a0)
        w = 0.5 * (a1 - a0) * _GL_WEIGHTS
        v = w0 + (w1 - w0) * (u_nodes - a0) / (a1 - a0)
        g = one_step_log_norm(v, E)
        mean += float(np.sum(w * g))
        mean_sq += float(np.sum(w * g * g))
    return mean, mean_sq


# --- ensembles -------------------------------------------------------------

@dataclass(frozen=True)
class ConstantRule:
    dist: Distribution

    def at(self, n: int) -> Distribution:
        return self.dist


@dataclass(frozen=True)
class PeriodicRule:
    dists: tuple[Distribution, ...]

    def at(self, n: int) -> Distribution:
        return self.dists[n % len(self.dists)]


@dataclass(frozen=True)
class SpikeBySiteRule:
    """Site n gets VanishingSpike(max(|n|, 1)); the weak limit is deterministic."""

    def at(self, n: int) -> Distribution:
        return VanishingSpike(max(abs(n), 1))


Rule = Union[ConstantRule, PeriodicRule, SpikeBySiteRule]


@dataclass(frozen=True)
class Ensemble:
    """Total map site -> law, plus the declared certificate parameters."""

    default: Rule
    table: Mapping[int, Distribution] = field(default_factory=dict)
    gamma: float = 1.0
    c0: float = 10.0
    k: float = 4.0
    epsilon_var: float = 0.01

    def __post_init__(self):
        for name in ("gamma", "c0", "k", "epsilon_var"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def distribution_at(self, n: int) -> Distribution:
        hit = self.table.get(int(n))
        return hit if hit is not None else self.default.at(int(n))

    def sample_sites(self, sites: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        u = rng.random(len(sites))
        return np.array([float(self.distribution_at(s).ppf(u[i]))
                         for i, s in enumerate(sites)])


def constant_ensemble(dist: Distribution, **params) -> Ensemble:
    return Ensemble(default=ConstantRule(dist), **params)


def two_point_ensemble(v0: float, v1: float, **params) -> Ensemble:
    return constant_ensemble(two_point(v0, v1), **params)


def vanishing_spike_ensemble(**params) -> Ensemble:
    return Ensemble(default=SpikeBySiteRule(), **params)


def sample_window_block(ens: Ensemble, sites: np.ndarray, seed: int, tag: str,
                        block: int) -> np.ndarray:
    """Potentials for one trial block, shape (BLOCK, len(sites)).

    One uniform per (trial, site) through each site's inverse CDF; the
    stream is fixed by (seed, tag, block) so results never depend on
    scheduling.
    """
    u = rngmod.uniform_block(seed, tag, block, (len(sites),))
    out = np.empty_like(u)
    for j, s in enumerate(sites):
        out[:, j] = ens.distribution_at(int(s)).ppf(u[:, j])
    return out


# --- assumption audit ------------------------------------------------------

@dataclass(frozen=True)
class SiteAudit:
    site: int
    gamma_moment: float
    moment_ok: bool
    truncated_variance: float
    variance_ok: bool


@dataclass(frozen=True)
class AuditReport:
    gamma: float
    c0: float
    k: float
    epsilon_var: float
    rows: tuple[SiteAudit, ...]

    @property
    def all_pass(self) -> bool:
        return all(r.moment_ok and r.variance_ok for r in self.rows)

    @property
    def verdict(self) -> str:
        return "assumptions satisfied" if self.all_pass else "assumptions violated"

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma, "c0": self.c0, "k": self.k,
            "epsilon_var": self.epsilon_var, "verdict": self.verdict,
            "sites": [{
                "site": r.site,
                "gamma_moment": r.gamma_moment, "moment_ok": r.moment_ok,
                "truncated_variance": r.truncated_variance, "variance_ok": r.variance_ok,
            } for r in self.rows],
        }


def audit_assumptions(ens: Ensemble, sites: Sequence[int]) -> AuditReport:
    """Check the moment bound and clamped-variance floor on each site.

    Deterministic for discrete laws (exact enumeration throughout).
    """
    rows = []
    for n in sites:
        d = ens.distribution_at(int(n))
        gm = gamma_moment(d, ens.gamma).value
        tv = truncated_variance(d, ens.k)
        rows.append(SiteAudit(int(n), gm, gm <= ens.c0, tv, tv > ens.epsilon_var))
    return AuditReport(ens.gamma, ens.c0, ens.k, ens.epsilon_var, tuple(rows))


# --- description files -----------------------------------------------------

class ConfigError(ValueError):
    """Ensemble or experiment description does not match the schema."""


def distribution_from_dict(d: dict, where: str = "distribution") -> Distribution:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where}: expected an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "point_masses":
            atoms = d["atoms"]
            return PointMasses(tuple(float(a[0]) for a in atoms),
                               tuple(float(a[1]) for a in atoms))
        if kind == "two_point":
            return two_point(float(d["v0"]), float(d["v1"]), float(d.get("p0", 0.5)))
        if kind == "rare_outlier":
            return RareOutlier(float(d["a"]), float(d["b"]), float(d["p"]),
                               float(d["eps"]), float(d["tail_gamma"]))
        if kind == "vanishing_spike":
            return VanishingSpike(int(d["n"]))
        if kind == "quantile_table":
            return QuantileTable(tuple(float(x) for x in d["us"]),
                                 tuple(float(x) for x in d["values"]))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc} for kind '{kind}'") from exc
    except DistributionError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown distribution kind '{kind}'")


def ensemble_from_dict(d: dict) -> Ensemble:
    if not isinstance(d, dict):
        raise ConfigError("ensemble: expected an object")
    for name in ("gamma", "c0", "k", "epsilon_var"):
        if name not in d:
            raise ConfigError(f"ensemble.{name}: required")
        if not isinstance(d[name], (int, float)) or d[name] <= 0:
            raise ConfigError(f"ensemble.{name}: must be a positive number")
    rule_spec = d.get("default")
    if not isinstance(rule_spec, dict) or "rule" not in rule_spec:
        raise ConfigError("ensemble.default: expected an object with a 'rule' field")
    kind = rule_spec["rule"]
    if kind == "constant":
        rule: Rule = ConstantRule(distribution_from_dict(
            rule_spec.get("dist"), "ensemble.default.dist"))
    elif kind == "periodic":
        dists = rule_spec.get("dists")
        if not isinstance(dists, list) or not dists:
            raise ConfigError("ensemble.default.dists: need a nonempty list")
        rule = PeriodicRule(tuple(distribution_from_dict(x, f"ensemble.default.dists[{i}]")
                                  for i, x in enumerate(dists)))
    elif kind == "vanishing_spike_by_site":
        rule = SpikeBySiteRule()
    else:
        raise ConfigError(f"ensemble.default.rule: unknown rule '{kind}'")
    table = {}
    for key, spec in (d.get("sites") or {}).items():
        try:
            site = int(key)
        except ValueError as exc:
            raise ConfigError(f"ensemble.sites: key '{key}' is not an integer site") from exc
        table[site] = distribution_from_dict(spec, f"ensemble.sites[{key}]")
    return Ensemble(default=rule, table=table, gamma=float(d["gamma"]),
                    c0=float(d["c0"]), k=float(d["k"]),
                    epsilon_var=float(d["epsilon_var"]))
