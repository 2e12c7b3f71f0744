"""Config-driven experiment runner with reproducible, checksummed outputs.

Each subcommand reads one JSON experiment description, runs the
corresponding module at the configured scale, and writes flat CSV plus
JSON artifacts into the output directory together with a manifest
(config echo, seed, sha256 per artifact, wall time).  Numeric CSV
content is identical for any worker count at a fixed seed: randomness
is keyed by (seed, module tag, trial index) and reductions run in trial
order.

CSV floats carry 17 significant digits; JSON is sorted-key with indent
2; neither embeds timestamps, so artifact bytes are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import deviations as dev_mod
from . import ensembles as ens_mod
from . import growth as growth_mod
from . import localization as loc_mod
from . import rng as rngmod
from . import spectrum as spec_mod
from . import transfer
from .charpoly import charpoly_window
from .ensembles import ConfigError


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- configuration ----------------------------------------------------------

def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}.{key}: required")
    return d[key]


@dataclass
class ExperimentConfig:
    """Validated experiment description; see configs/ for commented examples."""

    ensemble: ens_mod.Ensemble
    e_min: float
    e_max: float
    grid: int
    windows: list[int]
    trials: int
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def energies(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.grid)

    def section(self, name: str) -> dict:
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"{name}: expected an object")
        return sec

    @staticmethod
    def from_dict(d: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: expected a JSON object")
        ens_spec = _need(d, "ensemble", "config")
        if isinstance(ens_spec, str):
            path = Path(ens_spec)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            ens_spec = _load_json(path)
        ensemble = ens_mod.ensemble_from_dict(ens_spec)
        energy = _need(d, "energy", "config")
        e_min = float(_need(energy, "min", "config.energy"))
        e_max = float(_need(energy, "max", "config.energy"))
        if not e_min < e_max:
            raise ConfigError("config.energy: min must be below max")
        grid = int(_need(energy, "grid", "config.energy"))
        if grid < 2:
            raise ConfigError("config.energy.grid: must be >= 2")
        windows = [int(w) for w in d.get("windows", [64, 128, 256])]
        if any(w < 1 for w in windows):
            raise ConfigError("config.windows: window sizes must be >= 1")
        trials = int(d.get("trials", 1000))
        if trials < 2:
            raise ConfigError("config.trials: must be >= 2")
        seed = int(d.get("seed", 0))
        if not (0 <= seed < 2**64):
            raise ConfigError("config.seed: must be a 64-bit value")
        return ExperimentConfig(ensemble, e_min, e_max, grid, windows,
                                trials, seed, raw=d)

    @staticmethod
    def from_file(path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return ExperimentConfig.from_dict(_load_json(path), base_dir=path.parent)


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


# --- subcommands -------------------------------------------------------------

class _Artifacts:
    """Tracks written files for the manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def csv(self, name: str, header, rows) -> Path:
        path = self.out_dir / name
        write_csv(path, header, rows)
        self.paths.append(path)
        return path

    def json(self, name: str, obj) -> Path:
        path = self.out_dir / name
        write_json(path, obj)
        self.paths.append(path)
        return path

    def checksums(self) -> dict:
        return {p.name: _sha256(p) for p in sorted(self.paths)}


def run_audit(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    sec = cfg.section("audit")
    lo = int(sec.get("site_min", 1))
    hi = int(sec.get("site_max", 64))
    report = ens_mod.audit_assumptions(cfg.ensemble, range(lo, hi + 1))
    art.csv("audit.csv",
            ["site", "gamma_moment", "moment_ok", "truncated_variance", "variance_ok"],
            [(r.site, r.gamma_moment, r.moment_ok, r.truncated_variance, r.variance_ok)
             for r in report.rows])
    art.json("audit.json", report.as_dict())
    return {"verdict": report.verdict,
            "sites_checked": len(report.rows),
            "sites_failed": sum(1 for r in report.rows
                                if not (r.moment_ok and r.variance_ok))}


def run_growth(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    table = growth_mod.estimate_growth(cfg.ensemble, cfg.windows, cfg.energies,
                                       cfg.trials, cfg.seed, threads=threads)
    rows = []
    for i, (a, b) in enumerate(table.windows):
        for j, E in enumerate(table.energies):
            rows.append((a, b, E, table.mean[i, j], table.stderr[i, j], table.trials))
    art.csv("growth.csv",
            ["window_a", "window_b", "E", "mean_log_norm", "stderr", "trials"], rows)
    rate = growth_mod.estimate_h(table)
    modulus = growth_mod.equicontinuity_modulus(table)
    art.csv("equicontinuity.csv", ["window_a", "window_b", "modulus"],
            [(a, b, m) for (a, b), m in zip(table.windows, modulus.per_window)])
    art.json("rate.json", {
        "h_hat": rate.h_hat,
        "no_growth": bool(rate.no_growth),
        "max_relative_rate_change": rate.max_relative_rate_change(),
        "per_window": [{"a": a, "b": b,
                        "rate_min": float(np.min(rate.rates[i])),
                        "rate_mean": float(np.mean(rate.rates[i]))}
                       for i, (a, b) in enumerate(table.windows)],
        "equicontinuity_modulus": modulus.overall,
    })
    return {"h_hat": rate.h_hat, "no_growth": bool(rate.no_growth),
            "equicontinuity_modulus": modulus.overall}


def run_deviations(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    sec = cfg.section("deviations")
    n_list = [int(n) for n in sec.get("n_list", [50, 100, 200])]
    x_trials = int(sec.get("exceedance_trials", max(cfg.trials // 5, 100)))
    ref_trials = int(sec.get("reference_trials", 10 * x_trials))
    E0 = float(sec.get("energy", 0.5 * (cfg.e_min + cfg.e_max)))
    ref_table = growth_mod.estimate_growth(
        cfg.ensemble, [(1, n) for n in n_list], np.array([E0]), ref_trials,
        cfg.seed, tag="deviations-ref", threads=threads)
    L_ref = {n: float(ref_table.mean[i, 0]) for i, n in enumerate(n_list)}
    n_big = max(n_list)
    eps = float(sec.get("epsilon", 0.1 * L_ref[n_big] / n_big))
    fit_summary = {}
    rows = []
    for stat in ("norm", "image", "entry"):
        curve = dev_mod.exceedance(cfg.ensemble, n_list, E0, eps, x_trials,
                                   cfg.seed, stat, L_ref, threads=threads,
                                   tag=f"exceedance-{stat}")
        for i, n in enumerate(curve.ns):
            rows.append((stat, n, eps, x_trials, int(curve.counts[i]),
                         curve.p_hat[i], curve.wilson_lo[i], curve.wilson_hi[i]))
        fit_summary[stat] = {
            "delta_hat": curve.delta_hat, "slope": curve.slope,
            "intercept": curve.intercept,
            "slope_ci": list(curve.slope_ci) if curve.slope_ci else None,
            "fit_ns": list(curve.fit_ns), "monotone_ok": bool(curve.monotone_ok),
        }
    path = art.out_dir / "exceedance.csv"
    write_csv(path, ["statistic", "n", "epsilon", "trials", "count",
                     "p_hat", "wilson_lo", "wilson_hi"],
              [(r[0],) + tuple(r[1:]) for r in rows])
    art.paths.append(path)
    art.json("deviation_fit.json", fit_summary)

    scan_n = int(sec.get("scan_n", 30))
    scan_eps_factor = float(sec.get("scan_epsilon_factor", 1.0))
    window = (scan_n + 1, 3 * scan_n + 1)
    scan_table = growth_mod.estimate_growth(cfg.ensemble, [window], cfg.energies,
                                            max(cfg.trials, 500), cfg.seed,
                                            tag="scan-ref", threads=threads)
    ref = dev_mod.LinearLReference.from_table(scan_table, window)
    h_scan = float(np.min(scan_table.rate()))
    blk, off = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(
        cfg.ensemble, np.arange(window[0], window[1] + 1), cfg.seed, "scan", blk)[off]
    op = spec_mod.TruncatedOperator(window[0], window[1], pots)
    eigs = spec_mod.eigenvalues(op)
    inside = eigs[(eigs >= cfg.e_min) & (eigs <= cfg.e_max)]
    span = cfg.e_max - cfg.e_min
    min_gap = float(np.min(np.diff(inside))) if len(inside) > 1 else span
    npts = min(max(int(np.ceil(span / max(min_gap / 3.0, 1e-12))) + 1, 65), 60000)
    grid = np.linspace(cfg.e_min, cfg.e_max, npts)
    scan = dev_mod.scan_deviation_set(pots, window, scan_eps_factor * h_scan,
                                      grid, ref)
    art.json("scan.json", {
        "window": list(scan.window), "epsilon": scan.epsilon, "side": scan.side,
        "total_length": scan.total_length,
        "merged_violations": scan.merged_violations,
        "rootless_violations": scan.rootless_violations,
        "ref_stderr_max": scan.ref_stderr_max,
        "intervals": [{"lo": iv.lo, "hi": iv.hi, "eigenvalue": iv.eigenvalue}
                      for iv in scan.intervals],
        "eigenvalues_in_range": [float(e) for e in inside],
    })

    mt_sec = sec.get("measure_trend", {})
    mt_ns = [int(n) for n in mt_sec.get("n_list", [20, 45, 70])]
    mt_trials = int(mt_sec.get("trials", 20))
    mt_eps = float(mt_sec.get("epsilon", 0.15 * h_scan))
    trend = dev_mod.measure_trend(cfg.ensemble, mt_ns, mt_eps, mt_trials,
                                  cfg.seed, cfg.energies,
                                  ref_trials=int(mt_sec.get("reference_trials", 1000)),
                                  threads=threads)
    art.csv("measure_trend.csv",
            ["n", "epsilon", "mean_total_length", "stderr", "trials", "grid_errors"],
            [(n, e, m, s, trend.trials, g) for n, e, m, s, g in
             zip(trend.ns, trend.epsilons, trend.mean_lengths, trend.stderrs,
                 trend.grid_errors)])
    return {"epsilon": eps, "fits": fit_summary,
            "scan_intervals": scan.interval_count(),
            "scan_structure_ok": bool(scan.structure_ok),
            "measure_slope": trend.slope}


def run_spectrum(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    sec = cfg.section("spectrum")
    half = int(sec.get("half_width", 100))
    blk, off = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(
        cfg.ensemble, np.arange(-half, half + 1), cfg.seed, "spectrum", blk)[off]
    op = spec_mod.TruncatedOperator(-half, half, pots)
    data = spec_mod.spectral_data(op, rngmod.substream(cfg.seed, "spectrum-eig"))
    art.csv("eigenvalues.csv", ["index", "eigenvalue"],
            list(enumerate(data.eigenvalues)))
    if sec.get("export_eigenvectors", False):
        art.json("eigenvectors.json", {
            "window": [-half, half],
            "eigenvalues": [float(e) for e in data.eigenvalues],
            "vectors": [[float(x) for x in data.vectors[:, j]]
                        for j in range(data.vectors.shape[1])],
        })
    return {"size": op.size, "min_gap": data.min_gap(),
            "max_residual": data.max_residual(op)}


def run_localize(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    sec = cfg.section("localize")
    half = int(sec.get("half_width", 200))
    window = (-half, half)
    blk, off = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(
        cfg.ensemble, np.arange(-half, half + 1), cfg.seed, "localize", blk)[off]
    op = spec_mod.TruncatedOperator(-half, half, pots)
    data = spec_mod.spectral_data(op, rngmod.substream(cfg.seed, "localize-eig"))
    fits = [loc_mod.decay_fit(data.vectors[:, j], window)
            for j in range(op.size)]
    art.csv("decay.csv",
            ["index", "eigenvalue", "center", "alpha", "residual_rms", "n_points"],
            [(j, data.eigenvalues[j], f.center, f.alpha, f.residual_rms, f.n_points)
             for j, f in enumerate(fits)])
    sule = loc_mod.sule_fit(data, window,
                            quantile=float(sec.get("sule_quantile", 0.10)))
    art.json("sule.json", {
        "alpha_global": sule.alpha_global, "max_c": sule.max_c,
        "no_sule": bool(sule.no_sule),
        "per_eigenvector": [{"index": j, "center": int(sule.centers[j]),
                             "alpha": float(sule.alphas[j]),
                             "c_required": float(sule.c_required[j])}
                            for j in range(op.size)],
    })
    alphas = np.array([f.alpha for f in fits])
    median_idx = int(np.argsort(alphas)[len(alphas) // 2])
    psi = data.vectors[:, median_idx]
    fit = fits[median_idx]
    sites = op.sites
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(psi))
    fit_line = np.log(np.abs(psi[sites == fit.center])[0]) \
        - fit.alpha * np.abs(sites - fit.center)
    art.csv("eigenfunction_profile.csv",
            ["site", "psi", "log_abs_psi", "fit_line"],
            [(int(s), psi[i], logabs[i], fit_line[i]) for i, s in enumerate(sites)])
    return {"median_alpha": float(np.median(alphas)),
            "alpha_global": sule.alpha_global, "max_c": sule.max_c,
            "no_sule": bool(sule.no_sule), "profile_index": median_idx}


def run_dynamics(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    sec = cfg.section("dynamics")
    q = float(sec.get("q", 2.0))
    half = int(sec.get("half_width", 300))
    t_max = float(sec.get("t_max", 50.0))
    t_points = int(sec.get("t_points", 26))
    t_grid = np.linspace(0.0, t_max, t_points)
    blk, off = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(
        cfg.ensemble, np.arange(-half, half + 1), cfg.seed, "dynamics", blk)[off]
    op = spec_mod.TruncatedOperator(-half, half, pots)
    trace = loc_mod.dynamical_moment(op, q, t_grid,
                                     rngmod.substream(cfg.seed, "dynamics-eig"))
    control = loc_mod.delocalization_control(half, q, t_grid, cfg.seed)
    rows = []
    for label, tr in (("main", trace), ("free", control.free_trace),
                      ("spike_control", control.trace)):
        for i, t in enumerate(tr.t_grid):
            rows.append((label, t, tr.m_q[i], tr.m_q_squared[i],
                         bool(tr.contaminated[i])))
    path = art.out_dir / "moments.csv"
    write_csv(path, ["label", "t", "m_q", "m_q_squared", "contaminated"], rows)
    art.paths.append(path)
    summary = {
        "q": q, "half_width": half,
        "main_sup": trace.sup_uncontaminated(),
        "main_growth_ratio": trace.growth_ratio(),
        "main_flat_tail": bool(trace.flat_tail()),
        "free_growth_ratio": control.free_ratio,
        "control_growth_ratio": control.ratio,
        "control_verdict": control.verdict,
    }
    art.json("verdict.json", summary)
    return summary


def _verify_suites(cfg: ExperimentConfig, threads: int) -> list[tuple[str, bool, str]]:
    """Small-scale property suites; each returns (name, passed, detail)."""
    ens = cfg.ensemble
    seed = cfg.seed
    E0 = 0.5 * (cfg.e_min + cfg.e_max)
    rng = rngmod.substream(seed, "verify")
    suites: list[tuple[str, bool, str]] = []

    # 1. SL(2,R) integrity.  Determinants of growing products are
    # unobservable in doubles once the columns align, so the long-chain
    # det check runs on bounded (elliptic) products; the growing chain
    # is checked for det while observable plus log_norm >= 0 throughout.
    elliptic = transfer.ProductBatch(())
    for j in range(20000):
        elliptic.push_site(np.asarray(1.0 if j % 2 else 0.5))
    drift_ell = float(elliptic.det_drift())
    blk, _ = rngmod.block_of(0)
    pots = ens_mod.sample_window_block(ens, np.arange(1, 2001), seed, "verify-sl2", blk)
    batch = transfer.ProductBatch((rngmod.BLOCK,))
    drift_grow = 0.0
    nonneg = np.inf
    for j in range(2000):
        batch.push_site(E0 - pots[:, j])
        nonneg = min(nonneg, float(np.min(batch.log_norms())))
        # det noise is eps * exp(2 log_scale); past s ~ 9 it tops 1e-6.
        if np.max(batch.log_scale) < 9.0:
            drift_grow = max(drift_grow, float(np.max(batch.det_drift())))
    suites.append(("sl2-integrity",
                   drift_ell <= 1e-6 and drift_grow <= 1e-6 and nonneg >= 0.0,
                   f"elliptic 2e4-factor |det-1| = {drift_ell:.2e}, growing "
                   f"(observable range) = {drift_grow:.2e}, min log_norm = {nonneg:.2e}"))

    # 2. charpoly vs dense determinant
    worst = 0.0
    ok = True
    for _ in range(100):
        m = int(rng.integers(1, 13))
        v = ens.sample_sites(range(1, m + 1), rng)
        E = rng.uniform(cfg.e_min, cfg.e_max)
        quad = charpoly_window(0, m - 1, E, v)
        H = np.diag(v) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)
        sgn, logdet = np.linalg.slogdet(H - E * np.eye(m))
        p = quad.charpoly()
        ok &= p.sign == int(sgn)
        worst = max(worst, abs(p.log_abs - logdet) / max(1.0, abs(logdet)))
    suites.append(("charpoly-dense-oracle", ok and worst <= 1e-9,
                   f"signs ok = {ok}, worst rel err = {worst:.2e}"))

    # 3. Green ratio vs dense inverse
    worst = 0.0
    checked = 0
    from .charpoly import green_entry
    while checked < 50:
        m = int(rng.integers(2, 41))
        v = ens.sample_sites(range(1, m + 1), rng)
        E = rng.uniform(cfg.e_min, cfg.e_max)
        H = np.diag(v) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)
        if np.min(np.abs(np.linalg.eigvalsh(H) - E)) < 1e-3:
            continue
        G = np.linalg.inv(H - E * np.eye(m))
        x, y = sorted(rng.integers(0, m, size=2))
        g = green_entry(0, m - 1, E, int(x), int(y), v)
        worst = max(worst, abs(g.value() - G[x, y]) / max(1e-300, abs(G[x, y])))
        checked += 1
    suites.append(("green-dense-oracle", worst <= 1e-8,
                   f"worst rel err = {worst:.2e} over {checked} entries"))

    # 4. transfer entries = windowed polynomials
    worst = 0.0
    ok = True
    for _ in range(50):
        m = int(rng.integers(1, 60))
        v = ens.sample_sites(range(1, m + 1), rng)
        E = rng.uniform(cfg.e_min, cfg.e_max)
        quad = charpoly_window(0, m - 1, E, v)
        prod = transfer.product_over(v, E)
        recon = prod.reconstruction()
        for ref, got in zip(recon.flat, quad.entries()):
            if got.sign != int(np.sign(ref)) and abs(ref) > 1e-280:
                ok = False
            if abs(ref) > 1e-280:
                worst = max(worst, abs(got.log_abs - np.log(abs(ref)))
                            / max(1.0, abs(np.log(abs(ref)))))
    suites.append(("transfer-entry-identity", ok and worst <= 1e-7,
                   f"signs ok = {ok}, worst rel log err = {worst:.2e}"))

    # 5. eigensolver vs dense oracle + residuals
    worst = 0.0
    for _ in range(25):
        m = int(rng.integers(1, 13))
        v = ens.sample_sites(range(1, m + 1), rng)
        op = spec_mod.TruncatedOperator(0, m - 1, v)
        ours = spec_mod.eigenvalues(op)
        dense = np.linalg.eigvalsh(op.dense())
        worst = max(worst, float(np.max(np.abs(ours - dense))))
    v = ens.sample_sites(range(1, 201), rng)
    op = spec_mod.TruncatedOperator(0, 199, v)
    data = spec_mod.spectral_data(op, rngmod.substream(seed, "verify-eig"))
    resid = data.max_residual(op)
    gap = data.min_gap()
    suites.append(("eigensolver-oracle",
                   worst <= 1e-10 and resid <= 1e-8 * op.norm_bound() and gap > 0,
                   f"worst eig err = {worst:.2e}, resid = {resid:.2e}, min gap = {gap:.2e}"))

    # 6. pointwise submultiplicativity
    stats = growth_mod.additivity_defect(ens, 1, 100, 200, E0, 2000, seed,
                                         threads=threads)
    suites.append(("submultiplicativity", stats.min >= -1e-8,
                   f"min defect = {stats.min:.2e}, mean = {stats.mean:.3f}"))

    # 7. deviation-set structure
    scan_n = 30
    window = (scan_n + 1, 3 * scan_n + 1)
    table = growth_mod.estimate_growth(ens, [window], cfg.energies,
                                       max(cfg.trials, 500), seed,
                                       tag="verify-scan-ref", threads=threads)
    ref = dev_mod.LinearLReference.from_table(table, window)
    h_scan = float(np.min(table.rate()))
    bad = 0
    done = 0
    t = 0
    while done < 20 and t < 60:
        blk2, off2 = rngmod.block_of(t)
        t += 1
        pv = ens_mod.sample_window_block(
            ens, np.arange(window[0], window[1] + 1), seed, "verify-scan", blk2)[off2]
        op2 = spec_mod.TruncatedOperator(window[0], window[1], pv)
        eigs = spec_mod.eigenvalues(op2)
        inside = eigs[(eigs >= cfg.e_min) & (eigs <= cfg.e_max)]
        span = cfg.e_max - cfg.e_min
        min_gap = float(np.min(np.diff(inside))) if len(inside) > 1 else span
        npts = int(np.ceil(span / max(min_gap / 3.0, span / 60000))) + 1
        if npts > 60000:
            continue
        try:
            scan = dev_mod.scan_deviation_set(
                pv, window, 1.0 * h_scan, np.linspace(cfg.e_min, cfg.e_max, max(npts, 65)),
                ref)
        except dev_mod.GridTooCoarseError:
            continue
        done += 1
        if not scan.structure_ok or scan.interval_count() > window[1] - window[0] + 1:
            bad += 1
    suites.append(("deviation-set-structure", done >= 15 and bad == 0,
                   f"{bad} structure violations over {done} scans"))

    # 8. unitarity of the evolution
    half = 40
    blk3, off3 = rngmod.block_of(0)
    pv = ens_mod.sample_window_block(ens, np.arange(-half, half + 1), seed,
                                     "verify-dyn", blk3)[off3]
    op3 = spec_mod.TruncatedOperator(-half, half, pv)
    amps = spec_mod.evolve_amplitudes(op3, np.linspace(0.0, 10.0, 6),
                                      rngmod.substream(seed, "verify-dyn-eig"))
    unit_err = float(np.max(np.abs(np.sum(np.abs(amps)**2, axis=0) - 1.0)))
    suites.append(("evolution-unitarity", unit_err <= 1e-9,
                   f"max |sum - 1| = {unit_err:.2e}"))

    # 9. growth sanity against constant-matrix oracle
    rot = ens_mod.constant_ensemble(ens_mod.point_mass(E0))
    t_rot = growth_mod.estimate_growth(rot, [(1, 4), (1, 8), (1, 64)],
                                       np.array([E0]), 4, seed, tag="verify-rot")
    rot_ok = float(np.max(np.abs(t_rot.mean))) <= np.log(2.0) + 1e-9
    hyp = ens_mod.constant_ensemble(ens_mod.point_mass(E0 + 3.0))
    t_hyp = growth_mod.estimate_growth(hyp, [(1, 256)], np.array([E0]), 4,
                                       seed, tag="verify-hyp")
    lam = 1.5 + np.sqrt(1.25)  # larger |eigenvalue| of [[-3,-1],[1,0]]
    hyp_rate = float(t_hyp.mean[0, 0]) / 256.0
    hyp_ok = abs(hyp_rate - np.log(lam)) <= 0.01
    suites.append(("constant-matrix-oracle", rot_ok and hyp_ok,
                   f"rotation sup = {float(np.max(np.abs(t_rot.mean))):.2e}, "
                   f"hyperbolic rate err = {abs(hyp_rate - np.log(lam)):.2e}"))

    # 10. reproducibility across worker counts
    t1 = growth_mod.estimate_growth(ens, [(1, 32)], cfg.energies, 300, seed,
                                    tag="verify-repro", threads=1)
    t4 = growth_mod.estimate_growth(ens, [(1, 32)], cfg.energies, 300, seed,
                                    tag="verify-repro", threads=4)
    same = (np.array_equal(t1.mean, t4.mean)
            and np.array_equal(t1.stderr, t4.stderr))
    suites.append(("worker-count-invariance", same,
                   "bitwise equal means and stderrs across 1 and 4 workers"))

    return suites


def run_verify(cfg: ExperimentConfig, art: _Artifacts, threads: int) -> dict:
    suites = _verify_suites(cfg, threads)
    for name, passed, detail in suites:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    # Golden artifacts for the plotting layer, one per figure kind.
    for sub in ("audit", "growth", "deviations", "spectrum", "localize", "dynamics"):
        _SUBCOMMANDS[sub](cfg, art, threads)
    art.json("verify.json", {
        "suites": [{"name": n, "passed": bool(p), "detail": d}
                   for n, p, d in suites],
        "all_passed": all(p for _, p, _ in suites),
    })
    return {"suites": len(suites),
            "failed": [n for n, p, _ in suites if not p],
            "all_passed": all(p for _, p, _ in suites)}


_SUBCOMMANDS = {
    "audit": run_audit,
    "growth": run_growth,
    "deviations": run_deviations,
    "spectrum": run_spectrum,
    "localize": run_localize,
    "dynamics": run_dynamics,
    "verify": run_verify,
}

SUBCOMMANDS = tuple(_SUBCOMMANDS)


def run(subcommand: str, config_path: str | Path, out_dir: str | Path | None = None,
        seed: int | None = None, threads: int = 1) -> int:
    """Run one subcommand; returns the process exit status."""
    if subcommand not in _SUBCOMMANDS:
        raise ValueError(f"unknown subcommand '{subcommand}'")
    cfg = ExperimentConfig.from_file(config_path)
    if seed is not None:
        if not (0 <= seed < 2**64):
            raise ConfigError("--seed: must be a 64-bit value")
        cfg.seed = int(seed)
    out = Path(out_dir) if out_dir is not None else Path(
        cfg.raw.get("out_dir", "runs")) / subcommand
    art = _Artifacts(out)
    started = time.monotonic()
    summary = _SUBCOMMANDS[subcommand](cfg, art, threads)
    art.json("summary.json", summary)
    manifest = {
        "subcommand": subcommand,
        "seed": cfg.seed,
        "threads_hint": threads,
        "config": cfg.raw,
        "artifacts": art.checksums(),
        "wall_time_s": time.monotonic() - started,
    }
    write_json(out / "manifest.json", manifest)
    if subcommand == "verify" and not summary["all_passed"]:
        return 1
    return 0
