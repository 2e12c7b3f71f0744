import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from nsanderson.cli import main
from nsanderson.ensembles import ConfigError
from nsanderson.runner import ExperimentConfig, run, write_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(tmp_path: Path, **overrides) -> Path:
    cfg = {
        "ensemble": {
            "gamma": 2.0, "c0": 10.0, "k": 4.0, "epsilon_var": 0.5,
            "default": {"rule": "constant",
                        "dist": {"kind": "two_point", "v0": 0.0, "v1": 3.0}},
        },
        "energy": {"min": -0.5, "max": 0.5, "grid": 5},
        "windows": [16, 32, 64],
        "trials": 200,
        "seed": 7,
        "audit": {"site_min": 1, "site_max": 8},
        "deviations": {"n_list": [20, 40], "exceedance_trials": 100,
                       "reference_trials": 500, "scan_n": 12,
                       "measure_trend": {"n_list": [8, 12, 16], "trials": 4,
                                         "reference_trials": 200}},
        "spectrum": {"half_width": 20},
        "localize": {"half_width": 40},
        "dynamics": {"q": 2.0, "half_width": 60, "t_max": 10.0, "t_points": 5},
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_config_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"ensemble": \n  nope}')
    with pytest.raises(ConfigError, match="line 2"):
        ExperimentConfig.from_file(path)


def test_config_field_diagnostics(tmp_path):
    base = json.loads(small_config(tmp_path).read_text())
    bad = dict(base)
    bad["energy"] = {"min": 1.0, "max": -1.0, "grid": 5}
    with pytest.raises(ConfigError, match="min must be below max"):
        ExperimentConfig.from_dict(bad)
    bad["energy"] = {"min": -1.0, "max": 1.0, "grid": 1}
    with pytest.raises(ConfigError, match="energy.grid"):
        ExperimentConfig.from_dict(bad)
    bad = dict(base, trials=1)
    with pytest.raises(ConfigError, match="trials"):
        ExperimentConfig.from_dict(bad)
    bad = dict(base, seed=-3)
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict(bad)
    bad = dict(base)
    del bad["ensemble"]
    with pytest.raises(ConfigError, match="ensemble"):
        ExperimentConfig.from_dict(bad)


def test_ensemble_may_live_in_its_own_file(tmp_path):
    ens = {"gamma": 2.0, "c0": 10.0, "k": 4.0, "epsilon_var": 0.5,
           "default": {"rule": "constant",
                       "dist": {"kind": "two_point", "v0": 0.0, "v1": 3.0}}}
    (tmp_path / "ens.json").write_text(json.dumps(ens))
    cfg = json.loads(small_config(tmp_path).read_text())
    cfg["ensemble"] = "ens.json"
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    parsed = ExperimentConfig.from_file(path)
    assert parsed.ensemble.distribution_at(0).values == (0.0, 3.0)


def test_write_csv_full_precision(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(path, ["a", "b"], [(1 / 3, True), (2, "lbl")])
    text = path.read_text()
    assert "0.33333333333333331" in text
    assert text.splitlines()[0] == "a,b"
    assert text.splitlines()[1].endswith(",1")


def test_audit_subcommand_bundled_spike_config(tmp_path):
    rc = run("audit", CONFIGS / "vanishing_spike.json", out_dir=tmp_path / "a")
    assert rc == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["verdict"] == "assumptions violated"


def test_manifest_checksums_match(tmp_path):
    cfg = small_config(tmp_path)
    out = tmp_path / "growth"
    assert run("growth", cfg, out_dir=out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "growth"
    for name, digest in manifest["artifacts"].items():
        body = (out / name).read_bytes()
        assert hashlib.sha256(body).hexdigest() == digest


def test_growth_reproducible_across_threads(tmp_path):
    cfg = small_config(tmp_path)
    outs = []
    for threads, label in ((1, "t1"), (4, "t4"), (8, "t8")):
        out = tmp_path / label
        assert run("growth", cfg, out_dir=out, threads=threads) == 0
        outs.append((out / "growth.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_seed_override_changes_output(tmp_path):
    cfg = small_config(tmp_path)
    out_a, out_b = tmp_path / "sa", tmp_path / "sb"
    run("growth", cfg, out_dir=out_a)
    run("growth", cfg, out_dir=out_b, seed=12345)
    assert (out_a / "growth.csv").read_bytes() != (out_b / "growth.csv").read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["growth", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    cfg = small_config(tmp_path)
    assert main(["audit", "--config", str(cfg), "--out",
                 str(tmp_path / "cli-audit")]) == 0


def test_localize_and_dynamics_artifacts(tmp_path):
    cfg = small_config(tmp_path)
    out = tmp_path / "loc"
    assert run("localize", cfg, out_dir=out) == 0
    decay = (out / "decay.csv").read_text().splitlines()
    assert decay[0] == "index,eigenvalue,center,alpha,residual_rms,n_points"
    assert len(decay) == 1 + 81
    profile = (out / "eigenfunction_profile.csv").read_text().splitlines()
    assert profile[0] == "site,psi,log_abs_psi,fit_line"

    out = tmp_path / "dyn"
    assert run("dynamics", cfg, out_dir=out) == 0
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["control_verdict"] == "delocalized"
    moments = (out / "moments.csv").read_text().splitlines()
    assert moments[0] == "label,t,m_q,m_q_squared,contaminated"
    labels = {line.split(",")[0] for line in moments[1:]}
    assert labels == {"main", "free", "spike_control"}


def test_spectrum_eigenvector_export(tmp_path):
    cfg_path = small_config(tmp_path, spectrum={"half_width": 10,
                                                "export_eigenvectors": True})
    out = tmp_path / "spec"
    assert run("spectrum", cfg_path, out_dir=out) == 0
    eig = (out / "eigenvalues.csv").read_text().splitlines()
    assert eig[0] == "index,eigenvalue"
    assert len(eig) == 1 + 21
    vecs = json.loads((out / "eigenvectors.json").read_text())
    mat = np.array(vecs["vectors"])
    assert mat.shape == (21, 21)
    gram = mat @ mat.T
    assert np.max(np.abs(gram - np.eye(21))) <= 1e-10
