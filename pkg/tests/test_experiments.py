import json
import math

import numpy as np
import pytest

from precond import cli, experiments, preconditioners
from precond.errors import ModelFileError, PrecondError
from precond.experiments import (
    ExperimentConfig,
    ExperimentResult,
    PRESETS,
    config_from_dict,
    derive_seed,
    load_model_file,
    result_from_csv,
    result_to_csv,
    run_experiment,
    save_result,
)

from test_fixtures import SIGMA_PI_FIXTURE


TINY = ExperimentConfig(
    experiment="counterproductive", dims=(5,), chains_per_cell=2,
    burn_in=0, measure=300, master_seed=77,
)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert derive_seed(1, 0) != derive_seed(2, 0)


def test_presets_exist_and_validate():
    for name, cfg in PRESETS.items():
        assert cfg.experiment in (
            "counterproductive", "hyperbolic", "binomial", "verify-bounds"
        )
        assert cfg.chains_per_cell >= 1
    assert PRESETS["paper-4.1"].chains_per_cell == 100
    assert PRESETS["paper-4.2"].dims == (2, 5, 10, 20, 100)
    assert PRESETS["paper-4.3"].mu_list == (0.0, 5.0, 50.0, 200.0)


def test_config_schema_and_unknown_keys():
    cfg = config_from_dict({"experiment": "binomial", "dims": [2, 3]})
    assert cfg.dims == (2, 3)
    with pytest.raises(PrecondError):
        config_from_dict({"experiment": "binomial", "bogus_key": 1})
    with pytest.raises(PrecondError):
        config_from_dict({"experiment": "binomial", "schema_version": 99})
    with pytest.raises(PrecondError):
        ExperimentConfig(experiment="binomial", chains_per_cell=0)


def test_run_experiment_unknown_name():
    with pytest.raises(PrecondError):
        run_experiment(ExperimentConfig(experiment="nonsense"))


def _strip_wall_time(result):
    return [
        {k: v for k, v in row.items() if k != "wall_time"} for row in result.rows
    ]


def test_counterproductive_rows_and_determinism():
    a = run_experiment(TINY)
    b = run_experiment(TINY)
    assert _strip_wall_time(a) == _strip_wall_time(b)
    assert len(a.rows) == 3 * TINY.chains_per_cell  # three arms
    arms = {row["arm"] for row in a.rows}
    assert arms == {"none", "dense", "diag"}
    summary = a.bound_rows[0]
    assert round(summary.inputs["kappa"], -2) == 4400.0
    assert round(summary.value, -2) == 8100.0  # diagonal arm kappa_L
    assert summary.extras["kappa_dense"] == pytest.approx(4400.0, rel=0.01) or (
        summary.extras["kappa_dense"] == pytest.approx(
            summary.inputs["kappa"], rel=1e-9
        )
    )


def test_csv_roundtrip_lossless():
    result = run_experiment(TINY)
    text = result_to_csv(result)
    back = result_from_csv(text)
    assert back.experiment == "counterproductive"
    assert len(back.rows) == len(result.rows)
    for orig, parsed in zip(result.rows, back.rows):
        assert parsed["arm"] == orig["arm"]
        assert parsed["seed"] == orig["seed"]
        assert parsed["median_ess"] == pytest.approx(orig["median_ess"], rel=1e-15)
    assert result_to_csv(back) == text


def test_result_from_csv_errors():
    with pytest.raises(ModelFileError):
        result_from_csv("wrong,header\n")
    good = result_to_csv(run_experiment(TINY))
    broken = good.splitlines()
    broken[1] = broken[1] + ",extra"
    with pytest.raises(ModelFileError) as err:
        result_from_csv("\n".join(broken))
    assert err.value.line == 2


def test_save_result_writes_sidecar(tmp_path):
    result = run_experiment(TINY)
    csv_path, json_path = save_result(result, str(tmp_path))
    assert csv_path.read_text() == result_to_csv(result)
    bounds = json.loads(json_path.read_text())
    assert bounds[0]["kind"] == "KappaSummary"


def test_hyperbolic_tiny_run():
    cfg = ExperimentConfig(
        experiment="hyperbolic", dims=(2,), n_multipliers=(5,),
        chains_per_cell=2, burn_in=300, measure=300, master_seed=5,
    )
    result = run_experiment(cfg)
    assert len(result.rows) == 2 * 3  # chains x arms
    assert {row["arm"] for row in result.rows} == {"design", "covariance", "none"}
    for row in result.rows:
        assert row["status"] in ("ok", "stuck", "failed")
    summary = result.bound_rows[0]
    assert summary.value >= 1.0  # kappa_L for the design preconditioner


def test_binomial_tiny_run():
    cfg = ExperimentConfig(
        experiment="binomial", dims=(2,), mu_list=(0.0,),
        chains_per_cell=1, burn_in=300, measure=300, master_seed=6,
        extra={"short_estimate": 400, "long_estimate": 800},
    )
    result = run_experiment(cfg)
    labels = {row["arm"] for row in result.rows}
    assert labels == {
        "covariance-short", "covariance-long", "fisher-short", "fisher-long",
        "mode", "none", "design",
    }
    summary = result.bound_rows[0]
    assert summary.value > 1.0  # C/c corollary value
    assert summary.extras["mode_bound"] > 1.0


def test_verify_bounds_smoke_all_pass():
    cfg = ExperimentConfig(
        experiment="verify-bounds", master_seed=11,
        extra={"n_instances": 5, "n_preconditioners": 10},
    )
    result = run_experiment(cfg)
    assert len(result.rows) == 5 + 5 + 10
    assert all(row["status"] == "pass" for row in result.rows)


# -- model files ---------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_model_file_gaussian(tmp_path):
    rows = "\n".join(
        ",".join(repr(float(v)) for v in row) for row in SIGMA_PI_FIXTURE
    )
    path = _write(
        tmp_path, "model.txt",
        f"model: gaussian\nvector mu: 0,0,0,0,0\nmatrix sigma 5:\n{rows}\n",
    )
    t = load_model_file(path)
    assert t.dim == 5
    assert round(t.envelope.kappa, -2) == 4400.0


def test_load_model_file_cosine_and_binomial(tmp_path):
    path = _write(tmp_path, "cos.txt", "model: cosine\nm: 1.0\nM: 4.0\n")
    t = load_model_file(path)
    assert t.envelope.kappa == pytest.approx(4.0)

    binom = _write(
        tmp_path, "binom.txt",
        "model: binomial\n"
        "matrix X 3:\n1.0,0.5\n-0.2,1.1\n0.3,-0.7\n"
        "vector Y: 0.5,0.25,1.0\n"
        "vector w: 1,4,9\n"
        "lambda_over_n: 0.003\n",
    )
    tb = load_model_file(binom)
    assert tb.dim == 2


def test_load_model_file_errors_with_line_numbers(tmp_path):
    with pytest.raises(ModelFileError) as err:
        load_model_file(_write(tmp_path, "a.txt", "model: gaussian\nnonsense line\n"))
    assert err.value.line == 2
    with pytest.raises(ModelFileError) as err:
        load_model_file(_write(
            tmp_path, "b.txt", "model: gaussian\nmatrix sigma 2:\n1.0,oops\n0.0,1.0\n"
        ))
    assert err.value.line == 3
    with pytest.raises(ModelFileError):
        load_model_file(_write(tmp_path, "c.txt", "m: 1.0\n"))  # missing model
    with pytest.raises(ModelFileError):
        load_model_file(_write(tmp_path, "d.txt", "model: exotic\n"))
    with pytest.raises(ModelFileError):
        load_model_file(_write(tmp_path, "e.txt", "model: gaussian\n"))  # no sigma


def test_analyze_fixture_with_diag(tmp_path):
    from precond.experiments import analyze
    from precond import targets

    t = targets.gaussian_target(np.zeros(5), SIGMA_PI_FIXTURE)
    p = preconditioners.diag_covariance_preconditioner(SIGMA_PI_FIXTURE)
    reports = analyze(t, p, seed=0)
    kinds = [r.kind for r in reports]
    assert kinds[0] == "KappaSummary"
    assert round(reports[0].value, -2) == 8100.0
    assert "Thm3" in kinds and "GapSandwich" in kinds and "DiagDominance" in kinds
    # every theorem bound must dominate the exact kappa_L
    for rep in reports:
        if rep.kind in ("Thm1", "Thm2", "Thm3"):
            assert rep.value >= reports[0].value * (1 - 1e-8)


# -- CLI -----------------------------------------------------------------------

def test_cli_analyze_ok(tmp_path, capsys):
    path = _write(tmp_path, "cos.txt", "model: cosine\nm: 1.0\nM: 4.0\n")
    code = cli.main(["analyze", "--config", path, "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "KappaSummary" in out
    data = json.loads((tmp_path / "out" / "analyze_bounds.json").read_text())
    assert data[0]["kind"] == "KappaSummary"


def test_cli_analyze_missing_file(tmp_path, capsys):
    code = cli.main(["analyze", "--config", str(tmp_path / "nope.txt")])
    assert code == cli.EXIT_CONFIG


def test_cli_analyze_with_preconditioner(tmp_path, capsys):
    path = _write(tmp_path, "cos.txt", "model: cosine\nm: 1.0\nM: 4.0\n")
    p = preconditioners.from_matrix(np.diag([2.0, 1.0]), label="diag")
    pfile = _write(tmp_path, "precond.csv", preconditioners.to_csv(p))
    code = cli.main(["analyze", "--config", path, "--preconditioner", pfile])
    assert code == cli.EXIT_OK
    assert "value=16" in capsys.readouterr().out  # kappa_L of the corner family


def test_cli_experiment_writes_outputs(tmp_path, capsys):
    cfg = {
        "experiment": "counterproductive", "dims": [5], "chains_per_cell": 2,
        "burn_in": 0, "measure": 300, "master_seed": 3,
    }
    cfg_path = _write(tmp_path, "cfg.json", json.dumps(cfg))
    code = cli.main([
        "experiment", "--config", cfg_path, "--out", str(tmp_path / "res"),
    ])
    assert code == cli.EXIT_OK
    assert (tmp_path / "res" / "counterproductive.csv").exists()
    assert (tmp_path / "res" / "counterproductive_bounds.json").exists()


def test_cli_experiment_bad_preset(capsys):
    code = cli.main(["experiment", "--preset", "not-a-preset"])
    assert code == cli.EXIT_CONFIG


def test_cli_experiment_requires_config_or_preset(capsys):
    code = cli.main(["experiment"])
    assert code == cli.EXIT_CONFIG


def test_cli_verify_bounds(tmp_path, capsys):
    cfg = {"experiment": "verify-bounds",
           "extra": {"n_instances": 2, "n_preconditioners": 3}}
    cfg_path = _write(tmp_path, "cfg.json", json.dumps(cfg))
    code = cli.main([
        "verify-bounds", "--config", cfg_path, "--preset", "",
        "--out", str(tmp_path / "vb"),
    ])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "bound violations: 0" in out


def test_cli_assumption_violation_exit_code(tmp_path, capsys):
    # a Gaussian model with an indefinite covariance trips the definiteness
    # check, which the CLI maps to the config exit code path for bad input;
    # a non-convex analyze run returns the assumption exit code instead
    path = _write(
        tmp_path, "bad.txt",
        "model: gaussian\nmatrix sigma 2:\n1.0,0.0\n0.0,-1.0\n",
    )
    code = cli.main(["analyze", "--config", path])
    assert code in (cli.EXIT_CONFIG, cli.EXIT_ASSUMPTION)
    assert code != cli.EXIT_OK


def test_cli_seed_override_changes_rows(tmp_path):
    cfg = {
        "experiment": "counterproductive", "dims": [5], "chains_per_cell": 1,
        "burn_in": 0, "measure": 300,
    }
    cfg_path = _write(tmp_path, "cfg.json", json.dumps(cfg))
    assert cli.main([
        "experiment", "--config", cfg_path, "--seed", "1",
        "--out", str(tmp_path / "s1"),
    ]) == cli.EXIT_OK
    assert cli.main([
        "experiment", "--config", cfg_path, "--seed", "2",
        "--out", str(tmp_path / "s2"),
    ]) == cli.EXIT_OK
    a = (tmp_path / "s1" / "counterproductive.csv").read_text()
    b = (tmp_path / "s2" / "counterproductive.csv").read_text()
    assert a != b
