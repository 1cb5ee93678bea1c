# tests/test_scenario_cli.py
import copy

import numpy as np
import orjson
import pandas as pd
import pytest
from click.testing import CliRunner

from cli import cli
from pricing.errors import ConfigError, ParameterError
from pricing.models import VasicekParams, vasicek_sigma
from pricing.scenario import load_scenario, resolve_path, scenario_from_dict
from scripts.figures import cmd_price, cmd_smile, cmd_vasicek_term, schema_line

from conftest import DELTA, KAPPA, THETA


def _write(tmp_path, document, name="scenario.json"):
    path = tmp_path / name
    path.write_bytes(orjson.dumps(document))
    return str(path)


def _last_record(output: str) -> dict:
    lines = [line for line in output.splitlines() if line.startswith("{")]
    assert lines, output
    return orjson.loads(lines[-1])


def _vasicek_sigma(T=0.5, Tbar=1.0, t=0.0):
    return vasicek_sigma(VasicekParams(KAPPA, THETA, DELTA), t, T, Tbar)


# --- Scenario loading ---


def test_bundled_scenarios_load():
    fig2 = load_scenario("fig2")
    assert fig2.model == "cir"
    assert len(fig2.T) == 4
    assert len(fig2.strikes) == 21
    assert fig2.strikes[0] == pytest.approx(-0.1)
    assert fig2.digest

    fig6 = load_scenario("fig6")
    assert [point["rho"] for point in fig6.sweep_points()] == [-0.7, -0.3, 0.3, 0.7]
    assert list(fig6.T) == pytest.approx([1 / 12, 0.25, 0.5, 0.75])
    assert len(fig6.sweep_points()) * len(fig6.T) == 16
    assert fig6.mc.paths == 100_000
    assert resolve_path("fig6.json").endswith("fig6.json")


def test_every_bundled_scenario_is_valid():
    for name in ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6"):
        scenario = load_scenario(name)
        assert scenario.name == name
        assert scenario.build_model() is not None


@pytest.mark.parametrize(
    "mutate",
    [
        lambda doc: doc["strikes"].update({"k_minus_x": [0.1, 0.0]}),
        lambda doc: doc["strikes"].update({"k_minus_x": []}),
        lambda doc: doc["times"].update({"t": 0.5}),
        lambda doc: doc["times"].update({"Tbar": 0.25}),
        lambda doc: doc.update({"engines": ["exact", "black76"]}),
        lambda doc: doc.pop("model"),
        lambda doc: doc.update({"state": {}}),
        lambda doc: doc["model"].update({"sweep": {"lambda": [0.1]}}),
        lambda doc: doc.update({"mc": {"paths": 1}}),
        lambda doc: doc.update({"quadrature": {"knots": 12}}),
    ],
)
def test_invalid_scenarios_raise_config_errors(vasicek_scenario, mutate):
    document = copy.deepcopy(vasicek_scenario)
    mutate(document)
    with pytest.raises(ConfigError):
        scenario_from_dict(document)


def test_invalid_model_parameters_are_reported(vasicek_scenario):
    document = copy.deepcopy(vasicek_scenario)
    document["model"]["params"]["kappa"] = -1.0
    with pytest.raises(ParameterError):
        scenario_from_dict(document)


def test_missing_scenario_file():
    with pytest.raises(ConfigError):
        resolve_path("no-such-scenario")


def test_overrides(vasicek_scenario):
    scenario = scenario_from_dict(vasicek_scenario)
    updated = scenario.with_overrides(seed=99, engine="exact", out="-")
    assert updated.mc.seed == 99
    assert updated.engines == ("exact",)
    assert updated.output == "-"
    assert scenario.with_overrides() is scenario
    with pytest.raises(ConfigError):
        scenario.with_overrides(engine="binomial")


def test_explicit_expansion_point(vasicek_scenario):
    document = copy.deepcopy(vasicek_scenario)
    document["state"] = {"x": -0.04}
    scenario = scenario_from_dict(document)
    assert scenario.point(scenario.build_model(), 0.0, 0.5, 1.0) == (-0.04, ())


def test_digest_tracks_the_document(vasicek_scenario):
    document = copy.deepcopy(vasicek_scenario)
    first = scenario_from_dict(document).digest
    document["strikes"]["k_minus_x"] = [0.0, 0.01]
    assert scenario_from_dict(document).digest != first


# --- Commands ---


def test_price_record(vasicek_scenario):
    record = cmd_price(scenario_from_dict(vasicek_scenario))
    assert record["status"] == "ok"
    assert record["engine"] == "sigma_bar0"
    assert record["implied_vol"] == pytest.approx(_vasicek_sigma(), abs=1e-8)
    assert record["flags"] == []


def test_smile_over_a_parameter_sweep():
    document = {
        "model": {
            "name": "fong-vasicek",
            "params": {"kappa1": 0.9, "theta1": 0.08, "kappa2": 0.9, "theta2": 0.08, "delta2": 0.28284271247461906, "rho": -0.7},
            "sweep": {"rho": [-0.7, 0.3]},
        },
        "state": {"y": [0.08, 0.08]},
        "times": {"t": 0.0, "T": 0.25, "Tbar": 2.0},
        "strikes": {"k_minus_x": [-0.02, 0.0, 0.02]},
        "engines": ["exact", "sigma_bar0", "sigma_bar1", "sigma_bar2"],
    }
    frame = cmd_smile(scenario_from_dict(document), write=False)
    assert len(frame) == 6
    assert list(frame["rho"]) == [-0.7] * 3 + [0.3] * 3
    assert frame["sigma_exact"].isna().all()
    assert all("exact_unavailable" in flags for flags in frame["flags"])
    assert (frame["sigma_bar2"] > 0).all()


def test_smile_with_monte_carlo_columns():
    document = {
        "model": {"name": "cir", "params": {"kappa": KAPPA, "theta": THETA, "delta": DELTA}},
        "state": {"y": [0.08]},
        "times": {"t": 0.0, "T": 0.5, "Tbar": 2.0},
        "strikes": {"k_minus_x": [0.0]},
        "engines": ["exact", "mc"],
        "mc": {"paths": 4000, "block_size": 2000, "seed": 3, "max_workers": 1},
    }
    frame = cmd_smile(scenario_from_dict(document), write=False)
    row = frame.iloc[0]
    assert {"price_mc", "stderr_mc", "sigma_mc"} <= set(frame.columns)
    assert row["stderr_mc"] > 0
    assert abs(row["sigma_mc"] - row["sigma_exact"]) < 0.1 * row["sigma_exact"]


def test_vasicek_term_matches_closed_form():
    document = {
        "model": {"name": "vasicek", "params": {"kappa": KAPPA, "theta": THETA, "delta": DELTA}},
        "state": {"y": [0.08]},
        "times": {"t": [0.0, 0.25, 0.45], "T": 0.5, "Tbar": [0.5, 1.0, 3.0]},
        "strikes": {"k_minus_x": [0.0]},
        "engines": ["sigma_bar0"],
    }
    frame = cmd_vasicek_term(scenario_from_dict(document), write=False)
    assert len(frame) == 9
    np.testing.assert_allclose(frame["sigma0_numeric"], frame["sigma"], atol=1e-10)
    assert (frame.loc[frame["Tbar"] == 0.5, "sigma"] == 0.0).all()


# --- CLI ---


def test_cli_price_writes_a_json_record(tmp_path, vasicek_scenario):
    result = CliRunner().invoke(cli, ["price", "--config", _write(tmp_path, vasicek_scenario)])
    assert result.exit_code == 0, result.output
    record = _last_record(result.output)
    assert record["status"] == "ok"
    assert record["implied_vol"] == pytest.approx(_vasicek_sigma(), abs=1e-8)


def test_cli_price_to_file(tmp_path, vasicek_scenario):
    out = tmp_path / "price.json"
    result = CliRunner().invoke(
        cli, ["price", "--config", _write(tmp_path, vasicek_scenario), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert orjson.loads(out.read_bytes())["engine"] == "sigma_bar0"


def test_cli_smile_writes_versioned_csv(tmp_path, vasicek_scenario):
    document = copy.deepcopy(vasicek_scenario)
    document["strikes"]["k_minus_x"] = [-0.02, 0.0, 0.02]
    document["engines"] = ["exact", "sigma_bar0"]
    out = tmp_path / "out" / "smile.csv"
    result = CliRunner().invoke(cli, ["smile", "--config", _write(tmp_path, document), "--out", str(out)])
    assert result.exit_code == 0, result.output

    first_line = out.read_text().splitlines()[0]
    digest = scenario_from_dict(document).digest
    assert first_line == schema_line("smile", digest)
    frame = pd.read_csv(out, skiprows=1)
    assert list(frame["k_minus_x"]) == [-0.02, 0.0, 0.02]
    np.testing.assert_allclose(frame["sigma_exact"], frame["sigma_bar0"], atol=1e-5)


def test_cli_vasicek_term(tmp_path, vasicek_scenario):
    document = copy.deepcopy(vasicek_scenario)
    document["times"] = {"t": [0.0, 0.3], "T": 0.5, "Tbar": [1.0, 5.0]}
    out = tmp_path / "term.csv"
    result = CliRunner().invoke(
        cli, ["vasicek-term", "--config", _write(tmp_path, document), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out, skiprows=1)
    assert list(frame.columns) == ["Tbar", "t", "T", "sigma", "sigma0_numeric"]
    np.testing.assert_allclose(frame["sigma"], [_vasicek_sigma(0.5, 1.0, 0.0), _vasicek_sigma(0.5, 1.0, 0.3),
                                                _vasicek_sigma(0.5, 5.0, 0.0), _vasicek_sigma(0.5, 5.0, 0.3)])


def test_cli_error_surface_without_exact_engine_fails():
    result = CliRunner().invoke(cli, ["error-surface", "--config", "fig6"])
    assert result.exit_code == 1
    record = _last_record(result.output)
    assert record["status"] == "error"
    assert record["error"] == "engine_unavailable"


@pytest.mark.parametrize(
    "args",
    [
        ["price", "--config", "does-not-exist.json"],
        ["smile", "--config", "fig2", "--engine", "black76"],
    ],
)
def test_cli_configuration_errors(args):
    result = CliRunner().invoke(cli, args)
    assert result.exit_code == 1
    assert _last_record(result.output)["error"] == "invalid_config"


def test_cli_requires_config():
    result = CliRunner().invoke(cli, ["smile"])
    assert result.exit_code == 2
