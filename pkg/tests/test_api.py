# tests/test_api.py
import copy
import os

import orjson
import pytest

from app import create_app
from config import Config
from pricing.affine import bond_price
from pricing.models import CIRModel, CIRParams, VasicekParams, vasicek_sigma

from conftest import DELTA, KAPPA, THETA, Y0

CIR_BODY = {
    "model": {"name": "cir", "params": {"kappa": KAPPA, "theta": THETA, "delta": DELTA}},
    "state": {"t": 0.0, "y": [Y0]},
    "T": 1.0,
}


@pytest.fixture
def client():
    app = create_app()
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.get_json()["status"] == "ok"


def test_bond_price(client):
    response = client.post("/api/bond", json=CIR_BODY)
    assert response.status_code == 200
    payload = response.get_json()
    model = CIRModel(CIRParams(KAPPA, THETA, DELTA))
    assert payload["model"] == "cir"
    assert payload["price"] == pytest.approx(bond_price(model, model.state(0.0, [Y0]), 1.0), rel=1e-14)


def test_bond_request_without_maturity(client):
    body = copy.deepcopy(CIR_BODY)
    body.pop("T")
    response = client.post("/api/bond", json=body)
    assert response.status_code == 400
    assert response.get_json()["error"] == "invalid_config"


def test_bond_request_with_invalid_parameters(client):
    body = copy.deepcopy(CIR_BODY)
    body["model"]["params"]["delta"] = -0.1
    response = client.post("/api/bond", json=body)
    assert response.status_code == 400
    assert response.get_json()["error"] == "invalid_parameters"


def test_bond_state_outside_domain(client):
    body = copy.deepcopy(CIR_BODY)
    body["state"]["y"] = [-0.01]
    response = client.post("/api/bond", json=body)
    assert response.status_code == 422
    assert response.get_json()["error"] == "state_outside_domain"


def test_price(client, vasicek_scenario):
    response = client.post("/api/price", json=vasicek_scenario)
    assert response.status_code == 200
    payload = response.get_json()
    expected = vasicek_sigma(VasicekParams(KAPPA, THETA, DELTA), 0.0, 0.5, 1.0)
    assert payload["status"] == "ok"
    assert payload["implied_vol"] == pytest.approx(expected, abs=1e-8)


def test_price_with_unavailable_engine(client, vasicek_scenario):
    body = copy.deepcopy(vasicek_scenario)
    body["model"] = {
        "name": "fong-vasicek",
        "params": {"kappa1": 0.9, "theta1": 0.08, "kappa2": 0.9, "theta2": 0.08, "delta2": 0.3, "rho": 0.3},
    }
    body["state"] = {"y": [0.08, 0.08]}
    body["engines"] = ["exact"]
    response = client.post("/api/price", json=body)
    assert response.status_code == 422
    assert response.get_json()["error"] == "engine_unavailable"


def test_smile(client, vasicek_scenario):
    body = copy.deepcopy(vasicek_scenario)
    body["strikes"]["k_minus_x"] = [-0.02, 0.0, 0.02]
    response = client.post("/api/smile", json=body)
    assert response.status_code == 200
    rows = response.get_json()["rows"]
    assert [row["k_minus_x"] for row in rows] == [-0.02, 0.0, 0.02]
    assert all(row["sigma_exact"] is None for row in rows)
    assert all(row["sigma_bar0"] > 0 for row in rows)


def test_unknown_endpoint(client):
    response = client.get("/api/options/greeks")
    assert response.status_code == 404
    assert response.get_json()["status"] == "error"


def test_non_json_body(client):
    response = client.post("/api/smile", data="not json", content_type="text/plain")
    assert response.status_code == 400
    assert response.get_json()["error"] == "invalid_config"


def test_deploy_env_only_sets_known_settings():
    path = os.path.join(os.path.dirname(__file__), "..", "vercel.json")
    with open(path, "rb") as handle:
        deploy = orjson.loads(handle.read())
    assert set(deploy["env"]) <= set(vars(Config))
    assert {route["dest"] for route in deploy["routes"]} == {"app.py"}
    assert deploy["builds"][0]["config"]["includeFiles"] == "scenarios/**"


def test_app_carries_no_session_secret():
    assert create_app().config["SECRET_KEY"] is None
