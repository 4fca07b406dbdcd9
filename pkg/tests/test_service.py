"""Tests for the HTTP service endpoints."""

import math

import pytest
from fastapi.testclient import TestClient

from cvteleport.service import app, create_app

V0 = 0.25


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


class TestSimulate:
    def test_beamsplitter_report(self, client):
        resp = client.post("/simulate",
                           json={"protocol": "bs", "params": {"r": 1.0}})
        assert resp.status_code == 200
        body = resp.json()
        assert set(body) == {"protocol", "params", "signal_gain",
                             "noise_terms", "mse_x", "mse_y",
                             "is_teleportation", "signal_sign", "units"}
        assert body["protocol"] == "bs"
        assert body["signal_gain"] == [1.0, 0.0, 0.0, 1.0]
        assert body["mse_x"] == pytest.approx(2.0, abs=1e-10)
        assert body["mse_y"] == pytest.approx(2.0, abs=1e-10)
        assert body["is_teleportation"] is True
        assert body["signal_sign"] == [1, 1]
        assert body["units"] == "exp(-2r)*V0"
        coeff = math.sqrt(2.0) * math.exp(-1.0)
        assert body["noise_terms"] == [
            {"output": "x", "symbol": "x0_2",
             "coefficient": pytest.approx(-coeff, rel=1e-12)},
            {"output": "y", "symbol": "y0_1",
             "coefficient": pytest.approx(coeff, rel=1e-12)},
        ]

    def test_defaults_fill_missing_params(self, client):
        resp = client.post("/simulate", json={"protocol": "czcz"})
        assert resp.status_code == 200
        assert resp.json()["mse_x"] == pytest.approx(1.0, abs=1e-10)

    def test_absolute_units(self, client):
        resp = client.post("/simulate", json={"protocol": "bs",
                                              "params": {"r": 1.0},
                                              "absolute": True})
        body = resp.json()
        assert body["units"] == "absolute"
        assert body["mse_x"] == pytest.approx(
            2.0 * math.exp(-2.0) * V0, rel=1e-12)

    def test_non_teleportation_sign_is_null(self, client):
        resp = client.post("/simulate", json={
            "protocol": "czcz", "params": {"g1": 1.0, "g2": 2.0}})
        body = resp.json()
        assert body["is_teleportation"] is False
        assert body["signal_sign"] is None
        assert body["signal_gain"] == pytest.approx([-2.0, 0.0, 0.0, -0.5])

    def test_invalid_parameter_is_usage_error(self, client):
        resp = client.post("/simulate", json={
            "protocol": "czcz", "params": {"g1": 0.0}})
        assert resp.status_code == 400
        detail = resp.json()["detail"]
        assert detail["type"] == "usage"
        assert "non-zero" in detail["message"]

    def test_unknown_protocol_is_usage_error(self, client):
        resp = client.post("/simulate", json={"protocol": "epr"})
        assert resp.status_code == 400
        assert resp.json()["detail"]["type"] == "usage"

    def test_missing_body_fields_are_schema_errors(self, client):
        resp = client.post("/simulate", json={"params": {}})
        assert resp.status_code == 422


class TestSweep:
    def test_reflectivity_sweep(self, client):
        resp = client.post("/sweep", json={
            "protocol": "czcz-optical", "parameter": "reflectivity",
            "lo": 0.05, "hi": 0.9, "steps": 2})
        assert resp.status_code == 200
        body = resp.json()
        assert body["protocol"] == "czcz-optical"
        rows = body["rows"]
        assert len(rows) == 2
        assert [row["value"] for row in rows] == [0.05, 0.9]
        assert rows[0]["param"] == "reflectivity"
        assert rows[0]["mse_x"] == pytest.approx(
            (1.0 + 1.95 * 0.05 ** 2) / (0.95 ** 2 * 1.05), abs=1e-10)
        assert rows[0]["mse_y"] == pytest.approx(1.145 / 1.05, abs=1e-10)
        assert all(row["reference_level"] == 2.0 for row in rows)

    def test_grid_is_inclusive_linspace(self, client):
        resp = client.post("/sweep", json={
            "protocol": "czcz", "parameter": "g1",
            "lo": 1.0, "hi": 10.0, "steps": 10,
            "fixed": {"g2": -1.0}})
        rows = resp.json()["rows"]
        assert [row["value"] for row in rows] == pytest.approx(
            [1.0 + k for k in range(10)])
        # g2 fixed at -1 leaves mse_y pinned while mse_x drops as 1/g1^2.
        for row in rows:
            assert row["mse_x"] == pytest.approx(
                1.0 / row["value"] ** 2, rel=1e-10)

    def test_absolute_scales_reference_level(self, client):
        resp = client.post("/sweep", json={
            "protocol": "bs", "parameter": "r",
            "lo": 1.0, "hi": 2.0, "steps": 2, "absolute": True})
        rows = resp.json()["rows"]
        assert rows[0]["reference_level"] == pytest.approx(
            2.0 * math.exp(-2.0) * V0, rel=1e-12)
        assert rows[1]["reference_level"] == pytest.approx(
            2.0 * math.exp(-4.0) * V0, rel=1e-12)

    def test_inapplicable_parameter_is_usage_error(self, client):
        resp = client.post("/sweep", json={
            "protocol": "bs", "parameter": "reflectivity",
            "lo": 0.1, "hi": 0.9, "steps": 5})
        assert resp.status_code == 400
        assert resp.json()["detail"]["type"] == "usage"

    def test_single_step_is_schema_error(self, client):
        resp = client.post("/sweep", json={
            "protocol": "bs", "parameter": "r",
            "lo": 0.1, "hi": 0.9, "steps": 1})
        assert resp.status_code == 422


class TestCrossover:
    def test_default_threshold(self, client):
        resp = client.post("/crossover", json={})
        assert resp.status_code == 200
        body = resp.json()
        assert body["threshold"] == 2.0
        assert body["r_star"] == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_lower_threshold(self, client):
        resp = client.post("/crossover", json={"threshold": 1.5})
        assert resp.json()["r_star"] == pytest.approx(0.230098832798,
                                                      abs=1e-6)

    def test_unreachable_threshold_is_no_root(self, client):
        resp = client.post("/crossover", json={"threshold": 0.5})
        assert resp.status_code == 400
        assert resp.json()["detail"]["type"] == "no-root"


class TestValidate:
    def test_single_protocol_passes(self, client):
        request = {"shots": 40_000, "seed": 1234, "protocols": ["bs"]}
        resp = client.post("/validate", json=request)
        assert resp.status_code == 200
        body = resp.json()
        assert body["passed"] is True
        assert body["shots"] == 40_000
        assert len(body["results"]) == 1
        result = body["results"][0]
        assert result["protocol"] == "bs"
        assert result["passed"] is True
        assert result["exact_mse_x"] == pytest.approx(2.0, abs=1e-10)
        assert abs(result["mc_mse_x"] - 2.0) <= 3.0 * result["stderr_x"]
        # Identical request, identical bytes.
        again = client.post("/validate", json=request)
        assert again.json() == body

    def test_corrupted_gain_fails(self, client):
        resp = client.post("/validate", json={
            "shots": 40_000, "seed": 1234, "protocols": ["bs"],
            "corrupt_gain": 0.25})
        assert resp.status_code == 200
        assert resp.json()["passed"] is False

    def test_unknown_protocol_filter(self, client):
        resp = client.post("/validate", json={"protocols": ["epr"]})
        assert resp.status_code == 400
        assert resp.json()["detail"]["type"] == "usage"


def test_module_level_app_is_ready():
    with TestClient(app) as c:
        resp = c.post("/crossover", json={})
        assert resp.status_code == 200
