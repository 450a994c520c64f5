import pytest
from fastapi.testclient import TestClient

from cayleywalk import __version__
from cayleywalk.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def base_config(**overrides):
    doc = {
        "schema_version": 1,
        "presentation": {"k": 0, "r": 3},
        "env": {"family": "dirichlet", "alpha": [1.0, 1.0, 1.0]},
        "seeds": {"environment": 42, "trajectory": 7},
        "walk": {"steps": 500, "environments": 2, "trajectories": 3},
        "flow": {"delta": 0.6, "lengths": [10, 20], "samples": 150},
        "network": {"max_depth": 5},
        "speed": {"steps": 500, "environments": 2, "trajectories": 2},
        "assumptions": {"samples": 5000},
    }
    doc.update(overrides)
    return doc


class TestHealth:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "version": __version__}


class TestEndpoints:
    @pytest.mark.parametrize("command", [
        "simulate", "flow", "resistance", "speed", "check-assumptions"])
    def test_each_command_runs(self, client, command):
        response = client.post(f"/{command}", json={"config": base_config()})
        assert response.status_code == 200, response.text
        body = response.json()
        assert body["command"] == command
        assert body["verdict"]
        assert isinstance(body["summary"], dict)
        lines = body["csv"].splitlines()
        assert len(lines) >= 2  # header plus at least one row

    def test_csv_headers_match_contract(self, client):
        headers = {
            "simulate": "env_seed,traj_seed,steps,final_distance,max_distance,"
                        "returns_to_root,last_return_time",
            "flow": "n,samples,mean_log_phi_over_n,stderr,fraction_below,"
                    "flow_lower_bound",
            "resistance": "L,effective_conductance,escape_probability,"
                          "vertices_visited,wall_time_ms",
            "speed": "env_seed,traj_seed,steps,speed,martingale_over_n,"
                     "drift_over_n,floor,floor_ok",
        }
        for command, header in headers.items():
            body = client.post(f"/{command}", json={"config": base_config()}).json()
            assert body["csv"].splitlines()[0] == header

    def test_simulate_row_count(self, client):
        body = client.post("/simulate", json={"config": base_config()}).json()
        assert len(body["csv"].splitlines()) == 1 + 2 * 3

    def test_threads_field_accepted(self, client):
        a = client.post("/simulate", json={"config": base_config(), "threads": 1}).json()
        b = client.post("/simulate", json={"config": base_config(), "threads": 8}).json()
        assert a["csv"] == b["csv"]

    def test_flow_default_delta_is_midpoint(self, client):
        config = base_config()
        config["flow"] = {"lengths": [5], "samples": 100}
        body = client.post("/flow", json={"config": config}).json()
        assert body["summary"]["delta"] == pytest.approx(0.75)

    def test_invalid_presentation_names_location(self, client):
        config = base_config(presentation={"k": 0, "r": 1})
        response = client.post("/flow", json={"config": config})
        assert response.status_code == 422
        assert any("presentation" in str(item["loc"])
                   for item in response.json()["detail"])


class TestValidation:
    def test_unknown_key_names_location(self, client):
        config = base_config()
        config["walk"]["stepz"] = 10
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 422
        assert any("stepz" in str(item["loc"]) for item in response.json()["detail"])

    def test_wrong_schema_version(self, client):
        response = client.post("/simulate", json={"config": base_config(schema_version=2)})
        assert response.status_code == 422

    def test_bad_delta_names_interval(self, client):
        config = base_config()
        config["flow"]["delta"] = 0.3
        response = client.post("/flow", json={"config": config})
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail["code"] == "config_error"
        assert "(1/(d-1), 1)" in detail["message"]

    def test_missing_alpha(self, client):
        config = base_config(env={"family": "dirichlet"})
        response = client.post("/simulate", json={"config": config})
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "config_error"

    def test_budget_exceeded(self, client):
        config = base_config()
        config["network"] = {"max_depth": 25, "budget": 1000}
        response = client.post("/resistance", json={"config": config})
        assert response.status_code == 409
        assert response.json()["detail"]["code"] == "resource_budget"

    def test_zero_probability_environment_flagged(self, client):
        config = base_config(env={
            "family": "finite_points",
            "points": [[1.0, 0.0, 0.0]],
            "weights": [1.0],
        })
        response = client.post("/flow", json={"config": config})
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "assumption_violated"


class TestAssumptionReports:
    def test_a2_violation_reported_not_an_error(self, client):
        config = base_config(env={
            "family": "finite_points",
            "points": [[1.0, 0.0, 0.0]],
            "weights": [1.0],
        })
        response = client.post("/check-assumptions", json={"config": config})
        assert response.status_code == 200
        summary = response.json()["summary"]
        assert summary["a2_holds"] is False

    def test_elliptic_floor_speed_condition(self, client):
        config = base_config(env={"family": "elliptic_floor", "epsilon": 0.3})
        body = client.post("/check-assumptions", json={"config": config}).json()
        assert body["summary"]["a3_epsilon"] == 0.3
        assert body["summary"]["speed_condition_met"] is True

    def test_simple_symmetric_report(self, client):
        config = base_config(env={"family": "simple_symmetric"})
        body = client.post("/check-assumptions", json={"config": config}).json()
        assert body["summary"]["a2_holds"] is True
        assert body["summary"]["a3_epsilon"] == pytest.approx(1.0 / 3.0)
