import io
import time
from datetime import date, timedelta

import numpy as np
import pytest
from fastapi.testclient import TestClient

from eventcast.series import write_series_csv
from eventcast.service import create_app
from eventcast.simulation import SynthConfig, generate_synthetic

HORIZON = 10
TRAIN_PARAMS = {
    "order": {"p": 1, "d": 0, "q": 0, "P": 0, "D": 0, "Q": 0, "m": 1},
    "transform": "log",
}


def _synthetic_csv(tmp_path, length=200, seed=5):
    series, calendar, _ = generate_synthetic(SynthConfig(length=length, seed=seed))
    path = tmp_path / "series.csv"
    write_series_csv(series, path)
    events = [
        {"date": r.day.isoformat(), "type": r.event_type, "subtype": r.subtype, "scale": r.scale}
        for r in calendar.records
    ]
    return path.read_text(), events, series


@pytest.fixture()
def client(tmp_path):
    app = create_app(str(tmp_path / "store.json"))
    return TestClient(app)


@pytest.fixture()
def trained(client, tmp_path):
    csv_text, events, series = _synthetic_csv(tmp_path)
    response = client.post("/datasets", params={"name": "demo", "target": "sales"}, content=csv_text)
    assert response.status_code == 201
    dataset_id = response.json()["id"]
    assert client.post("/calendar", json=events).status_code == 201
    response = client.post(
        "/train",
        json={"family": "arima", "dataset_id": dataset_id, "params": TRAIN_PARAMS},
    )
    assert response.status_code == 201
    return client, dataset_id, response.json()["id"], series


class TestDatasets:
    def test_upload_ok(self, client, tmp_path):
        csv_text, _, _ = _synthetic_csv(tmp_path)
        response = client.post("/datasets", params={"name": "d", "target": "sales"}, content=csv_text)
        assert response.status_code == 201
        body = response.json()
        assert body["n"] == 200

    def test_gap_rejected_naming_first_missing_date(self, client):
        csv_text = "date,value\n2024-01-01,5\n2024-01-03,6\n"
        response = client.post("/datasets", params={"name": "gap"}, content=csv_text)
        assert response.status_code == 422
        assert "2024-01-02" in response.json()["message"]

    def test_bad_target(self, client):
        response = client.post("/datasets", params={"name": "x", "target": "revenue"}, content="date,value\n")
        assert response.status_code == 400

    def test_fetch_back_parsed_values(self, client, tmp_path):
        csv_text, _, series = _synthetic_csv(tmp_path)
        dataset_id = client.post(
            "/datasets", params={"name": "d2", "target": "sales"}, content=csv_text
        ).json()["id"]
        listing = client.get("/datasets").json()["datasets"]
        assert any(d["id"] == dataset_id for d in listing)
        body = client.get(f"/datasets/{dataset_id}").json()
        assert body["dates"][0] == series.start.isoformat()
        np.testing.assert_allclose(body["values"], series.values)
        assert client.get("/datasets/absent").status_code == 404


class TestTrain:
    def test_unknown_family(self, trained):
        client, dataset_id, _, _ = trained
        response = client.post("/train", json={"family": "lstm", "dataset_id": dataset_id})
        assert response.status_code == 400
        assert response.json()["field_path"].endswith("family")

    def test_unknown_dataset(self, client):
        response = client.post("/train", json={"family": "arima", "dataset_id": "nope"})
        assert response.status_code == 404

    def test_idempotent_same_id(self, trained):
        client, dataset_id, model_id, _ = trained
        again = client.post(
            "/train", json={"family": "arima", "dataset_id": dataset_id, "params": TRAIN_PARAMS}
        )
        assert again.status_code == 200
        assert again.json()["id"] == model_id

    def test_record_retrievable(self, trained):
        client, dataset_id, model_id, _ = trained
        record = client.get(f"/models/{model_id}").json()
        assert record["family"] == "arima"
        assert record["dataset_id"] == dataset_id
        assert record["artifact"]["family"] == "arima"


class TestModelCrud:
    def test_list_after_two_trainings(self, trained, tmp_path):
        client, dataset_id, _, _ = trained
        second = client.post(
            "/train",
            json={"family": "gam", "dataset_id": dataset_id, "params": {}},
        )
        assert second.status_code == 201
        models = client.get("/models").json()["models"]
        assert len(models) == 2
        assert all("artifact" not in m for m in models)

    def test_delete_then_fetch_404(self, trained):
        client, _, model_id, _ = trained
        assert client.delete(f"/models/{model_id}").status_code == 204
        assert client.get(f"/models/{model_id}").status_code == 404
        assert client.delete(f"/models/{model_id}").status_code == 404


class TestForecast:
    def test_horizon_pairs(self, trained):
        client, _, model_id, _ = trained
        response = client.post("/forecast", json={"model_id": model_id, "horizon": 30})
        assert response.status_code == 200
        body = response.json()
        assert len(body["dates"]) == 30 and len(body["values"]) == 30
        assert body["covariates"]["columns"]
        assert len(body["covariates"]["rows"]) == 30

    def test_zero_horizon_rejected(self, trained):
        client, _, model_id, _ = trained
        response = client.post("/forecast", json={"model_id": model_id, "horizon": 0})
        assert response.status_code == 400
        assert "horizon" in response.json()["field_path"]

    def test_deterministic_repeat(self, trained):
        client, _, model_id, _ = trained
        a = client.post("/forecast", json={"model_id": model_id, "horizon": 14})
        b = client.post("/forecast", json={"model_id": model_id, "horizon": 14})
        assert a.json() == b.json()

    def test_unknown_model(self, client):
        assert client.post("/forecast", json={"model_id": "missing"}).status_code == 404


class TestSimulate:
    def test_identical_scenarios_delta_zero(self, trained):
        client, _, model_id, _ = trained
        body = {
            "model_id": model_id,
            "horizon": HORIZON,
            "baseline": {"name": "base", "events": []},
            "alternative": {"name": "same", "events": []},
        }
        started = time.perf_counter()
        response = client.post("/simulate", json=body)
        elapsed = time.perf_counter() - started
        assert response.status_code == 200
        payload = response.json()
        assert payload["alternative"]["delta_vs_baseline"] == 0.0
        assert payload["baseline"]["values"] == payload["alternative"]["values"]
        assert elapsed < 5.0

    def test_added_event_positive_delta(self, trained):
        client, _, model_id, series = trained
        event_day = (series.end + timedelta(days=4)).isoformat()
        body = {
            "model_id": model_id,
            "horizon": HORIZON,
            "baseline": {"name": "base", "events": []},
            "alternative": {
                "name": "boost",
                "events": [{"date": event_day, "type": "gacha", "scale": 4}],
            },
        }
        response = client.post("/simulate", json=body)
        assert response.status_code == 200
        assert response.json()["alternative"]["delta_vs_baseline"] > 0.0

    def test_malformed_scenario_field_path(self, trained):
        client, _, model_id, _ = trained
        body = {
            "model_id": model_id,
            "horizon": HORIZON,
            "baseline": {"name": "base", "events": "not-a-list"},
            "alternative": {"name": "x", "events": []},
        }
        response = client.post("/simulate", json=body)
        assert response.status_code == 400
        assert "baseline" in response.json()["field_path"]

    def test_event_outside_window_mismatch(self, trained):
        client, _, model_id, series = trained
        body = {
            "model_id": model_id,
            "horizon": HORIZON,
            "baseline": {"name": "base", "events": []},
            "alternative": {
                "name": "late",
                "events": [
                    {
                        "date": (series.end + timedelta(days=HORIZON + 5)).isoformat(),
                        "type": "gacha",
                        "scale": 1,
                    }
                ],
            },
        }
        response = client.post("/simulate", json=body)
        assert response.status_code == 422


class TestCalendar:
    def test_duplicate_event_conflict(self, client):
        events = [{"date": "2024-02-01", "type": "gacha", "subtype": "", "scale": 2}]
        assert client.post("/calendar", json=events).status_code == 201
        assert client.post("/calendar", json=events).status_code == 409

    def test_range_query(self, client):
        events = [
            {"date": "2024-02-01", "type": "gacha", "subtype": "", "scale": 2},
            {"date": "2024-03-01", "type": "holiday", "subtype": "", "scale": 0},
        ]
        client.post("/calendar", json=events)
        got = client.get("/calendar", params={"from": "2024-02-15", "to": "2024-03-15"}).json()
        assert [e["type"] for e in got["events"]] == ["holiday"]


class TestPersistence:
    def test_restart_reproduces_forecasts(self, tmp_path):
        store_path = str(tmp_path / "persist.json")
        csv_text, events, _ = _synthetic_csv(tmp_path, seed=11)
        first = TestClient(create_app(store_path))
        dataset_id = first.post(
            "/datasets", params={"name": "p", "target": "sales"}, content=csv_text
        ).json()["id"]
        first.post("/calendar", json=events)
        model_id = first.post(
            "/train", json={"family": "arima", "dataset_id": dataset_id, "params": TRAIN_PARAMS}
        ).json()["id"]
        before = first.post("/forecast", json={"model_id": model_id, "horizon": 30}).json()

        second = TestClient(create_app(store_path))  # fresh process state
        after = second.post("/forecast", json={"model_id": model_id, "horizon": 30}).json()
        assert before == after

    def test_read_endpoints_do_not_mutate_store(self, trained):
        client, _, model_id, _ = trained
        store = client.app.state.store
        before = store.content_hash()
        client.get("/models")
        client.get(f"/models/{model_id}")
        client.post("/forecast", json={"model_id": model_id, "horizon": 5})
        client.get("/calendar")
        assert store.content_hash() == before
