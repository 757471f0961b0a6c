"""HTTP service contract, exercised through the ASGI test client."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hubrank import hubio
from hubrank.evidence import FeatureMatrix
from hubrank.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture
def hub(tmp_path):
    rng = np.random.default_rng(77)
    n = 40
    idx = rng.integers(0, 3, size=n)
    idx[:3] = [0, 1, 2]
    centers = rng.normal(size=(3, 6)) * 2.0
    hubio.write_class_indices(tmp_path / "labels.csv", idx)
    for name, noise in (("clean", 0.5), ("noisy", 3.0)):
        f = centers[idx] + noise * rng.normal(size=(n, 6))
        hubio.write_feature_file(tmp_path / f"{name}.ptmf", FeatureMatrix(f))
    hubio.write_manifest(
        tmp_path / "hub.json",
        {
            "dataset": "toy",
            "task": {"kind": "classification", "labels_file": "labels.csv", "num_classes": 3},
            "truth_direction": "higher_better",
            "models": [
                {"id": "clean", "feature_file": "clean.ptmf", "truth": 0.92},
                {"id": "noisy", "feature_file": "noisy.ptmf", "truth": 0.55},
            ],
        },
    )
    return tmp_path


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_logme_endpoint(client, hub):
    response = client.post(
        "/logme",
        json={
            "features_path": str(hub / "clean.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
        },
    )
    assert response.status_code == 200
    doc = response.json()
    assert doc["backend"] == "fixed_point"
    assert len(doc["per_dimension"]) == 3
    assert all(sol["converged"] for sol in doc["per_dimension"])
    mean = np.mean([sol["normalized_evidence"] for sol in doc["per_dimension"]])
    assert doc["logme"] == pytest.approx(mean, abs=1e-12)


def test_logme_head_dump_and_predict(client, hub):
    head_path = hub / "clean.head.json"
    response = client.post(
        "/logme",
        json={
            "features_path": str(hub / "clean.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
            "dump_head_path": str(head_path),
        },
    )
    assert response.status_code == 200
    assert head_path.exists()
    response = client.post(
        "/predict",
        json={"head_path": str(head_path), "features_path": str(hub / "noisy.ptmf")},
    )
    assert response.status_code == 200
    doc = response.json()
    assert len(doc["means"]) == 40
    assert all(v > 0 for row in doc["variances"] for v in row)


def test_rank_endpoint(client, hub):
    response = client.post("/rank", json={"manifest_path": str(hub / "hub.json"), "top_k": 1})
    assert response.status_code == 200
    doc = response.json()
    assert [m["id"] for m in doc["models"]] == ["clean", "noisy"]
    assert doc["models"][0]["rank"] == 1
    assert doc["tau"] == 1.0
    assert doc["tau_w"] == 1.0
    assert doc["top_k"] == ["clean"]


def test_backends_agree_through_api(client, hub):
    values = {}
    for backend in ("naive", "svd_optimized", "fixed_point"):
        response = client.post(
            "/logme",
            json={
                "features_path": str(hub / "clean.ptmf"),
                "labels_path": str(hub / "labels.csv"),
                "task_kind": "classification",
                "backend": backend,
            },
        )
        assert response.status_code == 200
        values[backend] = response.json()["logme"]
    assert max(values.values()) - min(values.values()) <= 1e-6


def test_curve_endpoint(client, hub):
    response = client.post(
        "/curve",
        json={
            "features_path": str(hub / "clean.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
            "points": 50,
            "t_min": 1e-2,
            "t_max": 1e2,
        },
    )
    assert response.status_code == 200
    doc = response.json()
    ts = [row[0] for row in doc["rows"]]
    assert ts == sorted(ts)
    assert len(ts) == 50
    assert doc["converged"]


def test_verify_endpoint(client, hub):
    response = client.post(
        "/verify",
        json={
            "features_path": str(hub / "clean.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
        },
    )
    assert response.status_code == 200
    doc = response.json()
    assert doc["n"] == 40
    assert all(d["guaranteed"] for d in doc["dimensions"])


def test_bench_endpoint_small(client):
    response = client.post(
        "/bench",
        json={"n": 120, "dim": 10, "num_classes": 3, "repeats": 1, "seed": 1},
    )
    assert response.status_code == 200
    doc = response.json()
    assert doc["max_disagreement"] <= 1e-6
    assert {t["backend"] for t in doc["backends"]} == {"naive", "svd_optimized", "fixed_point"}


def test_btune_endpoint(client):
    response = client.post(
        "/btune",
        json={
            "config": {
                "task": {"n_train": 40, "n_test": 30, "teacher_noise": [0.0], "student_noise": 0.5},
                "tune": {"lambda": 1.0, "steps": 30, "num_teachers": 1, "seed": 5},
            }
        },
    )
    assert response.status_code == 200
    doc = response.json()
    assert doc["metric_name"] == "accuracy"
    assert len(doc["loss_total"]) == 30
    assert doc["config"]["lambda"] == 1.0


def test_missing_file_maps_to_client_error(client, hub):
    response = client.post(
        "/logme",
        json={
            "features_path": str(hub / "absent.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
        },
    )
    assert response.status_code == 422
    doc = response.json()
    assert doc["error"] == "InputError"
    assert "no such file" in doc["detail"]


def test_degenerate_labels_map_to_conflict(client, hub, tmp_path):
    hubio.write_feature_file(tmp_path / "zeros.ptmf", FeatureMatrix(np.zeros((40, 2)) + 0.0))
    response = client.post(
        "/logme",
        json={
            "features_path": str(tmp_path / "zeros.ptmf"),
            "labels_path": str(hub / "labels.csv"),
            "task_kind": "classification",
        },
    )
    assert response.status_code == 409
    assert response.json()["error"] == "DegenerateLabelsError"


def test_validation_error_from_pydantic(client):
    response = client.post("/logme", json={"features_path": "x"})
    assert response.status_code == 422
