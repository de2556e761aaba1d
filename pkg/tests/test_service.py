"""HTTP service contract over frozen artifacts."""

import pytest
from fastapi.testclient import TestClient

from nutribundle import graph, model, physiology, training
from nutribundle.catalog import write_dataset
from nutribundle.runtime import load_artifacts, request_seed
from nutribundle.service import create_app


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory, small_dataset, small_graph):
    root = tmp_path_factory.mktemp("service")
    data_dir = str(root / "data")
    graph_path = str(root / "graph.json")
    ckpt_path = str(root / "ckpt.json")
    write_dataset(small_dataset, data_dir)
    graph.save_graph(small_graph, small_dataset, graph_path)
    targets = [physiology.targets(u) for u in small_dataset.users]
    cfg = training.TrainConfig(epochs=5, batch_size=64, seed=11)
    params, _ = training.train(small_graph, small_dataset, targets, cfg)
    model.save_checkpoint(params, {"seed": 11}, ckpt_path)
    return load_artifacts(data_dir, graph_path, ckpt_path)


@pytest.fixture(scope="module")
def client(artifacts):
    return TestClient(create_app(artifacts))


VALID = {
    "profile": {
        "age": 30,
        "sex": "male",
        "weight": 80,
        "height": 180,
        "activity": "moderate",
        "goal": "gain",
    },
    "overrides": {"seed": 7},
}


def test_health_before_artifacts():
    bare = TestClient(create_app(None))
    assert bare.get("/api/health").json() == {"ready": False}


def test_recommend_without_artifacts_is_503():
    bare = TestClient(create_app(None))
    assert bare.post("/api/recommend", json=VALID).status_code == 503


def test_health_after_artifacts(client, small_dataset):
    doc = client.get("/api/health").json()
    assert doc["ready"] is True
    assert doc["products"] == len(small_dataset.products)
    assert client.get("/api/health").json() == doc  # idempotent


def test_config_defaults(client):
    doc = client.get("/api/config").json()
    assert doc["alpha"] == 0.10
    assert doc["lambda"] == 0.03
    assert doc["tolerance"] == 0.12
    assert doc["theta_sim"] == 0.5
    assert doc["quantity_domain"] == [1, 2, 3]
    assert doc["ranges"]["k"] == {"min": 5, "max": 10}


def test_recommend_deterministic_bytes(client):
    a = client.post("/api/recommend", json=VALID)
    b = client.post("/api/recommend", json=VALID)
    assert a.status_code == 200
    assert a.content == b.content


def test_recommend_totals_recompute_and_success_flag(client):
    doc = client.post("/api/recommend", json=VALID).json()
    total_cal = sum(i["quantity"] * i["cal"] for i in doc["items"])
    total_prot = sum(i["quantity"] * i["prot"] for i in doc["items"])
    assert total_cal == pytest.approx(doc["totals"]["cal"])
    assert total_prot == pytest.approx(doc["totals"]["prot"])
    t = doc["targets"]
    expected_success = (
        abs(total_cal - t["tdee"]) <= doc["tolerance"] * t["tdee"]
        and abs(total_prot - t["protein_target"]) <= doc["tolerance"] * t["protein_target"]
    )
    assert doc["success"] == expected_success
    assert doc["cold_start"] is True


def test_recommend_trace_capped(client):
    doc = client.post("/api/recommend", json=VALID).json()
    assert 0 < len(doc["trace"]) <= 100
    assert doc["trace"] == sorted(doc["trace"], reverse=True)


def test_invalid_age_is_400_with_field(client):
    body = {"profile": dict(VALID["profile"], age=5)}
    r = client.post("/api/recommend", json=body)
    assert r.status_code == 400
    errors = r.json()["errors"]
    assert any(e["field"] == "profile.age" for e in errors)
    assert any("13" in e["message"] for e in errors)


def test_invalid_override_is_400(client):
    body = dict(VALID, overrides={"k": 30})
    r = client.post("/api/recommend", json=body)
    assert r.status_code == 400
    assert any("overrides.k" == e["field"] for e in r.json()["errors"])


def test_overrides_respected(client):
    body = {"profile": VALID["profile"], "overrides": {"seed": 7, "k": 6, "quantity_max": 2, "tolerance": 0.08}}
    doc = client.post("/api/recommend", json=body).json()
    assert len(doc["items"]) == 6
    assert all(i["quantity"] <= 2 for i in doc["items"])
    assert doc["tolerance"] == 0.08
    assert doc["k"] == 6


def test_hash_seed_stable_without_explicit_seed(client):
    body = {"profile": dict(VALID["profile"], goal="loss")}
    a = client.post("/api/recommend", json=body)
    b = client.post("/api/recommend", json=body)
    assert a.content == b.content
    # the hash runs over the pydantic-normalized payload (floats coerced)
    normalized = {
        "profile": {"age": 30, "sex": "male", "weight": 80.0, "height": 180.0,
                    "activity": "moderate", "goal": "loss"},
        "overrides": None,
    }
    assert a.json()["seed"] == request_seed(normalized)


def test_concurrent_requests_match_serial(client):
    from concurrent.futures import ThreadPoolExecutor

    bodies = [
        dict(VALID, overrides={"seed": s}) for s in (1, 2, 3, 4)
    ]
    serial = [client.post("/api/recommend", json=b).content for b in bodies]
    with ThreadPoolExecutor(max_workers=4) as pool:
        concurrent = list(pool.map(lambda b: client.post("/api/recommend", json=b).content, bodies))
    assert concurrent == serial


def test_static_ui_mounted_when_dir_provided(tmp_path, artifacts):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>console</body></html>")
    app = create_app(artifacts, ui_dir=str(ui))
    c = TestClient(app)
    r = c.get("/")
    assert r.status_code == 200 and "console" in r.text
    assert c.get("/api/health").json()["ready"] is True  # API still wins over the mount


def test_targets_match_physiology(client, artifacts):
    doc = client.post("/api/recommend", json=VALID).json()
    from nutribundle.catalog import UserProfile

    profile = UserProfile("x", 30, "male", 80.0, 180.0, "moderate", "gain")
    t = physiology.targets(profile)
    assert doc["targets"]["tdee"] == pytest.approx(t.tdee)
    assert doc["targets"]["protein_target"] == pytest.approx(t.protein_target)
    assert doc["targets"]["eps_cal"] == pytest.approx(0.12 * t.tdee)
