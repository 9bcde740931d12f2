import pytest
from fastapi.testclient import TestClient

from main import app, API_MAX_HALF_SIZE


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "healthy"
    assert body["eigen_backend"] in ("lapack", "numpy")
    assert body["max_half_size"] == API_MAX_HALF_SIZE
    assert "numpy" in body["versions"]


def test_clsr_endpoint(client):
    response = client.post("/api/clsr", json={"points": [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]})
    assert response.status_code == 200
    body = response.json()
    assert body["mean_r"] == pytest.approx(0.5)
    assert body["count"] == 3


def test_clsr_duplicates_are_unprocessable(client):
    response = client.post("/api/clsr", json={"points": [[0, 0], [0, 0], [1, 0], [2, 0]]})
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "degenerate_spectrum"
    assert "jitter" in body["message"]


def test_clsr_needs_three_points(client):
    assert client.post("/api/clsr", json={"points": [[0, 0], [1, 0]]}).status_code == 422


def test_spectrum_endpoint_hermitian(client):
    response = client.post("/api/spectrum", json={"K": 5.0, "lambda": 0.0, "half_size": 16})
    assert response.status_code == 200
    body = response.json()
    assert body["dimension"] == 32
    assert body["pt_broken"] is False
    assert body["alpha"] < 1e-10
    assert body["phase_label"] in ("PT-integrable", "PT-chaotic")


def test_spectrum_endpoint_broken(client):
    body = client.post("/api/spectrum", json={"K": 5.0, "lambda": 0.05, "half_size": 16, "seed": 3}).json()
    assert body["alpha"] >= 0.0
    if body["pt_broken"]:
        assert body["phase_label"] == "PT-broken-chaotic"


def test_spectrum_size_limit(client):
    response = client.post("/api/spectrum", json={"K": 5.0, "half_size": API_MAX_HALF_SIZE + 1})
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "invalid_parameters"
    assert body["half_size"] == API_MAX_HALF_SIZE + 1


def test_spectrum_kick_overflow(client):
    response = client.post("/api/spectrum", json={"K": 2000.0, "lambda": 1.0, "half_size": 8})
    assert response.status_code == 422
    assert response.json()["code"] == "kick_amplitude_overflow"


def test_spectrum_rejects_unknown_fields(client):
    assert client.post("/api/spectrum", json={"K": 1.0, "kick": 2}).status_code == 422


def test_classify_endpoint(client):
    body = client.post("/api/classify", json={"clsr": 0.74, "alpha": 0.2}).json()
    assert body["phase_label"] == "PT-broken-chaotic"
    assert body["thresholds"]["clsr_threshold"] == pytest.approx(0.535)
    assert client.post("/api/classify", json={"clsr": 0.5, "alpha": 0.0}).json()["phase_label"] == "PT-integrable"


def test_rmt_endpoint(client):
    response = client.post("/api/rmt", json={"kind": "GinUE", "dim": 32, "trials": 2, "seed": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "ginue"
    assert len(body["per_trial_r"]) == 2
    assert 0.0 < body["mean_r"] < 1.0


def test_otoc_endpoint(client):
    response = client.post("/api/otoc", json={
        "params": {"K": 5.0, "lambda": 0.0, "half_size": 16},
        "wavepacket": {"k0": 0, "sigma": 2.0},
        "steps": 5,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["times"] == [0, 1, 2, 3, 4, 5]
    assert body["c_raw"][0] == 0.0
    assert body["norm"][0] == pytest.approx(1.0)
