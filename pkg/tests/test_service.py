import importlib
import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import pytest
from fastapi.testclient import TestClient

from app.errors import ResourceError
from app.vcgs import UNFOLD_STATE_BOUND


def reload_app(monkeypatch, **envs):
    for key in ["ENABLE_COMPILE", "ENABLE_CHECK", "CHECK_ISOLATION", "CHECK_TIMEOUT_SECONDS"]:
        monkeypatch.delenv(key, raising=False)
    for key, value in envs.items():
        monkeypatch.setenv(key, value)
    import app.main
    importlib.reload(app.main)
    return app.main


@pytest.fixture
def client(monkeypatch):
    return TestClient(reload_app(monkeypatch).app)


def test_public_health(client):
    res = client.get("/api/health-status/public")
    assert res.status_code == 200
    assert res.json() == {"status": "alive"}


def test_security_headers_present(client):
    res = client.get("/api/health-status/public")
    assert res.headers["X-Content-Type-Options"] == "nosniff"
    assert res.headers["X-Frame-Options"] == "DENY"
    assert res.headers["Referrer-Policy"] == "same-origin"
    assert "Strict-Transport-Security" in res.headers


def test_correlation_id_is_echoed(client):
    res = client.get("/api/health-status/public", headers={"X-Correlation-ID": "abc-123"})
    assert res.headers["X-Correlation-ID"] == "abc-123"
    assert client.get("/api/health-status/public").headers["X-Correlation-ID"]


def test_compile(client, data_dir):
    res = client.post("/api/compile", json={"model": (data_dir / "worked.icgs").read_text()})
    assert res.status_code == 200
    body = res.json()
    assert body["vcgs"] == (data_dir / "worked.vcgs").read_text()
    assert body["size"]["atoms"] == {"a": 3, "env": 4}


def test_compile_with_config(client, data_dir):
    res = client.post(
        "/api/compile",
        json={
            "model": (data_dir / "worked.icgs").read_text(),
            "config": {"initial_label_mode": "label-initial"},
        },
    )
    assert res.status_code == 200
    assert "init init.st.s0: T ~> st.s0 := T, st.s1 := F, cls.a.s0 := T, p := T;" in res.json()["vcgs"]


def test_compile_rejects_bad_input(client):
    res = client.post("/api/compile", json={"model": "agents a\n"})
    assert res.status_code == 400
    assert "line 1" in res.json()["detail"]


def test_check(client, data_dir):
    model = (data_dir / "gadget.icgs").read_text()
    res = client.post("/api/check", json={"model": model, "formula": "<<a>> X <<a>> X win"})
    assert res.status_code == 200
    assert res.json() == {
        "verdict": True,
        "states": {"q0": True},
        "witness": "a[lose]=L, a[q0]=L, a[q1]=L, a[win]=L",
    }

    res = client.post(
        "/api/check",
        json={"model": model, "formula": "<<a>> X <<a>> X win", "semantics": "subjective"},
    )
    assert res.json()["verdict"] is False


def test_check_atlstar_and_identity(client, data_dir):
    model = (data_dir / "gadget.icgs").read_text()
    body = {"model": model, "formula": "<<a>> X X win", "dialect": "atl*"}
    assert client.post("/api/check", json=body).json()["verdict"] is False
    body["identity"] = True
    assert client.post("/api/check", json=body).json()["verdict"] is True


def test_check_accepts_vcgs_models(client, data_dir):
    model = (data_dir / "worked.vcgs").read_text()
    res = client.post("/api/check", json={"model": model, "formula": "<<>> G true"})
    assert res.status_code == 200
    assert res.json()["verdict"] is True


def test_check_errors(client, data_dir):
    model = (data_dir / "gadget.icgs").read_text()
    res = client.post("/api/check", json={"model": model, "formula": "<<a>> X X win"})
    assert res.status_code == 400
    res = client.post("/api/check", json={"model": model, "formula": "<<a>> X ("})
    assert res.status_code == 400
    res = client.post("/api/check", json={"model": model, "formula": "win", "states": ["nowhere"]})
    assert res.status_code == 400


def test_check_resource_bound(client, data_dir):
    model = (data_dir / "worked.vcgs").read_text()
    res = client.post("/api/check", json={"model": model, "formula": "true", "bound": 1})
    assert res.status_code == 413


def test_check_bound_cannot_exceed_the_server_cap(client, data_dir):
    model = (data_dir / "worked.vcgs").read_text()
    res = client.post("/api/check", json={"model": model, "formula": "true", "bound": UNFOLD_STATE_BOUND + 1})
    assert res.status_code == 422
    res = client.post("/api/check", json={"model": model, "formula": "true", "bound": 0})
    assert res.status_code == 422


def test_metrics(client, data_dir):
    client.post(
        "/api/check",
        json={"model": (data_dir / "gadget.icgs").read_text(), "formula": "<<a>> X win"},
    )
    res = client.get("/metrics")
    assert res.status_code == 200
    assert "model_checks_total" in res.text
    assert "strategy_profiles_total" in res.text


# ---------------------------------------------------------------------------
# Feature toggles
# ---------------------------------------------------------------------------

def test_routes_enabled_by_default(monkeypatch):
    main = reload_app(monkeypatch)
    paths = [route.path for route in main.app.routes]
    assert "/api/compile" in paths
    assert "/api/check" in paths
    assert "/api/health-status/public" in paths


def test_routes_can_be_disabled(monkeypatch):
    main = reload_app(monkeypatch, ENABLE_COMPILE="0", ENABLE_CHECK="0")
    paths = [route.path for route in main.app.routes]
    assert "/api/compile" not in paths
    assert "/api/check" not in paths
    assert main.list_active_modules() == {"compile": False, "check": False, "isolation": False}
    assert "/internal/active-modules" not in main.app.openapi()["paths"]


def test_invalid_flag_value(monkeypatch):
    with pytest.raises(ValueError):
        reload_app(monkeypatch, ENABLE_CHECK="maybe")


def test_invalid_timeout(monkeypatch):
    with pytest.raises(RuntimeError):
        reload_app(monkeypatch, CHECK_TIMEOUT_SECONDS="0")


def test_isolated_check_timeout(monkeypatch, data_dir):
    main = reload_app(monkeypatch, CHECK_ISOLATION="1")

    def fake_timeout(func, timeout=5, max_memory=536870912):
        raise TimeoutError

    monkeypatch.setattr(main, "run_isolated", fake_timeout)
    client = TestClient(main.app)
    res = client.post(
        "/api/check",
        json={"model": (data_dir / "gadget.icgs").read_text(), "formula": "<<a>> X win"},
    )
    assert res.status_code == 504


def test_isolated_check_forwards_toolkit_errors(monkeypatch, data_dir):
    main = reload_app(monkeypatch, CHECK_ISOLATION="1")

    def fake_resource_error(func, timeout=5, max_memory=536870912):
        raise ResourceError("too many profiles", 1)

    monkeypatch.setattr(main, "run_isolated", fake_resource_error)
    client = TestClient(main.app)
    res = client.post(
        "/api/check",
        json={"model": (data_dir / "gadget.icgs").read_text(), "formula": "<<a>> X win"},
    )
    assert res.status_code == 413
