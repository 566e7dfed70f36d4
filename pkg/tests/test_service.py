import pytest

pytest.importorskip("fastapi")
pytest.importorskip("httpx")

from fastapi.testclient import TestClient

from n2super.grassmann import GrassmannElement
from n2super.service import app

client = TestClient(app)


def test_lists_commands():
    assert "verify-ns" in client.get("/commands").json()


def test_matches_cli_payload():
    res = client.post("/verify-ns", json={"window": 1})
    assert res.status_code == 200 and res.json() == {"pass": True, "pairs_checked": 144}


def test_domain_error():
    res = client.post("/gr-inv", json={"input": {"a": GrassmannElement.generator(1, 4).to_json()}})
    assert res.status_code == 409 and res.json()["detail"]["error"] == "NonInvertible"


def test_malformed():
    assert client.post("/gr-inv", json={}).status_code == 422
    assert client.post("/gr-inv", json={"gens": 99, "input": {}}).status_code == 422
    assert client.post("/no-such", json={}).status_code == 404
