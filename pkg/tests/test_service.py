"""
Tests for the HTTP classification service.
"""

import http.client
import json
import threading
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from eurovoc_indexer.config import Config
from eurovoc_indexer.core import ClassifyRequest, classify_endpoint
from eurovoc_indexer.service import build_server

TEXT = "council regulation w1004a w1004b w1010c of the"


@pytest.fixture
def base_url(registry):
    """Running server on a free port."""
    server = build_server(registry, host="127.0.0.1", port=0, config=Config())
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


@pytest.fixture
def client(base_url):
    with httpx.Client(base_url=base_url, timeout=10.0) as c:
        yield c


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_models(client):
    models = client.get("/models").json()
    assert [m["language"] for m in models] == ["en"]
    assert models[0]["family"] == "legal"


def test_classify_round_trip(client, registry):
    response = client.post("/classify/en", json={"text": TEXT, "num_labels": 5})
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("application/json")
    expected = classify_endpoint(registry.get("en"), ClassifyRequest(TEXT, "ID", 5)).to_dict()
    assert list(response.json().items()) == list(expected.items())


def test_classify_uses_config_defaults(client):
    assert len(client.post("/classify/en", json={"text": TEXT}).json()) == 6
    assert set(client.post("/classify/en", json={"text": TEXT, "level": "DO", "num_labels": 2}).json()) == {
        "04", "12",
    }


def test_concurrent_requests_match_serial(client, base_url):
    bodies = [{"text": f"{TEXT} w10{i % 12 + 1:02d}a", "num_labels": 1 + i % 6} for i in range(50)]
    serial = [client.post("/classify/en", json=body).content for body in bodies]

    def send(body):
        with httpx.Client(base_url=base_url, timeout=10.0) as c:
            return c.post("/classify/en", json=body).content

    with ThreadPoolExecutor(max_workers=16) as pool:
        concurrent = list(pool.map(send, bodies))
    assert concurrent == serial


@pytest.mark.parametrize("path,body,status", [
    ("/classify/fr", {"text": TEXT}, 404),
    ("/classify/xx", {"text": TEXT}, 404),
    ("/classify/en", {"text": ""}, 400),
    ("/classify/en", {"text": TEXT, "level": "XX"}, 400),
    ("/classify/en", {"text": TEXT, "num_labels": 0}, 422),
    ("/classify/en", {"text": TEXT, "num_labels": 13}, 422),
    ("/classify/en", {"num_labels": 3}, 400),
    ("/predict", {"text": TEXT}, 404),
])
def test_error_statuses(client, path, body, status):
    response = client.post(path, json=body)
    assert response.status_code == status
    assert response.json()["status"] == status


def test_malformed_json(client):
    response = client.post(
        "/classify/en", content=b"{not json", headers={"Content-Type": "application/json"}
    )
    assert response.status_code == 400


def test_unknown_get_route(client):
    assert client.get("/nothing").status_code == 404


@pytest.mark.parametrize("length", ["abc", "-5", "1.5"])
def test_invalid_content_length(base_url, length):
    """Test that a bad Content-Length header is answered with 400 instead of hanging."""
    host, port = base_url.rsplit("/", 1)[-1].split(":")
    conn = http.client.HTTPConnection(host, int(port), timeout=10)
    try:
        conn.putrequest("POST", "/classify/en")
        conn.putheader("Content-Type", "application/json")
        conn.putheader("Content-Length", length)
        conn.endheaders()
        response = conn.getresponse()
        assert response.status == 400
        assert json.loads(response.read())["status"] == 400
    finally:
        conn.close()
