import math

import pytest
from fastapi.testclient import TestClient

from jlcert._version import __version__
from jlcert.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_sample_deterministic(client):
    payload = {"family": "SparseKN", "m": 8, "d": 32, "sparsity": 4, "seed": 11}
    a = client.post("/sample", json=payload).json()
    b = client.post("/sample", json=payload).json()
    assert a == b
    assert a["instance"]["family"] == "SparseKN"
    assert a["instance"]["scale"] == 4.0
    assert a["planned_gates"] <= 4 * 32


def test_sample_rejects_bad_family(client):
    resp = client.post(
        "/sample", json={"family": "Nope", "m": 4, "d": 8, "seed": 0}
    )
    assert resp.status_code == 400
    assert "family" in resp.json()["detail"]


def test_sample_rejects_malformed_payload(client):
    resp = client.post("/sample", json={"family": "Kac", "m": "x", "d": 8})
    assert resp.status_code == 422


def test_spectra_instance_mode(client):
    resp = client.post(
        "/spectra",
        json={
            "instance": {"family": "DenseRademacher", "m": 4, "d": 8, "seed": 3},
            "epsilon": 0.25,
            "delta": 1.0 / 36.0,
            "exact_delta": True,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["m"] == 4 and body["d"] == 8 and body["scale"] == 4.0
    assert body["trace"] == pytest.approx(32.0, rel=1e-9)
    assert len(body["eigenvalues"]) == 4
    assert body["exact_delta"] > 0
    assert body["ops_lb"] >= 0.0
    assert body["t_param"] == pytest.approx(4 * 0.0625 / math.log(36.0))


def test_spectra_matrix_mode(client):
    resp = client.post(
        "/spectra",
        json={"matrix": [[1.0, 1.0], [1.0, -1.0]], "scale": 2.0, "exact_delta": True},
    )
    body = resp.json()
    assert resp.status_code == 200
    assert body["eigenvalues"] == pytest.approx([2.0, 2.0])
    assert body["exact_delta"] == pytest.approx(2.0)
    assert body["det_log_lb"] == pytest.approx(math.log(2.0))


def test_spectra_input_mode_is_exclusive(client):
    assert client.post("/spectra", json={}).status_code == 400
    both = {
        "instance": {"family": "Kac", "m": 2, "d": 4, "steps": 0, "seed": 0},
        "matrix": [[1.0]],
    }
    assert client.post("/spectra", json=both).status_code == 400
    with_scale = {
        "instance": {"family": "Kac", "m": 2, "d": 4, "steps": 0, "seed": 0},
        "scale": 2.0,
    }
    assert client.post("/spectra", json=with_scale).status_code == 400


def test_spectra_exact_delta_cap(client):
    resp = client.post(
        "/spectra",
        json={"matrix": [[1.0] * 9], "exact_delta": True},
    )
    assert resp.status_code == 400


def test_distortion_endpoint(client):
    resp = client.post(
        "/distortion",
        json={
            "instance": {"family": "Kac", "m": 6, "d": 6, "steps": 0, "seed": 0},
            "epsilon": 0.01,
            "samples": 100,
            "distribution": "basis",
            "seed": 5,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["failure_rate"] == 0.0
    assert body["failure_count"] == 0
    assert body["distribution"] == "basis_vectors"
    assert body["sample_count"] == 100
    assert 0.0 < body["half_width"] < 0.05


def test_certify_endpoint_passes_for_real_families(client):
    resp = client.post(
        "/certify",
        json={"instance": {"family": "FastJL", "m": 8, "d": 16, "q": 0.5, "seed": 3}},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is True
    assert body["coeff_ok"] is True
    assert body["op_count"] >= body["ops_lb"]


def test_certify_reports_violation_as_data(client, monkeypatch):
    import jlcert.service as svc

    real = svc.certify_instance

    def sabotaged(instance, epsilon, delta, **kw):
        report, gates, coeff_ok = real(instance, epsilon, delta, **kw)
        return report, 0, coeff_ok

    monkeypatch.setattr(svc, "certify_instance", sabotaged)
    resp = client.post(
        "/certify",
        json={"instance": {"family": "DenseRademacher", "m": 4, "d": 8, "seed": 1}},
    )
    assert resp.status_code == 200
    assert resp.json()["passed"] is False


def test_bench_endpoint(client):
    resp = client.post(
        "/bench",
        json={
            "instance": {"family": "DenseRademacher", "m": 8, "d": 32, "seed": 2},
            "repetitions": 3,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["median_seconds"] > 0
    assert body["ops"] == 8 * 31
    # schema floor on repetitions
    resp = client.post(
        "/bench",
        json={
            "instance": {"family": "DenseRademacher", "m": 8, "d": 32, "seed": 2},
            "repetitions": 2,
        },
    )
    assert resp.status_code == 422


def test_run_endpoint_small_config(client):
    config = {
        "families": ["DenseRademacher", "Kac"],
        "cells": [[4, 8]],
        "epsilon": 0.25,
        "delta": 1.0 / 36.0,
        "trials": 2,
        "base_seed": 7,
        "distortion_samples": 30,
    }
    resp = client.post("/run", json={"config": config})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 4
    families = {r["family"] for r in body["rows"]}
    assert families == {"DenseRademacher", "Kac"}
    assert body["meta"]["schema"] == "jlcert-meta-v1"
    assert body["meta"]["config"]["output_dir"] is None
    for row in body["rows"]:
        assert row["op_count"] >= row["ops_lb"]


def test_run_endpoint_rejects_bad_config(client):
    resp = client.post("/run", json={"config": {"families": ["DenseRademacher"]}})
    assert resp.status_code == 400 or resp.status_code == 422


def test_run_endpoint_maps_certification_error_to_409(client, monkeypatch):
    import jlcert.service as svc
    from jlcert.harness import CertificationError

    def explode(config):
        raise CertificationError("sabotaged run")

    monkeypatch.setattr(svc, "run_experiment", explode)
    config = {
        "families": ["DenseRademacher"],
        "cells": [[4, 8]],
        "epsilon": 0.25,
        "delta": 1.0 / 36.0,
        "trials": 1,
        "base_seed": 7,
    }
    resp = client.post("/run", json={"config": config})
    assert resp.status_code == 409
    assert "sabotaged" in resp.json()["detail"]
