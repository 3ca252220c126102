import json

import pytest
import yaml
from click.testing import CliRunner
from fastapi.testclient import TestClient

from cieaudit.cli import main
from cieaudit.divergence import audit_set_size
from cieaudit.service import AuditSession, create_app
from test_experiment import TINY_CONFIG


@pytest.fixture(scope="module")
def exp_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("svcexp")
    cfg_path = out / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(TINY_CONFIG))
    result = CliRunner().invoke(main, ["experiment", "--config", str(cfg_path), "--out", str(out / "run")])
    assert result.exit_code == 0, result.output
    return out / "run"


def make_session(exp_out, data_dir, variant="pruned_0.9"):
    return AuditSession.load(
        score_file=exp_out / "scores" / f"{variant}.csv",
        predictions=exp_out / "ledger" / "predictions.csv",
        header=exp_out / "ledger" / "header.json",
        baseline_id="baseline", variant_id=variant,
        attributes=exp_out / "dataset" / "attributes.csv",
        train_fractions=exp_out / "dataset" / "train_fractions.json",
        data_dir=data_dir, rng_seed=0,
    )


@pytest.fixture
def client(exp_out, tmp_path):
    session = make_session(exp_out, tmp_path / "data")
    return TestClient(create_app(session))


class TestSession:
    def test_session_info(self, client):
        info = client.get("/session").json()
        assert info["baseline_id"] == "baseline"
        assert info["examples"] == 450
        assert "minority" in info["attributes"]
        assert info["has_truth"]


class TestExemplars:
    def test_percentile_count(self, client):
        body = client.get("/exemplars", params={"percentile": 99}).json()
        assert body["total"] == audit_set_size(450, 99)

    def test_slider_90_to_99_changes_count(self, client):
        c90 = client.get("/exemplars", params={"percentile": 90}).json()["total"]
        c99 = client.get("/exemplars", params={"percentile": 99}).json()["total"]
        assert c90 == 45 and c99 == 5

    def test_filter_is_subset(self, client):
        full = client.get("/exemplars", params={"percentile": 90}).json()
        filt = client.get("/exemplars", params={"percentile": 90, "attr": "minority"}).json()
        full_ids = {e["example_id"] for e in full["exemplars"]}
        filt_ids = {e["example_id"] for e in filt["exemplars"]}
        assert filt["total"] <= full["total"]
        assert all(e["attributes"]["minority"] for e in filt["exemplars"])

    def test_bad_percentile(self, client):
        assert client.get("/exemplars", params={"percentile": 101}).status_code == 422

    def test_stable_pagination_and_order(self, exp_out, tmp_path):
        s1 = make_session(exp_out, tmp_path / "d1")
        s2 = make_session(exp_out, tmp_path / "d2")
        c1, c2 = TestClient(create_app(s1)), TestClient(create_app(s2))
        p1 = c1.get("/exemplars", params={"percentile": 90, "page": 1}).json()
        p2 = c2.get("/exemplars", params={"percentile": 90, "page": 1}).json()
        assert [e["example_id"] for e in p1["exemplars"]] == [e["example_id"] for e in p2["exemplars"]]


class TestAnnotations:
    def test_read_your_writes(self, client):
        ex = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        resp = client.post("/annotations", json={
            "example_id": ex["example_id"], "auditor": "alice",
            "verdict": "mislabeled", "note": "looks wrong",
        })
        assert resp.status_code == 201
        back = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        assert back["annotation"]["verdict"] == "mislabeled"
        assert back["annotation"]["auditor"] == "alice"

    def test_supersede_with_history(self, client):
        ex = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        eid = ex["example_id"]
        client.post("/annotations", json={"example_id": eid, "auditor": "alice", "verdict": "ambiguous"})
        client.post("/annotations", json={"example_id": eid, "auditor": "alice", "verdict": "ok"})
        latest = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]["annotation"]
        assert latest["verdict"] == "ok"
        history = client.get(f"/annotations/history/{eid}").json()["history"]
        assert [a["verdict"] for a in history] == ["ambiguous", "ok"]

    def test_unknown_example_404(self, client):
        resp = client.post("/annotations", json={
            "example_id": "nope", "auditor": "a", "verdict": "ok"})
        assert resp.status_code == 404

    def test_bad_verdict_422(self, client):
        ex = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        resp = client.post("/annotations", json={
            "example_id": ex["example_id"], "auditor": "a", "verdict": "wat"})
        assert resp.status_code == 422

    def test_durable_across_restart(self, exp_out, tmp_path):
        data_dir = tmp_path / "persist"
        c1 = TestClient(create_app(make_session(exp_out, data_dir)))
        ex = c1.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        c1.post("/annotations", json={"example_id": ex["example_id"], "auditor": "bob", "verdict": "ok"})
        # new process simulated by reloading the session from disk
        c2 = TestClient(create_app(make_session(exp_out, data_dir)))
        back = c2.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        assert back["annotation"]["verdict"] == "ok"

    def test_export(self, client):
        ex = client.get("/exemplars", params={"percentile": 99}).json()["exemplars"][0]
        client.post("/annotations", json={
            "example_id": ex["example_id"], "auditor": "carol", "verdict": "ok", "note": "fine"})
        text = client.get("/annotations/export").text
        assert text.startswith("example_id,auditor,verdict,note,created_at")
        assert "carol,ok" in text


class TestDashboard:
    def test_matches_report_cli(self, exp_out, tmp_path, client):
        out = tmp_path / "rep"
        result = CliRunner().invoke(main, [
            "report",
            "--scores", str(exp_out / "scores" / "pruned_0.9.csv"),
            "--predictions", str(exp_out / "ledger" / "predictions.csv"),
            "--header", str(exp_out / "ledger" / "header.json"),
            "--baseline", "baseline", "--variant", "pruned_0.9",
            "--attributes", str(exp_out / "dataset" / "attributes.csv"),
            "--train-fractions", str(exp_out / "dataset" / "train_fractions.json"),
            "--percentile", "90",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        cli_rep = json.loads((out / "report.json").read_text())
        dash = client.get("/dashboard", params={"percentile": 90}).json()
        for key in ("divergence", "accuracy", "subgroups", "overindex"):
            assert dash[key] == cli_rep[key]

    def test_annotation_progress(self, exp_out, tmp_path):
        c = TestClient(create_app(make_session(exp_out, tmp_path / "fresh")))
        dash = c.get("/dashboard", params={"percentile": 99}).json()
        assert dash["annotation_progress"] == {"annotated": 0, "surfaced": 5}
