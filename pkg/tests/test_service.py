import json
import threading
import urllib.error
import urllib.request

import pytest

from fintag import cli
from fintag.corpus import SyntheticConfig, generate_synthetic, synthetic_labelset
from fintag.labels import spans_from_labels
from fintag.service import ServiceConfig, ServiceConfigError, build_server
from fintag.tagger import FeatureConfig, TrainConfig, save_model, train


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    labelset = synthetic_labelset(12)
    sentences = generate_synthetic(SyntheticConfig(1500, 12, seed=9), labelset)
    model = train(
        sentences[:1300],
        sentences[1300:],
        labelset,
        FeatureConfig(hash_dimension=2**15),
        TrainConfig(epochs=6, learning_rate=1.0, batch_size=16, seed=0, patience=2),
        granularity="subword",
        policy="shape",
    )
    paths = {
        "model": root / "model.ftm",
        "tags": root / "tags.txt",
        "vocab": root / "vocab.txt",
        "shapes": root / "shapes.txt",
    }
    save_model(model, paths["model"])
    labelset.save(paths["tags"])
    model.vocab.save(paths["vocab"])
    model.shape_vocab.save(paths["shapes"])
    return paths, model


@pytest.fixture(scope="module")
def server(artifacts):
    paths, _ = artifacts
    config = ServiceConfig(
        model_path=str(paths["model"]),
        tags_path=str(paths["tags"]),
        vocab_path=str(paths["vocab"]),
        shape_vocab_path=str(paths["shapes"]),
        bind="127.0.0.1",
        port=0,
        max_sentence_length=64,
        max_body_bytes=16_384,
    )
    srv = build_server(config)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def call(server, path, payload=None):
    port = server.server_address[1]
    url = f"http://127.0.0.1:{port}{path}"
    if payload is None:
        request = urllib.request.Request(url)
    else:
        request = urllib.request.Request(
            url,
            data=json.dumps(payload).encode("utf-8"),
            method="POST",
            headers={"Content-Type": "application/json"},
        )
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            return response.status, json.loads(response.read()), dict(response.headers)
    except urllib.error.HTTPError as error:
        return error.code, json.loads(error.read()), dict(error.headers)


SENTENCE = ["the", "company", "reported", "net", "revenue", "of", "7,782", "during", "the", "period"]


class TestEndpoints:
    def test_healthz(self, server):
        status, body, headers = call(server, "/healthz")
        assert status == 200
        assert body["status"] == "ok"
        assert len(body["model_fingerprint"]) == 64
        assert headers["X-Schema-Version"] == "1"

    def test_tags_listing(self, server, artifacts):
        _, model = artifacts
        status, body, _ = call(server, "/api/tags")
        assert status == 200
        assert body["tags"] == list(model.labelset.tags)

    def test_tag_endpoint(self, server):
        status, body, _ = call(server, "/api/tag", {"tokens": SENTENCE})
        assert status == 200
        assert len(body["labels"]) == len(SENTENCE)
        rebuilt = [
            {"start": s.start, "end": s.end, "tag": s.tag}
            for s in spans_from_labels(body["labels"], lenient=True)
        ]
        assert body["spans"] == rebuilt

    def test_tag_matches_cli_predict(self, server, artifacts, tmp_path):
        paths, model = artifacts
        corpus = tmp_path / "one.jsonl"
        corpus.write_text(
            json.dumps({"tokens": SENTENCE, "labels": ["O"] * len(SENTENCE),
                        "doc_id": "d", "period_index": 0}) + "\n",
            encoding="utf-8",
        )
        out = tmp_path / "pred.jsonl"
        assert cli.main([
            "predict", "--model", str(paths["model"]), "--tags", str(paths["tags"]),
            "--vocab", str(paths["vocab"]), "--shapes", str(paths["shapes"]),
            "--corpus", str(corpus), "--out", str(out),
        ]) == 0
        cli_labels = json.loads(out.read_text().splitlines()[0])["labels"]
        _, body, _ = call(server, "/api/tag", {"tokens": SENTENCE})
        assert body["labels"] == cli_labels

    def test_recommend_default_k(self, server):
        status, body, _ = call(server, "/api/recommend", {"tokens": SENTENCE, "index": 6})
        assert status == 200
        candidates = body["candidates"]
        assert len(candidates) == 10  # default k
        probs = [c["probability"] for c in candidates]
        assert probs == sorted(probs, reverse=True)
        assert all(0.0 <= p <= 1.0 for p in probs)
        assert body["policy_view"] == "[X,XXX]"

    def test_recommend_explicit_k(self, server):
        status, body, _ = call(server, "/api/recommend", {"tokens": SENTENCE, "index": 6, "k": 3})
        assert status == 200
        assert len(body["candidates"]) == 3

    def test_repeated_requests_identical(self, server):
        first = call(server, "/api/recommend", {"tokens": SENTENCE, "index": 6})
        second = call(server, "/api/recommend", {"tokens": SENTENCE, "index": 6})
        assert first[1] == second[1]

    def test_unknown_fields_ignored(self, server):
        status, body, _ = call(
            server, "/api/tag", {"tokens": SENTENCE, "mystery": True, "another": 1}
        )
        assert status == 200
        assert set(body) == {"labels", "spans"}


class TestErrors:
    def test_empty_sentence(self, server):
        status, body, _ = call(server, "/api/tag", {"tokens": []})
        assert status == 400
        assert body["error"]["code"] == "empty_sentence"

    def test_malformed_body(self, server):
        port = server.server_address[1]
        request = urllib.request.Request(
            f"http://127.0.0.1:{port}/api/tag",
            data=b"{not json",
            method="POST",
            headers={"Content-Type": "application/json"},
        )
        with pytest.raises(urllib.error.HTTPError) as exc:
            urllib.request.urlopen(request, timeout=10)
        assert exc.value.code == 400
        assert json.loads(exc.value.read())["error"]["code"] == "malformed_body"

    def test_index_out_of_range(self, server):
        status, body, _ = call(server, "/api/recommend", {"tokens": ["a"], "index": 9})
        assert status == 400
        assert body["error"]["code"] == "index_out_of_range"

    def test_k_out_of_range(self, server):
        status, body, _ = call(
            server, "/api/recommend", {"tokens": SENTENCE, "index": 6, "k": 999}
        )
        assert status == 400
        assert body["error"]["code"] == "k_out_of_range"

    def test_sentence_too_long(self, server):
        status, body, _ = call(server, "/api/tag", {"tokens": ["w"] * 65})
        assert status == 422
        assert body["error"]["code"] == "sentence_too_long"

    def test_body_too_large(self, server):
        status, body, _ = call(server, "/api/tag", {"tokens": ["x" * 40] * 600})
        assert status == 413
        assert body["error"]["code"] == "body_too_large"

    def test_unknown_endpoint(self, server):
        status, body, _ = call(server, "/api/nothing", {"tokens": ["a"]})
        assert status == 404


class TestServiceConfig:
    def test_from_file_and_env_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "svc.conf"
        path.write_text(
            "# fintag service config\n"
            "model_path = m.ftm\n"
            "tags_path = tags.txt\n"
            "port = 9100\n"
            "default_k = 7\n",
            encoding="utf-8",
        )
        config = ServiceConfig.from_file(path)
        assert config.port == 9100
        assert config.default_k == 7
        monkeypatch.setenv("FINTAG_PORT", "9200")
        monkeypatch.setenv("FINTAG_BIND", "0.0.0.0")
        overridden = config.with_env_overrides()
        assert overridden.port == 9200
        assert overridden.bind == "0.0.0.0"

    def test_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("model_path = m\ntags_path = t\nwhatever = 1\n", encoding="utf-8")
        with pytest.raises(ServiceConfigError):
            ServiceConfig.from_file(path)

    def test_rejects_missing_required(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("port = 1\n", encoding="utf-8")
        with pytest.raises(ServiceConfigError):
            ServiceConfig.from_file(path)

    def test_refuses_to_start_on_fingerprint_mismatch(self, artifacts, tmp_path):
        paths, _ = artifacts
        other_tags = tmp_path / "tags.txt"
        synthetic_labelset(4).save(other_tags)
        config = ServiceConfig(
            model_path=str(paths["model"]),
            tags_path=str(other_tags),
            vocab_path=str(paths["vocab"]),
            shape_vocab_path=str(paths["shapes"]),
            port=0,
        )
        from fintag.tagger import FingerprintMismatch

        with pytest.raises(FingerprintMismatch):
            build_server(config)
