import json

import pytest

from fintag import cli
from fintag.corpus import load_dataset
from fintag.labels import LabelSet


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A synthetic corpus, splits, and a trained model produced via the CLI."""
    root = tmp_path_factory.mktemp("cliws")
    corpus = root / "corpus.jsonl"
    tags = root / "tags.txt"
    assert cli.main([
        "synth", "--n", "900", "--n-tags", "8", "--seed", "5",
        "--out", str(corpus), "--tags-out", str(tags),
    ]) == 0
    assert cli.main([
        "split", "--corpus", str(corpus), "--tags", str(tags),
        "--ratios", "0.8,0.1,0.1", "--out-dir", str(root / "splits"),
    ]) == 0
    model = root / "model.ftm"
    assert cli.main([
        "train", "--train", str(root / "splits/train.jsonl"),
        "--dev", str(root / "splits/dev.jsonl"), "--tags", str(tags),
        "--policy", "shape", "--granularity", "subword", "--head", "softmax",
        "--epochs", "6", "--seed", "0", "--hash-dim", str(2**15),
        "--out", str(model),
    ]) == 0
    return {
        "root": root,
        "corpus": corpus,
        "tags": tags,
        "model": model,
        "vocab": root / "model.ftm.vocab.txt",
        "shapes": root / "model.ftm.shapes.txt",
        "test": root / "splits/test.jsonl",
    }


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert cli.main(["synth", "--n", "100", "--seed", "1", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestStats:
    def test_report_and_figure(self, workspace, tmp_path, capsys):
        out = tmp_path / "stats.txt"
        fig = tmp_path / "tags.png"
        code = cli.main([
            "stats", "--corpus", str(workspace["corpus"]), "--tags", str(workspace["tags"]),
            "--out", str(out), "--figure", str(fig),
        ])
        assert code == 0
        text = out.read_text(encoding="utf-8")
        assert "numeric_span_ratio" in text
        assert fig.exists() and fig.stat().st_size > 0
        assert "sentences = 900" in capsys.readouterr().out


class TestFilterSplitShapes:
    def test_filter(self, workspace, tmp_path, capsys):
        out = tmp_path / "kept.jsonl"
        code = cli.main([
            "filter", "--corpus", str(workspace["corpus"]), "--tags", str(workspace["tags"]),
            "--out", str(out),
        ])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "discarded_tagged = 0" in stdout

    def test_build_shapes(self, workspace, tmp_path):
        out = tmp_path / "shapes.txt"
        code = cli.main([
            "build-shapes", "--corpus", str(workspace["test"]),
            "--tags", str(workspace["tags"]), "--out", str(out),
        ])
        assert code == 0
        header = out.read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("#fintag-shape-vocab")


class TestTokenizeCmd:
    def test_fixture_vocab_output(self, capsys):
        assert cli.main(["tokenize", "--policy", "none", "9,323.0"]) == 0
        out = capsys.readouterr().out
        assert "9 ##, ##323 ##. ##0" in out


class TestPredictEvalHits:
    def test_predict_eval_perfect_on_gold(self, workspace, tmp_path, capsys):
        pred = tmp_path / "pred.jsonl"
        code = cli.main([
            "predict", "--model", str(workspace["model"]), "--tags", str(workspace["tags"]),
            "--vocab", str(workspace["vocab"]), "--shapes", str(workspace["shapes"]),
            "--corpus", str(workspace["test"]), "--out", str(pred),
        ])
        assert code == 0
        capsys.readouterr()
        # evaluating gold against itself reports micro-F1 = 1
        code = cli.main([
            "eval", "--gold", str(workspace["test"]), "--pred", str(workspace["test"]),
            "--tags", str(workspace["tags"]),
        ])
        assert code == 0
        assert "micro_f1 = 1.0000" in capsys.readouterr().out
        # model predictions score sensibly and write reports
        out_dir = tmp_path / "eval_out"
        code = cli.main([
            "eval", "--gold", str(workspace["test"]), "--pred", str(pred),
            "--tags", str(workspace["tags"]), "--out-dir", str(out_dir),
        ])
        assert code == 0
        record = json.loads((out_dir / "eval.jsonl").read_text().splitlines()[0])
        assert 0.0 <= record["micro_f1"] <= 1.0

    def test_hits_curve_monotone(self, workspace, tmp_path, capsys):
        out_dir = tmp_path / "hits_out"
        code = cli.main([
            "hits", "--model", str(workspace["model"]), "--tags", str(workspace["tags"]),
            "--vocab", str(workspace["vocab"]), "--shapes", str(workspace["shapes"]),
            "--corpus", str(workspace["test"]), "--k-max", "8", "--out-dir", str(out_dir),
        ])
        assert code == 0
        capsys.readouterr()
        values = [
            json.loads(line)["hits"]
            for line in (out_dir / "hits.jsonl").read_text().splitlines()
        ]
        assert len(values) == 8
        assert values == sorted(values)
        assert (out_dir / "hits_curve.png").stat().st_size > 0
        assert (out_dir / "hits.txt").read_text().startswith("hits@k curve")


class TestAblateCmd:
    def test_small_ablation(self, workspace, tmp_path, capsys):
        out_dir = tmp_path / "ablate_out"
        code = cli.main([
            "ablate", "--train", str(workspace["root"] / "splits/train.jsonl"),
            "--dev", str(workspace["root"] / "splits/dev.jsonl"),
            "--test", str(workspace["test"]), "--tags", str(workspace["tags"]),
            "--policies", "none,shape", "--seeds", "0", "--epochs", "3",
            "--hash-dim", str(2**14), "--out-dir", str(out_dir),
        ])
        assert code == 0
        lines = (out_dir / "ablation.jsonl").read_text().splitlines()
        cells = [json.loads(line) for line in lines[:-1]]
        assert {c["policy"] for c in cells} == {"none", "shape"}
        assert all(c["status"] == "ok" for c in cells)
        assert (out_dir / "ablation.png").stat().st_size > 0


class TestErrors:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_file_exits_1(self, tmp_path, capsys):
        code = cli.main([
            "stats", "--corpus", str(tmp_path / "nope.jsonl"), "--tags", str(tmp_path / "nope.txt"),
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_strict_load_rejects_bad_record(self, workspace, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"tokens": ["a"], "labels": ["O", "O"]}\n', encoding="utf-8")
        code = cli.main(["stats", "--corpus", str(bad), "--tags", str(workspace["tags"])])
        assert code == 1


class TestVocabDerivation:
    def test_train_writes_matching_vocab(self, workspace):
        labelset = LabelSet.load(workspace["tags"])
        sentences, diagnostics = load_dataset(workspace["test"], labelset)
        assert sentences and not diagnostics
        from fintag.tagger import load_model
        from fintag.tokenization import ShapeVocab, SubwordVocab

        vocab = SubwordVocab.load(workspace["vocab"])
        shapes = ShapeVocab.load(workspace["shapes"])
        model = load_model(workspace["model"], labelset, vocab, shapes)
        assert model.policy.value == "shape"
