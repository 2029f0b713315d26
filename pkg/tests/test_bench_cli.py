import csv
import hashlib
import json

import numpy as np
import pytest

from semcomp import cli
from semcomp.bench import BenchConfig, render_markdown, run_bench
from semcomp.fileio import write_embedding_file
from semcomp.fixture import generate_fixture


def digest_tree(root):
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.iterdir())
        if p.is_file()
    }


@pytest.fixture(scope="module")
def fixture_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixture")
    memory, train, corpus = generate_fixture()
    write_embedding_file(memory, root / "memory.semb")
    write_embedding_file(train, root / "train.semb")
    from semcomp.core import LabeledEmbeddings

    test = LabeledEmbeddings(corpus.embeddings, corpus.labels)
    write_embedding_file(test, root / "test.semb")
    with open(root / "dataset.jsonl", "w", encoding="utf-8") as f:
        for text, label in zip(corpus.texts, corpus.labels):
            f.write(json.dumps({"text": text, "label": f"class-{label}"}) + "\n")
    return root


class TestRunBench:
    def test_fixture_bench(self, tmp_path):
        config = BenchConfig(out_dir=tmp_path / "out", use_fixture=True)
        reports = run_bench(config)
        by_approach = {r.approach: r for r in reports}
        assert set(by_approach) == {
            "conventional-k1",
            "conventional-k2",
            "conventional-k3",
            "quantization",
            "compression",
        }
        for r in reports:
            assert r.accuracy == 1.0
        assert (
            by_approach["compression"].total_bits
            < by_approach["quantization"].total_bits
            < by_approach["conventional-k1"].total_bits
        )

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_bench(BenchConfig(out_dir=a, use_fixture=True))
        run_bench(BenchConfig(out_dir=b, use_fixture=True))
        da, db = digest_tree(a), digest_tree(b)
        assert da == db
        assert "report.csv" in da and "quantization.bits" in da

    def test_report_totals_recomputable_from_message_bits(self, tmp_path):
        out = tmp_path / "out"
        reports = run_bench(BenchConfig(out_dir=out, use_fixture=True))
        with open(out / "message_bits.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        sums = {}
        for row in rows:
            sums[row["approach"]] = sums.get(row["approach"], 0) + int(row["bits"])
        for r in reports:
            assert sums[r.approach] == r.total_bits

    def test_payload_files_match_reported_bits(self, tmp_path):
        out = tmp_path / "out"
        reports = run_bench(BenchConfig(out_dir=out, use_fixture=True))
        from semcomp.huffman import BitStream

        for r in reports:
            stream = BitStream.from_bytes((out / f"{r.approach}.bits").read_bytes())
            assert stream.bit_length == r.total_bits

    def test_file_bench_equals_fixture_bench(self, fixture_files, tmp_path):
        config = BenchConfig(
            dataset_path=fixture_files / "dataset.jsonl",
            memory_path=fixture_files / "memory.semb",
            train_path=fixture_files / "train.semb",
            test_embeddings_path=fixture_files / "test.semb",
            out_dir=tmp_path / "out",
        )
        from_files = run_bench(config)
        in_memory = run_bench(BenchConfig(out_dir=tmp_path / "out2", use_fixture=True))
        assert [r.total_bits for r in from_files] == [r.total_bits for r in in_memory]
        assert [r.accuracy for r in from_files] == [r.accuracy for r in in_memory]

    def test_markdown_columns(self, tmp_path):
        reports = run_bench(BenchConfig(out_dir=tmp_path / "o", use_fixture=True))
        md = render_markdown(reports)
        lines = md.strip().splitlines()
        assert lines[0] == "| Approach | Number of Bits | Accuracy % |"
        assert any("Semantic Quantization" in l for l in lines)
        assert any("Semantic Compression - 3" in l for l in lines)
        assert any(l.startswith("| Conventional |") for l in lines)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BenchConfig()  # no paths, no fixture


class TestCli:
    def test_bench_and_report(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = cli.main(["bench", "--fixture", "--out-dir", str(out_dir)])
        assert code == 0
        table = capsys.readouterr().out
        assert "| Approach | Number of Bits | Accuracy % |" in table
        code = cli.main(["report", "--csv", str(out_dir / "report.csv")])
        assert code == 0
        assert "Semantic Quantization" in capsys.readouterr().out

    def test_cluster_digest_stable(self, fixture_files, tmp_path, capsys):
        args = ["cluster", "--memory", str(fixture_files / "memory.semb")]
        assert cli.main(args + ["--out", str(tmp_path / "m1.json")]) == 0
        first = capsys.readouterr().out.strip()
        assert cli.main(args + ["--out", str(tmp_path / "m2.json")]) == 0
        second = capsys.readouterr().out.strip()
        assert first == second
        assert "clusters=3" in first

    def test_quantize_round_trip_via_encode_decode(self, fixture_files, tmp_path, capsys):
        bits = tmp_path / "payload.bits"
        code = cli.main(
            [
                "encode",
                "--approach",
                "quantization",
                "--embeddings",
                str(fixture_files / "test.semb"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--out",
                str(bits),
            ]
        )
        assert code == 0
        capsys.readouterr()
        out_csv = tmp_path / "decoded.csv"
        code = cli.main(
            [
                "decode",
                "--bits",
                str(bits),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--out",
                str(out_csv),
            ]
        )
        assert code == 0
        with open(out_csv, newline="") as f:
            decoded = [int(r["memory_index"]) for r in csv.DictReader(f)]

        quant_csv = tmp_path / "quant.csv"
        code = cli.main(
            [
                "quantize",
                "--embeddings",
                str(fixture_files / "test.semb"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--out",
                str(quant_csv),
            ]
        )
        assert code == 0
        with open(quant_csv, newline="") as f:
            direct = [int(r["memory_index"]) for r in csv.DictReader(f)]
        assert decoded == direct

    def test_conventional_encode_decode_lossless(self, fixture_files, tmp_path, capsys):
        bits = tmp_path / "conv.bits"
        code = cli.main(
            [
                "encode",
                "--approach",
                "conventional",
                "--dataset",
                str(fixture_files / "dataset.jsonl"),
                "--block-size",
                "2",
                "--out",
                str(bits),
            ]
        )
        assert code == 0
        capsys.readouterr()
        out_txt = tmp_path / "texts.txt"
        assert cli.main(["decode", "--bits", str(bits), "--out", str(out_txt)]) == 0
        decoded = out_txt.read_text(encoding="utf-8").splitlines()
        with open(fixture_files / "dataset.jsonl", encoding="utf-8") as f:
            originals = [json.loads(l)["text"] for l in f]
        assert decoded == originals

    def test_compression_encode_decode_with_model(self, fixture_files, tmp_path, capsys):
        model_json = tmp_path / "model.json"
        assert (
            cli.main(
                [
                    "cluster",
                    "--memory",
                    str(fixture_files / "memory.semb"),
                    "--out",
                    str(model_json),
                ]
            )
            == 0
        )
        capsys.readouterr()
        bits = tmp_path / "comp.bits"
        code = cli.main(
            [
                "encode",
                "--approach",
                "compression",
                "--embeddings",
                str(fixture_files / "test.semb"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--cluster-model",
                str(model_json),
                "--out",
                str(bits),
            ]
        )
        assert code == 0
        capsys.readouterr()
        out_csv = tmp_path / "labels.csv"
        code = cli.main(
            [
                "decode",
                "--bits",
                str(bits),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--cluster-model",
                str(model_json),
                "--out",
                str(out_csv),
            ]
        )
        assert code == 0
        with open(out_csv, newline="") as f:
            labels = [int(r["cluster_label"]) for r in csv.DictReader(f)]
        # fixture corpus is class-ordered: 20 messages per class, one cluster each
        assert len(labels) == 60
        assert len(set(labels)) == 3

    def test_format_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.semb"
        bad.write_bytes(b"NOPE" + bytes(32))
        code = cli.main(["cluster", "--memory", str(bad)])
        assert code == cli.EXIT_FORMAT
        assert "format error" in capsys.readouterr().err

    def test_desync_error_exit_code(self, fixture_files, tmp_path, capsys):
        model_json = tmp_path / "model.json"
        cli.main(
            [
                "cluster",
                "--memory",
                str(fixture_files / "memory.semb"),
                "--out",
                str(model_json),
            ]
        )
        capsys.readouterr()
        # tamper: claim the model came from a different memory
        payload = json.loads(model_json.read_text())
        payload["memory_digest"] = "0" * 64
        model_json.write_text(json.dumps(payload))
        bits = tmp_path / "x.bits"
        code = cli.main(
            [
                "encode",
                "--approach",
                "compression",
                "--embeddings",
                str(fixture_files / "test.semb"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--cluster-model",
                str(model_json),
                "--out",
                str(bits),
            ]
        )
        assert code == cli.EXIT_DESYNC
        assert "desync" in capsys.readouterr().err

    def test_service_error_exit_code(self, fixture_files, tmp_path, capsys):
        code = cli.main(
            [
                "bench",
                "--dataset",
                str(fixture_files / "dataset.jsonl"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--train",
                str(fixture_files / "train.semb"),
                "--embed-url",
                "http://127.0.0.1:9",  # nothing listens here
                "--out-dir",
                str(tmp_path / "out"),
            ]
        )
        assert code == cli.EXIT_SERVICE
        assert "service error" in capsys.readouterr().err

    def test_env_var_overrides_embed_url(self, fixture_files, tmp_path, capsys, monkeypatch):
        from semcomp.bench import ENV_SERVICE_URL

        monkeypatch.setenv(ENV_SERVICE_URL, "http://127.0.0.1:9")
        code = cli.main(
            [
                "bench",
                "--dataset",
                str(fixture_files / "dataset.jsonl"),
                "--memory",
                str(fixture_files / "memory.semb"),
                "--train",
                str(fixture_files / "train.semb"),
                "--out-dir",
                str(tmp_path / "out"),
            ]
        )
        assert code == cli.EXIT_SERVICE

    def test_classify_accuracy(self, fixture_files, tmp_path, capsys):
        out_csv = tmp_path / "preds.csv"
        code = cli.main(
            [
                "classify",
                "--embeddings",
                str(fixture_files / "test.semb"),
                "--train",
                str(fixture_files / "train.semb"),
                "--out",
                str(out_csv),
            ]
        )
        assert code == 0
        assert "accuracy=1.000000" in capsys.readouterr().err
