"""Tests for the command-line front end: flag handling, exit codes, result
files, manifests, and the auxiliary rank/evaluate/report commands."""

import csv
import json

import pytest

from codeattack.cli import (
    EXIT_OK,
    EXIT_ORACLE,
    EXIT_USAGE,
    build_masked_lm,
    build_victim,
    main,
    parse_oracle_spec,
)
from codeattack.dataset import load_results, save_corpus
from codeattack.mocks import EchoVictim, FixtureMaskedLM, PlantedKeyVictim
from codeattack.oracle import HttpOracle

from helpers import PlantedSample


@pytest.fixture()
def planted_setup(tmp_path):
    """One-sample corpus whose victim selector is reproducible from the CLI:
    the stock planted mock emits 'good output tokens' while its key
    survives."""
    planted = PlantedSample(0)
    corpus = tmp_path / "corpus.jsonl"
    sample = planted.sample()
    sample = type(sample)(id=sample.id, source_code=sample.source_code,
                          reference="good output tokens", task=sample.task,
                          language=sample.language)
    save_corpus([sample], corpus)
    return planted, corpus


def _attack_args(planted, corpus, out, extra=()):
    return ["attack", "--task", "summarize", "--lang", "java",
            "--corpus", str(corpus), "--victim", f"mock:planted:{planted.key}",
            "--masked-lm", "mock:fixture", "--out", str(out), *extra]


class TestOracleSelectors:
    def test_mock_selector(self):
        assert parse_oracle_spec("mock:echo") == ("mock", "echo")

    def test_http_url_passthrough(self):
        assert parse_oracle_spec("http://host:8000") == ("http", "http://host:8000")
        assert parse_oracle_spec("https://host") == ("http", "https://host")

    def test_http_prefix_normalized(self):
        assert parse_oracle_spec("http:host:8000") == ("http", "http://host:8000")

    def test_unknown_selector_rejected(self):
        with pytest.raises(ValueError):
            parse_oracle_spec("grpc:host")

    def test_build_victim(self):
        assert isinstance(build_victim("mock:echo"), EchoVictim)
        assert isinstance(build_victim("mock:planted:k"), PlantedKeyVictim)
        assert isinstance(build_victim("http://127.0.0.1:9"), HttpOracle)

    def test_build_masked_lm(self):
        assert isinstance(build_masked_lm("mock:fixture", "java"),
                          FixtureMaskedLM)
        assert build_masked_lm("none", "java") is None
        assert build_masked_lm(None, "java") is None


class TestAttackCommand:
    def test_smoke_run(self, planted_setup, tmp_path, capsys):
        planted, corpus = planted_setup
        out = tmp_path / "results.jsonl"
        code = main(_attack_args(planted, corpus, out))
        assert code == EXIT_OK
        captured = capsys.readouterr()
        assert "Success%" in captured.out
        assert "samples: 1" in captured.out
        assert "corpus BLEU" in captured.out
        results, summary = load_results(out)
        assert len(results) == 1
        assert results[0].success is True
        assert summary["manifest"]["command"] == "attack"

    def test_missing_required_flag_exits_1(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["attack", "--victim", "mock:echo"])
        assert excinfo.value.code == EXIT_USAGE

    def test_unknown_flag_exits_1(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["attack", "--improvise"])
        assert excinfo.value.code == EXIT_USAGE

    def test_bad_selector_exits_1(self, planted_setup, tmp_path, capsys):
        _planted, corpus = planted_setup
        code = main(["attack", "--task", "summarize", "--corpus", str(corpus),
                     "--victim", "carrier-pigeon", "--out",
                     str(tmp_path / "r.jsonl")])
        assert code == EXIT_USAGE

    def test_token_mode_requires_masked_lm(self, planted_setup, tmp_path):
        planted, corpus = planted_setup
        code = main(_attack_args(planted, corpus, tmp_path / "r.jsonl",
                                 extra=("--masked-lm", "none")))
        assert code == EXIT_USAGE

    def test_missing_corpus_file_exits_1(self, tmp_path):
        code = main(["attack", "--task", "summarize",
                     "--corpus", str(tmp_path / "missing.jsonl"),
                     "--victim", "mock:echo",
                     "--out", str(tmp_path / "r.jsonl")])
        assert code == EXIT_USAGE

    def test_deterministic_result_files(self, planted_setup, tmp_path):
        planted, corpus = planted_setup
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        assert main(_attack_args(planted, corpus, out_a)) == EXIT_OK
        assert main(_attack_args(planted, corpus, out_b)) == EXIT_OK
        bytes_a = out_a.read_bytes()
        bytes_b = out_b.read_bytes()
        # The only difference may be the output path recorded in the
        # manifest; normalize it away before comparing.
        assert bytes_a.replace(b"a.jsonl", b"o.jsonl") == \
            bytes_b.replace(b"b.jsonl", b"o.jsonl")

    def test_manifest_file_written(self, planted_setup, tmp_path):
        planted, corpus = planted_setup
        out = tmp_path / "results.jsonl"
        main(_attack_args(planted, corpus, out))
        manifest_path = tmp_path / "results.jsonl.manifest.json"
        assert manifest_path.exists()
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["tool"] == "codeattack"
        assert manifest["command"] == "attack"
        assert manifest["victim"].startswith("mock:planted:")
        assert manifest["config"]["mode"] == "full"
        assert "timestamp" in manifest
        # The in-file manifest copy stays timestamp-free so result files
        # compare byte-identical across runs.
        _results, summary = load_results(out)
        assert "timestamp" not in summary["manifest"]

    def test_max_samples_limits_run(self, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        save_corpus([PlantedSample(i).sample() for i in range(3)], corpus)
        out = tmp_path / "results.jsonl"
        code = main(["attack", "--task", "summarize", "--corpus", str(corpus),
                     "--victim", "mock:echo", "--max-samples", "2",
                     "--out", str(out)])
        assert code == EXIT_OK
        results, _summary = load_results(out)
        assert [r.sample_id for r in results] == ["planted000", "planted001"]

    def test_workers_preserve_order_and_bytes(self, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        save_corpus([PlantedSample(i).sample() for i in range(4)], corpus)
        serial = tmp_path / "serial.jsonl"
        threaded = tmp_path / "threaded.jsonl"
        base = ["attack", "--task", "summarize", "--corpus", str(corpus),
                "--victim", "mock:echo"]
        assert main(base + ["--out", str(serial)]) == EXIT_OK
        assert main(base + ["--out", str(threaded), "--workers", "3"]) == EXIT_OK
        results, _ = load_results(threaded)
        assert [r.sample_id for r in results] == sorted(r.sample_id
                                                        for r in results)
        normalize = lambda b: b.replace(b"serial.jsonl", b"x.jsonl").replace(
            b"threaded.jsonl", b"x.jsonl")
        assert normalize(serial.read_bytes()) == normalize(threaded.read_bytes())

    def test_unreachable_victim_exits_2(self, planted_setup, tmp_path,
                                        monkeypatch, capsys):
        import codeattack.oracle as oracle_module
        monkeypatch.setattr(oracle_module.time, "sleep", lambda s: None)
        planted, corpus = planted_setup
        code = main(["attack", "--task", "summarize", "--corpus", str(corpus),
                     "--victim", "http://127.0.0.1:9", "--masked-lm", "none",
                     "--mode", "op", "--out", str(tmp_path / "r.jsonl")])
        assert code == EXIT_ORACLE


class TestRankCommand:
    def test_influence_csv(self, planted_setup, tmp_path):
        planted, corpus = planted_setup
        out = tmp_path / "influence.csv"
        code = main(["rank", "--task", "summarize", "--corpus", str(corpus),
                     "--victim", f"mock:planted:{planted.key}",
                     "--out", str(out)])
        assert code == EXIT_OK
        with open(out, newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert rows
        assert set(rows[0]) == {"sample_id", "rank", "token_index",
                                "token_text", "token_class", "influence"}
        top = rows[0]
        assert top["rank"] == "1"
        assert top["token_text"] == planted.key
        assert float(top["influence"]) > 0.0
        # Full-budget ranking: one row per attackable token.
        assert len(rows) == len(planted.source.split())


class TestEvaluateCommand:
    def test_rescore_round_trip(self, planted_setup, tmp_path, capsys):
        planted, corpus = planted_setup
        out = tmp_path / "results.jsonl"
        main(_attack_args(planted, corpus, out))
        capsys.readouterr()
        code = main(["evaluate", "--results", str(out), "--corpus", str(corpus),
                     "--task", "summarize", "--lang", "java"])
        assert code == EXIT_OK
        captured = capsys.readouterr()
        assert "rescored 1 results" in captured.out
        assert "0 mismatches" in captured.out
        assert "success_rate: 100.0000" in captured.out
        assert "drift" not in captured.out

    def test_evaluate_without_corpus(self, planted_setup, tmp_path, capsys):
        planted, corpus = planted_setup
        out = tmp_path / "results.jsonl"
        main(_attack_args(planted, corpus, out))
        capsys.readouterr()
        assert main(["evaluate", "--results", str(out)]) == EXIT_OK
        assert "n_samples: 1" in capsys.readouterr().out

    def test_missing_results_file_exits_1(self, tmp_path):
        assert main(["evaluate", "--results",
                     str(tmp_path / "nope.jsonl")]) == EXIT_USAGE


class TestReportCommand:
    def test_per_step_csv(self, planted_setup, tmp_path):
        planted, corpus = planted_setup
        results_path = tmp_path / "results.jsonl"
        main(_attack_args(planted, corpus, results_path))
        out = tmp_path / "sweep.csv"
        code = main(["report", "--results", str(results_path),
                     "--out", str(out)])
        assert code == EXIT_OK
        with open(out, newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        results, _summary = load_results(results_path)
        assert len(rows) == sum(len(r.trace) for r in results)
        assert rows[0]["success"] == "1"
        assert rows[0]["edit_kind"] == "Token"
        assert float(rows[0]["delta_at_step"]) == pytest.approx(100.0)


class TestVersionFlag:
    def test_version_prints_and_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "codeattack" in capsys.readouterr().out
