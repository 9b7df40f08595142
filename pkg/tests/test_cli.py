import hashlib
import json

import numpy as np
import pytest

from scriptid.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def dir_digest(root):
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Small 2-class corpus: 64x64 pages keep the whole CLI suite quick."""
    root = tmp_path_factory.mktemp("corpus")
    assert run("synth", "--out", root, "--classes", 2, "--pages", 2,
               "--page-size", 64, "--noise", 0.05) == 0
    return root


@pytest.fixture(scope="module")
def features_csv(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("feat") / "features.csv"
    assert run("extract", corpus, "--out", out, "--level", 1) == 0
    return out


@pytest.fixture(scope="module")
def model_json(features_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.json"
    assert run("train", features_csv, "--out", out, "--level", 1,
               "--epochs", 150) == 0
    return out


class TestSynth:
    def test_layout_and_determinism(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert run("synth", "--out", out, "--classes", 2, "--pages", 2,
                       "--page-size", 64) == 0
        pages = sorted(p.relative_to(a) for p in a.rglob("*.png"))
        assert len(pages) == 4
        assert str(pages[0]).startswith("o000v2")
        assert dir_digest(a) == dir_digest(b)


class TestExtract:
    def test_row_and_column_counts(self, features_csv):
        lines = features_csv.read_text().splitlines()
        assert len(lines) == 1 + 2 * 2 * 4  # header + classes*pages*4^1
        assert all(len(line.split(",")) == 65 for line in lines)

    def test_rerun_byte_identical(self, corpus, tmp_path):
        out1 = tmp_path / "f1.csv"
        out2 = tmp_path / "f2.csv"
        assert run("extract", corpus, "--out", out1, "--level", 1) == 0
        assert run("extract", corpus, "--out", out2, "--level", 1) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_directory_exits_2(self, tmp_path, capsys):
        assert run("extract", tmp_path / "void", "--out", tmp_path / "x.csv") == 2
        assert "no class directories" in capsys.readouterr().err

    def test_unreadable_page_exits_3(self, tmp_path, capsys):
        bad = tmp_path / "data" / "classA"
        bad.mkdir(parents=True)
        (bad / "page.png").write_bytes(b"garbage")
        assert run("extract", tmp_path / "data", "--out", tmp_path / "x.csv") == 3
        assert "page.png" in capsys.readouterr().err


class TestTrain:
    def test_model_written_with_extraction_config(self, model_json):
        doc = json.loads(model_json.read_text())
        assert doc["extraction"]["level"] == 1
        assert doc["extraction"]["kernel_size"] == 16
        assert doc["class_labels"] == ["o000v2", "o030v2"]

    def test_rerun_byte_identical(self, features_csv, tmp_path):
        m1 = tmp_path / "m1.json"
        m2 = tmp_path / "m2.json"
        for m in (m1, m2):
            assert run("train", features_csv, "--out", m, "--level", 1,
                       "--epochs", 50) == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_malformed_csv_exits_4_with_line(self, features_csv, tmp_path, capsys):
        broken = tmp_path / "broken.csv"
        lines = features_csv.read_text().splitlines()
        lines[2] = "only,three,columns"
        broken.write_text("\n".join(lines) + "\n")
        assert run("train", broken, "--out", tmp_path / "m.json") == 4
        assert "line 3" in capsys.readouterr().err

    def test_single_class_exits_6(self, features_csv, tmp_path, capsys):
        single = tmp_path / "single.csv"
        lines = features_csv.read_text().splitlines()
        kept = [lines[0]] + [l for l in lines[1:] if l.startswith("o000v2")]
        single.write_text("\n".join(kept) + "\n")
        assert run("train", single, "--out", tmp_path / "m.json") == 6
        assert "2 classes" in capsys.readouterr().err


class TestEval:
    def test_table_and_accuracy_format(self, features_csv, capsys):
        assert run("eval", features_csv, "--epochs", 150) == 0
        out = capsys.readouterr().out
        assert "aggregate accuracy" in out
        for column in ("Kappa", "MAE", "RMSE", "TPR", "FPR", "Precision",
                       "Recall", "F-measure", "AUC"):
            assert column in out
        assert "Mean" in out
        assert "%" in out

    def test_report_json_round(self, features_csv, tmp_path):
        report = tmp_path / "report.json"
        assert run("eval", features_csv, "--epochs", 150, "--report", report) == 0
        doc = json.loads(report.read_text())
        assert set(doc["metadata"]) == {"level", "sigma", "kernel_size",
                                        "orientation_step", "seed", "folds",
                                        "classifier"}
        assert len(doc["per_class"]) == 2
        assert len(doc["folds"]) == 3
        assert np.array(doc["confusion"]).sum() == 16

    def test_report_byte_identical(self, features_csv, tmp_path):
        r1 = tmp_path / "r1.json"
        r2 = tmp_path / "r2.json"
        for r in (r1, r2):
            assert run("eval", features_csv, "--epochs", 50, "--report", r) == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_knn_classifier(self, features_csv, capsys):
        assert run("eval", features_csv, "--classifier", "knn") == 0
        assert "knn" in capsys.readouterr().out

    def test_sweep_emits_requested_levels(self, corpus, tmp_path, capsys):
        sweep = tmp_path / "sweep.csv"
        assert run("eval", corpus, "--sweep-levels", "1,2", "--epochs", 100,
                   "--sweep-out", sweep) == 0
        lines = sweep.read_text().splitlines()
        assert lines[0] == "level,blocks_per_class,samples,accuracy"
        assert len(lines) == 3
        assert lines[1].startswith("1,8,16,")
        assert lines[2].startswith("2,32,64,")

    def test_sweep_requires_directory(self, features_csv, capsys):
        assert run("eval", features_csv, "--sweep-levels", "1,2") == 2

    def test_eval_straight_from_directory(self, corpus, capsys):
        assert run("eval", corpus, "--level", 1, "--epochs", 100) == 0
        assert "aggregate accuracy" in capsys.readouterr().out


class TestParameterErrors:
    def test_synth_page_size_must_divide(self, tmp_path, capsys):
        assert run("synth", "--out", tmp_path / "x", "--page-size", 100) == 2
        assert "divisible" in capsys.readouterr().err

    def test_extract_level_out_of_range(self, corpus, tmp_path, capsys):
        assert run("extract", corpus, "--out", tmp_path / "x.csv", "--level", 9) == 2
        assert "level" in capsys.readouterr().err


class TestPredict:
    def test_page_verdict_and_block_lines(self, corpus, model_json, capsys):
        page = sorted((corpus / "o000v2").glob("*.png"))[0]
        assert run("predict", model_json, page) == 0
        out = capsys.readouterr().out
        assert out.count("block (") == 4
        assert "page label: o000v2" in out

    def test_json_output(self, corpus, model_json, capsys):
        page = sorted((corpus / "o030v2").glob("*.png"))[0]
        assert run("predict", model_json, page, "--json") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["page_label"] == "o030v2"
        assert len(doc["blocks"]) == 4

    def test_mismatched_sigma_exits_5(self, corpus, model_json, capsys):
        page = sorted((corpus / "o000v2").glob("*.png"))[0]
        assert run("predict", model_json, page, "--sigma", "7.0") == 5
        err = capsys.readouterr().err
        assert "sigma" in err
        assert "model" in err

    def test_matching_explicit_flag_is_fine(self, corpus, model_json):
        page = sorted((corpus / "o000v2").glob("*.png"))[0]
        assert run("predict", model_json, page, "--level", "1") == 0

    def test_unreadable_image_exits_3(self, model_json, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"nope")
        assert run("predict", model_json, bad) == 3


class TestDumpKernels:
    def test_inventory_and_determinism(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert run("dump-kernels", "--out", out) == 0
        assert len(list(a.glob("*.csv"))) == 60
        assert len(list(a.glob("*.pgm"))) == 60
        assert dir_digest(a) == dir_digest(b)


class TestHelp:
    def test_help_lists_flags_with_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("eval", "--help")
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in ("--level", "--sigma", "--kernel-size", "--orientation-step",
                     "--folds", "--seed", "--hidden", "--epochs", "--lr",
                     "--momentum", "--min-foreground"):
            assert flag in out
        assert "default: 2" in out  # --level
        assert "default: 42" in out  # --seed
