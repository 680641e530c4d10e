import json

import numpy as np
import pytest

from fieldseg.cli import main
from fieldseg.pipeline import read_manifest
from fieldseg.raster import Raster
from fieldseg.tileio import read_tile, write_tile


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def scene_dir(tmp_path):
    d = tmp_path / "scenes"
    rc = run("synth", "--out-dir", str(d), "--count", "2", "--seed", "31",
             "--size", "96", "--fields", "4", "--noise-std", "0.0")
    assert rc == 0
    return d


class TestSynthCommand:
    def test_outputs_exist(self, scene_dir):
        for i in range(2):
            for part in ("tile", "border", "interior", "nolabel", "instances"):
                assert (scene_dir / f"scene{i:04d}_{part}.fbt").exists()
            assert (scene_dir / f"scene{i:04d}_polygons.json").exists()
        man = read_manifest(scene_dir / "manifest.jsonl")
        assert len(man.entries) == 2
        assert all(e.split == "test" for e in man.entries)

    def test_deterministic_across_runs(self, scene_dir, tmp_path):
        d2 = tmp_path / "again"
        assert run("synth", "--out-dir", str(d2), "--count", "2", "--seed",
                   "31", "--size", "96", "--fields", "4",
                   "--noise-std", "0.0") == 0
        a = (scene_dir / "scene0000_tile.fbt").read_bytes()
        b = (d2 / "scene0000_tile.fbt").read_bytes()
        assert a == b


class TestSplitCommand:
    def test_seed_determinism(self, tmp_path):
        d = tmp_path / "scenes"
        assert run("synth", "--out-dir", str(d), "--count", "5", "--seed",
                   "40", "--size", "96", "--fields", "2") == 0
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            assert run("split", "--manifest", str(d / "manifest.jsonl"),
                       "--out", str(out), "--seed", "9",
                       "--ratios", "0.6,0.2,0.2") == 0
            outs.append(read_manifest(out))
        assert outs[0] == outs[1]
        counts = {s: len(outs[0].subset(s)) for s in ("train", "val", "test")}
        assert counts == {"train": 3, "val": 1, "test": 1}

    def test_bad_ratios_exit_3(self, scene_dir, tmp_path):
        rc = run("split", "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--out", str(tmp_path / "x.jsonl"), "--seed", "1",
                 "--ratios", "0.9,0.9,0.9")
        assert rc == 3


class TestDelineateEvaluate:
    def test_end_to_end_flow(self, scene_dir, tmp_path, capsys):
        pred = tmp_path / "pred"
        assert run("delineate", "--manifest", str(scene_dir / "manifest.jsonl"),
                   "--split", "test", "--out-dir", str(pred)) == 0
        report = tmp_path / "report.json"
        rc = run("evaluate", "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--split", "test", "--pred-dir", str(pred),
                 "--heads", "border", "--out", str(report), "--format", "json")
        assert rc == 0
        doc = json.loads(report.read_text())
        assert doc["n_images"] == 2
        border = doc["heads"]["border"]
        # thin-border pixel metrics are modest even on noise-free scenes;
        # the flow test only asserts the scores are sane and non-degenerate
        assert 0.3 < border["f1"] <= 1.0
        assert 0.0 < border["miou"] <= 1.0
        assert border["undefined"] == []

    def test_perfect_predictor_all_ones(self, scene_dir, tmp_path, capsys):
        # copy ground-truth masks as predictions
        pred = tmp_path / "pred"
        pred.mkdir()
        man = read_manifest(scene_dir / "manifest.jsonl")
        for e in man.entries:
            for head in ("border", "interior"):
                gt = read_tile(getattr(e, head))
                prob = Raster(gt.data.astype(np.float32)[:, :, None], dtype="f32")
                write_tile(prob, pred / f"{e.name}_{head}.fbt")
        report = tmp_path / "report.json"
        rc = run("evaluate", "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--split", "test", "--pred-dir", str(pred),
                 "--out", str(report), "--format", "json")
        assert rc == 0
        doc = json.loads(report.read_text())
        for head in ("border", "interior"):
            m = doc["heads"][head]
            for key in ("f1", "accuracy", "miou", "p_at_iou"):
                assert m[key] == 1.0
            assert m["undefined"] == []

    def test_missing_prediction_exit_2_lists_file(self, scene_dir, tmp_path,
                                                  capsys):
        pred = tmp_path / "pred"
        assert run("delineate", "--manifest", str(scene_dir / "manifest.jsonl"),
                   "--split", "test", "--out-dir", str(pred)) == 0
        victim = pred / "scene0001_border.fbt"
        victim.unlink()
        rc = run("evaluate", "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--split", "test", "--pred-dir", str(pred),
                 "--heads", "border")
        assert rc == 2
        err = capsys.readouterr().err
        assert "scene0001_border.fbt" in err

    def test_table_format(self, scene_dir, tmp_path, capsys):
        pred = tmp_path / "pred"
        assert run("delineate", "--manifest", str(scene_dir / "manifest.jsonl"),
                   "--split", "test", "--out-dir", str(pred)) == 0
        rc = run("evaluate", "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--split", "test", "--pred-dir", str(pred),
                 "--heads", "border", "--format", "table")
        assert rc == 0
        out = capsys.readouterr().out
        assert "F1" in out and "mIoU" in out


class TestReportCommand:
    def test_renders_saved_report(self, scene_dir, tmp_path, capsys):
        pred = tmp_path / "pred"
        assert run("delineate", "--manifest", str(scene_dir / "manifest.jsonl"),
                   "--split", "test", "--out-dir", str(pred)) == 0
        report = tmp_path / "report.json"
        assert run("evaluate", "--manifest", str(scene_dir / "manifest.jsonl"),
                   "--split", "test", "--pred-dir", str(pred),
                   "--heads", "border", "--out", str(report),
                   "--format", "json") == 0
        capsys.readouterr()
        assert run("report", "--report", str(report)) == 0
        out = capsys.readouterr().out
        assert "F1" in out


class TestConfigAndErrors:
    def test_unknown_config_key_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text('totally_unknown_key = 1\n')
        rc = run("--config", str(cfg), "synth", "--out-dir",
                 str(tmp_path / "o"), "--count", "1")
        assert rc == 1
        assert "unknown" in capsys.readouterr().err.lower()

    def test_unknown_cw_key_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text('[cw]\nnot_a_param = 2\n')
        rc = run("--config", str(cfg), "synth", "--out-dir",
                 str(tmp_path / "o"), "--count", "1")
        assert rc == 1

    def test_cw_config_applied(self, scene_dir, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text('[cw]\nmin_field_area = 100000\nmax_field_area = 100001\n')
        pred = tmp_path / "pred"
        rc = run("--config", str(cfg), "delineate",
                 "--manifest", str(scene_dir / "manifest.jsonl"),
                 "--split", "test", "--out-dir", str(pred))
        assert rc == 0
        # min area larger than the tile: every segment filtered out
        inst = read_tile(pred / "scene0000_instances.fbt")
        assert not inst.data.any()

    def test_missing_manifest_exit_2(self, tmp_path):
        rc = run("delineate", "--manifest", str(tmp_path / "nope.jsonl"),
                 "--split", "test", "--out-dir", str(tmp_path / "o"))
        assert rc == 2

    def test_bad_subcommand_exit_1(self):
        assert run("frobnicate") == 1

    def test_help_exit_0(self, capsys):
        assert run("--help") == 0
        assert "Usage" in capsys.readouterr().out
