import json
import math
from pathlib import Path

import numpy as np
import pytest

jsonschema = pytest.importorskip("jsonschema")

from pcdist import PointCloud, fps, read_cloud, synth_shapes, write_cloud
from pcdist.cli import main

SCHEMAS = Path(__file__).parent.parent / "src" / "pcdist" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / name).read_text())


@pytest.fixture
def pair(tmp_path):
    a = tmp_path / "a.xyz"
    b = tmp_path / "b.xyz"
    write_cloud(PointCloud([[0.0, 0.0, 0.0]]), a)
    write_cloud(PointCloud([[1.0, 0.0, 0.0]]), b)
    return a, b


class TestDist:
    def test_identity_all_zero(self, pair, capsys):
        a, _ = pair
        assert main(["dist", str(a), str(a), "--cd", "--dcd", "--alpha", "1000"]) == 0
        out = capsys.readouterr().out
        assert "cd_t 0\n" in out and "dcd 0\n" in out

    def test_unit_pair_nine_significant_digits(self, pair, capsys):
        a, b = pair
        assert main(["dist", str(a), str(b), "--cd", "--dcd", "--alpha", "1"]) == 0
        out = capsys.readouterr().out
        assert "cd_t 2\n" in out
        assert "dcd 0.632120559\n" in out

    def test_json_full_precision_and_schema(self, pair, capsys):
        a, b = pair
        assert main(["dist", str(a), str(b), "--cd", "--dcd", "--alpha", "1",
                     "--per-point", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        jsonschema.validate(doc, schema("dist_report.schema.json"))
        assert doc["metrics"]["dcd"] == 1 - math.exp(-1)
        assert doc["per_point"]["dcd"]["src"] == [0.5 * (1 - math.exp(-1))]

    def test_mismatched_sizes_advises_variant(self, tmp_path, pair, capsys):
        a, _ = pair
        c = tmp_path / "c.xyz"
        write_cloud(PointCloud([[0, 0, 0], [1, 1, 1]]), c)
        assert main(["dist", str(a), str(c), "--dcd"]) == 3
        err = capsys.readouterr().err
        assert "--variant e" in err
        assert main(["dist", str(a), str(c), "--dcd", "--variant", "e"]) == 0

    def test_parse_failure_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.xyz"
        bad.write_text("1 2\n")
        good = tmp_path / "g.xyz"
        write_cloud(PointCloud([[0, 0, 0]]), good)
        assert main(["dist", str(bad), str(good), "--cd"]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_no_metric_selected_exit_2(self, pair, capsys):
        a, b = pair
        assert main(["dist", str(a), str(b)]) == 2

    def test_emd_flags(self, tmp_path, capsys):
        a = tmp_path / "a.xyz"
        b = tmp_path / "b.xyz"
        r = np.random.default_rng(1)
        write_cloud(PointCloud(r.random((16, 3))), a)
        write_cloud(PointCloud(r.random((16, 3))), b)
        assert main(["dist", str(a), str(b), "--emd", "--emd-exact", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["metrics"]["emd"] >= doc["metrics"]["emd_exact"] - 1e-12

    def test_gradient_output(self, pair, capsys):
        a, b = pair
        assert main(["dist", str(a), str(b), "--cd", "--grad", "dcd",
                     "--alpha", "1", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        jsonschema.validate(doc, schema("dist_report.schema.json"))
        assert doc["gradient"]["grad_s1"][0][0] == pytest.approx(-2 * math.exp(-1))


class TestSweepCli:
    def config(self, tmp_path):
        cfg = {
            "master_seed": 5,
            "sigmas": [0.0, 6.0],
            "imbalances": [96, 48],
            "trials": 1,
            "target_size": 192,
            "shapes": ["sphere"],
            "emd_eps": 0.05,
            "metrics": ["cd_t", "dcd", "emd"],
        }
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        return p

    def test_sweep_outputs_and_determinism(self, tmp_path, capsys):
        p = self.config(tmp_path)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        assert main(["sweep", str(p), "--out-prefix", str(out1), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        jsonschema.validate(doc, schema("sweep_report.schema.json"))
        assert main(["sweep", str(p), "--out-prefix", str(out2), "--json"]) == 0
        capsys.readouterr()
        assert (out1.with_suffix(".csv").read_bytes()
                == out2.with_suffix(".csv").read_bytes())

    def test_single_cell_matches_dist(self, tmp_path, capsys):
        # A 1x1 grid, 1 trial sweep reports exactly what dist computes on
        # the same generated pair.
        from pcdist.degrade import DegradationSpec, mix_noise_imbalance
        from pcdist.reports import SweepConfig, _trial_clouds, derive_seed

        cfg = {
            "master_seed": 9,
            "sigmas": [3.0],
            "imbalances": [64],
            "trials": 1,
            "target_size": 128,
            "shapes": ["torus"],
            "dcd_alpha": 10.0,
            "metrics": ["cd_t", "dcd"],
        }
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        assert main(["sweep", str(p), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)

        sc = SweepConfig.from_dict(cfg)
        gt_dense, gt_ref = _trial_clouds(sc, 0)
        spec = DegradationSpec(
            seed=derive_seed(9, 2, 0), noise_sigma=3.0, imbalance_n=64,
            partial_keep_fraction=0.5, target_size=128,
        )
        degraded = mix_noise_imbalance(gt_dense, spec)
        fa, fb = tmp_path / "deg.xyz", tmp_path / "ref.xyz"
        write_cloud(degraded, fa)
        write_cloud(gt_ref, fb)
        assert main(["dist", str(fa), str(fb), "--cd", "--dcd",
                     "--alpha", "10", "--json"]) == 0
        direct = json.loads(capsys.readouterr().out)["metrics"]
        assert doc["mean"]["cd_t"][0][0] == direct["cd_t"]
        assert doc["mean"]["dcd"][0][0] == direct["dcd"]

    def test_invalid_config_exit_2(self, tmp_path, capsys):
        p = tmp_path / "cfg.json"
        p.write_text("{\"metrics\": [\"nope\"]}")
        assert main(["sweep", str(p)]) == 2


class TestAccumulateCli:
    def test_hand_values_and_schema(self, tmp_path, capsys):
        src = tmp_path / "d.csv"
        src.write_text("sample,cd_t\n0,3.0\n1,1.0\n")
        out = tmp_path / "curve.csv"
        assert main(["accumulate", str(src), "--column", "cd_t",
                     "--out", str(out), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        jsonschema.validate(doc, schema("accumulation.schema.json"))
        assert doc["top50_fraction"] == 0.75
        assert out.read_text().startswith("rank_fraction,cum_fraction")

    def test_uniform_exact_half(self, tmp_path, capsys):
        src = tmp_path / "d.csv"
        src.write_text("cd\n" + "\n".join(["1.0"] * 10) + "\n")
        assert main(["accumulate", str(src), "--column", "cd"]) == 0
        out = capsys.readouterr().out
        assert "top50_fraction 0.5\n" in out

    def test_missing_column_exit_2(self, tmp_path, capsys):
        src = tmp_path / "d.csv"
        src.write_text("a,b\n1,2\n3,4\n")
        assert main(["accumulate", str(src), "--column", "cd"]) == 2

    def test_empty_exit_2(self, tmp_path):
        src = tmp_path / "d.csv"
        src.write_text("cd\n")
        assert main(["accumulate", str(src), "--column", "cd"]) == 2


class TestDownsampleCli:
    def test_end_to_end(self, tmp_path, capsys):
        gt, _ = synth_shapes("sphere", 1024, 3)
        coarse = fps(gt, 256, 0)
        rec = fps(gt, 128, 1)
        fgt, fc, fr = tmp_path / "gt.xyz", tmp_path / "c.xyz", tmp_path / "r.xyz"
        write_cloud(gt, fgt)
        write_cloud(coarse, fc)
        write_cloud(rec, fr)
        out = tmp_path / "out.xyz"
        assert main(["downsample", str(fc), "--rec", str(fr), "--gt", str(fgt),
                     "--scorer", "oracle", "--m", "200", "--seed", "4",
                     "--out", str(out), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["points"] == 200
        assert read_cloud(out).size == 200

    def test_constant_scorer_needs_no_gt(self, tmp_path, capsys):
        gt, _ = synth_shapes("sphere", 512, 3)
        fc = tmp_path / "c.xyz"
        write_cloud(fps(gt, 128, 0), fc)
        out = tmp_path / "out.xyz"
        assert main(["downsample", str(fc), "--scorer", "constant",
                     "--m", "64", "--out", str(out)]) == 0
        assert read_cloud(out).size == 64


class TestProfileCli:
    def test_csv_columns(self, tmp_path):
        out = tmp_path / "prof.csv"
        assert main(["profile", "--loss", "dcd", "--alpha", "50",
                     "--steps", "11", "--l-max", "0.5", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "l,grad"
        assert len(lines) == 12
        l, g = lines[1].split(",")
        assert float(l) == 0.0 and float(g) == 0.0

    def test_stdout_mode(self, capsys):
        assert main(["profile", "--loss", "cd-p", "--steps", "3"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "l,grad"


def test_degradation_spec_schema():
    from pcdist import DegradationSpec

    spec = DegradationSpec(seed=3, noise_sigma=1.5)
    doc = json.loads(spec.to_json())
    jsonschema.validate(doc, schema("degradation_spec.schema.json"))


def test_bench_json_schema(capsys):
    assert main(["bench", "--sizes", "64", "--trials", "1", "--seed", "1",
                 "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, schema("bench_report.schema.json"))
    assert doc["checks"]["64"].keys() >= {"dcd_within_5x_cd"}
