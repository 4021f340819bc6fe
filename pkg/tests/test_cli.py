import json

import numpy as np
import pytest

from numsim import cli, metrics, svgplot
from numsim.cli import main
from numsim.elicitation import ContextKind, MockModel, MockModelConfig, render_prompt
from numsim.matrix import load_grid


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def small_grid(tmp_path):
    path = tmp_path / "grid.csv"
    rc = run([
        "elicit", "--range", "0:19", "--model", "mock", "--mock-rating-step", "0",
        "--out", path,
    ])
    assert rc == 0
    return path


class TestElicit:
    def test_writes_grid_and_manifest(self, small_grid, tmp_path):
        grid = load_grid(small_grid)
        assert grid.values.shape == (20, 20)
        manifest = json.loads((tmp_path / "grid.csv.manifest.json").read_text())
        assert "config_hash" in manifest
        assert manifest["config"]["range"] == "0:19"

    def test_cache_rerun_is_noop(self, tmp_path, capsys):
        cache = tmp_path / "cache.jsonl"
        args = ["elicit", "--range", "0:9", "--model", "mock",
                "--cache", cache, "--out", tmp_path / "g1.csv"]
        run(args)
        first = capsys.readouterr().out
        assert "100 request(s)" in first
        args[-1] = tmp_path / "g2.csv"
        run(args)
        second = capsys.readouterr().out
        assert "0 request(s)" in second
        assert (tmp_path / "g1.csv").read_text().split("created_at")[1] != ""  # files exist
        g1, g2 = load_grid(tmp_path / "g1.csv"), load_grid(tmp_path / "g2.csv")
        assert np.array_equal(g1.values, g2.values)

    def test_config_file_fills_defaults(self, tmp_path):
        conf = tmp_path / "conf.txt"
        conf.write_text("range=0:5\nmodel=mock\n")
        out = tmp_path / "g.csv"
        assert run(["elicit", "--config", conf, "--out", out]) == 0
        assert load_grid(out).values.shape == (6, 6)

    def test_extended_range_spot_pairs(self):
        # ranges beyond three digits parse and the mock covers them
        assert cli._parse_range("0:1999") == (0, 1999)
        ctx = ContextKind("basic")
        mock = MockModel(MockModelConfig(rating_step=0.0), 0, 1999, ctx)
        for a, b in ((1999, 999), (1500, 500), (0, 1999)):
            r = float(mock.complete(render_prompt(ctx, a, b)))
            assert 0.0 <= r <= 1.0
        assert float(mock.complete(render_prompt(ctx, 1999, 1999))) == 1.0


class TestDecompose:
    def test_all_predictors_accepted(self, small_grid, tmp_path):
        out = tmp_path / "report.txt"
        rc = run([
            "decompose", "--grid", small_grid,
            "--predictors", "levenshtein,loglinear,linearl1",
            "--n-reps", "20", "--out", out,
        ])
        assert rc == 0
        text = out.read_text()
        for tag in (metrics.LEVENSHTEIN, metrics.LOGLINEAR, metrics.LINEAR_L1):
            assert f"single_{tag}_r2=" in text

    def test_unknown_predictor(self, small_grid, tmp_path):
        with pytest.raises(SystemExit):
            run(["decompose", "--grid", small_grid, "--predictors", "cosine",
                 "--n-reps", "10", "--out", tmp_path / "r.txt"])

    def test_missing_grid_file(self, tmp_path):
        rc = run(["decompose", "--grid", tmp_path / "nope.csv",
                  "--out", tmp_path / "r.txt"])
        assert rc == 2


class TestMds:
    def test_embedding_roundtrip(self, small_grid, tmp_path):
        out = tmp_path / "pts.csv"
        rc = run(["mds", "--grid", small_grid, "--seed", "1", "--out", out])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "index,label,dim0,dim1"
        assert len(lines) == 21


class TestProbeCommands:
    @pytest.fixture
    def residuals(self, tmp_path):
        from numsim.probes import ResidualDataset, distance_targets, save_residuals

        rng = np.random.default_rng(0)
        grids = np.stack(
            np.meshgrid(np.arange(10), np.arange(10), indexing="ij"), axis=-1
        ).reshape(-1, 2)
        d = distance_targets(grids, metrics.DistanceKind(metrics.LOGLINEAR))
        vectors = np.stack([d, np.ones_like(d)], axis=1) + rng.normal(size=(100, 2)) * 1e-3
        path = tmp_path / "resid.nsrd"
        save_residuals(
            ResidualDataset(pairs=grids, vectors=vectors.astype(np.float32)), path
        )
        return path

    def test_train_eval_sweep(self, residuals, tmp_path, capsys):
        probe_path = tmp_path / "probe.json"
        rc = run(["probe", "train", "--residuals", residuals, "--target", "loglinear",
                  "--epochs", "300", "--learning-rate", "0.01", "--out", probe_path])
        assert rc == 0
        out_grid = tmp_path / "decoded.csv"
        rc = run(["probe", "eval", "--probe", probe_path, "--residuals", residuals,
                  "--range", "0:9", "--out", out_grid])
        assert rc == 0
        printed = capsys.readouterr().out
        assert "pearson r vs loglinear" in printed
        assert load_grid(out_grid).values.shape == (10, 10)
        sweep_out = tmp_path / "sweep.csv"
        rc = run(["probe", "sweep", "--residuals", f"0={residuals}",
                  "--target", "loglinear", "--epochs", "5", "--out", sweep_out])
        assert rc == 0
        assert sweep_out.read_text().startswith("layer,train_size,test_r\n")


class TestTripletsCommands:
    def test_gen_run_score(self, tmp_path, capsys):
        tpath = tmp_path / "triplets.csv"
        rc = run(["triplets", "gen", "--digits", "3", "--samples", "200",
                  "--seed", "0", "--out", tpath])
        assert rc == 0
        rpath = tmp_path / "results.csv"
        rc = run(["triplets", "run", "--triplets", tpath, "--responder", "stringy",
                  "--out", rpath])
        assert rc == 0
        spath = tmp_path / "scores.csv"
        rc = run(["triplets", "score", "--results", rpath, "--out", spath])
        assert rc == 0
        text = spath.read_text()
        assert "3,lev_first,1.0000" in text
        assert "3,log_first,1.0000" in text


class TestRender:
    def test_heatmap_svg(self, small_grid, tmp_path):
        out = tmp_path / "grid.svg"
        assert run(["render", "--grid", small_grid, "--out", out]) == 0
        svg = out.read_text()
        assert svg.startswith("<svg")
        assert svg.count("<rect") >= 400  # one cell per entry

    def test_scatter_svg(self, small_grid, tmp_path):
        pts = tmp_path / "pts.csv"
        run(["mds", "--grid", small_grid, "--seed", "1", "--out", pts])
        out = tmp_path / "pts.svg"
        assert run(["render", "--points", pts, "--out", out]) == 0
        assert out.read_text().count("<circle") == 20

    def test_render_needs_source(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["render", "--out", tmp_path / "x.svg"])

    def test_svg_deterministic(self, small_grid):
        g = load_grid(small_grid)
        assert svgplot.heatmap_svg(g) == svgplot.heatmap_svg(g)


class TestStability:
    def test_identical_grids(self, small_grid, capsys):
        assert run(["stability", "--grid-a", small_grid, "--grid-b", small_grid]) == 0
        out = capsys.readouterr().out
        assert "pearson_r=1.000000" in out
        assert "mean_abs_diff=0.000000" in out


class TestPrompt:
    def test_prompt_matches_fixture(self, tmp_path, fixtures_dir, capsys):
        assert run(["prompt", "--context", "basic", "--a", "3", "--b", "7"]) == 0
        out = capsys.readouterr().out
        assert out == (fixtures_dir / "prompt_basic_3_7.txt").read_text()

    def test_concentration_prompt(self, capsys):
        rc = run(["prompt", "--context", "concentration",
                  "--a", "785", "--b", "685", "--c", "791"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "approximately 785 ppm" in out


class TestManifest:
    def test_config_hash_reproducible(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["elicit", "--range", "0:4", "--model", "mock", "--out", out1])
        run(["elicit", "--range", "0:4", "--model", "mock", "--out", out2])
        m1 = json.loads((tmp_path / "a.csv.manifest.json").read_text())
        m2 = json.loads((tmp_path / "b.csv.manifest.json").read_text())
        # configs differ only in the output path
        assert m1["config"]["range"] == m2["config"]["range"]
        run(["elicit", "--range", "0:4", "--model", "mock", "--out", out1])
        m1b = json.loads((tmp_path / "a.csv.manifest.json").read_text())
        assert m1["config_hash"] == m1b["config_hash"]
