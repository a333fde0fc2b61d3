"""Figure rendering: discovery, per-kind output, and failure modes."""

import numpy as np
import pytest

from mirrorlangevin.harness import ExperimentConfig, run_experiment
from plots import cli as plots_cli
from plots.figures import RenderError, available_kinds, discover, render_figures


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundle")
    run_experiment(
        ExperimentConfig(
            preset="gengauss-desk",
            overrides={"steps": 40, "runs": 2, "dimension": 3},
            out_dir=str(root / "gg"),
        )
    )
    run_experiment(
        ExperimentConfig(
            preset="rectangle-fig3", overrides={"steps": 40}, out_dir=str(root / "rf")
        )
    )
    return root


class TestDiscovery:
    def test_finds_runs_and_kinds(self, bundle):
        runs = {r.preset: r for r in discover(bundle)}
        assert set(runs) == {"gengauss-desk", "rectangle-fig3"}
        assert available_kinds(runs["gengauss-desk"]) == ["errorCurve", "scatter"]
        assert available_kinds(runs["rectangle-fig3"]) == ["scatter"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(RenderError, match="not a directory"):
            discover(tmp_path / "nope")

    def test_no_metrics_found(self, tmp_path):
        with pytest.raises(RenderError, match="no metrics.csv"):
            discover(tmp_path)

    def test_empty_csv_is_an_error(self, tmp_path):
        run_dir = tmp_path / "empty"
        run_dir.mkdir()
        (run_dir / "metrics.csv").write_text("preset,sampler,run,iter,metric,value\n")
        with pytest.raises(RenderError, match="empty"):
            discover(tmp_path)

    def test_bad_header(self, tmp_path):
        run_dir = tmp_path / "bad"
        run_dir.mkdir()
        (run_dir / "metrics.csv").write_text("a,b\n1,2\n")
        with pytest.raises(RenderError, match="header"):
            discover(tmp_path)


class TestRendering:
    def test_render_all(self, bundle, tmp_path):
        written = render_figures(bundle, tmp_path / "figs")
        names = sorted(p.name for p in written)
        assert names == [
            "errorCurve-gengauss-desk-mean_sq_error.png",
            "errorCurve-gengauss-desk-scatter_rel_sq_error.png",
            "scatter-gengauss-desk.png",
            "scatter-rectangle-fig3.png",
        ]
        for p in written:
            assert p.stat().st_size > 0

    def test_single_kind(self, bundle, tmp_path):
        written = render_figures(bundle, tmp_path / "figs", figures="errorCurve")
        assert {p.name.split("-")[0] for p in written} == {"errorCurve"}

    def test_unknown_kind(self, bundle, tmp_path):
        with pytest.raises(RenderError, match="unknown figure kind"):
            render_figures(bundle, tmp_path / "figs", figures="heatmap")

    def test_missing_metric_kind(self, bundle, tmp_path):
        out = tmp_path / "figs"
        with pytest.raises(RenderError, match="sinkhornCurve"):
            render_figures(bundle, out, figures="sinkhornCurve")
        assert not out.exists()

    def test_final_iterates_inside_box(self, bundle):
        # display-only check that the trajectory data behind the rectangle
        # scatter stays inside the outlined box
        run = next(r for r in discover(bundle) if r.preset == "rectangle-fig3")
        a = np.asarray(run.meta["box_half_widths"])
        pts = np.array([(x1, x2) for s, _, _, x1, x2 in run.samples if s == "nla"])
        assert len(pts) > 0
        assert np.all(np.abs(pts) <= a)


class TestCli:
    def test_render_exit_codes(self, bundle, tmp_path, capsys):
        rc = plots_cli.main(
            ["render", "--figures", "all", "--csv", str(bundle), "--out", str(tmp_path / "o")]
        )
        assert rc == 0
        assert "errorCurve-gengauss-desk" in capsys.readouterr().out

    def test_error_path(self, tmp_path, capsys):
        rc = plots_cli.main(
            ["render", "--figures", "all", "--csv", str(tmp_path), "--out", str(tmp_path / "o")]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()
