"""Command-line interface: exit codes, artifacts, report schema, determinism."""

import json

import numpy as np
import pytest

from geomix.cli import REPORT_KEYS, main
from geomix.graphio import save_edge_list
from geomix.plots import roc_points
from geomix.synth import gen_homophily


@pytest.fixture()
def smoke_graph(tmp_path):
    g = gen_homophily(30, clusters=2, p_in=0.5, p_out=0.03, seed=0)
    path = tmp_path / "graph.tsv"
    save_edge_list(g, path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestUsageErrors:
    def test_no_command_exits_two(self):
        with pytest.raises(SystemExit) as err:
            run()
        assert err.value.code == 2

    def test_train_missing_graph_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run("train", "--out", tmp_path / "m")
        assert err.value.code == 2

    def test_bad_flag_values_exit_two(self, smoke_graph, tmp_path):
        for flags in (
            ["--dim", "0"],
            ["--eta", "-1"],
            ["--wS", "0"],
            ["--gamma-fixed", "1.5"],
            ["--space", "hom=Q"],
            ["--mode", "vae"],
        ):
            with pytest.raises(SystemExit) as err:
                run("train", "--graph", smoke_graph, "--out", tmp_path / "m", *flags)
            assert err.value.code == 2, flags

    def test_generate_bad_kind_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run("generate", "--kind", "nonsense", "--n", "10", "--out", tmp_path / "g")
        assert err.value.code == 2


class TestRuntimeErrors:
    def test_missing_graph_file_exits_one(self, tmp_path, capsys):
        rc = run("train", "--graph", tmp_path / "nope.tsv", "--out", tmp_path / "m",
                 "--epochs", "1")
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_empty_graph_file_exits_one(self, tmp_path, capsys):
        p = tmp_path / "empty.tsv"
        p.write_text("# nothing here\n")
        rc = run("train", "--graph", p, "--out", tmp_path / "m", "--epochs", "1")
        assert rc == 1
        assert "no edges" in capsys.readouterr().err

    def test_divergent_eta_exits_one(self, smoke_graph, tmp_path, capsys):
        rc = run("train", "--graph", smoke_graph, "--out", tmp_path / "m",
                 "--epochs", "40", "--eta", "3000")
        assert rc == 1
        assert "step size" in capsys.readouterr().err

    def test_eval_on_different_graph_exits_one(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        assert run("train", "--graph", smoke_graph, "--out", out, "--epochs", "2") == 0
        other = gen_homophily(25, clusters=2, p_in=0.5, p_out=0.03, seed=9)
        other_path = tmp_path / "other.tsv"
        save_edge_list(other, other_path)
        rc = run("eval", "--model", out, "--graph", other_path)
        assert rc == 1
        assert "do not match" in capsys.readouterr().err

    def test_inductive_eval_without_encoder_exits_one(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        assert run("train", "--graph", smoke_graph, "--out", out, "--epochs", "2") == 0
        rc = run("eval", "--model", out, "--graph", smoke_graph, "--inductive")
        assert rc == 1
        assert "nmm-gnn" in capsys.readouterr().err


class TestTrainCommand:
    def test_smoke_writes_artifacts(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        rc = run("train", "--graph", smoke_graph, "--out", out,
                 "--epochs", "5", "--dim", "4")
        assert rc == 0
        for name in ("model.json", "embeddings.csv", "idmap.tsv", "trace.tsv", "curves.png"):
            assert (out / name).exists(), name
        stdout = capsys.readouterr().out
        assert stdout.startswith("epochs_run\t5\n")
        assert "val_auc\t" in stdout
        assert "gamma\t" in stdout
        trace = (out / "trace.tsv").read_text().strip().split("\n")
        assert trace[0] == "epoch\tl_s\tl_h\tunify\tval_auc"
        assert len(trace) == 6

    def test_embeddings_csv_schema(self, smoke_graph, tmp_path):
        out = tmp_path / "m"
        run("train", "--graph", smoke_graph, "--out", out, "--epochs", "2", "--dim", "3")
        lines = (out / "embeddings.csv").read_text().strip().split("\n")
        assert lines[0] == "id,s0,s1,s2,h0,h1,h2,h3"
        assert len(lines) == 31
        row = lines[1].split(",")
        z_s = np.array([float(v) for v in row[1:4]])
        assert np.linalg.norm(z_s) == pytest.approx(0.5, abs=1e-9)

    def test_zero_epochs_ok(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        rc = run("train", "--graph", smoke_graph, "--out", out, "--epochs", "0")
        assert rc == 0
        assert (out / "model.json").exists()
        assert not (out / "curves.png").exists()
        assert "epochs_run\t0" in capsys.readouterr().out

    def test_gamma_fixed_reported(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        run("train", "--graph", smoke_graph, "--out", out,
            "--epochs", "2", "--gamma-fixed", "1.0")
        assert "gamma\t1.000000" in capsys.readouterr().out
        doc = json.loads((out / "model.json").read_text())
        assert doc["gamma_fixed"] == 1.0

    def test_space_and_unify_flags(self, smoke_graph, tmp_path):
        out = tmp_path / "m"
        rc = run("train", "--graph", smoke_graph, "--out", out, "--epochs", "2",
                 "--space", "hom=E,rank=E", "--no-unify")
        assert rc == 0
        doc = json.loads((out / "model.json").read_text())
        assert doc["hom_space"] == "E"
        assert doc["rank_space"] == "E"
        assert doc["unify"] is False

    def test_byte_determinism(self, smoke_graph, tmp_path):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = run("train", "--graph", smoke_graph, "--out", out,
                     "--epochs", "6", "--seed", "11")
            assert rc == 0
            blobs.append(
                (
                    (out / "embeddings.csv").read_bytes(),
                    (out / "model.json").read_bytes(),
                    (out / "trace.tsv").read_bytes(),
                )
            )
        assert blobs[0] == blobs[1]


class TestEvalCommand:
    def test_report_schema_and_artifacts(self, smoke_graph, tmp_path, capsys):
        out = tmp_path / "m"
        run("train", "--graph", smoke_graph, "--out", out, "--epochs", "5")
        capsys.readouterr()
        rc = run("eval", "--model", out, "--graph", smoke_graph)
        assert rc == 0
        assert (out / "report.tsv").exists()
        assert (out / "report_roc.png").exists()
        lines = (out / "report.tsv").read_text().strip().split("\n")
        keys = [ln.split("\t")[0] for ln in lines]
        assert keys == list(REPORT_KEYS)
        stdout = capsys.readouterr().out
        assert stdout == (out / "report.tsv").read_text()
        vals = dict(ln.split("\t") for ln in lines)
        assert 0.0 <= float(vals["auc"]) <= 1.0
        assert vals["ji"] == "nan"  # no labels supplied
        assert float(vals["l_recon"]) < 0.0

    def test_labels_flow_into_report(self, tmp_path):
        g = gen_homophily(40, clusters=2, p_in=0.5, p_out=0.02, seed=1)
        gen_dir = tmp_path / "g"
        rc = run("generate", "--kind", "homophily", "--n", "40", "--seed", "1",
                 "--clusters", "2", "--p-in", "0.5", "--p-out", "0.02",
                 "--out", gen_dir)
        assert rc == 0
        out = tmp_path / "m"
        rc = run("train", "--graph", gen_dir / "edges.tsv",
                 "--labels", gen_dir / "labels.tsv", "--out", out, "--epochs", "10")
        assert rc == 0
        rc = run("eval", "--model", out, "--graph", gen_dir / "edges.tsv",
                 "--labels", gen_dir / "labels.tsv")
        assert rc == 0
        vals = dict(
            ln.split("\t")
            for ln in (out / "report.tsv").read_text().strip().split("\n")
        )
        for key in ("ji", "hl", "f1"):
            assert np.isfinite(float(vals[key]))

    def test_out_flag_redirects_report(self, smoke_graph, tmp_path):
        out = tmp_path / "m"
        run("train", "--graph", smoke_graph, "--out", out, "--epochs", "3")
        rep = tmp_path / "rep"
        rc = run("eval", "--model", out, "--graph", smoke_graph, "--out", rep)
        assert rc == 0
        assert (rep / "report.tsv").exists()
        assert not (out / "report.tsv").exists()

    def test_eval_byte_determinism(self, smoke_graph, tmp_path):
        out = tmp_path / "m"
        run("train", "--graph", smoke_graph, "--out", out, "--epochs", "5")
        reports = []
        for name in ("r1", "r2"):
            rep = tmp_path / name
            assert run("eval", "--model", out, "--graph", smoke_graph, "--out", rep) == 0
            reports.append((rep / "report.tsv").read_bytes())
        assert reports[0] == reports[1]

    def test_inductive_eval_runs_on_encoder_model(self, tmp_path, capsys):
        g = gen_homophily(40, clusters=2, p_in=0.5, p_out=0.03, seed=2)
        gp = tmp_path / "graph.tsv"
        save_edge_list(g, gp)
        out = tmp_path / "m"
        rc = run("train", "--graph", gp, "--out", out, "--mode", "nmm-gnn",
                 "--epochs", "10", "--dim", "4")
        assert rc == 0
        capsys.readouterr()
        rc = run("eval", "--model", out, "--graph", gp, "--inductive")
        assert rc == 0
        vals = dict(
            ln.split("\t")
            for ln in (out / "report.tsv").read_text().strip().split("\n")
        )
        assert 0.0 <= float(vals["auc"]) <= 1.0


class TestGenerateCommand:
    def test_homophily_outputs(self, tmp_path, capsys):
        out = tmp_path / "g"
        rc = run("generate", "--kind", "homophily", "--n", "50", "--out", out)
        assert rc == 0
        assert (out / "edges.tsv").exists()
        assert (out / "labels.tsv").exists()
        stdout = capsys.readouterr().out
        assert stdout.startswith("nodes\t50\n")
        assert "edges\t" in stdout

    def test_influence_has_no_labels(self, tmp_path):
        out = tmp_path / "g"
        rc = run("generate", "--kind", "influence", "--n", "50", "--out", out)
        assert rc == 0
        assert (out / "edges.tsv").exists()
        assert not (out / "labels.tsv").exists()

    def test_mixed_outputs(self, tmp_path):
        out = tmp_path / "g"
        rc = run("generate", "--kind", "mixed", "--n", "60", "--mix", "0.5", "--out", out)
        assert rc == 0
        assert (out / "edges.tsv").exists()
        assert (out / "labels.tsv").exists()

    def test_model_kind_writes_truth(self, tmp_path):
        out = tmp_path / "g"
        rc = run("generate", "--kind", "model", "--n", "40", "--dim", "3", "--out", out)
        assert rc == 0
        for name in ("edges.tsv", "true_embeddings.csv", "plink.tsv", "true_params.json"):
            assert (out / name).exists(), name
        doc = json.loads((out / "true_params.json").read_text())
        assert doc["gamma"] == pytest.approx(0.75)
        assert doc["w_s"] == pytest.approx(0.5)
        p = np.loadtxt(out / "plink.tsv")
        assert p.shape == (40, 40)
        assert np.all((p >= 0.0) & (p <= 1.0))

    def test_generated_graph_trains(self, tmp_path):
        gdir = tmp_path / "g"
        run("generate", "--kind", "mixed", "--n", "40", "--seed", "3", "--out", gdir)
        rc = run("train", "--graph", gdir / "edges.tsv", "--out", tmp_path / "m",
                 "--epochs", "3")
        assert rc == 0

    def test_determinism(self, tmp_path):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run("generate", "--kind", "mixed", "--n", "50", "--seed", "7", "--out", out)
            blobs.append((out / "edges.tsv").read_bytes())
        assert blobs[0] == blobs[1]


class TestRocPoints:
    def test_monotone_and_endpoints(self):
        rng = np.random.default_rng(0)
        pos = rng.uniform(0.4, 1.0, 50)
        neg = rng.uniform(0.0, 0.6, 50)
        fpr, tpr = roc_points(pos, neg)
        assert fpr[0] == 0.0 and tpr[0] == 0.0
        assert fpr[-1] == 1.0 and tpr[-1] == 1.0
        assert np.all(np.diff(fpr) >= 0.0)
        assert np.all(np.diff(tpr) >= 0.0)
