import json

import numpy as np
import pytest

from conftest import cliques, random_graph
from dcdclust import io
from dcdclust.cli import main
from dcdclust.graph import validate_graph


@pytest.fixture
def two_clique_graph(tmp_path):
    A, truth = cliques([4, 4])
    path = tmp_path / "g.mtx"
    io.write_graph(A, path)
    return path, truth


def test_graph_round_trip(tmp_path):
    A = validate_graph([(0, 1, 0.1 + 0.2), (1, 2, 1 / 3), (0, 3, 7.0), (2, 3, 1e-300)], 4)
    io.write_graph(A, tmp_path / "a.mtx")
    B = io.read_graph(tmp_path / "a.mtx")
    assert B.same_as(A)
    text = (tmp_path / "a.mtx").read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate real symmetric")


def test_graph_file_is_one_based(tmp_path):
    io.write_graph(validate_graph([(0, 1, 1.0)], 2), tmp_path / "a.mtx")
    body = [l for l in (tmp_path / "a.mtx").read_text().splitlines() if not l.startswith("%")]
    assert body[0] == "2 2 1"
    assert body[1].split()[:2] == ["2", "1"]


def test_read_graph_isolated_node(tmp_path):
    p = tmp_path / "iso.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 1\n2 1 1.0\n")
    with pytest.raises(Exception, match="node 2"):
        io.read_graph(p)


def test_labels_round_trip(tmp_path):
    io.write_labels([3, 0, 2], tmp_path / "l.txt")
    np.testing.assert_array_equal(io.read_labels(tmp_path / "l.txt"), [3, 0, 2])


def test_build_graph_two_rows(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("0.0,1.0\n2.0,3.0\n")
    assert main(["build-graph", str(tmp_path / "x.csv"), "-k", "1", "-o", str(tmp_path / "g.mtx")]) == 0
    out = capsys.readouterr().out
    assert "n: 2" in out and "edges: 1" in out
    assert io.read_graph(tmp_path / "g.mtx").entries() == [(0, 1, 1.0)]


def test_build_graph_header(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("a,b\n0,0\n1,0\n5,5\n")
    assert main(["build-graph", str(tmp_path / "x.csv"), "-k", "1", "--header", "-o", str(tmp_path / "g.mtx")]) == 0
    assert io.read_graph(tmp_path / "g.mtx").n == 3


def test_build_graph_iris(tmp_path, data_dir, capsys):
    out = tmp_path / "iris.mtx"
    assert main(["build-graph", str(data_dir / "iris.csv"), "-k", "5", "-o", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "n: 150" in stdout and "min_degree: 5" in stdout
    assert io.read_graph(out).n == 150


def test_build_graph_missing_file(tmp_path, capsys):
    code = main(["build-graph", str(tmp_path / "nope.csv"), "-k", "1", "-o", str(tmp_path / "g.mtx")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_build_graph_bad_k(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("0\n1\n")
    assert main(["build-graph", str(tmp_path / "x.csv"), "-k", "2", "-o", str(tmp_path / "g.mtx")]) == 2


def test_cluster_two_cliques(tmp_path, two_clique_graph, capsys):
    graph, truth = two_clique_graph
    out = tmp_path / "res.json"
    trace = tmp_path / "trace.jsonl"
    code = main(["cluster", str(graph), "--clusters", "2", "-o", str(out), "--max-iters", "200",
                 "--soft", "--trace", str(trace)])
    assert code == 0
    doc = json.loads(out.read_text())
    labels = np.array(doc["labels"])
    assert len(set(labels[:4])) == 1 and len(set(labels[4:])) == 1 and labels[0] != labels[4]
    assert doc["n"] == 8 and doc["r"] == 2
    assert len(doc["candidates"]) == 4
    assert doc["kl_error"] == min(c["final_kl"] for c in doc["candidates"])
    assert np.array(doc["soft"]).shape == (8, 2)
    assert doc["config"]["seed"] == 42 and doc["config"]["alphas"] == [1.2, 2.0, 5.0]

    records = [json.loads(line) for line in trace.read_text().splitlines()]
    stages = {(r["candidate"], r["stage"]) for r in records}
    assert ("ncut", "final") in stages and ("dcd-prior-5", "prior") in stages
    assert "selected:" in capsys.readouterr().out


def test_cluster_single_cluster(tmp_path):
    A = random_graph(10, 1)
    io.write_graph(A, tmp_path / "g.mtx")
    assert main(["cluster", str(tmp_path / "g.mtx"), "-r", "1", "-o", str(tmp_path / "r.json"), "--max-iters", "50"]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["labels"] == [0] * 10


def test_cluster_deterministic_files(tmp_path, two_clique_graph):
    graph, _ = two_clique_graph
    args = ["cluster", str(graph), "-r", "2", "--max-iters", "100", "--soft"]
    assert main([*args, "-o", str(tmp_path / "a.json"), "--trace", str(tmp_path / "a.jsonl")]) == 0
    assert main([*args, "-o", str(tmp_path / "b.json"), "--trace", str(tmp_path / "b.jsonl"), "--threads", "4"]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_cluster_all_candidates_fail(tmp_path, two_clique_graph, monkeypatch, capsys):
    from dcdclust import dcd
    from dcdclust.errors import DegenerateClusterError

    def broken(*args, **kwargs):
        raise DegenerateClusterError("cluster 1 emptied", cluster=1)

    monkeypatch.setattr(dcd, "run", broken)
    graph, _ = two_clique_graph
    assert main(["cluster", str(graph), "-r", "2", "-o", str(tmp_path / "r.json")]) == 3
    err = capsys.readouterr().err
    assert err.count("cluster 1 emptied") == 4


def test_cluster_missing_graph(tmp_path):
    assert main(["cluster", str(tmp_path / "none.mtx"), "-r", "2", "-o", str(tmp_path / "r.json")]) == 2


def test_cluster_bad_alphas(tmp_path, two_clique_graph):
    graph, _ = two_clique_graph
    with pytest.raises(SystemExit) as err:
        main(["cluster", str(graph), "-r", "2", "-o", str(tmp_path / "r.json"), "--alphas", "0.5"])
    assert err.value.code == 2


def test_eval_perfect(tmp_path, capsys):
    (tmp_path / "r.json").write_text(json.dumps({"labels": [1, 1, 0, 0]}))
    (tmp_path / "t.txt").write_text("0\n0\n1\n1\n")
    assert main(["eval", str(tmp_path / "r.json"), str(tmp_path / "t.txt")]) == 0
    assert capsys.readouterr().out.strip() == "purity: 1.0000"


def test_eval_truncated_truth(tmp_path, capsys):
    (tmp_path / "r.json").write_text(json.dumps({"labels": [1, 1, 0, 0]}))
    (tmp_path / "t.txt").write_text("0\n0\n1\n")
    assert main(["eval", str(tmp_path / "r.json"), str(tmp_path / "t.txt")]) == 2
    assert "error" in capsys.readouterr().err


def test_eval_bad_label_file(tmp_path):
    (tmp_path / "r.json").write_text(json.dumps({"labels": [0, 1]}))
    (tmp_path / "t.txt").write_text("0\nx\n")
    assert main(["eval", str(tmp_path / "r.json"), str(tmp_path / "t.txt")]) == 2
