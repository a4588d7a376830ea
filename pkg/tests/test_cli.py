import csv
import io
import json

import pytest

from cwerank.cli import main

from .conftest import CATALOG_FILES, FEED_FILES, FIXTURES


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
    return list(csv.reader(io.StringIO(body)))


def test_build_counts(catalog_args, capsys):
    code, out, _ = run(["build", *catalog_args], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["composite"] == {"nodes": 16, "edges": 19, "base_edges": 11, "direct_edges": 3, "indirect_edges": 5}
    assert doc["unified"] == {"nodes": 21, "edges": 25}
    assert doc["metadata"]["catalog_release"]["version"] == "4.0"


def test_rank_rows_equal_observed_classes(catalog_args, feed_args, adorned, capsys):
    code, out, _ = run(["rank", *catalog_args, *feed_args, "--year", "2019", "--metric", "freq", "--group", "class"], capsys)
    assert code == 0
    rows = data_rows(out)
    observed = [n for n in adorned.nodes if adorned.dag.abstractions[n].value == "Class" and adorned.cves(n)]
    assert rows[0] == ["rank", "cwe_id", "abstraction", "value", "n_i"]
    assert len(rows) - 1 == len(observed)
    assert out.splitlines()[0].startswith("# catalog_files:")
    assert "\r\n" in out


def test_rank_is_byte_identical(tmp_path, catalog_args, feed_args):
    outputs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        assert main(["rank", *catalog_args, *feed_args, "--year", "2019", "--metric", "official", "--group", "all", "-o", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_rank_json_and_top(catalog_args, feed_args, capsys):
    code, out, _ = run(["rank", *catalog_args, *feed_args, "--year", "2019", "--format", "json", "--top", "2",
                        "--metric", "cvss", "--group", "nonclass", "--mode", "raw"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["entries"]) == 2
    assert doc["metadata"]["mode"] == "raw"


def test_missing_feed_names_path(catalog_args, tmp_path, capsys):
    missing = tmp_path / "absent.json"
    code, _, err = run(["rank", *catalog_args, "--feed", str(missing)], capsys)
    assert code != 0
    assert str(missing) in err


def test_bad_year(catalog_args, feed_args, capsys):
    code, _, err = run(["rank", *catalog_args, *feed_args, "--year", "1990"], capsys)
    assert code != 0 and "1990" in err


def test_unsupported_view_flag(capsys):
    code, _, err = run(["build", "--catalog", f"1008={CATALOG_FILES[1003]}"], capsys)
    assert code != 0 and "1008" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[cwerank]\n"
        + "".join(f"catalog.{v} = {p}\n" for v, p in CATALOG_FILES.items())
        + f"feeds = {' '.join(str(p) for p in FEED_FILES)}\n"
        + "year = 2019\nmetric = impact\ngroup = nonclass\nformat = json\n"
    )
    code, out, _ = run(["rank", "--config", str(cfg)], capsys)
    doc = json.loads(out)
    assert code == 0
    assert (doc["metric"], doc["group"]) == ("impact", "nonclass")


def test_data_dir_from_environment(tmp_path, monkeypatch, capsys):
    (tmp_path / "cwe").mkdir()
    (tmp_path / "nvd").mkdir()
    for view, path in CATALOG_FILES.items():
        (tmp_path / "cwe" / f"{view}.xml").write_bytes(path.read_bytes())
    for path in FEED_FILES:
        (tmp_path / "nvd" / path.name).write_bytes(path.read_bytes())
    monkeypatch.setenv("CWERANK_DATA_DIR", str(tmp_path))
    code, out, _ = run(["export-adorned", "--year", "2019"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["nodes"]) == 16


def test_ingest(feed_args, capsys):
    code, out, _ = run(["ingest", *feed_args, "--year", "2019", "--vectors"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["count"] == 20 and len(doc["vectors"]) == 20


def test_compare_and_baseline(tmp_path, catalog_args, feed_args, capsys):
    paths = []
    for mode in ("raw", "propagated"):
        path = tmp_path / f"freq_class_{mode}.json"
        main(["rank", *catalog_args, *feed_args, "--year", "2019", "--format", "json", "--mode", mode, "-o", str(path)])
        paths.append(str(path))
    code, out, _ = run(["compare", "--rankings", *paths, "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["kendall"][0][1] == 3 and doc["footrule"][0][1] == 4
    assert doc["dropped"] == [682]

    code, out, _ = run(["baseline", "--n", "10", "--trials", "2000", "--seed", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["n"] == 10 and doc["trials"] == 2000
    code, out, _ = run(["baseline", "--n", "10", "--trials", "2000", "--seed", "1", "--format", "csv"], capsys)
    assert data_rows(out)[1][0] == "10"


def test_compare_rejects_non_ranking(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, err = run(["compare", "--rankings", str(bad), str(bad)], capsys)
    assert code != 0 and "bad.json" in err


def test_exports(catalog_args, feed_args, capsys):
    code, out, _ = run(["export-dot", *catalog_args], capsys)
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run(["export-dot", *catalog_args, *feed_args, "--year", "2019", "--adorned"], capsys)
    assert code == 0 and "vectors=13" in out
    code, out, _ = run(["export-graph", *catalog_args], capsys)
    assert json.loads(out)["edge_counts"]["indirect"] == 5
    code, out, _ = run(["dump-catalog", *catalog_args], capsys)
    assert len(json.loads(out)["entries"]) == 21


def test_reproduce_with_fixture_expectations(tmp_path, catalog_args, feed_args, capsys):
    out_dir = tmp_path / "bundle"
    code, out, _ = run(["reproduce", *catalog_args, *feed_args, "--year", "2019", "--out-dir", str(out_dir),
                        "--baseline-trials", "2000", "--expect", str(FIXTURES / "expect_fixture.txt")], capsys)
    assert code == 0, out
    assert all(line.startswith("[PASS]") for line in out.splitlines())
    assert (out_dir / "summary.json").is_file()
    assert (out_dir / "rankings" / "freq_class_propagated.csv").is_file()
    assert (out_dir / "metric_matrix_nonclass.csv").is_file()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["ranking_lengths"]["freq/class/propagated"] == 5


def test_reproduce_reference_values_fail_on_fixture(tmp_path, catalog_args, feed_args, capsys):
    code, out, _ = run(["reproduce", *catalog_args, *feed_args, "--year", "2019", "--out-dir", str(tmp_path / "b"),
                        "--baseline-trials", "1000", "--expect", "reference"], capsys)
    assert code == 1
    assert "[FAIL] graph.base_nodes" in out


@pytest.mark.parametrize("argv", [["rank", "--metric", "bogus"], []])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
