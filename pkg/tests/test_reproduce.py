import pytest

from cwerank.reproduce import (
    check_expectations,
    load_expectations,
    parse_expectations,
    reproduce_analysis,
    write_bundle,
)


@pytest.fixture(scope="module")
def bundle(catalog, dag, adorned):
    return reproduce_analysis(catalog, dag, adorned, baseline_trials=1000, seed=5)


def test_parse_expectations():
    exps = parse_expectations("a = 3\nb = 87.99  # note\n\nc = 315 +- 2\n")
    assert [(e.key, e.value, e.tolerance) for e in exps] == [("a", 3, 0), ("b", 87.99, pytest.approx(0.005)), ("c", 315, 2)]
    with pytest.raises(ValueError):
        parse_expectations("missing equals sign")


def test_bundled_reference_file_parses():
    keys = {e.key for e in load_expectations("reference")}
    assert {"graph.base_nodes", "dist.class.freq.kendall", "baseline.87.footrule", "means.propagated"} <= keys


def test_mean_keys_accept_either_definition(bundle):
    observed = bundle.means["raw_observed"]
    (result,) = check_expectations(bundle, parse_expectations(f"means.raw = {observed:.4f}"))
    assert result.ok and "direct mapping" in result.note


def test_unknown_key_fails(bundle):
    (result,) = check_expectations(bundle, parse_expectations("graph.nonsense = 1"))
    assert not result.ok and result.line().startswith("[FAIL]")


def test_summary_contents(bundle):
    summary = bundle.summary()
    assert set(summary["random_baselines"]) == {"5", "9"}
    assert summary["official_top_list"]["raw"]["classes"] == 4
    assert summary["official_top_list"]["propagated"]["classes"] == 5


def test_write_bundle_is_complete_and_clean(bundle, tmp_path):
    out = tmp_path / "out"
    written = write_bundle(bundle, out)
    assert len(written) == 1 + 2 * 18 + 1 + 2
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out"]
    first = {p: p.read_bytes() for p in written}
    write_bundle(bundle, out)
    assert {p: p.read_bytes() for p in written} == first
