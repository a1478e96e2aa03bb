from qubopart.bestknown import (best_known, graph_meta, load_extra_registry,
                                load_registry)


def test_archive_values_frozen():
    assert best_known("uk", 2, 0.0) == 19
    assert best_known("3elt", 2, 0.0) == 90
    assert best_known("add20", 2, 0.0) == 596
    assert best_known("add20", 2, 0.01) == 585
    assert best_known("add32", 2, 0.05) == 10
    assert best_known("bcsstk33", 2, 0.03) == 10064


def test_kway_values_present():
    assert best_known("uk", 3, 0.05) == 29
    assert best_known("add20", 3, 0.0) == 936


def test_missing_entries_yield_none():
    assert best_known("no_such_graph", 2, 0.0) is None
    assert best_known("uk", 7, 0.0) is None
    assert best_known("uk", 2, 0.42) is None


def test_epsilon_keying_tolerates_float_noise():
    assert best_known("uk", 2, 0.03) == best_known("uk", 2, 0.030000000000000002)


def test_registry_shape():
    reg = load_registry()
    assert len(reg) >= 100
    assert all(e.cut >= 1 and e.n > 1 for e in reg.values())
    assert {e.source for e in reg.values()} == {"archive", "observed"}


def test_graph_meta():
    assert graph_meta("uk") == (4824, 1.42)
    assert graph_meta("add20") == (2395, 3.12)
    assert graph_meta("missing") is None


def test_extra_registry_overrides(tmp_path):
    path = tmp_path / "extra.csv"
    path.write_text("graph,n,d_avg,k,eps_pct,cut,source\n"
                    "uk,4824,1.42,2,0,17,private\n"
                    "mygraph,50,2.0,2,0,7,\n")
    extra = load_extra_registry(str(path))
    assert best_known("uk", 2, 0.0, extra) == 17
    assert best_known("mygraph", 2, 0.0, extra) == 7
    assert extra[("mygraph", 2, 0.0)].source == "user"
    # entries outside the extra table still come from the built-in registry
    assert best_known("3elt", 2, 0.0, extra) == 90
