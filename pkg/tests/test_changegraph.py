from __future__ import annotations

from changeminer.changegraph import build_change_graph, mark_changed
from changeminer.mapping import map_asts, project_mapping
from changeminer.pdg import build_fgpdg

from conftest import FIG2_AFTER, FIG2_BEFORE, build_unit, change_graph_for


def pipeline(before_src: str, after_src: str):
    unit_b, imports_b = build_unit(before_src)
    unit_a, imports_a = build_unit(after_src)
    g_b = build_fgpdg(unit_b, imports_b)
    g_a = build_fgpdg(unit_a, imports_a)
    nm = project_mapping(map_asts(unit_b.body, unit_a.body), g_b, g_a)
    return g_b, g_a, nm


def test_identical_revisions_mark_nothing_changed():
    src = "def f(a):\n    return g(a) + 1\n"
    g_b, g_a, nm = pipeline(src, src)
    changed_b, changed_a = mark_changed(g_b, g_a, nm)
    assert changed_b == set() and changed_a == set()


def test_identical_revisions_build_no_change_graph():
    src = "def f(a):\n    b = g(a)\n    return b\n"
    assert change_graph_for(src, src) is None


def test_whitespace_only_commit_builds_no_change_graph():
    before = "def f(a):\n    return g(a)\n"
    after = "def f(a):\n\n    return g( a )\n"
    assert change_graph_for(before, after) is None


def test_renamed_call_marks_both_versions_changed():
    g_b, g_a, nm = pipeline(FIG2_BEFORE, FIG2_AFTER)
    changed_b, changed_a = mark_changed(g_b, g_a, nm)
    add = next(n for n in g_b.nodes if n.label == "?.add")
    update = next(n for n in g_a.nodes if n.label == "?.update")
    assert add.id in changed_b
    assert update.id in changed_a


def test_unmapped_new_argument_is_changed():
    before = "def f(x):\n    g(x)\n"
    after = "def f(x):\n    g(x, 1)\n"
    g_b, g_a, nm = pipeline(before, after)
    _, changed_a = mark_changed(g_b, g_a, nm)
    literal = next(n for n in g_a.nodes if n.subkind == "literal")
    assert literal.id in changed_a


def test_fig2_change_graph_has_required_map_edges():
    graph = change_graph_for(FIG2_BEFORE, FIG2_AFTER)
    labels = {n.id: (n.label, n.concrete_name, n.version) for n in graph.nodes}
    mapped = {(labels[b][:2], labels[a][:2]) for b, a in graph.map_edges}
    assert (("?.add", "add"), ("?.update", "update")) in mapped
    assert (("var", "collection"), ("var", "collection")) in mapped
    assert graph.changed


def test_map_edges_connect_matching_versions_and_kinds():
    graph = change_graph_for(FIG2_BEFORE, FIG2_AFTER)
    by_id = {n.id: n for n in graph.nodes}
    for b, a in graph.map_edges:
        assert by_id[b].version == "Before"
        assert by_id[a].version == "After"
        assert by_id[b].kind == by_id[a].kind


def test_context_pruning_keeps_one_hop_neighbours():
    before = (
        "def f(a, b):\n"
        "    x = first(a)\n"
        "    y = second(b)\n"
        "    z = third(x, y)\n"
        "    return checker(z)\n"
    )
    after = before.replace("checker", "verifier")
    graph = change_graph_for(before, after, context_hops=1)
    labels_before = {(n.label, n.concrete_name) for n in graph.nodes
                     if n.version == "Before"}
    # changed call, its argument var, plus 1-hop mapped neighbour of z (third)
    assert ("checker", "checker") in labels_before
    assert ("var", "z") in labels_before
    assert ("third", "third") in labels_before
    # two hops away: the argument vars of third and everything upstream
    assert ("var", "x") not in labels_before
    assert ("first", "first") not in labels_before


def test_context_zero_keeps_only_changed_nodes():
    before = "def f(a):\n    x = g(a)\n    return check(x)\n"
    after = "def f(a):\n    x = g(a)\n    return verify(x)\n"
    graph = change_graph_for(before, after, context_hops=0)
    by_id = {n.id: n for n in graph.nodes}
    assert set(by_id) == graph.changed


def test_all_map_edges_connect_surviving_nodes():
    graph = change_graph_for(FIG2_BEFORE, FIG2_AFTER)
    ids = {n.id for n in graph.nodes}
    for b, a in graph.map_edges:
        assert b in ids and a in ids
    for edge in graph.edges:
        assert edge.src in ids and edge.dst in ids


def test_node_count_bounded_by_inputs():
    g_b, g_a, nm = pipeline(FIG2_BEFORE, FIG2_AFTER)
    graph = build_change_graph(
        g_b, g_a, nm,
        change_graph_for(FIG2_BEFORE, FIG2_AFTER).provenance)
    assert len(graph.nodes) <= len(g_b.nodes) + len(g_a.nodes)
