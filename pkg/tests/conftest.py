from __future__ import annotations

import pytest

from changeminer.changegraph import Provenance, build_change_graph, hash_email
from changeminer.history import record_from_graph
from changeminer.mapping import map_asts, project_mapping
from changeminer.pdg import build_fgpdg
from changeminer.source import build_import_table, extract_functions, parse_source

FIG2_BEFORE = """\
def fill(collection):
    data = set()
    for elem in collection:
        data.add(elem)
    return data
"""

FIG2_AFTER = """\
def fill(collection):
    data = set()
    data.update(collection)
    return data
"""


def build_unit(source: str, index: int = 0, module: str = "m"):
    tree = parse_source(source)
    units = extract_functions(tree, module)
    return units[index], build_import_table(tree)


def change_graph_for(before_src: str, after_src: str, repo: str = "repo",
                     commit: str = "c1", path: str = "a.py",
                     context_hops: int = 1):
    unit_b, imports_b = build_unit(before_src)
    unit_a, imports_a = build_unit(after_src)
    g_b = build_fgpdg(unit_b, imports_b)
    g_a = build_fgpdg(unit_a, imports_a)
    nm = project_mapping(map_asts(unit_b.body, unit_a.body), g_b, g_a)
    prov = Provenance(repo, commit, commit + "p", path,
                      "m." + unit_b.qualified_name.split(".", 1)[-1],
                      hash_email("dev@example.com"), "change")
    return build_change_graph(g_b, g_a, nm, prov, context_hops)


def change_record(before_src: str, after_src: str, repo: str = "repo",
                  commit: str = "c1", path: str = "a.py") -> dict:
    graph = change_graph_for(before_src, after_src, repo, commit, path)
    assert graph is not None, "expected a non-empty change graph"
    graph.code = {
        "Before": {"text": before_src, "start_line": 1},
        "After": {"text": after_src, "start_line": 1},
    }
    return record_from_graph(graph)


@pytest.fixture
def fig2_record() -> dict:
    return change_record(FIG2_BEFORE, FIG2_AFTER)
