from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from changeminer.mining import (CorpusGraph, MiningConfig, PatternGraph, TNode,
                                canonical_key, collect_seeds, exact_isomorphic,
                                extend, filter_cross_project, filter_maximal,
                                load_corpus, mine, refinement_colors,
                                support_of, verify_instance)
from changeminer.mining import PatternRecord

from _oracle import brute_force_isomorphic, oracle_pattern_keys
from conftest import FIG2_AFTER, FIG2_BEFORE, change_record


def synth_record(gid: str, repo: str, nodes, edges=(), maps=(), changed=()):
    """Record dict from shorthand: nodes = [(kind, subkind, label, version)]."""
    return {
        "id": gid,
        "provenance": {"repo_id": repo, "commit_hash": "c" + gid,
                       "parent_hash": "p" + gid, "file_path": "a.py",
                       "function": "m.f", "author_email_hash": "x",
                       "commit_message": ""},
        "nodes": [
            {"id": i, "kind": k, "subkind": sk, "label": lb,
             "concrete_name": None, "version": v, "span": [1, 0, 1, 1]}
            for i, (k, sk, lb, v) in enumerate(nodes)
        ],
        "edges": [{"src": s, "dst": d, "kind": k, "label": l}
                  for s, d, k, l in edges],
        "map_edges": [list(p) for p in maps],
        "changed": sorted(changed),
        "code": {},
    }


def add_update_record(gid: str, repo: str) -> dict:
    nodes = [
        ("Operation", "call", "?.add", "Before"),    # 0
        ("Data", "var", "var", "Before"),            # 1 receiver
        ("Operation", "call", "?.update", "After"),  # 2
        ("Data", "var", "var", "After"),             # 3 receiver
    ]
    edges = [(1, 0, "Data", "recv"), (3, 2, "Data", "recv")]
    maps = [(0, 2), (1, 3)]
    return synth_record(gid, repo, nodes, edges, maps, changed={0, 2})


def fig2_corpus(repos=("ra", "rb", "rc")):
    return load_corpus([
        change_record(FIG2_BEFORE, FIG2_AFTER, repo, f"c{i}")
        for i, repo in enumerate(repos)
    ])


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def test_seed_group_for_three_add_update_graphs():
    corpus = load_corpus([add_update_record(f"g{i}", f"r{i}") for i in range(3)])
    seeds = collect_seeds(corpus)
    assert ("?.add", "?.update") in seeds
    assert len(seeds[("?.add", "?.update")]) == 3


def test_low_support_group_retained_but_never_mined():
    corpus = load_corpus([add_update_record(f"g{i}", f"r{i}") for i in range(2)])
    seeds = collect_seeds(corpus)
    assert len(seeds[("?.add", "?.update")]) == 2
    result = mine(corpus, MiningConfig(min_size=2, min_freq=3))
    assert result.patterns == []


def test_unchanged_far_seed_group_pruned():
    # print<->print pair with no changed node anywhere in the graph
    record = synth_record(
        "g1", "r1",
        nodes=[("Operation", "call", "print", "Before"),
               ("Operation", "call", "print", "After")],
        maps=[(0, 1)], changed=())
    seeds = collect_seeds(load_corpus([record]))
    assert ("print", "print") not in seeds


def test_store_without_call_map_edges_gives_no_seeds():
    record = synth_record(
        "g1", "r1",
        nodes=[("Data", "var", "var", "Before"), ("Data", "var", "var", "After")],
        maps=[(0, 1)], changed={0})
    assert collect_seeds(load_corpus([record])) == {}


# ---------------------------------------------------------------------------
# Extension
# ---------------------------------------------------------------------------


def seed_pattern(label_b: str, label_a: str) -> PatternGraph:
    return PatternGraph(
        (TNode("Before", "Operation", "call", label_b),
         TNode("After", "Operation", "call", label_a)),
        frozenset(), frozenset({(0, 1)}))


def test_extension_adds_receiver_kept_by_all_instances():
    corpus = load_corpus([add_update_record(f"g{i}", f"r{i}") for i in range(3)])
    index = {g.id: g for g in corpus}
    pattern = seed_pattern("?.add", "?.update")
    instances = [(g.id, (0, 2)) for g in corpus]
    children = extend(pattern, instances, index, MiningConfig(min_size=2))
    recv_children = [
        (child, inst) for child, inst in children
        if any(label == "recv" for _, _, _, label in child.edges)
    ]
    assert recv_children
    child, inst = recv_children[0]
    assert child.size == 3
    assert len(inst) == 3


def test_growth_supported_by_too_few_instances_not_returned():
    records = [add_update_record(f"g{i}", f"r{i}") for i in range(3)]
    del records[0]["edges"][0]  # remove one before-receiver edge
    corpus = load_corpus(records)
    index = {g.id: g for g in corpus}
    pattern = seed_pattern("?.add", "?.update")
    instances = [(g.id, (0, 2)) for g in corpus]
    children = extend(pattern, instances, index, MiningConfig(min_size=2))
    before_recv = [
        child for child, _ in children
        if any(label == "recv" and child.nodes[src].version == "Before"
               for src, _, _, label in child.edges)
    ]
    assert before_recv == []


def test_closure_includes_map_edge_between_added_receivers():
    corpus = load_corpus([add_update_record(f"g{i}", f"r{i}") for i in range(3)])
    result = mine(corpus, MiningConfig(min_size=2, min_freq=3))
    assert len(result.patterns) == 1
    graph = result.patterns[0].graph
    assert graph.size == 4
    assert len(graph.map_edges) == 2  # call pair plus receiver pair


def test_pattern_at_max_size_not_extended():
    corpus = load_corpus([add_update_record(f"g{i}", f"r{i}") for i in range(3)])
    result = mine(corpus, MiningConfig(min_size=2, min_freq=3, max_size=2))
    assert all(record.size <= 2 for record in result.patterns)


# ---------------------------------------------------------------------------
# Canonical keys and isomorphism
# ---------------------------------------------------------------------------


def _permuted(pattern: PatternGraph, seed: int) -> PatternGraph:
    rng = random.Random(seed)
    perm = list(range(pattern.size))
    rng.shuffle(perm)
    nodes = [None] * pattern.size
    for old, new in enumerate(perm):
        nodes[new] = pattern.nodes[old]
    edges = frozenset((perm[s], perm[d], k, l) for s, d, k, l in pattern.edges)
    maps = frozenset((perm[b], perm[a]) for b, a in pattern.map_edges)
    return PatternGraph(tuple(nodes), edges, maps)


_sig_pool = [
    TNode("Before", "Operation", "call", "f"),
    TNode("Before", "Data", "var", "var"),
    TNode("After", "Operation", "call", "g"),
    TNode("After", "Data", "var", "var"),
    TNode("Before", "Data", "literal", "0"),
]


@st.composite
def _pattern_graphs(draw):
    n = draw(st.integers(2, 7))
    nodes = tuple(draw(st.sampled_from(_sig_pool)) for _ in range(n))
    edges = set()
    for dst in range(1, n):
        src = draw(st.integers(0, dst - 1))
        label = draw(st.sampled_from(["ref", "para", "def"]))
        edges.add((src, dst, "Data", label))
    maps = set()
    for b in range(n):
        for a in range(n):
            if nodes[b].version == "Before" and nodes[a].version == "After" \
                    and nodes[b].kind == nodes[a].kind and draw(st.booleans()):
                maps.add((b, a))
    return PatternGraph(nodes, frozenset(edges), frozenset(maps))


@given(_pattern_graphs(), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_canonical_key_invariant_under_renumbering(pattern, seed):
    shuffled = _permuted(pattern, seed)
    assert canonical_key(pattern) == canonical_key(shuffled)
    assert exact_isomorphic(pattern, shuffled)


def test_patterns_differing_in_one_label_get_distinct_keys():
    p = seed_pattern("?.add", "?.update")
    q = seed_pattern("?.add", "?.extend")
    assert canonical_key(p) != canonical_key(q)


def _cycle_pattern(cycle_edges: list[tuple[int, int]], n: int) -> PatternGraph:
    sig = TNode("Before", "Data", "var", "var")
    edges = set()
    for u, v in cycle_edges:
        edges.add((u, v, "Data", "ref"))
        edges.add((v, u, "Data", "ref"))
    return PatternGraph(tuple(sig for _ in range(n)), frozenset(edges),
                        frozenset())


def test_refinement_collision_separated_by_exact_check():
    # Two 6-cycles sharing an edge vs two 5-cycles joined by an edge: the
    # classic pair that neighbourhood refinement cannot tell apart.
    decalin = _cycle_pattern(
        [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0),
         (0, 6), (6, 7), (7, 8), (8, 9), (9, 1)], 10)
    bicyclopentyl = _cycle_pattern(
        [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0),
         (5, 6), (6, 7), (7, 8), (8, 9), (9, 5), (0, 5)], 10)
    assert sorted(refinement_colors(decalin)) == sorted(refinement_colors(bicyclopentyl))
    assert not exact_isomorphic(decalin, bicyclopentyl)
    assert not brute_force_isomorphic(decalin, bicyclopentyl)


# ---------------------------------------------------------------------------
# Mining end to end
# ---------------------------------------------------------------------------


def test_planted_fig2_corpus_yields_single_cross_project_pattern():
    result = mine(fig2_corpus(), MiningConfig())
    assert len(result.patterns) == 1
    record = result.patterns[0]
    assert record.support == 3
    assert record.project_ids == ["ra", "rb", "rc"]
    labels = {(record.graph.nodes[b].label, record.graph.nodes[a].label)
              for b, a in record.graph.call_pairs()}
    assert ("?.add", "?.update") in labels


def test_every_emitted_binding_reverifies():
    corpus = fig2_corpus()
    index = {g.id: g for g in corpus}
    result = mine(corpus, MiningConfig(keep_subpatterns=True))
    assert result.patterns
    for record in result.patterns:
        for gid, binding in record.instances:
            assert verify_instance(record.graph, index[gid], binding)
        assert support_of(record.graph, record.instances) == record.support
        assert any(
            all(binding[idx] in index[gid].changed
                for gid, binding in record.instances)
            for idx in range(record.graph.size))
        assert record.graph.call_pairs()


def test_threshold_monotonicity():
    corpus = fig2_corpus()
    base = mine(corpus, MiningConfig(keep_subpatterns=True))
    higher_freq = mine(corpus, MiningConfig(min_freq=4, keep_subpatterns=True))
    larger_size = mine(corpus, MiningConfig(min_size=6, keep_subpatterns=True))
    assert len(higher_freq.patterns) <= len(base.patterns)
    assert len(larger_size.patterns) <= len(base.patterns)


def test_determinism_across_runs():
    keys1 = [r.canonical_key for r in mine(fig2_corpus(), MiningConfig()).patterns]
    keys2 = [r.canonical_key for r in mine(fig2_corpus(), MiningConfig()).patterns]
    assert keys1 == keys2


def _record_with(size: int, instances) -> PatternRecord:
    sig = TNode("Before", "Operation", "call", "f")
    return PatternRecord(
        graph=PatternGraph(tuple(sig for _ in range(size)), frozenset(),
                           frozenset({(0, 0)})),
        instances=instances, canonical_key=f"k{size}",
        support=len(instances), project_ids=["r"])


def test_filter_maximal_drops_contained_chain():
    p = _record_with(2, [("g1", (0, 1)), ("g2", (0, 1)), ("g3", (0, 1))])
    q = _record_with(3, [("g1", (0, 1, 2)), ("g2", (0, 1, 2)), ("g3", (0, 1, 2))])
    r = _record_with(4, [("g1", (0, 1, 2, 3)), ("g2", (0, 1, 2, 3)),
                         ("g3", (0, 1, 2, 3))])
    kept = filter_maximal([p, q, r])
    assert kept == [r]


def test_filter_maximal_keeps_pattern_with_wider_coverage():
    p = _record_with(2, [("g1", (0, 1)), ("g2", (0, 1)), ("g3", (0, 1)),
                         ("g4", (0, 1)), ("g5", (0, 1))])
    q = _record_with(3, [("g1", (0, 1, 2)), ("g2", (0, 1, 2)), ("g3", (0, 1, 2))])
    kept = filter_maximal([p, q])
    assert p in kept and q in kept


def test_filter_cross_project():
    multi = _record_with(2, [("g1", (0, 1))])
    multi.project_ids = ["a", "b"]
    single = _record_with(2, [("g2", (0, 1))])
    single.project_ids = ["a"]
    assert filter_cross_project([multi, single]) == [multi]


def test_budget_warning_recorded():
    corpus = fig2_corpus()
    result = mine(corpus, MiningConfig(per_seed_time_budget=0.0))
    assert result.patterns == []
    assert any("budget" in w for w in result.warnings)


# ---------------------------------------------------------------------------
# Oracle equivalence (quick sample; the full 50-corpus run is in acceptance)
# ---------------------------------------------------------------------------


def _random_fragment(rng: random.Random) -> dict:
    """A small recurring change motif: mapped call pair plus attachments."""
    label_b = rng.choice(["f", "g", "?.h", "?.k"])
    label_a = rng.choice(["f2", "?.h2", label_b])
    changed_calls = rng.random() < 0.8 or label_b != label_a
    nodes = [("Operation", "call", label_b, "Before", changed_calls),
             ("Operation", "call", label_a, "After", changed_calls)]
    edges: list[tuple[int, int, str, str]] = []
    maps: list[tuple[int, int]] = [(0, 1)]
    attach_b, attach_a = None, None
    for version, call_idx in (("Before", 0), ("After", 1)):
        for _ in range(rng.randint(0, 2)):
            sig = rng.choice([("Data", "var", "var"),
                              ("Data", "literal", rng.choice(["0", "1"]))])
            idx = len(nodes)
            nodes.append((*sig, version, rng.random() < 0.4))
            label = rng.choice(["ref", "para", "recv", "def"])
            if rng.random() < 0.8:
                edges.append((idx, call_idx, "Data", label))
            else:
                edges.append((call_idx, idx, "Data", label))
            if version == "Before":
                attach_b = (idx, sig)
            elif attach_a is None:
                attach_a = (idx, sig)
    if attach_b and attach_a and attach_b[1] == attach_a[1] and rng.random() < 0.6:
        maps.append((attach_b[0], attach_a[0]))
    return {"nodes": nodes, "edges": edges, "maps": maps}


def random_corpus(seed: int) -> list[CorpusGraph]:
    """Tiny corpora with planted recurring fragments plus random noise."""
    rng = random.Random(seed)
    fragments = [_random_fragment(rng) for _ in range(rng.randint(2, 3))]
    records = []
    for gi in range(rng.randint(3, 6)):
        nodes: list[tuple] = []
        edges: set[tuple] = set()
        maps: set[tuple] = set()
        changed: set[int] = set()
        for fragment in rng.sample(fragments, rng.randint(1, min(2, len(fragments)))):
            if len(nodes) + len(fragment["nodes"]) > 10:
                continue
            offset = len(nodes)
            for kind, subkind, label, version, is_changed in fragment["nodes"]:
                if is_changed:
                    changed.add(len(nodes))
                nodes.append((kind, subkind, label, version))
            edges |= {(s + offset, d + offset, k, l)
                      for s, d, k, l in fragment["edges"]}
            maps |= {(b + offset, a + offset) for b, a in fragment["maps"]}
        if not nodes:
            continue
        for _ in range(rng.randint(0, 2)):  # noise nodes and edges
            if len(nodes) >= 12:
                break
            idx = len(nodes)
            version = rng.choice(["Before", "After"])
            nodes.append(("Data", "var", "var", version))
            if rng.random() < 0.5:
                changed.add(idx)
            same_side = [i for i in range(idx)
                         if nodes[i][3] == version]
            if same_side:
                other = rng.choice(same_side)
                edges.add((idx, other, "Data", rng.choice(["ref", "para"])))
        records.append(synth_record(
            f"g{gi}", f"r{gi % 2}", nodes, sorted(edges), sorted(maps), changed))
    return load_corpus(records)


_ORACLE_CFG = MiningConfig(
    min_size=3, min_freq=2, max_size=6,
    max_extensions_per_step=10_000, per_seed_time_budget=600.0,
    keep_subpatterns=True)


@pytest.mark.parametrize("seed", range(10))
def test_mining_matches_oracle_on_random_corpus(seed):
    corpus = random_corpus(seed)
    mined = mine(corpus, _ORACLE_CFG)
    mined_keys = {record.canonical_key for record in mined.patterns}
    oracle_keys = oracle_pattern_keys(corpus, _ORACLE_CFG)
    assert mined_keys == oracle_keys
