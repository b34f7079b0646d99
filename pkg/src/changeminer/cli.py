"""Command-line entry points: mine, patterns, report, stats.

Option precedence is flags over config file over built-in defaults. A config
file holds `key = value` lines with '#' comments; keys are the long flag
names with underscores (e.g. ``min_freq = 3``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .history import (SCHEMA_VERSION, ChangeGraphStore, CommitFilter,
                      RepoUnavailable, mine_repository, read_repos_file)
from .mapping import MapperConfig
from .mining import MiningConfig, load_corpus, mine
from .origins import structural_category
from .report import (export_graph, graph_from_dict, load_pattern_dir,
                     render_html, stats_report, write_pattern_set)

log = logging.getLogger("changeminer")

_CONFIG_KEYS = {
    "jobs": int,
    "max_files_per_commit": int,
    "skip_merges": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "path_glob": str,
    "context_hops": int,
    "min_height": int,
    "dice_threshold": float,
    "max_subtree_compare": int,
    "min_size": int,
    "min_freq": int,
    "max_size": int,
    "max_extensions_per_step": int,
    "per_seed_time_budget": float,
    "cross_project_only": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "keep_subpatterns": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str | Path) -> dict:
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key: {key}")
        values[key] = _CONFIG_KEYS[key](value.strip())
    return values


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    values = dict(defaults)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="changeminer",
        description="Mine recurring semantic code-change patterns from the "
                    "git histories of Python projects.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mine = sub.add_parser("mine", help="extract change graphs from repositories")
    p_mine.add_argument("--repos", required=True,
                        help="file of `repo_id url_or_path [domain_tag]` lines")
    p_mine.add_argument("--out", required=True, help="store directory")
    p_mine.add_argument("--jobs", type=int, default=None)
    p_mine.add_argument("--max-files-per-commit", type=int, default=None,
                        dest="max_files_per_commit")
    p_mine.add_argument("--skip-merges", action=argparse.BooleanOptionalAction,
                        default=None, dest="skip_merges")
    p_mine.add_argument("--path-glob", default=None, dest="path_glob")
    p_mine.add_argument("--context-hops", type=int, default=None,
                        dest="context_hops")
    p_mine.add_argument("--config", default=None)
    p_mine.add_argument("-v", "--verbose", action="store_true")

    p_pat = sub.add_parser("patterns", help="mine patterns from a change-graph store")
    p_pat.add_argument("--store", required=True)
    p_pat.add_argument("--out", required=True)
    p_pat.add_argument("--min-size", type=int, default=None, dest="min_size")
    p_pat.add_argument("--min-freq", type=int, default=None, dest="min_freq")
    p_pat.add_argument("--max-size", type=int, default=None, dest="max_size")
    p_pat.add_argument("--max-extensions-per-step", type=int, default=None,
                       dest="max_extensions_per_step")
    p_pat.add_argument("--per-seed-time-budget", type=float, default=None,
                       dest="per_seed_time_budget")
    p_pat.add_argument("--cross-project-only", action="store_true",
                       default=None, dest="cross_project_only")
    p_pat.add_argument("--keep-subpatterns", action="store_true",
                       default=None, dest="keep_subpatterns")
    p_pat.add_argument("--config", default=None)
    p_pat.add_argument("-v", "--verbose", action="store_true")

    p_rep = sub.add_parser("report", help="export mined patterns")
    p_rep.add_argument("--patterns", required=True)
    p_rep.add_argument("--format", required=True,
                       choices=["html", "dot", "text"])
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("-v", "--verbose", action="store_true")

    p_stats = sub.add_parser("stats", help="summary tables for mined patterns")
    p_stats.add_argument("--patterns", required=True)
    p_stats.add_argument("-v", "--verbose", action="store_true")

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return {
            "mine": cmd_mine,
            "patterns": cmd_patterns,
            "report": cmd_report,
            "stats": cmd_stats,
        }[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_mine(args: argparse.Namespace) -> int:
    values = _merged(args, {
        "jobs": 1, "max_files_per_commit": 50, "skip_merges": True,
        "path_glob": "**/*.py", "context_hops": 1, "min_height": 2,
        "dice_threshold": 0.5, "max_subtree_compare": 100,
    })
    try:
        specs = read_repos_file(args.repos)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read repos file: {exc}", file=sys.stderr)
        return 1
    if not specs:
        print("error: repos file lists no repositories", file=sys.stderr)
        return 1

    filt = CommitFilter(skip_merges=values["skip_merges"],
                        max_files_per_commit=values["max_files_per_commit"],
                        path_glob=values["path_glob"])
    mapper_cfg = MapperConfig(min_height=values["min_height"],
                              dice_threshold=values["dice_threshold"],
                              max_subtree_compare=values["max_subtree_compare"])
    store = ChangeGraphStore(args.out)
    repos_info: dict[str, dict] = {}
    total = 0
    failures = []
    for spec in specs:
        try:
            info = mine_repository(spec, filt, store, mapper_cfg,
                                   values["context_hops"], values["jobs"])
        except RepoUnavailable as exc:
            failures.append(spec.repo_id)
            log.warning("repository %s unavailable: %s", spec.repo_id, exc)
            repos_info[spec.repo_id] = {
                "url": spec.url_or_path, "domain_tag": spec.domain_tag,
                "graphs": 0, "project_modules": [], "unavailable": True,
            }
            continue
        repos_info[spec.repo_id] = info
        total += info["graphs"]
        print(f"{spec.repo_id}: {info['graphs']} change graphs")
    config = {k: values[k] for k in ("max_files_per_commit", "skip_merges",
                                     "path_glob", "context_hops", "min_height",
                                     "dice_threshold", "max_subtree_compare")}
    store.finalize(config, repos_info)
    print(f"total: {total} change graphs from {len(specs) - len(failures)} repositories")
    if failures:
        print("unavailable: " + ", ".join(sorted(failures)), file=sys.stderr)
    return 0


def cmd_patterns(args: argparse.Namespace) -> int:
    values = _merged(args, {
        "min_size": 4, "min_freq": 3, "max_size": 20,
        "max_extensions_per_step": 64, "per_seed_time_budget": 60.0,
        "cross_project_only": False, "keep_subpatterns": False,
    })
    store = ChangeGraphStore(args.store)
    manifest = store.manifest()
    if manifest.get("schema_version") != SCHEMA_VERSION:
        print(f"error: store schema version "
              f"{manifest.get('schema_version')!r} does not match "
              f"{SCHEMA_VERSION}", file=sys.stderr)
        return 1

    cfg = MiningConfig(
        min_size=values["min_size"], min_freq=values["min_freq"],
        max_size=values["max_size"],
        max_extensions_per_step=values["max_extensions_per_step"],
        per_seed_time_budget=values["per_seed_time_budget"],
        cross_project_only=values["cross_project_only"],
        keep_subpatterns=values["keep_subpatterns"])
    corpus = load_corpus(store)
    corpus_index = {graph.id: graph for graph in corpus}
    patterns = mine(corpus, cfg)

    repo_modules = {
        repo_id: set(info.get("project_modules", []))
        for repo_id, info in manifest.get("repos", {}).items()
    }
    for record in patterns.patterns:
        modules: set[str] = set()
        for repo_id in record.project_ids:
            modules |= repo_modules.get(repo_id, set())
        record.category = structural_category(
            record.graph, record.instances, corpus_index,
            frozenset(modules)).value

    mining_config = {k: values[k] for k in (
        "min_size", "min_freq", "max_size", "max_extensions_per_step",
        "cross_project_only", "keep_subpatterns")}
    write_pattern_set(patterns, args.out, store, mining_config)
    samples = sum(record.support for record in patterns.patterns)
    print(f"{len(patterns.patterns)} patterns, {samples} samples")
    for warning in patterns.warnings:
        log.warning("%s", warning)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.format == "html":
        count = render_html(args.patterns, out)
        print(f"wrote {count} pattern pages to {out}")
        return 0
    entries = load_pattern_dir(args.patterns)
    out.mkdir(parents=True, exist_ok=True)
    fmt = "dot" if args.format == "dot" else "structured-text"
    suffix = ".dot" if args.format == "dot" else ".json"
    for entry in entries:
        pattern = graph_from_dict(entry["graph"])
        path = out / (entry["meta"]["name"] + suffix)
        path.write_text(export_graph(pattern, fmt), encoding="utf-8")
    print(f"wrote {len(entries)} {args.format} files to {out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    sys.stdout.write(stats_report(args.patterns))
    return 0


if __name__ == "__main__":
    sys.exit(main())
