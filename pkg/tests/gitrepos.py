"""Scripted git repositories for tests: deterministic commits, no network."""

from __future__ import annotations

import subprocess
from pathlib import Path

_ENV = {
    "GIT_AUTHOR_NAME": "Test Dev",
    "GIT_AUTHOR_EMAIL": "dev@example.com",
    "GIT_COMMITTER_NAME": "Test Dev",
    "GIT_COMMITTER_EMAIL": "dev@example.com",
    "GIT_AUTHOR_DATE": "2021-01-01T00:00:00 +0000",
    "GIT_COMMITTER_DATE": "2021-01-01T00:00:00 +0000",
    "HOME": "/tmp",
}


def git(repo: Path, *args: str) -> str:
    result = subprocess.run(
        ["git", "-c", "init.defaultBranch=main", "-c", "commit.gpgsign=false",
         "-C", str(repo), *args],
        capture_output=True, text=True, check=True, env=_ENV)
    return result.stdout


def init_repo(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    git(path, "init", "-q")
    return path


def commit_files(repo: Path, files: dict[str, str], message: str) -> str:
    """Write files, stage everything, commit; returns the commit hash."""
    for rel, content in files.items():
        target = repo / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", message, "--allow-empty")
    return git(repo, "rev-parse", "HEAD").strip()


def merge_branches(repo: Path, base_files: dict[str, str],
                   branch_files: dict[str, str]) -> str:
    """Create a two-parent merge commit; returns its hash."""
    git(repo, "checkout", "-q", "-b", "feature")
    commit_files(repo, branch_files, "feature work")
    git(repo, "checkout", "-q", "main")
    commit_files(repo, base_files, "main work")
    git(repo, "merge", "-q", "--no-ff", "-m", "merge feature", "feature")
    return git(repo, "rev-parse", "HEAD").strip()
