"""Commit-history ingestion: log parsing, year windowing, project selection.

The canonical export format is newline-delimited JSON, one object per commit
with keys ``repo``, ``hash``, ``author``, ``ts`` (ISO-8601), ``msg``,
``files`` and ``merge``. A raw ``git log`` format (record/unit separator
based, documented by the ``export-log-recipe`` subcommand) is also parsed.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import InputError

GIT_LOG_RECIPE = r"""Export a repository's history for ccp-miner:

    git log --all --no-color \
        --pretty=format:'%x1e%H%x1f%ae%x1f%aI%x1f%P%x1f%B%x1f' \
        --name-only > history.gitlog

Records are separated by \x1e, fields by \x1f:
hash, author email, ISO-8601 author date, parent hashes, raw message body.
The file list produced by --name-only follows the last field.
A commit with more than one parent is flagged as a merge.

Feed the file to `ccp-miner classify` or `ccp-miner analyze` with
`--input-format git --repo <name>`, or convert it once to the canonical
newline-delimited JSON with `ccp-miner classify` piping.
"""


@dataclass(frozen=True)
class CommitRecord:
    """One parsed commit: identity, author, timestamp, message, files."""

    repo_id: str
    hash: str
    author_id: str
    timestamp: datetime
    message: str
    files: tuple[str, ...] = ()
    is_merge: bool = False

    def __post_init__(self):
        if not self.hash:
            raise ValueError("commit hash must be non-empty")

    @property
    def year(self) -> int:
        return self.timestamp.astimezone(timezone.utc).year

    def as_dict(self) -> dict:
        return {
            "repo": self.repo_id,
            "hash": self.hash,
            "author": self.author_id,
            "ts": self.timestamp.astimezone(timezone.utc).isoformat(),
            "msg": self.message,
            "files": list(self.files),
            "merge": self.is_merge,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.as_dict(), ensure_ascii=False, sort_keys=True)


@dataclass
class ParseResult:
    records: list[CommitRecord]
    skipped: int


def _record_from_dict(obj: dict) -> CommitRecord:
    ts = datetime.fromisoformat(obj["ts"])
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return CommitRecord(
        repo_id=str(obj["repo"]),
        hash=str(obj["hash"]),
        author_id=str(obj["author"]).strip().lower(),
        timestamp=ts,
        message=str(obj["msg"]),
        files=tuple(obj.get("files") or ()),
        is_merge=bool(obj.get("merge", False)),
    )


def parse_git_log(stream: Iterable[str]) -> ParseResult:
    """Parse newline-delimited JSON commit objects.

    Malformed lines are skipped and counted; an input with zero parseable
    records raises InputError.
    """
    records: list[CommitRecord] = []
    skipped = 0
    seen: set[tuple[str, str]] = set()
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            record = _record_from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            skipped += 1
            continue
        key = (record.repo_id, record.hash)
        if key in seen:
            skipped += 1
            continue
        seen.add(key)
        records.append(record)
    if not records:
        raise InputError(f"no parseable commit records (skipped {skipped} lines)")
    return ParseResult(records=records, skipped=skipped)


def parse_raw_git_log(text: str, repo_id: str) -> ParseResult:
    """Parse the separator-based `git log` export documented in GIT_LOG_RECIPE."""
    records: list[CommitRecord] = []
    skipped = 0
    seen: set[str] = set()
    for chunk in text.split("\x1e"):
        if not chunk.strip():
            continue
        fields = chunk.split("\x1f")
        if len(fields) != 6:
            skipped += 1
            continue
        commit_hash, author, ts_text, parents, message, file_block = fields
        try:
            ts = datetime.fromisoformat(ts_text.strip())
        except ValueError:
            skipped += 1
            continue
        if commit_hash in seen:
            skipped += 1
            continue
        seen.add(commit_hash)
        files = tuple(f.strip() for f in file_block.splitlines() if f.strip())
        records.append(
            CommitRecord(
                repo_id=repo_id,
                hash=commit_hash.strip(),
                author_id=author.strip().lower(),
                timestamp=ts,
                message=message.rstrip("\n"),
                files=files,
                is_merge=len(parents.split()) > 1,
            )
        )
    if not records:
        raise InputError(f"no parseable commit records (skipped {skipped} chunks)")
    return ParseResult(records=records, skipped=skipped)


def window_by_year(commits: Iterable[CommitRecord]) -> dict[int, list[CommitRecord]]:
    """Partition commits by UTC calendar year."""
    windows: dict[int, list[CommitRecord]] = defaultdict(list)
    for commit in commits:
        windows[commit.year].append(commit)
    return dict(windows)


def involved_authors(commits: Iterable[CommitRecord], threshold: int = 12) -> set[str]:
    """Authors with at least `threshold` non-merge commits in the given set."""
    counts = Counter(c.author_id for c in commits if not c.is_merge)
    return {author for author, n in counts.items() if n >= threshold}


# ---------------------------------------------------------------------------
# Project selection

@dataclass
class ProjectDescriptor:
    """Per-project commit inventory used by the selection pipeline."""

    repo_id: str
    owner: str
    name: str
    is_fork: bool
    commit_hashes_by_year: dict[int, frozenset[str]] = field(default_factory=dict)

    @property
    def commit_hashes(self) -> frozenset[str]:
        out: set[str] = set()
        for hashes in self.commit_hashes_by_year.values():
            out |= hashes
        return frozenset(out)

    @property
    def commit_count_by_year(self) -> dict[int, int]:
        return {year: len(hashes) for year, hashes in self.commit_hashes_by_year.items()}

    def total_commits(self) -> int:
        return sum(len(h) for h in self.commit_hashes_by_year.values())

    @classmethod
    def from_commits(
        cls, commits: Iterable[CommitRecord], owner: str = "", name: str = "", is_fork: bool = False
    ) -> "ProjectDescriptor":
        by_year: dict[int, set[str]] = defaultdict(set)
        repo_id = ""
        for commit in commits:
            repo_id = commit.repo_id
            by_year[commit.year].add(commit.hash)
        if not repo_id:
            raise InputError("cannot build a project descriptor from zero commits")
        if not owner and "/" in repo_id:
            owner, _, name = repo_id.partition("/")
        return cls(
            repo_id=repo_id,
            owner=owner or repo_id,
            name=name or repo_id,
            is_fork=is_fork,
            commit_hashes_by_year={y: frozenset(h) for y, h in by_year.items()},
        )


@dataclass
class SelectionResult:
    accepted: list[ProjectDescriptor]
    exclusions: list[tuple[str, str]]  # (repo_id, rule)


def _size_key(project: ProjectDescriptor, year: int) -> tuple[int, int, str]:
    # "Larger" = more commits in the analysis year; ties by total commits,
    # then repo_id, giving a total order.
    return (
        len(project.commit_hashes_by_year.get(year, frozenset())),
        project.total_commits(),
        project.repo_id,
    )


def select_projects(
    projects: list[ProjectDescriptor],
    year: int,
    min_commits: int = 200,
    shared_threshold: int = 50,
) -> SelectionResult:
    """Apply the selection pipeline for one analysis year.

    In order: drop projects under `min_commits` commits in the year, drop
    forks, drop projects dominated by a strictly larger surviving project
    (more than `shared_threshold` shared hashes in the year), and dedup
    same-name projects keeping the owner with more projects in the input.
    Every excluded project appears exactly once in the report.
    """
    exclusions: list[tuple[str, str]] = []

    survivors = []
    for project in projects:
        if len(project.commit_hashes_by_year.get(year, frozenset())) < min_commits:
            exclusions.append((project.repo_id, "min_commits"))
        else:
            survivors.append(project)

    kept = []
    for project in survivors:
        if project.is_fork:
            exclusions.append((project.repo_id, "fork"))
        else:
            kept.append(project)
    survivors = kept

    # Dominance: walk largest-first so the largest project of any
    # shared-commit cluster is always retained.
    ordered = sorted(survivors, key=lambda p: _size_key(p, year), reverse=True)
    retained: list[ProjectDescriptor] = []
    dominated: set[str] = set()
    for project in ordered:
        hashes = project.commit_hashes_by_year.get(year, frozenset())
        for larger in retained:
            larger_hashes = larger.commit_hashes_by_year.get(year, frozenset())
            if len(hashes & larger_hashes) > shared_threshold:
                dominated.add(project.repo_id)
                exclusions.append((project.repo_id, "dominated"))
                break
        else:
            retained.append(project)
    survivors = [p for p in survivors if p.repo_id not in dominated]

    owner_projects = Counter(p.owner for p in projects)
    by_name: dict[str, list[ProjectDescriptor]] = defaultdict(list)
    for project in survivors:
        by_name[project.name].append(project)
    accepted = []
    for name, group in by_name.items():
        winner = min(group, key=lambda p: (-owner_projects[p.owner], p.owner))
        for project in group:
            if project is winner:
                accepted.append(project)
            else:
                exclusions.append((project.repo_id, "duplicate_name"))

    order = {p.repo_id: i for i, p in enumerate(projects)}
    accepted.sort(key=lambda p: order[p.repo_id])
    return SelectionResult(accepted=accepted, exclusions=exclusions)


def load_project_metadata(path: str | Path) -> dict[str, dict]:
    """Load the ``repo_id,owner,name,is_fork`` project metadata CSV."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = {
                r["repo_id"]: {
                    "owner": r["owner"],
                    "name": r["name"],
                    "is_fork": r["is_fork"].strip().lower() in ("1", "true", "yes"),
                }
                for r in reader
            }
    except (OSError, KeyError, TypeError) as exc:
        raise InputError(f"cannot load project metadata {path}: {exc}") from exc
    return rows
