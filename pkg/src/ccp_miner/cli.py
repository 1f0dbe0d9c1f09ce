"""Command-line interface wiring ingestion, classification, estimation and stats.

Every report embeds the tool version, model id, performance constants, seed
and a hash of the resolved configuration, so identical runs are
byte-identical. Exit codes: 0 success, 2 configuration error, 3 input
error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from . import analytics, classifier, estimator, ingestion, stats
from .errors import ConfigError, InputError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4

CONFIG_ENV_VAR = "CCP_MINER_CONFIG"

# Reference medians from large-corpus diagnostics: english hit rate of
# below-zero projects vs valid ones, and their median message length.
DIAGNOSTIC_REFERENCE = {
    "english_hit_rate_below_zero_median": 0.16,
    "english_hit_rate_valid_median": 0.54,
    "terse_median_chars": 27,
    "terse_p90_chars": 81,
}


def _load_env_config() -> dict[str, str]:
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line in {path}: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class RunConfig:
    """Resolved models, constants and thresholds for one command run."""

    def __init__(self, args: argparse.Namespace):
        env = _load_env_config()

        def pick(name: str, default=None):
            value = getattr(args, name, None)
            if value is not None:
                return value
            return env.get(name, default)

        model_path = pick("model")
        self.term_model = (
            classifier.load_term_model(model_path)
            if model_path
            else classifier.load_default_term_model()
        )
        english_path = pick("english_model")
        self.english_model = (
            classifier.load_english_model(english_path)
            if english_path
            else classifier.load_default_english_model()
        )
        perf_path = pick("perf")
        if perf_path:
            self.performance, self.perf_model_id = estimator.load_performance_config(perf_path)
        else:
            self.performance, self.perf_model_id = estimator.load_default_performance()
        table_path = pick("table")
        self.table = (
            estimator.load_distribution_table(table_path)
            if table_path
            else estimator.load_default_distribution_table()
        )
        self.year = int(pick("year")) if pick("year") is not None else None
        self.seed = int(pick("seed", 0))
        self.output_format = pick("format", "json")
        self.enforce_selection = bool(
            getattr(args, "enforce_selection", False)
            or env.get("enforce_selection", "").lower() in ("1", "true")
        )
        self.min_commits = int(pick("min_commits", 200))
        self.involvement = int(pick("involvement", 12))
        self.speed_cap = int(pick("speed_cap", 500))
        self.cap_quantile = float(pick("cap_quantile", 0.99))

        fingerprint = {
            "tool_version": __version__,
            "model_id": self.term_model.model_id,
            "recall": self.performance.recall,
            "fpr": self.performance.fpr,
            "year": self.year,
            "seed": self.seed,
            "format": self.output_format,
            "enforce_selection": self.enforce_selection,
            "min_commits": self.min_commits,
            "involvement": self.involvement,
            "speed_cap": self.speed_cap,
            "cap_quantile": self.cap_quantile,
            "table": self.table.rows,
        }
        digest = hashlib.sha256(
            json.dumps(fingerprint, sort_keys=True, default=str).encode()
        ).hexdigest()
        self.config_hash = digest[:16]

    def meta(self) -> dict:
        return {
            "tool_version": __version__,
            "model_id": self.term_model.model_id,
            "recall": self.performance.recall,
            "fpr": self.performance.fpr,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }


def _read_commits(args: argparse.Namespace) -> ingestion.ParseResult:
    merged = ingestion.ParseResult(records=[], skipped=0)
    for path in args.input:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read input {path}: {exc}") from exc
        if getattr(args, "input_format", "ndjson") == "git":
            repo = getattr(args, "repo", None) or Path(path).stem
            result = ingestion.parse_raw_git_log(text, repo_id=repo)
        else:
            result = ingestion.parse_git_log(io.StringIO(text))
        merged.records.extend(result.records)
        merged.skipped += result.skipped
    if not merged.records:
        raise InputError("no commit records parsed from inputs")
    return merged


def _emit(report: dict, config: RunConfig) -> None:
    if config.output_format == "csv" and isinstance(report.get("rows"), list):
        rows = report["rows"]
        writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        return
    print(json.dumps(report, sort_keys=True, indent=2, default=str))


# ---------------------------------------------------------------------------
# Subcommands

def cmd_classify(args: argparse.Namespace, config: RunConfig) -> int:
    parsed = _read_commits(args)
    for record, verdict in classifier.classify_commits(parsed.records, config.term_model):
        line = {
            "hash": record.hash,
            "corrective": verdict.corrective,
            "score": verdict.score,
            "fix_hits": verdict.fix_hits,
            "other_fix_hits": verdict.other_fix_hits,
            "negation_hits": verdict.negation_hits,
        }
        print(json.dumps(line, sort_keys=True))
    return EXIT_OK


def _project_year_stats(
    repo_id: str,
    year: int,
    commits: list[ingestion.CommitRecord],
    by_year: dict[int, list[ingestion.CommitRecord]],
    config: RunConfig,
    head_listing: list[tuple[str, int]] | None,
) -> analytics.ProjectYearStats:
    verdicts = [classifier.classify_message(c.message, config.term_model) for c in commits]
    k = sum(1 for v in verdicts if v.corrective)
    ccp = estimator.estimate_ccp(k=k, n=len(commits), perf=config.performance)
    involved = ingestion.involved_authors(commits, threshold=config.involvement)
    speed = analytics.developer_speed(commits, involved, cap=config.speed_cap)

    retention = onboarding = None
    next_commits = by_year.get(year + 1)
    if next_commits is not None:
        next_authors = {c.author_id for c in next_commits}
        retention = analytics.retention(involved, next_authors)
        prior_authors = {
            c.author_id for y, cs in by_year.items() if y <= year for c in cs
        }
        next_involved = ingestion.involved_authors(next_commits, threshold=config.involvement)
        onboarding = analytics.onboarding(prior_authors, next_authors, next_involved)

    language = avg_kb = None
    if head_listing:
        language = analytics.dominant_language(head_listing)
        avg_kb = analytics.file_length_stats(head_listing, cap_quantile=config.cap_quantile)

    return analytics.ProjectYearStats(
        repo_id=repo_id,
        year=year,
        n_commits=len(commits),
        k_hits=k,
        ccp=ccp,
        coupling=analytics.coupling(commits, verdicts, cap_quantile=config.cap_quantile),
        coupling_by_file=analytics.coupling_by_file(
            commits, verdicts, cap_quantile=config.cap_quantile
        ),
        speed=speed,
        retention=retention,
        onboarding=onboarding,
        dominant_language=language,
        avg_file_kb=avg_kb,
    )


def cmd_analyze(args: argparse.Namespace, config: RunConfig) -> int:
    parsed = _read_commits(args)
    by_repo: dict[str, list[ingestion.CommitRecord]] = {}
    for record in parsed.records:
        by_repo.setdefault(record.repo_id, []).append(record)

    head_listing = None
    if args.head_listing:
        try:
            with open(args.head_listing, newline="", encoding="utf-8") as fh:
                head_listing = [
                    (r["path"], int(r["size_bytes"])) for r in csv.DictReader(fh)
                ]
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"cannot load head listing {args.head_listing}: {exc}") from exc

    exclusions: list[dict] = []
    if config.enforce_selection:
        if config.year is None:
            raise ConfigError("--enforce-selection requires --year")
        metadata = (
            ingestion.load_project_metadata(args.projects) if args.projects else {}
        )
        descriptors = []
        for repo_id, commits in by_repo.items():
            meta = metadata.get(repo_id, {})
            descriptors.append(
                ingestion.ProjectDescriptor.from_commits(
                    commits,
                    owner=meta.get("owner", ""),
                    name=meta.get("name", ""),
                    is_fork=meta.get("is_fork", False),
                )
            )
        selection = ingestion.select_projects(
            descriptors, year=config.year, min_commits=config.min_commits
        )
        accepted_ids = {p.repo_id for p in selection.accepted}
        exclusions = [{"repo_id": r, "rule": rule} for r, rule in selection.exclusions]
        by_repo = {r: commits for r, commits in by_repo.items() if r in accepted_ids}

    rows = []
    reports = []
    for repo_id in sorted(by_repo):
        by_year = ingestion.window_by_year(by_repo[repo_id])
        years = [config.year] if config.year is not None else sorted(by_year)
        for year in years:
            commits = by_year.get(year)
            if not commits:
                continue
            stat = _project_year_stats(
                repo_id, year, commits, by_year, config, head_listing
            )
            entry = stat.as_dict()
            if stat.ccp.valid:
                entry["band"] = estimator.rank_on_scale(stat.ccp.ccp_raw, config.table).as_dict()
            else:
                messages = [c.message for c in commits]
                median, p90 = classifier.terse_message_profile(messages)
                entry["diagnostics"] = {
                    "english_hit_rate": classifier.english_hit_rate(
                        messages, config.english_model
                    ),
                    "median_message_chars": median,
                    "p90_message_chars": p90,
                    "reference": DIAGNOSTIC_REFERENCE,
                }
            reports.append(entry)
            rows.append(stat.as_flat_dict())

    report = {
        "meta": config.meta(),
        "report_type": "analyze",
        "skipped_lines": parsed.skipped,
        "exclusions": exclusions,
        "projects": reports,
        "rows": rows,
    }
    _emit(report, config)
    return EXIT_OK


def cmd_rank(args: argparse.Namespace, config: RunConfig) -> int:
    band = estimator.rank_on_scale(args.ccp, config.table)
    _emit(
        {
            "meta": config.meta(),
            "report_type": "rank",
            "ccp": args.ccp,
            "band": band.as_dict(),
        },
        config,
    )
    return EXIT_OK


def cmd_validate_model(args: argparse.Namespace, config: RunConfig) -> int:
    corpus = classifier.load_labeled_corpus(args.corpus)
    matrix = classifier.evaluate_model(corpus, config.term_model)
    perf = None if args.perf_source == "corpus" else config.performance
    bootstrap = estimator.bootstrap_difference_distribution(
        corpus,
        config.term_model,
        perf=perf,
        iterations=args.iterations,
        coverage=args.coverage,
        seed=config.seed,
    )
    _emit(
        {
            "meta": config.meta(),
            "report_type": "validate-model",
            "confusion_matrix": matrix.as_dict(),
            "bootstrap": bootstrap.as_dict(),
        },
        config,
    )
    return EXIT_OK


def _parse_segments(text: str) -> tuple[tuple[float, float], ...]:
    try:
        segments = tuple(
            (float(low), float(high))
            for low, _, high in (part.partition(":") for part in text.split(","))
        )
    except ValueError as exc:
        raise ConfigError(f"malformed segments {text!r}; expected 'low:high,...'") from exc
    return segments


def cmd_bootstrap(args: argparse.Namespace, config: RunConfig) -> int:
    corpus = classifier.load_labeled_corpus(args.corpus)
    perf = None if args.perf_source == "corpus" else config.performance
    report = {
        "meta": config.meta(),
        "report_type": "bootstrap",
        "difference": estimator.bootstrap_difference_distribution(
            corpus,
            config.term_model,
            perf=perf,
            iterations=args.iterations,
            coverage=args.coverage,
            seed=config.seed,
        ).as_dict(),
    }
    if args.sensitivity:
        report["sensitivity"] = estimator.estimator_sensitivity(
            corpus,
            config.term_model,
            iterations=args.iterations,
            eval_segments=_parse_segments(args.segments),
            seed=config.seed,
        ).as_dict()
    _emit(report, config)
    return EXIT_OK


def cmd_cochange(args: argparse.Namespace, config: RunConfig) -> int:
    report = stats.co_change(
        stats.load_series_csv(args.series_i),
        stats.load_series_csv(args.series_j),
        delta_i=args.delta_i,
        delta_j=args.delta_j,
        improvement_sign_i=args.sign_i,
        improvement_sign_j=args.sign_j,
        comparator=args.comparator,
    )
    _emit(
        {"meta": config.meta(), "report_type": "cochange", "cochange": report.as_dict()},
        config,
    )
    return EXIT_OK


def _load_dev_series(path: str) -> dict[tuple[str, str], stats.MetricSeries]:
    series: dict[tuple[str, str], dict[int, float]] = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (row["developer"], row["project"])
                series.setdefault(key, {})[int(row["year"])] = float(row["value"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot load developer series {path}: {exc}") from exc
    return {
        key: stats.MetricSeries(entity_id=f"{key[0]}:{key[1]}", points=points)
        for key, points in series.items()
    }


def cmd_twin(args: argparse.Namespace, config: RunConfig) -> int:
    report = stats.twin_analysis(
        _load_dev_series(args.dev_series),
        stats.load_series_csv(args.project_series),
        delta_project=args.delta_project,
        delta_dev=args.delta_dev,
        improvement_sign=args.sign,
        comparator=args.comparator,
    )
    _emit({"meta": config.meta(), "report_type": "twin", "twin": report.as_dict()}, config)
    return EXIT_OK


def cmd_export_log_recipe(args: argparse.Namespace, config: RunConfig) -> int:
    print(ingestion.GIT_LOG_RECIPE)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccp-miner",
        description="Estimate the corrective commit probability of projects "
        "from their commit histories.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--model", help="term model file (default: bundled model)")
    parser.add_argument("--english-model", help="english word list file")
    parser.add_argument("--perf", help="performance config file (recall=, fpr=)")
    parser.add_argument("--table", help="CCP distribution table CSV")
    parser.add_argument("--year", type=int, help="analysis calendar year (UTC)")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--format", choices=("json", "csv"), help="output format")
    parser.add_argument(
        "--enforce-selection",
        action="store_true",
        default=None,
        help="apply the project-selection pipeline before analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="per-commit verdict stream (NDJSON)")
    p.add_argument("input", nargs="+", help="commit log file(s)")
    p.add_argument("--input-format", choices=("ndjson", "git"), default="ndjson")
    p.add_argument("--repo", help="repo id for --input-format git")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("analyze", help="per-project-year stats, CCP and ranking")
    p.add_argument("input", nargs="+", help="commit log file(s)")
    p.add_argument("--input-format", choices=("ndjson", "git"), default="ndjson")
    p.add_argument("--repo", help="repo id for --input-format git")
    p.add_argument("--projects", help="project metadata CSV (repo_id,owner,name,is_fork)")
    p.add_argument("--head-listing", help="HEAD snapshot CSV (path,size_bytes)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rank", help="band a CCP value on the quality scale")
    p.add_argument("--ccp", type=float, required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("validate-model", help="confusion matrix + bootstrap report")
    p.add_argument("corpus", help="labeled corpus file (label<TAB>message)")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--coverage", type=float, default=0.95)
    p.add_argument("--perf-source", choices=("corpus", "config"), default="corpus")
    p.set_defaults(func=cmd_validate_model)

    p = sub.add_parser("bootstrap", help="estimate-vs-truth bootstrap distribution")
    p.add_argument("corpus", help="labeled corpus file")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--coverage", type=float, default=0.95)
    p.add_argument("--perf-source", choices=("corpus", "config"), default="corpus")
    p.add_argument("--sensitivity", action="store_true", help="add sensitivity analysis")
    p.add_argument("--segments", default="0:1,0.042:0.84,0.06:0.39")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("cochange", help="co-change precision and lift of two metrics")
    p.add_argument("--series-i", required=True, help="CSV entity,year,value")
    p.add_argument("--series-j", required=True, help="CSV entity,year,value")
    p.add_argument("--delta-i", type=float, default=0.0)
    p.add_argument("--delta-j", type=float, default=0.0)
    p.add_argument("--sign-i", type=int, choices=(-1, 1), default=1)
    p.add_argument("--sign-j", type=int, choices=(-1, 1), default=1)
    p.add_argument("--comparator", choices=("auto", "strict", "inclusive"), default="auto")
    p.set_defaults(func=cmd_cochange)

    p = sub.add_parser("twin", help="same-developer cross-project comparison")
    p.add_argument("--dev-series", required=True, help="CSV developer,project,year,value")
    p.add_argument("--project-series", required=True, help="CSV entity,year,value")
    p.add_argument("--delta-project", type=float, default=0.0)
    p.add_argument("--delta-dev", type=float, default=0.0)
    p.add_argument("--sign", type=int, choices=(-1, 1), default=1)
    p.add_argument("--comparator", choices=("auto", "strict", "inclusive"), default="auto")
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("export-log-recipe", help="print the git log export recipe")
    p.set_defaults(func=cmd_export_log_recipe)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(args)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - invariant violations surface as exit 4
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
