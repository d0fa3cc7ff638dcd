"""End-to-end pipeline: corpus to report bundle, with a run manifest.

A run ingests (and optionally filters) a corpus, disambiguates authors,
builds one cohort per (discipline, career start year), and writes per-cohort
rank tables, transition matrices, decile-change profiles, reshuffle nulls,
diffusion fits and gap matrices, plus per-discipline Gini series, pooled
fits and trend records, a cross-discipline correlation summary, and a
manifest tying everything together.

Given the same config and seed, a rerun reproduces every artifact byte for
byte; the manifest's created_at honors SOURCE_DATE_EPOCH so even it can be
pinned.
"""

from __future__ import annotations

import csv
import json
import hashlib
import os
import shutil
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .cohort import build_profiles, cohort_impacts, CohortSpec
from .corpus import CorpusFilterConfig, filter_corpus, ingest
from .diffusion import DiffusionFit, fit_d, fit_d_pooled, model_matrix
from .disambig import ScoringRuleTable, disambiguate, write_clusters
from .inequality import cohort_gini_series, write_gini_series_csv
from .mobility import (
    RankTable,
    TransitionMatrix,
    delta_p,
    delta_q_profile,
    reshuffle_null,
    transition_matrix,
    write_delta_q_csv,
    write_matrix_csv,
    write_rank_table_csv,
)
from .stats import ols_with_band, pearson


class PipelineError(Exception):
    """Configuration or input problems that abort a run."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str
    disciplines: tuple[str, ...]
    cohort_years: tuple[int, ...]
    rules: str | None = None
    filter: CorpusFilterConfig | None = None
    null_reps: int = 100
    seed: int = 0
    min_cohort_size: int = 100
    gini_window: int = 1
    fit_bracket: tuple[float, float] = (1e-3, 10.0)
    fit_grid_points: int = 200

    def __post_init__(self) -> None:
        if not self.disciplines:
            raise PipelineError("config needs at least one discipline")
        if not self.cohort_years:
            raise PipelineError("config needs at least one cohort year")
        if self.null_reps < 1:
            raise PipelineError("null_reps must be at least 1")
        if self.gini_window not in (1, 2):
            raise PipelineError("gini_window must be 1 or 2")
        if self.min_cohort_size < 10:
            raise PipelineError("min_cohort_size must be at least 10 (decile split)")

    @classmethod
    def from_json(cls, source: str | Path | Mapping) -> "PipelineConfig":
        if isinstance(source, Mapping):
            payload = dict(source)
        else:
            with Path(source).open("r", encoding="utf-8") as handle:
                payload = json.load(handle)
        known = {
            "corpus", "disciplines", "cohort_years", "rules", "filter", "null_reps",
            "seed", "min_cohort_size", "gini_window", "fit_bracket", "fit_grid_points",
        }
        unknown = set(payload) - known
        if unknown:
            raise PipelineError(f"unknown pipeline config keys: {', '.join(sorted(unknown))}")
        for key in ("corpus", "disciplines", "cohort_years"):
            if key not in payload:
                raise PipelineError(f"pipeline config is missing '{key}'")
        filter_cfg = None
        if payload.get("filter") is not None:
            raw = payload["filter"]
            filter_cfg = CorpusFilterConfig(
                max_authors=raw.get("max_authors", 20),
                year_range=tuple(raw["year_range"]) if raw.get("year_range") else None,
                disciplines=frozenset(raw["disciplines"]) if raw.get("disciplines") else None,
            )
        return cls(
            corpus=str(payload["corpus"]),
            disciplines=tuple(payload["disciplines"]),
            cohort_years=tuple(int(y) for y in payload["cohort_years"]),
            rules=payload.get("rules"),
            filter=filter_cfg,
            null_reps=int(payload.get("null_reps", 100)),
            seed=int(payload.get("seed", 0)),
            min_cohort_size=int(payload.get("min_cohort_size", 100)),
            gini_window=int(payload.get("gini_window", 1)),
            fit_bracket=tuple(payload.get("fit_bracket", (1e-3, 10.0))),
            fit_grid_points=int(payload.get("fit_grid_points", 200)),
        )

    def canonical_dict(self) -> dict:
        filter_payload = None
        if self.filter is not None:
            filter_payload = {
                "max_authors": self.filter.max_authors,
                "year_range": list(self.filter.year_range) if self.filter.year_range else None,
                "disciplines": sorted(self.filter.disciplines) if self.filter.disciplines else None,
            }
        return {
            "corpus": self.corpus,
            "disciplines": list(self.disciplines),
            "cohort_years": list(self.cohort_years),
            "rules": self.rules,
            "filter": filter_payload,
            "null_reps": self.null_reps,
            "seed": self.seed,
            "min_cohort_size": self.min_cohort_size,
            "gini_window": self.gini_window,
            "fit_bracket": list(self.fit_bracket),
            "fit_grid_points": self.fit_grid_points,
        }


def config_hash(config: PipelineConfig) -> str:
    canonical = json.dumps(config.canonical_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_json(path: Path, payload) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        json.dump(_jsonable(payload), handle, sort_keys=True, indent=2)
        handle.write("\n")


def slugify(label: str) -> str:
    slug = "".join(ch if ch.isalnum() else "-" for ch in label.lower())
    slug = "-".join(part for part in slug.split("-") if part)
    return slug or "x"


def _created_at() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def _fit_payload(fit: DiffusionFit, extra: dict) -> dict:
    payload = {
        "d_star": fit.d_star,
        "objective": fit.objective,
        "bracket": list(fit.bracket),
        "grid_points": fit.grid_points,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "n_matrices": fit.n_matrices,
    }
    payload.update(extra)
    return payload


def _trend_payload(x: Sequence[float], y: Sequence[float]) -> dict | None:
    """Correlation plus regression band over a short series, or None if flat
    or too short to support one."""
    if len(x) < 3:
        return None
    try:
        corr = pearson(x, y)
        reg = ols_with_band(x, y)
    except ValueError:
        return None
    fit, lo, hi = reg.band(x)
    return {
        "n": corr.n,
        "r": corr.r,
        "p": corr.p,
        "slope": reg.slope,
        "intercept": reg.intercept,
        "confidence": reg.confidence,
        "x": list(x),
        "y": list(y),
        "fit": fit,
        "band_low": lo,
        "band_high": hi,
    }


@dataclass
class _CohortResult:
    discipline: str
    year: int
    size: int
    table: RankTable | None = None
    empirical: TransitionMatrix | None = None
    fit: DiffusionFit | None = None
    gap_matrix: np.ndarray | None = None
    top_gap: float = 0.0
    bottom_gap: float = 0.0
    skipped_reason: str | None = None


@dataclass
class RunResult:
    out_dir: Path
    manifest: dict
    all_converged: bool


def _analyze_cohort(
    profiles,
    discipline: str,
    year: int,
    config: PipelineConfig,
) -> _CohortResult:
    spec = CohortSpec(discipline=discipline, start_year=year)
    members, impact1, impact2 = cohort_impacts(profiles, spec)
    size = len(members)
    if size < config.min_cohort_size:
        return _CohortResult(
            discipline=discipline,
            year=year,
            size=size,
            skipped_reason=f"cohort below minimum size ({size} < {config.min_cohort_size})",
        )
    table = RankTable.from_impacts(members, impact1, impact2)
    empirical = transition_matrix(table)
    fit = fit_d(empirical, bracket=config.fit_bracket, grid_points=config.fit_grid_points)
    gap = delta_p(empirical, model_matrix(fit.d_star, table.n_bins))
    return _CohortResult(
        discipline=discipline,
        year=year,
        size=size,
        table=table,
        empirical=empirical,
        fit=fit,
        gap_matrix=gap.matrix,
        top_gap=gap.top_gap,
        bottom_gap=gap.bottom_gap,
    )


def run_pipeline(config: PipelineConfig, out_dir: str | Path, threads: int = 1) -> RunResult:
    """Execute the full analysis and write the report bundle.

    The output directory must not already contain files. On any failure the
    partially written bundle is removed before the error propagates.
    """
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        raise PipelineError(f"output directory is not empty: {out}")
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _run(config, out, max(1, threads))
    except BaseException:
        shutil.rmtree(out, ignore_errors=True)
        raise


def _run(config: PipelineConfig, out: Path, threads: int) -> RunResult:
    chash = config_hash(config)
    artifacts: list[str] = []
    warnings: list[str] = []

    corpus = ingest(config.corpus)
    counts: dict = {
        "lines_read": corpus.stats.lines_read,
        "records_accepted": corpus.stats.accepted,
        "records_rejected": len(corpus.stats.rejected),
    }
    for line_no, reason in corpus.stats.rejected[:20]:
        warnings.append(f"rejected line {line_no}: {reason}")

    if config.filter is not None:
        corpus, fstats = filter_corpus(corpus, config.filter)
        counts["filter_removed"] = fstats.removed
        counts["filter_by_rule"] = dict(sorted(fstats.by_rule.items()))
    counts["publications"] = len(corpus.publications)
    counts["mentions"] = len(corpus.mentions)

    rules = ScoringRuleTable.from_json(config.rules) if config.rules else ScoringRuleTable.default()
    clusters = disambiguate(corpus, rules)
    counts["clusters"] = len(clusters)
    write_clusters(out / "clusters.jsonl", clusters)
    artifacts.append("clusters.jsonl")

    profiles = build_profiles(corpus, clusters)
    counts["profiles"] = len(profiles)

    jobs = [(d, y) for d in config.disciplines for y in config.cohort_years]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda dy: _analyze_cohort(profiles, dy[0], dy[1], config), jobs)
            )
    else:
        results = [_analyze_cohort(profiles, d, y, config) for d, y in jobs]

    slugs: dict[str, str] = {}
    used: set[str] = set()
    for d in config.disciplines:
        base_slug = slugify(d)
        slug = base_slug
        k = 2
        while slug in used:
            slug = f"{base_slug}-{k}"
            k += 1
        used.add(slug)
        slugs[d] = slug

    skipped: list[dict] = []
    cohort_sizes: dict[str, int] = {}
    all_converged = True
    by_discipline: dict[str, list[_CohortResult]] = {d: [] for d in config.disciplines}
    for result in results:
        key = f"{slugs[result.discipline]}/{result.year}"
        cohort_sizes[key] = result.size
        if result.skipped_reason is not None:
            skipped.append(
                {"discipline": result.discipline, "year": result.year, "reason": result.skipped_reason}
            )
            continue
        by_discipline[result.discipline].append(result)
        if not result.fit.converged:
            all_converged = False
            warnings.append(
                f"fit did not converge for {result.discipline} {result.year}: "
                f"optimum at bracket edge {result.fit.d_star}"
            )

        base = out / slugs[result.discipline] / str(result.year)
        base.mkdir(parents=True, exist_ok=True)
        rel = f"{slugs[result.discipline]}/{result.year}"
        write_rank_table_csv(base / "rank_table.csv", result.table)
        write_matrix_csv(base / "transition.csv", result.empirical.matrix)
        write_delta_q_csv(base / "delta_q.csv", delta_q_profile(result.table))
        null = reshuffle_null(
            result.table,
            n_reps=config.null_reps,
            seed=np.random.SeedSequence(
                [config.seed, zlib.crc32(result.discipline.encode("utf-8")), result.year]
            ),
        )
        write_delta_q_csv(base / "null_delta_q.csv", null.profile)
        write_matrix_csv(base / "null_transition.csv", null.matrix.matrix)
        _write_json(
            base / "fit.json",
            _fit_payload(
                result.fit,
                {
                    "discipline": result.discipline,
                    "start_year": result.year,
                    "cohort_size": result.size,
                    "config_hash": chash,
                },
            ),
        )
        write_matrix_csv(base / "delta_p.csv", result.gap_matrix)
        artifacts.extend(
            f"{rel}/{name}"
            for name in (
                "rank_table.csv",
                "transition.csv",
                "delta_q.csv",
                "null_delta_q.csv",
                "null_transition.csv",
                "fit.json",
                "delta_p.csv",
            )
        )

    summary_rows: list[dict] = []
    per_discipline: list[dict] = []
    for discipline in config.disciplines:
        slug = slugs[discipline]
        dir_ = out / slug
        dir_.mkdir(parents=True, exist_ok=True)
        cohorts = sorted(by_discipline[discipline], key=lambda r: r.year)

        series = cohort_gini_series(
            profiles,
            discipline,
            sorted(config.cohort_years),
            window=config.gini_window,
            min_cohort=config.min_cohort_size,
        )
        write_gini_series_csv(dir_ / "gini_series.csv", series)
        artifacts.append(f"{slug}/gini_series.csv")

        with (dir_ / "corner_series.csv").open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["year", "top_gap", "bottom_gap"])
            for r in cohorts:
                writer.writerow([str(r.year), repr(float(r.top_gap)), repr(float(r.bottom_gap))])
        artifacts.append(f"{slug}/corner_series.csv")

        pooled = None
        if cohorts:
            pooled = fit_d_pooled(
                [r.empirical for r in cohorts],
                bracket=config.fit_bracket,
                grid_points=config.fit_grid_points,
            )
            if not pooled.converged:
                all_converged = False
                warnings.append(f"pooled fit did not converge for {discipline}")
            _write_json(
                dir_ / "pooled_fit.json",
                _fit_payload(
                    pooled,
                    {
                        "discipline": discipline,
                        "years": [r.year for r in cohorts],
                        "config_hash": chash,
                    },
                ),
            )
            artifacts.append(f"{slug}/pooled_fit.json")

        years = [float(r.year) for r in cohorts]
        d_values = [r.fit.d_star for r in cohorts]
        gini_by_year = {int(y): float(g) for y, g in zip(series.years, series.values)}
        shared = [r for r in cohorts if r.year in gini_by_year]
        trends = {
            "discipline": discipline,
            "config_hash": chash,
            "d_vs_year": _trend_payload(years, d_values),
            "gini_vs_year": _trend_payload(
                [float(y) for y in series.years], [float(g) for g in series.values]
            ),
            "d_vs_gini": _trend_payload(
                [r.fit.d_star for r in shared], [gini_by_year[r.year] for r in shared]
            ),
            "top_gap_vs_year": _trend_payload(years, [r.top_gap for r in cohorts]),
            "bottom_gap_vs_year": _trend_payload(years, [r.bottom_gap for r in cohorts]),
        }
        _write_json(dir_ / "trends.json", trends)
        artifacts.append(f"{slug}/trends.json")

        mean_gini = float(np.mean(series.values)) if len(series.values) else None
        per_discipline.append(
            {
                "discipline": discipline,
                "slug": slug,
                "pooled_d": pooled.d_star if pooled else None,
                "pooled_converged": pooled.converged if pooled else None,
                "mean_gini": mean_gini,
                "n_cohorts": len(cohorts),
            }
        )
        for r in shared:
            summary_rows.append(
                {
                    "discipline": discipline,
                    "year": r.year,
                    "d_star": r.fit.d_star,
                    "gini": gini_by_year[r.year],
                }
            )

    summary_dir = out / "summary"
    summary_dir.mkdir(parents=True, exist_ok=True)
    correlation = None
    if len(summary_rows) >= 3:
        try:
            corr = pearson(
                [row["d_star"] for row in summary_rows],
                [row["gini"] for row in summary_rows],
            )
            correlation = {"r": corr.r, "p": corr.p, "n": corr.n}
        except ValueError:
            correlation = None
    _write_json(
        summary_dir / "correlation.json",
        {
            "config_hash": chash,
            "d_vs_gini": correlation,
            "points": summary_rows,
            "per_discipline": per_discipline,
        },
    )
    artifacts.append("summary/correlation.json")

    manifest = {
        "tool": "rankmobility",
        "version": __version__,
        "created_at": _created_at(),
        "config_hash": chash,
        "config": config.canonical_dict(),
        "inputs": {"corpus": config.corpus, "rules": config.rules or "builtin"},
        "seed": config.seed,
        "counts": counts,
        "cohort_sizes": dict(sorted(cohort_sizes.items())),
        "skipped": skipped,
        "warnings": warnings,
        "artifacts": sorted(artifacts),
    }
    _write_json(out / "manifest.json", manifest)
    return RunResult(out_dir=out, manifest=manifest, all_converged=all_converged)


def report_summary(bundle_dir: str | Path) -> dict:
    """Rank disciplines by pooled mobility and by average inequality.

    Reads the bundle's summary records, writes ranking CSVs plus a report
    JSON under <bundle>/report/, and returns the report payload. With fewer
    than five disciplines the top/bottom extracts are the full ranking and
    a note says so.
    """
    bundle = Path(bundle_dir)
    summary_path = bundle / "summary" / "correlation.json"
    if not summary_path.exists():
        raise PipelineError(f"not a report bundle (missing {summary_path})")
    with summary_path.open("r", encoding="utf-8") as handle:
        summary = json.load(handle)
    rows = summary["per_discipline"]

    mobility = sorted(
        (r for r in rows if r["pooled_d"] is not None),
        key=lambda r: (-r["pooled_d"], r["discipline"]),
    )
    inequality = sorted(
        (r for r in rows if r["mean_gini"] is not None),
        key=lambda r: (-r["mean_gini"], r["discipline"]),
    )

    def extract(ranked: list[dict], key: str) -> dict:
        payload = {
            "ranking": [
                {"rank": i + 1, "discipline": r["discipline"], key: r[key]}
                for i, r in enumerate(ranked)
            ],
            "top5": [r["discipline"] for r in ranked[:5]],
            "bottom5": [r["discipline"] for r in ranked[-5:]],
        }
        if len(ranked) < 5:
            payload["note"] = "fewer than five disciplines; extracts cover the full ranking"
        return payload

    report = {
        "config_hash": summary.get("config_hash"),
        "mobility": extract(mobility, "pooled_d"),
        "inequality": extract(inequality, "mean_gini"),
    }
    report_dir = bundle / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    _write_json(report_dir / "report.json", report)
    with (report_dir / "mobility_ranking.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rank", "discipline", "pooled_d"])
        for i, r in enumerate(mobility):
            writer.writerow([str(i + 1), r["discipline"], repr(float(r["pooled_d"]))])
    with (report_dir / "inequality_ranking.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rank", "discipline", "mean_gini"])
        for i, r in enumerate(inequality):
            writer.writerow([str(i + 1), r["discipline"], repr(float(r["mean_gini"]))])
    return report
