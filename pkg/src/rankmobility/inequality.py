"""Gini inequality of citation impact, per cohort and per population window."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cohort import AuthorProfile, CohortSpec, aggregate_impact, build_cohort

DEFAULT_MIN_COHORT = 100


def gini(values: Sequence[float]) -> float:
    """Gini coefficient of nonnegative values, mean absolute difference form.

    G = sum_ij |x_i - x_j| / (2 n^2 mean), computed via the sorted
    equivalent in O(n log n): G = (2 sum_k k x_(k) - (n+1) sum x) / (n sum x)
    with k = 1..n over ascending x. No small-sample correction is applied,
    so the maximum for n values is (n-1)/n, not 1.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("gini expects a flat sequence")
    n = len(x)
    if n < 2:
        raise ValueError("gini needs at least two values")
    if (x < 0).any():
        raise ValueError("gini is undefined for negative values")
    total = x.sum()
    if total == 0:
        raise ValueError("gini is undefined when all values are zero")
    xs = np.sort(x)
    ranks = np.arange(1, n + 1, dtype=float)
    return float((2.0 * (ranks * xs).sum() - (n + 1) * total) / (n * total))


@dataclass(eq=False)
class GiniSeries:
    """One Gini value per year for a discipline, with cohort sizes.

    mode is "cohort" (years are career start years, impacts from a career
    window) or "population" (years start 5-year activity windows). Years
    whose author count falls below the configured minimum are omitted and
    listed in skipped.
    """

    discipline: str
    mode: str
    years: np.ndarray
    values: np.ndarray
    n_authors: np.ndarray
    skipped: tuple[int, ...] = field(default=())


def cohort_gini_series(
    profiles: Mapping[str, AuthorProfile],
    discipline: str,
    start_years: Sequence[int],
    window: int = 1,
    min_cohort: int = DEFAULT_MIN_COHORT,
) -> GiniSeries:
    """Gini of cohort members' impacts per career start year.

    window selects which career window's impacts feed the coefficient:
    1 for the first five years (the default), 2 for the second.
    """
    if window not in (1, 2):
        raise ValueError("window must be 1 or 2")
    years: list[int] = []
    values: list[float] = []
    sizes: list[int] = []
    skipped: list[int] = []
    for year in start_years:
        spec = CohortSpec(discipline=discipline, start_year=year)
        members = build_cohort(profiles, spec)
        if len(members) < min_cohort:
            skipped.append(year)
            continue
        span = spec.window1 if window == 1 else spec.window2
        impacts = [aggregate_impact(profiles[aid], span, discipline) for aid in members]
        years.append(year)
        values.append(gini(impacts))
        sizes.append(len(members))
    return GiniSeries(
        discipline=discipline,
        mode="cohort",
        years=np.array(years, dtype=np.int64),
        values=np.array(values),
        n_authors=np.array(sizes, dtype=np.int64),
        skipped=tuple(skipped),
    )


def population_gini_series(
    profiles: Mapping[str, AuthorProfile],
    discipline: str,
    window_start_years: Sequence[int],
    min_authors: int = DEFAULT_MIN_COHORT,
) -> GiniSeries:
    """Gini over everyone publishing in the discipline per 5-year window.

    Unlike the cohort mode this ignores career stage: an author is in the
    window's population when they have at least one publication tagged with
    the discipline inside [year, year+4], and their impact is the c5 sum of
    those publications.
    """
    years: list[int] = []
    values: list[float] = []
    sizes: list[int] = []
    skipped: list[int] = []
    for year in window_start_years:
        span = (year, year + 4)
        impacts: list[int] = []
        for profile in profiles.values():
            active = [
                p
                for p in profile.publications
                if span[0] <= p.year <= span[1] and discipline in p.disciplines
            ]
            if active:
                impacts.append(sum(p.c5 for p in active))
        if len(impacts) < min_authors:
            skipped.append(year)
            continue
        years.append(year)
        values.append(gini(impacts))
        sizes.append(len(impacts))
    return GiniSeries(
        discipline=discipline,
        mode="population",
        years=np.array(years, dtype=np.int64),
        values=np.array(values),
        n_authors=np.array(sizes, dtype=np.int64),
        skipped=tuple(skipped),
    )


def write_gini_series_csv(path: str | Path, series: GiniSeries) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["year", "gini", "n_authors"])
        for k in range(len(series.years)):
            writer.writerow(
                [str(int(series.years[k])), repr(float(series.values[k])), str(int(series.n_authors[k]))]
            )


def read_gini_series_csv(path: str | Path, discipline: str = "", mode: str = "cohort") -> GiniSeries:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["year", "gini", "n_authors"]:
            raise ValueError(f"not a gini series file: {path}")
        rows = [row for row in reader if row]
    return GiniSeries(
        discipline=discipline,
        mode=mode,
        years=np.array([int(r[0]) for r in rows], dtype=np.int64),
        values=np.array([float(r[1]) for r in rows]),
        n_authors=np.array([int(r[2]) for r in rows], dtype=np.int64),
    )
