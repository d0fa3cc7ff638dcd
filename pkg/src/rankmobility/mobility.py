"""Decile ranking, rank transition matrices, and reshuffling null models.

Transition matrices are column-stochastic: entry (i, j) is the probability
of landing in decile i of the second career window given decile j in the
first, with decile 1 the lowest-impact tenth and decile 10 the highest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_BINS = 10


def _assign_deciles(ids: np.ndarray, values: np.ndarray, n_bins: int) -> np.ndarray:
    """Near-equal decile split of values, ties broken by author id.

    Sorted ascending, the item at 0-based position k lands in bin
    k * n_bins // n + 1, so bin occupancies differ by at most one.
    """
    n = len(values)
    order = np.lexsort((ids, values))
    bins = np.empty(n, dtype=np.int64)
    bins[order] = np.arange(n, dtype=np.int64) * n_bins // n + 1
    return bins


def decile_rank(
    impacts: Sequence[tuple[str, float]], n_bins: int = DEFAULT_BINS
) -> dict[str, int]:
    """Rank authors into n_bins near-equal bins by ascending impact.

    Parameters
    ----------
    impacts : sequence of (author_id, value)
        One entry per author; ids must be unique.
    n_bins : int
        Number of rank bins (10 for deciles).

    Returns
    -------
    dict
        author_id -> bin in 1..n_bins.
    """
    n = len(impacts)
    if n < n_bins:
        raise ValueError(f"cohort too small to rank: {n} authors < {n_bins} bins")
    ids = np.array([a for a, _ in impacts], dtype=object)
    if len(set(ids)) != n:
        raise ValueError("duplicate author ids in impact list")
    values = np.array([v for _, v in impacts], dtype=float)
    bins = _assign_deciles(np.array([str(a) for a in ids]), values, n_bins)
    return {str(aid): int(b) for aid, b in zip(ids, bins)}


@dataclass(eq=False)
class RankTable:
    """Per-cohort impacts and decile positions for both career windows."""

    author_ids: tuple[str, ...]
    impact1: np.ndarray
    impact2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    n_bins: int = DEFAULT_BINS

    def __len__(self) -> int:
        return len(self.author_ids)

    @classmethod
    def from_impacts(
        cls,
        author_ids: Sequence[str],
        impact1: Sequence[float],
        impact2: Sequence[float],
        n_bins: int = DEFAULT_BINS,
    ) -> "RankTable":
        n = len(author_ids)
        if not (n == len(impact1) == len(impact2)):
            raise ValueError("author_ids, impact1 and impact2 must have equal length")
        if n < n_bins:
            raise ValueError(f"cohort too small to rank: {n} authors < {n_bins} bins")
        ids_arr = np.array([str(a) for a in author_ids])
        if len(set(author_ids)) != n:
            raise ValueError("duplicate author ids in cohort")
        i1 = np.asarray(impact1, dtype=float)
        i2 = np.asarray(impact2, dtype=float)
        return cls(
            author_ids=tuple(str(a) for a in author_ids),
            impact1=i1,
            impact2=i2,
            q1=_assign_deciles(ids_arr, i1, n_bins),
            q2=_assign_deciles(ids_arr, i2, n_bins),
            n_bins=n_bins,
        )


def _counts_to_matrix(counts: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    column_totals = counts.sum(axis=0)
    n_bins = counts.shape[0]
    matrix = np.empty_like(counts, dtype=float)
    uniform: list[int] = []
    for j in range(n_bins):
        if column_totals[j] == 0:
            # No observations starting in this bin: fall back to a uniform
            # column and flag it rather than emit NaNs.
            matrix[:, j] = 1.0 / n_bins
            uniform.append(j + 1)
        else:
            matrix[:, j] = counts[:, j] / column_totals[j]
    return matrix, tuple(uniform)


@dataclass(eq=False)
class TransitionMatrix:
    """Column-stochastic rank transition estimate with its sample counts."""

    matrix: np.ndarray
    column_counts: np.ndarray
    n_bins: int
    uniform_columns: tuple[int, ...] = ()

    def prob(self, i: int, j: int) -> float:
        """P(second-window bin = i | first-window bin = j), bins 1-based."""
        return float(self.matrix[i - 1, j - 1])

    @property
    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


def transition_counts(q1: np.ndarray, q2: np.ndarray, n_bins: int) -> np.ndarray:
    counts = np.zeros((n_bins, n_bins), dtype=np.int64)
    np.add.at(counts, (np.asarray(q2) - 1, np.asarray(q1) - 1), 1)
    return counts


def transition_matrix(table: RankTable) -> TransitionMatrix:
    """Estimate the rank transition matrix of a cohort."""
    counts = transition_counts(table.q1, table.q2, table.n_bins)
    matrix, uniform = _counts_to_matrix(counts)
    return TransitionMatrix(
        matrix=matrix,
        column_counts=counts.sum(axis=0),
        n_bins=table.n_bins,
        uniform_columns=uniform,
    )


@dataclass(eq=False)
class DeltaQProfile:
    """Mean decile change by starting decile, with standard errors.

    sem is NaN where a bin holds fewer than two authors; mean is NaN for an
    empty bin.
    """

    deciles: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    count: np.ndarray


def _profile_from_moments(
    total: np.ndarray, total_sq: np.ndarray, count: np.ndarray, n_bins: int
) -> DeltaQProfile:
    mean = np.full(n_bins, np.nan)
    sem = np.full(n_bins, np.nan)
    nonzero = count > 0
    mean[nonzero] = total[nonzero] / count[nonzero]
    multi = count > 1
    if multi.any():
        var = (total_sq[multi] - count[multi] * mean[multi] ** 2) / (count[multi] - 1)
        sem[multi] = np.sqrt(np.maximum(var, 0.0) / count[multi])
    return DeltaQProfile(
        deciles=np.arange(1, n_bins + 1, dtype=np.int64),
        mean=mean,
        sem=sem,
        count=count.astype(np.int64),
    )


def delta_q_profile(table: RankTable) -> DeltaQProfile:
    """Per starting decile: mean and SEM of (second decile - first decile)."""
    dq = (table.q2 - table.q1).astype(float)
    n_bins = table.n_bins
    idx = table.q1 - 1
    total = np.bincount(idx, weights=dq, minlength=n_bins)
    total_sq = np.bincount(idx, weights=dq * dq, minlength=n_bins)
    count = np.bincount(idx, minlength=n_bins)
    return _profile_from_moments(total, total_sq, count, n_bins)


@dataclass(eq=False)
class ReshuffleNull:
    """Pooled null statistics from reshuffled second-window impacts."""

    profile: DeltaQProfile
    matrix: TransitionMatrix
    n_reps: int


def reshuffle_null(
    table: RankTable, n_reps: int = 100, seed: int | np.random.SeedSequence | None = None
) -> ReshuffleNull:
    """Permutation null: second-window impacts reshuffled across authors.

    Each repetition permutes impact2, re-ranks, and contributes to pooled
    per-decile moments and transition counts. Repetitions draw from spawned
    child streams of the seed, so results do not depend on execution order.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    n = len(table)
    n_bins = table.n_bins
    ids_arr = np.array(table.author_ids)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(n_reps)

    total = np.zeros(n_bins)
    total_sq = np.zeros(n_bins)
    count = np.zeros(n_bins, dtype=np.int64)
    counts_matrix = np.zeros((n_bins, n_bins), dtype=np.int64)
    idx = table.q1 - 1
    for child in children:
        rng = np.random.default_rng(child)
        permuted = table.impact2[rng.permutation(n)]
        q2 = _assign_deciles(ids_arr, permuted, n_bins)
        dq = (q2 - table.q1).astype(float)
        total += np.bincount(idx, weights=dq, minlength=n_bins)
        total_sq += np.bincount(idx, weights=dq * dq, minlength=n_bins)
        count += np.bincount(idx, minlength=n_bins)
        counts_matrix += transition_counts(table.q1, q2, n_bins)

    matrix, uniform = _counts_to_matrix(counts_matrix)
    null_matrix = TransitionMatrix(
        matrix=matrix,
        column_counts=counts_matrix.sum(axis=0),
        n_bins=n_bins,
        uniform_columns=uniform,
    )
    return ReshuffleNull(
        profile=_profile_from_moments(total, total_sq, count, n_bins),
        matrix=null_matrix,
        n_reps=n_reps,
    )


@dataclass(eq=False)
class DeltaPMatrix:
    """Elementwise gap between an empirical matrix and a model matrix.

    top_gap and bottom_gap are the persistence-probability excesses in the
    highest and lowest bins; columns of the gap matrix sum to zero.
    """

    matrix: np.ndarray
    top_gap: float
    bottom_gap: float


def delta_p(empirical: TransitionMatrix, model: np.ndarray) -> DeltaPMatrix:
    model = np.asarray(model, dtype=float)
    if model.shape != empirical.matrix.shape:
        raise ValueError(
            f"shape mismatch: empirical {empirical.matrix.shape} vs model {model.shape}"
        )
    gap = empirical.matrix - model
    return DeltaPMatrix(matrix=gap, top_gap=float(gap[-1, -1]), bottom_gap=float(gap[0, 0]))


def _fmt_num(x: float) -> str:
    value = float(x)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_matrix_csv(path: str | Path, matrix: np.ndarray) -> None:
    """Square matrix as CSV: header row of starting bins, one row per ending bin."""
    matrix = np.asarray(matrix)
    n = matrix.shape[1]
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([str(j) for j in range(1, n + 1)])
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"empty matrix file: {path}")
        rows = [[float(v) for v in row] for row in reader if row]
    matrix = np.array(rows, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[1] != len(header):
        raise ValueError(f"matrix file is not square with header: {path}")
    return matrix


def write_rank_table_csv(path: str | Path, table: RankTable) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["author_id", "impact1", "impact2", "q1", "q2"])
        for k, aid in enumerate(table.author_ids):
            writer.writerow(
                [
                    aid,
                    _fmt_num(table.impact1[k]),
                    _fmt_num(table.impact2[k]),
                    str(int(table.q1[k])),
                    str(int(table.q2[k])),
                ]
            )


def read_rank_table_csv(path: str | Path, n_bins: int = DEFAULT_BINS) -> RankTable:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["author_id", "impact1", "impact2", "q1", "q2"]:
            raise ValueError(f"not a rank table file: {path}")
        ids: list[str] = []
        i1: list[float] = []
        i2: list[float] = []
        q1: list[int] = []
        q2: list[int] = []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            i1.append(float(row[1]))
            i2.append(float(row[2]))
            q1.append(int(row[3]))
            q2.append(int(row[4]))
    return RankTable(
        author_ids=tuple(ids),
        impact1=np.array(i1),
        impact2=np.array(i2),
        q1=np.array(q1, dtype=np.int64),
        q2=np.array(q2, dtype=np.int64),
        n_bins=n_bins,
    )


def write_delta_q_csv(path: str | Path, profile: DeltaQProfile) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["decile", "mean_dq", "sem", "count"])
        for k in range(len(profile.deciles)):
            writer.writerow(
                [
                    str(int(profile.deciles[k])),
                    repr(float(profile.mean[k])),
                    repr(float(profile.sem[k])),
                    str(int(profile.count[k])),
                ]
            )


def read_delta_q_csv(path: str | Path) -> DeltaQProfile:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["decile", "mean_dq", "sem", "count"]:
            raise ValueError(f"not a decile-change profile file: {path}")
        rows = [row for row in reader if row]
    return DeltaQProfile(
        deciles=np.array([int(r[0]) for r in rows], dtype=np.int64),
        mean=np.array([float(r[1]) for r in rows]),
        sem=np.array([float(r[2]) for r in rows]),
        count=np.array([int(r[3]) for r in rows], dtype=np.int64),
    )
