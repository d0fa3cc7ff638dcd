"""Synthetic citation corpora with tunable concentration and name collisions.

The generator grows a population of authors who publish over their first
ten career years and receive citations by cumulative advantage: each
citation picks an author with probability proportional to
(1 + citations so far) ** alpha among authors with citable (at most four
years old) papers, then lands on one of that author's citable papers.
alpha = 0 spreads citations uniformly over active authors; large alpha
concentrates them. Ground-truth identities are returned alongside the
corpus, keyed by mention id.

Everything is driven by one seeded generator, so a config plus seed pins
the corpus bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import Corpus, PublicationRecord
from .diffusion import model_matrix
from .mobility import DEFAULT_BINS, RankTable

_SYLLABLES = (
    "ba", "bel", "cor", "dan", "dre", "fa", "gar", "hol", "jin", "ka",
    "lem", "low", "mar", "mor", "nel", "or", "pa", "quin", "ral", "ru",
    "sa", "sol", "tan", "tor", "ul", "van", "wen", "wick", "yar", "zel",
)


def _pseudo_word(index: int, syllables: int) -> str:
    parts = []
    value = index
    for _ in range(syllables):
        parts.append(_SYLLABLES[value % len(_SYLLABLES)])
        value //= len(_SYLLABLES)
    return "".join(parts).capitalize()


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the generator; n_authors and seed have no defaults.

    paper_rate is the expected papers per author-year as lead author,
    scaled by a per-author lognormal productivity factor. citation_rate is
    the expected citations per citable paper-year. name_collision_rate is
    the probability that a new author adopts the exact full name of an
    earlier one; fresh identities always get a full name nobody has used
    yet, so zero collision rate means unique names. Authors are organized
    into research groups of group_size within their discipline: group
    members share an institute and collaborator pools are drawn inside the
    group. The attribute-noise probabilities drop fields from individual
    mentions. updates_per_year controls how often attachment weights
    refresh within a simulated year.
    """

    n_authors: int
    seed: int
    start_years: tuple[int, int] = (2000, 2002)
    disciplines: tuple[str, ...] = ("Chemistry", "Biology", "Materials")
    career_years: int = 10
    paper_rate: float = 0.8
    alpha: float = 1.0
    citation_rate: float = 2.0
    name_collision_rate: float = 0.0
    p_missing_email: float = 0.4
    p_missing_affiliation: float = 0.3
    p_missing_orcid: float = 0.5
    p_missing_grants: float = 0.5
    p_initials_only: float = 0.2
    p_second_discipline: float = 0.1
    productivity_sigma: float = 0.6
    collaborators: tuple[int, int] = (2, 4)
    group_size: int = 6
    max_coauthors: int = 3
    surname_pool: int = 3000
    zipf_exponent: float = 1.0
    given_pool: int = 300
    p_collab_reference: float = 0.4
    late_citation_rate: float = 0.05
    updates_per_year: int = 10

    def __post_init__(self) -> None:
        if self.n_authors < 1:
            raise ValueError("n_authors must be positive")
        if self.seed is None:
            raise ValueError("seed is mandatory")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        for name in (
            "name_collision_rate",
            "p_missing_email",
            "p_missing_affiliation",
            "p_missing_orcid",
            "p_missing_grants",
            "p_initials_only",
            "p_second_discipline",
            "p_collab_reference",
            "late_citation_rate",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.start_years[0] > self.start_years[1]:
            raise ValueError("start_years must be a nondecreasing pair")
        if self.group_size < 2:
            raise ValueError("group_size must be at least 2")
        if not 0 <= self.collaborators[0] <= self.collaborators[1]:
            raise ValueError("collaborators must be a nondecreasing pair of counts")
        if self.career_years < 1 or self.paper_rate <= 0 or self.citation_rate < 0:
            raise ValueError("career_years, paper_rate and citation_rate must be positive")
        if not self.disciplines:
            raise ValueError("at least one discipline is required")
        if self.updates_per_year < 1:
            raise ValueError("updates_per_year must be at least 1")

    @classmethod
    def from_json(cls, source: str | Path | Mapping) -> "SynthConfig":
        if isinstance(source, Mapping):
            payload = dict(source)
        else:
            with Path(source).open("r", encoding="utf-8") as handle:
                payload = json.load(handle)
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown generator config keys: {', '.join(sorted(unknown))}")
        for key in ("start_years", "disciplines", "collaborators"):
            if key in payload and isinstance(payload[key], list):
                payload[key] = tuple(payload[key])
        return cls(**payload)


@dataclass
class _Author:
    index: int
    given: str
    surname: str
    discipline: str
    start: int
    productivity: float
    orcid: str
    email: str
    affiliation: str
    grants: tuple[str, ...]
    journal: str
    pool: np.ndarray


@dataclass
class _Paper:
    year: int
    authors: tuple[int, ...]
    disciplines: tuple[str, ...]
    journal: str
    references: list[str]
    citing_years: list[int]
    pub_id: str = ""


def _make_authors(config: SynthConfig, rng: np.random.Generator) -> list[_Author]:
    zipf_p = 1.0 / np.arange(1, config.surname_pool + 1, dtype=float) ** config.zipf_exponent
    zipf_cum = np.cumsum(zipf_p / zipf_p.sum())
    journals = {
        d: [f"Journal of {d} {k + 1}" for k in range(6)] for d in config.disciplines
    }
    authors: list[_Author] = []
    used_names: set[tuple[str, str]] = set()
    for i in range(config.n_authors):
        discipline = config.disciplines[int(rng.integers(len(config.disciplines)))]
        start = int(rng.integers(config.start_years[0], config.start_years[1] + 1))
        if i > 0 and rng.random() < config.name_collision_rate:
            donor = authors[int(rng.integers(i))]
            given, surname = donor.given, donor.surname
        else:
            # Fresh identities never reuse a taken full name, so at zero
            # collision rate names identify authors exactly.
            while True:
                s_idx = int(np.searchsorted(zipf_cum, rng.random(), side="right"))
                surname = _pseudo_word(s_idx + 50_000, 2 + s_idx % 2)
                given = _pseudo_word(int(rng.integers(config.given_pool)) + 7_001, 2)
                if (given, surname) not in used_names:
                    break
            used_names.add((given, surname))
        grants = tuple(f"G-{i}-{k}" for k in range(int(rng.integers(1, 4))))
        authors.append(
            _Author(
                index=i,
                given=given,
                surname=surname,
                discipline=discipline,
                start=start,
                productivity=float(rng.lognormal(0.0, config.productivity_sigma)),
                orcid=f"0000-0000-{i // 10000:04d}-{i % 10000:04d}",
                email=f"{given.lower()}.{surname.lower()}.{i}@example.edu",
                affiliation="",
                grants=grants,
                journal=journals[discipline][int(rng.integers(6))],
                pool=np.empty(0, dtype=np.int64),
            )
        )
    # Research groups: disciplines are partitioned into groups of
    # group_size. Group members share an institute, and collaborator pools
    # are drawn inside the group, so coauthor overlap is a stable
    # within-identity signal rather than a discipline-wide one.
    group_id = 0
    lo, hi = config.collaborators
    for d in config.disciplines:
        members = np.array([a.index for a in authors if a.discipline == d], dtype=np.int64)
        members = members[rng.permutation(len(members))]
        for pos in range(0, len(members), config.group_size):
            group = members[pos : pos + config.group_size]
            for idx in group:
                authors[int(idx)].affiliation = f"Institute {group_id:04d}"
            for idx in group:
                peers = group[group != idx]
                want = int(rng.integers(lo, hi + 1))
                if len(peers) == 0 or want == 0:
                    authors[int(idx)].pool = np.empty(0, dtype=np.int64)
                else:
                    take = min(want, len(peers))
                    authors[int(idx)].pool = np.sort(rng.choice(peers, size=take, replace=False))
            group_id += 1
    return authors


def _make_papers(
    config: SynthConfig, rng: np.random.Generator, authors: list[_Author]
) -> list[_Paper]:
    journals = {
        d: [f"Journal of {d} {k + 1}" for k in range(6)] for d in config.disciplines
    }
    other = {
        d: tuple(x for x in config.disciplines if x != d) for d in config.disciplines
    }
    papers: list[_Paper] = []
    for author in authors:
        for t in range(config.career_years):
            year = author.start + t
            k = int(rng.poisson(config.paper_rate * author.productivity))
            if t == 0 and k == 0:
                k = 1  # the career start year anchors the cohort
            for _ in range(k):
                n_co = int(rng.integers(0, config.max_coauthors + 1))
                if n_co > 0 and len(author.pool) > 0:
                    picked = rng.choice(author.pool, size=min(n_co, len(author.pool)), replace=False)
                    coauthors = tuple(int(c) for c in picked)
                else:
                    coauthors = ()
                if rng.random() < 0.7:
                    journal = author.journal
                else:
                    journal = journals[author.discipline][int(rng.integers(6))]
                disciplines = [author.discipline]
                extra = other[author.discipline]
                if extra and rng.random() < config.p_second_discipline:
                    disciplines.append(extra[int(rng.integers(len(extra)))])
                papers.append(
                    _Paper(
                        year=year,
                        authors=(author.index,) + coauthors,
                        disciplines=tuple(disciplines),
                        journal=journal,
                        references=[],
                        citing_years=[],
                    )
                )
    papers.sort(key=lambda p: p.year)
    width = max(7, len(str(len(papers))))
    for idx, paper in enumerate(papers):
        paper.pub_id = f"P{idx:0{width}d}"
    return papers


def _add_references(
    config: SynthConfig, rng: np.random.Generator, authors: list[_Author], papers: list[_Paper]
) -> None:
    """Reference lists: own recent work, sometimes a collaborator's, noise."""
    by_author: dict[int, list[int]] = {a.index: [] for a in authors}
    for idx, paper in enumerate(papers):
        lead = paper.authors[0]
        own = by_author[lead]
        refs: set[str] = set()
        if own:
            for j in own[-3:]:
                refs.add(papers[j].pub_id)
        pool = authors[lead].pool
        if len(pool) > 0 and rng.random() < config.p_collab_reference:
            collab = int(pool[int(rng.integers(len(pool)))])
            their = by_author[collab]
            if their:
                refs.add(papers[their[-1]].pub_id)
        if idx > 0 and rng.random() < 0.5:
            refs.add(papers[int(rng.integers(idx))].pub_id)
        refs.discard(paper.pub_id)
        paper.references = sorted(refs)
        for a in paper.authors:
            by_author[a].append(idx)


def _simulate_citations(
    config: SynthConfig, rng: np.random.Generator, authors: list[_Author], papers: list[_Paper]
) -> None:
    """Cumulative-advantage citation arrival, batched within each year."""
    n_papers = len(papers)
    if n_papers == 0 or config.citation_rate == 0:
        return
    paper_year = np.array([p.year for p in papers], dtype=np.int64)
    by_year: dict[int, list[int]] = {}
    for idx, paper in enumerate(papers):
        by_year.setdefault(paper.year, []).append(idx)
    author_citations = np.zeros(config.n_authors, dtype=np.int64)
    first_year = int(paper_year.min())
    last_year = int(paper_year.max()) + 4

    for year in range(first_year, last_year + 1):
        citable = [i for y in range(year - 4, year + 1) for i in by_year.get(y, ())]
        if not citable:
            continue
        stale = [i for y in range(year - 9, year - 4) for i in by_year.get(y, ())]
        n_events = int(rng.poisson(config.citation_rate * len(citable)))
        if n_events == 0:
            continue
        n_late = int(rng.binomial(n_events, config.late_citation_rate)) if stale else 0
        if n_late > 0:
            targets = rng.integers(0, len(stale), size=n_late)
            for t in targets:
                paper = papers[stale[int(t)]]
                paper.citing_years.append(year)
                for a in paper.authors:
                    author_citations[a] += 1

        remaining = n_events - n_late
        if remaining == 0:
            continue
        papers_of: dict[int, list[int]] = {}
        for i in citable:
            for a in papers[i].authors:
                papers_of.setdefault(a, []).append(i)
        active = np.array(sorted(papers_of), dtype=np.int64)
        batches = np.full(config.updates_per_year, remaining // config.updates_per_year)
        batches[: remaining % config.updates_per_year] += 1
        for batch in batches:
            if batch == 0:
                continue
            weights = (1.0 + author_citations[active].astype(float)) ** config.alpha
            probs = weights / weights.sum()
            per_author = rng.multinomial(int(batch), probs)
            hit = np.nonzero(per_author)[0]
            for h in hit:
                author_idx = int(active[h])
                count = int(per_author[h])
                mine = papers_of[author_idx]
                if len(mine) == 1:
                    split = [count]
                else:
                    split = rng.multinomial(count, np.full(len(mine), 1.0 / len(mine)))
                for paper_idx, events in zip(mine, split):
                    if events == 0:
                        continue
                    paper = papers[paper_idx]
                    paper.citing_years.extend([year] * int(events))
                    for a in paper.authors:
                        author_citations[a] += int(events)


def generate_corpus(config: SynthConfig) -> tuple[Corpus, dict[str, str]]:
    """Generate a corpus and its ground-truth mention labels.

    Returns
    -------
    (Corpus, dict)
        The corpus, and truth mapping mention_id -> true author id.
    """
    rng = np.random.default_rng(config.seed)
    authors = _make_authors(config, rng)
    papers = _make_papers(config, rng, authors)
    _add_references(config, rng, authors, papers)
    _simulate_citations(config, rng, authors, papers)

    records: list[PublicationRecord] = []
    truth: dict[str, str] = {}
    for paper in papers:
        mentions = []
        for pos, author_idx in enumerate(paper.authors):
            author = authors[author_idx]
            if rng.random() < config.p_initials_only:
                name = f"{author.given[0]}. {author.surname}"
            else:
                name = f"{author.given} {author.surname}"
            mention: dict = {"name": name, "journal": paper.journal}
            if paper.references:
                mention["references"] = list(paper.references)
            if rng.random() >= config.p_missing_orcid:
                mention["orcid"] = author.orcid
            if rng.random() >= config.p_missing_email:
                mention["email"] = author.email
            if rng.random() >= config.p_missing_affiliation:
                mention["affiliation"] = author.affiliation
            if rng.random() >= config.p_missing_grants:
                mention["grants"] = sorted(author.grants)
            mentions.append(mention)
            truth[f"{paper.pub_id}:{pos}"] = f"A{author_idx:06d}"
        records.append(
            PublicationRecord(
                pub_id=paper.pub_id,
                year=paper.year,
                disciplines=frozenset(paper.disciplines),
                authors=tuple(mentions),
                citing_years=tuple(sorted(paper.citing_years)),
            )
        )
    return Corpus(records), truth


def sample_transitions(
    d: float, n_authors: int, seed: int, n_bins: int = DEFAULT_BINS
) -> RankTable:
    """Draw a rank table whose transitions follow the diffusion kernel.

    First-window deciles are a balanced split; each author's second decile
    is drawn from the kernel column of their first. Intended for parameter
    recovery: impact2 holds the drawn decile as a placeholder, so only q1
    and q2 carry signal.
    """
    if n_authors < 1000:
        raise ValueError("need at least 1000 authors for a meaningful sample")
    rng = np.random.default_rng(seed)
    matrix = model_matrix(d, n_bins)
    q1 = np.arange(n_authors, dtype=np.int64) * n_bins // n_authors + 1
    q2 = np.empty(n_authors, dtype=np.int64)
    for j in range(1, n_bins + 1):
        idx = np.nonzero(q1 == j)[0]
        q2[idx] = rng.choice(n_bins, size=len(idx), p=matrix[:, j - 1]) + 1
    width = len(str(n_authors))
    ids = tuple(f"S{k:0{width}d}" for k in range(n_authors))
    return RankTable(
        author_ids=ids,
        impact1=np.arange(n_authors, dtype=float),
        impact2=q2.astype(float),
        q1=q1,
        q2=q2,
        n_bins=n_bins,
    )
