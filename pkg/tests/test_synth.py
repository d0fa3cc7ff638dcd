import json
import re
from importlib import resources

import numpy as np
import pytest

from rankmobility.disambig import (
    ScoringRuleTable,
    block_mentions,
    disambiguate,
    evaluate_disambiguation,
)
from rankmobility.corpus import iter_export_lines
from rankmobility.inequality import gini
from rankmobility.synth import SynthConfig, generate_corpus, sample_transitions


def small_config(**overrides):
    base = dict(
        n_authors=60,
        seed=1,
        disciplines=("Chemistry",),
        start_years=(2000, 2001),
    )
    base.update(overrides)
    return SynthConfig(**base)


def test_same_config_reproduces_corpus_bit_for_bit():
    first_corpus, first_truth = generate_corpus(small_config())
    second_corpus, second_truth = generate_corpus(small_config())
    assert list(iter_export_lines(first_corpus)) == list(iter_export_lines(second_corpus))
    assert first_truth == second_truth


def test_different_seeds_differ():
    a, _ = generate_corpus(small_config(seed=1))
    b, _ = generate_corpus(small_config(seed=2))
    assert list(iter_export_lines(a)) != list(iter_export_lines(b))


def test_truth_covers_every_mention():
    corpus, truth = generate_corpus(small_config())
    expected = {
        f"{pub.pub_id}:{pos}"
        for pub in corpus.publications.values()
        for pos in range(len(pub.authors))
    }
    assert set(truth) == expected
    assert all(re.fullmatch(r"A\d{6}", label) for label in truth.values())


def test_every_author_leads_at_least_one_paper():
    corpus, truth = generate_corpus(small_config())
    leads = {
        truth[f"{pub.pub_id}:0"] for pub in corpus.publications.values()
    }
    assert leads == set(truth.values())


def test_zero_collision_rate_means_names_identify_authors():
    corpus, truth = generate_corpus(
        small_config(name_collision_rate=0.0, p_initials_only=0.0)
    )
    labels_by_name: dict[str, set[str]] = {}
    for mid, label in truth.items():
        labels_by_name.setdefault(corpus.mentions[mid].name, set()).add(label)
    assert all(len(labels) == 1 for labels in labels_by_name.values())
    assert len(labels_by_name) == len(set(truth.values()))


def test_high_collision_rate_produces_shared_names():
    corpus, truth = generate_corpus(
        small_config(n_authors=80, name_collision_rate=0.5, p_initials_only=0.0)
    )
    labels_by_name: dict[str, set[str]] = {}
    for mid, label in truth.items():
        labels_by_name.setdefault(corpus.mentions[mid].name, set()).add(label)
    assert max(len(labels) for labels in labels_by_name.values()) >= 2


def test_generated_lines_conform_to_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads(
        resources.files("rankmobility.data")
        .joinpath("publication-record.schema.json")
        .read_text("utf-8")
    )
    validator = jsonschema.Draft202012Validator(schema)
    corpus, _ = generate_corpus(small_config(n_authors=30))
    for line in iter_export_lines(corpus):
        validator.validate(json.loads(line))


def test_full_orcid_coverage_allows_exact_recovery():
    corpus, truth = generate_corpus(small_config(p_missing_orcid=0.0))
    rules = ScoringRuleTable(weights={"orcid_match": 10.0}, threshold=10.0)
    clusters = disambiguate(corpus, rules)
    result = evaluate_disambiguation(clusters, truth, blocks=block_mentions(corpus))
    assert result.precision == 1.0
    assert result.recall == 1.0
    assert result.f1 == 1.0


def test_references_point_at_real_publications():
    corpus, _ = generate_corpus(small_config())
    for pub in corpus.publications.values():
        for mention in pub.authors:
            for ref in mention.get("references", ()):
                assert ref in corpus.publications
                assert ref != pub.pub_id


def test_years_disciplines_and_citations_in_range():
    config = small_config(disciplines=("Chemistry", "Biology"))
    corpus, _ = generate_corpus(config)
    lo = config.start_years[0]
    hi = config.start_years[1] + config.career_years - 1
    for pub in corpus.publications.values():
        assert lo <= pub.year <= hi
        assert pub.disciplines <= set(config.disciplines)
        assert list(pub.citing_years) == sorted(pub.citing_years)
        assert all(year >= pub.year for year in pub.citing_years)


def test_some_citations_arrive_after_the_impact_window():
    corpus, _ = generate_corpus(small_config(n_authors=80, seed=3))
    assert any(
        year > pub.year + 4
        for pub in corpus.publications.values()
        for year in pub.citing_years
    )


def author_citation_totals(corpus, truth):
    totals: dict[str, int] = {}
    for pub in corpus.publications.values():
        weight = len(pub.citing_years)
        for pos in range(len(pub.authors)):
            label = truth[f"{pub.pub_id}:{pos}"]
            totals[label] = totals.get(label, 0) + weight
    return totals


def test_concentration_rises_with_alpha():
    ginis = []
    for alpha in (0.0, 1.0, 2.0):
        corpus, truth = generate_corpus(small_config(n_authors=120, seed=9, alpha=alpha))
        totals = author_citation_totals(corpus, truth)
        ginis.append(gini(list(totals.values())))
    assert ginis[0] < ginis[1] < ginis[2]


def test_sample_transitions_needs_enough_authors():
    with pytest.raises(ValueError, match="need at least 1000 authors"):
        sample_transitions(0.5, 999, seed=0)


def test_sample_transitions_balanced_first_window():
    table = sample_transitions(0.5, 2000, seed=4)
    assert np.bincount(table.q1, minlength=11)[1:].tolist() == [200] * 10


def test_sample_transitions_small_d_pins_ranks():
    table = sample_transitions(0.01, 2000, seed=4)
    np.testing.assert_array_equal(table.q2, table.q1)


def test_sample_transitions_large_d_spreads_ranks():
    table = sample_transitions(1e6, 2000, seed=4)
    counts = np.bincount(table.q2, minlength=11)[1:]
    assert np.abs(counts - 200).max() < 70


def test_sample_transitions_seeded():
    a = sample_transitions(0.5, 1500, seed=7)
    b = sample_transitions(0.5, 1500, seed=7)
    c = sample_transitions(0.5, 1500, seed=8)
    np.testing.assert_array_equal(a.q2, b.q2)
    assert not np.array_equal(a.q2, c.q2)


def test_sample_transitions_custom_bins():
    table = sample_transitions(0.5, 1000, seed=2, n_bins=5)
    assert set(table.q1.tolist()) == {1, 2, 3, 4, 5}
    assert table.n_bins == 5
    assert table.author_ids[0] == "S0000"


@pytest.mark.parametrize(
    "overrides,message",
    [
        ({"n_authors": 0}, "n_authors must be positive"),
        ({"alpha": -0.1}, "alpha must be nonnegative"),
        ({"name_collision_rate": 1.5}, "name_collision_rate must lie in"),
        ({"p_collab_reference": -0.2}, "p_collab_reference must lie in"),
        ({"start_years": (2002, 2000)}, "start_years must be a nondecreasing pair"),
        ({"group_size": 1}, "group_size must be at least 2"),
        ({"collaborators": (3, 2)}, "collaborators must be a nondecreasing pair"),
        ({"career_years": 0}, "must be positive"),
        ({"disciplines": ()}, "at least one discipline is required"),
        ({"updates_per_year": 0}, "updates_per_year must be at least 1"),
    ],
)
def test_config_validation(overrides, message):
    with pytest.raises(ValueError, match=message):
        small_config(**overrides)


def test_config_from_json_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown generator config keys: frobnicate"):
        SynthConfig.from_json({"n_authors": 10, "seed": 1, "frobnicate": True})


def test_config_from_json_accepts_lists_and_files(tmp_path):
    payload = {
        "n_authors": 10,
        "seed": 1,
        "start_years": [2000, 2001],
        "disciplines": ["Chemistry"],
        "collaborators": [1, 2],
    }
    from_mapping = SynthConfig.from_json(payload)
    assert from_mapping.start_years == (2000, 2001)
    assert from_mapping.disciplines == ("Chemistry",)
    assert from_mapping.collaborators == (1, 2)

    path = tmp_path / "synth.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    assert SynthConfig.from_json(path) == from_mapping
