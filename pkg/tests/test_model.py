import json
import random
from fractions import Fraction

import numpy as np
import pytest

import oracles
from searchkin import (
    COUNTING_SEARCH_EVENTS,
    ModelError,
    NoKnownKeywordsError,
    UnknownTermError,
    UserProfile,
    build_model,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)


class TestBuildModel:
    def test_table1_counts(self, table1_model):
        assert table1_model.grand_total == 19
        assert table1_model.edge_count("Java Developer", "software engineer") == 2
        assert table1_model.class_total("Java Developer") == 9
        assert table1_model.term_total("software engineer") == 3

    def test_minimal_model(self):
        model = build_model([UserProfile("u", "C1", ("t1",))])
        assert model.grand_total == 1
        assert model.edge_count("C1", "t1") == 1
        assert model.n_edges == 1

    def test_two_identical_profiles_double_counts(self, table1_profiles):
        doubled = list(table1_profiles) + [
            UserProfile(p.user_id + "-copy", p.classification, p.terms)
            for p in table1_profiles
        ]
        single = build_model(table1_profiles)
        double = build_model(doubled)
        for label in single.classes:
            for term in single.terms:
                assert double.edge_count(label, term) == 2 * single.edge_count(label, term)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ModelError, match="empty corpus"):
            build_model([])

    def test_canonical_ordering(self, table1_model):
        assert list(table1_model.classes) == sorted(table1_model.classes)
        assert list(table1_model.terms) == sorted(table1_model.terms)

    def test_search_events_mode(self):
        profiles = [
            UserProfile("u1", "C", ("java", "jee"), term_counts={"java": 3, "jee": 1}),
            UserProfile("u2", "C", ("java",), term_counts={"java": 2}),
        ]
        model = build_model(profiles, COUNTING_SEARCH_EVENTS)
        assert model.edge_count("C", "java") == 5
        assert model.edge_count("C", "jee") == 1
        assert model.grand_total == 6

    def test_search_events_requires_counts(self, table1_profiles):
        with pytest.raises(ModelError, match="term counts"):
            build_model(table1_profiles, COUNTING_SEARCH_EVENTS)


class TestProbabilities:
    def test_joint_table1(self, table1_model):
        assert table1_model.joint_probability("java", "Java Developer") == 2 / 19

    def test_joint_absent_edge(self, table1_model):
        assert table1_model.joint_probability("rn", "Java Developer") == 0.0

    def test_joint_single_edge_model(self):
        model = build_model([UserProfile("u", "C1", ("t1",))])
        assert model.joint_probability("t1", "C1") == 1.0

    def test_conditionals_table1(self, table1_model):
        assert table1_model.term_given_class("software engineer", "Java Developer") == 2 / 9
        assert table1_model.class_given_term("software engineer", "Java Developer") == 2 / 3

    def test_unknown_symbols_return_zero(self, table1_model):
        assert table1_model.joint_probability("cobol", "Java Developer") == 0.0
        assert table1_model.term_given_class("java", "Astronaut") == 0.0
        assert table1_model.class_given_term("cobol", "Nurse") == 0.0

    def test_joint_sums_to_one(self, table1_model):
        total = sum(
            table1_model.joint_probability(t, c)
            for c in table1_model.classes
            for t in table1_model.terms
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_term_given_class_normalizes(self, table1_model):
        for label in table1_model.classes:
            total = sum(table1_model.term_given_class(t, label) for t in table1_model.terms)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_class_given_term_normalizes(self, table1_model):
        for term in table1_model.terms:
            total = sum(table1_model.class_given_term(term, c) for c in table1_model.classes)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_matches_fraction_recount(self, table1_profiles, table1_model):
        counts = oracles.recount_edges(table1_profiles)
        assert table1_model.joint_probability("java", "Java Developer") == float(
            oracles.joint_fraction(counts, "java", "Java Developer")
        )
        assert table1_model.term_given_class("se", ".NET Developer") == float(
            oracles.term_given_class_fraction(counts, "se", ".NET Developer")
        )


class TestClassifyKeywords:
    def test_nurse_keywords_argmax(self, table1_model):
        scores = table1_model.classify_keywords({"rn", "registered nurse"}, beta=1.0)
        assert scores.argmax_class() == "Nurse"
        assert sum(scores.scores.values()) == pytest.approx(1.0, abs=1e-9)
        assert set(scores.scores) == set(table1_model.classes)

    def test_single_class_model(self):
        model = build_model([UserProfile("u", "C1", ("t1", "t2"))])
        scores = model.classify_keywords({"t1"})
        assert scores.scores == {"C1": 1.0}

    def test_beta_zero_equals_class_given_term(self, table1_model):
        scores = table1_model.classify_keywords({"software engineer"}, beta=0.0)
        assert scores.scores["Java Developer"] == pytest.approx(2 / 3, abs=1e-12)
        assert scores.scores[".NET Developer"] == pytest.approx(1 / 3, abs=1e-12)
        assert scores.scores["Nurse"] == 0.0

    def test_unknown_keywords_ignored(self, table1_model):
        with_unknown = table1_model.classify_keywords({"rn", "warp drive"}, beta=1.0)
        without = table1_model.classify_keywords({"rn"}, beta=1.0)
        for label in table1_model.classes:
            assert with_unknown.scores[label] == pytest.approx(without.scores[label], abs=1e-12)

    def test_all_unknown_raises(self, table1_model):
        with pytest.raises(NoKnownKeywordsError, match="no known keywords"):
            table1_model.classify_keywords({"warp drive", "flux capacitor"})

    def test_empty_keyword_set_rejected(self, table1_model):
        with pytest.raises(ValueError, match="empty"):
            table1_model.classify_keywords(set())

    def test_negative_beta_rejected(self, table1_model):
        with pytest.raises(ValueError):
            table1_model.classify_keywords({"rn"}, beta=-0.5)

    def test_matches_direct_product_oracle(self, table1_profiles, table1_model):
        counts = oracles.recount_edges(table1_profiles)
        for beta in (0.0, 0.5, 1.0, 2.0):
            got = table1_model.classify_keywords({"java", "se"}, beta=beta)
            want = oracles.naive_bayes_direct(counts, {"java", "se"}, beta)
            for label in want:
                assert got.scores[label] == pytest.approx(want[label], abs=1e-9)

    def test_beta_zero_uniform_fallback(self):
        # no class covers both keywords, so beta=0 zeroes every class
        profiles = [
            UserProfile("u1", "A", ("x",)),
            UserProfile("u2", "B", ("y",)),
        ]
        model = build_model(profiles)
        scores = model.classify_keywords({"x", "y"}, beta=0.0)
        assert scores.scores == {"A": 0.5, "B": 0.5}

    def test_scale_invariance_beta_zero(self, table1_profiles, table1_model):
        for lam in (2, 10):
            scaled_profiles = [
                UserProfile(f"{p.user_id}-{i}", p.classification, p.terms)
                for p in table1_profiles
                for i in range(lam)
            ]
            scaled = build_model(scaled_profiles)
            base = table1_model.classify_keywords({"java", "se"}, beta=0.0)
            got = scaled.classify_keywords({"java", "se"}, beta=0.0)
            assert got.argmax_class() == base.argmax_class()
            for label in base.scores:
                assert got.scores[label] == pytest.approx(base.scores[label], abs=1e-12)


class TestRelatedCandidates:
    def test_java_jee_cosine_one(self, table1_model):
        related = table1_model.related_candidates("java", top_n=10, min_score=0.0)
        by_target = {r.target: r.score for r in related.relations}
        assert by_target["jee"] == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_class_support_excluded(self, table1_model):
        related = table1_model.related_candidates("java", top_n=50, min_score=0.0)
        targets = {r.target for r in related.relations}
        assert "rn" not in targets

    def test_source_excluded(self, table1_model):
        related = table1_model.related_candidates("java", top_n=50, min_score=0.0)
        assert all(r.target != "java" for r in related.relations)

    def test_top_n_truncation(self, table1_model):
        full = table1_model.related_candidates("java", top_n=50, min_score=0.0)
        assert len(full.relations) == 6
        top2 = table1_model.related_candidates("java", top_n=2, min_score=0.0)
        assert top2.relations == full.relations[:2]

    def test_monotone_truncation(self, table1_model):
        previous: list = []
        for n in range(1, 8):
            current = table1_model.related_candidates("java", top_n=n, min_score=0.0).relations
            assert list(current[: len(previous)]) == previous
            previous = list(current)

    def test_sorted_by_score_then_target(self, table1_model):
        rels = table1_model.related_candidates("java", top_n=50, min_score=0.0).relations
        keys = [(-r.score, r.target) for r in rels]
        assert keys == sorted(keys)

    def test_min_score_filters(self, table1_model):
        rels = table1_model.related_candidates("java", top_n=50, min_score=0.9).relations
        assert all(r.score >= 0.9 for r in rels)

    def test_unknown_source_raises(self, table1_model):
        with pytest.raises(UnknownTermError, match="unknown term"):
            table1_model.related_candidates("warp drive")

    def test_scores_match_cosine_oracle(self, table1_profiles, table1_model):
        counts = oracles.recount_edges(table1_profiles)
        rels = table1_model.related_candidates("software engineer", top_n=50, min_score=0.0)
        for r in rels.relations:
            want = oracles.cosine_class_profiles(counts, "software engineer", r.target)
            assert r.score == pytest.approx(want, abs=1e-9)

    def test_symmetry(self, table1_model):
        def score(a, b):
            rels = table1_model.related_candidates(a, top_n=50, min_score=0.0).relations
            return {r.target: r.score for r in rels}.get(b, 0.0)

        for a, b in [("java", "se"), ("software engineer", "c#"), ("rn", "health care")]:
            assert score(a, b) == pytest.approx(score(b, a), abs=1e-12)


class TestConsistency:
    def test_healthy_model_clean(self, table1_model):
        assert table1_model.check_consistency() == []

    def test_tampered_grand_total_detected(self, table1_profiles):
        model = build_model(table1_profiles)
        model.grand_total += 1
        problems = model.check_consistency()
        assert problems == ["grand_total"]

    def test_tampered_class_total_detected(self, table1_profiles):
        model = build_model(table1_profiles)
        model._class_totals[0] += 1
        assert any("class_totals" in p for p in model.check_consistency())


class TestPersistence:
    def test_round_trip_bytes_identical(self, table1_model, tmp_path):
        first = tmp_path / "model-a.json"
        second = tmp_path / "model-b.json"
        save_model(table1_model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_loaded_model_answers_identically(self, table1_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(table1_model, path)
        loaded = load_model(path)
        assert loaded.grand_total == table1_model.grand_total
        assert loaded.joint_probability("java", "Java Developer") == 2 / 19

    def test_document_shape(self, table1_model):
        doc = model_to_dict(table1_model)
        assert doc["version"] == 1
        assert doc["counting_mode"] == "distinct-users"
        assert doc["classes"] == sorted(doc["classes"])
        assert doc["terms"] == sorted(doc["terms"])
        assert doc["edges"] == sorted(doc["edges"])

    def test_bad_version_rejected(self, table1_model):
        doc = model_to_dict(table1_model)
        doc["version"] = 99
        with pytest.raises(ModelError, match="version"):
            model_from_dict(doc)

    def test_zero_count_edge_rejected(self, table1_model):
        doc = model_to_dict(table1_model)
        doc["edges"][0][2] = 0
        with pytest.raises(ModelError, match="positive"):
            model_from_dict(doc)

    def test_unsorted_edges_rejected(self, table1_model):
        doc = model_to_dict(table1_model)
        doc["edges"] = doc["edges"][::-1]
        with pytest.raises(ModelError, match="sorted"):
            model_from_dict(doc)

    def test_out_of_range_edge_rejected(self, table1_model):
        doc = model_to_dict(table1_model)
        doc["edges"][-1][1] = len(doc["terms"]) + 5
        with pytest.raises(ModelError, match="range"):
            model_from_dict(doc)

    def test_corrupt_json_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ModelError, match="JSON"):
            load_model(path)


class TestRandomCorporaAgainstOracle:
    """Sampled version of the acceptance sweep, kept small for the fast suite."""

    @pytest.mark.parametrize("seed", range(10))
    def test_probabilities_match_recount(self, seed):
        rng = random.Random(seed)
        profiles = oracles.random_profiles(rng)
        model = build_model(profiles)
        counts = oracles.recount_edges(profiles)
        for label in model.classes:
            for term in model.terms:
                want = oracles.joint_fraction(counts, term, label)
                assert abs(model.joint_probability(term, label) - float(want)) <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_search_events_matches_recount(self, seed):
        rng = random.Random(100 + seed)
        profiles = oracles.random_profiles(rng)
        model = build_model(profiles, COUNTING_SEARCH_EVENTS)
        counts = oracles.recount_edges(profiles, "search-events")
        assert model.grand_total == sum(counts.values())
        for (label, term), n in counts.items():
            assert model.edge_count(label, term) == n
