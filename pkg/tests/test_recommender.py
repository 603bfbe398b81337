import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxsearch.behavior import MetaKeyword
from ctxsearch.errors import ParseError, ValidationError
from ctxsearch.lexicon import DisambiguatedTerm
from ctxsearch.profile_store import PersonalProfile, SharedKnowledgeBase, merge_into_sckb
from ctxsearch.recommender import (
    Concept,
    Ontology,
    load_ontology,
    nn_two_step,
    recommend_concepts,
    recommend_meta_keywords,
    recommend_senses,
)
from ctxsearch.vectors import TermVector, cosine
from tests.test_profile_store import make_entry


def brute_force_top_k(query, entries, k):
    scored = [(eid, cosine(query, vec)) for eid, vec in entries]
    scored = [(eid, s) for eid, s in scored if s > 0.0]
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


class TestNnTwoStep:
    def test_zero_overlap_excluded(self):
        entries = [(1, TermVector({"a": 1})), (2, TermVector({"b": 1}))]
        assert nn_two_step(TermVector({"a": 1}), entries, 2) == [(1, 1.0)]

    def test_order_matches_brute_force(self):
        entries = [
            (1, TermVector({"a": 1, "b": 3})),
            (2, TermVector({"a": 2})),
            (3, TermVector({"a": 1, "c": 1})),
        ]
        query = TermVector({"a": 1})
        assert nn_two_step(query, entries, 3) == brute_force_top_k(query, entries, 3)

    def test_ties_break_by_ascending_id(self):
        entries = [(7, TermVector({"a": 2})), (3, TermVector({"a": 5}))]
        assert nn_two_step(TermVector({"a": 1}), entries, 2) == [(3, 1.0), (7, 1.0)]

    def test_k_must_be_positive(self):
        with pytest.raises(ValidationError):
            nn_two_step(TermVector({"a": 1}), [], 0)

    def test_fewer_candidates_than_k(self):
        entries = [(1, TermVector({"a": 1}))]
        assert len(nn_two_step(TermVector({"a": 1}), entries, 10)) == 1

    VOCAB = [f"t{i}" for i in range(12)]

    @settings(max_examples=200, deadline=None)
    @given(data=st.data())
    def test_equivalence_property(self, data):
        rng_entries = data.draw(
            st.lists(
                st.dictionaries(
                    st.sampled_from(self.VOCAB), st.integers(1, 5), min_size=0, max_size=6
                ),
                max_size=25,
            )
        )
        entries = [(i, TermVector(weights)) for i, weights in enumerate(rng_entries)]
        query = TermVector(
            data.draw(
                st.dictionaries(st.sampled_from(self.VOCAB), st.integers(1, 5), max_size=6)
            )
        )
        k = data.draw(st.integers(1, 8))
        assert nn_two_step(query, entries, k) == brute_force_top_k(query, entries, k)

    def test_ranking_invariant_under_uniform_scaling(self):
        rng = random.Random(7)
        entries = [
            (i, TermVector({f"t{rng.randrange(6)}": rng.randint(1, 9) for _ in range(4)}))
            for i in range(20)
        ]
        query = TermVector({"t1": 2, "t3": 1})
        base = [eid for eid, _ in nn_two_step(query, entries, 20)]
        scaled = [(eid, vec.scaled(37.5)) for eid, vec in entries]
        assert [eid for eid, _ in nn_two_step(query, scaled, 20)] == base


def island_candidates():
    return {
        "java": [
            DisambiguatedTerm("java", "java.lang", ("program", "languag", "jvm")),
            DisambiguatedTerm("java", "java.isle", ("island", "indonesia")),
        ]
    }


class TestRecommendSenses:
    def test_cold_start_keeps_lexicon_order(self):
        result = recommend_senses(
            ["java"], island_candidates(), PersonalProfile(user_id="u"), None
        )
        ranked = result["java"]
        assert [c.payload.sense_id for c in ranked] == ["java.lang", "java.isle"]
        assert all(c.source == "lexicon-order" for c in ranked)
        assert all(c.score == 0.0 for c in ranked)

    def test_profile_match_outranks_lexicon_order(self):
        profile = PersonalProfile(user_id="u")
        profile.entries.append(
            make_entry("e1", user_id="u", keywords=("java",),
                       selected_meta_keywords=[MetaKeyword(("island", "travel"))])
        )
        result = recommend_senses(["java"], island_candidates(), profile, None)
        ranked = result["java"]
        assert ranked[0].payload.sense_id == "java.isle"
        assert ranked[0].source == "personal"
        assert ranked[0].score > ranked[1].score
        # hand check: sense {island, indonesia} vs entry {java, island, travel}
        expected = 1 / (math.sqrt(2) * math.sqrt(3))
        assert ranked[0].score == pytest.approx(expected, abs=1e-12)

    def test_sckb_presence_raises_score(self):
        profile = PersonalProfile(user_id="u")
        sckb = SharedKnowledgeBase()
        merge_into_sckb(
            sckb,
            make_entry("e9", user_id="x", keywords=("java", "island", "indonesia")),
        )
        without = recommend_senses(["java"], island_candidates(), profile, None)
        with_sckb = recommend_senses(["java"], island_candidates(), profile, sckb)
        sense_score = lambda res: {
            c.payload.sense_id: c.score for c in res["java"]
        }["java.isle"]
        assert sense_score(with_sckb) > sense_score(without)
        top = with_sckb["java"][0]
        assert top.payload.sense_id == "java.isle"
        assert top.source == "shared"

    def test_shared_weight_scales_shared_contribution(self):
        sckb = SharedKnowledgeBase()
        merge_into_sckb(sckb, make_entry("e9", user_id="x", keywords=("java", "island")))
        profile = PersonalProfile(user_id="u")
        full = recommend_senses(["java"], island_candidates(), profile, sckb, shared_weight=1.0)
        half = recommend_senses(["java"], island_candidates(), profile, sckb, shared_weight=0.5)
        score = lambda res: {c.payload.sense_id: c.score for c in res["java"]}["java.isle"]
        assert score(half) == pytest.approx(score(full) * 0.5, abs=1e-12)

    def test_scores_sorted_descending_and_k_respected(self):
        profile = PersonalProfile(user_id="u")
        profile.entries.append(make_entry("e1", user_id="u", keywords=("island",)))
        candidates = {
            "java": [
                DisambiguatedTerm("java", f"s{i}", tuple(f"w{i}{j}" for j in range(3)))
                for i in range(4)
            ]
        }
        result = recommend_senses(["java"], candidates, profile, None, k=2)
        assert len(result["java"]) == 2
        scores = [c.score for c in result["java"]]
        assert scores == sorted(scores, reverse=True)

    def test_payload_score_filled(self):
        profile = PersonalProfile(user_id="u")
        profile.entries.append(
            make_entry("e1", user_id="u", keywords=("island",))
        )
        result = recommend_senses(["java"], island_candidates(), profile, None)
        top = result["java"][0]
        assert top.payload.score == top.score


class TestRecommendMetaKeywords:
    def test_empty_stores(self):
        assert recommend_meta_keywords(TermVector({"a": 1}), PersonalProfile(user_id="u")) == []

    def test_limit_five(self):
        profile = PersonalProfile(user_id="u")
        metas = [MetaKeyword((f"w{i}", "shared")) for i in range(7)]
        profile.entries.append(
            make_entry("e1", user_id="u", keywords=("x",), selected_meta_keywords=metas)
        )
        got = recommend_meta_keywords(TermVector({"shared": 1}), profile)
        assert len(got) == 5

    def test_duplicate_word_lists_from_two_stores_fold(self):
        profile = PersonalProfile(user_id="u")
        profile.entries.append(
            make_entry(
                "e1", user_id="u", keywords=("x",),
                selected_meta_keywords=[MetaKeyword(("island", "travel"))],
            )
        )
        sckb = SharedKnowledgeBase()
        merge_into_sckb(
            sckb,
            make_entry(
                "e2", user_id="v", keywords=("y",),
                extracted_meta_keywords=[MetaKeyword(("island", "travel"))],
            ),
        )
        got = recommend_meta_keywords(TermVector({"island": 1}), profile, sckb)
        assert len(got) == 1
        assert got[0].source == "personal"

    def test_zero_score_dropped(self):
        profile = PersonalProfile(user_id="u")
        profile.entries.append(
            make_entry(
                "e1", user_id="u", keywords=("x",),
                selected_meta_keywords=[MetaKeyword(("unrelated",))],
            )
        )
        assert recommend_meta_keywords(TermVector({"island": 1}), profile) == []


def ontology_fixture():
    return Ontology(
        [
            Concept("beverages", "Beverages", ("coffee", "espresso")),
            Concept("coffee-brewing", "Coffee brewing", ("coffee", "brew"), parent_id="beverages"),
            Concept("astronomy", "Astronomy", ("planet", "orbit")),
        ]
    )


class TestOntology:
    def test_fixture_loads(self, tmp_path):
        path = tmp_path / "onto.tsv"
        path.write_text(
            "beverages\tBeverages\tcoffee,espresso\n"
            "coffee-brewing\tCoffee brewing\tcoffee,brew\tbeverages\n"
            "astronomy\tAstronomy\tplanet,orbit\n"
        )
        onto = load_ontology(path)
        assert len(onto) == 3
        assert onto.get("coffee-brewing").parent_id == "beverages"

    def test_self_parent_rejected(self, tmp_path):
        path = tmp_path / "onto.tsv"
        path.write_text("a\tA\tx\ta\n")
        with pytest.raises(ValidationError):
            load_ontology(path)

    def test_unknown_parent_rejected(self, tmp_path):
        path = tmp_path / "onto.tsv"
        path.write_text("a\tA\tx\tmissing\n")
        with pytest.raises(ValidationError):
            load_ontology(path)

    def test_cycle_rejected(self):
        with pytest.raises(ValidationError):
            Ontology(
                [
                    Concept("a", "A", ("x",), parent_id="b"),
                    Concept("b", "B", ("y",), parent_id="a"),
                ]
            )

    def test_empty_terms_rejected(self, tmp_path):
        path = tmp_path / "onto.tsv"
        path.write_text("a\tA\t\n")
        with pytest.raises(ParseError):
            load_ontology(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "onto.tsv"
        path.write_text("a\tA\tx\na\tA2\ty\n")
        with pytest.raises(ValidationError):
            load_ontology(path)


class TestRecommendConcepts:
    def test_hand_cosine(self):
        got = recommend_concepts(TermVector({"coffee": 1}), ontology_fixture(), k=5)
        scores = {c.payload.concept_id: c.score for c in got}
        assert scores["beverages"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_disjoint_context_empty(self):
        assert recommend_concepts(TermVector({"zzz": 1}), ontology_fixture(), k=5) == []

    def test_tie_broken_by_concept_id(self):
        got = recommend_concepts(TermVector({"coffee": 1}), ontology_fixture(), k=5)
        assert [c.payload.concept_id for c in got] == ["beverages", "coffee-brewing"]

    def test_k_limits_output(self):
        got = recommend_concepts(TermVector({"coffee": 1}), ontology_fixture(), k=1)
        assert len(got) == 1
