import pytest

from ctxsearch.behavior import PageMetadata
from ctxsearch.errors import SessionStateError, ValidationError
from ctxsearch.lexicon import Lexicon, Sense
from ctxsearch.profile_store import PersonalProfile, record_entry, save_store
from ctxsearch.recommender import Concept, Ontology
from ctxsearch.search_core import Document, index_corpus
from ctxsearch.session import SearchService, ServiceConfig, SteppingClock
from tests.test_profile_store import make_entry


def corpus_docs():
    spec = [
        ("http://travel/java-island", "Java Island Travel Guide",
         ["java", "island", "indonesia", "volcano", "travel", "beach"],
         ("java island travel", "volcano hiking")),
        ("http://dev/java-intro", "Java Programming Intro",
         ["java", "java", "java", "program", "languag", "code"], ("java programming",)),
        ("http://dev/java-threads", "Java Threads",
         ["java", "java", "program", "thread", "code"], ()),
        ("http://travel/bali", "Bali Beaches", ["bali", "island", "travel", "beach"], ()),
        ("http://snakes/python-care", "Ball Python Care",
         ["python", "snake", "habitat", "care"], ("python habitat",)),
        ("http://dev/python-tutorial", "Python Tutorial",
         ["python", "program", "languag", "tutori"], ()),
    ]
    return [
        Document(
            doc_id=i,
            url=url,
            title=title,
            body_terms=terms,
            metadata=PageMetadata(url=url, title=title, meta_keywords_raw=raw),
        )
        for i, (url, title, terms, raw) in enumerate(spec, start=1)
    ]


def small_lexicon():
    return Lexicon(
        {
            "java": [
                Sense("java", "java.lang", "a general purpose programming language"),
                Sense("java", "java.isle", "a large island of indonesia"),
            ],
            "python": [
                Sense("python", "python.lang", "an interpreted programming language"),
                Sense("python", "python.snake", "a large constricting snake"),
            ],
        }
    )


def small_ontology():
    return Ontology(
        [
            Concept("island-travel", "Island travel", ("island", "travel", "beach", "volcano")),
            Concept("software-dev", "Software development", ("program", "code", "languag")),
            Concept("reptile-care", "Reptile care", ("snake", "habitat", "care")),
        ]
    )


@pytest.fixture()
def service(tmp_path, stopwords):
    svc = SearchService(
        lexicon=small_lexicon(),
        stopwords=stopwords,
        ontology=small_ontology(),
        index=index_corpus(corpus_docs(), stopwords),
        store_dir=tmp_path / "stores",
        config=ServiceConfig(page_size=5),
        clock=SteppingClock(start=1_700_000_000_000, step=1000),
    )
    profile = PersonalProfile(user_id="erin", path=svc.store_dir / "profiles" / "erin.jsonl")
    record_entry(
        profile,
        make_entry(
            "seed1", user_id="erin", timestamp=1_000, keywords=("java",),
            selected_terms=[],
            extracted_meta_keywords=[],
        ),
    )
    # a profile entry that clearly points at the island reading of "java"
    from ctxsearch.behavior import MetaKeyword
    from ctxsearch.lexicon import DisambiguatedTerm

    record_entry(
        profile,
        make_entry(
            "seed2", user_id="erin", timestamp=2_000, keywords=("java",),
            selected_terms=[DisambiguatedTerm("java", "java.isle", ("larg", "indonesia"))],
            extracted_meta_keywords=[MetaKeyword(("island", "travel"))],
        ),
    )
    return svc


class TestCreateSession:
    def test_phase_flags(self, service):
        os1 = service.create_session("u1", "OS1")
        os2 = service.create_session("u1", "OS2")
        os3 = service.create_session("u1", "OS3")
        assert not os1.sckb_read_enabled and os1.contextual
        assert os2.sckb_read_enabled and os2.contextual
        assert not os3.contextual

    def test_unknown_phase_rejected(self, service):
        with pytest.raises(ValidationError):
            service.create_session("u1", "OS4")

    def test_bad_user_id_rejected(self, service):
        with pytest.raises(ValidationError):
            service.create_session("../evil", "OS1")


class TestSubmitQuery:
    def test_first_query_counts(self, service):
        s = service.create_session("erin", "OS1")
        payload = service.submit_query(s.session_id, "java")
        assert s.metrics.queries == 1
        assert payload["stage"] == "senses"
        assert s.state == "SensesOffered"

    def test_stopword_only_query_errors_but_counts(self, service):
        s = service.create_session("erin", "OS1")
        with pytest.raises(ValidationError):
            service.submit_query(s.session_id, "the of a")
        assert s.metrics.queries == 1

    def test_os3_returns_results_immediately(self, service):
        s = service.create_session("u9", "OS3")
        payload = service.submit_query(s.session_id, "java")
        assert payload["stage"] == "results"
        assert s.state == "ResultsShown"
        assert s.metrics.hits == len(payload["hits"]) > 0

    def test_profile_match_ranks_island_sense_first(self, service):
        s = service.create_session("erin", "OS1")
        payload = service.submit_query(s.session_id, "java")
        senses = payload["senses"]["java"]
        assert senses[0]["sense_id"] == "java.isle"
        assert senses[0]["source"] == "personal"

    def test_cold_start_lexicon_order(self, service):
        s = service.create_session("newbie", "OS1")
        payload = service.submit_query(s.session_id, "python")
        senses = payload["senses"]["python"]
        assert [x["sense_id"] for x in senses] == ["python.lang", "python.snake"]
        assert all(x["source"] == "lexicon-order" for x in senses)


class TestSelectionFlow:
    def run_to_results(self, service, accept=True):
        s = service.create_session("erin", "OS1")
        payload = service.submit_query(s.session_id, "java")
        chosen = [payload["senses"]["java"][0]["id"]] if accept else []
        payload = service.apply_selection(s.session_id, "senses", chosen)
        assert payload["stage"] == "metas"
        chosen = [payload["meta_keywords"][0]["id"]] if accept and payload["meta_keywords"] else []
        payload = service.apply_selection(s.session_id, "metas", chosen)
        assert payload["stage"] == "concepts"
        chosen = [payload["concepts"][0]["id"]] if accept and payload["concepts"] else []
        payload = service.apply_selection(s.session_id, "concepts", chosen)
        assert payload["stage"] == "results"
        return s, payload

    def test_selections_count_as_clicks(self, service):
        s, payload = self.run_to_results(service)
        assert s.metrics.clicks == 3
        assert payload["query"].startswith("java AND (")

    def test_skip_all_stages_gives_keyword_query(self, service):
        s, payload = self.run_to_results(service, accept=False)
        assert payload["query"] == "java"
        assert s.metrics.clicks == 0
        urls = [h["url"] for h in payload["hits"]]
        assert "http://dev/java-intro" in urls

    def test_expanded_query_filters_wrong_sense(self, service):
        s, payload = self.run_to_results(service)
        urls = [h["url"] for h in payload["hits"]]
        assert urls == ["http://travel/java-island"]

    def test_wrong_stage_rejected(self, service):
        s = service.create_session("erin", "OS1")
        service.submit_query(s.session_id, "java")
        with pytest.raises(SessionStateError):
            service.apply_selection(s.session_id, "metas", [])

    def test_unknown_candidate_rejected(self, service):
        s = service.create_session("erin", "OS1")
        service.submit_query(s.session_id, "java")
        with pytest.raises(ValidationError):
            service.apply_selection(s.session_id, "senses", ["java::nope"])

    def test_selection_before_query_rejected(self, service):
        s = service.create_session("erin", "OS1")
        with pytest.raises(SessionStateError):
            service.apply_selection(s.session_id, "senses", [])

    def test_new_query_reenters_senses(self, service):
        s, _ = self.run_to_results(service)
        payload = service.submit_query(s.session_id, "python snake")
        assert payload["stage"] == "senses"
        assert s.state == "SensesOffered"
        assert s.metrics.queries == 2
        # superseded entry was persisted to the profile
        assert service.profile("erin").entries[-1].raw_query == "java"


class TestClicks:
    def test_repeat_click_distinct_urls(self, service):
        s = service.create_session("u9", "OS3")
        payload = service.submit_query(s.session_id, "java")
        url = payload["hits"][0]["url"]
        service.report_click(s.session_id, url)
        metrics = service.report_click(s.session_id, url)
        assert metrics.clicks == 2
        assert metrics.urls == 1

    def test_unpresented_url_rejected(self, service):
        s = service.create_session("u9", "OS3")
        service.submit_query(s.session_id, "java")
        with pytest.raises(ValidationError):
            service.report_click(s.session_id, "http://not-shown/")

    def test_os3_click_writes_no_profile(self, service):
        s = service.create_session("u9", "OS3")
        payload = service.submit_query(s.session_id, "java")
        service.report_click(s.session_id, payload["hits"][0]["url"])
        service.complete_task(s.session_id, found=True)
        assert not (service.store_dir / "profiles" / "u9.jsonl").exists()
        assert service.sckb().entries == []

    def test_contextual_click_extracts_metadata(self, service):
        s = service.create_session("erin", "OS1")
        payload = service.submit_query(s.session_id, "java")
        payload = service.apply_selection(s.session_id, "senses",
                                          [payload["senses"]["java"][0]["id"]])
        payload = service.apply_selection(s.session_id, "metas", [])
        payload = service.apply_selection(s.session_id, "concepts", [])
        url = payload["hits"][0]["url"]
        service.report_click(s.session_id, url)
        assert s.entry.clicked_urls == [url]
        assert s.entry.extracted_meta_keywords  # island page has keyword metadata


class TestComplete:
    def test_completion_freezes_everything(self, service):
        s = service.create_session("erin", "OS1")
        service.submit_query(s.session_id, "java")
        metrics = service.complete_task(s.session_id, found=False)
        assert metrics.elapsed_ms is not None and metrics.elapsed_ms > 0
        with pytest.raises(SessionStateError):
            service.complete_task(s.session_id, found=True)
        with pytest.raises(SessionStateError):
            service.submit_query(s.session_id, "java again")
        assert s.metrics.queries == 1

    def test_os1_completion_merges_into_sckb(self, service):
        # sharing is all-or-nothing and on by default; OS1 writes, never reads
        s = service.create_session("erin", "OS1")
        service.submit_query(s.session_id, "java")
        service.complete_task(s.session_id, found=True)
        assert len(service.sckb().entries) == 1
        assert service.sckb().entries[0].user_id == ""

    def test_os2_completion_grows_sckb_by_at_most_one(self, service):
        s = service.create_session("erin", "OS2")
        service.submit_query(s.session_id, "java")
        before = len(service.sckb().entries)
        service.complete_task(s.session_id, found=True)
        assert len(service.sckb().entries) - before <= 1

    def test_sharing_disabled_blocks_merge(self, tmp_path, stopwords):
        svc = SearchService(
            lexicon=small_lexicon(),
            stopwords=stopwords,
            ontology=small_ontology(),
            index=index_corpus(corpus_docs(), stopwords),
            store_dir=tmp_path / "stores",
            config=ServiceConfig(sharing_enabled=False),
            clock=SteppingClock(),
        )
        s = svc.create_session("u1", "OS1")
        svc.submit_query(s.session_id, "java")
        svc.complete_task(s.session_id, found=True)
        assert svc.sckb().entries == []
        assert len(svc.profile("u1").entries) == 1


class TestPhaseIsolation:
    def test_os1_never_reads_sckb(self, service, monkeypatch):
        import ctxsearch.session as session_mod

        seen = []
        real = session_mod.recommend_senses

        def spy(keywords, candidates, profile, sckb, **kwargs):
            seen.append(sckb)
            return real(keywords, candidates, profile, sckb, **kwargs)

        monkeypatch.setattr(session_mod, "recommend_senses", spy)
        s = service.create_session("erin", "OS1")
        service.submit_query(s.session_id, "java")
        assert seen == [None]

    def test_os2_reads_sckb(self, service, monkeypatch):
        import ctxsearch.session as session_mod

        seen = []
        real = session_mod.recommend_senses

        def spy(keywords, candidates, profile, sckb, **kwargs):
            seen.append(sckb)
            return real(keywords, candidates, profile, sckb, **kwargs)

        monkeypatch.setattr(session_mod, "recommend_senses", spy)
        s = service.create_session("erin", "OS2")
        service.submit_query(s.session_id, "java")
        assert seen[0] is not None

    def test_sckb_flag_off_disables_os2_reads(self, tmp_path, stopwords, monkeypatch):
        svc = SearchService(
            lexicon=small_lexicon(),
            stopwords=stopwords,
            ontology=small_ontology(),
            index=index_corpus(corpus_docs(), stopwords),
            store_dir=tmp_path / "stores",
            config=ServiceConfig(sckb_enabled=False),
            clock=SteppingClock(),
        )
        import ctxsearch.session as session_mod

        seen = []
        real = session_mod.recommend_senses

        def spy(keywords, candidates, profile, sckb, **kwargs):
            seen.append(sckb)
            return real(keywords, candidates, profile, sckb, **kwargs)

        monkeypatch.setattr(session_mod, "recommend_senses", spy)
        s = svc.create_session("u1", "OS2")
        svc.submit_query(s.session_id, "java")
        assert seen == [None]


class TestResultsPagination:
    def test_pages_add_hits(self, service):
        s = service.create_session("u9", "OS3")
        service.submit_query(s.session_id, "java")
        first = s.metrics.hits
        payload = service.get_results(s.session_id, page=1)
        assert s.metrics.hits == first + len(payload["hits"])

    def test_page_past_end_is_empty(self, service):
        s = service.create_session("u9", "OS3")
        service.submit_query(s.session_id, "java")
        payload = service.get_results(s.session_id, page=99)
        assert payload["hits"] == []

    def test_results_before_query_rejected(self, service):
        s = service.create_session("u9", "OS3")
        with pytest.raises(SessionStateError):
            service.get_results(s.session_id, page=1)


class TestDeterminism:
    def script(self, svc):
        s = svc.create_session("erin", "OS1")
        payload = svc.submit_query(s.session_id, "java")
        payload = svc.apply_selection(s.session_id, "senses",
                                      [payload["senses"]["java"][0]["id"]])
        payload = svc.apply_selection(s.session_id, "metas", [])
        payload = svc.apply_selection(s.session_id, "concepts", [])
        url = payload["hits"][0]["url"]
        svc.report_click(s.session_id, url)
        svc.report_click(s.session_id, url)
        svc.complete_task(s.session_id, found=True)
        return s.metrics.to_json()

    def build(self, tmp_path, stopwords, name):
        svc = SearchService(
            lexicon=small_lexicon(),
            stopwords=stopwords,
            ontology=small_ontology(),
            index=index_corpus(corpus_docs(), stopwords),
            store_dir=tmp_path / name,
            config=ServiceConfig(page_size=5),
            clock=SteppingClock(start=1_700_000_000_000, step=1000),
        )
        profile = PersonalProfile(user_id="erin", path=svc.store_dir / "profiles" / "erin.jsonl")
        from ctxsearch.behavior import MetaKeyword
        from ctxsearch.lexicon import DisambiguatedTerm

        record_entry(
            profile,
            make_entry(
                "seed2", user_id="erin", timestamp=2_000, keywords=("java",),
                selected_terms=[DisambiguatedTerm("java", "java.isle", ("larg", "indonesia"))],
                extracted_meta_keywords=[MetaKeyword(("island", "travel"))],
            ),
        )
        return svc

    def test_replay_yields_identical_metrics(self, tmp_path, stopwords):
        a = self.script(self.build(tmp_path, stopwords, "a"))
        b = self.script(self.build(tmp_path, stopwords, "b"))
        assert a == b
        assert a["urls"] <= a["clicks"]

    def test_injected_clock_elapsed_exact(self, tmp_path, stopwords):
        svc = self.build(tmp_path, stopwords, "c")
        s = svc.create_session("erin", "OS1")  # clock call 1: started_at
        svc.submit_query(s.session_id, "java")  # clock call 2: entry timestamp
        metrics = svc.complete_task(s.session_id, found=False)  # clock call 3
        assert metrics.elapsed_ms == 2000


class TestQueryPreview:
    def test_preview_tracks_selections(self, service):
        s = service.create_session("erin", "OS1")
        payload = service.submit_query(s.session_id, "java")
        assert payload["query_preview"] == "java"
        payload = service.apply_selection(
            s.session_id, "senses", [payload["senses"]["java"][0]["id"]]
        )
        assert payload["query_preview"].startswith("java AND (")
        assert "OR" in payload["query_preview"] or payload["query_preview"].count("(") == 1
