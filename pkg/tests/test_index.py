import io
import json

import pytest

from searchkin import (
    Document,
    DuplicateDocumentError,
    index_documents,
    load_corpus,
    result_doc_set,
    search,
    tokenize,
)
from searchkin.index import dump_corpus


def make_index(rows):
    return index_documents(Document(doc_id=d, class_label=c, body=b) for d, c, b in rows)


@pytest.fixture()
def small_index():
    return make_index(
        [
            ("d1", "Tech", "java developer wanted for machine learning team"),
            ("d2", "Tech", "senior java engineer java java"),
            ("d3", "Health", "registered nurse for night shift"),
        ]
    )


class TestTokenize:
    def test_normalizes_then_splits(self):
        assert tokenize("  Machine   Learning ") == ["machine", "learning"]

    def test_empty(self):
        assert tokenize("   ") == []


class TestIndexDocuments:
    def test_shared_token_postings(self, small_index):
        assert small_index.doc_frequency("java") == 2
        assert small_index.doc_count == 3

    def test_empty_doc_list_is_valid(self):
        index = index_documents([])
        assert index.doc_count == 0
        assert search(index, "anything").hits == ()

    def test_duplicate_id_rejected(self):
        docs = [Document("d1", "body one"), Document("d1", "body two")]
        with pytest.raises(DuplicateDocumentError, match="d1"):
            index_documents(docs)

    def test_empty_body_rejected(self):
        with pytest.raises(ValueError, match="empty body"):
            index_documents([Document("d1", "   ")])


class TestSearch:
    def test_phrase_match_is_contiguous(self, small_index):
        result = search(small_index, "machine learning", mode="phrase")
        assert [doc for doc, _ in result.hits] == ["d1"]

    def test_phrase_rejects_non_contiguous(self):
        index = make_index([("d1", None, "machine deep learning")])
        assert search(index, "machine learning", mode="phrase").hits == ()

    def test_all_tokens_mode(self):
        index = make_index([("d1", None, "machine deep learning")])
        result = search(index, "machine learning", mode="all-tokens")
        assert [doc for doc, _ in result.hits] == ["d1"]

    def test_class_filter_soundness(self, small_index):
        result = search(small_index, "java", class_filter="Tech", limit=10)
        assert {doc for doc, _ in result.hits} == {"d1", "d2"}
        assert search(small_index, "java", class_filter="Health").hits == ()

    def test_class_filter_unknown_label_empty(self, small_index):
        assert search(small_index, "java", class_filter="Legal").hits == ()

    def test_limit_truncates_but_counts_all(self):
        rows = [(f"d{i}", None, "common token here") for i in range(5)]
        index = make_index(rows)
        result = search(index, "common", limit=1)
        assert len(result.hits) == 1
        assert result.total_matched == 5

    def test_higher_tf_scores_higher(self, small_index):
        result = search(small_index, "java")
        assert [doc for doc, _ in result.hits] == ["d2", "d1"]
        assert result.hits[0][1] > result.hits[1][1]

    def test_deterministic(self, small_index):
        a = search(small_index, "java developer")
        b = search(small_index, "java developer")
        assert a == b

    def test_ties_break_by_doc_id(self):
        index = make_index([("b", None, "token"), ("a", None, "token")])
        result = search(index, "token")
        assert [doc for doc, _ in result.hits] == ["a", "b"]

    def test_limit_zero_rejected(self, small_index):
        with pytest.raises(ValueError, match="limit"):
            search(small_index, "java", limit=0)

    def test_unknown_mode_rejected(self, small_index):
        with pytest.raises(ValueError, match="mode"):
            search(small_index, "java", mode="fuzzy")

    def test_empty_query_matches_nothing(self, small_index):
        assert search(small_index, "  ").total_matched == 0

    def test_monotone_under_document_addition(self):
        rows = [("d1", None, "alpha beta"), ("d2", None, "alpha gamma")]
        before = search(make_index(rows), "alpha").total_matched
        rows.append(("d3", None, "alpha delta"))
        after = search(make_index(rows), "alpha").total_matched
        assert after >= before


class TestResultDocSet:
    def test_depth_covers_all(self, small_index):
        assert result_doc_set(small_index, "java", depth=100) == {"d1", "d2"}

    def test_depth_truncates(self, small_index):
        assert len(result_doc_set(small_index, "java", depth=1)) == 1

    def test_depth_zero_rejected(self, small_index):
        with pytest.raises(ValueError, match="depth"):
            result_doc_set(small_index, "java", depth=0)

    def test_disjoint_vocabulary_empty(self, small_index):
        assert result_doc_set(small_index, "quantum chromodynamics") == set()


class TestCorpusIO:
    def test_round_trip(self):
        docs = [
            Document("d1", "java developer role", "Tech"),
            Document("d2", "nurse wanted", None),
        ]
        buf = io.StringIO()
        dump_corpus(docs, buf)
        assert load_corpus(io.StringIO(buf.getvalue())) == docs

    def test_missing_fields_rejected(self):
        with pytest.raises(ValueError, match="doc_id"):
            load_corpus(io.StringIO(json.dumps({"body": "x"}) + "\n"))

    def test_invalid_json_rejected(self):
        with pytest.raises(ValueError, match="line 1"):
            load_corpus(io.StringIO("{broken\n"))
