import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medtext import corpus
from medtext.corpus import (
    AnswerCandidate,
    ConceptAnnotation,
    CorpusError,
    LabeledSentencePair,
    PredictionRecord,
    Provenance,
    TaskKind,
)

import synth

DATA = Path(__file__).parent / "data"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def jsonl(path, *objs):
    return write(path, "".join(json.dumps(o) + "\n" for o in objs))


class TestTaskKind:
    def test_label_sets(self):
        assert set(TaskKind.NLI.labels) == {"entailment", "neutral", "contradiction"}
        assert set(TaskKind.RQE.labels) == {"true", "false"}

    @pytest.mark.parametrize("raw,expected", [("True", "true"), (False, "false"), (" FALSE ", "false")])
    def test_rqe_label_normalization(self, raw, expected):
        assert TaskKind.RQE.normalize_label(raw) == expected

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown label"):
            TaskKind.NLI.normalize_label("true")


class TestLoadPairs:
    def test_empty_file(self, tmp_path):
        assert corpus.load_pairs(write(tmp_path / "e.jsonl", ""), "nli") == ()
        assert corpus.load_pairs(write(tmp_path / "e.tsv", ""), "nli") == ()

    def test_nli_table_counts(self, tmp_path):
        path = tmp_path / "train.tsv"
        synth.write_nli_tsv(path, per_class=3744)
        pairs = corpus.load_pairs(path, TaskKind.NLI, "tsv")
        assert len(pairs) == 11232
        assert corpus.label_counts(pairs) == {"entailment": 3744, "contradiction": 3744, "neutral": 3744}

    def test_rqe_table_counts(self, tmp_path):
        path = tmp_path / "rqe.tsv"
        synth.write_rqe_tsv(path, 4655, 3933)
        pairs = corpus.load_pairs(path, "rqe")
        assert len(pairs) == 8588
        assert corpus.label_counts(pairs) == {"true": 4655, "false": 3933}
        assert all(p.group_id is None for p in pairs)

    def test_order_and_optional_fields(self, tmp_path):
        path = jsonl(tmp_path / "p.jsonl",
                     {"id": "b", "text_a": "x", "text_b": "y"},
                     {"id": "a", "text_a": "x", "text_b": "y", "label": "neutral", "group_id": "g",
                      "provenance": "paraphrase"})
        pairs = corpus.load_pairs(path, "nli")
        assert [p.id for p in pairs] == ["b", "a"]
        assert pairs[0].label is None and pairs[0].provenance is Provenance.ORIGINAL
        assert pairs[1].provenance is Provenance.PARAPHRASE and pairs[1].group_id == "g"

    def test_error_carries_line_and_record(self, tmp_path):
        path = jsonl(tmp_path / "p.jsonl",
                     {"id": "ok", "text_a": "x", "text_b": "y"},
                     {"id": "bad", "text_a": "x", "text_b": "y", "label": "maybe"})
        with pytest.raises(CorpusError) as exc:
            corpus.load_pairs(path, "nli")
        assert exc.value.line == 2 and exc.value.record_id == "bad"
        assert "p.jsonl:2" in str(exc.value)

    @pytest.mark.parametrize("task,label", [("nli", "true"), ("rqe", "neutral")])
    def test_label_outside_task_rejected(self, tmp_path, task, label):
        path = jsonl(tmp_path / "p.jsonl", {"id": "x", "text_a": "a", "text_b": "b", "label": label})
        with pytest.raises(CorpusError, match="unknown label"):
            corpus.load_pairs(path, task)

    def test_tsv_header_optional(self, tmp_path):
        with_header = tmp_path / "h.tsv"
        without = tmp_path / "n.tsv"
        synth.write_nli_tsv(with_header, 2, header=True)
        synth.write_nli_tsv(without, 2, header=False)
        assert corpus.load_pairs(with_header, "nli") == corpus.load_pairs(without, "nli")


texts = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40).filter(
    lambda s: s.strip())
tsv_texts = st.text(st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")),
                    min_size=1, max_size=40).filter(lambda s: s.strip())


@st.composite
def pair_sets(draw, text=texts):
    n = draw(st.integers(0, 8))
    out = []
    for i in range(n):
        out.append(LabeledSentencePair(
            id=f"id{i}",
            text_a=draw(text),
            text_b=draw(text),
            label=draw(st.none() | st.sampled_from(TaskKind.NLI.labels)),
            group_id=draw(st.none() | st.sampled_from(["g1", "g2"])),
            provenance=draw(st.sampled_from(list(Provenance))),
        ))
    return out


class TestRoundTrip:
    @settings(max_examples=60, deadline=None)
    @given(pairs=pair_sets())
    def test_pairs_jsonl(self, tmp_path_factory, pairs):
        path = tmp_path_factory.mktemp("rt") / "p.jsonl"
        corpus.save_pairs(path, pairs)
        assert list(corpus.load_pairs(path, "nli")) == pairs

    @settings(max_examples=60, deadline=None)
    @given(pairs=pair_sets(tsv_texts))
    def test_pairs_tsv_keeps_text_and_label(self, tmp_path_factory, pairs):
        # TSV has no provenance column
        path = tmp_path_factory.mktemp("rt") / "p.tsv"
        corpus.save_pairs(path, pairs)
        loaded = corpus.load_pairs(path, "nli")
        assert [(p.id, p.group_id, p.text_a, p.text_b, p.label) for p in loaded] == \
               [(p.id, p.group_id, p.text_a, p.text_b, p.label) for p in pairs]

    def test_answers_and_annotations(self, tmp_path):
        answers = [AnswerCandidate("q1", "a1", "Uveitis is inflammation.", "NEI", True, 1),
                   AnswerCandidate("q1", "a2", "Ünïcode text", "GARD")]
        corpus.save_answers(tmp_path / "a.jsonl", answers)
        assert list(corpus.load_answers(tmp_path / "a.jsonl")) == answers
        anns = [ConceptAnnotation("r1", "b", 0, 4, "café", "coffee", "Food")]
        corpus.save_annotations(tmp_path / "n.jsonl", anns)
        assert corpus.load_annotations(tmp_path / "n.jsonl") == anns

    def test_gazetteer(self, tmp_path):
        gz = corpus.Gazetteer((("CXR", "Chest X-Ray"), ("CXR", "Chest Radiograph")))
        corpus.save_gazetteer(tmp_path / "g.tsv", gz)
        assert corpus.load_gazetteer(tmp_path / "g.tsv") == gz


class TestPredictions:
    def test_vertex_accepted(self, tmp_path):
        path = jsonl(tmp_path / "p.jsonl", {"pair_id": "p", "model_name": "m",
                                            "probs": {"entailment": 1.0, "neutral": 0.0, "contradiction": 0.0}})
        (rec,) = corpus.load_predictions(path, "nli")
        assert rec.probs == {"entailment": 1.0, "neutral": 0.0, "contradiction": 0.0}

    def test_sum_violation(self, tmp_path):
        path = jsonl(tmp_path / "p.jsonl", {"pair_id": "p", "model_name": "m",
                                            "probs": {"entailment": 0.6, "neutral": 0.6, "contradiction": 0.0}})
        with pytest.raises(CorpusError, match="simplex violation"):
            corpus.load_predictions(path, "nli")

    def test_renormalizes_within_tolerance(self, tmp_path):
        path = jsonl(tmp_path / "p.jsonl", {"pair_id": "p", "model_name": "m",
                                            "probs": {"true": 0.7000004, "false": 0.3}})
        (rec,) = corpus.load_predictions(path, "rqe")
        assert abs(sum(rec.probs.values()) - 1.0) < 1e-12

    def test_validation_fixture_groups(self, tmp_path):
        pairs_path, preds_path = tmp_path / "val.tsv", tmp_path / "preds.jsonl"
        synth.write_nli_tsv(pairs_path, 465)
        synth.write_nli_preds(preds_path, 465)
        preds = corpus.load_predictions(preds_path, "nli")
        pairs = {p.id: p for p in corpus.load_pairs(pairs_path, "nli")}
        assert len(preds) == 1395
        assert len({pairs[r.pair_id].group_id for r in preds}) == 465

    def test_same_pair_different_models_ok(self, tmp_path):
        probs = {"true": 0.5, "false": 0.5}
        path = jsonl(tmp_path / "p.jsonl", {"pair_id": "p", "model_name": "m1", "probs": probs},
                     {"pair_id": "p", "model_name": "m2", "probs": probs})
        assert len(corpus.load_predictions(path, "rqe")) == 2

    def test_argmax_tie_uses_label_order(self):
        rec = PredictionRecord("p", "m", {"entailment": 0.4, "neutral": 0.4, "contradiction": 0.2})
        assert rec.argmax(TaskKind.NLI) == "entailment"


class TestGazetteer:
    def test_single_entry(self, tmp_path):
        gz = corpus.load_gazetteer(write(tmp_path / "g.tsv", "MICU\tMedical Intensive Care Unit\n"))
        assert gz.entries == (("MICU", "Medical Intensive Care Unit"),)

    def test_multimap_order(self, tmp_path):
        gz = corpus.load_gazetteer(write(tmp_path / "g.tsv", "PE\tpulmonary embolism\nPE\tphysical exam\n\n"))
        assert len(gz) == 2
        assert gz.expansions("pe") == ["pulmonary embolism", "physical exam"]
        assert gz.lookup("PE") == "pulmonary embolism"

    def test_empty(self, tmp_path):
        assert len(corpus.load_gazetteer(write(tmp_path / "g.tsv", ""))) == 0


class TestAnnotations:
    @pytest.fixture
    def rqe_pairs(self):
        return [LabeledSentencePair("r1", "What causes primary ciliary dyskinesia?",
                                    "Is primary ciliary dyskinesia inherited?", "true")]

    def ann(self, start, end, surface, side="a"):
        return {"pair_id": "r1", "side": side, "span_start": start, "span_end": end, "surface": surface,
                "canonical_name": "kartaganer syndrome", "concept_type": "Disease or Syndrome"}

    def test_kartaganer_annotation_accepted(self, tmp_path, rqe_pairs):
        path = jsonl(tmp_path / "a.jsonl", self.ann(12, 38, "primary ciliary dyskinesia"))
        (ann,) = corpus.load_annotations(path, rqe_pairs)
        assert ann.canonical_name == "kartaganer syndrome"

    def test_out_of_bounds(self, tmp_path, rqe_pairs):
        path = jsonl(tmp_path / "a.jsonl", self.ann(12, 80, "x" * 68))
        with pytest.raises(CorpusError, match="span out of bounds"):
            corpus.load_annotations(path, rqe_pairs)

    def test_touching_spans_accepted(self, tmp_path, rqe_pairs):
        path = jsonl(tmp_path / "a.jsonl", self.ann(12, 19, "primary"), self.ann(19, 38, " ciliary dyskinesia"))
        assert len(corpus.load_annotations(path, rqe_pairs)) == 2

    def test_overlap_rejected_without_pairs(self, tmp_path):
        path = jsonl(tmp_path / "a.jsonl", self.ann(12, 38, "primary ciliary dyskinesia"),
                     self.ann(20, 27, "ciliary"))
        with pytest.raises(CorpusError, match="overlapping spans"):
            corpus.load_annotations(path)

    def test_unicode_offsets_are_code_points(self, tmp_path):
        pairs = [LabeledSentencePair("r1", "Ödem der Füße?", "x")]
        path = jsonl(tmp_path / "a.jsonl", {**self.ann(9, 13, "Füße"), "canonical_name": "foot"})
        (ann,) = corpus.load_annotations(path, pairs)
        assert pairs[0].text_a[ann.span_start:ann.span_end] == "Füße"


class TestDatasetStats:
    def test_empty(self):
        assert corpus.dataset_stats([]) == corpus.RankingDatasetStats(0, 0.0, 0.0)

    def test_mean_count(self):
        answers = [AnswerCandidate("q1", f"a{i}", "one two", "s") for i in range(3)] + \
                  [AnswerCandidate("q2", f"a{i}", "one two three.", "s") for i in range(5)]
        st_ = corpus.dataset_stats(answers)
        assert st_.question_count == 2
        assert st_.avg_answer_count == 4.0
        assert st_.avg_answer_length == pytest.approx((3 * 2 + 5 * 4) / 8)

    def test_validation_row(self, tmp_path):
        path = tmp_path / "val.jsonl"
        synth.write_answers(path, questions=25, answers=225, total_tokens=94590)
        st_ = corpus.dataset_stats(corpus.load_answers(path))
        assert st_.question_count == 25
        assert st_.avg_answer_count == 9.0
        assert st_.avg_answer_length == pytest.approx(420.4, abs=1e-9)


class TestQQP:
    def test_duplicate_flag_maps_to_true(self, tmp_path):
        path = write(tmp_path / "qqp.tsv",
                     "id\tqid1\tqid2\tquestion1\tquestion2\tis_duplicate\n"
                     "0\t1\t2\tHow do I learn Python?\tWhat is the best way to learn Python?\t1\n"
                     "1\t3\t4\tWhat is uveitis?\tHow tall is Everest?\t0\n"
                     "2\t5\t6\t\tEmpty question\t0\n")
        pairs = corpus.load_qqp(path)
        assert [(p.id, p.label, p.provenance) for p in pairs] == [
            ("qqp-0", "true", Provenance.QQP), ("qqp-1", "false", Provenance.QQP)]
