"""One test per acceptance criterion; the summary prints PASS/FAIL per line."""

import json
import random
import shutil
import time
from collections import Counter
from pathlib import Path

import pytest

import synth
from medtext import corpus
from medtext.augment import augment_dataset
from medtext.cli import run
from medtext.constrain import PremiseGroup, apply_prior
from medtext.corpus import ConceptAnnotation, Gazetteer, LabeledSentencePair
from medtext.ensemble import majority_vote
from medtext.evaluation import accuracy, confusion
from medtext.preprocess import expand, gen_candidates, tokenize
from medtext.rank import Bm25Params, CorpusStats, bm25
from oracles import bm25_direct, nli_confusion_labels

DATA = Path(__file__).parent / "data"
DEMO = Path(__file__).resolve().parents[1] / "demo"
NLI = ("entailment", "neutral", "contradiction")


def test_abbreviation_expansion_goldens_under_1s(cxr_pair, micu_pair):
    t0 = time.perf_counter()
    cxr, cxr_traces = expand(cxr_pair, Gazetteer((("CXR", "Chest Radiograph"),)))
    micu, micu_traces = expand(micu_pair, Gazetteer((("MICU", "Medical Intensive Care Unit"),)))
    elapsed = time.perf_counter() - t0
    assert cxr.text_a == "Her Chest X-Ray was clear and it did not appear she had an infection."
    assert [t.strategy for t in cxr_traces] == ["local_context"]
    assert micu.text_a == "On arrival to the Medical Intensive Care Unit , patient is hemodynamically stable ."
    assert [t.strategy for t in micu_traces] == ["gazetteer"]
    assert elapsed < 1.0


def test_candidate_generation_six_acronyms_under_1s():
    t0 = time.perf_counter()
    acr = {c.acronym for c in gen_candidates(tokenize("Chest X-Ray showed infiltrates"), 2, 6)}
    elapsed = time.perf_counter() - t0
    six = {"CXR", "CXRS", "XRS", "CXRSI", "XRSI", "RSI"}
    assert six <= acr
    assert elapsed < 1.0


def test_prior_constraint_10000_random_groups():
    rng = random.Random(2019)
    for _ in range(10_000):
        members = []
        for pid in ("h1", "h2", "h3"):
            raw = [rng.random() for _ in range(3)]
            s = sum(raw) or 1.0
            members.append((pid, dict(zip(NLI, (v / s for v in raw)))))
        out = apply_prior(PremiseGroup("g", tuple(members)))
        assert sorted(out.values()) == sorted(NLI)
        ent = next(pid for pid, lab in out.items() if lab == "entailment")
        assert dict(members)[ent]["entailment"] == max(p["entailment"] for _, p in members)
    greedy = PremiseGroup("g", (
        ("h1", {"entailment": .40, "neutral": .35, "contradiction": .25}),
        ("h2", {"entailment": .45, "neutral": .30, "contradiction": .25}),
        ("h3", {"entailment": .10, "neutral": .20, "contradiction": .70})))
    assert apply_prior(greedy) == {"h2": "entailment", "h3": "contradiction", "h1": "neutral"}


def test_bm25_oracle_1000_corpora_tol_1e9():
    rng = random.Random(42)
    vocab = [f"w{i}" for i in range(20)]
    checked = 0
    for trial in range(2000):
        docs = [[rng.choice(vocab) for _ in range(rng.randint(1, 15))] for _ in range(rng.randint(1, 10))]
        if trial < 1000:
            params = Bm25Params()
        else:
            params = Bm25Params(rng.uniform(0.01, 5.0), rng.uniform(0.0, 1.0))
        stats = CorpusStats.from_documents(docs)
        query = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
        for doc in docs:
            got = bm25(query, doc, params, stats)
            assert abs(got - bm25_direct(query, doc, docs, params.k1, params.b)) <= 1e-9
            checked += 1
        # b = 0: padding a document with non-query terms never changes its score
        doc = docs[0]
        padded = doc + ["pad"] * rng.randint(1, 30)
        flat = Bm25Params(params.k1, 0.0)
        assert bm25(query, doc, flat, stats) == bm25(query, padded, flat, stats)
    assert checked >= 1000


def test_eval_nli_confusion_accuracy_6_decimals():
    gold, pred, labels, rows = nli_confusion_labels()
    cm = confusion(gold, pred, labels)
    assert cm.counts.tolist() == rows
    assert f"{accuracy(cm):.6f}" == f"{1106 / 1395:.6f}" == "0.792832"


def test_augmentation_230_to_460():
    pcd = "primary ciliary dyskinesia"
    pairs = [LabeledSentencePair(f"v{i}", f"My child has {pcd}. Is it inherited ({i})?",
                                 "What is it?", label="true" if i % 3 else "false") for i in range(230)]
    anns = [ConceptAnnotation(p.id, "a", 13, 13 + len(pcd), pcd, "kartaganer syndrome",
                              "Disease or Syndrome") for p in pairs]
    out = augment_dataset(pairs, anns)
    assert len(out) == 460
    before = Counter(p.label for p in pairs)
    assert Counter(p.label for p in out) == Counter({k: 2 * v for k, v in before.items()})
    assert [p.label for p in out[230:]] == [p.label for p in pairs]
    assert "kartaganer syndrome, a Disease or Syndrome" in out[230].text_a
    assert out[230].text_a == "My child has kartaganer syndrome, a Disease or Syndrome. Is it inherited (0)?"


def test_majority_vote_5_models_never_ties():
    rng = random.Random(5)
    n = 10_000
    preds = [(f"m{k}", {f"p{i}": rng.choice(("true", "false")) for i in range(n)}) for k in range(5)]
    out = majority_vote(preds, "m0")
    assert len(out) == n and not any(r.tie_broken for r in out)
    (r,) = majority_vote([(f"m{k}", {"p": lab}) for k, lab in
                          enumerate(["true", "true", "false", "true", "false"])], "m0")
    assert (r.label, r.tie_broken) == ("true", False)
    (r,) = majority_vote([(f"m{k}", {"p": lab}) for k, lab in
                          enumerate(["true", "true", "false", "false"])], "m0")
    assert (r.label, r.tie_broken) == ("true", True)


def _load(entry):
    path = DATA / "malformed" / entry["file"]
    kind = entry["loader"]
    if kind == "pairs":
        return corpus.load_pairs(path, entry["task"])
    if kind == "predictions":
        return corpus.load_predictions(path, entry["task"])
    if kind == "gazetteer":
        return corpus.load_gazetteer(path)
    if kind == "annotations":
        pairs = corpus.load_pairs(DATA / "malformed" / entry["pairs"], entry["task"])
        return corpus.load_annotations(path, pairs)
    if kind == "answers":
        return corpus.load_answers(path)
    raise AssertionError(kind)


def test_loaders_reject_malformed_and_accept_table_fixtures(tmp_path):
    manifest = json.loads((DATA / "malformed" / "manifest.json").read_text("utf-8"))
    assert len(manifest) >= 20
    rejected = 0
    for entry in manifest:
        with pytest.raises(ValueError) as err:
            _load(entry)
        msg = str(err.value)
        assert entry["expect"] in msg and entry["file"] in msg, (entry, msg)
        rejected += 1
    assert rejected == len(manifest)

    # NLI train / validation / test: 3744, 465, 474 per class
    for split, per_class in (("train", 3744), ("validation", 465), ("test", 474)):
        path = tmp_path / f"nli_{split}.tsv"
        synth.write_nli_tsv(path, per_class)
        counts = corpus.label_counts(corpus.load_pairs(path, "nli"))
        assert counts == {lab: per_class for lab in NLI}
    # RQE train and validation
    for split, n_true, n_false in (("train", 4655, 3933), ("validation", 129, 173)):
        path = tmp_path / f"rqe_{split}.tsv"
        synth.write_rqe_tsv(path, n_true, n_false)
        assert corpus.label_counts(corpus.load_pairs(path, "rqe")) == {"true": n_true, "false": n_false}
    # re-ranking sets: question count, average answer count, average answer length
    rows = (("train1", 104, 8, 434.8), ("train2", 104, 8, 432.5),
            ("validation", 25, 9, 420.4), ("test", 150, 7, 418.0))
    for name, q, count, length in rows:
        path = tmp_path / f"answers_{name}.jsonl"
        n = q * count
        synth.write_answers(path, q, n, round(n * length))
        st = corpus.dataset_stats(corpus.load_answers(path))
        assert (st.question_count, round(st.avg_answer_count), round(st.avg_answer_length, 1)) == \
            (q, count, length)


def test_pipeline_twice_byte_identical(tmp_path):
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        shutil.copytree(DEMO, d, ignore=shutil.ignore_patterns("out"))
        assert run(["pipeline", "--config", str(d / "demo.toml")]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted((d / "out").iterdir())})
    assert outputs[0] and outputs[0] == outputs[1]
