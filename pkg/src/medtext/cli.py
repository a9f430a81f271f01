"""Command-line entry point: ``medtext <subcommand> ...``.

Every subcommand is a thin wrapper over a stage function taking
``(inputs, outputs, params)`` so that ``medtext pipeline`` can chain the
same stages from a TOML config. Exit codes: 0 success, 1 data error,
2 usage error. Set ``MEDTEXT_LOG=DEBUG`` (or INFO, WARNING...) for logs.
"""

from __future__ import annotations

import argparse
import graphlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from medtext import __version__, augment, constrain, corpus, ensemble, evaluation, preprocess, rank
from medtext._io import atomic_write_text, write_jsonl
from medtext.corpus import TaskKind
from medtext.scorer import ExternalScorer, OverlapScorer, OverlapScorerConfig, load_stopwords, score_pairs

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("medtext")

Inputs = Mapping[str, Any]
Params = Mapping[str, Any]


class UsageError(Exception):
    """Bad invocation or config; exit status 2."""


def _task(params: Params, default: str = "nli") -> TaskKind:
    return TaskKind.parse(params.get("task", default))


def _json_dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _require(mapping: Mapping[str, Any], key: str, what: str) -> Any:
    if mapping.get(key) in (None, "", []):
        raise UsageError(f"missing {what} {key!r}")
    return mapping[key]


# ---------------------------------------------------------------------------
# stages


def stage_expand(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    task = _task(params)
    pairs = corpus.load_pairs(_require(inputs, "pairs", "input"), task)
    gz = corpus.load_gazetteer(inputs["gazetteer"]) if inputs.get("gazetteer") else None
    cfg = preprocess.ExpandConfig(int(params.get("min_len", preprocess.DEFAULT_MIN_LEN)),
                                  int(params.get("max_len", preprocess.DEFAULT_MAX_LEN)))
    expanded, traces = preprocess.expand_dataset(pairs, gz, cfg)
    corpus.save_pairs(_require(outputs, "pairs", "output"), expanded)
    if outputs.get("traces"):
        write_jsonl(outputs["traces"], (t.to_dict() for t in traces))
    log.info("expand: %d pairs, %d replacements", len(expanded), len(traces))


def _overlap_scorer(task: TaskKind, params: Params) -> OverlapScorer:
    stop = load_stopwords(params.get("stopwords"))
    cfg = OverlapScorerConfig(float(params.get("temperature", 1.0)), stop)
    return OverlapScorer(task, cfg, name=params.get("model_name", "overlap"))


def stage_score(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    task = _task(params)
    pairs = corpus.load_pairs(_require(inputs, "pairs", "input"), task)
    scorer_kind = params.get("scorer", "overlap")
    if scorer_kind != "overlap":
        raise UsageError(f"unknown scorer {scorer_kind!r}; external models supply prediction files")
    preds = score_pairs(_overlap_scorer(task, params), pairs)
    corpus.save_predictions(_require(outputs, "preds", "output"), preds)


def stage_augment(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    task = _task(params, "rqe")
    pairs = corpus.load_pairs(_require(inputs, "pairs", "input"), task)
    anns = corpus.load_annotations(_require(inputs, "annotations", "input"), pairs)
    cfg = augment.AugmentConfig(template=params.get("template", augment.DEFAULT_TEMPLATE))
    corpus.save_pairs(_require(outputs, "pairs", "output"), augment.augment_dataset(pairs, anns, cfg))


def stage_assemble(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    task = _task(params, "rqe")
    sources: dict[str, Any] = {}
    for name in ("train", "validation", "paraphrase"):
        if inputs.get(name):
            sources[name] = corpus.load_pairs(inputs[name], task)
    if inputs.get("qqp"):
        path = Path(inputs["qqp"])
        sources["qqp"] = corpus.load_qqp(path) if path.suffix == ".tsv" else corpus.load_pairs(path, task)
    if inputs.get("annotations"):
        sources["annotations"] = corpus.load_annotations(inputs["annotations"], sources.get("validation"))
    cfg = augment.AugmentConfig(
        template=params.get("template", augment.DEFAULT_TEMPLATE),
        seed=int(params.get("seed", 0)),
        qqp_target_size=int(params.get("qqp_target_size", augment.DEFAULT_QQP_TARGET)),
    )
    variant = _require(params, "variant", "parameter")
    out = augment.assemble_training_set(variant, sources, cfg)
    corpus.save_pairs(_require(outputs, "pairs", "output"), out)
    log.info("assemble %s: %d pairs", variant, len(out))


def stage_constrain(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    pairs = corpus.load_pairs(_require(inputs, "pairs", "input"), TaskKind.NLI)
    preds = corpus.load_predictions(_require(inputs, "preds", "input"), TaskKind.NLI)
    model = params.get("model_name")
    if model:
        preds = [p for p in preds if p.model_name == model]
    labels, rep = constrain.constrain_predictions(preds, pairs)
    corpus.save_labels(_require(outputs, "labels", "output"), labels,
                       model_name=(model or (preds[0].model_name if preds else None)))
    if outputs.get("report"):
        atomic_write_text(outputs["report"], _json_dump(rep.to_dict()))
    if rep.malformed:
        log.warning("constrain: %d malformed groups fell back to argmax", len(rep.malformed))


def _load_model_labels(path: str | Path, task: TaskKind) -> list[tuple[str, dict[str, str]]]:
    """Per-model labels from a preds file (argmax) or a labels file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        first = next((line for line in f if line.strip()), "")
    if first and "probs" in json.loads(first):
        records = corpus.load_predictions(path, task)
        return list(ensemble.labels_from_records(records, task).items())
    labels = corpus.load_labels(path, task)
    name = json.loads(first).get("model_name", path.stem) if first else path.stem
    return [(name, labels)]


def stage_ensemble(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    task = _task(params, "rqe")
    files = _require(inputs, "preds", "input")
    if isinstance(files, (str, Path)):
        files = [files]
    models: list[tuple[str, dict[str, str]]] = []
    for path in files:
        models.extend(_load_model_labels(path, task))
    results = ensemble.majority_vote(models, params.get("tie_break"))
    write_jsonl(_require(outputs, "labels", "output"),
                ({**r.to_dict(), "model_name": "ensemble"} for r in results))
    log.info("ensemble: %d models, %d ties broken", len(models), sum(r.tie_broken for r in results))


def stage_eval(inputs: Inputs, outputs: Inputs, params: Params) -> dict:
    task = _task(params)
    gold = corpus.load_labels(_require(inputs, "gold", "input"), task)
    pred = corpus.load_labels(_require(inputs, "pred", "input"), task)
    cm = evaluation.confusion(gold, pred, params.get("labels") or task.labels)
    rep = evaluation.report(cm, positive="true" if task is TaskKind.RQE else None)
    rep["task"] = task.value
    if outputs.get("report"):
        atomic_write_text(outputs["report"], _json_dump(rep))
    if outputs.get("text"):
        atomic_write_text(outputs["text"], evaluation.format_report(rep))
    return rep


def stage_stats(inputs: Inputs, outputs: Inputs, params: Params) -> dict:
    st = corpus.dataset_stats(corpus.load_answers(_require(inputs, "answers", "input")))
    out = {"question_count": st.question_count, "avg_answer_count": st.avg_answer_count,
           "avg_answer_length": st.avg_answer_length}
    if outputs.get("stats"):
        atomic_write_text(outputs["stats"], _json_dump(out))
    return out


def _rank_scorers(inputs: Inputs, params: Params):
    if inputs.get("nli_preds"):
        nli = ExternalScorer(corpus.load_predictions(inputs["nli_preds"], TaskKind.NLI),
                             params.get("nli_model"), TaskKind.NLI)
    else:
        nli = _overlap_scorer(TaskKind.NLI, params)
    if inputs.get("rqe_preds"):
        rqe = ExternalScorer(corpus.load_predictions(inputs["rqe_preds"], TaskKind.RQE),
                             params.get("rqe_model"), TaskKind.RQE)
    else:
        rqe = _overlap_scorer(TaskKind.RQE, params)
    return nli, rqe


def _bm25_params(params: Params) -> rank.Bm25Params:
    return rank.Bm25Params(float(params.get("k1", 1.2)), float(params.get("b", 0.75)))


def stage_rank_train(inputs: Inputs, outputs: Inputs, params: Params) -> dict:
    questions = corpus.load_questions(_require(inputs, "questions", "input"))
    answers = corpus.load_answers(_require(inputs, "answers", "input"))
    nli, rqe = _rank_scorers(inputs, params)
    examples, vocab = rank.build_examples(questions, answers, nli, rqe, _bm25_params(params))
    model = rank.train_linear(examples, epochs=int(params.get("epochs", 100)),
                              learning_rate=float(params.get("learning_rate", 0.01)),
                              regularization=float(params.get("regularization", 1e-3)),
                              seed=int(params.get("seed", 0)), source_vocab=vocab)
    model.save(_require(outputs, "model", "output"))
    acc = rank.accuracy(model, examples)
    log.info("rank train: %d examples, training accuracy %.4f", len(examples), acc)
    return {"examples": len(examples), "train_accuracy": acc}


def stage_rank_apply(inputs: Inputs, outputs: Inputs, params: Params) -> dict:
    questions = corpus.load_questions(_require(inputs, "questions", "input"))
    answers = corpus.load_answers(_require(inputs, "answers", "input"))
    model = rank.LinearModel.load(_require(inputs, "model", "input"))
    nli, rqe = _rank_scorers(inputs, params)
    stats = rank.CorpusStats.from_answers(answers)
    bparams = _bm25_params(params)
    by_q: dict[str, list[corpus.AnswerCandidate]] = {}
    for a in answers:
        by_q.setdefault(a.question_id, []).append(a)
    rows = []
    correct = labelled = 0
    for qid, cands in by_q.items():
        if qid not in questions:
            raise KeyError(f"no question text for {qid!r}")
        ranked = rank.rank_answers(questions[qid], cands, model, nli, rqe, stats, bparams, qid)
        rel = {a.answer_id: a.relevance for a in cands}
        for pos, (aid, score) in enumerate(ranked, 1):
            rows.append({"question_id": qid, "answer_id": aid, "rank": pos, "score": score,
                         "predicted_relevant": score >= 0.0})
            if rel[aid] is not None:
                labelled += 1
                correct += (score >= 0.0) == rel[aid]
    write_jsonl(_require(outputs, "ranking", "output"), rows)
    summary = {"answers": len(rows), "accuracy": correct / labelled if labelled else None}
    if outputs.get("summary"):
        atomic_write_text(outputs["summary"], _json_dump(summary))
    return summary


def stage_rank_pairs(inputs: Inputs, outputs: Inputs, params: Params) -> None:
    """Export the sentence pairs an external NLI/RQE model must score for re-ranking."""
    questions = corpus.load_questions(_require(inputs, "questions", "input"))
    answers = corpus.load_answers(_require(inputs, "answers", "input"))
    nli_pairs, rqe_pairs = [], []
    for a in answers:
        n, r = rank.answer_sentence_pairs(questions[a.question_id], a)
        nli_pairs += n
        rqe_pairs += r
    corpus.save_pairs(_require(outputs, "nli_pairs", "output"), nli_pairs)
    corpus.save_pairs(_require(outputs, "rqe_pairs", "output"), rqe_pairs)


STAGES: dict[str, Callable[[Inputs, Inputs, Params], Any]] = {
    "expand": stage_expand,
    "score": stage_score,
    "augment": stage_augment,
    "assemble": stage_assemble,
    "constrain": stage_constrain,
    "ensemble": stage_ensemble,
    "eval": stage_eval,
    "stats": stage_stats,
    "rank_train": stage_rank_train,
    "rank_apply": stage_rank_apply,
    "rank_pairs": stage_rank_pairs,
}


# ---------------------------------------------------------------------------
# pipeline


def load_pipeline(path: str | Path) -> tuple[list[dict], dict[str, Any]]:
    """Parse and validate a pipeline config; returns stages in run order and globals.

    Layout::

        seed = 7
        task = "nli"

        [paths]
        pairs = "pairs.jsonl"
        expanded = "out/expanded.jsonl"

        [[stages]]
        run = "expand"
        inputs = { pairs = "pairs" }
        outputs = { pairs = "expanded" }
        params = { min_len = 2 }

    Stage inputs and outputs name entries of ``[paths]``; relative paths
    resolve against the config file's directory.
    """
    path = Path(path)
    try:
        cfg = tomllib.loads(path.read_text("utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"{path}: {e}") from e
    base = path.parent
    paths = cfg.get("paths", {})
    stages = cfg.get("stages", [])
    if not stages:
        raise UsageError(f"{path}: no [[stages]] declared")

    def resolve(ref: Any, where: str) -> Any:
        if isinstance(ref, list):
            return [resolve(r, where) for r in ref]
        if ref not in paths:
            raise UsageError(f"{path}: {where} references undeclared path {ref!r}")
        return str((base / paths[ref]).resolve())

    producer: dict[str, int] = {}
    for i, st in enumerate(stages):
        kind = st.get("run")
        if kind not in STAGES:
            raise UsageError(f"{path}: stage {i} has unknown run {kind!r}; known: {sorted(STAGES)}")
        for ref in st.get("outputs", {}).values():
            if ref in producer:
                raise UsageError(f"{path}: path {ref!r} is written by stages {producer[ref]} and {i}")
            producer[ref] = i

    graph = graphlib.TopologicalSorter()
    resolved = []
    for i, st in enumerate(stages):
        where = f"stage {i} ({st['run']})"
        ins = {k: resolve(v, where) for k, v in st.get("inputs", {}).items()}
        outs = {k: resolve(v, where) for k, v in st.get("outputs", {}).items()}
        graph.add(i)
        for ref in st.get("inputs", {}).values():
            for r in ref if isinstance(ref, list) else [ref]:
                if r in producer:
                    graph.add(i, producer[r])
        params = {"task": cfg.get("task", "nli"), "seed": cfg.get("seed", 0), **st.get("params", {})}
        resolved.append({"run": st["run"], "name": st.get("name", f"{i}:{st['run']}"),
                         "inputs": ins, "outputs": outs, "params": params})
    try:
        graph.prepare()
    except graphlib.CycleError as e:
        raise UsageError(f"{path}: stage graph has a cycle: {e.args[1]}") from e
    order = []
    while graph.is_active():
        ready = sorted(graph.get_ready())
        order.extend(ready)
        graph.done(*ready)
    return [resolved[i] for i in order], {"seed": cfg.get("seed", 0), "task": cfg.get("task", "nli")}


def run_pipeline(config: str | Path) -> list[tuple[str, Any]]:
    stages, _ = load_pipeline(config)
    results = []
    for st in stages:
        log.info("pipeline: running %s", st["name"])
        results.append((st["name"], STAGES[st["run"]](st["inputs"], st["outputs"], st["params"])))
    return results


# ---------------------------------------------------------------------------
# argparse


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="medtext", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"medtext {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    s = sub.add_parser("expand", help="expand abbreviations (local context, then gazetteer)")
    s.add_argument("--pairs", required=True)
    s.add_argument("--gazetteer")
    s.add_argument("--task", default="nli", choices=["nli", "rqe"])
    s.add_argument("--min-len", type=int, default=preprocess.DEFAULT_MIN_LEN)
    s.add_argument("--max-len", type=int, default=preprocess.DEFAULT_MAX_LEN)
    s.add_argument("--out", required=True)
    s.add_argument("--trace-out")

    s = sub.add_parser("score", help="score pairs with the lexical-overlap baseline")
    s.add_argument("--pairs", required=True)
    s.add_argument("--task", default="nli", choices=["nli", "rqe"])
    s.add_argument("--temperature", type=float, default=1.0)
    s.add_argument("--stopwords")
    s.add_argument("--model-name", default="overlap")
    s.add_argument("--out", required=True)

    s = sub.add_parser("augment", help="add UMLS-template copies of annotated pairs")
    s.add_argument("--pairs", required=True)
    s.add_argument("--annotations", required=True)
    s.add_argument("--task", default="rqe", choices=["nli", "rqe"])
    s.add_argument("--template", default=augment.DEFAULT_TEMPLATE)
    s.add_argument("--out", required=True)

    s = sub.add_parser("assemble", help="build a training-set variant")
    s.add_argument("--variant", required=True, choices=augment.VARIANTS)
    s.add_argument("--src", action="append", default=[], metavar="NAME=PATH",
                   help="source file; NAME is train, validation, annotations, qqp or paraphrase")
    s.add_argument("--task", default="rqe", choices=["nli", "rqe"])
    s.add_argument("--template", default=augment.DEFAULT_TEMPLATE)
    s.add_argument("--qqp-target-size", type=int, default=augment.DEFAULT_QQP_TARGET)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("constrain", help="apply the one-label-per-class premise prior")
    s.add_argument("--pairs", required=True)
    s.add_argument("--preds", required=True)
    s.add_argument("--model-name")
    s.add_argument("--out", required=True)
    s.add_argument("--report")

    s = sub.add_parser("ensemble", help="majority vote over several prediction files")
    s.add_argument("--preds", nargs="+", required=True)
    s.add_argument("--task", default="rqe", choices=["nli", "rqe"])
    s.add_argument("--tie-break")
    s.add_argument("--out", required=True)

    s = sub.add_parser("eval", help="accuracy, confusion matrix and F1")
    s.add_argument("--gold", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--task", default="nli", choices=["nli", "rqe"])
    s.add_argument("--report")
    s.add_argument("--text")

    s = sub.add_parser("stats", help="answer-set statistics for the re-ranking data")
    s.add_argument("--answers", required=True)
    s.add_argument("--out")

    r = sub.add_parser("rank", help="answer re-ranking")
    rsub = r.add_subparsers(dest="rank_command", metavar="action")
    rsub.required = True
    for name in ("train", "apply", "pairs"):
        s = rsub.add_parser(name)
        s.add_argument("--question-file", "--questions", dest="questions", required=True)
        s.add_argument("--answers", required=True)
        if name == "pairs":
            s.add_argument("--nli-out", required=True)
            s.add_argument("--rqe-out", required=True)
            continue
        s.add_argument("--nli-preds")
        s.add_argument("--rqe-preds")
        s.add_argument("--k1", type=float, default=1.2)
        s.add_argument("--b", type=float, default=0.75)
        s.add_argument("--out", required=True)
        if name == "train":
            s.add_argument("--epochs", type=int, default=100)
            s.add_argument("--learning-rate", type=float, default=0.01)
            s.add_argument("--regularization", type=float, default=1e-3)
            s.add_argument("--seed", type=int, default=0)
        else:
            s.add_argument("--model", required=True)
            s.add_argument("--summary")

    s = sub.add_parser("pipeline", help="run stages from a TOML config")
    s.add_argument("--config", required=True)
    return p


def _dispatch(args: argparse.Namespace) -> Any:
    cmd = args.command
    if cmd == "expand":
        return stage_expand({"pairs": args.pairs, "gazetteer": args.gazetteer},
                            {"pairs": args.out, "traces": args.trace_out},
                            {"task": args.task, "min_len": args.min_len, "max_len": args.max_len})
    if cmd == "score":
        return stage_score({"pairs": args.pairs}, {"preds": args.out},
                           {"task": args.task, "temperature": args.temperature,
                            "stopwords": args.stopwords, "model_name": args.model_name})
    if cmd == "augment":
        return stage_augment({"pairs": args.pairs, "annotations": args.annotations},
                             {"pairs": args.out}, {"task": args.task, "template": args.template})
    if cmd == "assemble":
        srcs = {}
        for item in args.src:
            name, sep, path = item.partition("=")
            if not sep or not path:
                raise UsageError(f"--src expects NAME=PATH, got {item!r}")
            srcs[name] = path
        return stage_assemble(srcs, {"pairs": args.out},
                              {"task": args.task, "variant": args.variant, "template": args.template,
                               "qqp_target_size": args.qqp_target_size, "seed": args.seed})
    if cmd == "constrain":
        return stage_constrain({"pairs": args.pairs, "preds": args.preds},
                               {"labels": args.out, "report": args.report},
                               {"model_name": args.model_name})
    if cmd == "ensemble":
        return stage_ensemble({"preds": args.preds}, {"labels": args.out},
                              {"task": args.task, "tie_break": args.tie_break})
    if cmd == "eval":
        rep = stage_eval({"gold": args.gold, "pred": args.pred},
                         {"report": args.report, "text": args.text}, {"task": args.task})
        sys.stdout.write(evaluation.format_report(rep))
        return rep
    if cmd == "stats":
        out = stage_stats({"answers": args.answers}, {"stats": args.out}, {})
        sys.stdout.write(_json_dump(out))
        return out
    if cmd == "rank":
        ins = {"questions": args.questions, "answers": args.answers}
        if args.rank_command == "pairs":
            return stage_rank_pairs(ins, {"nli_pairs": args.nli_out, "rqe_pairs": args.rqe_out}, {})
        ins.update(nli_preds=args.nli_preds, rqe_preds=args.rqe_preds)
        params: dict[str, Any] = {"k1": args.k1, "b": args.b}
        if args.rank_command == "train":
            params.update(epochs=args.epochs, learning_rate=args.learning_rate,
                          regularization=args.regularization, seed=args.seed)
            out = stage_rank_train(ins, {"model": args.out}, params)
        else:
            ins["model"] = args.model
            out = stage_rank_apply(ins, {"ranking": args.out, "summary": args.summary}, params)
        sys.stdout.write(_json_dump(out))
        return out
    if cmd == "pipeline":
        return run_pipeline(args.config)
    raise UsageError(f"unknown command {cmd!r}")


def _setup_logging() -> None:
    level = os.environ.get("MEDTEXT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _dispatch(args)
    except UsageError as e:
        print(f"medtext {args.command}: usage error: {e}", file=sys.stderr)
        return 2
    except (ValueError, LookupError, OSError) as e:
        kind = type(e).__name__
        print(f"medtext {args.command}: error [{kind}]: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
