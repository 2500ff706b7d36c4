"""Command-line front end.

Every subcommand reads one flat JSON config (``--config``), applies flag
overrides, writes its data to files under ``output_dir`` (or ``dkb_dir``) and
leaves a run manifest next to them. Logs go to standard error.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import random
import sys
from typing import Optional

import numpy as np
import torch

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .corpus import Corpus, CorpusError, Document, corpus_stats, ingest_jsonl, load_routes
from .dkb import DKB, DKBError, build_dkb, load_dkb, load_stoplist, save_dkb
from .embeddings import EmbeddingError, load_embeddings
from .metric import (
    MetricError,
    MetricParams,
    faithful_score,
    features,
    fit_params,
    lead_baseline,
    load_params,
    load_training,
    save_params,
    textrank_baseline,
)
from .relation_model import HeuristicScorer, ModelScorer, infer_tree, load_checkpoint, load_pairs, save_checkpoint, train
from .relation_model.data import pairs_from_edus
from .rstree import serialize
from .segmenter import SegmentationError, dump_edus, segment_document
from .summarizer import Budget, summarize

logger = logging.getLogger("kgsumm")

SYSTEMS = ("lead", "textrank", "ours")
DEFAULT_BUDGETS = ("10%", "20%", "50", "100")
SYSTEM_LABELS = {"lead": "Lead", "textrank": "TextRank", "ours": "Ours"}


class UsageError(Exception):
    """Bad invocation or configuration; exits with code 2."""


# -- helpers -----------------------------------------------------------------


def _require(path: Optional[str], what: str) -> str:
    if not path:
        raise UsageError(f"no {what} path configured")
    if not os.path.exists(path):
        raise UsageError(f"{what} path does not exist: {path}")
    return path


def _write_json(path: str, obj, sort_keys: bool = True) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=1, sort_keys=sort_keys)
        fh.write("\n")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def _manifest(cfg: PipelineConfig, command: str, inputs: dict, outputs: list) -> None:
    # no timestamps: reruns must produce byte-identical files
    _write_json(
        os.path.join(cfg.output_dir, f"manifest_{command}.json"),
        {
            "command": command,
            "inputs": inputs,
            "outputs": sorted(outputs),
            "config_sha256": cfg.digest(),
            "config": cfg.to_dict(),
            "versions": {
                "kgsumm": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "torch": torch.__version__,
            },
        },
    )


def _seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def _domain(cfg: PipelineConfig, args) -> str:
    domain = getattr(args, "domain", None) or cfg.domain
    if not domain:
        raise UsageError("no domain given (use --domain or the 'domain' config key)")
    return domain


def _corpus(cfg: PipelineConfig) -> Corpus:
    routes = load_routes(_require(cfg.routes, "routes")) if cfg.routes else None
    return ingest_jsonl(_require(cfg.corpus, "corpus"), routes)


def _dkb_path(cfg: PipelineConfig, domain: str) -> str:
    return os.path.join(cfg.dkb_dir, f"{_safe(domain)}.json")


def _load_domain_dkb(cfg: PipelineConfig, domain: str) -> DKB:
    return load_dkb(_require(_dkb_path(cfg, domain), f"knowledge base for domain {domain!r}"))


def _documents(corpus: Corpus, domain: str, doc_id: Optional[str]) -> list:
    if doc_id is None:
        return corpus.domain_documents(domain)
    if doc_id not in corpus:
        raise UsageError(f"unknown document id {doc_id!r}")
    return [corpus[doc_id]]


def _document_arg(cfg: PipelineConfig, args) -> list:
    """Documents named by ``--document FILE`` or ``--doc-id`` (default: the whole domain)."""
    if getattr(args, "document", None):
        path = _require(args.document, "document")
        with open(path, encoding="utf-8") as fh:
            return [Document.from_record(json.loads(line)) for line in fh if line.strip()]
    return _documents(_corpus(cfg), _domain(cfg, args), getattr(args, "doc_id", None))


def _scorer(cfg: PipelineConfig, dkb: DKB):
    if cfg.model:
        return ModelScorer(load_checkpoint(_require(cfg.model, "model checkpoint")))
    return HeuristicScorer(dkb)


def _budget(cfg: PipelineConfig, args) -> Budget:
    if getattr(args, "words", None) is not None:
        return Budget.words(args.words)
    if getattr(args, "ratio", None) is not None:
        return Budget.ratio(args.ratio)
    if cfg.budget_words is not None:
        return Budget.words(cfg.budget_words)
    return Budget.ratio(cfg.budget_ratio if cfg.budget_ratio is not None else 0.2)


def _units(document: Document, result, system: str, edus: Optional[list]) -> list:
    if system == "ours":
        return [edus[i] for i in result.output_order]
    sents = [s for _, _, s in document.sentences()]
    return [sents[i] for i in result.output_order]


def _run_system(cfg: PipelineConfig, system: str, document: Document, dkb: DKB, budget: Budget, scorer=None):
    """Summary result plus the units it is made of."""
    if system == "ours":
        edus = segment_document(document, dkb)
        tree = infer_tree(edus, scorer or _scorer(cfg, dkb), cfg.max_span_tokens)
        result = summarize(tree, budget, cfg.separator, cfg.strict_alternation, cfg.length_unit)
        return result, _units(document, result, system, edus)
    if system == "lead":
        result = lead_baseline(document, budget, cfg.separator)
    elif system == "textrank":
        result = textrank_baseline(document, budget, cfg.d, cfg.separator)
    else:
        raise UsageError(f"unknown system {system!r}")
    return result, _units(document, result, system, None)


# -- commands ------------------------------------------------------------------


def cmd_stats(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    stats = corpus_stats(_corpus(cfg), domain)
    out = os.path.join(cfg.output_dir, f"stats_{_safe(domain)}.json")
    _write_json(out, {"domain": domain, "doc_count": stats.doc_count, "avg_sentences": stats.avg_sentences, "avg_words": stats.avg_words})
    logger.info("%s: %d documents, %.2f sentences and %.2f words per document", domain, stats.doc_count, stats.avg_sentences, stats.avg_words)
    _manifest(cfg, "stats", {"corpus": cfg.corpus, "domain": domain}, [out])
    return 0


def cmd_build_dkb(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    emb_path = _require(cfg.embeddings, "embeddings")
    stop = load_stoplist(_require(cfg.stoplist, "stoplist")) if cfg.stoplist else set()
    corpus = _corpus(cfg)
    dkb = build_dkb(corpus, domain, load_embeddings(emb_path), cfg.dkb_config(stop))
    out = _dkb_path(cfg, domain)
    os.makedirs(cfg.dkb_dir, exist_ok=True)
    save_dkb(dkb, out)
    print(f"{'Domain':<12}{'A':>6}{'P':>6}{'T':>6}", file=sys.stderr)
    print(f"{domain:<12}{len(dkb.agents):>6}{len(dkb.factors):>6}{len(dkb.dynamics):>6}", file=sys.stderr)
    _manifest(cfg, "build-dkb", {"corpus": cfg.corpus, "embeddings": emb_path, "stoplist": cfg.stoplist, "domain": domain}, [out])
    return 0


def cmd_segment(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    dkb = _load_domain_dkb(cfg, domain)
    outputs = []
    for doc in _document_arg(cfg, args):
        out = os.path.join(cfg.output_dir, "edus", f"{_safe(doc.id)}.json")
        os.makedirs(os.path.dirname(out), exist_ok=True)
        dump_edus(segment_document(doc, dkb), out)
        outputs.append(out)
    logger.info("segmented %d documents", len(outputs))
    _manifest(cfg, "segment", {"corpus": cfg.corpus, "domain": domain, "dkb": _dkb_path(cfg, domain)}, outputs)
    return 0


def cmd_parse(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    dkb = _load_domain_dkb(cfg, domain)
    scorer = _scorer(cfg, dkb)
    outputs = []
    for doc in _document_arg(cfg, args):
        tree = infer_tree(segment_document(doc, dkb), scorer, cfg.max_span_tokens)
        out = os.path.join(cfg.output_dir, "trees", f"{_safe(doc.id)}.json")
        os.makedirs(os.path.dirname(out), exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(serialize(tree) + "\n")
        outputs.append(out)
    logger.info("parsed %d documents with the %s scorer", len(outputs), "model" if cfg.model else "heuristic")
    _manifest(cfg, "parse", {"corpus": cfg.corpus, "domain": domain, "model": cfg.model}, outputs)
    return 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    pairs = load_pairs(_require(cfg.pairs, "training pairs"))
    if cfg.domain or getattr(args, "domain", None):
        # unlabelled target-language pairs from the domain corpus
        domain = _domain(cfg, args)
        dkb = _load_domain_dkb(cfg, domain)
        for doc in _corpus(cfg).domain_documents(domain):
            pairs.extend(pairs_from_edus(segment_document(doc, dkb)))
    result = train(pairs, cfg.train_config(), cfg.model_config())
    out = cfg.model or os.path.join(cfg.output_dir, "model.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    save_checkpoint(result.model, out, cfg.train_config())
    hist = os.path.join(cfg.output_dir, "train_history.json")
    _write_json(hist, {"initial_loss": result.initial_loss, "final_loss": result.final_loss, "history": result.history})
    logger.info("loss %.4f -> %.4f over %d epochs", result.initial_loss, result.final_loss, len(result.history))
    _manifest(cfg, "train", {"pairs": cfg.pairs, "n_pairs": len(pairs)}, [out, hist])
    return 0


def cmd_summarize(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    dkb = _load_domain_dkb(cfg, domain)
    budget = _budget(cfg, args)
    scorer = _scorer(cfg, dkb) if args.system == "ours" else None
    outputs = []
    for doc in _document_arg(cfg, args):
        result, _ = _run_system(cfg, args.system, doc, dkb, budget, scorer)
        obj = result.to_obj(doc.id, budget)
        obj["system"] = args.system
        out = os.path.join(cfg.output_dir, "summaries", f"{_safe(doc.id)}__{args.system}__{_safe(budget.label)}.json")
        _write_json(out, obj)
        outputs.append(out)
    logger.info("wrote %d summaries", len(outputs))
    _manifest(cfg, "summarize", {"corpus": cfg.corpus, "domain": domain, "system": args.system, "budget": budget.label}, outputs)
    return 0


def _params(cfg: PipelineConfig) -> MetricParams:
    if cfg.metric_params and os.path.exists(cfg.metric_params):
        return load_params(cfg.metric_params)
    logger.warning("no fitted metric parameters found; scoring with the unfitted placeholder weights")
    return MetricParams()


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    domain = _domain(cfg, args)
    dkb = _load_domain_dkb(cfg, domain)
    params = _params(cfg)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    for s in systems:
        if s not in SYSTEMS:
            raise UsageError(f"unknown system {s!r}; choose from {', '.join(SYSTEMS)}")
    budgets = [Budget.parse(b.strip()) for b in args.budgets.split(",") if b.strip()]
    docs = {d.id: d for d in _document_arg(cfg, args)}
    scores: dict = {(s, b.label): [] for s in systems for b in budgets}
    if args.summaries:
        for rec in read_summary_records(_require(args.summaries, "summaries")):
            key = (rec["system"], Budget.parse(rec["budget"]).label)
            doc = docs.get(rec["doc_id"])
            if key not in scores or doc is None:
                continue
            units = _record_units(doc, dkb, rec)
            scores[key].append(faithful_score(features(units, doc, doc.title, dkb, params.rouge_n), params))
    else:
        scorer = _scorer(cfg, dkb) if "ours" in systems else None
        for doc in docs.values():
            for s in systems:
                for b in budgets:
                    _, units = _run_system(cfg, s, doc, dkb, b, scorer)
                    scores[(s, b.label)].append(faithful_score(features(units, doc, doc.title, dkb, params.rouge_n), params))
    table = {
        SYSTEM_LABELS[s]: {b.label: (float(np.mean(scores[(s, b.label)])) if scores[(s, b.label)] else None) for b in budgets}
        for s in systems
    }
    out = os.path.join(cfg.output_dir, f"report_{_safe(domain)}.json")
    _write_json(out, {"domain": domain, "fitted_params": params.fitted, "columns": [b.label for b in budgets], "rows": table}, sort_keys=False)
    txt = os.path.join(cfg.output_dir, f"report_{_safe(domain)}.txt")
    with open(txt, "w", encoding="utf-8") as fh:
        fh.write(format_report(table, [b.label for b in budgets]))
    _manifest(cfg, "evaluate", {"corpus": cfg.corpus, "domain": domain, "summaries": args.summaries, "metric_params": cfg.metric_params}, [out, txt])
    return 0


def read_summary_records(path: str) -> list:
    """Summary records from a directory of ``summarize`` outputs or a JSON lines file."""
    if os.path.isdir(path):
        recs = []
        for name in sorted(os.listdir(path)):
            if name.endswith(".json"):
                with open(os.path.join(path, name), encoding="utf-8") as fh:
                    recs.append(json.load(fh))
        return recs
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _record_units(doc: Document, dkb: DKB, rec: dict) -> list:
    if rec["system"] == "ours":
        edus = segment_document(doc, dkb)
        return [edus[i] for i in rec["output_order"]]
    sents = [s for _, _, s in doc.sentences()]
    return [sents[i] for i in rec["output_order"]]


def format_report(table: dict, columns: list) -> str:
    lines = ["System".ljust(10) + "".join(c.rjust(9) for c in columns)]
    for name, row in table.items():
        cells = ["-".rjust(9) if row[c] is None else f"{row[c]:9.2f}" for c in columns]
        lines.append(name.ljust(10) + "".join(cells))
    return "\n".join(lines) + "\n"


def cmd_fit_metric(cfg: PipelineConfig, args) -> int:
    training = load_training(_require(args.training, "metric training"))
    params = fit_params(training, args.ridge)
    out = cfg.metric_params or os.path.join(cfg.output_dir, "metric_params.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    save_params(params, out)
    logger.info("fitted w=%s b=%.6f from %d samples", ", ".join(f"{x:.4f}" for x in params.w), params.b, len(training))
    _manifest(cfg, "fit-metric", {"training": args.training, "ridge": args.ridge}, [out])
    return 0


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgsumm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--output-dir", dest="output_dir", help="output directory (overrides config)")
    common.add_argument("--corpus", help="corpus JSON lines file (overrides config)")
    common.add_argument("--dkb-dir", dest="dkb_dir", help="knowledge base directory (overrides config)")
    common.add_argument("--model", help="relation model checkpoint (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        return p

    def docs(p):
        p.add_argument("--domain")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--doc-id", dest="doc_id")
        g.add_argument("--document", help="JSON lines file of document records")

    p = add("stats", cmd_stats, "corpus statistics for a domain")
    p.add_argument("--domain")
    p = add("build-dkb", cmd_build_dkb, "build a domain knowledge base")
    p.add_argument("--domain")
    p.add_argument("--embeddings", help="word2vec text file (overrides config)")
    docs(add("segment", cmd_segment, "segment documents into EDUs"))
    docs(add("parse", cmd_parse, "build rhetorical-structure trees"))
    p = add("train", cmd_train, "train the relation model")
    p.add_argument("--pairs", help="training pairs JSON lines file (overrides config)")
    p.add_argument("--domain", help="also add unlabelled pairs from this domain")
    p.add_argument("--epochs", type=int)
    p = add("summarize", cmd_summarize, "summarize documents")
    docs(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--words", type=int, help="word budget")
    g.add_argument("--ratio", type=float, help="budget as a fraction of the document length")
    p.add_argument("--system", choices=SYSTEMS, default="ours")
    p = add("evaluate", cmd_evaluate, "faithful-score report over systems and budgets")
    docs(p)
    p.add_argument("--summaries", help="directory of summary files or JSON lines of summary records; generated when omitted")
    p.add_argument("--systems", default=",".join(SYSTEMS))
    p.add_argument("--budgets", default=",".join(DEFAULT_BUDGETS))
    p = add("fit-metric", cmd_fit_metric, "fit faithful-score weights")
    p.add_argument("--training", required=True, help="JSON lines of {features, target}")
    p.add_argument("--ridge", type=float, default=0.0)
    return parser


_OVERRIDES = ("seed", "output_dir", "corpus", "dkb_dir", "model", "embeddings", "pairs", "epochs")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, {k: getattr(args, k, None) for k in _OVERRIDES})
        if getattr(args, "words", None) is not None and args.words < 1:
            raise UsageError("--words must be positive")
        if getattr(args, "ratio", None) is not None and not 0 < args.ratio <= 1:
            raise UsageError("--ratio must lie in (0, 1]")
        _seed(cfg.seed)
        os.makedirs(cfg.output_dir, exist_ok=True)
        return args.func(cfg, args)
    except (UsageError, ConfigError) as exc:
        logger.error("%s", exc)
        return 2
    except (CorpusError, DKBError, EmbeddingError, SegmentationError, MetricError, ValueError, OSError, RuntimeError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
