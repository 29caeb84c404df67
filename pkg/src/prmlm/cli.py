"""Command-line entry point.

Every report starts with ``#`` header lines naming the tool version, the
resolved configuration and the seed, so a report can be regenerated from
its own header. Exit status: 0 on success, 1 on usage errors, 2 on data
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import __version__
from .clustering import ClassBigramModel, Objective, exchange_cluster, objective_value
from .corpus import EncodedCorpus, Vocabulary, build_vocabulary, encode_corpus, read_lines
from .correlation import read_paired_tsv
from .errors import PrmError
from .fixture import DemoConfig, make_demo
from .ngram import DEFAULT_ALPHA, BigramModel, load_model, perplexity, save_model, sentence_log_prob
from .prm import FORMS, PrmConfig, prm_score, sentence_prm
from .recognizer import AcousticChannel, run_experiment, utt_ids
from .similarity import ConfusableIndex, SimilarityMatrix, load_similarity, proxy_similarity

TOOL = "prmlm"
DEFAULT_SEED = 42
DEFAULT_TEMPERATURE = 0.5
DEFAULT_MEASURES = "0,10,20,40,80"

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class Report:
    command: str
    config: dict[str, Any]
    columns: list[str] = field(default_factory=list)
    rows: list[list[Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            body = {
                "tool": TOOL,
                "version": __version__,
                "command": self.command,
                "config": self.config,
                "columns": self.columns,
                "rows": [[_json_value(v) for v in r] for r in self.rows],
                "summary": {k: _json_value(v) for k, v in self.summary.items()},
            }
            return json.dumps(body, indent=2, sort_keys=True) + "\n"
        lines = [f"# {TOOL} {__version__} {self.command}"]
        lines += [f"# {k}={_config_value(v)}" for k, v in sorted(self.config.items())]
        lines += [f"# {k}: {_cell(v)}" for k, v in self.summary.items()]
        if self.columns:
            lines.append("#" + "\t".join(self.columns))
        lines += ["\t".join(_cell(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def _config_value(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("expected non-negative integers")
    return values


def _non_negative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")

    corpus_opts = _Parser(add_help=False)
    corpus_opts.add_argument("--min-count", type=_non_negative_int, default=0)
    corpus_opts.add_argument("--lowercase", action="store_true")

    scoring = _Parser(add_help=False)
    scoring.add_argument("--model", required=True, help="model file written by 'train'")
    scoring.add_argument("--context", choices=("bigram", "unigram"), default="bigram")

    sim_opts = _Parser(add_help=False)
    sim_opts.add_argument("--sim", help="similarity TSV (word1, word2, score); default is the edit-distance proxy")
    sim_opts.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)

    parser = _Parser(prog=TOOL, description="Probability ratio measure toolkit for bigram language models.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", parents=[common, corpus_opts], help="estimate a smoothed bigram model")
    p.add_argument("corpus")
    p.add_argument("--model", required=True, help="where to write the model")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    p = sub.add_parser("ppl", parents=[common, scoring], help="per-utterance and corpus perplexity")
    p.add_argument("test")

    p = sub.add_parser("prm", parents=[common, scoring, sim_opts], help="probability ratio measure")
    p.add_argument("test")
    p.add_argument("--nbsimil", type=_non_negative_int, required=True)
    p.add_argument("--form", choices=FORMS, default="eq8")

    p = sub.add_parser("sim-matrix", parents=[common, corpus_opts], help="edit-distance similarity proxy")
    p.add_argument("corpus")
    p.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)

    p = sub.add_parser("correlate", parents=[common], help="Spearman correlation of paired samples")
    p.add_argument("pairs", help="TSV rows: utt-id, measure, accuracy")

    p = sub.add_parser("cluster", parents=[common, corpus_opts, sim_opts], help="exchange word clustering")
    p.add_argument("corpus")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--objective", choices=("likelihood", "prm"), default="likelihood")
    p.add_argument("--nbsimil", type=_non_negative_int, default=0)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--max-iter", type=_non_negative_int, default=20)

    for name, text in (("simulate", "per-utterance recognition report"), ("experiment", "measure/accuracy correlations")):
        p = sub.add_parser(name, parents=[common, sim_opts], help=text)
        p.add_argument("test", nargs="?")
        p.add_argument("--model")
        p.add_argument("--context", choices=("bigram", "unigram"), default="bigram")
        p.add_argument("--demo", action="store_true", help="use the bundled synthetic fixture")
        p.add_argument("--sigma", type=float, help="channel noise (required without --demo)")
        p.add_argument("--nbsimil", type=_non_negative_int, help="decoder confusable-set size (default 80)")
        p.add_argument("--measures", type=_int_list, default=_int_list(DEFAULT_MEASURES),
                       help="NbSimil values to measure; 0 means perplexity")
        p.add_argument("--form", choices=FORMS, default="eq8")
        p.add_argument("--right-context", action="store_true", help="decoder also scores the following word")
    return parser


def _resolved_config(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"command", "format", "output", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _scoring_model(args, model: BigramModel):
    return model.unigram() if args.context == "unigram" else model


def _test_corpus(path: str, vocab: Vocabulary) -> EncodedCorpus:
    corpus = encode_corpus(read_lines(path), vocab)
    if not corpus.sentences:
        raise PrmError(f"{path}: no utterances")
    return corpus


def _similarity(args, vocab: Vocabulary) -> SimilarityMatrix:
    if args.sim:
        return load_similarity(args.sim, vocab)
    if args.temperature <= 0:
        raise UsageError("--temperature must be positive")
    return proxy_similarity(vocab, args.temperature)


def cmd_train(args, report: Report) -> None:
    lines = read_lines(args.corpus)
    vocab = build_vocabulary(lines, args.min_count, args.lowercase)
    corpus = encode_corpus(lines, vocab, args.lowercase)
    model = BigramModel.estimate(corpus, args.alpha)
    save_model(model, args.model)
    report.summary.update(
        vocabulary=len(vocab), sentences=len(corpus), tokens=corpus.token_count,
        train_perplexity=perplexity(model, corpus),
    )


def cmd_ppl(args, report: Report) -> None:
    model = load_model(args.model)
    test = _test_corpus(args.test, model.vocab)
    scorer = _scoring_model(args, model)
    report.columns = ["utt-id", "positions", "log_prob", "perplexity"]
    for uid, i in zip(utt_ids(test), range(len(test))):
        s = test.sentences[i]
        report.rows.append([uid, len(s) - 2, sentence_log_prob(scorer, s), perplexity(scorer, test.subset([i]))])
    report.summary["corpus_perplexity"] = perplexity(scorer, test)


def cmd_prm(args, report: Report) -> None:
    if args.nbsimil == 0:
        raise UsageError("--nbsimil 0 has no confusable alternatives; the measure reduces to perplexity, use 'ppl'")
    model = load_model(args.model)
    test = _test_corpus(args.test, model.vocab)
    scorer = _scoring_model(args, model)
    sim = _similarity(args, model.vocab)
    config = PrmConfig(args.nbsimil, args.form, per_word_normalize=False)
    index = ConfusableIndex(sim, args.nbsimil)
    report.columns = ["utt-id", "positions", "log_prm", "log_prm_per_word"]
    for uid, s in zip(utt_ids(test), test.sentences):
        score = sentence_prm(scorer, sim, s, config, index)
        report.rows.append([uid, score.positions_scored, score.log_value, score.log_per_word])
    total = prm_score(scorer, sim, test, config)
    report.rows.append(["TOTAL", total.positions_scored, total.log_value, total.log_per_word])


def cmd_sim_matrix(args, report: Report) -> None:
    if args.temperature <= 0:
        raise UsageError("--temperature must be positive")
    vocab = build_vocabulary(read_lines(args.corpus), args.min_count, args.lowercase)
    sim = proxy_similarity(vocab, args.temperature)
    report.columns = ["word1", "word2", "score"]
    for a, b, s in sim.pairs():
        report.rows.append([vocab.word_of(a), vocab.word_of(b), s])


def cmd_correlate(args, report: Report) -> None:
    samples = read_paired_tsv(args.pairs)
    r = samples.spearman()
    report.summary.update(n=len(samples.x), r_s=f"{r:.4f}")


def cmd_cluster(args, report: Report) -> None:
    lines = read_lines(args.corpus)
    vocab = build_vocabulary(lines, args.min_count, args.lowercase)
    corpus = encode_corpus(lines, vocab, args.lowercase)
    sim = None
    if args.objective == "prm":
        if args.nbsimil == 0:
            raise UsageError("--objective prm needs --nbsimil > 0")
        sim = _similarity(args, vocab)
    objective = Objective(args.objective, args.nbsimil, sim)
    passes: list[tuple[int, float, int]] = []
    class_map = exchange_cluster(
        corpus, args.classes, objective, args.max_iter, args.seed, args.alpha,
        on_pass=lambda it, value, moves: passes.append((it, value, moves)),
    )
    model = ClassBigramModel.estimate(corpus, class_map, args.alpha)
    report.summary.update(passes=len(passes), objective=objective_value(model, corpus, objective))
    report.columns = ["word", "class"]
    report.rows = [[vocab.word_of(w), class_map.assignment[w]] for w in vocab.content_ids]


def _experiment_inputs(args):
    if args.demo:
        if args.test or args.model or args.sim:
            raise UsageError("--demo builds its own data; drop the test/--model/--sim arguments")
        demo = make_demo(DemoConfig(seed=args.seed))
        decode_k = demo.config.decode_nb_simil if args.nbsimil is None else args.nbsimil
        channel = demo.channel if args.sigma is None else AcousticChannel(demo.sim, args.sigma, args.seed)
        right = args.right_context or demo.config.right_context
        args.temperature = demo.config.temperature
        return _scoring_model(args, demo.model), channel, demo.test, decode_k, right
    if not (args.test and args.model) or args.sigma is None:
        raise UsageError("need a test corpus, --model and --sigma (or use --demo)")
    model = load_model(args.model)
    test = _test_corpus(args.test, model.vocab)
    channel = AcousticChannel(_similarity(args, model.vocab), args.sigma, args.seed)
    decode_k = 80 if args.nbsimil is None else args.nbsimil
    return _scoring_model(args, model), channel, test, decode_k, args.right_context


def _run_experiment(args, report: Report):
    model, channel, test, decode_k, right = _experiment_inputs(args)
    result = run_experiment(model, channel, test, args.measures, decode_k, form=args.form, right_context=right)
    report.config.update(sigma=channel.noise_sigma, nbsimil=decode_k, right_context=right, temperature=args.temperature)
    report.summary.update(utterances=len(test), overall_accuracy=result.overall_accuracy)
    return result


def cmd_simulate(args, report: Report) -> None:
    result = _run_experiment(args, report)
    report.columns = ["utt-id", "positions", "accuracy", "ppl"] + [f"prm@{k}" for k in args.measures if k]
    for i, uid in enumerate(result.utt_ids):
        prm = [result.measures[k][i] for k in args.measures if k]
        report.rows.append([uid, result.positions[i], result.accuracy[i], result.perplexity[i], *prm])


def cmd_experiment(args, report: Report) -> None:
    result = _run_experiment(args, report)
    report.columns = ["measure", "nb_simil", "r_s", "note"]
    for c in result.correlations:
        name = "perplexity" if c.nb_simil == 0 else f"prm@{c.nb_simil}"
        r = None if c.r_s is None else f"{c.r_s:.4f}"
        report.rows.append([name, c.nb_simil, r, c.reason or "-"])


COMMANDS = {
    "train": cmd_train,
    "ppl": cmd_ppl,
    "prm": cmd_prm,
    "sim-matrix": cmd_sim_matrix,
    "correlate": cmd_correlate,
    "cluster": cmd_cluster,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
}


def dispatch(args: argparse.Namespace) -> Report:
    report = Report(args.command, _resolved_config(args))
    COMMANDS[args.command](args, report)
    return report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        text = dispatch(args).render(args.format)
    except UsageError as exc:
        print(f"{TOOL} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrmError, OSError) as exc:
        print(f"{TOOL} {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"{TOOL} {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK
