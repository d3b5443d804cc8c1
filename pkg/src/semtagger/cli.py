"""Command line front end: train, eval, tag, replicate.

Exit codes: 0 on success, 1 for data or model errors (parse failures, unknown
tags, bad checkpoints, I/O problems), 2 for bad invocations (argparse usage
errors).
"""

import argparse
import logging
import os
import sys
from dataclasses import replace

from .errors import ConfigError, SemtaggerError
from .model import (MODE_EXTERNAL, MODE_INTERNAL, load_checkpoint, tag_tokens,
                    tag_vectors)
from .trainer import (ExperimentConfig, encode_corpus, encode_embedded,
                      evaluate, evaluate_meta, load_experiment_configs,
                      run_experiment, experiment_grid)
from .data import read_context_embeddings, read_corpus

logger = logging.getLogger("semtagger")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="training corpus, two-column TSV")
    p.add_argument("--val-corpus",
                   help="held-out TSV; when absent a seeded split is used")
    p.add_argument("--val-fraction", type=float, default=0.1,
                   help="fraction split off for validation (default 0.1)")
    p.add_argument("--embeddings",
                   help="precomputed contextual-embedding file (external mode)")
    p.add_argument("--min-freq", type=int, default=1,
                   help="tokens rarer than this map to <unk> (default 1)")
    p.add_argument("--meta-tags",
                   help="optional 'semtag<TAB>meta-tag' map for coarse accuracy")


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    # default None so explicit flags can be told apart from defaults and
    # override a config selected via --config/--experiment
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--lr", type=float, help="base learning rate")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--emb-dim", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--clip-norm", type=float,
                   help="global gradient-norm clip (off when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semtagger",
        description="LSTM-CRF semantic tagger: train, evaluate, tag, replicate.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true",
                        help="suppress per-epoch progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[common],
                           help="train a tagger and write artifacts")
    _add_data_flags(train)
    _add_hyper_flags(train)
    train.add_argument("--config", help="INI file with [experiment N] sections")
    train.add_argument("--experiment", type=int,
                       help="pick a row from --config or the built-in grid")
    train.add_argument("--out", default=".",
                       help="directory for curves.csv and checkpoint.json")
    train.set_defaults(func=cmd_train, parser=train)

    ev = sub.add_parser("eval", parents=[common],
                        help="score a checkpoint against a gold file")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--corpus", help="gold TSV (token-input models)")
    ev.add_argument("--embeddings", help="gold embedding file (vector models)")
    ev.set_defaults(func=cmd_eval, parser=ev)

    tag = sub.add_parser("tag", parents=[common],
                         help="tag raw text (or embedded sentences)")
    tag.add_argument("--checkpoint", required=True)
    tag.add_argument("--input",
                     help="file of sentences, one per line (default stdin)")
    tag.add_argument("--output", help="where to write TSV (default stdout)")
    tag.add_argument("--embeddings",
                     help="embedding file to tag (vector models)")
    tag.set_defaults(func=cmd_tag, parser=tag)

    rep = sub.add_parser("replicate", parents=[common],
                         help="run the built-in experiment grid end to end")
    _add_data_flags(rep)
    rep.add_argument("--config", help="INI file replacing the built-in grid")
    rep.add_argument("--experiments", default="all",
                     help="comma-separated ids, e.g. '1,3,7' (default all)")
    rep.add_argument("--seed", type=int, help="override every row's seed")
    rep.add_argument("--out", default="replication",
                     help="directory; one subdirectory per experiment")
    rep.set_defaults(func=cmd_replicate, parser=rep)

    return parser


def _resolve_train_config(args) -> ExperimentConfig:
    if args.config:
        if args.experiment is None:
            args.parser.error("--config requires --experiment to pick a section")
        configs = load_experiment_configs(args.config)
        if args.experiment not in configs:
            raise ConfigError(
                f"experiment {args.experiment} not found in {args.config}")
        base = configs[args.experiment]
    elif args.experiment is not None:
        grid = experiment_grid()
        if args.experiment not in grid:
            args.parser.error(
                f"--experiment must be one of {sorted(grid)} (or pass --config)")
        base = grid[args.experiment]
    else:
        base = ExperimentConfig()

    overrides = {}
    for flag, field in (("optimizer", "optimizer"), ("epochs", "epochs"),
                        ("batch_size", "batch_size"), ("emb_dim", "emb_dim"),
                        ("hidden_dim", "hidden_dim"), ("lr", "base_lr"),
                        ("seed", "seed"), ("clip_norm", "clip_norm")):
        value = getattr(args, flag)
        if value is not None:
            overrides[field] = value
    if args.embeddings and base.embedding_mode == MODE_INTERNAL:
        overrides["embedding_mode"] = MODE_EXTERNAL
    return replace(base, **overrides) if overrides else base


def cmd_train(args) -> int:
    config = _resolve_train_config(args)
    if config.embedding_mode == MODE_INTERNAL and not args.corpus:
        args.parser.error("--corpus is required in internal embedding mode")
    if config.embedding_mode == MODE_EXTERNAL and not args.embeddings:
        args.parser.error("--embeddings is required in external embedding mode")

    history = run_experiment(
        config, corpus=args.corpus, val_corpus=args.val_corpus,
        embeddings=args.embeddings, val_fraction=args.val_fraction,
        min_freq=args.min_freq, meta_tags_path=args.meta_tags,
        out_dir=args.out,
    )
    last = history[-1]
    print(f"final epoch {last.epoch}: train_acc={last.train_acc:.6g} "
          f"val_acc={last.val_acc:.6g} val_loss={last.val_loss:.6g}")
    print(f"wrote {os.path.join(args.out, 'curves.csv')} and "
          f"{os.path.join(args.out, 'checkpoint.json')}")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if model.mode == MODE_INTERNAL:
        if not args.corpus:
            args.parser.error("this checkpoint takes token input; pass --corpus")
        data = encode_corpus(read_corpus(args.corpus), model.vocab, model.tags)
    else:
        if not args.embeddings:
            args.parser.error(
                "this checkpoint takes vector input; pass --embeddings")
        embedded = read_context_embeddings(args.embeddings)
        dim = embedded[0].vectors.shape[1]
        if dim != model.encoder.input_dim:
            raise ConfigError(f"embedding file has dim {dim} but the model "
                              f"expects {model.encoder.input_dim}")
        data = encode_embedded(embedded, model.tags)
    loss, acc = evaluate(model, data)
    print(f"loss={loss:.6g}")
    print(f"accuracy={acc:.6g}")
    meta_acc = evaluate_meta(model, data)
    if meta_acc is not None:
        print(f"meta_accuracy={meta_acc:.6g}")
    return 0


def cmd_tag(args) -> int:
    model = load_checkpoint(args.checkpoint)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if model.mode == MODE_EXTERNAL:
            if not args.embeddings:
                args.parser.error(
                    "this checkpoint takes vector input; pass --embeddings")
            blocks = ((s.tokens, tag_vectors(model, s.vectors))
                      for s in read_context_embeddings(args.embeddings))
        else:
            stream = (open(args.input, encoding="utf-8") if args.input
                      else sys.stdin)
            blocks = ((tokens, tag_tokens(model, tokens))
                      for tokens in (line.split() for line in stream) if tokens)
        first = True
        for tokens, tags in blocks:
            if not first:
                out.write("\n")
            for tok, tg in zip(tokens, tags):
                out.write(f"{tok}\t{tg}\n")
            first = False
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_replicate(args) -> int:
    grid = (load_experiment_configs(args.config) if args.config
            else experiment_grid())
    if args.experiments.strip().lower() == "all":
        ids = sorted(grid)
        explicit = False
    else:
        try:
            ids = [int(x) for x in args.experiments.split(",") if x.strip()]
        except ValueError:
            args.parser.error(f"bad --experiments value {args.experiments!r}")
        missing = [n for n in ids if n not in grid]
        if missing:
            args.parser.error(f"unknown experiment ids {missing}; "
                              f"available: {sorted(grid)}")
        explicit = True

    needs_corpus = [n for n in ids
                    if grid[n].embedding_mode == MODE_INTERNAL]
    if needs_corpus and not args.corpus:
        args.parser.error(f"experiments {needs_corpus} need --corpus")

    finals = {}
    for n in ids:
        config = grid[n]
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if config.embedding_mode == MODE_EXTERNAL and not args.embeddings:
            if explicit:
                args.parser.error(f"experiment {n} needs --embeddings")
            logger.warning("skipping experiment %d: no --embeddings given", n)
            continue
        out_dir = os.path.join(args.out, f"experiment{n}")
        history = run_experiment(
            config,
            corpus=args.corpus if config.embedding_mode == MODE_INTERNAL else None,
            embeddings=(args.embeddings
                        if config.embedding_mode == MODE_EXTERNAL else None),
            val_corpus=args.val_corpus, val_fraction=args.val_fraction,
            min_freq=args.min_freq, meta_tags_path=args.meta_tags,
            out_dir=out_dir,
        )
        finals[n] = history[-1]

    for n, m in finals.items():
        c = grid[n]
        print(f"experiment {n}: optimizer={c.optimizer} batch={c.batch_size} "
              f"emb_dim={c.emb_dim} hidden_dim={c.hidden_dim} "
              f"val_acc={m.val_acc:.6g} val_loss={m.val_loss:.6g}")
    if not finals:
        print("no experiments were run")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
    )
    try:
        return args.func(args)
    except SemtaggerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
