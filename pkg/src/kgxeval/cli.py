"""The ``kgx`` command-line tool.

Thin shell over the library: every subcommand maps onto module operations and
a report produced here is byte-identical to calling the library with the same
configuration.  Machine-readable artifacts go to files; a short human summary
goes to stdout.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from kgxeval import adapters, analysis, data, debug, models, sysout
from kgxeval.buckets import BUILTIN_KINDS
from kgxeval.confidence import CiConfig
from kgxeval.errors import DataError, KgxError
from kgxeval.metrics import TieStrategy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="kgx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a synthetic dataset", add_help=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--entities", type=int, default=120)
    p.add_argument("--relations", type=int, default=6)
    p.add_argument("--triples", type=int, default=2000)
    p.add_argument("--symmetric-fraction", type=float, default=0.5)
    p.add_argument("--cluster-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train an embedding model")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--model-kind", required=True, choices=models.MODEL_KINDS)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--optimizer", choices=("sgd", "adagrad"), default="adagrad")
    p.add_argument("--loss", choices=("bce", "margin"), default="bce")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("predict", help="rank test queries into a system output")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--train", help="filter source + feature resources")
    p.add_argument("--valid", help="extra filter source")
    p.add_argument("--sysout", required=True, help="output file")
    p.add_argument("--system-name")
    p.add_argument("--dataset-name", default="dataset")
    p.add_argument("--directions", choices=("tail", "head", "both"), default="both")
    p.add_argument("--tie", choices=[t.value for t in TieStrategy],
                   default=TieStrategy.REALISTIC.value)
    p.add_argument("--raw", action="store_true",
                   help="rank without filtering known positives")
    p.add_argument("--top-k", type=int, default=0)
    p.add_argument("--features", help="comma list of built-in features to attach")
    p.add_argument("--symmetric-file")
    p.add_argument("--type-map")

    p = sub.add_parser("ingest", help="validate/convert a prediction file")
    p.add_argument("--format", choices=("native", "pykeen", "libkge"),
                   default="native")
    p.add_argument("--input", required=True)
    p.add_argument("--system-name")
    p.add_argument("--dataset-name")
    p.add_argument("--rank-basis", choices=("filtered", "raw"), default="filtered")
    p.add_argument("--out", help="write the canonical native file here")
    p.add_argument("--store", help="also put into this store root")

    p = sub.add_parser("eval", help="bucketized analysis of a system output")
    p.add_argument("--sysout", required=True)
    p.add_argument("--report", required=True, help="output report file")
    p.add_argument("--features", help="comma list (default: declared custom features)")
    p.add_argument("--metrics", help="comma list (default: hits@1,hits@5,hits@10,mrr,mr)")
    p.add_argument("--train", help="train TSV for stats-backed built-ins")
    p.add_argument("--symmetric-file")
    p.add_argument("--type-map")
    p.add_argument("--ci", choices=("bootstrap", "ttest", "none"), default="bootstrap")
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--ci-resamples", type=int, default=1000)
    p.add_argument("--ci-seed", type=int, default=0)

    p = sub.add_parser("compare", help="compare analysis reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--metric", default="mrr")
    p.add_argument("--out", help="output comparison report file")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--store", required=True)
    p.add_argument("--addr", default="127.0.0.1:8399")
    p.add_argument("--ui", help="serve this directory as the web UI")

    p = sub.add_parser("debug", help="symmetry-violation debugging session")
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--relation")
    p.add_argument("--symmetric-file",
                   help="scope violation mining to the relations listed here")
    p.add_argument("--strategy", choices=("naive", "in-danger"), default="in-danger",
                   help="which debugged model --model-out saves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.add_argument("--debug-set-size", type=int, default=10)
    p.add_argument("--in-danger-size", type=int, default=20)
    p.add_argument("--finetune-lr", type=float, default=0.01)
    p.add_argument("--epoch-cap", type=int, default=500)
    p.add_argument("--model-out")
    p.add_argument("--sysout-dir", help="emit per-variant system outputs here")

    return parser


def _csv(value: str | None) -> list[str] | None:
    if not value:
        return None
    return [part for part in value.split(",") if part]


def _load_splits(args, need_train: bool = True):
    vocab = data.Vocabulary()
    train = data.load_tsv(args.train, vocab, split="train") if args.train else None
    if need_train and train is None:
        raise DataError("--train is required here")
    valid = data.load_tsv(args.valid, vocab, split="valid") \
        if getattr(args, "valid", None) else None
    test = data.load_tsv(args.test, vocab, split="test") \
        if getattr(args, "test", None) else None
    return vocab, train, valid, test


def _resources(args, train: data.TripleSet | None) -> analysis.FeatureResources:
    stats = data.compute_stats(train) if train is not None and len(train) else None
    symmetric = data.read_symmetric_relations(args.symmetric_file) \
        if getattr(args, "symmetric_file", None) else None
    type_map = data.read_type_map(args.type_map) \
        if getattr(args, "type_map", None) else None
    return analysis.FeatureResources(
        stats=stats, symmetric_relations=symmetric, type_map=type_map
    )


def _cmd_synth(args) -> int:
    config = data.SyntheticConfig(
        n_entities=args.entities,
        n_relations=args.relations,
        n_triples=args.triples,
        symmetric_fraction=args.symmetric_fraction,
        seed=args.seed,
        cluster_size=args.cluster_size,
    )
    ds = data.generate_synthetic(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data.save_tsv(ds.train, out / "train.tsv")
    data.save_tsv(ds.valid, out / "valid.tsv")
    data.save_tsv(ds.test, out / "test.tsv")
    data.write_symmetric_relations(ds.symmetric_relations, out / "symmetric_relations.txt")
    (out / "meta.json").write_text(json.dumps({
        "n_entities": config.n_entities,
        "n_relations": config.n_relations,
        "n_triples": config.n_triples,
        "symmetric_fraction": config.symmetric_fraction,
        "seed": config.seed,
        "train": len(ds.train), "valid": len(ds.valid), "test": len(ds.test),
        "symmetric_relations": sorted(ds.symmetric_relations),
    }, indent=2) + "\n", encoding="utf-8")
    print(f"synth: wrote {len(ds.train)} train / {len(ds.valid)} valid / "
          f"{len(ds.test)} test triples to {out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    _vocab, train_set, valid_set, _ = _load_splits(args)
    config = models.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size,
        negatives_per_positive=args.negatives, learning_rate=args.lr,
        dim=args.dim, seed=args.seed, optimizer=args.optimizer,
        margin=args.margin, loss=args.loss,
    )
    model = models.train(args.model_kind, config, train_set, valid_set)
    models.save_model(model, args.model)
    print(f"train: {args.model_kind} dim={args.dim} epochs={args.epochs} "
          f"seed={args.seed} -> {args.model}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = models.load_model(args.model)
    vocab = model.vocab
    test = data.load_tsv(args.test, vocab, split="test")
    filter_triples: list[data.Triple] = list(test.triples)
    train_set = None
    if args.train:
        train_set = data.load_tsv(args.train, vocab, split="train")
        filter_triples.extend(train_set.triples)
    if args.valid:
        filter_triples.extend(data.load_tsv(args.valid, vocab, split="valid").triples)
    out = models.evaluate_to_system_output(
        model, test,
        filter_triples=None if args.raw else filter_triples,
        directions=args.directions,
        tie=TieStrategy(args.tie),
        system_name=args.system_name or Path(args.model).stem,
        dataset_name=args.dataset_name,
        include_top_k=args.top_k,
    )
    feature_names = _csv(args.features)
    if feature_names:
        resources = _resources(args, train_set)
        for name in feature_names:
            if name not in BUILTIN_KINDS:
                raise DataError(f"--features only accepts built-ins here, got {name!r}")
            spec, assignment = analysis.resolve_feature(out, name, resources)
            fdef = sysout.FeatureDef(
                name=name, dtype="string",
                description=f"built-in {name} bucketization",
                num_buckets=max(len(spec.labels), 1),
            )
            out = sysout.apply_bucketization_function(
                out, fdef, lambda rec: assignment.by_record[rec.id]
            )
    sysout.emit_system_output(out, args.sysout)
    print(f"predict: {len(out.records)} records -> {args.sysout}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    if args.format == "native":
        out = sysout.parse_system_output(args.input)
    else:
        meta = adapters.AdapterMeta(
            system_name=args.system_name or Path(args.input).stem,
            dataset_name=args.dataset_name or "dataset",
            rank_basis=args.rank_basis,
        )
        importer = adapters.import_pykeen if args.format == "pykeen" \
            else adapters.import_libkge
        out = importer(args.input, meta)
    if not args.out and not args.store:
        raise _UsageError("ingest needs --out and/or --store")
    if args.out:
        sysout.emit_system_output(out, args.out)
        print(f"ingest: {len(out.records)} records -> {args.out}")
    if args.store:
        from kgxeval.store import SystemStore

        system_id = SystemStore(args.store).put(out)
        print(f"ingest: stored as {system_id}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    s = sysout.parse_system_output(args.sysout)
    train_set = None
    if args.train:
        train_set = data.load_tsv(args.train, split="train")
    report = analysis.single_analysis(
        s,
        features=_csv(args.features),
        metrics=_csv(args.metrics),
        ci=CiConfig(method=args.ci, level=args.ci_level,
                    n_resamples=args.ci_resamples, seed=args.ci_seed),
        resources=_resources(args, train_set),
    )
    Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"eval: {report.system_name} on {report.dataset_name} "
          f"({report.record_count} records, {report.rank_basis} ranks)")
    for name in report.metrics:
        print(f"  overall {name:<8} {report.overall[name]:.6f}")
    for fname, buckets in report.features.items():
        print(f"  feature {fname}:")
        for b in buckets:
            vals = " ".join(f"{m}={b.values[m]:.4f}" for m in report.metrics)
            print(f"    {b.label:<24} n={b.n:<6} {vals}")
    print(f"eval: report -> {args.report}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = [
        analysis.SingleAnalysisReport.from_json(Path(path).read_text(encoding="utf-8"))
        for path in args.reports
    ]
    comparison = analysis.compare_systems(reports, args.metric)
    if args.out:
        Path(args.out).write_text(comparison.to_json() + "\n", encoding="utf-8")
    print(f"compare: {len(reports)} systems by {comparison.metric}")
    for name in comparison.systems:
        acc = comparison.per_system[name]
        print(f"  {name:<24} rank={comparison.overall_ranking[name]} "
              f"value={comparison.overall_values[name]:.6f} "
              f"b_eq={acc['b_eq']:.3f} b_neq={acc['b_neq']:.3f}")
    if args.out:
        print(f"compare: report -> {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from kgxeval.server import serve
    from kgxeval.store import SystemStore

    host, _, port_text = args.addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise _UsageError(f"--addr must be HOST:PORT, got {args.addr!r}")
    serve(SystemStore(args.store), host=host, port=int(port_text), ui_dir=args.ui)
    return EXIT_OK


def _cmd_debug(args) -> int:
    model = models.load_model(args.model)
    vocab = model.vocab
    train_set = data.load_tsv(args.train, vocab, split="train")
    test_set = data.load_tsv(args.test, vocab, split="test")
    config = debug.DebugConfig(
        debug_set_size=args.debug_set_size,
        in_danger_size=args.in_danger_size,
        finetune_lr=args.finetune_lr,
        epoch_cap=args.epoch_cap,
        seed=args.seed,
    )
    relations = None
    if args.symmetric_file:
        labels = data.read_symmetric_relations(args.symmetric_file)
        relations = frozenset(
            vocab.relation_id(lb) for lb in labels if vocab.has_relation(lb)
        )
    result = debug.run_debug_session(
        model, train_set, test_set, relation=args.relation, config=config,
        relations=relations,
    )
    report = result.report
    Path(args.report).write_text(
        json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    print(f"debug: relation {report.relation!r} "
          f"({report.debug_set_size} debug / {report.debug_test_size} test / "
          f"{report.in_danger_count} in-danger)")
    for variant in debug.VARIANTS:
        row = report.cells[variant]["debugging-test"]
        orig = report.cells[variant]["original-test"]
        print(f"  {variant:<10} debug-test hits@1={row['hits@1']:.4f} "
              f"mrr={row['mrr']:.4f} | original-test hits@1={orig['hits@1']:.4f}")
    if args.model_out:
        models.save_model(result.models[args.strategy], args.model_out)
        print(f"debug: {args.strategy} model -> {args.model_out}")
    if args.sysout_dir:
        out_dir = Path(args.sysout_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for variant, s in result.system_outputs.items():
            sysout.emit_system_output(s, out_dir / f"{variant}.jsonl")
        print(f"debug: system outputs -> {out_dir}")
    print(f"debug: report -> {args.report}")
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "ingest": _cmd_ingest,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "serve": _cmd_serve,
    "debug": _cmd_debug,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"kgx: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"kgx: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"kgx: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KgxError as exc:
        print(f"kgx: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit:
        raise
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
