#!/usr/bin/env python3
"""
FakeScope CLI
Synthesize, extract, correlate, train, predict and evaluate fake-account classifiers
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

import pandas as pd

from account_records import (FEATURE_SETS, SchemaError, Scheme, examples_to_matrix, load_accounts_jsonl,
                             load_feature_csv, load_labels_csv, write_feature_csv)
from benchmark_engine import SplitError, benchmark_all, write_report
from correlation_analysis import write_correlation_outputs
from feature_extractor import KeywordConfig, label_examples, load_keyword_config
from model_pipeline import (ALGORITHMS, ModelFormatError, TrainingError, load_model, parse_algorithms,
                            save_model, train_from_examples)
from report_io import write_json
from run_config import RunConfig, load_run_config
from synthetic_accounts import default_profiles, generate_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3

# Flags that are required once --config has been merged in
REQUIRED = {
    'synth': ('out',),
    'extract': ('accounts', 'labels', 'out'),
    'correlate': ('features', 'out'),
    'train': ('features', 'out'),
    'predict': ('model', 'features', 'out'),
    'evaluate': ('features', 'out'),
}


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status(message: str, quiet: bool = False):
    if not quiet:
        print(message, file=sys.stderr)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='JSON run configuration (flags override it)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    parser.add_argument('--jobs', dest='n_jobs', type=int, help='Parallel workers (default 1)')


def _add_hyperparams(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('hyperparameters')
    group.add_argument('--n-trees', type=int, help='Random forest size (default 100)')
    group.add_argument('--features-per-split', type=int, help='Forest features per split (default floor(sqrt(d)))')
    group.add_argument('--max-depth', type=int, help='Tree depth limit (default unlimited)')
    group.add_argument('--min-samples-split', type=int, help='Smallest node that may split (default 2)')
    group.add_argument('--no-bootstrap', dest='bootstrap', action='store_const', const=False,
                       help='Train forest trees on the full training set')
    group.add_argument('--k', type=int, help='KNN neighbors (default 5)')
    group.add_argument('--C', dest='C', type=float, help='SVM box constraint (default 1.0)')
    group.add_argument('--tol', type=float, help='SMO stopping gap (default 1e-3)')
    group.add_argument('--max-passes', type=int, help='SMO step budget in multiples of n (default 20)')
    group.add_argument('--degree', type=int, help='Polynomial kernel degree (default 3)')
    group.add_argument('--gamma', type=float, help='Kernel gamma (default: data-driven rule)')
    group.add_argument('--coef0', type=float, help='Polynomial kernel offset (default 1.0)')


def build_parser() -> CliParser:
    parser = CliParser(prog='fakescope', description='Fake-account classification toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', help='Generate a labeled synthetic account dataset')
    p.add_argument('--per-class', type=int, help='Accounts per class (default 700)')
    p.add_argument('--seed', type=int, help='Master seed (default 42)')
    p.add_argument('--out', help='Output directory')
    _add_common(p)

    p = sub.add_parser('extract', help='Compute the feature CSV from accounts and labels')
    p.add_argument('--accounts', help='Accounts JSONL')
    p.add_argument('--labels', help='account_id,label CSV')
    p.add_argument('--keywords', help='Keyword config JSON (default built-in lists)')
    p.add_argument('--out', help='Feature CSV to write')
    _add_common(p)

    p = sub.add_parser('correlate', help='Correlation matrix and per-class summaries')
    p.add_argument('--features', help='Feature CSV')
    p.add_argument('--top-k', type=int, help='Top |r| pairs to list (default 5)')
    p.add_argument('--out', help='Output directory')
    _add_common(p)

    p = sub.add_parser('train', help='Train and save one model')
    p.add_argument('--features', help='Feature CSV')
    p.add_argument('--scheme', help='2 or 4 (default 2)')
    p.add_argument('--algo', dest='algorithm', choices=list(ALGORITHMS), help='Algorithm (default rf)')
    p.add_argument('--feature-set', choices=list(FEATURE_SETS), help='Feature columns (default all)')
    p.add_argument('--seed', type=int, help='Training seed (default 42)')
    p.add_argument('--out', help='Model file to write')
    _add_hyperparams(p)
    _add_common(p)

    p = sub.add_parser('predict', help='Predict with a saved model')
    p.add_argument('--model', help='Model file')
    p.add_argument('--features', help='Feature CSV')
    p.add_argument('--out', help='Prediction CSV to write')
    _add_common(p)

    p = sub.add_parser('evaluate', help='Benchmark algorithms under both schemes')
    p.add_argument('--features', help='Feature CSV')
    p.add_argument('--schemes', help='Comma-separated schemes (default 2,4)')
    p.add_argument('--algos', dest='algorithms', help="'all' or comma-separated algorithms (default all)")
    p.add_argument('--feature-set', choices=list(FEATURE_SETS), help='Feature columns (default all)')
    p.add_argument('--test-fraction', type=float, help='Hold-out fraction per class (default 0.25)')
    p.add_argument('--folds', type=int, help='Also run stratified k-fold CV')
    p.add_argument('--seed', type=int, help='Split and training seed (default 42)')
    p.add_argument('--out', help='Output directory')
    _add_hyperparams(p)
    _add_common(p)

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < --config file < flags"""
    base = load_run_config(args.config) if args.config else RunConfig()
    overrides = {k: v for k, v in vars(args).items() if k not in ('config', 'verbose', 'quiet')}
    return base.with_overrides(overrides)


def _sidecar(path: str, config: RunConfig) -> str:
    return write_json(f"{path}.run.json", config.to_dict())


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def cmd_synth(config: RunConfig, quiet: bool) -> int:
    dataset = generate_dataset(default_profiles(), config.per_class, config.seed, config.hyperparams.n_jobs)
    accounts_path, labels_path = dataset.write(config.out)
    write_json(os.path.join(config.out, 'run.json'), config.to_dict())
    _status(f"✅ Wrote {len(dataset.accounts)} accounts: {accounts_path}, {labels_path}", quiet)
    return EXIT_OK


def cmd_extract(config: RunConfig, quiet: bool) -> int:
    keywords = load_keyword_config(config.keywords) if config.keywords else KeywordConfig()
    accounts = load_accounts_jsonl(config.accounts)
    labels = load_labels_csv(config.labels)
    examples = label_examples(accounts, labels, keywords, config.hyperparams.n_jobs)
    _ensure_parent(config.out)
    write_feature_csv(examples, config.out)
    _sidecar(config.out, config)
    _status(f"✅ Extracted features for {len(examples)} accounts: {config.out}", quiet)
    return EXIT_OK


def cmd_correlate(config: RunConfig, quiet: bool) -> int:
    examples = load_feature_csv(config.features)
    paths = write_correlation_outputs(examples, config.out, config.top_k)
    write_json(os.path.join(config.out, 'run.json'), config.to_dict())
    _status(f"✅ Correlation analysis written: {paths['correlation_md']}", quiet)
    return EXIT_OK


def cmd_train(config: RunConfig, quiet: bool) -> int:
    examples = load_feature_csv(config.features)
    scheme = Scheme.parse(config.scheme)
    pipeline = train_from_examples(examples, scheme, config.algorithm, config.hyperparams,
                                   config.seed, config.feature_set)
    _ensure_parent(config.out)
    save_model(pipeline, config.out)
    _sidecar(config.out, config)
    _status(f"✅ Trained {ALGORITHMS[config.algorithm]} ({scheme.value}): {config.out}", quiet)
    return EXIT_OK


def cmd_predict(config: RunConfig, quiet: bool) -> int:
    pipeline = load_model(config.model)
    examples = load_feature_csv(config.features)
    pred = pipeline.predict_examples(examples)
    _, truth = examples_to_matrix(examples, pipeline.scheme, pipeline.feature_set)
    labels = pipeline.labels
    df = pd.DataFrame({
        'account_id': [ex.account_id for ex in examples],
        'truth': [labels[i] for i in truth],
        'pred': [labels[i] for i in pred],
    }, columns=['account_id', 'truth', 'pred'])
    _ensure_parent(config.out)
    df.to_csv(config.out, index=False, lineterminator='\n')
    _sidecar(config.out, config)
    _status(f"✅ Wrote {len(df)} predictions: {config.out}", quiet)
    return EXIT_OK


def cmd_evaluate(config: RunConfig, quiet: bool) -> int:
    examples = load_feature_csv(config.features)
    report = benchmark_all(examples, parse_algorithms(config.algorithms), config.scheme_list(),
                           config.test_fraction, config.seed, config.hyperparams,
                           config.feature_set, config.folds)
    paths = write_report(report, config.out)
    write_json(os.path.join(config.out, 'run.json'), config.to_dict())
    _status(f"✅ Benchmark report written: {paths['markdown']}", quiet)
    return EXIT_OK


COMMANDS = {
    'synth': cmd_synth,
    'extract': cmd_extract,
    'correlate': cmd_correlate,
    'train': cmd_train,
    'predict': cmd_predict,
    'evaluate': cmd_evaluate,
}


def _configure_logging(verbose: bool, quiet: bool):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s',
                        stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    _configure_logging(args.verbose, args.quiet)

    try:
        config = resolve_config(args)
    except (OSError, ValueError) as e:
        print(f"❌ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    missing = [name for name in REQUIRED[config.command] if getattr(config, name) is None]
    if missing:
        print(f"❌ Missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}",
              file=sys.stderr)
        return EXIT_USAGE
    logger.debug("Resolved configuration: %s", config.to_dict())

    try:
        return COMMANDS[config.command](config, args.quiet)
    except TrainingError as e:
        print(f"❌ Training failed: {e}", file=sys.stderr)
        return EXIT_TRAINING
    except (SchemaError, SplitError, ModelFormatError) as e:
        print(f"❌ Invalid input: {e}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as e:
        print(f"❌ {config.command} failed: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(main())
