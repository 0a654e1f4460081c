"""
taskseer - Main Entry Point
Cluster-trace failure prediction: ingest HTCondor history, categorize
submissions, build datasets, train and evaluate a random forest, sample
live processes from procfs and generate synthetic traces
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from dotenv import load_dotenv

from database import DATASET_FORMAT
from forest import MODEL_FORMAT
from pipeline import EVALUATION_SPLITS, PipelineRunner
from procfs_sampler import DEFAULT_INTERVAL_MS, STREAM_FORMAT
from settings import load_config
from utils.errors import TaskseerError, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

VERSION_TEXT = f"""taskseer
  model format:   {MODEL_FORMAT}
  dataset format: {DATASET_FORMAT}
  sample stream:  {STREAM_FORMAT}"""


class TaskseerArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting"""

    def error(self, message: str):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


class VersionAction(argparse.Action):
    def __init__(self, option_strings, dest=argparse.SUPPRESS, default=argparse.SUPPRESS, help=None):
        super().__init__(option_strings, dest=dest, default=default, nargs=0, help=help)

    def __call__(self, parser, namespace, values, option_string=None):
        print(VERSION_TEXT)
        parser.exit(EXIT_OK)


def _add_forest_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('forest')
    group.add_argument('--trees', type=int, dest='n_trees', help='Number of trees (default 50)')
    group.add_argument('--max-depth', type=int, help='Maximum tree depth (default 50)')
    group.add_argument('--mtries', type=int, help='Candidate features per split (default 5)')
    group.add_argument('--nbins-numeric', type=int, help='Numeric histogram bins (default 1000)')
    group.add_argument('--nbins-categorical', type=int, help='Categorical bins (default 1024)')
    group.add_argument('--min-rows', type=int, dest='min_rows_per_leaf', help='Minimum rows per leaf (default 1)')
    group.add_argument('--folds', type=int, help='Cross-validation folds (default 5)')
    group.add_argument('--sample-rate', type=float, help='Per-tree bootstrap size as a fraction of rows')


def build_parser() -> argparse.ArgumentParser:
    parser = TaskseerArgumentParser(
        prog='taskseer',
        description='Failure prediction toolkit for HTCondor cluster traces',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate a synthetic trace and its ledger
  python taskseer_main.py synth --spec synth.spec.example --seed 1 --out trace/

  # Ingest history files and print the breakdown tables
  python taskseer_main.py ingest trace/history_submit01.json trace/history_submit02.json --out tasks.jsonl
  python taskseer_main.py categorize --tasks tasks.jsonl --out reports/

  # Build a dataset, train, evaluate on the test split, cross-validate
  python taskseer_main.py dataset --tasks tasks.jsonl --out ds/ --seed 7
  python taskseer_main.py train --dataset ds/ --model forest.model --seed 7
  python taskseer_main.py evaluate --model forest.model --dataset ds/ --out eval/
  python taskseer_main.py --threads 8 cv --dataset ds/ --out cv/ --seed 7

  # Sample a running process tree every 500 ms
  python taskseer_main.py sample --pid 4242 --interval-ms 500 --out samples.jsonl
        """
    )
    parser.add_argument('--config', type=str, help='key=value config file')
    parser.add_argument('--threads', type=int, help='Worker threads (results do not depend on it)')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--version', action=VersionAction, help='Print model and dataset format versions')

    sub = parser.add_subparsers(dest='command', metavar='command')

    ingest = sub.add_parser('ingest', help='Parse condor_history JSON files into a task store')
    ingest.add_argument('histories', nargs='+', help='History files, optionally NODE=path')
    ingest.add_argument('--out', required=True, help='Output tasks.jsonl')
    ingest.add_argument('--since', help='Keep tasks completed at or after this time')
    ingest.add_argument('--until', help='Keep tasks completed at or before this time')

    categorize = sub.add_parser('categorize', help='Print submission and failure breakdown tables')
    categorize.add_argument('--tasks', required=True, help='Task store (tasks.jsonl)')
    categorize.add_argument('--out', help='Directory for the CSV tables')

    dataset = sub.add_parser('dataset', help='Build a labeled dataset from mixed-outcome submissions')
    dataset.add_argument('--tasks', required=True, help='Task store (tasks.jsonl)')
    dataset.add_argument('--out', required=True, help='Dataset directory')
    dataset.add_argument('--seed', type=int, help='Seed for split and fold assignment')
    dataset.add_argument('--min-tasks', type=int, help='Minimum tasks per submission (default 5)')
    dataset.add_argument('--ignore-columns', help='Comma-separated columns to leave out')
    dataset.add_argument('--folds', type=int, help='Cross-validation folds (default 5)')

    train = sub.add_parser('train', help='Train a forest on the Train split')
    train.add_argument('--dataset', required=True, help='Dataset directory')
    train.add_argument('--model', required=True, help='Output model file')
    train.add_argument('--metrics', help='Write validation metrics JSON here')
    train.add_argument('--seed', type=int, help='Forest seed')
    train.add_argument('--threshold', type=float, help='Decision threshold on p(Failed)')
    _add_forest_flags(train)

    evaluate = sub.add_parser('evaluate', help='Score a model; write metrics.json, roc.csv, importance.csv')
    evaluate.add_argument('--model', required=True, help='Model file')
    evaluate.add_argument('--dataset', required=True, help='Dataset directory')
    evaluate.add_argument('--out', default='.', help='Report directory (default: current)')
    evaluate.add_argument('--split', default='Test', choices=EVALUATION_SPLITS, help='Rows to score')
    evaluate.add_argument('--threshold', type=float, help='Decision threshold on p(Failed)')

    cv = sub.add_parser('cv', help='k-fold cross-validation')
    cv.add_argument('--dataset', required=True, help='Dataset directory')
    cv.add_argument('--out', required=True, help='Report directory')
    cv.add_argument('--seed', type=int, help='Forest and fold seed')
    cv.add_argument('--threshold', type=float, help='Decision threshold on p(Failed)')
    _add_forest_flags(cv)

    sample = sub.add_parser('sample', help='Poll a process tree from procfs until it exits')
    sample.add_argument('--pid', type=int, required=True, help='Target process id')
    sample.add_argument('--root', default='/proc', help='procfs root (default /proc)')
    sample.add_argument('--interval-ms', type=int, default=DEFAULT_INTERVAL_MS, help='Tick interval (>= 10)')
    sample.add_argument('--out', default='-', help='JSONL output file (default stdout)')
    sample.add_argument('--max-samples', type=int, help='Stop after this many samples')
    sample.add_argument('--snapshot', help='Write a once-at-start context snapshot here')

    synth = sub.add_parser('synth', help='Generate a synthetic trace with a ground-truth ledger')
    synth.add_argument('--spec', required=True, help='Synthetic trace spec file')
    synth.add_argument('--out', required=True, help='Output directory')
    synth.add_argument('--seed', type=int, help='Overrides SEED from the spec file')

    return parser


COMMAND_ARGUMENTS: Dict[str, Callable[[argparse.Namespace], Dict[str, Any]]] = {
    'ingest': lambda a: {'histories': a.histories, 'out': a.out, 'since': a.since, 'until': a.until},
    'categorize': lambda a: {'tasks_path': a.tasks, 'out_dir': a.out},
    'dataset': lambda a: {'tasks_path': a.tasks, 'out_dir': a.out},
    'train': lambda a: {'dataset_dir': a.dataset, 'model_path': a.model, 'metrics_path': a.metrics},
    'evaluate': lambda a: {'model_path': a.model, 'dataset_dir': a.dataset, 'out_dir': a.out, 'split': a.split},
    'cv': lambda a: {'dataset_dir': a.dataset, 'out_dir': a.out},
    'sample': lambda a: {'pid': a.pid, 'out': a.out, 'root': a.root, 'interval_ms': a.interval_ms,
                         'max_samples': a.max_samples, 'snapshot_path': a.snapshot},
    'synth': lambda a: {'spec_path': a.spec, 'out_dir': a.out, 'seed': a.seed},
}

FOREST_FLAGS = ('n_trees', 'max_depth', 'mtries', 'nbins_numeric', 'nbins_categorical',
                'min_rows_per_leaf', 'folds', 'sample_rate')


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config fields set on the command line"""
    overrides: Dict[str, Any] = {
        'threads': args.threads,
        'threshold': getattr(args, 'threshold', None),
        'min_tasks': getattr(args, 'min_tasks', None),
        'forest': {name: getattr(args, name, None) for name in FOREST_FLAGS},
    }
    if args.command != 'synth':
        overrides['seed'] = getattr(args, 'seed', None)
    ignore = getattr(args, 'ignore_columns', None)
    if ignore is not None:
        overrides['ignore_columns'] = tuple(name.strip() for name in ignore.split(',') if name.strip())
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)

    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)

    if args.command is None:
        parser.print_help()
        logger.info("\nNo command specified. Use --help for usage information.")
        return EXIT_USAGE

    try:
        config = load_config(args.config, **config_overrides(args))
        runner = PipelineRunner(config)
        runner.run(args.command, **COMMAND_ARGUMENTS[args.command](args))
    except UsageError as e:
        logger.error(f"✗ {e}")
        return EXIT_USAGE
    except TaskseerError as e:
        logger.error(f"✗ {args.command} failed: {e}")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
