"""
Pipeline Runner
Runs one taskseer subcommand with the effective configuration and reports
what it produced
"""

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO, Union

from dotenv import dotenv_values

from categorize import (
    breakdown_report,
    group_by_submission,
    render_tables,
    tasks_per_submission,
    usage_table,
    write_report_csvs
)
from classad_ingest import filter_completion_window, ingest_files, parse_history_argument
from database import load_dataset, read_tasks, save_dataset, write_tasks
from dataset import (
    CLASS_NAMES,
    Dataset,
    DatasetError,
    Split,
    assign_folds,
    build_dataset,
    select_training_population,
    split_frame
)
from evaluate import (
    class_metrics,
    confusion_matrix,
    metrics_payload,
    roc_curve,
    write_importance_csv,
    write_metrics_json,
    write_roc_csv
)
from forest import (
    Forest,
    ForestConfig,
    cross_validate,
    load_model,
    predict_dataset,
    save_model,
    train,
    variable_importance
)
from procfs_sampler import MIN_INTERVAL_MS, SinkError, poll, snapshot
from settings import Config
from trace_synth import LEDGER_FILE, load_synth_spec, synth_trace
from utils.errors import UsageError
from utils.helpers import canonical_json

logger = logging.getLogger(__name__)

METRICS_FILE = 'metrics.json'
ROC_FILE = 'roc.csv'
IMPORTANCE_FILE = 'importance.csv'
CV_PREDICTIONS_FILE = 'cv_predictions.csv'

EVALUATION_SPLITS = ('Train', 'Valid', 'Test', 'all')


@contextmanager
def _open_sink(out: Union[str, Path]) -> Iterator[TextIO]:
    if str(out) == '-':
        yield sys.stdout
        return
    try:
        handle = open(out, 'w', encoding='utf-8', newline='\n')
    except OSError as e:
        raise SinkError(f"cannot open {out}: {e}") from e
    with handle:
        yield handle


class PipelineRunner:
    """Subcommand implementations sharing one validated Config"""

    def __init__(self, config: Config):
        self.config = config

    def log_effective_config(self, command: str):
        logger.info("=" * 60)
        logger.info(f"taskseer {command}: effective configuration")
        for line in self.config.summary_lines():
            logger.info(f"  {line}")
        logger.info("=" * 60)

    def _require_seed(self, command: str) -> int:
        if self.config.seed is None:
            raise UsageError(f"{command} is randomized: pass --seed or set SEED in the config file")
        return self.config.seed

    def _forest_config(self, seed: int) -> ForestConfig:
        return self.config.forest_config(seed=seed)

    def ingest(self, histories: Sequence[str], out: Union[str, Path],
               since: Optional[str] = None, until: Optional[str] = None) -> Dict[str, Any]:
        """Parse history files into a deduplicated JSONL task store"""
        if not histories:
            raise UsageError("ingest needs at least one history file")
        sources = [parse_history_argument(argument) for argument in histories]
        result = ingest_files(sources, threads=self.config.threads)
        records = filter_completion_window(result.records, since, until)
        write_tasks(out, records)
        return {
            'files': len(result.files),
            'skipped': sum(stats.skipped for stats in result.files),
            'duplicates': result.duplicates,
            'tasks': len(records),
            'output': str(out),
        }

    def categorize(self, tasks_path: Union[str, Path],
                   out_dir: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """Breakdown tables for a task store; CSVs written when out_dir is given"""
        tasks = read_tasks(tasks_path)
        groups = group_by_submission(tasks)
        tables = breakdown_report(groups, self.config.failure_rules())
        usage = usage_table(tasks, self.config.usage_attributes)
        print(render_tables(tables, usage))

        written: List[Path] = []
        if out_dir is not None:
            written = write_report_csvs(out_dir, tables, usage, tasks_per_submission(groups))
        return {
            'tasks': len(tasks),
            'submissions': len(groups),
            'categories': {category.value: count for category, count in tables.category_counts.items()},
            'failures': {kind.value: count for kind, count in tables.failure_counts.items()},
            'reports': [str(path) for path in written],
        }

    def dataset(self, tasks_path: Union[str, Path], out_dir: Union[str, Path]) -> Dict[str, Any]:
        """Select the training population, build features, assign split and folds"""
        seed = self._require_seed('dataset')
        folds = self.config.forest.folds
        groups = group_by_submission(read_tasks(tasks_path))
        population = select_training_population(groups, self.config.min_tasks)
        ds = build_dataset(population.tasks, ignore=self.config.ignore_columns,
                           max_categories=self.config.max_categories)
        ds = split_frame(ds, self.config.split_ratios, seed)
        ds = assign_folds(ds, folds, seed)
        save_dataset(ds, out_dir)
        return {
            'submissions': population.submissions,
            'rows': ds.n_rows,
            'features': len(ds.features),
            'dropped_indeterminate': population.dropped_indeterminate,
            'split': {split.value: ds.subset(split).n_rows for split in Split},
            'folds': folds,
            'output': str(out_dir),
        }

    def _score(self, forest: Forest, ds: Dataset, **context: Any) -> Dict[str, Any]:
        p_failed = predict_dataset(forest, ds)
        cm = confusion_matrix(p_failed, ds.labels, self.config.threshold)
        auc = None
        if len(set(ds.labels.tolist())) == 2:
            auc = roc_curve(p_failed, ds.labels).auc
        return metrics_payload(cm, class_metrics(cm), self.config.threshold, auc, **context)

    def train(self, dataset_dir: Union[str, Path], model_path: Union[str, Path],
              metrics_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """Train on the Train split, save the model, report Valid split metrics"""
        seed = self._require_seed('train')
        ds = load_dataset(dataset_dir)
        forest = train(ds.subset(Split.TRAIN), self._forest_config(seed), self.config.threads)
        save_model(forest, model_path)

        summary: Dict[str, Any] = {'trees': len(forest.trees), 'model': str(model_path)}
        valid = ds.subset(Split.VALID)
        if valid.n_rows == 0:
            logger.warning("Dataset has no Valid rows; skipping validation metrics")
            return summary
        payload = self._score(forest, valid, split=Split.VALID.value)
        logger.info(f"✓ Validation: total error {payload['metrics']['total_error']}, "
                    f"recall(Failed) {payload['metrics']['recall_failed']}")
        if metrics_path is not None:
            write_metrics_json(metrics_path, payload)
        summary['validation_total_error'] = payload['metrics']['total_error']
        return summary

    def evaluate(self, model_path: Union[str, Path], dataset_dir: Union[str, Path],
                 out_dir: Union[str, Path], split: str = 'Test') -> Dict[str, Any]:
        """Score one split; write metrics.json, roc.csv and importance.csv"""
        if split not in EVALUATION_SPLITS:
            raise UsageError(f"unknown split {split!r}; choose from {', '.join(EVALUATION_SPLITS)}")
        ds = load_dataset(dataset_dir)
        forest = load_model(model_path, expected_fingerprint=ds.fingerprint())
        if split != 'all':
            ds = ds.subset(Split(split))
        if ds.n_rows == 0:
            raise DatasetError(f"split {split} of {dataset_dir} is empty")

        out_dir = Path(out_dir)
        p_failed = predict_dataset(forest, ds)
        cm = confusion_matrix(p_failed, ds.labels, self.config.threshold)
        roc = None
        if len(set(ds.labels.tolist())) == 2:
            roc = roc_curve(p_failed, ds.labels)
        else:
            logger.warning(f"Split {split} holds one class only; ROC curve not written")
        payload = metrics_payload(cm, class_metrics(cm), self.config.threshold,
                                  roc.auc if roc else None, split=split,
                                  model_fingerprint=forest.fingerprint, n_trees=len(forest.trees))

        written = [write_metrics_json(out_dir / METRICS_FILE, payload)]
        if roc is not None:
            written.append(write_roc_csv(out_dir / ROC_FILE, roc))
        written.append(write_importance_csv(out_dir / IMPORTANCE_FILE, variable_importance(forest)))
        return {'rows': ds.n_rows, 'total_error': payload['metrics']['total_error'],
                'auc': payload.get('auc'), 'reports': [str(path) for path in written]}

    def cross_validate(self, dataset_dir: Union[str, Path], out_dir: Union[str, Path]) -> Dict[str, Any]:
        """k-fold CV over every row; write metrics.json, roc.csv and pooled predictions"""
        seed = self._require_seed('cv')
        ds = load_dataset(dataset_dir)
        report = cross_validate(ds, self._forest_config(seed), self.config.threads, self.config.threshold)

        out_dir = Path(out_dir)
        payload = report.to_dict()
        payload['seed'] = seed
        written = [write_metrics_json(out_dir / METRICS_FILE, payload)]
        if report.roc is not None:
            written.append(write_roc_csv(out_dir / ROC_FILE, report.roc))

        predictions = ds.row_meta.copy()
        predictions['fold'] = report.fold
        predictions['label'] = [CLASS_NAMES[label] for label in report.labels]
        predictions['p_failed'] = report.p_failed
        path = out_dir / CV_PREDICTIONS_FILE
        predictions.to_csv(path, index=False, lineterminator='\n')
        written.append(path)
        return {'rows': ds.n_rows, 'folds': len(report.folds),
                'total_error': report.metrics.total_error,
                'auc': report.roc.auc if report.roc else None,
                'reports': [str(p) for p in written]}

    def sample(self, pid: int, out: Union[str, Path] = '-', root: Union[str, Path] = '/proc',
               interval_ms: int = 1000, max_samples: Optional[int] = None,
               snapshot_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """Poll a process tree until it exits, writing JSONL samples"""
        if interval_ms < MIN_INTERVAL_MS:
            raise UsageError(f"--interval-ms must be at least {MIN_INTERVAL_MS}, got {interval_ms}")
        if snapshot_path is not None:
            with _open_sink(snapshot_path) as handle:
                handle.write(canonical_json(snapshot(root, pid)) + '\n')
        with _open_sink(out) as sink:
            count = poll(root, pid, interval_ms, sink, max_samples=max_samples)
        return {'pid': pid, 'samples': count, 'output': str(out)}

    def synth(self, spec_path: Union[str, Path], out_dir: Union[str, Path],
              seed: Optional[int] = None) -> Dict[str, Any]:
        """Generate a synthetic trace; the seed comes from --seed, the spec file or the config"""
        if seed is None and Path(spec_path).is_file():
            keys = {key.upper() for key in dotenv_values(spec_path)}
            if 'SEED' not in keys:
                seed = self._require_seed('synth')
        spec = load_synth_spec(spec_path, seed=seed)
        paths, ledger = synth_trace(spec, out_dir)
        return {
            'submissions': ledger.n_submissions,
            'tasks': ledger.n_tasks,
            'qualifying_tasks': ledger.qualifying_tasks,
            'files': [str(path) for path in paths] + [str(Path(out_dir) / LEDGER_FILE)],
        }

    def run(self, command: str, **kwargs: Any) -> Dict[str, Any]:
        """
        Run a subcommand and print its summary

        Raises:
            UsageError: Unknown command or missing required option
            TaskseerError: Data or contract error inside the subcommand
        """
        handlers = {
            'ingest': self.ingest,
            'categorize': self.categorize,
            'dataset': self.dataset,
            'train': self.train,
            'evaluate': self.evaluate,
            'cv': self.cross_validate,
            'sample': self.sample,
            'synth': self.synth,
        }
        if command not in handlers:
            raise UsageError(f"unknown subcommand {command!r}")
        self.log_effective_config(command)
        result = handlers[command](**kwargs)
        self._print_summary(command, result)
        return result

    def _print_summary(self, command: str, result: Dict[str, Any]):
        logger.info("=" * 60)
        logger.info(f"📊 {command.upper()} SUMMARY")
        logger.info("=" * 60)
        for key, value in result.items():
            if isinstance(value, list):
                logger.info(f"✓ {key}: {len(value)}")
                for item in value:
                    logger.info(f"    {item}")
            elif isinstance(value, dict):
                logger.info(f"✓ {key}: " + ', '.join(f"{k}={v}" for k, v in value.items()))
            else:
                logger.info(f"✓ {key}: {value}")
        logger.info("=" * 60)

