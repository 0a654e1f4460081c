import json

import pandas as pd
import pytest

from forest import MODEL_FORMAT
from pipeline import CV_PREDICTIONS_FILE, IMPORTANCE_FILE, METRICS_FILE, ROC_FILE
from procfs_sampler import IoCounters, StatRecord
from procfs_sampler.fixture import write_process
import procfs_sampler.readers as readers
from taskseer_main import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from trace_synth import LEDGER_FILE, load_ledger

SPEC = """N_SUBMISSIONS=60
CATEGORY_MIX=0.3,0.1,0.5,0.05,0.05
TASKS_PER_MULTI_MEAN=12
FAILURE_RATE_IN_MIXED=0.3
PLANTED_FEATURES=PlantedScore:Numeric:2.0
N_NODES=2
"""


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv('TASKSEER_SEED', raising=False)
    monkeypatch.delenv('TASKSEER_THREADS', raising=False)


@pytest.fixture
def trace(tmp_path):
    spec = tmp_path / 'synth.spec'
    spec.write_text(SPEC, encoding='utf-8')
    out = tmp_path / 'trace'
    assert main(['synth', '--spec', str(spec), '--seed', '4', '--out', str(out)]) == EXIT_OK
    return out


@pytest.fixture
def tasks_store(trace, tmp_path):
    store = tmp_path / 'tasks.jsonl'
    histories = sorted(str(path) for path in trace.glob('history_*.json'))
    assert main(['ingest', *histories, '--out', str(store)]) == EXIT_OK
    return store


@pytest.fixture
def dataset_dir(tasks_store, tmp_path):
    out = tmp_path / 'ds'
    assert main(['dataset', '--tasks', str(tasks_store), '--out', str(out), '--seed', '7']) == EXIT_OK
    return out


def test_version_prints_formats(capsys):
    assert main(['--version']) == EXIT_OK
    assert MODEL_FORMAT in capsys.readouterr().out


def test_no_command_is_usage_error():
    assert main([]) == EXIT_USAGE


def test_unknown_flag_is_usage_error():
    assert main(['categorize', '--tasks', 'x.jsonl', '--colour']) == EXIT_USAGE
    assert main(['frobnicate']) == EXIT_USAGE


def test_randomized_commands_need_a_seed(tmp_path):
    assert main(['train', '--dataset', str(tmp_path), '--model', str(tmp_path / 'm')]) == EXIT_USAGE
    assert main(['dataset', '--tasks', str(tmp_path / 't'), '--out', str(tmp_path / 'd')]) == EXIT_USAGE
    assert main(['cv', '--dataset', str(tmp_path), '--out', str(tmp_path / 'cv')]) == EXIT_USAGE


def test_synth_needs_a_seed_somewhere(tmp_path):
    spec = tmp_path / 'synth.spec'
    spec.write_text(SPEC, encoding='utf-8')
    assert main(['synth', '--spec', str(spec), '--out', str(tmp_path / 'a')]) == EXIT_USAGE
    config = tmp_path / 'taskseer.conf'
    config.write_text('SEED=4\n', encoding='utf-8')
    assert main(['--config', str(config), 'synth', '--spec', str(spec), '--out', str(tmp_path / 'b')]) == EXIT_OK


def test_bad_config_key_is_usage_error(tmp_path):
    config = tmp_path / 'taskseer.conf'
    config.write_text('NOT_A_KEY=1\n', encoding='utf-8')
    assert main(['--config', str(config), 'categorize', '--tasks', 'x.jsonl']) == EXIT_USAGE


def test_malformed_history_is_data_error(tmp_path):
    history = tmp_path / 'history_n1.json'
    history.write_text('[{"ClusterId": 1,', encoding='utf-8')
    assert main(['ingest', str(history), '--out', str(tmp_path / 't.jsonl')]) == EXIT_DATA


def test_missing_history_file_is_usage_error(tmp_path):
    assert main(['ingest', str(tmp_path / 'history_gone.json'), '--out', str(tmp_path / 't.jsonl')]) == EXIT_USAGE


def test_sample_interval_floor(tmp_path):
    assert main(['sample', '--pid', '1', '--root', str(tmp_path), '--interval-ms', '5']) == EXIT_USAGE


def test_sample_missing_process_is_data_error(tmp_path):
    out = tmp_path / 'samples.jsonl'
    assert main(['sample', '--pid', '4242', '--root', str(tmp_path), '--out', str(out)]) == EXIT_DATA


def test_synth_ingest_categorize_matches_ledger(trace, tasks_store, tmp_path, capsys):
    ledger = load_ledger(trace / LEDGER_FILE)
    reports = tmp_path / 'reports'
    assert main(['categorize', '--tasks', str(tasks_store), '--out', str(reports)]) == EXIT_OK
    assert 'CLUSTER SUBMISSIONS BREAKDOWN' in capsys.readouterr().out

    stored = [json.loads(line) for line in tasks_store.read_text(encoding='utf-8').splitlines()]
    assert len(stored) == ledger.n_tasks
    assert len(list(reports.glob('*.csv'))) == 5


def test_dataset_train_evaluate_cv(dataset_dir, tmp_path):
    schema = json.loads((dataset_dir / 'schema.json').read_text(encoding='utf-8'))
    assert schema['n_folds'] == 5

    model = tmp_path / 'forest.model'
    metrics = tmp_path / 'valid.json'
    assert main(['train', '--dataset', str(dataset_dir), '--model', str(model), '--metrics', str(metrics),
                 '--seed', '7', '--trees', '5']) == EXIT_OK
    assert model.read_text(encoding='utf-8').startswith(MODEL_FORMAT)
    assert json.loads(metrics.read_text(encoding='utf-8'))['split'] == 'Valid'

    report_dir = tmp_path / 'eval'
    assert main(['evaluate', '--model', str(model), '--dataset', str(dataset_dir),
                 '--out', str(report_dir)]) == EXIT_OK
    assert (report_dir / METRICS_FILE).is_file()
    assert (report_dir / ROC_FILE).is_file()
    assert (report_dir / IMPORTANCE_FILE).is_file()
    assert json.loads((report_dir / METRICS_FILE).read_text(encoding='utf-8'))['split'] == 'Test'

    cv_dir = tmp_path / 'cv'
    assert main(['--threads', '2', 'cv', '--dataset', str(dataset_dir), '--out', str(cv_dir),
                 '--seed', '7', '--trees', '3']) == EXIT_OK
    predictions = pd.read_csv(cv_dir / CV_PREDICTIONS_FILE)
    assert len(predictions) == schema['n_rows']
    assert predictions['p_failed'].between(0, 1).all()


def test_evaluate_rejects_corrupt_model(dataset_dir, tmp_path):
    model = tmp_path / 'broken.model'
    model.write_text('taskseer-forest v1\ngarbage\n', encoding='utf-8')
    assert main(['evaluate', '--model', str(model), '--dataset', str(dataset_dir),
                 '--out', str(tmp_path / 'eval')]) == EXIT_DATA


def test_missing_task_store_is_usage_error(tmp_path):
    assert main(['categorize', '--tasks', str(tmp_path / 'absent.jsonl')]) == EXIT_USAGE


def test_sample_unreadable_process_is_data_error(tmp_path, monkeypatch):
    write_process(tmp_path, StatRecord(pid=42, comm='job', state='S', ppid=1, utime=0, stime=0,
                                       num_threads=1, starttime=1), IoCounters())
    denied = str(tmp_path / '42' / 'io')
    real_open = open

    def guarded_open(file, *args, **kwargs):
        if str(file) == denied:
            raise PermissionError(13, 'Permission denied', denied)
        return real_open(file, *args, **kwargs)

    monkeypatch.setattr(readers, 'open', guarded_open, raising=False)
    out = tmp_path / 'samples.jsonl'
    assert main(['sample', '--pid', '42', '--root', str(tmp_path), '--out', str(out),
                 '--max-samples', '3']) == EXIT_DATA


def test_thread_count_does_not_change_reports(dataset_dir, tmp_path):
    outputs = {}
    for threads in ('1', '8'):
        model = tmp_path / f"forest{threads}.model"
        report_dir = tmp_path / f"eval{threads}"
        cv_dir = tmp_path / f"cv{threads}"
        assert main(['--threads', threads, 'train', '--dataset', str(dataset_dir), '--model', str(model),
                     '--seed', '7', '--trees', '6']) == EXIT_OK
        assert main(['--threads', threads, 'evaluate', '--model', str(model), '--dataset', str(dataset_dir),
                     '--out', str(report_dir)]) == EXIT_OK
        assert main(['--threads', threads, 'cv', '--dataset', str(dataset_dir), '--out', str(cv_dir),
                     '--seed', '7', '--trees', '4']) == EXIT_OK
        outputs[threads] = [model.read_bytes()] + [
            (directory / name).read_bytes()
            for directory in (report_dir, cv_dir)
            for name in (METRICS_FILE, ROC_FILE)
        ] + [(cv_dir / CV_PREDICTIONS_FILE).read_bytes()]
    assert outputs['1'] == outputs['8']
