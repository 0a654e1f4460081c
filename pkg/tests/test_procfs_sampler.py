import io
import json
import random

import pytest

from procfs_sampler import (
    IoCounters,
    ProcfsAccessError,
    ProcfsParseError,
    SinkError,
    STREAM_FORMAT,
    StatRecord,
    TargetGoneError,
    TransientMissError,
    child_pids,
    parse_stat,
    poll,
    read_io,
    read_oom_score,
    read_stat,
    read_statm,
    sample_tree,
    snapshot
)
import procfs_sampler.readers as readers
from procfs_sampler.fixture import remove_process, write_children, write_process


class FakeClock:
    def __init__(self, start=1_700_000_000_000):
        self.now = start

    def __call__(self):
        return self.now


def _stat(pid, ppid=1, comm='worker', utime=0, stime=0, starttime=100):
    return StatRecord(pid=pid, comm=comm, state='S', ppid=ppid, utime=utime, stime=stime,
                      num_threads=1, starttime=starttime)


def _process(root, pid, ppid=1, children=(), rchar=0, wchar=0, utime=0, stime=0, rss=0, oom=0, **stat):
    write_process(root, _stat(pid, ppid, utime=utime, stime=stime, **stat),
                  IoCounters(rchar=rchar, wchar=wchar), rss_pages=rss, oom_score=oom, children=children)


def test_read_io_requires_every_key(tmp_path):
    _process(tmp_path, 7, rchar=12, wchar=3)
    assert read_io(tmp_path, 7).rchar == 12
    (tmp_path / '7' / 'io').write_text('rchar: 1\nwchar: 2\n', encoding='utf-8')
    with pytest.raises(ProcfsParseError, match='missing keys'):
        read_io(tmp_path, 7)
    (tmp_path / '7' / 'io').write_text('rchar 1\n', encoding='utf-8')
    with pytest.raises(ProcfsParseError):
        read_io(tmp_path, 7)


def test_read_io_of_missing_process(tmp_path):
    with pytest.raises(TransientMissError):
        read_io(tmp_path, 99)


def test_read_statm(tmp_path):
    _process(tmp_path, 7, rss=25)
    assert read_statm(tmp_path, 7) == 25
    (tmp_path / '7' / 'statm').write_text('5\n', encoding='utf-8')
    with pytest.raises(ProcfsParseError):
        read_statm(tmp_path, 7)
    (tmp_path / '7' / 'statm').write_text('5 x\n', encoding='utf-8')
    with pytest.raises(ProcfsParseError):
        read_statm(tmp_path, 7)


def test_read_stat_and_oom_score(tmp_path):
    _process(tmp_path, 5, ppid=2, utime=7, oom=321)
    stat = read_stat(tmp_path, 5)
    assert (stat.pid, stat.ppid, stat.utime, stat.comm) == (5, 2, 7, 'worker')
    assert read_oom_score(tmp_path, 5) == 321
    (tmp_path / '5' / 'oom_score').write_text('high\n', encoding='utf-8')
    with pytest.raises(ProcfsParseError):
        read_oom_score(tmp_path, 5)
    with pytest.raises(TransientMissError):
        read_stat(tmp_path, 6)


@pytest.mark.parametrize('comm', ['bash', 'my task', '(a)b', ') (', 'x y z)'])
def test_parse_stat_keeps_awkward_comm(comm, tmp_path):
    _process(tmp_path, 12, ppid=3, comm=comm, utime=40, stime=9)
    stat = parse_stat((tmp_path / '12' / 'stat').read_text(encoding='utf-8'))
    assert stat.comm == comm
    assert (stat.pid, stat.ppid, stat.utime, stat.stime, stat.starttime) == (12, 3, 40, 9, 100)


def test_parse_stat_rejects_short_line():
    with pytest.raises(ProcfsParseError):
        parse_stat('12 (x) S 1 2 3')
    with pytest.raises(ProcfsParseError):
        parse_stat('12 no comm here')


def test_child_pids_breadth_first(tmp_path):
    _process(tmp_path, 1, children=[2, 3])
    _process(tmp_path, 2, ppid=1)
    _process(tmp_path, 3, ppid=1, children=[4])
    _process(tmp_path, 4, ppid=3)
    assert child_pids(tmp_path, 1) == [2, 3, 4]
    assert child_pids(tmp_path, 4) == []


def test_child_pids_reads_every_thread(tmp_path):
    _process(tmp_path, 1, children=[2])
    write_children(tmp_path, 1, [3], tid=9)
    assert sorted(child_pids(tmp_path, 1)) == [2, 3]


def test_sample_sums_match_generated_trees(tmp_path):
    rng = random.Random(8)
    for tree in range(12):
        root = tmp_path / f"tree{tree}"
        size = rng.randint(1, 7)
        pids = [100 + i for i in range(size)]
        parents = {pid: rng.choice(pids[:i]) for i, pid in enumerate(pids) if i}
        expected = {'rchar': 0, 'wchar': 0, 'utime': 0, 'stime': 0, 'rss': 0}
        for pid in pids:
            values = {key: rng.randint(0, 10_000) for key in expected}
            expected = {key: expected[key] + values[key] for key in expected}
            children = [child for child, parent in parents.items() if parent == pid]
            _process(root, pid, ppid=parents.get(pid, 1), children=children, comm=f"p {pid} (x)", **values)

        sample = sample_tree(root, pids[0], clock=FakeClock())
        assert sorted(sample.pids) == pids
        assert sample.io.rchar == expected['rchar']
        assert sample.io.wchar == expected['wchar']
        assert (sample.utime, sample.stime) == (expected['utime'], expected['stime'])
        assert sample.rss_pages == expected['rss']
        assert sample.misses == ()


def test_vanished_descendant_is_a_miss(tmp_path):
    _process(tmp_path, 1, children=[2, 5], rchar=10)
    _process(tmp_path, 2, ppid=1, rchar=5)
    sample = sample_tree(tmp_path, 1, clock=FakeClock())
    assert sample.pids == (1, 2)
    assert sample.misses == (5,)
    assert sample.io.rchar == 15


def test_missing_target_raises(tmp_path):
    with pytest.raises(TargetGoneError):
        sample_tree(tmp_path, 42)


def test_decreasing_counter_is_flagged(tmp_path):
    _process(tmp_path, 1, rchar=100, utime=50)
    first = sample_tree(tmp_path, 1, clock=FakeClock())
    _process(tmp_path, 1, rchar=40, utime=60)
    second = sample_tree(tmp_path, 1, clock=FakeClock(), previous=first)
    assert [(a.counter, a.previous, a.current) for a in second.anomalies] == [('rchar', 100, 40)]


def test_reused_pid_is_not_an_anomaly(tmp_path):
    _process(tmp_path, 1, rchar=100)
    first = sample_tree(tmp_path, 1, clock=FakeClock())
    _process(tmp_path, 1, rchar=1, starttime=999)
    assert sample_tree(tmp_path, 1, clock=FakeClock(), previous=first).anomalies == ()


def test_poll_stops_when_target_exits(tmp_path):
    _process(tmp_path, 1, children=[2], rchar=1)
    _process(tmp_path, 2, ppid=1, rchar=2)
    clock = FakeClock()
    sleeps = []

    def sleep(seconds):
        sleeps.append(seconds)
        clock.now += int(seconds * 1000)
        if len(sleeps) == 3:
            remove_process(tmp_path, 1)

    sink = io.StringIO()
    assert poll(tmp_path, 1, 100, sink, clock=clock, sleep=sleep) == 3
    lines = [json.loads(line) for line in sink.getvalue().splitlines()]
    assert lines[0]['format'] == STREAM_FORMAT
    assert lines[0]['root_pid'] == 1
    samples = lines[1:]
    assert len(samples) == 3
    assert [s['io']['rchar'] for s in samples] == [3, 3, 3]
    stamps = [s['timestamp'] for s in samples]
    assert stamps == sorted(set(stamps))
    assert sleeps == [0.1, 0.1, 0.1]


def test_poll_honours_max_samples(tmp_path):
    _process(tmp_path, 1)
    clock = FakeClock()

    def sleep(seconds):
        clock.now += int(seconds * 1000)

    sink = io.StringIO()
    assert poll(tmp_path, 1, 10, sink, clock=clock, sleep=sleep, max_samples=4) == 4
    assert len(sink.getvalue().splitlines()) == 5


def test_poll_argument_errors(tmp_path):
    _process(tmp_path, 1)
    with pytest.raises(ValueError):
        poll(tmp_path, 1, 5, io.StringIO())
    with pytest.raises(TargetGoneError):
        poll(tmp_path, 2, 100, io.StringIO())


def test_poll_reports_closed_sink(tmp_path):
    _process(tmp_path, 1)
    sink = io.StringIO()
    sink.close()
    with pytest.raises(SinkError):
        poll(tmp_path, 1, 100, sink, clock=FakeClock(), sleep=lambda s: None)


def _deny(monkeypatch, path):
    denied = str(path)
    real_open = open

    def guarded_open(file, *args, **kwargs):
        if str(file) == denied:
            raise PermissionError(13, 'Permission denied', denied)
        return real_open(file, *args, **kwargs)

    monkeypatch.setattr(readers, 'open', guarded_open, raising=False)


def test_unreadable_file_is_not_a_finished_target(tmp_path, monkeypatch):
    _process(tmp_path, 42, rchar=5)
    _deny(monkeypatch, tmp_path / '42' / 'io')
    with pytest.raises(ProcfsAccessError):
        read_io(tmp_path, 42)
    with pytest.raises(ProcfsAccessError):
        sample_tree(tmp_path, 42, clock=FakeClock())

    sink = io.StringIO()
    with pytest.raises(ProcfsAccessError):
        poll(tmp_path, 42, 100, sink, clock=FakeClock(), sleep=lambda s: None, max_samples=3)
    assert len(sink.getvalue().splitlines()) == 1


def test_snapshot_reads_context(tmp_path):
    write_process(tmp_path, _stat(3), IoCounters(), cmdline=['python', 'job.py', '--fast'])
    context = snapshot(tmp_path, 3)
    assert context['cmdline'] == ['python', 'job.py', '--fast']
    assert context['status'].startswith('Name:\tworker')
    assert context['environ'] is None
    assert context['cwd'] is None
    assert context['fd_count'] is None
