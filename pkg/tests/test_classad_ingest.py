import io
import json

import pytest

from classad_ingest import (
    HistoryParseError,
    NormalizationError,
    coerce_ad_value,
    filter_completion_window,
    ingest_files,
    merge_sources,
    normalize_task,
    parse_history_argument,
    parse_history_stream,
    parse_time_bound,
    source_node_for
)


def test_empty_array_parses_to_no_ads():
    parsed = parse_history_stream(b'[]')
    assert parsed.ads == []
    assert parsed.total == 0
    assert parsed.skipped == 0


def test_two_ads_keep_attribute_counts_and_order():
    ads = [
        {'ClusterId': 1, 'ProcId': 0, 'JobStatus': 4, 'Owner': 'alice'},
        {'ClusterId': 1, 'ProcId': 1, 'JobStatus': 3},
    ]
    parsed = parse_history_stream(io.BytesIO(json.dumps(ads).encode()))
    assert [len(ad) for ad in parsed.ads] == [4, 3]
    assert [ad['ProcId'] for ad in parsed.ads] == [0, 1]


def test_truncated_array_raises_with_offset():
    with pytest.raises(HistoryParseError) as info:
        parse_history_stream(b'[{"ClusterId": 1, "ProcId": 0}')
    assert info.value.byte_offset > 0


def test_non_array_document_is_rejected():
    with pytest.raises(HistoryParseError):
        parse_history_stream(b'{"ClusterId": 1}')


def test_elements_without_ids_are_skipped_and_counted():
    ads = [{'ClusterId': 1, 'ProcId': 0}, {'ProcId': 3}, {'ClusterId': 2}, 7]
    parsed = parse_history_stream(json.dumps(ads).encode())
    assert len(parsed.ads) == 1
    assert parsed.skipped == 3
    assert parsed.skipped + len(parsed.ads) == parsed.total


@pytest.mark.parametrize('value, expected', [
    ('undefined', None),
    ('', None),
    ('42', 42),
    ('-7', -7),
    ('1.5', 1.5),
    ('slot1@wn01', 'slot1@wn01'),
    (True, True),
    (None, None),
])
def test_coerce_ad_value(value, expected):
    assert coerce_ad_value(value) == expected


def test_normalize_completed_task():
    record = normalize_task({'ClusterId': 7, 'ProcId': 0, 'JobStatus': 4}, 'submit01')
    assert record.job_status == 4
    assert record.key == ('submit01', 7, 0)
    assert record.raw == {}


def test_normalize_keeps_remove_reason_and_raw_attributes():
    ad = {'ClusterId': 7, 'ProcId': 0, 'JobStatus': 3, 'RemoveReason': 'via condor_rm', 'Owner': 'bob'}
    record = normalize_task(ad, 'submit01')
    assert record.remove_reason == 'via condor_rm'
    assert record.raw == {'Owner': 'bob'}


def test_normalize_hold_reason_falls_back_to_hold_reason():
    ad = {'ClusterId': 7, 'ProcId': 0, 'JobStatus': 3, 'HoldReason': 'over memory limit'}
    assert normalize_task(ad, 'n').last_hold_reason == 'over memory limit'


def test_normalize_rejects_non_integer_cluster_id():
    with pytest.raises(NormalizationError) as info:
        normalize_task({'ClusterId': 'x', 'ProcId': 0}, 'submit01')
    assert info.value.attribute == 'ClusterId'


def test_normalize_rejects_unknown_job_status():
    with pytest.raises(NormalizationError) as info:
        normalize_task({'ClusterId': 1, 'ProcId': 0, 'JobStatus': 9}, 'submit01')
    assert info.value.attribute == 'JobStatus'
    assert 'not a valid status code' in str(info.value)
    assert 'integer' not in str(info.value)


def test_merge_disjoint_nodes_concatenates(make_task):
    a = [make_task(1, 0, source_node='a'), make_task(2, 0, source_node='a')]
    b = [make_task(1, 0, source_node='b')]
    result = merge_sources([('a', a), ('b', b)])
    assert len(result.records) == 3
    assert result.duplicates == 0


def test_merge_identical_record_twice(make_task):
    record = make_task(1, 0)
    result = merge_sources([('submit01', [record, record])])
    assert result.records == [record]
    assert result.duplicates == 1


@pytest.mark.parametrize('order', [(100, 200), (200, 100)])
def test_merge_keeps_latest_completion_date(make_task, order):
    records = [make_task(1, 0, CompletionDate=date) for date in order]
    result = merge_sources([('submit01', records)])
    assert len(result.records) == 1
    assert result.records[0].raw['CompletionDate'] == 200


def test_merge_is_independent_of_source_order(make_task):
    a = [make_task(1, 0, source_node='a', CompletionDate=5), make_task(1, 1, source_node='a')]
    b = [make_task(1, 0, source_node='a', CompletionDate=9), make_task(3, 0, source_node='a')]
    forward = merge_sources([('a', a), ('a', b)]).records
    backward = merge_sources([('a', b[::-1]), ('a', a[::-1])]).records
    assert forward == backward


def test_source_node_from_file_name():
    assert source_node_for('/data/history_submit01.json') == 'submit01'
    assert source_node_for('other.json') == 'other'


def test_history_argument_with_node_prefix():
    node, path = parse_history_argument('schedd3=/data/h.json')
    assert node == 'schedd3'
    assert str(path) == '/data/h.json'


def test_ingest_files_counts_and_threads(write_history):
    first = write_history('history_n1.json', [
        {'ClusterId': 1, 'ProcId': 0, 'JobStatus': 4, 'CompletionDate': 10},
        {'ClusterId': 1, 'ProcId': 1, 'JobStatus': 3, 'CompletionDate': 11},
        {'ProcId': 2},
    ])
    second = write_history('history_n2.json', [
        {'ClusterId': 1, 'ProcId': 0, 'JobStatus': 4, 'CompletionDate': 12},
    ])
    sources = [(source_node_for(p), p) for p in (first, second)]
    single = ingest_files(sources, threads=1)
    pooled = ingest_files(sources, threads=4)
    assert single.records == pooled.records
    assert len(single.records) == 3
    assert [(s.retained, s.skipped, s.total) for s in single.files] == [(2, 1, 3), (1, 0, 1)]


def test_completion_window_filters_by_epoch_and_date(make_task):
    tasks = [
        make_task(1, 0, CompletionDate=1475644627),
        make_task(2, 0, CompletionDate=1537752190),
        make_task(3, 0),
    ]
    assert len(filter_completion_window(tasks)) == 3
    kept = filter_completion_window(tasks, since=1500000000)
    assert [t.cluster_id for t in kept] == [2]
    kept = filter_completion_window(tasks, until='2017-01-01')
    assert [t.cluster_id for t in kept] == [1]


def test_time_bound_parses_dates_as_utc():
    assert parse_time_bound('1970-01-02') == 86400.0
    assert parse_time_bound('86400') == 86400.0
    assert parse_time_bound(None) is None


def test_ingest_skips_ads_that_fail_normalization(write_history):
    ads = [{'ClusterId': 5, 'ProcId': i, 'JobStatus': 4} for i in range(99)]
    ads.append({'ClusterId': 'x', 'ProcId': 0})
    ads.append({'ClusterId': 6, 'ProcId': 0, 'JobStatus': 0})
    path = write_history('history_n1.json', ads)
    result = ingest_files([('n1', path)])
    assert len(result.records) == 99
    stats = result.files[0]
    assert (stats.retained, stats.skipped, stats.total) == (99, 2, 101)
    assert stats.retained + stats.skipped == stats.total
