"""Shared fixtures for the taskseer test suite"""

import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from classad_ingest.history_parser import TaskRecord  # noqa: E402


def task(cluster_id, proc_id=0, job_status=4, source_node='submit01', **raw):
    """TaskRecord with the typed fields lifted out of raw like normalize_task does"""
    return TaskRecord(
        cluster_id=cluster_id,
        proc_id=proc_id,
        job_status=job_status,
        exit_code=raw.pop('ExitCode', None),
        remove_reason=raw.pop('RemoveReason', None),
        last_hold_reason=raw.pop('LastHoldReason', None),
        num_job_starts=raw.pop('NumJobStarts', None),
        source_node=source_node,
        raw=raw,
    )


@pytest.fixture
def make_task():
    return task


@pytest.fixture
def write_history(tmp_path):
    """Write a list of ads as a condor_history --json file"""
    def _write(name, ads):
        path = tmp_path / name
        path.write_text(json.dumps(ads), encoding='utf-8')
        return path
    return _write
