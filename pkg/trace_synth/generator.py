"""
Synthetic Trace Generator
=========================
Writes condor_history-shaped JSON files (one per submit node) plus a
ledger.json holding the ground truth: category and failure-kind counts,
qualifying population size, usage totals and every task's label.

Category counts are exact (largest remainder), multi-task sizes follow a
geometric distribution shifted to start at 2, and every failed task carries
the reason strings its failure kind is recognized by.
"""

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from categorize.failures import FailureKind
from categorize.reports import DEFAULT_USAGE_ATTRIBUTES
from categorize.submissions import CATEGORY_REPORT_ORDER, Category, Outcome
from dataset.builder import FeatureKind
from .spec import PlantedFeature, SynthSpec

logger = logging.getLogger(__name__)

LEDGER_FILE = 'ledger.json'

# Completion window of the production trace (epoch seconds)
TRACE_START = 1475644627
TRACE_END = 1537752190

FIRST_CLUSTER_ID = 1000
N_OWNERS = 40
N_WORKERS = 64
PLANTED_CATEGORIES = ('A', 'B', 'C', 'D')


@dataclass
class Ledger:
    seed: int
    n_submissions: int
    n_tasks: int
    min_tasks: int
    category_submissions: Dict[str, int]
    category_tasks: Dict[str, int]
    failure_kinds: Dict[str, int]
    qualifying_submissions: int
    qualifying_tasks: int
    usage_totals: Dict[str, int]
    planted_effects: Dict[str, Dict[str, Any]]
    labels: List[List[Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Ledger':
        return cls(**data)


def largest_remainder(shares: Sequence[float], total: int) -> List[int]:
    """
    Integer counts summing to total, proportional to shares

    Floors first, then one extra unit to the largest fractional parts (ties
    to the earlier share).
    """
    raw = np.asarray(shares, dtype=np.float64) * total
    counts = np.floor(raw + 1e-9).astype(np.int64)
    leftover = int(total - counts.sum())
    fractions = raw - counts
    for index in sorted(range(len(raw)), key=lambda i: (-fractions[i], i))[:max(leftover, 0)]:
        counts[index] += 1
    return [int(count) for count in counts]


def _failure_fields(kind: FailureKind, owner: str, worker: str) -> Dict[str, Any]:
    removed_by_user = f"via condor_rm (by user {owner})"
    if kind is FailureKind.REMOVED_BEFORE_SCHEDULED:
        return {'RemoveReason': removed_by_user}
    if kind is FailureKind.ATTRIBUTE_EXPRESSION_ERROR:
        return {'RemoveReason': "The job attribute PeriodicRemove expression "
                                "'(JobStatus == 5) && (CurrentTime - EnteredCurrentStatus > 3600)' evaluated to TRUE"}
    if kind is FailureKind.USER_LOG_INIT_FAILURE:
        return {'RemoveReason': removed_by_user,
                'LastHoldReason': f"Failed to initialize user log to /home/{owner}/job.log"}
    if kind is FailureKind.OUT_OF_MEMORY:
        return {'RemoveReason': removed_by_user,
                'LastHoldReason': "Job has gone over memory limit of 2048 megabytes. Peak usage: 2301 megabytes."}
    if kind is FailureKind.NO_SUCH_FILE_OR_DIRECTORY:
        return {'RemoveReason': removed_by_user,
                'LastHoldReason': f"Error from slot1@{worker}: Failed to execute '/home/{owner}/run.sh': "
                                  f"(errno=2: 'No such file or directory')"}
    return {'RemoveReason': removed_by_user}


class _TraceBuilder:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.nodes = [f"submit{i + 1:02d}" for i in range(spec.n_nodes)]
        self.ads: Dict[str, List[Dict[str, Any]]] = {node: [] for node in self.nodes}
        self.labels: List[List[Any]] = []
        self.failure_kinds: Counter = Counter()
        self.usage_totals: Dict[str, int] = {attribute: 0 for attribute in DEFAULT_USAGE_ATTRIBUTES}
        self.geometric_p = 1.0 / (spec.tasks_per_multi_mean - 1.0)
        self.kinds = list(FailureKind)

    def _int(self, low: int, high: int) -> int:
        return int(self.rng.integers(low, high))

    def outcomes(self, category: Category) -> List[bool]:
        """Failed flag per task"""
        if category is Category.SINGLE_SUCCESS:
            return [False]
        if category is Category.SINGLE_FAIL:
            return [True]
        n = 1 + int(self.rng.geometric(self.geometric_p))
        if category is Category.MULTI_ALL_SUCCESS:
            return [False] * n
        if category is Category.MULTI_ALL_FAIL:
            return [True] * n
        failed = [bool(flag) for flag in self.rng.random(n) < self.spec.failure_rate_in_mixed]
        if all(failed):
            failed[self._int(0, n)] = False
        elif not any(failed):
            failed[self._int(0, n)] = True
        return failed

    def planted_value(self, feature: PlantedFeature, failed: bool) -> Any:
        latent = failed != bool(self.rng.random() < self.spec.noise_rate)
        if feature.kind is FeatureKind.NUMERIC:
            return round(float(self.rng.normal(feature.strength if latent else 0.0, 1.0)), 6)
        informative = self.rng.random() < min(max(feature.strength, 0.0), 1.0)
        if feature.kind is FeatureKind.BOOLEAN:
            return bool(latent) if informative else bool(self.rng.random() < 0.5)
        if informative:
            pool = PLANTED_CATEGORIES[:2] if latent else PLANTED_CATEGORIES[2:]
        else:
            pool = PLANTED_CATEGORIES
        return pool[self._int(0, len(pool))]

    def task_ad(self, cluster_id: int, proc_id: int, failed: bool, owner: str,
                qdate: int, auto_cluster: int) -> Dict[str, Any]:
        worker = f"wn{self._int(1, N_WORKERS + 1):03d}.cluster"
        kind = None
        if failed:
            kind = self.kinds[int(self.rng.choice(len(self.kinds), p=self.spec.failure_kind_mix))]
            self.failure_kinds[kind.value] += 1
        started = kind is not FailureKind.REMOVED_BEFORE_SCHEDULED

        ad: Dict[str, Any] = {
            'ClusterId': cluster_id,
            'ProcId': proc_id,
            'JobStatus': 3 if failed else 4,
            'Owner': owner,
            'QDate': qdate,
            'AutoClusterId': auto_cluster,
            'RequestMemory': [1024, 2048, 4096][self._int(0, 3)],
        }
        if started:
            start = qdate + self._int(1, 3600)
            wall = self._int(30, 50_000)
            starts = 1 + int(self.rng.random() < 0.1)
            usage = {
                'RemoteWallClockTime': wall,
                'RemoteUserCpu': self._int(0, wall),
                'RemoteSysCpu': self._int(0, max(wall // 10, 1)),
                'CumulativeSuspensionTime': self._int(0, 5),
                'BytesSent': self._int(0, 10_000_000),
            }
            ad.update({
                'RemoteHost': f"slot1@{worker}",
                'JobLastStartDate': start,
                'CompletionDate': start + wall,
                'NumJobStarts': starts,
                'JobRunCount': starts,
                'CommittedTime': 0 if failed else wall,
                'LastVacateTime': start + wall,
            })
        else:
            usage = {attribute: 0 for attribute in DEFAULT_USAGE_ATTRIBUTES}
            ad.update({'CompletionDate': qdate + self._int(1, 600), 'NumJobStarts': 0,
                       'JobRunCount': 0, 'CommittedTime': 0})
        ad.update(usage)
        for attribute in DEFAULT_USAGE_ATTRIBUTES:
            self.usage_totals[attribute] += int(ad.get(attribute, 0))

        if failed:
            ad.update(_failure_fields(kind, owner, worker))
        else:
            ad['ExitCode'] = 0
        for feature in self.spec.planted_features:
            ad[feature.name] = self.planted_value(feature, failed)
        return ad

    def build(self) -> Ledger:
        spec = self.spec
        counts = largest_remainder(spec.category_mix, spec.n_submissions)
        categories = [category for category, count in zip(CATEGORY_REPORT_ORDER, counts) for _ in range(count)]
        order = self.rng.permutation(len(categories))

        category_tasks: Counter = Counter()
        qualifying_submissions = 0
        qualifying_tasks = 0
        for s, index in enumerate(order):
            category = categories[int(index)]
            node = self.nodes[s % len(self.nodes)]
            cluster_id = FIRST_CLUSTER_ID + s
            owner = f"user{self._int(0, N_OWNERS):02d}"
            qdate = self._int(TRACE_START, TRACE_END - 86_400 * 2)
            auto_cluster = self._int(1, 500)
            outcomes = self.outcomes(category)

            category_tasks[category.value] += len(outcomes)
            if category is Category.MULTI_MIXED and len(outcomes) >= spec.min_tasks:
                qualifying_submissions += 1
                qualifying_tasks += len(outcomes)

            for proc_id, failed in enumerate(outcomes):
                self.ads[node].append(self.task_ad(cluster_id, proc_id, failed, owner, qdate, auto_cluster))
                outcome = Outcome.FAILED if failed else Outcome.SUCCEEDED
                self.labels.append([node, cluster_id, proc_id, outcome.value])

        return Ledger(
            seed=spec.seed,
            n_submissions=spec.n_submissions,
            n_tasks=len(self.labels),
            min_tasks=spec.min_tasks,
            category_submissions={c.value: count for c, count in zip(CATEGORY_REPORT_ORDER, counts)},
            category_tasks={c.value: category_tasks.get(c.value, 0) for c in CATEGORY_REPORT_ORDER},
            failure_kinds={kind.value: self.failure_kinds.get(kind.value, 0) for kind in FailureKind},
            qualifying_submissions=qualifying_submissions,
            qualifying_tasks=qualifying_tasks,
            usage_totals=dict(self.usage_totals),
            planted_effects={
                feature.name: {'kind': feature.kind.value, 'strength': feature.strength,
                               'noise_rate': spec.noise_rate}
                for feature in spec.planted_features
            },
            labels=self.labels,
        )


def generate_trace(spec: SynthSpec) -> Tuple[Dict[str, List[Dict[str, Any]]], Ledger]:
    """In-memory trace: ads per submit node and the ledger"""
    builder = _TraceBuilder(spec)
    ledger = builder.build()
    return builder.ads, ledger


def synth_trace(spec: SynthSpec, out_dir: Union[str, Path]) -> Tuple[List[Path], Ledger]:
    """
    Generate a trace and write history_<node>.json files plus ledger.json

    Args:
        spec: Validated SynthSpec
        out_dir: Output directory, created if needed

    Returns:
        (history file paths, Ledger)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ads, ledger = generate_trace(spec)

    paths = []
    for node in sorted(ads):
        path = out_dir / f"history_{node}.json"
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            json.dump(ads[node], handle, indent=1, sort_keys=True)
            handle.write('\n')
        paths.append(path)

    with open(out_dir / LEDGER_FILE, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(ledger.to_dict(), handle, indent=1, sort_keys=True)
        handle.write('\n')

    logger.info(f"✓ Synthesized {ledger.n_submissions} submissions / {ledger.n_tasks} tasks "
                f"on {len(paths)} submit nodes into {out_dir}")
    return paths, ledger


def load_ledger(path: Union[str, Path]) -> Ledger:
    with open(path, 'r', encoding='utf-8') as handle:
        return Ledger.from_dict(json.load(handle))
