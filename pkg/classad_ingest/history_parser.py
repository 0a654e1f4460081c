"""
HTCondor History Parser
=======================
Reads `condor_history --json` output (a JSON array of flat class-ads) and
normalizes each ad into a TaskRecord.

Attribute names are matched case-sensitively; HTCondor emits canonical
casing in its JSON output.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Dict, List, Optional, Union

from utils.errors import TaskseerError

logger = logging.getLogger(__name__)

AdValue = Union[int, float, bool, str, None]
ClassAd = Dict[str, AdValue]

# Attributes lifted out of the raw map into typed TaskRecord fields
WELL_KNOWN_ATTRIBUTES = (
    'ClusterId',
    'ProcId',
    'JobStatus',
    'ExitCode',
    'RemoveReason',
    'LastHoldReason',
    'NumJobStarts',
)

VALID_JOB_STATUSES = frozenset(range(1, 8))

_INT_LITERAL = re.compile(r'^[+-]?\d+$')
_REAL_LITERAL = re.compile(r'^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$')


class HistoryParseError(TaskseerError):
    """Malformed history file; carries the byte offset of the failure"""

    def __init__(self, message: str, byte_offset: int, source: str = '<stream>'):
        super().__init__(f"{source}: {message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset
        self.source = source


class NormalizationError(TaskseerError):
    """A well-known attribute has the wrong type or an out-of-range value"""

    def __init__(self, attribute: str, value: Any, problem: str = "is not an integer"):
        super().__init__(f"attribute {attribute} {problem}: {value!r}")
        self.attribute = attribute
        self.value = value


@dataclass
class ParsedHistory:
    """Ads retained from one history file plus the skipped-element count"""
    ads: List[ClassAd] = field(default_factory=list)
    skipped: int = 0
    total: int = 0


@dataclass(frozen=True)
class TaskRecord:
    """One normalized HTCondor task"""
    cluster_id: int
    proc_id: int
    job_status: Optional[int]
    exit_code: Optional[int]
    remove_reason: Optional[str]
    last_hold_reason: Optional[str]
    num_job_starts: Optional[int]
    source_node: str
    raw: Dict[str, AdValue] = field(default_factory=dict)

    @property
    def key(self):
        return (self.source_node, self.cluster_id, self.proc_id)

    @property
    def completion_date(self) -> Optional[float]:
        value = self.raw.get('CompletionDate')
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        return value

    def feature_attributes(self) -> ClassAd:
        """Class-ad view used for feature extraction (identifiers and label excluded)"""
        attributes = dict(self.raw)
        for name, value in (('ExitCode', self.exit_code),
                            ('RemoveReason', self.remove_reason),
                            ('LastHoldReason', self.last_hold_reason),
                            ('NumJobStarts', self.num_job_starts)):
            if value is not None:
                attributes[name] = value
        return attributes

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cluster_id': self.cluster_id,
            'proc_id': self.proc_id,
            'job_status': self.job_status,
            'exit_code': self.exit_code,
            'remove_reason': self.remove_reason,
            'last_hold_reason': self.last_hold_reason,
            'num_job_starts': self.num_job_starts,
            'source_node': self.source_node,
            'raw': {name: self.raw[name] for name in sorted(self.raw)},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TaskRecord':
        return cls(
            cluster_id=data['cluster_id'],
            proc_id=data['proc_id'],
            job_status=data.get('job_status'),
            exit_code=data.get('exit_code'),
            remove_reason=data.get('remove_reason'),
            last_hold_reason=data.get('last_hold_reason'),
            num_job_starts=data.get('num_job_starts'),
            source_node=data['source_node'],
            raw=dict(data.get('raw') or {}),
        )


def coerce_ad_value(value: Any) -> AdValue:
    """
    Map a decoded JSON value onto the AdValue variants

    Args:
        value: Value as produced by the JSON decoder

    Returns:
        int, float, bool, str or None (undefined)
    """
    if value is None or isinstance(value, (bool, int, float)):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.lower() == 'undefined' or text == '':
            return None
        if _INT_LITERAL.match(text):
            return int(text)
        if _REAL_LITERAL.match(text):
            return float(text)
        return value
    # Nested expressions are kept as their canonical JSON text
    return json.dumps(value, sort_keys=True)


def _ad_from_pairs(pairs):
    ad = {}
    for name, value in pairs:
        if name in ad:
            logger.debug(f"Duplicate attribute {name} in ad; keeping the last value")
        ad[name] = value
    return ad


def parse_history_stream(stream: Union[BinaryIO, bytes], source: str = '<stream>') -> ParsedHistory:
    """
    Parse one condor_history --json file

    Args:
        stream: Binary file object or raw bytes
        source: Name used in error and warning messages

    Returns:
        ParsedHistory with ads in file order and the skipped-element count

    Raises:
        HistoryParseError: Malformed JSON or a top-level value that is not an array
    """
    payload = stream if isinstance(stream, (bytes, bytearray)) else stream.read()

    try:
        text = bytes(payload).decode('utf-8')
    except UnicodeDecodeError as e:
        raise HistoryParseError(f"invalid UTF-8: {e.reason}", e.start, source) from e

    try:
        document = json.loads(text, object_pairs_hook=_ad_from_pairs)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode('utf-8'))
        raise HistoryParseError(e.msg, offset, source) from e

    if not isinstance(document, list):
        raise HistoryParseError("top-level value is not a JSON array", 0, source)

    parsed = ParsedHistory(total=len(document))
    for index, element in enumerate(document):
        if not isinstance(element, dict):
            logger.warning(f"{source}: element {index} is not an object, skipped")
            parsed.skipped += 1
            continue

        ad = {name: coerce_ad_value(value) for name, value in element.items()}
        missing = [name for name in ('ClusterId', 'ProcId') if ad.get(name) is None]
        if missing:
            logger.warning(f"{source}: element {index} lacks {', '.join(missing)}, skipped")
            parsed.skipped += 1
            continue

        parsed.ads.append(ad)

    if parsed.skipped:
        logger.warning(f"{source}: skipped {parsed.skipped} of {parsed.total} elements")
    return parsed


def _as_int(ad: ClassAd, name: str, required: bool) -> Optional[int]:
    value = ad.get(name)
    if value is None:
        if required:
            raise NormalizationError(name, value)
        return None
    if isinstance(value, bool):
        raise NormalizationError(name, value)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise NormalizationError(name, value)


def _optional_int(ad: ClassAd, name: str) -> Optional[int]:
    try:
        return _as_int(ad, name, required=False)
    except NormalizationError:
        logger.debug(f"Non-integer {name}={ad.get(name)!r} left in raw attributes")
        return None


def _optional_text(value: AdValue) -> Optional[str]:
    if value is None:
        return None
    return value if isinstance(value, str) else str(value)


def normalize_task(ad: ClassAd, source_node: str) -> TaskRecord:
    """
    Extract the typed well-known fields of a class-ad

    Args:
        ad: Parsed class-ad containing ClusterId and ProcId
        source_node: Submit-host identifier the ad came from

    Returns:
        TaskRecord with every other attribute kept in raw

    Raises:
        NormalizationError: ClusterId, ProcId or JobStatus is not a valid integer
    """
    cluster_id = _as_int(ad, 'ClusterId', required=True)
    proc_id = _as_int(ad, 'ProcId', required=True)
    job_status = _as_int(ad, 'JobStatus', required=False)
    if job_status is not None and job_status not in VALID_JOB_STATUSES:
        raise NormalizationError('JobStatus', job_status, 'is not a valid status code')

    exit_code = _optional_int(ad, 'ExitCode')
    num_job_starts = _optional_int(ad, 'NumJobStarts')

    raw = {name: value for name, value in ad.items() if name not in WELL_KNOWN_ATTRIBUTES}
    # Non-integer optional fields stay visible to feature extraction
    if exit_code is None and ad.get('ExitCode') is not None:
        raw['ExitCode'] = ad['ExitCode']
    if num_job_starts is None and ad.get('NumJobStarts') is not None:
        raw['NumJobStarts'] = ad['NumJobStarts']

    last_hold_reason = ad.get('LastHoldReason')
    if last_hold_reason is None:
        last_hold_reason = ad.get('HoldReason')

    return TaskRecord(
        cluster_id=cluster_id,
        proc_id=proc_id,
        job_status=job_status,
        exit_code=exit_code,
        remove_reason=_optional_text(ad.get('RemoveReason')),
        last_hold_reason=_optional_text(last_hold_reason),
        num_job_starts=num_job_starts,
        source_node=source_node,
        raw=raw,
    )
