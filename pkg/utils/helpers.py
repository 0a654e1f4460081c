"""
Utility helpers shared across the pipeline: percentages, stable digests and
interval pacing for polling loops
"""

import hashlib
import json
import logging
import math
import time
from typing import Any, Callable, Optional

logger = logging.getLogger(__name__)


def percent(part: float, whole: float, digits: int = 1) -> float:
    """
    Calculate a percentage rounded for report tables

    Args:
        part: Counted quantity
        whole: Reference total
        digits: Decimal places to keep

    Returns:
        Percentage, or 0.0 when the total is zero
    """
    if not whole:
        return 0.0
    return round(100.0 * part / whole, digits)


def canonical_json(payload: Any) -> str:
    """Serialize a JSON-compatible payload with sorted keys and no whitespace"""
    return json.dumps(payload, sort_keys=True, separators=(',', ':'), ensure_ascii=True)


def stable_digest(payload: Any, length: int = 16) -> str:
    """
    Generate a short, order-independent hash of a JSON-compatible payload

    Args:
        payload: Data to fingerprint (str payloads are hashed verbatim)
        length: Number of hex characters to keep

    Returns:
        Hex digest prefix
    """
    text = payload if isinstance(payload, str) else canonical_json(payload)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:length]


def epoch_millis() -> int:
    return time.time_ns() // 1_000_000


class MonotonicEpochClock:
    """Epoch-millisecond clock anchored once and advanced by the monotonic timer"""

    def __init__(self):
        self._anchor_ms = epoch_millis()
        self._anchor_mono = time.monotonic_ns()

    def __call__(self) -> int:
        return self._anchor_ms + (time.monotonic_ns() - self._anchor_mono) // 1_000_000


class IntervalPacer:
    """Keeps a loop on a fixed cadence, sleeping only for the remaining time"""

    def __init__(self, interval_ms: int,
                 clock: Optional[Callable[[], int]] = None,
                 sleep: Optional[Callable[[float], None]] = None):
        if interval_ms <= 0:
            raise ValueError(f"interval_ms must be positive, got {interval_ms}")
        self.interval_ms = interval_ms
        self.clock = clock or MonotonicEpochClock()
        self.sleep = sleep or time.sleep
        self.last_tick: Optional[int] = None

    def wait(self):
        """Wait if necessary so consecutive ticks are interval_ms apart"""
        now = self.clock()
        if self.last_tick is not None:
            elapsed = now - self.last_tick
            if elapsed < self.interval_ms:
                self.sleep((self.interval_ms - elapsed) / 1000.0)
                now = self.clock()
        self.last_tick = now


def is_finite_number(value: Any) -> bool:
    """True for int/float values (bools excluded) that are finite"""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    return math.isfinite(value)
