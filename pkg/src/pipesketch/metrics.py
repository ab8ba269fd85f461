"""Accuracy metrics for top-k reports.

Conventions: false negatives are normalized by k, false positives by the
number of non-heavy flows (total flows minus k), and estimation error is
relative error in percent over flows the sketch actually holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .flows import ExactCounts, Granularity


def memory_to_slots(total_bytes: int, granularity: Granularity) -> int:
    """Whole slots that fit in a byte budget (key + counter + validity)."""
    slots = total_bytes // granularity.slot_bytes
    if slots < 1:
        raise ConfigError(
            f"{total_bytes} bytes holds no {granularity.value} slot "
            f"({granularity.slot_bytes} bytes each)")
    return slots


def false_negative_rate(reported_keys, true_top) -> float:
    """Missed true top-k flows over k."""
    true_keys = {key for key, _ in true_top} if true_top and isinstance(
        next(iter(true_top)), tuple) else set(true_top)
    if not true_keys:
        return 0.0
    reported = set(reported_keys)
    return len(true_keys - reported) / len(true_keys)


def false_positive_rate(reported_keys, true_top, total_flows: int) -> float:
    """Reported non-heavy flows over the number of non-heavy flows."""
    true_keys = {key for key, _ in true_top} if true_top and isinstance(
        next(iter(true_top)), tuple) else set(true_top)
    denom = total_flows - len(true_keys)
    if denom <= 0:
        return 0.0
    reported = set(reported_keys)
    return len(reported - true_keys) / denom


@dataclass(frozen=True)
class Accuracy:
    fn_rate: float
    fp_rate: float
    reported: int
    k: int


def score_report(report, truth: ExactCounts, k: int) -> Accuracy:
    """False negative / positive rates of one report against ground truth."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    true_top = truth.top(k)
    keys = report.keys() if hasattr(report, "keys") else set(report)
    return Accuracy(
        fn_rate=false_negative_rate(keys, true_top),
        fp_rate=false_positive_rate(keys, true_top, len(truth)),
        reported=len(keys),
        k=k,
    )


def error_curve(entries: dict[bytes, int], truth: ExactCounts, thresholds,
                include_missing: bool = False) -> np.ndarray:
    """Mean relative error (percent) over flows with true count above each
    threshold.

    By default only flows present in ``entries`` contribute; with
    ``include_missing`` absent flows count as estimate 0 (100% error).
    Entries the truth has never seen are ignored.  Thresholds with no
    qualifying flows yield nan.
    """
    out = np.empty(len(thresholds))
    for i, x in enumerate(thresholds):
        errs = []
        for key, true_count in truth.counts.items():
            if true_count <= x:
                continue
            est = entries.get(key)
            if est is None:
                if not include_missing:
                    continue
                est = 0
            errs.append(abs(est - true_count) / true_count)
        out[i] = 100.0 * np.mean(errs) if errs else np.nan
    return out
