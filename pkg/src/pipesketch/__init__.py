"""Streaming top-k flow measurement.

Staged hash-table sketches (HashPipe and its probe-all variant), the
space saving table, and sampling/sketching baselines, plus trace I/O and
a trial-based experiment harness for accuracy/memory studies.
"""

from .backend import available_backends, get_backend
from .baselines import CmsWithCache, SampleAndHold
from .errors import ConfigError, InstrumentationError, TraceFormatError
from .flows import (EncodedTrace, ExactCounts, Granularity, KeySpace,
                    PacketRecord, TopKReport, TraceInterval, chunk_trace,
                    decode_key, encode_key, exact_topk)
from .harness import (ExperimentReport, ExperimentSpec, TrialRow,
                      compare_idealized, run_experiment)
from .hashing import HashFamily, fold_key
from .hashpipe import EvictionOutcome, HashParallel, HashPipe
from .metrics import error_curve, false_negative_rate, false_positive_rate, \
    memory_to_slots, score_report
from .spacesaving import SpaceSaving
from .traceio import (ZipfSpec, generate_zipf, load_csv, load_pcap,
                      synth_key, write_csv)

__version__ = "0.1.0"

__all__ = [
    "CmsWithCache", "ConfigError", "EncodedTrace", "EvictionOutcome",
    "ExactCounts", "ExperimentReport", "ExperimentSpec", "Granularity",
    "HashFamily", "HashParallel", "HashPipe", "InstrumentationError",
    "KeySpace", "PacketRecord", "SampleAndHold", "SpaceSaving", "TopKReport",
    "TraceFormatError", "TraceInterval", "TrialRow", "ZipfSpec",
    "available_backends", "chunk_trace", "compare_idealized", "decode_key",
    "encode_key", "error_curve", "exact_topk", "false_negative_rate",
    "false_positive_rate", "fold_key", "generate_zipf", "get_backend",
    "load_csv", "load_pcap", "memory_to_slots", "run_experiment",
    "score_report", "synth_key", "write_csv",
]
