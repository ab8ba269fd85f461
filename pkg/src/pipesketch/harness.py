"""Experiment orchestration: sweeps, trials, and report files.

One experiment streams the same per-trial trace through every requested
scheme at the same slot budget, scores each against the shared exact-count
oracle, and aggregates across trials.  Sweeps run along exactly one axis
(stage count, memory, k, or overreport factor).  Reports are written as
flat CSV and a JSON variant carrying per-cell distributions; identical
specs and seeds produce byte-identical files regardless of --jobs, which
is why wall-clock timing never enters the report.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baselines import CmsWithCache, SampleAndHold
from .errors import ConfigError
from .flows import EncodedTrace, ExactCounts, Granularity, chunk_trace
from .hashpipe import HashParallel, HashPipe
from .metrics import score_report
from .spacesaving import SpaceSaving
from .traceio import ZipfSpec, generate_zipf, load_csv, load_pcap

SCHEMES = ("hashpipe", "hashparallel", "spacesaving", "samplehold", "cmscache")
STAGED_SCHEMES = ("hashpipe", "hashparallel")
SWEEP_AXES = ("none", "d", "memory", "k", "overreport_factor")

CSV_COLUMNS = ["scheme", "sweep_axis", "sweep_value", "trial", "seed",
               "fn_rate", "fp_rate", "dup_frac", "slots", "bytes",
               "config_hash"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    The workload is either a trace file (chunked into ``trials`` equal
    intervals) or, when ``trace_path`` is None, a fresh synthetic Zipf
    draw per trial seeded with base_seed + trial.
    """

    schemes: tuple[str, ...] = SCHEMES
    slots: int = 4500
    d: int = 6
    k: int = 150
    overreport_factor: float = 1.0
    sweep_axis: str = "none"
    sweep_values: tuple[float, ...] = ()
    trials: int = 10
    base_seed: int = 1
    granularity: Granularity = Granularity.FIVE_TUPLE
    trace_path: str | None = None
    weight_mode: str = "packets"
    num_flows: int = 10_000
    num_packets: int = 1_000_000
    alpha: float = 1.0
    oversampling: float = 1.0
    eviction_sample_every: int = 0
    jobs: int = 1


def validate_spec(spec: ExperimentSpec) -> None:
    if not spec.schemes:
        raise ConfigError("at least one scheme required")
    for name in spec.schemes:
        if name not in SCHEMES:
            raise ConfigError(f"unknown scheme {name!r} (choose from {', '.join(SCHEMES)})")
    if spec.sweep_axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {spec.sweep_axis!r}")
    if spec.sweep_axis == "none":
        if spec.sweep_values:
            raise ConfigError("sweep_values given without a sweep axis")
    else:
        if not spec.sweep_values:
            raise ConfigError(f"sweep along {spec.sweep_axis} needs sweep_values")
        low = 1.0 if spec.sweep_axis == "overreport_factor" else 1
        for v in spec.sweep_values:
            if v < low:
                raise ConfigError(f"sweep value {v} below minimum {low}")
    if spec.sweep_axis == "d" and not any(s in STAGED_SCHEMES for s in spec.schemes):
        raise ConfigError("stage-count sweep needs a staged scheme")
    if spec.slots < 1 or spec.d < 1 or spec.k < 1 or spec.trials < 1:
        raise ConfigError("slots, d, k, and trials must all be >= 1")
    if spec.overreport_factor < 1.0:
        raise ConfigError("overreport_factor must be >= 1")
    if spec.jobs < 1:
        raise ConfigError("jobs must be >= 1")


def config_hash(spec: ExperimentSpec) -> str:
    """Short stable digest of the spec; jobs is excluded because it may
    not affect results."""
    blob = asdict(spec)
    blob["granularity"] = spec.granularity.value
    blob.pop("jobs")
    text = json.dumps(blob, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class TrialRow:
    """One (scheme, sweep point, trial) measurement.  Rates are nan when
    the point was infeasible for the scheme (e.g. fewer slots than
    stages); the run carries on."""

    scheme: str
    sweep_axis: str
    sweep_value: float
    trial: int
    seed: int
    fn_rate: float
    fp_rate: float
    dup_frac: float
    slots: int
    bytes: int
    config_hash: str


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    config_hash: str
    rows: list[TrialRow]
    summary: dict = field(default_factory=dict)
    distributions: dict = field(default_factory=dict)

    def rows_for(self, scheme: str, sweep_value: float | None = None) -> list[TrialRow]:
        return [r for r in self.rows if r.scheme == scheme
                and (sweep_value is None or r.sweep_value == sweep_value)]

    def mean_fn(self, scheme: str, sweep_value: float | None = None) -> float:
        vals = [r.fn_rate for r in self.rows_for(scheme, sweep_value)
                if not math.isnan(r.fn_rate)]
        return float(np.mean(vals)) if vals else float("nan")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([
                    r.scheme, r.sweep_axis, f"{r.sweep_value:g}", r.trial,
                    r.seed, f"{r.fn_rate:.6f}", f"{r.fp_rate:.6f}",
                    f"{r.dup_frac:.6f}", r.slots, r.bytes, r.config_hash,
                ])

    def to_dict(self) -> dict:
        blob = asdict(self.spec)
        blob["granularity"] = self.spec.granularity.value
        return {
            "spec": blob,
            "config_hash": self.config_hash,
            "rows": [_row_dict(r) for r in self.rows],
            "summary": self.summary,
            "distributions": self.distributions,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _row_dict(r: TrialRow) -> dict:
    d = asdict(r)
    for key in ("fn_rate", "fp_rate", "dup_frac"):
        if math.isnan(d[key]):
            d[key] = None
    return d


def _cell_key(scheme: str, axis: str, value: float) -> str:
    return f"{scheme}|{axis}|{value:g}"


def summarize(rows: list[TrialRow]) -> dict:
    """Cross-trial means, standard errors, and raw distributions per
    (scheme, sweep point) cell."""
    cells: dict[str, list[TrialRow]] = {}
    for r in rows:
        cells.setdefault(_cell_key(r.scheme, r.sweep_axis, r.sweep_value), []).append(r)
    out = {}
    for key, cell in sorted(cells.items()):
        fn = [r.fn_rate for r in cell if not math.isnan(r.fn_rate)]
        fp = [r.fp_rate for r in cell if not math.isnan(r.fp_rate)]
        dup = [r.dup_frac for r in cell if not math.isnan(r.dup_frac)]
        out[key] = {
            "trials": len(cell),
            "errors": len(cell) - len(fn),
            "fn_mean": float(np.mean(fn)) if fn else None,
            "fn_sem": _sem(fn),
            "fp_mean": float(np.mean(fp)) if fp else None,
            "fp_sem": _sem(fp),
            "dup_mean": float(np.mean(dup)) if dup else None,
            "fn_values": fn,
            "fp_values": fp,
        }
    return out


def _sem(values) -> float | None:
    if not values:
        return None
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _build_scheme(name: str, budget_slots: int, d: int, spec: ExperimentSpec,
                  keyspace, seed: int, threshold: int, expected_packets: int):
    g = spec.granularity
    if name == "hashpipe":
        return HashPipe(budget_slots, d, seed=seed, granularity=g, keyspace=keyspace,
                        eviction_sample_every=spec.eviction_sample_every)
    if name == "hashparallel":
        return HashParallel(budget_slots, d, seed=seed, granularity=g, keyspace=keyspace)
    if name == "spacesaving":
        return SpaceSaving(budget_slots, granularity=g, keyspace=keyspace)
    if name == "samplehold":
        return SampleAndHold(budget_slots, expected_packets=expected_packets,
                             oversampling=spec.oversampling, granularity=g,
                             keyspace=keyspace, seed=seed)
    if name == "cmscache":
        return CmsWithCache.from_bytes(budget_slots * g.slot_bytes, threshold,
                                       granularity=g, keyspace=keyspace, seed=seed)
    raise ConfigError(f"unknown scheme {name!r}")


def _consume_all(names, budget_slots, d, spec, trace, truth, seed):
    """Build and feed each scheme; infeasible ones come back as None."""
    threshold = max(1, truth.top(spec.k)[-1][1])
    built = []
    for name in names:
        try:
            scheme = _build_scheme(name, budget_slots, d, spec, trace.keyspace,
                                   seed, threshold, len(trace))
            scheme.consume(trace)
        except ConfigError:
            scheme = None
        built.append((name, scheme))
    return built


def _score_rows(built, truth, k, factor, axis, value, trial, seed,
                budget_slots, spec, digest):
    rows = []
    for name, scheme in built:
        if scheme is None:
            rows.append(TrialRow(name, axis, float(value), trial, seed,
                                 float("nan"), float("nan"), float("nan"),
                                 budget_slots,
                                 budget_slots * spec.granularity.slot_bytes,
                                 digest))
            continue
        acc = score_report(scheme.report(k, factor), truth, k)
        dup = scheme.duplicate_fraction() if hasattr(scheme, "duplicate_fraction") else 0.0
        rows.append(TrialRow(name, axis, float(value), trial, seed,
                             acc.fn_rate, acc.fp_rate, float(dup),
                             budget_slots, scheme.memory_bytes, digest))
    return rows


def _run_trial(spec: ExperimentSpec, trial: int,
               trace: EncodedTrace | None) -> list[TrialRow]:
    seed = spec.base_seed + trial
    if trace is None:
        trace = generate_zipf(ZipfSpec(spec.num_flows, spec.num_packets,
                                       spec.alpha, seed=seed,
                                       granularity=spec.granularity))
    truth = trace.exact_counts()
    digest = config_hash(spec)
    axis = spec.sweep_axis
    rows: list[TrialRow] = []

    if axis in ("none", "k", "overreport_factor"):
        # report-time sweeps reuse one filled table per scheme
        built = _consume_all(spec.schemes, spec.slots, spec.d, spec, trace, truth, seed)
        values = spec.sweep_values if axis != "none" else (0.0,)
        for value in values:
            k = int(value) if axis == "k" else spec.k
            factor = float(value) if axis == "overreport_factor" else spec.overreport_factor
            rows += _score_rows(built, truth, k, factor, axis, value, trial,
                                seed, spec.slots, spec, digest)
    elif axis == "memory":
        for value in spec.sweep_values:
            built = _consume_all(spec.schemes, int(value), spec.d, spec, trace,
                                 truth, seed)
            rows += _score_rows(built, truth, spec.k, spec.overreport_factor,
                                axis, value, trial, seed, int(value), spec, digest)
    elif axis == "d":
        staged = [s for s in spec.schemes if s in STAGED_SCHEMES]
        for value in spec.sweep_values:
            built = _consume_all(staged, spec.slots, int(value), spec, trace,
                                 truth, seed)
            rows += _score_rows(built, truth, spec.k, spec.overreport_factor,
                                axis, value, trial, seed, spec.slots, spec, digest)
    return rows


def _trial_payloads(spec: ExperimentSpec) -> list[EncodedTrace | None]:
    """None per trial for synthetic workloads; equal-size file chunks
    (sharing one key space) otherwise."""
    if spec.trace_path is None:
        return [None] * spec.trials
    path = str(spec.trace_path)
    if path.endswith((".pcap", ".cap", ".pcapng")):
        load = load_pcap(path, spec.granularity, spec.weight_mode)
    else:
        load = load_csv(path, spec.granularity, spec.weight_mode)
    per_trial = len(load.records) // spec.trials
    if per_trial < 1:
        raise ConfigError(
            f"{len(load.records)} records cannot fill {spec.trials} trials")
    intervals = chunk_trace(load.records, by_count=per_trial)[: spec.trials]
    keyspace = None
    out = []
    for iv in intervals:
        enc = EncodedTrace.from_records(iv.records, keyspace, iv.interval_id)
        keyspace = enc.keyspace
        out.append(enc)
    return out


def _worker(args) -> list[TrialRow]:
    return _run_trial(*args)


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    validate_spec(spec)
    payloads = _trial_payloads(spec)
    jobs = [(spec, trial, payloads[trial]) for trial in range(spec.trials)]
    if spec.jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=min(spec.jobs, spec.trials)) as pool:
            per_trial = list(pool.map(_worker, jobs))
    else:
        per_trial = [_worker(job) for job in jobs]
    rows = [row for chunk in per_trial for row in chunk]
    rows.sort(key=lambda r: (r.scheme, r.sweep_axis, r.sweep_value, r.trial))
    return ExperimentReport(spec=spec, config_hash=config_hash(spec),
                            rows=rows, summary=summarize(rows))


def compare_idealized(spec: ExperimentSpec) -> ExperimentReport:
    """Head-to-head of the table schemes with oracle-assisted baselines
    left out: an overreporting sweep plus the two slow-path distributions
    (sampled eviction sizes for the pipelined scheme, keys-per-counter for
    space saving) collected on the first trial."""
    sweep = spec.sweep_values if spec.sweep_axis == "overreport_factor" else (1.0, 1.5, 2.0)
    base = replace(spec, schemes=("spacesaving", "hashparallel", "hashpipe"),
                   sweep_axis="overreport_factor", sweep_values=tuple(sweep))
    report = run_experiment(base)
    report.distributions = _idealized_distributions(base)
    return report


def _idealized_distributions(spec: ExperimentSpec) -> dict:
    seed = spec.base_seed
    if spec.trace_path is not None:
        trace = _trial_payloads(spec)[0]
    else:
        trace = generate_zipf(ZipfSpec(spec.num_flows, spec.num_packets,
                                       spec.alpha, seed=seed,
                                       granularity=spec.granularity))
    hp = HashPipe(spec.slots, spec.d, seed=seed, granularity=spec.granularity,
                  keyspace=trace.keyspace,
                  eviction_sample_every=spec.eviction_sample_every or 97)
    hp.consume(trace)
    ss = SpaceSaving(spec.slots, granularity=spec.granularity,
                     keyspace=trace.keyspace, track_contributors=True)
    ss.consume(trace)
    ccdf = hp.eviction_ccdf(10)
    kpc = ss.keys_per_counter()
    hist = np.bincount(kpc, minlength=2) if len(kpc) else np.zeros(2, dtype=np.int64)
    return {
        "hashpipe_evicted_ccdf": [float(x) for x in ccdf],
        "hashpipe_eviction_samples": int(len(hp.eviction_samples())),
        "spacesaving_keys_per_counter_hist": [int(x) for x in hist],
    }
