"""Throughput comparison of the python and compiled update kernels.

Feeds one synthetic trace to every scheme on each available backend and
reports packets per second plus the compiled-over-python speedup:

    python benchmarks/bench_backends.py --packets 1000000 --repeat 3
"""

import argparse
import time

from pipesketch.backend import available_backends
from pipesketch.baselines import CmsWithCache, SampleAndHold
from pipesketch.flows import Granularity
from pipesketch.hashpipe import HashParallel, HashPipe
from pipesketch.spacesaving import SpaceSaving
from pipesketch.traceio import ZipfSpec, generate_zipf


def build_factories(args, keyspace):
    slot_bytes = Granularity.FIVE_TUPLE.slot_bytes
    return {
        "spacesaving": lambda b: SpaceSaving(
            args.slots, keyspace=keyspace, backend=b),
        "hashpipe": lambda b: HashPipe(
            args.slots, args.d, seed=args.seed, keyspace=keyspace, backend=b),
        "hashparallel": lambda b: HashParallel(
            args.slots, args.d, seed=args.seed, keyspace=keyspace, backend=b),
        "samplehold": lambda b: SampleAndHold(
            args.slots, expected_packets=args.packets, seed=args.seed,
            keyspace=keyspace, backend=b),
        "cmscache": lambda b: CmsWithCache.from_bytes(
            args.slots * slot_bytes, args.threshold, seed=args.seed,
            keyspace=keyspace, backend=b),
    }


def best_time(factory, backend, trace, repeat):
    best = None
    for _ in range(repeat):
        sketch = factory(backend)
        t0 = time.perf_counter()
        sketch.consume(trace)
        dt = time.perf_counter() - t0
        if best is None or dt < best:
            best = dt
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--flows", type=int, default=10_000)
    parser.add_argument("--packets", type=int, default=1_000_000)
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--slots", type=int, default=4500)
    parser.add_argument("--d", type=int, default=6)
    parser.add_argument("--threshold", type=int, default=100,
                        help="sketch-to-cache admission count for cmscache")
    parser.add_argument("--repeat", type=int, default=3,
                        help="runs per cell, best time kept")
    args = parser.parse_args(argv)

    backends = sorted(available_backends())
    trace = generate_zipf(ZipfSpec(num_flows=args.flows,
                                   num_packets=args.packets,
                                   alpha=args.alpha, seed=args.seed))
    factories = build_factories(args, trace.keyspace)

    print(f"{args.packets:,} packets, {args.flows:,} flows, "
          f"alpha {args.alpha:g}, {args.slots} slots, d={args.d}, "
          f"best of {args.repeat}")
    header = f"{'scheme':<14}" + "".join(f"{b + ' Mpps':>16}" for b in backends)
    if "compiled" in backends and "python" in backends:
        header += f"{'speedup':>10}"
    print(header)
    for name, factory in factories.items():
        times = {b: best_time(factory, b, trace, args.repeat)
                 for b in backends}
        row = f"{name:<14}" + "".join(
            f"{args.packets / times[b] / 1e6:>16.2f}" for b in backends)
        if "compiled" in times and "python" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
