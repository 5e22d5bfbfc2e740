"""``bskip-bench``: run a YCSB workload against the B-skiplist and emit TSV."""
import argparse
import logging
import sys

from .bench import BenchConfig, ConfigError, emit, run_benchmark
from .workload import MIXES


def build_parser():
    p = argparse.ArgumentParser(prog="bskip-bench", description=__doc__)
    p.add_argument("--workload", choices=sorted(MIXES), default="a")
    p.add_argument("--dist", choices=("uniform", "zipfian"), default="uniform")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--records", type=int, default=100_000, help="load-phase record count")
    p.add_argument("--ops", type=int, default=100_000, help="run-phase operation count")
    p.add_argument("--node-bytes", type=int, default=2048, help="node size; capacity = bytes / 16")
    p.add_argument("--c-factor", type=float, default=0.5, help="promotion p = 1 / (c * capacity)")
    p.add_argument("--max-height", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--no-warmup", action="store_true", help="skip the discarded warm-up trial")
    p.add_argument("--out", default="-", help="TSV output path (default: stdout)")
    p.add_argument("--audit", action="store_true", help="audit the structure after every trial")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = BenchConfig(
        workload=args.workload,
        distribution=args.dist,
        threads=args.threads,
        record_count=args.records,
        operation_count=args.ops,
        node_bytes=args.node_bytes,
        c_factor=args.c_factor,
        max_height=args.max_height,
        seed=args.seed,
        trials=args.trials,
        warmup=not args.no_warmup,
        output=args.out,
        audit=args.audit,
    )
    try:
        config.validate()
    except ConfigError as e:
        print(f"bskip-bench: invalid configuration: {e}", file=sys.stderr)
        return 2
    result = run_benchmark(config)
    try:
        emit([result], config.output)
    except OSError as e:
        print(f"bskip-bench: {e}", file=sys.stderr)
        return 1
    if result.audit_ok is False:
        print("bskip-bench: post-run audit failed", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
