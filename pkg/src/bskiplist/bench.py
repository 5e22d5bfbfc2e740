"""Multi-threaded YCSB benchmark harness: load then run, batched latency
sampling, median-of-trials aggregation and TSV output."""
import csv
import logging
import math
import sys
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .index import BSkipList
from .promotion import PromotionParams
from .workload import MIXES, OpKind, Phase, RunStream, WorkloadSpec, load_order, mix64_array

log = logging.getLogger(__name__)

BATCH = 10
PERCENTILES = (50, 90, 99, 99.9)
TSV_COLUMNS = (
    "workload",
    "distribution",
    "threads",
    "throughput_ops_per_us",
    "p50_us",
    "p90_us",
    "p99_us",
    "p999_us",
    "root_write_locks",
    "steps_per_level",
    "leaf_nodes_per_range",
)


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    workload: str = "a"
    distribution: str = "uniform"
    threads: int = 1
    record_count: int = 100_000
    operation_count: int = 100_000
    node_bytes: int = 2048
    c_factor: float = 0.5
    max_height: int = 5
    seed: int = 0
    trials: int = 5
    warmup: bool = True
    output: str = None
    audit: bool = False
    theta: float = 0.99

    def validate(self):
        if self.workload not in MIXES:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if self.distribution not in ("uniform", "zipfian"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.record_count < 1 or self.operation_count < 1:
            raise ConfigError("records and ops must be >= 1")
        try:
            self.params()
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return self

    def params(self):
        return PromotionParams.from_node_bytes(self.node_bytes, self.c_factor, self.max_height)

    def spec(self, phase):
        return WorkloadSpec(
            phase=phase,
            mix="load" if phase is Phase.LOAD else self.workload,
            record_count=self.record_count,
            operation_count=self.operation_count,
            distribution="uniform" if phase is Phase.LOAD else self.distribution,
            theta=self.theta,
            seed=self.seed,
        )


@dataclass
class TrialResult:
    workload: str
    distribution: str
    threads: int
    phase: str
    ops: int
    seconds: float
    throughput: float
    p50_us: float
    p90_us: float
    p99_us: float
    p999_us: float
    root_write_locks: int
    steps_per_level: float
    leaf_nodes_per_range: float
    audit_ok: bool = None
    index: BSkipList = field(default=None, repr=False, compare=False)

    @property
    def throughput_ops_per_us(self):
        return self.throughput / 1e6

    def row(self):
        return {
            "workload": self.workload,
            "distribution": self.distribution,
            "threads": self.threads,
            "throughput_ops_per_us": self.throughput_ops_per_us,
            "p50_us": self.p50_us,
            "p90_us": self.p90_us,
            "p99_us": self.p99_us,
            "p999_us": self.p999_us,
            "root_write_locks": self.root_write_locks,
            "steps_per_level": self.steps_per_level,
            "leaf_nodes_per_range": self.leaf_nodes_per_range,
        }


def percentile(samples, q):
    """Nearest-rank percentile: element ``ceil(q/100 * n) - 1`` of the sorted samples."""
    if not samples:
        raise ValueError("percentile of an empty sample set")
    if not 0 < q < 100:
        raise ValueError(f"q must be in (0, 100), got {q}")
    ordered = sorted(samples)
    rank = math.ceil(Fraction(str(q)) * len(ordered) / 100)
    return ordered[max(rank, 1) - 1]


def lower_median(values):
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


class LatencyCollector:
    """Append-only, thread-safe store of per-batch mean latencies (µs)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._samples = []

    def extend(self, samples):
        with self._lock:
            self._samples.extend(samples)

    def samples(self):
        with self._lock:
            return list(self._samples)


def _run_threads(n, target):
    """Start ``n`` workers behind a barrier; returns wall seconds from release to join."""
    barrier = threading.Barrier(n + 1)
    errors = []

    def worker(t):
        try:
            barrier.wait()
            target(t)
        except BaseException as e:  # surfaced after join
            errors.append(e)

    threads = [threading.Thread(target=worker, args=(t,), name=f"bench-{t}") for t in range(n)]
    for th in threads:
        th.start()
    barrier.wait()
    start = time.perf_counter()
    for th in threads:
        th.join()
    elapsed = time.perf_counter() - start
    if errors:
        raise errors[0]
    return elapsed


def _timed_batches(run_one, n_ops, collector):
    local = []
    clock = time.perf_counter
    for start in range(0, n_ops, BATCH):
        stop = min(start + BATCH, n_ops)
        t0 = clock()
        for j in range(start, stop):
            run_one(j)
        local.append((clock() - t0) * 1e6 / (stop - start))
    collector.extend(local)


def load_phase(index, spec, threads, collector):
    """Insert the load records, thread ``t`` taking records ``t::threads``.
    Returns ``(wall_seconds, ops)``."""
    order = load_order(spec)
    keys = mix64_array(order).tolist()
    values = order.tolist()

    def work(t):
        mine_k = keys[t::threads]
        mine_v = values[t::threads]
        insert = index.insert

        def run_one(j):
            insert(mine_k[j], mine_v[j])

        _timed_batches(run_one, len(mine_k), collector)

    return _run_threads(threads, work), len(keys)


def _noop(_k, _v):
    pass


def run_phase(index, spec, threads, collector):
    """Each thread runs its share of ``spec.operation_count`` ops from its own
    stream. Returns ``(wall_seconds, ops)``."""
    stream = RunStream(spec)
    share, extra = divmod(spec.operation_count, threads)
    batches = []
    for t in range(threads):
        n = share + (1 if t < extra else 0)
        kinds, keys, values, scans = stream.batch(t, 0, n)
        batches.append((kinds.tolist(), keys.tolist(), values.tolist(), scans.tolist()))

    def work(t):
        kinds, keys, values, scans = batches[t]
        find, insert, scan = index.find, index.insert, index.range
        FIND, INSERT = OpKind.FIND, OpKind.INSERT

        def run_one(j):
            kind = kinds[j]
            if kind == FIND:
                find(keys[j])
            elif kind == INSERT:
                insert(keys[j], values[j])
            else:
                scan(keys[j], scans[j], _noop)

        _timed_batches(run_one, len(kinds), collector)

    return _run_threads(threads, work), spec.operation_count


def run_trial(config, keep_index=False):
    """Load phase then (unless the workload is ``load``) run phase; returns the
    measurements of the reported phase."""
    config.validate()
    index = BSkipList(config.params(), seed=config.seed)
    load_lat = LatencyCollector()
    before = index.stats.snapshot()
    seconds, ops = load_phase(index, config.spec(Phase.LOAD), config.threads, load_lat)
    counters = index.stats.since(before)
    samples = load_lat.samples()
    phase = "load"
    if config.workload != "load":
        run_lat = LatencyCollector()
        before = index.stats.snapshot()
        seconds, ops = run_phase(index, config.spec(Phase.RUN), config.threads, run_lat)
        counters = index.stats.since(before)
        samples = run_lat.samples()
        phase = "run"

    audit_ok = None
    if config.audit:
        report = index.audit()
        audit_ok = report.ok
        if not report.ok:
            log.error("%s", report)

    pct = [percentile(samples, q) for q in PERCENTILES]
    return TrialResult(
        workload=config.workload,
        distribution=config.distribution,
        threads=config.threads,
        phase=phase,
        ops=ops,
        seconds=seconds,
        throughput=ops / seconds if seconds > 0 else float("inf"),
        p50_us=pct[0],
        p90_us=pct[1],
        p99_us=pct[2],
        p999_us=pct[3],
        root_write_locks=counters.root_write_locks,
        steps_per_level=counters.steps_per_level,
        leaf_nodes_per_range=counters.leaf_nodes_per_range,
        audit_ok=audit_ok,
        index=index if keep_index else None,
    )


def aggregate(trials, warmup=False):
    """Per-metric median across trials (lower median for even counts).

    With ``warmup`` the first trial is discarded.
    """
    trials = list(trials)
    if warmup and len(trials) > 1:
        trials = trials[1:]
    if not trials:
        raise ValueError("no trials to aggregate")
    first = trials[0]
    audits = [t.audit_ok for t in trials if t.audit_ok is not None]
    return TrialResult(
        workload=first.workload,
        distribution=first.distribution,
        threads=first.threads,
        phase=first.phase,
        ops=first.ops,
        seconds=lower_median([t.seconds for t in trials]),
        throughput=lower_median([t.throughput for t in trials]),
        p50_us=lower_median([t.p50_us for t in trials]),
        p90_us=lower_median([t.p90_us for t in trials]),
        p99_us=lower_median([t.p99_us for t in trials]),
        p999_us=lower_median([t.p999_us for t in trials]),
        root_write_locks=lower_median([t.root_write_locks for t in trials]),
        steps_per_level=lower_median([t.steps_per_level for t in trials]),
        leaf_nodes_per_range=lower_median([t.leaf_nodes_per_range for t in trials]),
        audit_ok=all(audits) if audits else None,
    )


def run_benchmark(config):
    """Optional warm-up trial plus ``config.trials`` measured trials, aggregated."""
    config.validate()
    n = config.trials + (1 if config.warmup else 0)
    trials = []
    for i in range(n):
        trial = run_trial(config)
        log.info("trial %d/%d: %.3f ops/us p50=%.2fus", i + 1, n, trial.throughput_ops_per_us, trial.p50_us)
        trials.append(trial)
    return aggregate(trials, warmup=config.warmup)


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(results, path=None):
    """Write one TSV header row and one row per result to ``path`` (stdout if
    ``path`` is None or ``-``)."""
    rows = [r.row() if isinstance(r, TrialResult) else r for r in results]

    def write(fh):
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(TSV_COLUMNS)
        for row in rows:
            w.writerow([_format(row[c]) for c in TSV_COLUMNS])

    if path is None or path == "-":
        write(sys.stdout)
        return
    try:
        with open(path, "w", newline="") as fh:
            write(fh)
    except OSError as e:
        raise OSError(e.errno, f"cannot write results to {path}: {e.strerror}") from e


_INT_COLUMNS = {"threads", "root_write_locks"}
_STR_COLUMNS = {"workload", "distribution"}


def read_tsv(path):
    """Parse a file written by :func:`emit` back into a list of row dicts."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader)
        if tuple(header) != TSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for rec in reader:
            row = {}
            for name, text in zip(header, rec):
                if name in _STR_COLUMNS:
                    row[name] = text
                elif name in _INT_COLUMNS:
                    row[name] = int(text)
                else:
                    row[name] = float(text)
            rows.append(row)
    return rows
