"""YCSB-style operation streams.

Load phase: ``record_count`` distinct keys, ``mix64(i)`` for ``i`` in a seeded
permutation of ``1..record_count``. Run phase: every operation is a pure
function of ``(seed, thread_id, op_index)``, so any failing operation can be
regenerated in isolation. Reads pick a record index (uniform or scrambled
zipfian) and hit ``mix64(index)``; inserts pick from the wider domain
``1..record_count + operation_count`` and may land on loaded keys.
"""
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB

#: (find %, insert %, range %)
MIXES = {
    "load": (0, 100, 0),
    "a": (50, 50, 0),
    "b": (95, 5, 0),
    "c": (100, 0, 0),
    "e": (0, 5, 95),
}


class Phase(enum.Enum):
    LOAD = "load"
    RUN = "run"


class OpKind(enum.IntEnum):
    FIND = 0
    INSERT = 1
    RANGE = 2


class OpRecord(NamedTuple):
    kind: OpKind
    key: int
    value: int = 0
    scan_len: int = 0


def mix64(x):
    """splitmix64 finalizer; a bijection on 64-bit integers with 0 -> 0."""
    x &= M64
    x = ((x ^ (x >> 30)) * _C1) & M64
    x = ((x ^ (x >> 27)) * _C2) & M64
    return x ^ (x >> 31)


def mix64_array(x):
    """Vectorized :func:`mix64` over a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_C1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_C2)
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class WorkloadSpec:
    phase: Phase = Phase.RUN
    mix: str = "a"
    record_count: int = 1000
    operation_count: int = 1000
    distribution: str = "uniform"
    theta: float = 0.99
    seed: int = 0
    max_scan_len: int = 100

    def __post_init__(self):
        if self.mix not in MIXES:
            raise ValueError(f"unknown mix {self.mix!r}; expected one of {sorted(MIXES)}")
        if self.distribution not in ("uniform", "zipfian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.record_count < 1 or self.operation_count < 1:
            raise ValueError("record_count and operation_count must be positive")
        if self.max_scan_len < 1:
            raise ValueError("max_scan_len must be positive")
        if self.phase is Phase.LOAD and self.distribution != "uniform":
            raise ValueError("the load phase is always uniform")

    @property
    def percentages(self):
        return MIXES[self.mix]

    @property
    def insert_domain(self):
        return self.record_count + self.operation_count


# ----------------------------------------------------------------------
# zipfian


class ZipfianGenerator:
    """YCSB zipfian sampler over ranks ``1..n`` with P(r) proportional to ``r**-theta``.

    Uses the rejection-free recurrence with precomputed zeta constants, so a
    draw costs one uniform variate.
    """

    def __init__(self, n, theta=0.99):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= theta < 1:
            raise ValueError("theta must be in [0, 1)")
        self.n = n
        self.theta = theta
        self.zetan = zeta(n, theta)
        self.zeta2 = zeta(min(n, 2), theta)
        self.alpha = 1.0 / (1.0 - theta)
        denom = 1.0 - self.zeta2 / self.zetan
        self.eta = (1.0 - (2.0 / n) ** (1.0 - theta)) / denom if denom > 0 else 0.0
        self._half_pow = 1.0 + 0.5**theta

    def sample(self, u):
        """Rank for a uniform variate ``u`` in [0, 1)."""
        uz = u * self.zetan
        if uz < 1.0:
            return 1
        if uz < self._half_pow:
            return 2
        r = 1 + int(self.n * (self.eta * u - self.eta + 1.0) ** self.alpha)
        return min(r, self.n)

    def sample_array(self, u):
        u = np.asarray(u, dtype=np.float64)
        uz = u * self.zetan
        with np.errstate(invalid="ignore"):
            tail = 1 + np.floor(self.n * (self.eta * u - self.eta + 1.0) ** self.alpha)
        tail = np.minimum(np.nan_to_num(tail, nan=1.0), self.n)
        return np.where(uz < 1.0, 1, np.where(uz < self._half_pow, 2, tail)).astype(np.int64)

    def __call__(self, rng):
        return self.sample(rng.random())

    def pmf(self, rank):
        """Analytic probability of ``rank``."""
        return rank**-self.theta / self.zetan


def zeta(n, theta, chunk=1 << 22):
    total = 0.0
    for start in range(1, n + 1, chunk):
        i = np.arange(start, min(n, start + chunk - 1) + 1, dtype=np.float64)
        total += float(np.sum(i**-theta))
    return total


# ----------------------------------------------------------------------
# counter-based randomness: one 64-bit word per (seed, thread, op, lane)

_LANES = 3  # kind, key, value/scan length


def _stream_base(seed, thread_id):
    base = mix64((seed & M64) ^ _GOLDEN)
    return mix64(base ^ (((thread_id + 1) * _C1) & M64))


def _word(stream, op_index, lane):
    return mix64(stream + (op_index * _LANES + lane + 1) * _GOLDEN)


def _words(stream, op_indices, lane):
    idx = np.asarray(op_indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(stream) + (idx * np.uint64(_LANES) + np.uint64(lane + 1)) * np.uint64(_GOLDEN)
    return mix64_array(x)


def _unit(word):
    return (word >> 11) * (1.0 / (1 << 53))


def _unit_array(words):
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# ----------------------------------------------------------------------
# phases


def load_order(spec):
    """Record indices ``1..record_count`` in load order (seeded permutation)."""
    rng = np.random.default_rng(spec.seed)
    return rng.permutation(spec.record_count).astype(np.uint64) + np.uint64(1)


def load_keys(spec):
    """Keys of the load phase in load order, as a uint64 array."""
    return mix64_array(load_order(spec))


def load_value(record_index):
    return record_index


def generate_load(spec):
    """Yield the load phase as Insert records."""
    order = load_order(spec)
    keys = mix64_array(order)
    for idx, key in zip(order.tolist(), keys.tolist()):
        yield OpRecord(OpKind.INSERT, key, load_value(idx))


class RunStream:
    """Run-phase operation source for one spec; holds the zipfian constants."""

    def __init__(self, spec):
        self.spec = spec
        find_pct, insert_pct, _ = spec.percentages
        self._find_cut = find_pct / 100.0
        self._insert_cut = (find_pct + insert_pct) / 100.0
        self.zipf = ZipfianGenerator(spec.record_count, spec.theta) if spec.distribution == "zipfian" else None

    def _record(self, u):
        if self.zipf is not None:
            return self.zipf.sample(u)
        return 1 + min(int(u * self.spec.record_count), self.spec.record_count - 1)

    def next_op(self, thread_id, op_index):
        spec = self.spec
        stream = _stream_base(spec.seed, thread_id)
        u_kind = _unit(_word(stream, op_index, 0))
        w_key = _word(stream, op_index, 1)
        w_aux = _word(stream, op_index, 2)
        if u_kind < self._find_cut:
            return OpRecord(OpKind.FIND, mix64(self._record(_unit(w_key))))
        if u_kind < self._insert_cut:
            idx = 1 + min(int(_unit(w_key) * spec.insert_domain), spec.insert_domain - 1)
            return OpRecord(OpKind.INSERT, mix64(idx), w_aux)
        scan_len = 1 + min(int(_unit(w_aux) * spec.max_scan_len), spec.max_scan_len - 1)
        return OpRecord(OpKind.RANGE, mix64(self._record(_unit(w_key))), 0, scan_len)

    def batch(self, thread_id, start, count):
        """Ops ``start..start+count`` of one thread as parallel arrays
        ``(kinds, keys, values, scan_lens)``, identical to :meth:`next_op`."""
        spec = self.spec
        stream = _stream_base(spec.seed, thread_id)
        idx = np.arange(start, start + count, dtype=np.uint64)
        u_kind = _unit_array(_words(stream, idx, 0))
        u_key = _unit_array(_words(stream, idx, 1))
        w_aux = _words(stream, idx, 2)
        kinds = np.where(u_kind < self._find_cut, OpKind.FIND,
                         np.where(u_kind < self._insert_cut, OpKind.INSERT, OpKind.RANGE)).astype(np.int8)
        if self.zipf is not None:
            records = self.zipf.sample_array(u_key)
        else:
            records = 1 + np.minimum((u_key * spec.record_count).astype(np.int64), spec.record_count - 1)
        inserted = 1 + np.minimum((u_key * spec.insert_domain).astype(np.int64), spec.insert_domain - 1)
        is_insert = kinds == OpKind.INSERT
        keys = mix64_array(np.where(is_insert, inserted, records).astype(np.uint64))
        values = np.where(is_insert, w_aux, np.uint64(0))
        scan = 1 + np.minimum((_unit_array(w_aux) * spec.max_scan_len).astype(np.int64), spec.max_scan_len - 1)
        scan_lens = np.where(kinds == OpKind.RANGE, scan, 0)
        return kinds, keys, values, scan_lens

    def ops(self, thread_id, start=0, count=None):
        if count is None:
            count = self.spec.operation_count - start
        kinds, keys, values, scans = self.batch(thread_id, start, count)
        for kind, key, value, scan in zip(kinds.tolist(), keys.tolist(), values.tolist(), scans.tolist()):
            yield OpRecord(OpKind(kind), key, value, scan)


def next_op(spec, thread_id, op_index):
    """Single run-phase operation. Building a :class:`RunStream` once is
    cheaper when drawing many."""
    return RunStream(spec).next_op(thread_id, op_index)


def binomial_halfwidth(p, n, sigmas=4.0):
    return sigmas * math.sqrt(p * (1 - p) / n)
