"""Reference model and test oracles: a sorted-map twin for differential runs
and a chi-square fit of sampled heights against their exact law."""
import random
from dataclasses import dataclass
from itertools import islice

from scipy import stats
from sortedcontainers import SortedDict

from .index import BSkipList
from .promotion import height_pmf
from .workload import OpKind, OpRecord


class OracleMap:
    """Sequential ordered map with the same operation surface as the index."""

    def __init__(self):
        self._data = SortedDict()

    def insert(self, key, value):
        new = key not in self._data
        self._data[key] = value
        return new

    def find(self, key):
        return self._data.get(key)

    def scan(self, key, length):
        keys = islice(self._data.irange(minimum=key), length)
        return [(k, self._data[k]) for k in keys]

    def apply(self, op):
        return apply_op(self, op)

    def items(self):
        return list(self._data.items())

    def as_dict(self):
        return dict(self._data)

    def __len__(self):
        return len(self._data)


def apply_op(target, op):
    """Run one :class:`OpRecord` against an index or an :class:`OracleMap`.

    Insert -> newly-inserted flag, Find -> value or None, Range -> list of pairs.
    """
    if op.kind == OpKind.INSERT:
        return target.insert(op.key, op.value)
    if op.kind == OpKind.FIND:
        return target.find(op.key)
    return target.scan(op.key, op.scan_len)


def diff_ops(seed, op_count, key_space=2048, max_scan=32, mix=(0.45, 0.45, 0.10)):
    """Deterministic mixed op stream over keys ``1..key_space``.

    Range lengths run from 0 to ``max_scan`` inclusive.
    """
    rng = random.Random(seed)
    rand, bits = rng.random, rng.getrandbits
    p_insert, p_find, _ = mix
    cut = p_insert + p_find
    for _ in range(op_count):
        r = rand()
        key = 1 + int(rand() * key_space)
        if r < p_insert:
            yield OpRecord(OpKind.INSERT, key, bits(64))
        elif r < cut:
            yield OpRecord(OpKind.FIND, key)
        else:
            yield OpRecord(OpKind.RANGE, key, 0, int(rand() * (max_scan + 1)))


@dataclass
class DiffResult:
    ok: bool
    ops_run: int
    op_index: int = -1
    op: OpRecord = None
    expected: object = None
    got: object = None
    audit: object = None

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return f"diff ok after {self.ops_run} ops"
        if self.op is None:
            return f"diff: ops agreed but final audit failed\n{self.audit}"
        return (f"divergence at op #{self.op_index} {self.op}: "
                f"expected {self.expected!r}, got {self.got!r}")


def diff_run(seed, op_count, params=None, key_space=2048, index=None, audit=True):
    """Replay one seeded op stream against a fresh index and an OracleMap.

    Stops at the first divergence and reports its op index. With ``audit``,
    a final structural audit (including the leaf contents) must also pass.
    """
    if index is None:
        index = BSkipList(params, seed=seed)
    oracle = OracleMap()
    n = 0
    for n, op in enumerate(diff_ops(seed, op_count, key_space), start=1):
        expected = apply_op(oracle, op)
        got = apply_op(index, op)
        if got != expected:
            return DiffResult(False, n, n - 1, op, expected, got)
    if audit:
        report = index.audit(oracle.as_dict())
        if not report.ok:
            return DiffResult(False, n, audit=report)
    return DiffResult(True, n)


@dataclass
class GeometricFit:
    statistic: float
    dof: int
    observed: list
    expected: list

    def critical(self, level=0.999):
        return float(stats.chi2.ppf(level, self.dof)) if self.dof > 0 else 0.0

    def passes(self, level=0.999):
        return self.statistic <= self.critical(level)


def geometric_fit(samples, p, max_height, min_expected=5.0):
    """Chi-square of a height histogram against the clipped geometric law.

    Tail bins with expected count below ``min_expected`` are pooled into
    their left neighbour so the statistic stays chi-square distributed.
    """
    samples = list(samples)
    n = len(samples)
    pmf = height_pmf(p, max_height)
    observed = [0] * max_height
    for h in samples:
        observed[h] += 1
    expected = [n * q for q in pmf]

    obs, exp = list(observed), list(expected)
    while len(exp) > 1 and exp[-1] < min_expected:
        e, o = exp.pop(), obs.pop()
        exp[-1] += e
        obs[-1] += o
    statistic = 0.0
    for o, e in zip(obs, exp):
        if e > 0:
            statistic += (o - e) ** 2 / e
        elif o:
            statistic = float("inf")
    return GeometricFit(statistic, len(exp) - 1, observed, expected)
