import itertools
import random

import pytest

from bskiplist import PromotionParams, index as index_mod
from bskiplist.oracle import OracleMap, apply_op, diff_ops, diff_run, geometric_fit
from bskiplist.promotion import sample_height
from bskiplist.workload import OpKind, OpRecord


def test_apply_examples():
    m = OracleMap()
    assert m.apply(OpRecord(OpKind.INSERT, 5, 9)) is True
    assert m.apply(OpRecord(OpKind.FIND, 5)) == 9
    assert m.apply(OpRecord(OpKind.INSERT, 5, 10)) is False
    assert m.apply(OpRecord(OpKind.FIND, 6)) is None
    for k in (1, 7, 3):
        m.insert(k, k)
    assert m.apply(OpRecord(OpKind.RANGE, 2, 0, 2)) == [(3, 3), (5, 10)]
    assert len(m) == 4


def test_all_subsets_of_sixteen_keys():
    for mask in range(1 << 16):
        keys = [k for k in range(1, 17) if mask >> (k - 1) & 1]
        m = OracleMap()
        for k in reversed(keys):
            m.insert(k, k * 3)
        assert [k for k, _ in m.items()] == keys
        probe = 1 + mask % 17
        expected = [(k, k * 3) for k in keys if k >= probe][:3]
        assert m.scan(probe, 3) == expected
        assert (m.find(probe) is not None) == (probe in keys)


def test_all_orders_of_five_keys():
    keys = [4, 9, 11, 2, 15]
    for order in itertools.permutations(keys):
        m = OracleMap()
        for i, k in enumerate(order):
            assert m.insert(k, i)
        assert m.items() == sorted((k, order.index(k)) for k in keys)
        assert m.scan(0, 10) == m.items()


def test_diff_ops_deterministic_and_bounded():
    a = list(diff_ops(3, 2000, key_space=50, max_scan=7))
    assert a == list(diff_ops(3, 2000, key_space=50, max_scan=7))
    assert all(1 <= op.key <= 50 for op in a)
    assert all(0 <= op.scan_len <= 7 for op in a if op.kind == OpKind.RANGE)
    assert {op.kind for op in a} == set(OpKind)


def test_zero_ops_pass():
    result = diff_run(0, 0, PromotionParams(4, 0.5, 2))
    assert result.ok and result.ops_run == 0


@pytest.mark.parametrize("b,h", [(4, 2), (8, 5), (128, 5)])
def test_short_diff_runs(b, h):
    result = diff_run(7, 20_000, PromotionParams(b, 0.5, h), key_space=32 * b)
    assert result.ok, str(result)


def test_skipped_splice_is_located(monkeypatch):
    real = index_mod.split_at

    def lossy(node, rank, new):
        real(node, rank, new)
        del new.keys[1:]
        if new.values is not None:
            del new.values[1:]
        else:
            del new.children[1:]

    monkeypatch.setattr(index_mod, "split_at", lossy)
    result = diff_run(1, 20_000, PromotionParams(4, 0.5, 3), key_space=128)
    assert not result.ok
    assert result.op is not None and 0 <= result.op_index < result.ops_run
    assert "divergence at op" in str(result)


def test_apply_op_dispatch():
    m = OracleMap()
    assert apply_op(m, OpRecord(OpKind.RANGE, 1, 0, 5)) == []


def test_geometric_fit():
    params = PromotionParams()
    rng = random.Random(0)
    samples = [sample_height(params, rng) for _ in range(100_000)]
    fit = geometric_fit(samples, params.promotion_p, params.max_height)
    assert fit.passes(0.999)
    assert fit.dof >= 1
    assert sum(fit.observed) == 100_000
    bad = geometric_fit(samples, 1 / 16, params.max_height)
    assert not bad.passes(0.999)
