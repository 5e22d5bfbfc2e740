import random
from fractions import Fraction

import pytest

from bskiplist import bench, cli
from bskiplist.bench import (
    PERCENTILES,
    TSV_COLUMNS,
    BenchConfig,
    ConfigError,
    TrialResult,
    aggregate,
    emit,
    lower_median,
    percentile,
    read_tsv,
    run_trial,
)


def nearest_rank_by_count(samples, q):
    """Smallest sample whose cumulative count reaches q% of n."""
    need = Fraction(str(q)) / 100 * len(samples)
    for x in sorted(set(samples)):
        if sum(1 for s in samples if s <= x) >= need:
            return x


def fake(throughput, **kw):
    base = dict(workload="a", distribution="uniform", threads=1, phase="run", ops=1000,
                seconds=1000 / throughput, throughput=throughput, p50_us=1.0, p90_us=2.0,
                p99_us=3.0, p999_us=4.0, root_write_locks=0, steps_per_level=1.5,
                leaf_nodes_per_range=0.0)
    base.update(kw)
    return TrialResult(**base)


class TestPercentile:
    def test_examples(self):
        assert percentile(list(range(1, 101)), 99) == 99
        assert percentile(list(range(1, 101)), 50) == 50
        assert percentile(list(range(1, 101)), 99.9) == 100
        for q in PERCENTILES:
            assert percentile([7.5], q) == 7.5

    def test_errors(self):
        with pytest.raises(ValueError):
            percentile([], 50)
        with pytest.raises(ValueError):
            percentile([1], 100)

    def test_second_oracle(self):
        rng = random.Random(0)
        for n in (1, 2, 10, 999, 1000, 10_000):
            samples = [rng.randint(0, 300) for _ in range(n)]
            for q in PERCENTILES:
                assert percentile(samples, q) == nearest_rank_by_count(samples, q), (n, q)


class TestAggregate:
    def test_median_of_three(self):
        assert aggregate([fake(3.0), fake(1.0), fake(2.0)]).throughput == 2.0

    def test_single_trial_identity(self):
        t = fake(5.0, p50_us=0.25)
        out = aggregate([t])
        assert out.row() == t.row()

    def test_even_count_lower_median(self):
        assert lower_median([4, 1, 3, 2]) == 2
        assert aggregate([fake(v) for v in (4.0, 1.0, 3.0, 2.0)]).throughput == 2.0

    def test_warmup_dropped(self):
        trials = [fake(100.0), fake(3.0), fake(1.0), fake(2.0)]
        assert aggregate(trials, warmup=True).throughput == 2.0
        assert aggregate(trials, warmup=False).throughput == 2.0

    def test_per_metric(self):
        out = aggregate([fake(1.0, p99_us=9.0), fake(2.0, p99_us=1.0), fake(3.0, p99_us=5.0)])
        assert (out.throughput, out.p99_us) == (2.0, 5.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestTsv:
    def test_units_hand_computed(self):
        t = fake(2000.0)  # 1000 ops in 0.5 s
        assert t.seconds == 0.5
        assert t.row()["throughput_ops_per_us"] == pytest.approx(0.002)

    def test_round_trip(self, tmp_path):
        rows = [fake(1234.5, p999_us=17.25, steps_per_level=1.0 / 3), fake(9.0, workload="e", threads=8)]
        path = tmp_path / "out.tsv"
        emit(rows, str(path))
        lines = path.read_text().splitlines()
        assert lines[0].split("\t") == list(TSV_COLUMNS) and len(TSV_COLUMNS) == 11
        assert read_tsv(str(path)) == [r.row() for r in rows]

    def test_stdout(self, capsys):
        emit([fake(1.0)])
        out = capsys.readouterr().out
        assert out.startswith("workload\tdistribution\tthreads\t")

    def test_io_error_names_path(self, tmp_path):
        target = tmp_path / "missing" / "x.tsv"
        with pytest.raises(OSError, match="missing"):
            emit([fake(1.0)], str(target))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tb\n")
        with pytest.raises(ValueError):
            read_tsv(str(path))


class TestRunTrial:
    def test_config_validation(self):
        for kw in (dict(threads=0), dict(trials=0), dict(workload="d"),
                   dict(distribution="x"), dict(node_bytes=16)):
            with pytest.raises(ConfigError):
                BenchConfig(**kw).validate()

    def test_smoke_with_audit(self):
        cfg = BenchConfig(workload="a", record_count=10_000, operation_count=5000, audit=True)
        r = run_trial(cfg)
        assert r.audit_ok is True and r.phase == "run" and r.ops == 5000
        assert r.p50_us <= r.p90_us <= r.p99_us <= r.p999_us
        assert r.throughput > 0

    def test_load_only(self):
        r = run_trial(BenchConfig(workload="load", record_count=3000, audit=True))
        assert r.phase == "load" and r.ops == 3000 and r.audit_ok

    def test_deterministic_single_thread(self):
        cfg = BenchConfig(workload="a", record_count=5000, operation_count=5000, seed=3)
        a = run_trial(cfg, keep_index=True).index
        b = run_trial(cfg, keep_index=True).index
        assert list(a.items()) == list(b.items())

    def test_multithreaded_phases(self):
        cfg = BenchConfig(workload="e", threads=3, record_count=4000, operation_count=3000,
                          node_bytes=128, audit=True)
        r = run_trial(cfg)
        assert r.audit_ok and r.leaf_nodes_per_range >= 1.0

    def test_read_only_run_takes_no_root_write_lock(self):
        r = run_trial(BenchConfig(workload="c", record_count=5000, operation_count=5000))
        assert r.root_write_locks == 0

    def test_run_benchmark(self):
        cfg = BenchConfig(workload="b", record_count=2000, operation_count=2000, trials=3)
        out = bench.run_benchmark(cfg)
        assert out.p50_us <= out.p90_us <= out.p99_us <= out.p999_us


class TestCli:
    def test_success(self, tmp_path):
        path = tmp_path / "r.tsv"
        code = cli.main(["--workload", "c", "--records", "2000", "--ops", "2000",
                         "--trials", "1", "--no-warmup", "--audit", "--out", str(path)])
        assert code == 0
        (row,) = read_tsv(str(path))
        assert row["workload"] == "c" and row["threads"] == 1

    def test_invalid_config(self, capsys):
        assert cli.main(["--threads", "0"]) == 2
        assert "invalid configuration" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        code = cli.main(["--records", "500", "--ops", "500", "--trials", "1", "--no-warmup",
                         "--out", str(tmp_path / "nope" / "r.tsv")])
        assert code == 1

    def test_audit_failure_exit(self, monkeypatch, tmp_path):
        monkeypatch.setattr(cli, "run_benchmark", lambda cfg: fake(1.0, audit_ok=False))
        assert cli.main(["--out", str(tmp_path / "r.tsv")]) == 3

    def test_unknown_workload_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            cli.main(["--workload", "d"])
