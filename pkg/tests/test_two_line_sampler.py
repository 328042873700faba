import math
from math import comb

import numpy as np
import pytest

from opentasep import (
    DomainError,
    ResourceLimitError,
    build_generator,
    build_partition_table,
    height_endpoint_distribution,
    params_from_ab,
    sample_functionals,
    sample_two_line,
    solve_stationary,
    stationary_weights_recursive,
    tle_enumerate,
)
from opentasep.two_line_sampler import _log_c_plain


def joint_counts(paths, n):
    d1, d2 = paths.increments()
    powers = 1 << np.arange(n, dtype=np.int64)
    idx = (d1 @ powers) * (1 << n) + d2 @ powers
    return np.bincount(idx, minlength=4**n).astype(float)


class TestPartitionTable:
    def test_single_site_value(self):
        t = build_partition_table(1, 2.0, 1.0)
        assert math.exp(t.log_l[1, 0]) == pytest.approx(5.0)  # 1 + a + b + 1

    def test_log_c_triple_point(self):
        t = build_partition_table(2, 1.0, 1.0)
        assert t.log_c == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 2.0), (2.0, 1.0), (3.0, 3.0)])
    def test_log_c_matches_enumeration(self, a, b):
        for n in range(1, 11):
            t = build_partition_table(n, a, b)
            e = tle_enumerate(n, a, b)
            assert abs(t.log_c - math.log(e.c)) <= 1e-10 * max(1.0, abs(math.log(e.c)))

    def test_value_recurrence(self):
        # V_j(d, m) satisfies the backward recurrence with multiplicities
        # (1, 2, 1) and terminal values d log b - m log(ab)
        t = build_partition_table(4, 2.0, 0.5)
        a, b = 2.0, 0.5
        for j in range(4):
            for d in range(-j, j + 1):
                for m in range(-j, min(0, d) + 1):
                    if d - m > j:
                        continue
                    acc = -math.inf
                    for delta, mult in ((-1, 1.0), (0, 2.0), (1, 1.0)):
                        nd = d + delta
                        nm = min(m, nd)
                        acc = np.logaddexp(acc, math.log(mult) + t.value(j + 1, nd, nm))
                    assert t.value(j, d, m) == pytest.approx(acc, rel=1e-12)
        for d in range(-4, 5):
            for m in range(-4, min(0, d) + 1):
                if d - m > 4:
                    continue
                assert t.value(4, d, m) == pytest.approx(
                    d * math.log(b) - m * math.log(a * b), rel=1e-12
                )

    def test_value_rejects_unreachable(self):
        t = build_partition_table(4, 2.0, 0.5)
        with pytest.raises(DomainError):
            t.value(1, 2, 0)
        with pytest.raises(DomainError):
            t.value(2, 0, 1)

    def test_log_domain_matches_plain(self):
        for n in (5, 17, 30):
            for a, b in [(2.0, 1.0), (0.5, 0.5), (1.0, 3.0)]:
                log_c = build_partition_table(n, a, b, log_c_only=True)
                assert abs(log_c - _log_c_plain(n, a, b)) <= 1e-10 * max(1.0, abs(log_c))

    def test_caps(self):
        with pytest.raises(ResourceLimitError):
            build_partition_table(0, 1.0, 1.0)
        with pytest.raises(ResourceLimitError):
            build_partition_table(100_001, 1.0, 1.0, log_c_only=True)
        with pytest.raises(ResourceLimitError):
            build_partition_table(50_000, 1.0, 1.0)  # full table would be ~40 GB


class TestSampler:
    def test_single_site_up_probability(self):
        # P(s1 up-step) = (1+b)/(2+a+b) = 2/5 at (a, b) = (2, 1)
        t = build_partition_table(1, 2.0, 1.0)
        paths = sample_two_line(t, 200_000, seed=3)
        frac = paths.s1[:, 1].mean()
        assert abs(frac - 0.4) <= 3.0 * math.sqrt(0.4 * 0.6 / 200_000)

    def test_paths_are_valid(self):
        t = build_partition_table(7, 0.5, 2.0)
        paths = sample_two_line(t, 1000, seed=1)
        for arr in (paths.s1, paths.s2):
            assert (arr[:, 0] == 0).all()
            steps = np.diff(arr, axis=1)
            assert ((steps == 0) | (steps == 1)).all()

    def test_determinism_and_chunk_merge(self):
        t = build_partition_table(5, 0.5, 2.0)
        p1 = sample_two_line(t, 40_000, seed=11)
        p2 = sample_two_line(t, 40_000, seed=11)
        assert np.array_equal(p1.s1, p2.s1) and np.array_equal(p1.s2, p2.s2)
        p4 = sample_two_line(t, 40_000, seed=11, threads=4)
        assert np.array_equal(p1.s1, p4.s1) and np.array_equal(p1.s2, p4.s2)

    def test_joint_frequencies_chi_square(self):
        # goodness-of-fit of 10^6 draws against the enumerated joint;
        # the statistic is within 5 sigma of its df for an exact sampler
        n, a, b = 6, 0.5, 2.0
        t = build_partition_table(n, a, b)
        e = tle_enumerate(n, a, b)
        probs = (e.joint / e.joint.sum()).ravel()
        counts = joint_counts(sample_two_line(t, 10**6, seed=4), n)
        expected = probs * 10**6
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        df = 4**n - 1
        assert abs(chi2 - df) <= 5.0 * math.sqrt(2.0 * df)

    def test_marginal_tv_against_generator(self):
        # s1-marginal of 10^6 exact samples vs the Markov stationary law
        n, a, b = 6, 0.5, 2.0
        t = build_partition_table(n, a, b)
        paths = sample_two_line(t, 10**6, seed=7)
        d1, _ = paths.increments()
        idx = d1 @ (1 << np.arange(n, dtype=np.int64))
        emp = np.bincount(idx, minlength=1 << n).astype(float)
        emp /= emp.sum()
        p = params_from_ab(a, b)
        pi = solve_stationary(build_generator(n, p.alpha, p.beta))
        assert 0.5 * np.abs(emp - pi).sum() <= 3e-3

    def test_fair_coin_increments_at_triple_point(self):
        # weight identically 1: s1 increments are i.i.d. fair coins
        t = build_partition_table(8, 1.0, 1.0)
        paths = sample_two_line(t, 10**6, seed=13)
        d1, _ = paths.increments()
        counts = np.bincount(d1.ravel(), minlength=2).astype(float)
        total = counts.sum()
        chi2 = float(((counts - total / 2) ** 2 / (total / 2)).sum())
        # chi-square with 1 df: 1e-3 level threshold is 10.83
        assert chi2 <= 10.83
        # and adjacent increments are uncorrelated
        c = np.corrcoef(d1[:, 0], d1[:, 1])[0, 1]
        assert abs(c) <= 4.0 / math.sqrt(d1.shape[0])

    def test_functionals_match_paths(self):
        t = build_partition_table(9, 0.7, 1.4)
        paths = sample_two_line(t, 5000, seed=21)
        s1, d = sample_functionals(t, 5000, seed=21, positions=[3, 9])
        assert np.array_equal(s1[:, 0], paths.s1[:, 3])
        assert np.array_equal(s1[:, 1], paths.s1[:, 9])
        assert np.array_equal(d[:, 1], paths.s1[:, 9] - paths.s2[:, 9])


class TestMaximalInequalities:
    @pytest.mark.parametrize("n", [50, 200])
    def test_levy_ottaviani_bound(self, n):
        # E[c^(-min(S1-S2))] <= 1 + 2 E[c^|S1(N)-S2(N)|] for independent fair
        # walks; checked within 3 combined standard errors (the c=2, N=200
        # case is heavy-tailed, so only the noise-aware reading is testable)
        t = build_partition_table(n, 1.0, 1.0)
        paths = sample_two_line(t, 10**5, seed=12)
        diff = paths.s1 - paths.s2
        mins = diff.min(axis=1).astype(float)
        d = diff[:, -1].astype(float)
        for c in (1.2, 2.0):
            lhs = c ** (-mins)
            rhs = 1.0 + 2.0 * c ** np.abs(d)
            slack = rhs - lhs
            se = slack.std(ddof=1) / math.sqrt(slack.size)
            assert slack.mean() >= -3.0 * se

    @pytest.mark.parametrize("n", [50, 200])
    def test_moment_bound(self, n):
        t = build_partition_table(n, 1.0, 1.0)
        paths = sample_two_line(t, 10**5, seed=12)
        d = (paths.s1[:, -1] - paths.s2[:, -1]).astype(float)
        lam = 2.0 / math.sqrt(n)
        emp = np.exp(lam * np.abs(d)).mean()
        assert emp <= 2.0 * math.exp(lam**2 * n / 2.0)


class TestEndpointDistribution:
    def test_binomial_at_triple_point(self):
        for n in (5, 40):
            dp = height_endpoint_distribution(n, 1.0, 1.0)
            binom = np.array([comb(n, k) * 0.5**n for k in range(n + 1)])
            assert np.max(np.abs(dp - binom)) <= 1e-12

    @pytest.mark.parametrize("a,b", [(2.0, 1.0), (0.5, 0.5), (3.0, 3.0)])
    def test_matches_exact_marginal(self, a, b):
        for n in (4, 8):
            rec = stationary_weights_recursive(n, a, b)
            probs = rec.probabilities()
            marg = np.zeros(n + 1)
            for i in range(1 << n):
                marg[bin(i).count("1")] += probs[i]
            dp = height_endpoint_distribution(n, a, b)
            assert np.max(np.abs(dp - marg)) <= 1e-10

    def test_sums_to_one(self):
        dp = height_endpoint_distribution(100, 2.0, 1.0)
        assert dp.sum() == pytest.approx(1.0, abs=1e-10)

    def test_mean_near_density(self):
        dp = height_endpoint_distribution(100, 2.0, 1.0)
        mean = float(np.arange(101) @ dp) / 100
        assert abs(mean - 1 / 3) <= 0.02

    def test_cap(self):
        with pytest.raises(ResourceLimitError):
            height_endpoint_distribution(121, 1.0, 1.0)


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        t = build_partition_table(3, 0.5, 2.0)
        paths = sample_two_line(t, 4, seed=2)
        path = tmp_path / "samples.csv"
        paths.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "s1_1,s1_2,s1_3,s2_1,s2_2,s2_3"
        assert len(lines) == 5
        d1, d2 = paths.increments()
        first = [int(x) for x in lines[1].split(",")]
        assert first == list(d1[0]) + list(d2[0])

    def test_binary_format(self, tmp_path):
        t = build_partition_table(9, 0.5, 2.0)
        paths = sample_two_line(t, 3, seed=2)
        path = tmp_path / "samples.bin"
        paths.write_binary(path)
        raw = path.read_bytes()
        assert int.from_bytes(raw[:4], "little") == 9
        per_line = (9 + 7) // 8
        assert len(raw) == 4 + 3 * 2 * per_line
        d1, d2 = paths.increments()
        offset = 4
        for i in range(3):
            bits1 = int.from_bytes(raw[offset : offset + per_line], "little")
            offset += per_line
            bits2 = int.from_bytes(raw[offset : offset + per_line], "little")
            offset += per_line
            assert [((bits1 >> j) & 1) for j in range(9)] == list(d1[i])
            assert [((bits2 >> j) & 1) for j in range(9)] == list(d2[i])


def test_endpoint_csv(tmp_path):
    from opentasep.two_line_sampler import write_endpoint_csv

    dist = height_endpoint_distribution(3, 1.0, 1.0)
    path = tmp_path / "endpoint.csv"
    write_endpoint_csv(dist, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,probability"
    assert len(lines) == 5
    assert float(lines[1].split(",")[1]) == pytest.approx(0.125)
