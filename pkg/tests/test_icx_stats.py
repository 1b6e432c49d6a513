import math

import numpy as np
import pytest

from conftest import mixed_samples
from empirical import make_sample
from icx_stats import (
    StatKind,
    _positive_area,
    batch_statistics,
    cvm_statistic,
    kappa,
    ks_statistic,
    oracle_statistic,
    statistic,
)


@pytest.mark.parametrize(
    "m, n, expected",
    [(50, 50, 5.0), (1, 1, math.sqrt(0.5)), (50, 30, 4.3301270189)],
)
def test_kappa(m, n, expected):
    assert kappa(m, n) == pytest.approx(expected, rel=1e-10)


def test_kappa_rejects_empty_sizes():
    with pytest.raises(ValueError):
        kappa(0, 3)


def test_ks_examples():
    assert ks_statistic(make_sample([2]), make_sample([1])) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert ks_statistic(make_sample([3]), make_sample([0, 2])) == pytest.approx(1.6329932, rel=1e-7)


def test_cvm_examples():
    assert cvm_statistic(make_sample([2]), make_sample([1])) == pytest.approx(1.0606602, rel=1e-7)


def test_cvm_zero_crossing_triangle():
    value = cvm_statistic(make_sample([2]), make_sample([0, 3]))
    assert value == pytest.approx(math.sqrt(2.0 / 3.0) * 0.25, rel=1e-14)


def test_identical_samples_give_zero(rng):
    sample = make_sample(rng.exponential(1.0, 25))
    assert ks_statistic(sample, sample) == 0.0
    assert cvm_statistic(sample, sample) == 0.0


def test_dispatch_by_kind():
    x, y = make_sample([2]), make_sample([0, 3])
    assert statistic(x, y, StatKind.KS) == ks_statistic(x, y)
    assert statistic(x, y, "cvm") == cvm_statistic(x, y)


def test_ks_is_zero_when_x_is_dominated():
    x, y = make_sample([1, 1.5]), make_sample([0.5, 4])
    assert ks_statistic(x, y) == 0.0
    assert cvm_statistic(x, y) == 0.0


def test_oracle_on_zero_crossing():
    x, y = make_sample([2]), make_sample([0, 3])
    assert oracle_statistic(x, y, StatKind.CVM, 2 ** 16) == pytest.approx(0.2041241, abs=1e-6)


def test_oracle_rejects_coarse_refinement():
    with pytest.raises(ValueError):
        oracle_statistic(make_sample([1]), make_sample([2]), StatKind.KS, 1)


def _compare_with_oracle(pairs, refinement):
    for x, y in pairs:
        xs, ys = make_sample(x), make_sample(y)
        cvm = cvm_statistic(xs, ys)
        assert abs(cvm - oracle_statistic(xs, ys, StatKind.CVM, refinement)) <= 1e-6 * (1 + cvm)
        ks = ks_statistic(xs, ys)
        assert oracle_statistic(xs, ys, StatKind.KS, 2) == pytest.approx(ks, rel=1e-12, abs=1e-12)


def test_exact_values_match_oracle(rng):
    _compare_with_oracle(mixed_samples(rng, 40), 2 ** 12)


@pytest.mark.slow
def test_exact_values_match_oracle_thousand_pairs(rng):
    _compare_with_oracle(mixed_samples(rng, 1000), 2 ** 14)


@pytest.mark.parametrize("factor", [1e-3, 1.0, 1e3])
def test_scale_equivariance(rng, factor):
    xs = make_sample(rng.gamma(2.0, 1.0, 30))
    ys = make_sample(rng.exponential(1.0, 25))
    assert ks_statistic(xs.scaled(factor), ys.scaled(factor)) == pytest.approx(factor * ks_statistic(xs, ys), rel=1e-12)
    assert cvm_statistic(xs.scaled(factor), ys.scaled(factor)) == pytest.approx(
        factor ** 2 * cvm_statistic(xs, ys), rel=1e-11
    )


def test_permutation_invariance(rng):
    x = rng.exponential(1.0, 12)
    y = rng.exponential(0.8, 17)
    shuffled = rng.permutation(x)
    assert ks_statistic(make_sample(x), make_sample(y)) == ks_statistic(make_sample(shuffled), make_sample(y))
    assert cvm_statistic(make_sample(x), make_sample(y)) == cvm_statistic(make_sample(shuffled), make_sample(y))


def test_batch_rows_equal_single_pairs_exactly(rng):
    x_rows = rng.exponential(1.2, (25, 11))
    y_rows = rng.exponential(1.0, (25, 7))
    x_rows[:, :3] = 1.0
    y_rows[:, 0] = x_rows[:, 4]
    ks, cvm = batch_statistics(x_rows, y_rows)
    for row in range(25):
        xs, ys = make_sample(x_rows[row]), make_sample(y_rows[row])
        assert ks[row] == ks_statistic(xs, ys)
        assert cvm[row] == cvm_statistic(xs, ys)


@pytest.mark.parametrize(
    "f0, f1, expected",
    [
        (0.1234567, np.nextafter(0.1234567, 1.0), 0.1234567),
        (0.5, 0.5, 0.5),
        (0.2, 0.6, 0.4),
        (1.0, -1.0, 0.25),
        (-1.0, 3.0, 1.125),
        (1.0, 0.0, 0.5),
        (-0.5, -0.5, 0.0),
        (-1e-17, 1e-17, 0.0),
    ],
)
def test_positive_area_on_unit_segment(f0, f1, expected):
    area = _positive_area(np.array([0.0]), np.array([1.0]), np.array([f0]), np.array([f1]))
    assert area[0] == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_flat_start_segment_matches_oracle():
    stream = np.random.default_rng(314)
    for _ in range(60):
        xs = make_sample(0.5 + stream.exponential(1.0, 12))
        ys = make_sample(0.5 + stream.exponential(1.0, 12))
        cvm = cvm_statistic(xs, ys)
        assert abs(cvm - oracle_statistic(xs, ys, StatKind.CVM, 2 ** 12)) <= 1e-6 * (1 + cvm)


def test_shifted_samples_keep_scale_equivariance():
    stream = np.random.default_rng(2718)
    xs = make_sample(0.5 + stream.exponential(1.0, 12))
    ys = make_sample(0.5 + stream.exponential(1.3, 12))
    base = cvm_statistic(xs, ys)
    for factor in (1e-3, 1e3):
        assert cvm_statistic(xs.scaled(factor), ys.scaled(factor)) == pytest.approx(factor ** 2 * base, rel=1e-11)
