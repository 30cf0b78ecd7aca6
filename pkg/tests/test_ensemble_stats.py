import math

import numpy as np
import pytest

from ucesim.column_sim import StateColumn, initial_column
from ucesim.cue_ref import cue_correlator, cue_moment, sample_haar_first_column
from ucesim.ensemble_stats import (
    Histogram,
    StatisticKind,
    accumulate,
    correlator_estimate,
    hellinger_distance,
    log_intensities,
    moment_estimate,
    relative_deviation,
    saturation_floor,
)
from ucesim.gateset import EnsembleConfig
from ucesim.runner import convergence_curve, run_ensemble


def uniform_state(n_q):
    n = 1 << n_q
    return StateColumn(n_q, np.full(n, 1 / math.sqrt(n), dtype=complex))


def haar_states(n_q, count, seed):
    rng = np.random.default_rng(seed)
    n = 1 << n_q
    return [StateColumn(n_q, sample_haar_first_column(n, rng)) for _ in range(count)]


class _StubHist:
    """Duck-typed histogram with prescribed masses, for formula checks."""

    def __init__(self, emp, ref):
        self.emp = np.asarray(emp, float)
        self.ref = np.asarray(ref, float)

    def empirical_masses(self):
        return self.emp

    def cue_masses(self):
        return self.ref


def test_statistic_kind_labels_roundtrip():
    for label in ("pl", "mu1", "mu8", "c2", "mu4x3"):
        assert StatisticKind.parse(label).label == label
    with pytest.raises(ValueError):
        StatisticKind.parse("mu9")
    with pytest.raises(ValueError):
        StatisticKind.parse("bogus")


def test_log_intensities_uniform_and_e0():
    assert np.allclose(log_intensities(uniform_state(3)), 0.0, atol=1e-14)
    l = log_intensities(initial_column(2))
    assert l[0] == pytest.approx(math.log(4))
    assert np.all(np.isneginf(l[1:]))


def test_log_intensities_bounded_by_ln_n():
    for state in haar_states(4, 50, 0):
        assert np.max(log_intensities(state)) <= math.log(16) + 1e-9


def test_histogram_accumulate_basics():
    hist = Histogram(16)
    accumulate(hist, [])
    assert hist.total == 0
    accumulate(hist, [math.log(16) - 1e-6])
    assert hist.counts[-1] == 1
    accumulate(hist, [-math.inf, hist.l_min - 5.0])
    assert hist.counts[0] == 2
    assert hist.total == 3


def test_histogram_rejects_values_above_ln_n():
    with pytest.raises(ValueError):
        Histogram(16).add([math.log(16) + 1e-3])


def test_histogram_cue_masses_sum_to_one():
    for n in (4, 16, 1024):
        assert abs(Histogram(n).cue_masses().sum() - 1.0) < 1e-12


def test_histogram_matches_cue_reference_bin_by_bin():
    n_q, count = 4, 12_500  # 2*10^5 column elements at N = 16
    hist = Histogram(16)
    for state in haar_states(n_q, count, 1):
        accumulate(hist, log_intensities(state))
    expected = hist.total * hist.cue_masses()
    sigma = np.sqrt(hist.total * hist.cue_masses() * (1 - hist.cue_masses()))
    dev = np.abs(hist.counts - expected)
    # +1 count slack: near-empty bins cannot deviate by less than one count
    assert np.all(dev <= 4 * sigma + 1)


def test_hellinger_exact_match_is_zero():
    masses = Histogram(8).cue_masses()
    assert hellinger_distance(_StubHist(masses, masses)) == pytest.approx(0.0)


def test_hellinger_two_bin_toy():
    d = hellinger_distance(_StubHist([0.5, 0.5], [1.0, 0.0]))
    assert d == pytest.approx(2 * (1 - math.sqrt(0.5)), abs=1e-12)
    assert d == pytest.approx(0.585786, abs=1e-6)


def test_hellinger_disjoint_supports_near_two():
    assert hellinger_distance(_StubHist([1.0, 0.0], [0.0, 1.0])) == pytest.approx(2.0)


def test_hellinger_bounds_on_real_histograms():
    hist = Histogram(16)
    for state in haar_states(4, 200, 2):
        accumulate(hist, log_intensities(state))
    assert 0.0 <= hellinger_distance(hist) <= 2.0


def test_hellinger_empty_histogram_raises():
    with pytest.raises(ValueError):
        hellinger_distance(Histogram(4))


def test_moment_estimate_uniform_and_e0():
    for k in (1, 2, 4, 8):
        assert moment_estimate([uniform_state(3)], k) == pytest.approx(1.0)
    assert moment_estimate([initial_column(2)], 2) == pytest.approx(4.0)


def test_moment_estimate_first_moment_exact():
    states = haar_states(4, 50, 3)
    assert moment_estimate(states, 1) == pytest.approx(1.0, abs=1e-12)


def test_moment_estimate_against_haar_oracle():
    states = haar_states(2, 20_000, 4)
    y2 = np.concatenate([(4 * np.abs(s.amplitudes) ** 2) ** 2 for s in states])
    se = y2.std() / math.sqrt(y2.size)
    assert abs(moment_estimate(states, 2) - cue_moment(2, 4)) < 3 * se


def test_moment_estimate_fixed_element():
    states = haar_states(2, 20_000, 5)
    y2 = np.array([(4 * abs(s.amplitudes[1]) ** 2) ** 2 for s in states])
    est = moment_estimate(states, 2, row=1)
    assert est == pytest.approx(y2.mean())
    se = y2.std() / math.sqrt(y2.size)
    assert abs(est - cue_moment(2, 4)) < 3 * se


def test_moment_estimate_empty_stream():
    with pytest.raises(ValueError):
        moment_estimate([], 2)


def test_correlator_uniform_and_e0():
    for k in (1, 2, 4):
        assert correlator_estimate([uniform_state(3)], k) == pytest.approx(1.0)
    assert correlator_estimate([initial_column(3)], 2) == pytest.approx(0.0)


def test_correlator_equals_moment_at_k1():
    states = haar_states(3, 100, 6)
    assert correlator_estimate(states, 1) == pytest.approx(moment_estimate(states, 1))


def test_correlator_against_haar_oracle():
    states = haar_states(3, 20_000, 7)
    prods = np.concatenate([
        (8 * np.abs(s.amplitudes) ** 2).reshape(4, 2).prod(axis=1) for s in states])
    se = prods.std() / math.sqrt(prods.size)
    assert abs(correlator_estimate(states, 2) - cue_correlator(2, 8)) < 3 * se


def test_correlator_rejects_k_above_n():
    with pytest.raises(ValueError):
        correlator_estimate([initial_column(1)], 4)


def test_relative_deviation():
    assert relative_deviation(1.6, 1.6) == 0.0
    assert relative_deviation(3.2, 1.6) == 1.0
    assert relative_deviation(1.6 * (1 + 1e-3), 1.6) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        relative_deviation(1.0, 0.0)


def test_saturation_floor():
    flat = [(n, 0.04) for n in (5, 10, 20, 50)]
    assert saturation_floor(flat) == pytest.approx(0.04)
    pts = [(n, d) for n, d in zip(range(1, 13),
                                  [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2,
                                   0.1, 0.05, 0.04, 0.041])]
    assert saturation_floor(pts) == pytest.approx(0.041)
    with pytest.raises(ValueError):
        saturation_floor(flat[:3])


def test_saturation_floor_synthetic_decay():
    ngs = np.arange(1, 101)
    pts = [(int(n), 0.03 + math.exp(-n / 5)) for n in ngs]
    assert abs(saturation_floor(pts) - 0.03) < 0.003


def test_convergence_curve_checkpoint_zero_moment():
    cfg = EnsembleConfig(n_q=2, checkpoints=(0, 2), master_seed=1, n_r=5, sizing=None)
    curve = convergence_curve(cfg, "mu2")
    assert curve.points[0] == (0, pytest.approx(1.5))  # |4 - 1.6| / 1.6


def test_convergence_curve_qualitative_decrease():
    cfg = EnsembleConfig(n_q=4, checkpoints=(5, 10, 20, 50), master_seed=2,
                         n_r=1000, sizing=None)
    curve = convergence_curve(cfg, "pl")
    d = curve.distances()
    assert all(b < a for a, b in zip(d, d[1:]))
    assert d[-1] <= d[0] / 10


def test_run_ensemble_worker_count_invariance():
    cfg = EnsembleConfig(n_q=3, checkpoints=(3, 6, 12, 24), master_seed=3,
                         n_r=300, sizing=None)
    stats = ["pl", "mu2", "c2", "mu2x1"]
    a = run_ensemble(cfg, stats, workers=1)
    b = run_ensemble(cfg, stats, workers=8)
    for label in stats:
        assert a[label].points == b[label].points


def test_run_ensemble_sizing_rule():
    cfg = EnsembleConfig(n_q=5, checkpoints=(2,), master_seed=0, sizing=(10, 8))
    assert cfg.resolved_n_r() == 10 * 2 ** 3
    curve = convergence_curve(cfg, "mu1")
    assert curve.n_r == 80
    # first moment is pinned to 1 by normalization regardless of convergence
    assert curve.points[0][1] < 1e-10


def test_run_ensemble_validates_statistics():
    cfg = EnsembleConfig(n_q=2, checkpoints=(2,), master_seed=0, n_r=2, sizing=None)
    with pytest.raises(ValueError):
        run_ensemble(cfg, ["mu2x7"])  # row 7 out of range for N = 4
    with pytest.raises(ValueError):
        run_ensemble(cfg, ["c8"])  # block longer than the column
