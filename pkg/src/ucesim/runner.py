"""Deterministic (worker-count independent) ensemble convergence runs.

Realizations are partitioned into fixed-size chunks regardless of the worker
count. Each chunk is reduced sequentially in realization order, and chunk
partials are merged sequentially in chunk order, so the floating-point
grouping — and therefore every output bit — is identical for 1 or 8 workers.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np

from .column_sim import _cnot_swap_indices, initial_column
from .ensemble_stats import (
    ConvergenceCurve,
    Histogram,
    StatisticKind,
    hellinger_distance,
    intensities,
    log_intensities,
    relative_deviation,
    saturation_floor,
)
from .gateset import EnsembleConfig, realization_rng

CHUNK_SIZE = 64
_TWO_PI = 2.0 * math.pi


def _apply_random_gate(rng, state, n_q: int, p_g: float):
    """Hot-loop gate step: same draw sequence as gateset.sample_gate, but
    without building gate objects."""
    if n_q > 1 and rng.random() >= p_g:
        c = int(rng.integers(n_q))
        t = int(rng.integers(n_q - 1))
        if t >= c:
            t += 1
        src, dst = _cnot_swap_indices(n_q, c, t)
        amps = state.amplitudes
        amps[src], amps[dst] = amps[dst], amps[src]
        return
    q = int(rng.integers(n_q)) if n_q > 1 else 0
    alpha, psi, chi = rng.random(3) * _TWO_PI
    xi = rng.random()
    cos_phi = math.sqrt(1.0 - xi)
    sin_phi = math.sqrt(xi)
    phase = complex(math.cos(alpha), math.sin(alpha))
    m00 = phase * cos_phi * complex(math.cos(psi), math.sin(psi))
    m01 = phase * sin_phi * complex(math.cos(chi), math.sin(chi))
    m10 = phase * -sin_phi * complex(math.cos(chi), -math.sin(chi))
    m11 = phase * cos_phi * complex(math.cos(psi), -math.sin(psi))
    a = state.amplitudes.reshape(-1, 2, 1 << q)
    a0 = a[:, 0, :]
    a1 = a[:, 1, :]
    new0 = m00 * a0 + m01 * a1
    a[:, 1, :] = m10 * a0 + m11 * a1
    a[:, 0, :] = new0


class _Kahan:
    """Compensated accumulator; deterministic for a fixed addition order."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t

    @property
    def value(self) -> float:
        return self.s


class _Accumulator:
    """Per-chunk partial sums for every requested statistic and checkpoint."""

    def __init__(self, n_q: int, n_checkpoints: int, stats):
        self.n_q = n_q
        self.stats = stats
        self.want_pl = any(s.kind == "pl" for s in stats)
        self.scalar_stats = [s for s in stats if s.kind != "pl"]
        self._template = Histogram(1 << n_q) if self.want_pl else None
        n_bins = self._template.bin_count + 1 if self.want_pl else 0
        self.hist_counts = [np.zeros(n_bins, dtype=np.int64)
                            for _ in range(n_checkpoints)] if self.want_pl else None
        self.hist_totals = [0] * n_checkpoints
        self.sums = {(ci, s.label): _Kahan()
                     for ci in range(n_checkpoints) for s in self.scalar_stats}
        self.counts = {key: 0 for key in self.sums}

    def add_state(self, ci: int, state):
        y = intensities(state)
        if self.want_pl:
            self.hist_counts[ci] += self._template.bin_counts(log_intensities(state))
            self.hist_totals[ci] += y.size
        for s in self.scalar_stats:
            key = (ci, s.label)
            if s.kind == "mu":
                self.sums[key].add(float(np.sum(y ** s.k)))
                self.counts[key] += y.size
            elif s.kind == "c":
                nb = y.size // s.k
                blocks = y[: nb * s.k].reshape(nb, s.k)
                self.sums[key].add(float(np.sum(np.prod(blocks, axis=1))))
                self.counts[key] += nb
            else:  # mufix
                self.sums[key].add(float(y[s.row] ** s.k))
                self.counts[key] += 1

    def merge(self, other: "_Accumulator"):
        if self.want_pl:
            for ci in range(len(self.hist_totals)):
                self.hist_counts[ci] += other.hist_counts[ci]
                self.hist_totals[ci] += other.hist_totals[ci]
        for key, kah in self.sums.items():
            kah.add(other.sums[key].s)
            kah.add(-other.sums[key].c)
            self.counts[key] += other.counts[key]


def _run_chunk(args) -> _Accumulator:
    config, labels, start, stop = args
    stats = tuple(StatisticKind.parse(lb) for lb in labels)
    cps = list(config.checkpoints)
    accum = _Accumulator(config.n_q, len(cps), stats)
    for r in range(start, stop):
        rng = realization_rng(config.master_seed, r)
        state = initial_column(config.n_q)
        ci = 0
        if cps[ci] == 0:
            accum.add_state(ci, state)
            ci += 1
        for g in range(1, config.max_gates + 1):
            _apply_random_gate(rng, state, config.n_q, config.p_g)
            if ci < len(cps) and g == cps[ci]:
                accum.add_state(ci, state)
                ci += 1
    return accum


def run_ensemble(config: EnsembleConfig, statistics, workers: int = 1) -> dict:
    """Run one ensemble and return {statistic label: ConvergenceCurve}.

    ``statistics`` is an iterable of StatisticKind or label strings; all
    statistics share the same simulated realizations.
    """
    stats = [s if isinstance(s, StatisticKind) else StatisticKind.parse(s)
             for s in statistics]
    if not stats:
        raise ValueError("no statistics requested")
    n = 1 << config.n_q
    for s in stats:
        if s.kind == "mufix" and s.row >= n:
            raise ValueError(f"fixed-element row {s.row} out of range for N={n}")
        if s.kind == "c" and s.k > n:
            raise ValueError(f"correlator order {s.k} exceeds N={n}")
    labels = tuple(s.label for s in stats)
    n_r = config.resolved_n_r()
    chunk_args = [(config, labels, start, min(start + CHUNK_SIZE, n_r))
                  for start in range(0, n_r, CHUNK_SIZE)]

    if workers <= 1 or len(chunk_args) == 1:
        partials = map(_run_chunk, chunk_args)
    else:
        ctx = multiprocessing.get_context()
        with ctx.Pool(workers) as pool:
            partials = pool.map(_run_chunk, chunk_args, chunksize=1)

    total = None
    for part in partials:
        if total is None:
            total = part
        else:
            total.merge(part)

    cps = list(config.checkpoints)
    curves = {}
    for s in stats:
        points = []
        for ci, ng in enumerate(cps):
            if s.kind == "pl":
                hist = Histogram(n)
                hist.merge_counts(total.hist_counts[ci], total.hist_totals[ci])
                d = hellinger_distance(hist)
            else:
                key = (ci, s.label)
                estimate = total.sums[key].value / total.counts[key]
                d = relative_deviation(estimate, s.reference(n))
            points.append((ng, d))
        curve = ConvergenceCurve(n_q=config.n_q, statistic=s, points=points,
                                 n_r=n_r, master_seed=config.master_seed)
        if len(points) >= 4:
            curve.d_min = saturation_floor(points)
        curves[s.label] = curve
    return curves


def convergence_curve(config: EnsembleConfig, statistic, workers: int = 1) -> ConvergenceCurve:
    """Convergence curve of a single statistic for one ensemble config."""
    stat = statistic if isinstance(statistic, StatisticKind) else StatisticKind.parse(statistic)
    return run_ensemble(config, [stat], workers=workers)[stat.label]


def geometric_checkpoints(n_q: int, start: int = 2, ratio: float = math.sqrt(2.0),
                          max_mult: int = 40) -> tuple:
    """Roughly geometric gate-count grid {2, 3, 4, 6, 8, 11, 16, ...} up to
    max_mult * n_q, deduplicated."""
    limit = max_mult * n_q
    cps = []
    x = float(start)
    while round(x) <= limit:
        v = int(round(x))
        if not cps or v > cps[-1]:
            cps.append(v)
        x *= ratio
    if cps and cps[-1] < limit:
        cps.append(limit)
    return tuple(cps)
