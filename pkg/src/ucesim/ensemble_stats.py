"""Ensemble accumulators and distances to the CUE reference.

Statistics are gathered over both circuit realizations and the elements of
the first column: the binned log-intensity distribution, moments of
y = N |U_i1|^2 up to order 8, and non-overlapping same-column intensity
correlators. Distances are a Hellinger-type histogram distance (bounded by
2) and relative deviations for moments/correlators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .column_sim import StateColumn
from .cue_ref import cue_bin_mass, cue_correlator, cue_moment

DEFAULT_BIN_COUNT = 200
DEFAULT_L_MARGIN = 30.0  # l_min = ln N - margin
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class StatisticKind:
    """One of: distribution 'pl', moment 'mu', correlator 'c', or a
    fixed-element moment 'mufix' probed at a single row."""

    kind: str
    k: int = 0
    row: int = 0

    def __post_init__(self):
        if self.kind not in ("pl", "mu", "c", "mufix"):
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if self.kind != "pl" and not 1 <= self.k <= 8:
            raise ValueError("moment/correlator order k must be in 1..8")
        if self.row < 0:
            raise ValueError("row must be >= 0")

    @property
    def label(self) -> str:
        if self.kind == "pl":
            return "pl"
        if self.kind == "mu":
            return f"mu{self.k}"
        if self.kind == "c":
            return f"c{self.k}"
        return f"mu{self.k}x{self.row}"

    @classmethod
    def parse(cls, label: str) -> "StatisticKind":
        if label == "pl":
            return cls("pl")
        m = re.fullmatch(r"mu(\d+)x(\d+)", label)
        if m:
            return cls("mufix", k=int(m.group(1)), row=int(m.group(2)))
        m = re.fullmatch(r"mu(\d+)", label)
        if m:
            return cls("mu", k=int(m.group(1)))
        m = re.fullmatch(r"c(\d+)", label)
        if m:
            return cls("c", k=int(m.group(1)))
        raise ValueError(f"cannot parse statistic {label!r}")

    def reference(self, N: int) -> float:
        """CUE limit of the estimator (undefined for 'pl')."""
        if self.kind == "pl":
            raise ValueError("'pl' has no scalar reference; use the histogram")
        if self.kind == "c":
            return cue_correlator(self.k, N)
        return cue_moment(self.k, N)


class Histogram:
    """Uniform-bin histogram of log-intensities on [l_min, ln N] with an
    underflow bin for l < l_min (including l = -inf).

    Reference bin masses come from the closed-form CDF, so they sum to 1
    exactly over underflow + bins.
    """

    def __init__(self, N: int, l_min: float | None = None,
                 bin_count: int = DEFAULT_BIN_COUNT):
        if N < 2:
            raise ValueError("N must be >= 2")
        if bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        self.N = N
        self.ln_n = math.log(N)
        self.l_min = self.ln_n - DEFAULT_L_MARGIN if l_min is None else float(l_min)
        if self.l_min >= self.ln_n:
            raise ValueError("l_min must lie below ln N")
        self.bin_count = bin_count
        self.edges = np.linspace(self.l_min, self.ln_n, bin_count + 1)
        # counts[0] is the underflow bin; counts[1:] the regular bins.
        self.counts = np.zeros(bin_count + 1, dtype=np.int64)
        self.total = 0

    def bin_counts(self, values) -> np.ndarray:
        """Counts vector (underflow + bins) for a batch; does not mutate."""
        v = np.asarray(values, dtype=float)
        out = np.zeros(self.bin_count + 1, dtype=np.int64)
        if v.size == 0:
            return out
        if np.any(v > self.ln_n + _EDGE_TOL):
            raise ValueError("log-intensity above ln N: normalization bug")
        v = np.minimum(v, self.ln_n)
        under = v < self.l_min
        out[0] = int(np.count_nonzero(under))
        hist, _ = np.histogram(v[~under], bins=self.edges)
        out[1:] = hist
        return out

    def add(self, values) -> "Histogram":
        v = np.asarray(values, dtype=float)
        self.counts += self.bin_counts(v)
        self.total += v.size
        return self

    def merge_counts(self, counts: np.ndarray, total: int) -> "Histogram":
        self.counts += counts
        self.total += int(total)
        return self

    def empirical_masses(self) -> np.ndarray:
        if self.total == 0:
            raise ValueError("empty histogram")
        return self.counts / self.total

    def cue_masses(self) -> np.ndarray:
        masses = np.empty(self.bin_count + 1)
        masses[0] = cue_bin_mass(-math.inf, self.l_min, self.N)
        masses[1:] = cue_bin_mass(self.edges[:-1], self.edges[1:], self.N)
        return masses


def log_intensities(state: StateColumn) -> np.ndarray:
    """l_i = ln(N |a_i|^2); exact zeros map to -inf."""
    n = state.amplitudes.size
    with np.errstate(divide="ignore"):
        return np.log(n * np.abs(state.amplitudes) ** 2)


def accumulate(hist: Histogram, values) -> Histogram:
    """Add a batch of log-intensity values to the histogram."""
    return hist.add(values)


def hellinger_distance(hist: Histogram) -> float:
    """D_P = 2 (1 - sum_b sqrt(p~_b p_b)) over underflow + regular bins."""
    p_emp = hist.empirical_masses()
    p_ref = hist.cue_masses()
    return float(2.0 * (1.0 - np.sum(np.sqrt(p_emp * p_ref))))


def intensities(state: StateColumn) -> np.ndarray:
    """y_i = N |a_i|^2."""
    return state.amplitudes.size * np.abs(state.amplitudes) ** 2


def moment_estimate(states, k: int, row: int | None = None) -> float:
    """Mean of y^k over all column elements and realizations.

    With ``row`` given, only that element is probed (no column average).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    total = 0.0
    count = 0
    for state in states:
        y = intensities(state)
        if row is None:
            total += float(np.sum(y ** k))
            count += y.size
        else:
            total += float(y[row] ** k)
            count += 1
    if count == 0:
        raise ValueError("empty state stream")
    return total / count


def correlator_estimate(states, k: int) -> float:
    """Mean product of y over consecutive disjoint k-element blocks.

    The column is split into floor(N/k) blocks of k consecutive elements;
    leftovers are unused so no element enters two products.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    total = 0.0
    count = 0
    for state in states:
        y = intensities(state)
        if k > y.size:
            raise ValueError(f"k={k} exceeds column length N={y.size}")
        nb = y.size // k
        blocks = y[: nb * k].reshape(nb, k)
        total += float(np.sum(np.prod(blocks, axis=1)))
        count += nb
    if count == 0:
        raise ValueError("empty state stream")
    return total / count


def relative_deviation(estimate: float, reference: float) -> float:
    """D = |estimate - reference| / reference."""
    if reference <= 0:
        raise ValueError("reference must be positive")
    return abs(estimate - reference) / reference


@dataclass
class ConvergenceCurve:
    """(n_g, D) samples of one statistic at fixed n_q, plus the floor."""

    n_q: int
    statistic: StatisticKind
    points: list  # list of (n_g, D)
    n_r: int
    master_seed: int
    d_min: float = field(default=math.nan)

    def gate_counts(self) -> list:
        return [p[0] for p in self.points]

    def distances(self) -> list:
        return [p[1] for p in self.points]


def saturation_floor(points) -> float:
    """Median D over the last quartile of checkpoints (>= 4 points)."""
    pts = list(points)
    if len(pts) < 4:
        raise ValueError("need at least 4 points to estimate the floor")
    tail = max(1, math.ceil(len(pts) / 4))
    return float(np.median([d for _, d in pts[-tail:]]))
