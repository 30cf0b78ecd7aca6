"""Two-copy moment operator of the gate set and its spectral gap.

The gate set draws, each with weight 1/4: a Haar U(2) on either qubit of a
two-qubit pair, or a CNOT in either orientation. With gates W represented as
4x4 matrices, the moment operator is

    G = E[W (x) W (x) conj(W) (x) conj(W)],

a 256x256 matrix. The single-qubit Haar averages are either estimated by
Monte Carlo (default) or evaluated exactly via the known second-order
Weingarten weights for U(2). A gapped gate set has exactly two modulus-1
eigenvalues; the gap is 1 minus the next eigenvalue magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# 4x4 CNOTs on a qubit pair |hi, lo> (index = 2*hi + lo).
CNOT_HI_CTRL = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
CNOT_LO_CTRL = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=float)

# Qubit slots (most significant first) carrying the single-qubit unitary in
# the 8-qubit tensor space of the four 4-dim copies.
_HI_POSITIONS = (0, 2, 4, 6)
_LO_POSITIONS = (1, 3, 5, 7)


@dataclass(frozen=True)
class GapResult:
    leading: float
    multiplicity: int
    gap: float
    sample_count: int
    sigma: float
    degenerate: bool = False


def haar_u2_batch(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-distributed 2x2 unitaries, shape (n, 2, 2)."""
    alpha, psi, chi = rng.random((3, n)) * TWO_PI
    phi = np.arcsin(np.sqrt(rng.random(n)))
    c, s = np.cos(phi), np.sin(phi)
    u = np.empty((n, 2, 2), dtype=complex)
    u[:, 0, 0] = c * np.exp(1j * psi)
    u[:, 0, 1] = s * np.exp(1j * chi)
    u[:, 1, 0] = -s * np.exp(-1j * chi)
    u[:, 1, 1] = c * np.exp(-1j * psi)
    u *= np.exp(1j * alpha)[:, None, None]
    return u


def exact_two_copy_average() -> np.ndarray:
    """E[u (x) u (x) conj(u) (x) conj(u)] over Haar U(2), exactly.

    Second-order Weingarten weights for dimension 2: 1/3 for matching
    pairings, -1/6 for crossed ones.
    """
    m = np.zeros((16, 16))
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    for e in range(2):
                        for f in range(2):
                            for g in range(2):
                                for h in range(2):
                                    rii = (a == c) and (b == d)
                                    rix = (a == d) and (b == c)
                                    cii = (e == g) and (f == h)
                                    cix = (e == h) and (f == g)
                                    val = (rii * cii + rix * cix) / 3.0 \
                                        - (rii * cix + rix * cii) / 6.0
                                    row = (a << 3) | (b << 2) | (c << 1) | d
                                    col = (e << 3) | (f << 2) | (g << 1) | h
                                    m[row, col] = val
    return m.astype(complex)


def mc_two_copy_average(sample_count: int, rng: np.random.Generator,
                        chunk: int = 4096):
    """Monte Carlo estimate of the U(2) two-copy average.

    Returns (M, sigma) with sigma the largest per-entry standard error of
    the mean.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    acc = np.zeros((16, 16), dtype=complex)
    acc2 = np.zeros((16, 16))
    done = 0
    while done < sample_count:
        n = min(chunk, sample_count - done)
        u = haar_u2_batch(rng, n)
        uu = np.einsum("sab,scd->sacbd", u, u).reshape(n, 4, 4)
        m = np.einsum("sab,scd->sacbd", uu, uu.conj()).reshape(n, 16, 16)
        acc += m.sum(axis=0)
        acc2 += (m.real ** 2 + m.imag ** 2).sum(axis=0)
        done += n
    mean = acc / sample_count
    var = np.maximum(acc2 / sample_count - np.abs(mean) ** 2, 0.0)
    sigma = math.sqrt(float(var.max()) / sample_count)
    return mean, sigma


def embed_four_qubit_operator(m16: np.ndarray, positions) -> np.ndarray:
    """Place a 4-qubit operator at the given slots of an 8-qubit space,
    identity elsewhere; returns the 256x256 matrix."""
    full = np.kron(m16, np.eye(16, dtype=m16.dtype))
    t = full.reshape((2,) * 16)
    perm = [0] * 8
    used = [False] * 8
    for k, p in enumerate(positions):
        perm[p] = k
        used[p] = True
    nxt = 4
    for j in range(8):
        if not used[j]:
            perm[j] = nxt
            nxt += 1
    axes = perm + [p + 8 for p in perm]
    return t.transpose(axes).reshape(256, 256)


def _kron4(m: np.ndarray) -> np.ndarray:
    return np.kron(np.kron(m, m), np.kron(m, m))


def build_moment_operator(sample_count: int = 100_000,
                          rng: np.random.Generator | None = None,
                          exact: bool = False):
    """Assemble the 256x256 moment operator of the gate set.

    Returns (G, sigma); sigma is a per-entry standard-error estimate of the
    Monte Carlo noise (0 on the exact path). CNOT terms are always exact.
    """
    if exact:
        m_hi = m_lo = exact_two_copy_average()
        sigma = 0.0
    else:
        if rng is None:
            rng = np.random.default_rng()
        if sample_count < 10_000:
            raise ValueError("sample_count must be >= 10**4 for the MC path")
        m_hi, s_hi = mc_two_copy_average(sample_count, rng)
        m_lo, s_lo = mc_two_copy_average(sample_count, rng)
        sigma = 0.25 * math.hypot(s_hi, s_lo)
    t_hi = embed_four_qubit_operator(m_hi, _HI_POSITIONS)
    t_lo = embed_four_qubit_operator(m_lo, _LO_POSITIONS)
    c_hi = _kron4(CNOT_HI_CTRL).astype(complex)
    c_lo = _kron4(CNOT_LO_CTRL).astype(complex)
    g = 0.25 * (t_hi + t_lo + c_hi + c_lo)
    return g, sigma


def spectral_gap(g: np.ndarray, sigma: float = 0.0,
                 sample_count: int = 0) -> GapResult:
    """Eigenvalue-1 multiplicity and gap of the (symmetrized) operator.

    Eigenvalues with magnitude above 1 - tau, tau = 10 * sigma (floored at
    1e-9), count as modulus-1.
    """
    if g.shape[0] != g.shape[1]:
        raise ValueError("G must be square")
    gs = 0.5 * (g + g.conj().T)
    w = np.linalg.eigvalsh(gs)
    mags = np.sort(np.abs(w))[::-1]
    tau = max(10.0 * sigma, 1e-9)
    multiplicity = int(np.count_nonzero(mags > 1.0 - tau))
    if multiplicity == 0:
        multiplicity = 1  # leading eigenvalue always counted
    if multiplicity >= mags.size:
        return GapResult(leading=float(mags[0]), multiplicity=multiplicity,
                         gap=0.0, sample_count=sample_count, sigma=sigma,
                         degenerate=True)
    gap = 1.0 - float(mags[multiplicity])
    return GapResult(leading=float(mags[0]), multiplicity=multiplicity,
                     gap=gap, sample_count=sample_count, sigma=sigma)
