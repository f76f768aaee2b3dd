"""Brute-force reference implementations.

Everything in here is written as plainly as possible — dense matrices,
explicit loops over detection events — so the vectorized library code
can be checked against an independent computation.  Nothing from the
package's internals is reused beyond the public data types.
"""
from __future__ import annotations

import math

import numpy as np


def dense_state(state) -> np.ndarray:
    """(M, M) complex matrix of biphoton amplitudes."""
    m = state.frame.num_bins
    psi = np.zeros((m, m), dtype=complex)
    for (a, b), amp in state.amplitudes.items():
        psi[a, b] = amp
    return psi


def mub_matrix(m: int) -> np.ndarray:
    """Rows are the phase-basis states over m bins."""
    k = np.arange(m)
    return np.exp(2j * np.pi * np.outer(k, k) / m) / math.sqrt(m)


def _component(psi: np.ndarray, ra: int, rb: int, cyclic: bool) -> complex:
    m = psi.shape[0]
    if cyclic:
        return psi[ra % m, rb % m]
    if ra < 0 or rb < 0:
        return 0.0 + 0.0j
    return psi[ra, rb]


def coincidence_oracle(
    psi: np.ndarray, dta: int, dtb: int, cyclic: bool = True
) -> tuple[dict[tuple[int, int, int], float], float, float]:
    """Same-bin detection weights by direct event enumeration.

    Returns ({(sign_a, sign_b, bin): weight}, total, edge_loss); signs
    are +1/-1 and edge_loss collects the bins dropped in the
    non-cyclic convention (any bin the longer delay cannot reach).
    """
    m = psi.shape[0]
    weights: dict[tuple[int, int, int], float] = {}
    total = 0.0
    edge = 0.0
    for r in range(m):
        for sa in (+1, -1):
            for sb in (+1, -1):
                amp = (
                    _component(psi, r, r, cyclic)
                    + sb * _component(psi, r, r - dtb, cyclic)
                    + sa * _component(psi, r - dta, r, cyclic)
                    + sa * sb * _component(psi, r - dta, r - dtb, cyclic)
                )
                w = 0.25 * abs(amp) ** 2
                if w == 0.0:
                    continue
                if not cyclic and (r < dta or r < dtb):
                    edge += w
                    continue
                weights[(sa, sb, r)] = w
                total += w
    return weights, total, edge


def error_rate_oracle(psi: np.ndarray, dt: int, cyclic: bool = True) -> float:
    weights, total, _ = coincidence_oracle(psi, dt, dt, cyclic)
    mismatch = sum(w for (sa, sb, _), w in weights.items() if sa != sb)
    return mismatch / total


def apply_row_oracle(
    psi: np.ndarray, row: np.ndarray
) -> tuple[float, np.ndarray]:
    """Square-root back-action of one outcome row on the second photon."""
    scaled = psi * np.sqrt(row)[None, :]
    prob = float(np.sum(np.abs(scaled) ** 2))
    if prob == 0.0:
        return 0.0, scaled
    return prob, scaled / math.sqrt(prob)


def attack_error_oracle(
    psi: np.ndarray, lam: np.ndarray, dt: int, cyclic: bool = True
) -> float:
    """Outcome-averaged error rate: weight every outcome's coincidence
    table by its probability, then divide pooled mismatch by pooled
    total."""
    mismatch = 0.0
    total = 0.0
    for row in lam:
        prob, post = apply_row_oracle(psi, row)
        if prob == 0.0:
            continue
        weights, tot, _ = coincidence_oracle(post, dt, dt, cyclic)
        mismatch += prob * sum(
            w for (sa, sb, _), w in weights.items() if sa != sb
        )
        total += prob * tot
    return mismatch / total


def bhattacharyya_error(lam: np.ndarray, dt: int) -> float:
    """Closed form for a complete bin-diagonal attack on the uniform
    pair, cyclic convention: one half times (1 - mean column overlap
    at shift dt)."""
    m = lam.shape[1]
    overlap = np.sum(np.sqrt(lam * np.roll(lam, dt, axis=1)))
    return 0.5 * (1.0 - overlap / m)


def mutual_information_oracle(lam: np.ndarray) -> float:
    """I(K; N) in bits from the dense joint distribution."""
    m = lam.shape[1]
    joint = lam / m
    pk = joint.sum(axis=1)
    info = 0.0
    for k in range(lam.shape[0]):
        for n in range(m):
            p = joint[k, n]
            if p > 0.0:
                # p(n) is uniform, so the lift is p * m / p(k)
                info += p * math.log2(p * m / pk[k])
    return info


def random_attack_matrix(rng: np.random.Generator, m: int) -> np.ndarray:
    """Random complete bin-diagonal attack: nonnegative (K, m) weights
    with every column summing to one."""
    k = int(rng.integers(1, 2 * m + 1))
    lam = rng.random((k, m)) ** 2
    # sparsify a little so zero weights are exercised
    lam[rng.random((k, m)) < 0.3] = 0.0
    sums = lam.sum(axis=0)
    for n in np.nonzero(sums == 0.0)[0]:
        lam[int(rng.integers(0, k)), n] = 1.0
    return lam / lam.sum(axis=0, keepdims=True)


def random_diagonal_amplitudes(rng: np.random.Generator, m: int) -> np.ndarray:
    """Random normalized complex amplitudes over the m diagonal pairs."""
    c = rng.normal(size=m) + 1j * rng.normal(size=m)
    c[rng.random(m) < 0.25] = 0.0
    if not np.any(c):
        c[0] = 1.0
    return c / np.linalg.norm(c)
