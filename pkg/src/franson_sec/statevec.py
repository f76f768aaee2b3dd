"""Time-bin Hilbert-space primitives.

A frame is a block of M contiguous time bins of width T.  Photon states
live on the bin index space [0, M); biphoton states are sparse maps from
ordered bin pairs to complex amplitudes.  The module also provides the
discrete-Fourier basis that is mutually unbiased to the time-bin basis,
and a bridge from continuous two-photon envelope functions to discrete
bin amplitudes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "FrameSpec",
    "SinglePhotonState",
    "BiphotonState",
    "EnvelopeFunction",
    "uniform_biphoton",
    "mub_basis_state",
    "inner_product",
    "discretize_envelope",
]

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class FrameSpec:
    """Frame geometry: number of time bins and the bin width."""

    num_bins: int
    bin_width: float = 1.0

    def __post_init__(self) -> None:
        if self.num_bins < 2:
            raise ValueError(f"frame needs at least 2 bins, got {self.num_bins}")
        if not self.bin_width > 0:
            raise ValueError(f"bin width must be positive, got {self.bin_width}")

    @property
    def extent(self) -> float:
        """Total frame duration M*T."""
        return self.num_bins * self.bin_width


def _check_bin(frame: FrameSpec, k: int) -> None:
    if not 0 <= k < frame.num_bins:
        raise ValueError(f"bin index {k} outside frame [0, {frame.num_bins})")


@dataclass(frozen=True)
class SinglePhotonState:
    """One photon distributed over the bins of a frame.

    ``amplitudes`` maps bin index -> complex amplitude.  States may be
    sub-normalized (e.g. after dropping an out-of-frame component); the
    ``subnormalized`` flag makes that explicit.
    """

    frame: FrameSpec
    amplitudes: dict[int, complex]
    subnormalized: bool = False

    def __post_init__(self) -> None:
        for k in self.amplitudes:
            _check_bin(self.frame, k)
        n = self.norm_sq()
        if n > 1 + _NORM_TOL:
            raise ValueError(f"squared-amplitude sum {n} exceeds 1")
        if self.subnormalized and n > 1 - _NORM_TOL:
            object.__setattr__(self, "subnormalized", False)

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def amplitude(self, k: int) -> complex:
        return self.amplitudes.get(k, 0j)


@dataclass(frozen=True)
class BiphotonState:
    """Two photons, one per arm, over ordered bin pairs (bin_a, bin_b)."""

    frame: FrameSpec
    amplitudes: dict[tuple[int, int], complex]
    normalized: bool = True

    def __post_init__(self) -> None:
        for (m, n) in self.amplitudes:
            _check_bin(self.frame, m)
            _check_bin(self.frame, n)
        if self.normalized:
            s = self.norm_sq()
            if abs(s - 1.0) > _NORM_TOL:
                raise ValueError(f"state marked normalized but squared sum is {s}")

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def amplitude(self, m: int, n: int) -> complex:
        return self.amplitudes.get((m, n), 0j)

    def bob_marginal(self) -> dict[int, float]:
        """Probability weight of Bob's (second) bin index."""
        out: dict[int, float] = {}
        for (m, n), a in self.amplitudes.items():
            out[n] = out.get(n, 0.0) + abs(a) ** 2
        return out

    def is_diagonal(self) -> bool:
        return all(m == n for (m, n) in self.amplitudes)

    def diagonal_vector(self) -> np.ndarray:
        """Dense vector of diagonal amplitudes c_k (requires a diagonal state)."""
        if not self.is_diagonal():
            raise ValueError("state has off-diagonal support")
        c = np.zeros(self.frame.num_bins, dtype=complex)
        for (m, _), a in self.amplitudes.items():
            c[m] = a
        return c


@dataclass(frozen=True)
class EnvelopeFunction:
    """Continuous two-photon envelope g(t1, t2) with square support bounds.

    ``grid_resolution`` is the number of midpoint-quadrature samples per
    bin width and axis used whenever the envelope is integrated.
    """

    func: Callable[[float, float], complex]
    t_min: float
    t_max: float
    grid_resolution: int = 16
    _norm_checked: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if not self.t_max > self.t_min:
            raise ValueError("empty support interval")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")

    def __call__(self, t1: float, t2: float) -> complex:
        if not (self.t_min <= t1 < self.t_max and self.t_min <= t2 < self.t_max):
            return 0j
        return self.func(t1, t2)

    def norm_sq(self, samples_per_axis: int | None = None) -> float:
        """Midpoint quadrature of the squared modulus over the support box."""
        n = samples_per_axis or max(64, self.grid_resolution)
        ts = np.linspace(self.t_min, self.t_max, n, endpoint=False)
        dt = (self.t_max - self.t_min) / n
        ts = ts + dt / 2
        g = np.array([[self.func(t1, t2) for t2 in ts] for t1 in ts], dtype=complex)
        return float(np.sum(np.abs(g) ** 2) * dt * dt)

    def validate_normalization(self, tol: float = 1e-6) -> float:
        """Return |integral - 1|; raise if it exceeds ``tol``."""
        dev = abs(self.norm_sq() - 1.0)
        if dev > tol:
            raise ValueError(f"envelope squared-modulus integral off by {dev:.3g}")
        return dev


def uniform_biphoton(frame: FrameSpec) -> BiphotonState:
    """Maximally correlated diagonal state: amplitude 1/sqrt(M) on every (k, k)."""
    m = frame.num_bins
    a = 1.0 / math.sqrt(m)
    return BiphotonState(frame, {(k, k): complex(a) for k in range(m)})


def mub_basis_state(frame: FrameSpec, n: int) -> SinglePhotonState:
    """n-th Fourier basis state: amplitude exp(2*pi*i*n*k/M)/sqrt(M) on bin k.

    Every such state has squared overlap exactly 1/M with every time-bin
    state, which is what makes this basis the ideal security check.
    """
    m = frame.num_bins
    if not 0 <= n < m:
        raise ValueError(f"basis index {n} outside [0, {m})")
    s = 1.0 / math.sqrt(m)
    amps = {k: s * cmath.exp(2j * math.pi * n * k / m) for k in range(m)}
    return SinglePhotonState(frame, amps)


def inner_product(
    a: SinglePhotonState | BiphotonState, b: SinglePhotonState | BiphotonState
) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if type(a) is not type(b):
        raise TypeError("cannot take the inner product of different state kinds")
    if a.frame != b.frame:
        raise ValueError("states live on different frames")
    return complex(
        sum(a.amplitudes[k].conjugate() * b.amplitudes[k]
            for k in a.amplitudes.keys() & b.amplitudes.keys())
    )


def discretize_envelope(g: EnvelopeFunction, frame: FrameSpec) -> BiphotonState:
    """Project a continuous envelope onto frame bins by midpoint quadrature.

    The amplitude on bin pair (m, n) is the quadrature of g over the bin
    rectangle divided by the bin width; the resulting squared-magnitude
    weights are renormalized to 1.
    """
    T = frame.bin_width
    if g.t_min < 0 or g.t_max > frame.extent:
        raise ValueError(
            f"envelope support [{g.t_min}, {g.t_max}) exceeds frame extent [0, {frame.extent})"
        )
    rho = g.grid_resolution
    offsets = (np.arange(rho) + 0.5) * (T / rho)
    lo_bin = max(0, int(math.floor(g.t_min / T)))
    hi_bin = min(frame.num_bins, int(math.ceil(g.t_max / T)))
    amps: dict[tuple[int, int], complex] = {}
    cell = (T / rho) ** 2
    for m in range(lo_bin, hi_bin):
        t1s = m * T + offsets
        for n in range(lo_bin, hi_bin):
            t2s = n * T + offsets
            acc = 0j
            for t1 in t1s:
                for t2 in t2s:
                    acc += g(float(t1), float(t2))
            amp = acc * cell / T
            if amp != 0:
                amps[(m, n)] = amp
    total = sum(abs(v) ** 2 for v in amps.values())
    if total <= 0:
        raise ValueError("envelope vanishes on the frame grid")
    scale = 1.0 / math.sqrt(total)
    amps = {k: v * scale for k, v in amps.items()}
    return BiphotonState(frame, amps)
