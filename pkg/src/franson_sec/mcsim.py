"""Monte Carlo simulation of the two-basis time-bin key protocol.

Each frame carries one bin-correlated photon pair.  Both parties
independently choose the arrival-time basis (probability ``p_timing``)
or the interferometer basis with a random delay from the settings bank;
an optional eavesdropper measures the second photon in transit.  Frames
are sifted when the bases (and, in the interferometer case, the delay
settings) agree; interferometer frames additionally post-select on
same-bin coincidences, which for bin-diagonal states succeed with
probability exactly one half.

Randomness comes from counter-based Philox streams keyed by
``(seed, role)`` with the frame index as the counter position, so runs
are reproducible bit-for-bit regardless of chunking, and each source of
randomness (pair emission, eavesdropper, routing, settings, detection)
can be varied independently.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .attacks import DiagonalAttack
from .franson import SettingsBank
from .statevec import BiphotonState, FrameSpec, uniform_biphoton

__all__ = [
    "ProtocolConfig",
    "SiftedStats",
    "ZeroVarianceError",
    "run_protocol",
    "compare_to_exact",
]

# stream roles
_PAIR_BIN = 0
_EVE_INTERCEPT = 1
_EVE_OUTCOME = 2
_ROUTE_A = 3
_ROUTE_B = 4
_SETTING_A = 5
_SETTING_B = 6
_MEASURE = 7


class ZeroVarianceError(RuntimeError):
    """Observed rate disagrees with a zero-variance prediction."""


@dataclass(frozen=True)
class ProtocolConfig:
    frame: FrameSpec
    bank: SettingsBank
    attack: DiagonalAttack | None = None
    num_frames: int = 100_000
    seed: int = 0
    p_timing: float = 0.9
    intercept_fraction: float = 1.0
    state: BiphotonState | None = None

    def __post_init__(self) -> None:
        if self.num_frames < 1:
            raise ValueError("need at least one frame")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not 0.0 <= self.p_timing <= 1.0:
            raise ValueError("p_timing must lie in [0, 1]")
        if not 0.0 <= self.intercept_fraction <= 1.0:
            raise ValueError("intercept_fraction must lie in [0, 1]")
        if self.attack is not None and self.attack.frame != self.frame:
            raise ValueError("attack frame differs from protocol frame")
        if self.state is not None and self.state.frame != self.frame:
            raise ValueError("state frame differs from protocol frame")
        for setting in self.bank:
            setting.validate_for(self.frame)


@dataclass(frozen=True)
class SiftedStats:
    """Counts from one protocol run.

    ``phase_frames`` counts frames where both parties picked the
    interferometer basis with the same delay; ``phase_coincidences``
    are the subset surviving same-bin post-selection.
    """

    num_frames: int
    seed: int
    p_timing: float
    timing_frames: int
    timing_errors: int
    phase_frames: int
    phase_coincidences: int
    phase_errors: int
    per_setting: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def sifted_fraction(self) -> float:
        return (self.timing_frames + self.phase_frames) / self.num_frames

    @property
    def phase_error_rate(self) -> float:
        if self.phase_coincidences == 0:
            raise ZeroDivisionError("no usable interferometer coincidences")
        return self.phase_errors / self.phase_coincidences

    @property
    def visibility_estimate(self) -> float:
        return 1.0 - 2.0 * self.phase_error_rate

    def to_json(self) -> str:
        doc = {
            "schema": "sifted-stats/1",
            "num_frames": self.num_frames,
            "seed": self.seed,
            "p_timing": self.p_timing,
            "timing_frames": self.timing_frames,
            "timing_errors": self.timing_errors,
            "phase_frames": self.phase_frames,
            "phase_coincidences": self.phase_coincidences,
            "phase_errors": self.phase_errors,
            "per_setting": {
                str(dt): [c, e] for dt, (c, e) in sorted(self.per_setting.items())
            },
        }
        return json.dumps(doc, sort_keys=True)


def _stream(seed: int, role: int) -> np.random.Generator:
    key = np.array([seed, role], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mismatch_table(
    amp: np.ndarray, delta_taus: list[int]
) -> np.ndarray:
    """Per-row conditional mismatch probability for each delay.

    ``amp`` holds one row of (possibly unnormalized) diagonal
    amplitudes per condition; column r is bin r.  Entry [i, j] is the
    probability that a same-bin coincidence from row i at delay j lands
    on opposite-parity detectors.
    """
    out = np.zeros((amp.shape[0], len(delta_taus)))
    for j, dt in enumerate(delta_taus):
        shifted = np.roll(amp, dt, axis=1)
        w_x = np.sum(np.abs(amp - shifted) ** 2, axis=1)
        w_m = np.sum(np.abs(amp + shifted) ** 2, axis=1)
        total = w_x + w_m
        nz = total > 0.0
        out[nz, j] = w_x[nz] / total[nz]
    return out


def _sample_eve_outcomes(
    lam: np.ndarray, bins: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Outcome-row indices drawn from each frame's bin column of lam."""
    cdf = np.cumsum(lam, axis=0)
    cdf /= cdf[-1:, :]
    out = np.empty(bins.size, dtype=np.int64)
    order = np.argsort(bins, kind="stable")
    sorted_bins = bins[order]
    edges = np.searchsorted(sorted_bins, np.arange(lam.shape[1] + 1))
    for n in range(lam.shape[1]):
        lo, hi = edges[n], edges[n + 1]
        if lo == hi:
            continue
        idx = order[lo:hi]
        out[idx] = np.searchsorted(cdf[:, n], u[idx], side="right")
    np.minimum(out, lam.shape[0] - 1, out=out)
    return out


def run_protocol(config: ProtocolConfig) -> SiftedStats:
    """Simulate ``num_frames`` frames and return the sifted counts."""
    m = config.frame.num_bins
    n = config.num_frames
    state = config.state if config.state is not None else uniform_biphoton(config.frame)
    if not state.is_diagonal():
        raise ValueError("protocol source must be bin-diagonal")
    c = state.diagonal_vector()
    weights = np.abs(c) ** 2
    delta_taus = [s.delta_tau for s in config.bank]
    d = len(delta_taus)

    bins = _stream(config.seed, _PAIR_BIN).choice(m, size=n, p=weights / weights.sum())
    route_a = _stream(config.seed, _ROUTE_A).random(n) < config.p_timing
    route_b = _stream(config.seed, _ROUTE_B).random(n) < config.p_timing
    setting_a = _stream(config.seed, _SETTING_A).integers(0, d, size=n)
    setting_b = _stream(config.seed, _SETTING_B).integers(0, d, size=n)
    u_measure = _stream(config.seed, _MEASURE).random((2, n))

    if config.attack is not None:
        intercepted = (
            _stream(config.seed, _EVE_INTERCEPT).random(n) < config.intercept_fraction
        )
        u_eve = _stream(config.seed, _EVE_OUTCOME).random(n)
        lam = config.attack.dense_lambda()
        outcome_row = _sample_eve_outcomes(lam, bins, u_eve)
        # conditional mismatch probabilities, one row per outcome plus a
        # trailing row for undisturbed frames
        amp = np.vstack([np.sqrt(lam) * c[None, :], c[None, :]])
        q = _mismatch_table(amp, delta_taus)
        row = np.where(intercepted, outcome_row, amp.shape[0] - 1)
    else:
        q = _mismatch_table(c[None, :], delta_taus)
        row = np.zeros(n, dtype=np.int64)

    both_timing = route_a & route_b
    both_phase = ~route_a & ~route_b
    phase_sifted = both_phase & (setting_a == setting_b)

    timing_frames = int(both_timing.sum())
    # a bin-diagonal channel preserves the arrival-bin correlation, so
    # both arrival-time records read the emission bin
    timing_errors = 0

    # same-bin post-selection: for bin-diagonal states exactly half of
    # the interferometer coincidences land in the same bin, the rest in
    # the two side bins
    coincident = phase_sifted & (u_measure[0] < 0.5)
    q_frame = q[row, setting_a]
    mismatch = coincident & (u_measure[1] < q_frame)

    per_setting: dict[int, tuple[int, int]] = {}
    for j, dt in enumerate(delta_taus):
        sel = coincident & (setting_a == j)
        per_setting[dt] = (int(sel.sum()), int((mismatch & sel).sum()))

    return SiftedStats(
        num_frames=n,
        seed=config.seed,
        p_timing=config.p_timing,
        timing_frames=timing_frames,
        timing_errors=timing_errors,
        phase_frames=int(phase_sifted.sum()),
        phase_coincidences=int(coincident.sum()),
        phase_errors=int(mismatch.sum()),
        per_setting=per_setting,
    )


def compare_to_exact(stats: SiftedStats, exact_p: float) -> float:
    """Z-score of the observed interferometer error rate against exact_p.

    Uses the binomial standard error at the predicted rate.  When the
    prediction has zero variance (exact_p of 0 or 1) the observed rate
    must match exactly; otherwise a ZeroVarianceError is raised.
    """
    if not 0.0 <= exact_p <= 1.0:
        raise ValueError("exact_p must be a probability")
    n = stats.phase_coincidences
    if n == 0:
        raise ZeroDivisionError("no usable interferometer coincidences")
    observed = stats.phase_error_rate
    variance = exact_p * (1.0 - exact_p) / n
    if variance == 0.0:
        if observed == exact_p:
            return 0.0
        raise ZeroVarianceError(
            f"predicted rate {exact_p} is deterministic but observed {observed}"
        )
    return (observed - exact_p) / math.sqrt(variance)
