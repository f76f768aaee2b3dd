"""Franson interferometer measurement statistics.

Each party's unbalanced interferometer with path difference ``delta_tau``
interferes a photon's amplitude at two times.  Detection at detector D2
(D3) at bin r is equivalent to projecting onto (|r> + |r - dt>)/sqrt(2)
(respectively with a minus sign).  The coincidence statistics conditioned
on both parties detecting in the *same* bin carry the security signal:
for the uniform maximally correlated state the parties never disagree,
and any eavesdropper that destroys coherence at the interferometer
spacing shows up as a nonzero disagreement probability P(A != B).

Bin arithmetic supports two conventions:

``cyclic``
    indices wrap mod M; translation-invariant states give edge-free
    statistics that match the closed forms exactly.
``truncated``
    out-of-frame components are dropped; bins whose projections are
    sub-normalized are excluded from the conditional statistics and
    reported in an edge-loss tally.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statevec import BiphotonState, FrameSpec, SinglePhotonState

__all__ = [
    "D2",
    "D3",
    "CYCLIC",
    "TRUNCATED",
    "FransonSetting",
    "SettingsBank",
    "CoincidenceTable",
    "DegenerateCoincidenceError",
    "projection_state",
    "coincidence_table",
    "p_error",
    "visibility",
    "joint_detection_continuous",
    "p_error_continuous",
]

D2 = "D2"
D3 = "D3"
_SIGN = {D2: +1, D3: -1}
_DETECTORS = (D2, D3)

CYCLIC = "cyclic"
TRUNCATED = "truncated"


def _check_indexing(indexing: str) -> None:
    if indexing not in (CYCLIC, TRUNCATED):
        raise ValueError(f"unknown indexing mode {indexing!r}")


@dataclass(frozen=True)
class FransonSetting:
    """Interferometer path difference in units of the bin width."""

    delta_tau: int
    party: str | None = None  # optional 'Alice' / 'Bob' annotation

    def __post_init__(self) -> None:
        if self.delta_tau < 1:
            raise ValueError(f"delta_tau must be >= 1, got {self.delta_tau}")

    def validate_for(self, frame: FrameSpec) -> None:
        if self.delta_tau >= frame.num_bins:
            raise ValueError(
                f"delta_tau {self.delta_tau} must be < M = {frame.num_bins}"
            )


@dataclass(frozen=True)
class SettingsBank:
    """Ordered collection of d distinct settings shared by both parties."""

    settings: tuple[FransonSetting, ...]

    def __post_init__(self) -> None:
        if len(self.settings) < 1:
            raise ValueError("bank needs at least one setting")
        taus = [s.delta_tau for s in self.settings]
        if len(set(taus)) != len(taus):
            raise ValueError(f"settings must be pairwise distinct, got {taus}")

    @classmethod
    def of(cls, *delta_taus: int) -> "SettingsBank":
        return cls(tuple(FransonSetting(dt) for dt in delta_taus))

    def __len__(self) -> int:
        return len(self.settings)

    def __iter__(self):
        return iter(self.settings)


class DegenerateCoincidenceError(ValueError):
    """Raised when a state/setting combination yields no same-bin coincidences."""


@dataclass
class CoincidenceTable:
    """Same-bin coincidence weights keyed by (detector_A, detector_B, bin)."""

    weights: dict[tuple[str, str, int], float]
    total_weight: float
    edge_loss: float = 0.0

    def weight(self, det_a: str, det_b: str, r: int) -> float:
        return self.weights.get((det_a, det_b, r), 0.0)

    def mismatch_weight(self) -> float:
        return sum(
            w for (da, db, _), w in self.weights.items() if da != db
        )

    def match_weight(self) -> float:
        return sum(
            w for (da, db, _), w in self.weights.items() if da == db
        )


def projection_state(
    m: int,
    setting: FransonSetting,
    sign: int,
    frame: FrameSpec,
    indexing: str = CYCLIC,
) -> SinglePhotonState:
    """State projected onto by a detection at bin m behind the interferometer.

    Returns (|m> + sign*|m - dt>)/sqrt(2).  In truncated mode an
    out-of-frame early component is dropped and the result is flagged
    sub-normalized.
    """
    _check_indexing(indexing)
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if not 0 <= m < frame.num_bins:
        raise ValueError(f"bin {m} outside frame")
    setting.validate_for(frame)
    dt = setting.delta_tau
    s = 1.0 / np.sqrt(2.0)
    early = m - dt
    if indexing == CYCLIC:
        early %= frame.num_bins
    amps: dict[int, complex] = {m: complex(s)}
    if 0 <= early < frame.num_bins:
        amps[early] = amps.get(early, 0j) + sign * s
        if amps[early] == 0:
            del amps[early]
        return SinglePhotonState(frame, amps)
    return SinglePhotonState(frame, amps, subnormalized=True)


def _same_bin_amplitude(
    state: BiphotonState, r: int, dta: int, dtb: int, sa: int, sb: int, m: int,
    indexing: str,
) -> complex:
    """Coincidence amplitude 2*<sa,r| x <sb,r| state> (both parties at bin r)."""
    if indexing == CYCLIC:
        ra, rb = (r - dta) % m, (r - dtb) % m
    else:
        ra, rb = r - dta, r - dtb
    amp = state.amplitude(r, r)
    if rb >= 0:
        amp += sb * state.amplitude(r, rb)
    if ra >= 0:
        amp += sa * state.amplitude(ra, r)
        if rb >= 0:
            amp += sa * sb * state.amplitude(ra, rb)
    return amp


def coincidence_table(
    state: BiphotonState,
    setting_a: FransonSetting,
    setting_b: FransonSetting,
    indexing: str = CYCLIC,
) -> CoincidenceTable:
    """Enumerate same-bin coincidence weights for every bin and detector pair.

    The weight at (s_A, s_B, r) is |<s_A, r| x <s_B, r| state>|^2 with the
    normalized projection states of ``projection_state``.  In truncated
    mode, bins whose projections are sub-normalized (r < delta_tau for
    either party) are excluded and their weight is accumulated into
    ``edge_loss``.
    """
    _check_indexing(indexing)
    frame = state.frame
    m = frame.num_bins
    setting_a.validate_for(frame)
    setting_b.validate_for(frame)
    dta, dtb = setting_a.delta_tau, setting_b.delta_tau

    # candidate same-bin positions: any bin reachable from the support
    candidates: set[int] = set()
    for (ma, nb) in state.amplitudes:
        candidates.add(ma)
        candidates.add(nb)
        if indexing == CYCLIC:
            candidates.add((ma + dta) % m)
            candidates.add((nb + dtb) % m)
        else:
            if ma + dta < m:
                candidates.add(ma + dta)
            if nb + dtb < m:
                candidates.add(nb + dtb)

    weights: dict[tuple[str, str, int], float] = {}
    total = 0.0
    edge_loss = 0.0
    for r in sorted(candidates):
        edge_bin = indexing == TRUNCATED and (r < dta or r < dtb)
        for det_a in _DETECTORS:
            for det_b in _DETECTORS:
                amp = _same_bin_amplitude(
                    state, r, dta, dtb, _SIGN[det_a], _SIGN[det_b], m, indexing
                )
                w = 0.25 * abs(amp) ** 2
                if w == 0.0:
                    continue
                if edge_bin:
                    edge_loss += w
                else:
                    weights[(det_a, det_b, r)] = w
                    total += w
    return CoincidenceTable(weights=weights, total_weight=total, edge_loss=edge_loss)


def p_error(
    state: BiphotonState,
    setting_a: FransonSetting,
    setting_b: FransonSetting,
    indexing: str = CYCLIC,
) -> float:
    """P(A != B): mismatched-detector weight over total same-bin weight."""
    table = coincidence_table(state, setting_a, setting_b, indexing)
    if table.total_weight == 0.0:
        raise DegenerateCoincidenceError(
            "no same-bin coincidences for this state/setting combination"
        )
    return table.mismatch_weight() / table.total_weight


def visibility(p: float) -> float:
    """Franson visibility V = 1 - 2*P(A != B)."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"error probability {p} outside [0, 1/2]")
    return 1.0 - 2.0 * p


def joint_detection_continuous(
    g,
    t_a: float,
    t_b: float,
    dtau_a: float,
    dtau_b: float,
    det_a: str = D2,
    det_b: str = D2,
) -> float:
    """Joint detection probability density behind both interferometers.

    density = (1/16) |g(ta,tb) + sA*sB*g(ta-dta, tb-dtb)
                      + sB*g(ta, tb-dtb) + sA*g(ta-dta, tb)|^2

    where sA, sB are +1 for D2 and -1 for D3.  ``g`` is evaluated as a
    callable returning 0 outside its support (EnvelopeFunction works).
    """
    sa, sb = _SIGN[det_a], _SIGN[det_b]
    amp = (
        g(t_a, t_b)
        + sa * sb * g(t_a - dtau_a, t_b - dtau_b)
        + sb * g(t_a, t_b - dtau_b)
        + sa * g(t_a - dtau_a, t_b)
    )
    return abs(amp) ** 2 / 16.0


def p_error_continuous(
    g,
    frame: FrameSpec,
    dtau_a: float,
    dtau_b: float,
    samples_per_bin: int = 16,
) -> float:
    """Bin-integrated continuous prediction of P(A != B).

    Integrates the four joint densities over every same-bin square
    [rT, (r+1)T)^2 by midpoint quadrature and forms mismatch/total.
    Bins too close to the frame start for either delay are skipped, in
    line with the truncated discrete convention.
    """
    T = frame.bin_width
    rho = samples_per_bin
    offs = (np.arange(rho) + 0.5) * (T / rho)
    cell = (T / rho) ** 2
    lo = int(np.ceil(max(dtau_a, dtau_b) / T))
    mismatch = 0.0
    total = 0.0
    for r in range(lo, frame.num_bins):
        t0 = r * T
        for da in _DETECTORS:
            for db in _DETECTORS:
                acc = 0.0
                for ta in t0 + offs:
                    for tb in t0 + offs:
                        acc += joint_detection_continuous(
                            g, float(ta), float(tb), dtau_a, dtau_b, da, db
                        )
                w = acc * cell
                total += w
                if da != db:
                    mismatch += w
    if total == 0.0:
        raise DegenerateCoincidenceError("no same-bin coincidence density")
    return mismatch / total
