"""Information/disturbance trade-off metrics.

Eavesdropper information is the Shannon mutual information between her
measurement outcome and the photon's arrival bin, for a uniformly
random bin.  Disturbance is the interferometric error rate: the
probability that the two parties' detector parities disagree in a
same-bin coincidence, averaged over the eavesdropper's outcomes.

For time-bin-diagonal attacks on bin-diagonal two-photon states the
error rate reduces to a vectorized expression over the matrix of
square-root-damped amplitudes, which is what `disturbance` uses; a
slow per-outcome enumeration through the interferometer model is kept
for arbitrary states and for cross-checking.
"""
from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import franson
from .attacks import CYCLIC, TRUNCATED, DiagonalAttack, apply_attack
from .franson import SettingsBank, coincidence_table
from .statevec import BiphotonState, FrameSpec, uniform_biphoton

__all__ = [
    "RAW_AVERAGE",
    "COINCIDENCE_WEIGHTED",
    "SettingResult",
    "DisturbanceReport",
    "InfoDisturbancePoint",
    "eve_information",
    "disturbance",
    "info_disturbance_curve",
    "write_curve_csv",
    "window_error_rate",
    "window_information",
    "multipeak_error_rate",
    "multi_setting_error_rate",
    "product_error_rate",
    "product_information",
    "comb_information",
]

RAW_AVERAGE = "raw-average"
COINCIDENCE_WEIGHTED = "coincidence-weighted"


@dataclass(frozen=True)
class SettingResult:
    """Error rate and total coincidence weight at one delay setting."""

    delta_tau: int
    p_error: float
    weight: float


@dataclass(frozen=True)
class DisturbanceReport:
    p_error: float
    visibility: float
    per_setting: tuple[SettingResult, ...]
    convention: str


@dataclass(frozen=True)
class InfoDisturbancePoint:
    param: float
    eve_bits: float
    p_error: float
    visibility: float


def eve_information(attack: DiagonalAttack) -> float:
    """Mutual information I(K; N) in bits for a uniformly random bin N.

    P(n) = 1/M, P(k|n) = lambda_{k,n}; the completeness condition makes
    the conditionals proper distributions over outcomes.
    """
    m = attack.frame.num_bins
    # marginal outcome distribution
    pk: dict[int, float] = {}
    for k, row in attack.rows.items():
        pk[k] = sum(row.values()) / m
    info = 0.0
    for k, row in attack.rows.items():
        marginal = pk[k]
        if marginal <= 0.0:
            continue
        for lam in row.values():
            if lam > 0.0:
                info += (lam / m) * math.log2(lam / marginal)
    return info


def _dense_setting_stats(
    amp: np.ndarray, delta_tau: int, indexing: str
) -> tuple[float, float]:
    """(mismatch, total) same-bin coincidence weight for matched delays.

    ``amp`` is the (num_outcomes, M) matrix of unnormalized
    post-measurement diagonal amplitudes sqrt(lambda_k) * c; outcome
    probabilities are absorbed in the row norms.
    """
    if indexing == CYCLIC:
        shifted = np.roll(amp, delta_tau, axis=1)
        mismatch = 0.5 * float(np.sum(np.abs(amp - shifted) ** 2))
        match = 0.5 * float(np.sum(np.abs(amp + shifted) ** 2))
        return mismatch, mismatch + match
    # truncated: bins r < delta_tau fall off the interferometer's early arm
    a = amp[:, delta_tau:]
    b = amp[:, : amp.shape[1] - delta_tau]
    mismatch = 0.5 * float(np.sum(np.abs(a - b) ** 2))
    match = 0.5 * float(np.sum(np.abs(a + b) ** 2))
    return mismatch, mismatch + match


def _slow_setting_stats(
    attack: DiagonalAttack | None,
    state: BiphotonState,
    delta_tau: int,
    indexing: str,
) -> tuple[float, float]:
    setting = franson.FransonSetting(delta_tau)
    if attack is None:
        table = coincidence_table(state, setting, setting, indexing=indexing)
        return table.mismatch_weight(), table.total_weight
    marginal = state.bob_marginal()
    mismatch = 0.0
    total = 0.0
    for k in attack.outcomes():
        prob = sum(w * marginal.get(n, 0.0) for n, w in attack.rows[k].items())
        if prob <= 0.0:
            continue
        out = apply_attack(state, attack, outcome=k)
        table = coincidence_table(out.post_state, setting, setting, indexing=indexing)
        mismatch += prob * table.mismatch_weight()
        total += prob * table.total_weight
    return mismatch, total


def disturbance(
    attack: DiagonalAttack | None,
    bank: SettingsBank,
    frame: FrameSpec | None = None,
    state: BiphotonState | None = None,
    convention: str = RAW_AVERAGE,
    indexing: str | None = None,
    dense: bool | None = None,
) -> DisturbanceReport:
    """Interferometric error rate of an attack against a settings bank.

    Both parties apply the same randomly chosen delay from ``bank``;
    each setting's error rate is the mismatch fraction of its same-bin
    coincidences.  ``raw-average`` weighs the settings uniformly (as a
    random setting choice does); ``coincidence-weighted`` pools the
    coincidence counts before dividing.  In cyclic indexing every
    setting collects the same total weight, so the two agree.

    ``state`` defaults to the uniform bin-diagonal pair over ``frame``
    (or the attack's frame).  ``dense`` forces the vectorized diagonal
    path or the per-outcome enumeration; by default the dense path is
    used whenever the state is bin-diagonal.
    """
    if convention not in (RAW_AVERAGE, COINCIDENCE_WEIGHTED):
        raise ValueError(f"unknown convention {convention!r}")
    if frame is None:
        if attack is not None:
            frame = attack.frame
        elif state is not None:
            frame = state.frame
        else:
            raise ValueError("need an attack, a state, or a frame")
    if state is None:
        state = uniform_biphoton(frame)
    if attack is not None and attack.frame != state.frame:
        raise ValueError("attack and state frames differ")
    if indexing is None:
        indexing = attack.indexing_mode if attack is not None else CYCLIC
    for setting in bank:
        setting.validate_for(state.frame)

    if dense is None:
        dense = state.is_diagonal()
    if dense and not state.is_diagonal():
        raise ValueError("dense path requires a bin-diagonal state")

    if dense:
        c = state.diagonal_vector()
        if attack is None:
            amp = c[None, :]
        else:
            amp = np.sqrt(attack.dense_lambda()) * c[None, :]
        stats = [
            _dense_setting_stats(amp, s.delta_tau, indexing) for s in bank
        ]
    else:
        stats = [
            _slow_setting_stats(attack, state, s.delta_tau, indexing) for s in bank
        ]

    per_setting = []
    for setting, (mismatch, total) in zip(bank, stats):
        if total <= 0.0:
            raise franson.DegenerateCoincidenceError(
                f"no same-bin coincidences at delay {setting.delta_tau}"
            )
        per_setting.append(
            SettingResult(setting.delta_tau, mismatch / total, total)
        )
    if convention == RAW_AVERAGE:
        p = sum(r.p_error for r in per_setting) / len(per_setting)
    else:
        p = sum(m for m, _ in stats) / sum(t for _, t in stats)
    return DisturbanceReport(
        p_error=p,
        visibility=1.0 - 2.0 * p,
        per_setting=tuple(per_setting),
        convention=convention,
    )


def info_disturbance_curve(
    points: Sequence[tuple[float, DiagonalAttack]],
    bank: SettingsBank,
    state: BiphotonState | None = None,
    convention: str = RAW_AVERAGE,
    indexing: str | None = None,
    threads: int = 1,
) -> list[InfoDisturbancePoint]:
    """Evaluate (eve_bits, p_error, visibility) for each (param, attack).

    Results come back in input order regardless of thread scheduling.
    """

    def one(item: tuple[float, DiagonalAttack]) -> InfoDisturbancePoint:
        param, attack = item
        report = disturbance(
            attack, bank, state=state, convention=convention, indexing=indexing
        )
        return InfoDisturbancePoint(
            param=float(param),
            eve_bits=eve_information(attack),
            p_error=report.p_error,
            visibility=report.visibility,
        )

    if threads <= 1 or len(points) <= 1:
        return [one(item) for item in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, points))


def _atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_curve_csv(
    path: str | os.PathLike, points: Iterable[InfoDisturbancePoint]
) -> None:
    """CSV with header param,eve_bits,p_error,visibility, 12 significant digits."""
    lines = ["param,eve_bits,p_error,visibility"]
    for pt in points:
        lines.append(
            f"{pt.param:.12g},{pt.eve_bits:.12g},{pt.p_error:.12g},{pt.visibility:.12g}"
        )
    _atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# closed forms for the standard attack families (uniform input, matched
# delays, cyclic indexing)


def window_error_rate(L: int, delta_tau: int) -> float:
    """Square-window attack against a single delay: d/(2L), capped at 1/2."""
    if L < 1 or delta_tau < 1:
        raise ValueError("L and delta_tau must be >= 1")
    if delta_tau >= L:
        return 0.5
    return delta_tau / (2.0 * L)


def window_information(num_bins: int, L: int) -> float:
    return math.log2(num_bins) - math.log2(L)


def multipeak_error_rate(L: int) -> float:
    """Flat comb of L peaks probed at its own spacing."""
    if L < 1:
        raise ValueError("need at least one peak")
    return 1.0 / (2.0 * L)


def multi_setting_error_rate(L: int, d: int) -> float:
    """Flat comb matched to one of d delays, raw-averaged over settings.

    The matched delay contributes 1/(2L); each of the other d - 1 looks
    maximally disturbed.  Tends to 1/2 as d grows.
    """
    if d < 1:
        raise ValueError("need at least one setting")
    return ((d - 1) * L + 1) / (2.0 * d * L)


def product_error_rate(w: int) -> float:
    """Flat product comb probed along any one of its axes."""
    if w < 1:
        raise ValueError("need at least one peak per axis")
    return 1.0 / (2.0 * w)


def product_information(num_bins: int, w: int, d: int) -> float:
    return math.log2(num_bins) - d * math.log2(w)


def comb_information(num_bins: int, weights: Sequence[float]) -> float:
    """log2 M - H(Gamma) for a translation-covariant comb of weights Gamma."""
    h = 0.0
    for wgt in weights:
        if wgt > 0.0:
            h -= wgt * math.log2(wgt)
    return math.log2(num_bins) - h
