"""Eavesdropper measurement models.

Every attack here is a positive operator measurement that is diagonal in
the time-bin basis: outcome k carries nonnegative weights lambda_{k,n}
over bins n, with the completeness condition sum_k lambda_{k,n} = 1 for
every bin.  Such measurements leave the which-bin correlation intact
while (generally) destroying coherence between bins — which is exactly
what the interferometer check detects.

Families provided:

* sharp time-of-arrival measurement (one outcome per bin),
* square windows of L consecutive bins,
* Gaussian windows (soft-edged),
* multi-peak combs of L bins spaced delta_e apart, optionally weighted,
* product combs over a d-dimensional offset grid (one spacing per axis),
* continuous multi-window attacks on envelope functions.

Measurement back-action uses the square-root (minimally disturbing)
Kraus form: post-measurement amplitudes are scaled by sqrt(lambda) and
renormalized.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .statevec import BiphotonState, FrameSpec

__all__ = [
    "DiagonalAttack",
    "MultiPeakShape",
    "ContinuousAttack",
    "AttackOutcome",
    "sharp_attack",
    "square_window_attack",
    "gaussian_window_attack",
    "multipeak_attack",
    "product_multipeak_attack",
    "gaussian_grid_weights",
    "apply_attack",
    "continuous_multipeak",
    "validate_completeness",
    "attack_to_json",
    "attack_from_json",
    "mixture_coherence_matrix",
]

CYCLIC = "cyclic"
TRUNCATED = "truncated"

EXPONENT_SQUARED = "squared"  # exp(-alpha * x^2): a true Gaussian profile
EXPONENT_LINEAR = "linear"    # exp(-alpha * |x|): two-sided exponential

_COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True)
class MultiPeakShape:
    """Peak-count, spacings, and normalized per-peak weights of a comb.

    For a single-axis comb ``weights`` has length ``num_peaks``; for a
    d-axis product grid it is the flattened d-fold grid in C order
    (first axis slowest).  ``spacings`` may be empty when the shape has
    not been bound to interferometer delays yet.
    """

    num_peaks: int
    spacings: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.num_peaks < 1:
            raise ValueError("need at least one peak")
        if any(s < 1 for s in self.spacings):
            raise ValueError("spacings must be >= 1")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total}")

    @classmethod
    def flat(cls, num_peaks: int, spacing: int) -> "MultiPeakShape":
        return cls(num_peaks, (spacing,), (1.0 / num_peaks,) * num_peaks)


@dataclass(frozen=True)
class DiagonalAttack:
    """Time-bin-diagonal measurement: per-outcome sparse weight rows.

    ``rows`` maps outcome index k to {bin n: lambda_{k,n}}.  ``kind`` and
    ``params`` record how the attack was built (for serialization).
    """

    frame: FrameSpec
    rows: dict[int, dict[int, float]]
    indexing_mode: str = CYCLIC
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.indexing_mode not in (CYCLIC, TRUNCATED):
            raise ValueError(f"unknown indexing mode {self.indexing_mode!r}")
        m = self.frame.num_bins
        for k, row in self.rows.items():
            for n, w in row.items():
                if not 0 <= n < m:
                    raise ValueError(f"outcome {k} references bin {n} outside frame")
                if w < 0:
                    raise ValueError(f"negative weight at ({k}, {n})")

    def outcomes(self) -> list[int]:
        return sorted(self.rows)

    def column_sums(self) -> np.ndarray:
        """sum_k lambda_{k,n} for every bin n."""
        s = np.zeros(self.frame.num_bins)
        for row in self.rows.values():
            for n, w in row.items():
                s[n] += w
        return s

    def dense_lambda(self) -> np.ndarray:
        """(num_outcomes, M) dense weight matrix, rows ordered by outcome."""
        ks = self.outcomes()
        lam = np.zeros((len(ks), self.frame.num_bins))
        for i, k in enumerate(ks):
            for n, w in self.rows[k].items():
                lam[i, n] = w
        return lam


@dataclass(frozen=True)
class AttackOutcome:
    outcome: int
    probability: float
    post_state: BiphotonState


@dataclass(frozen=True)
class ContinuousAttack:
    """Continuous-outcome attack: per-outcome envelope filter beta(t; t').

    ``windows`` lists disjoint [start, stop) intervals for one outcome of
    a square multi-window filter; ``density`` is the constant value of
    beta on those windows (per-outcome normalization: integral of beta
    over t' equals 1).
    """

    windows: tuple[tuple[float, float], ...]
    density: float

    def __post_init__(self) -> None:
        if self.density < 0:
            raise ValueError("density must be nonnegative")
        ivs = sorted(self.windows)
        for (a0, a1), (b0, b1) in zip(ivs, ivs[1:]):
            if b0 < a1:
                raise ValueError(f"windows overlap: [{a0},{a1}) and [{b0},{b1})")
        for a0, a1 in ivs:
            if not a1 > a0:
                raise ValueError("empty window")

    def beta(self, t_prime: float) -> float:
        for a0, a1 in self.windows:
            if a0 <= t_prime < a1:
                return self.density
        return 0.0

    def integral(self, samples: int = 4096) -> float:
        """Quadrature of beta over its support (exact for square windows)."""
        return self.density * sum(a1 - a0 for a0, a1 in self.windows)

    def filter_envelope(self, g):
        """Envelope of the post-measurement two-photon state, unnormalized:
        beta(t') * g(t1, t')."""
        def filtered(t1: float, t2: float) -> complex:
            return self.beta(t2) * g(t1, t2)
        return filtered


def _check_frame(frame: FrameSpec) -> int:
    return frame.num_bins


def sharp_attack(frame: FrameSpec, indexing_mode: str = CYCLIC) -> DiagonalAttack:
    """Sharp time-of-arrival measurement: lambda_{k,n} = delta_{k,n}."""
    m = _check_frame(frame)
    rows = {k: {k: 1.0} for k in range(m)}
    return DiagonalAttack(frame, rows, indexing_mode, kind="sharp", params={})


def square_window_attack(
    frame: FrameSpec, L: int, indexing_mode: str = CYCLIC
) -> DiagonalAttack:
    """Localize to aligned windows of L consecutive bins (L must divide M)."""
    m = _check_frame(frame)
    if L < 1 or m % L != 0:
        raise ValueError(f"window length {L} must divide M = {m}")
    rows = {
        k: {n: 1.0 for n in range(k * L, (k + 1) * L)}
        for k in range(m // L)
    }
    return DiagonalAttack(
        frame, rows, indexing_mode, kind="square_window", params={"L": L}
    )


def gaussian_window_attack(
    frame: FrameSpec, a: float, indexing_mode: str = CYCLIC
) -> DiagonalAttack:
    """Soft window centred on every bin: lambda_{k,n} = exp(-(k-n)^2/a)/Z_n.

    Z_n normalizes each bin's column so completeness holds exactly by
    construction.  Cyclic mode measures the k-n distance around the ring.
    """
    m = _check_frame(frame)
    if not a > 0:
        raise ValueError("width parameter a must be positive")
    k = np.arange(m)
    diff = k[:, None] - k[None, :]
    if indexing_mode == CYCLIC:
        diff = (diff + m // 2) % m - m // 2
    lam = np.exp(-(diff.astype(float) ** 2) / a)
    lam /= lam.sum(axis=0, keepdims=True)
    rows = {
        int(kk): {
            int(n): float(lam[kk, n])
            for n in np.nonzero(lam[kk] > 0.0)[0]
        }
        for kk in range(m)
    }
    return DiagonalAttack(
        frame, rows, indexing_mode, kind="gaussian_window", params={"a": a}
    )


def multipeak_attack(
    frame: FrameSpec, shape: MultiPeakShape, indexing_mode: str = CYCLIC
) -> DiagonalAttack:
    """Comb of L peaks at bins k - j*delta_e with weights Gamma_j.

    Preserves two-photon coherence at the comb spacing, which lets the
    eavesdropper evade an interferometer matched to that spacing.
    """
    m = _check_frame(frame)
    if len(shape.spacings) != 1:
        raise ValueError("multipeak_attack needs exactly one spacing")
    L = shape.num_peaks
    if len(shape.weights) != L:
        raise ValueError("weight count must equal the peak count")
    de = shape.spacings[0]
    if L * de >= m:
        raise ValueError(f"comb span L*delta_e = {L * de} must be < M = {m}")
    rows: dict[int, dict[int, float]] = {}
    if indexing_mode == CYCLIC:
        ks = range(m)
    else:
        ks = range((L - 1) * de, m)
        if not ks:
            raise ValueError("comb does not fit in the frame in truncated mode")
    for k in ks:
        row: dict[int, float] = {}
        for j, w in enumerate(shape.weights):
            if w == 0.0:
                continue
            n = k - j * de
            if indexing_mode == CYCLIC:
                n %= m
            row[n] = row.get(n, 0.0) + w
        rows[k] = row
    return DiagonalAttack(
        frame,
        rows,
        indexing_mode,
        kind="multipeak",
        params={"L": L, "delta_e": de, "weights": list(shape.weights)},
    )


def product_multipeak_attack(
    frame: FrameSpec,
    w: int,
    spacings: tuple[int, ...],
    grid_weights: tuple[float, ...] | None = None,
    indexing_mode: str = CYCLIC,
) -> DiagonalAttack:
    """Comb over the d-axis offset grid k + n_1*dt_1 + ... + n_d*dt_d.

    Each n_i ranges over [0, w); ``grid_weights`` is the flattened
    weight grid (C order, n_1 slowest), defaulting to flat 1/w^d.
    Localizing to w^d bins costs the eavesdropper d*log2(w) bits but
    keeps her per-axis disturbance at the single-comb level.
    """
    m = _check_frame(frame)
    d = len(spacings)
    if d < 1:
        raise ValueError("need at least one spacing axis")
    if w < 1:
        raise ValueError("need at least one peak per axis")
    if grid_weights is None:
        grid_weights = (1.0 / w**d,) * (w**d)
    if len(grid_weights) != w**d:
        raise ValueError(f"grid weights must have w^d = {w**d} entries")
    total = sum(grid_weights)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"grid weights must sum to 1, got {total}")

    # offset of each grid point, C order (n_1 slowest)
    offsets = np.zeros(1, dtype=np.int64)
    for dt in spacings:
        offsets = (offsets[:, None] + dt * np.arange(w)[None, :]).ravel()
    gw = np.asarray(grid_weights)

    if indexing_mode == TRUNCATED:
        if len(np.unique(offsets)) != offsets.size:
            raise ValueError("offset grid collides; use cyclic indexing")
        span = int(offsets.max())
        if span >= m:
            raise ValueError(f"grid span {span} must be < M = {m}")
        ks = range(m - span)
    else:
        ks = range(m)

    rows: dict[int, dict[int, float]] = {}
    for k in ks:
        row: dict[int, float] = {}
        for off, weight in zip(offsets, gw):
            if weight == 0.0:
                continue
            n = k + int(off)
            if indexing_mode == CYCLIC:
                n %= m
            row[n] = row.get(n, 0.0) + float(weight)
        rows[k] = row
    return DiagonalAttack(
        frame,
        rows,
        indexing_mode,
        kind="product_multipeak",
        params={
            "w": w,
            "spacings": list(spacings),
            "weights": list(map(float, grid_weights)),
        },
    )


def gaussian_grid_weights(
    w: int, d: int, alpha: float, exponent_mode: str = EXPONENT_SQUARED
) -> MultiPeakShape:
    """Centred Gaussian product weights over a d-axis grid of w peaks.

    Per axis, peak j gets weight prop. to exp(-alpha * x^2) with
    x = j - (w-1)/2 in ``squared`` mode, or exp(-alpha * |x|) in
    ``linear`` mode.  The d-axis grid weight is the product, flattened
    in C order.  Spacings are left unbound.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if exponent_mode not in (EXPONENT_SQUARED, EXPONENT_LINEAR):
        raise ValueError(f"unknown exponent mode {exponent_mode!r}")
    x = np.arange(w) - (w - 1) / 2.0
    if exponent_mode == EXPONENT_SQUARED:
        g = np.exp(-alpha * x**2)
    else:
        g = np.exp(-alpha * np.abs(x))
    g /= g.sum()
    grid = g
    for _ in range(d - 1):
        grid = np.multiply.outer(grid, g)
    flat = grid.ravel()
    flat = flat / flat.sum()
    return MultiPeakShape(num_peaks=w, spacings=(), weights=tuple(map(float, flat)))


def apply_attack(
    state: BiphotonState,
    attack: DiagonalAttack,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
) -> AttackOutcome:
    """Measure Bob's photon with the attack; return one outcome.

    Outcome probability is sum_n lambda_{k,n} * (Bob-marginal weight at
    n).  The post-measurement amplitudes are scaled by sqrt(lambda_{k,n})
    on Bob's index and renormalized.  Pass either a fixed ``outcome`` or
    an ``rng`` to sample one.
    """
    if attack.frame != state.frame:
        raise ValueError("attack and state frames differ")
    marginal = state.bob_marginal()
    if outcome is None:
        if rng is None:
            raise ValueError("provide either a fixed outcome or an rng")
        ks = attack.outcomes()
        probs = np.array(
            [
                sum(w * marginal.get(n, 0.0) for n, w in attack.rows[k].items())
                for k in ks
            ]
        )
        total = probs.sum()
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            probs = probs / total
        outcome = int(ks[rng.choice(len(ks), p=probs)])
    if outcome not in attack.rows:
        raise ValueError(f"unknown outcome {outcome}")
    row = attack.rows[outcome]
    prob = sum(w * marginal.get(n, 0.0) for n, w in row.items())
    if prob <= 0.0:
        raise ValueError(f"outcome {outcome} has zero probability on this state")
    amps: dict[tuple[int, int], complex] = {}
    for (ma, nb), a in state.amplitudes.items():
        w = row.get(nb)
        if w:
            amps[(ma, nb)] = a * math.sqrt(w)
    scale = 1.0 / math.sqrt(sum(abs(v) ** 2 for v in amps.values()))
    amps = {key: v * scale for key, v in amps.items()}
    return AttackOutcome(
        outcome=outcome,
        probability=float(prob),
        post_state=BiphotonState(state.frame, amps),
    )


def continuous_multipeak(
    t_e: float, delta: float, delta_e: float, L: int
) -> ContinuousAttack:
    """Square windows of width delta at t_e - m*delta_e for m in [0, L).

    The per-outcome filter is the normalized indicator of the union, so
    the post-measurement envelope keeps coherence at the window spacing.
    """
    if not delta > 0:
        raise ValueError("window width must be positive")
    if L < 1:
        raise ValueError("need at least one window")
    if L > 1 and not delta < delta_e:
        raise ValueError("windows must be narrower than their spacing")
    windows = tuple(
        (t_e - mm * delta_e, t_e - mm * delta_e + delta) for mm in range(L)
    )
    return ContinuousAttack(windows=windows, density=1.0 / (L * delta))


def validate_completeness(attack: DiagonalAttack | ContinuousAttack) -> float:
    """Max deviation of the completeness condition.

    Diagonal attacks: max_n |sum_k lambda_{k,n} - 1|.  Continuous
    attacks: |integral beta - 1|.
    """
    if isinstance(attack, ContinuousAttack):
        return abs(attack.integral() - 1.0)
    sums = attack.column_sums()
    return float(np.max(np.abs(sums - 1.0)))


def mixture_coherence_matrix(attack: DiagonalAttack) -> np.ndarray:
    """S_{n,n'} = sum_k sqrt(lambda_{k,n} * lambda_{k,n'}).

    Averaging the square-root back-action over outcomes multiplies every
    input density-matrix element rho_{n,n'} (on Bob's index) by this
    factor: diagonals survive (S_{n,n} = 1 under completeness) while
    off-diagonal coherence is damped, fully so for the sharp attack.
    """
    m = attack.frame.num_bins
    s = np.zeros((m, m))
    for row in attack.rows.values():
        items = list(row.items())
        for i, (n, wn) in enumerate(items):
            for n2, wn2 in items:
                s[n, n2] += math.sqrt(wn * wn2)
    return s


# ---------------------------------------------------------------------------
# serialization

_SCHEMA = "attack/1"


def attack_to_json(attack: DiagonalAttack | None) -> dict:
    """JSON-friendly attack document (constructor form, not raw weights)."""
    if attack is None:
        return {"schema": _SCHEMA, "kind": "none"}
    doc = {
        "schema": _SCHEMA,
        "kind": attack.kind,
        "frame": {"num_bins": attack.frame.num_bins, "bin_width": attack.frame.bin_width},
        "indexing_mode": attack.indexing_mode,
        "params": attack.params,
    }
    if attack.kind == "custom":
        doc["rows"] = {
            str(k): {str(n): w for n, w in row.items()}
            for k, row in attack.rows.items()
        }
    return doc


def attack_from_json(doc: dict, frame: FrameSpec | None = None) -> DiagonalAttack | None:
    """Rebuild an attack from its JSON document."""
    if doc.get("schema") != _SCHEMA:
        raise ValueError(f"unknown attack schema {doc.get('schema')!r}")
    kind = doc["kind"]
    if kind == "none":
        return None
    if frame is None:
        fr = doc["frame"]
        frame = FrameSpec(int(fr["num_bins"]), float(fr.get("bin_width", 1.0)))
    mode = doc.get("indexing_mode", CYCLIC)
    params = doc.get("params", {})
    if kind == "sharp":
        return sharp_attack(frame, mode)
    if kind == "square_window":
        return square_window_attack(frame, int(params["L"]), mode)
    if kind == "gaussian_window":
        return gaussian_window_attack(frame, float(params["a"]), mode)
    if kind == "multipeak":
        shape = MultiPeakShape(
            num_peaks=int(params["L"]),
            spacings=(int(params["delta_e"]),),
            weights=tuple(params["weights"]),
        )
        return multipeak_attack(frame, shape, mode)
    if kind == "product_multipeak":
        return product_multipeak_attack(
            frame,
            int(params["w"]),
            tuple(int(s) for s in params["spacings"]),
            tuple(params["weights"]),
            mode,
        )
    if kind == "custom":
        rows = {
            int(k): {int(n): float(w) for n, w in row.items()}
            for k, row in doc["rows"].items()
        }
        return DiagonalAttack(frame, rows, mode, kind="custom", params=params)
    raise ValueError(f"unknown attack kind {kind!r}")
