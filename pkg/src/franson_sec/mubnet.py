"""Binary-tree analyzer networks for the Fourier-phase basis.

A depth-N tree of unbalanced interferometer blocks sorts a photon
spread over M = 2^N time bins into M outputs.  Post-selected on a
designated arrival slot, output n projects onto the basis state with
amplitudes exp(2*pi*i*n*k/M)/sqrt(M) — the phase basis mutually
unbiased to arrival time.

Structure: row j (counting from the root, j = 1..N) holds 2^(j-1)
blocks with delay 2^(N-j) bins.  Each block splits into a "+" and a
"-" output channel; the branch word read along a root-to-leaf path is
the binary expansion of the leaf index (row j contributes bit j-1).
Every block is time-invariant, so the whole tree is described by
per-leaf impulse responses of length M; the synthesis phases make each
impulse response a pure discrete-Fourier tone, which is certified
numerically after construction.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .statevec import FrameSpec

__all__ = [
    "FransonBlock",
    "MubNetwork",
    "EffectiveOutcome",
    "ReducedNetwork",
    "SynthesisError",
    "block_transfer",
    "synthesize_network",
    "effective_povm",
    "certify_network",
    "completeness_operator",
    "single_branch",
    "reduced_leaf_outcome",
    "reduced_completeness",
    "network_to_json",
    "network_from_json",
]

_TWO_PI = 2.0 * math.pi


class SynthesisError(RuntimeError):
    """No phase assignment realizes the target basis."""


@dataclass(frozen=True)
class FransonBlock:
    """One unbalanced interferometer: delay in bins, long-arm phase."""

    delay: int
    phase: float

    def __post_init__(self) -> None:
        if self.delay < 1:
            raise ValueError("delay must be at least one bin")
        if not 0.0 <= self.phase < _TWO_PI:
            object.__setattr__(self, "phase", self.phase % _TWO_PI)


@dataclass(frozen=True)
class MubNetwork:
    """Full analyzer tree.

    ``nodes`` maps (row, class) to the block sitting there; class runs
    over [0, 2^(row-1)).  ``output_map[p]`` is the basis index measured
    at leaf position p, and ``designated_slots[p]`` the arrival slot
    (in bins, relative to frame start) post-selected for that output.
    """

    depth: int
    nodes: Mapping[tuple[int, int], FransonBlock]
    output_map: tuple[int, ...]
    designated_slots: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.depth
        if n < 1:
            raise ValueError("depth must be at least 1")
        expected = {(j, c) for j in range(1, n + 1) for c in range(2 ** (j - 1))}
        if set(self.nodes) != expected:
            raise ValueError("node set does not form a full binary tree")
        m = 2**n
        if sorted(self.output_map) != list(range(m)):
            raise ValueError("output map must be a permutation of the outputs")
        if len(self.designated_slots) != m:
            raise ValueError("need one designated slot per output")

    @property
    def num_bins(self) -> int:
        return 2**self.depth

    @property
    def num_blocks(self) -> int:
        return 2**self.depth - 1

    def frame(self, bin_width: float = 1.0) -> FrameSpec:
        return FrameSpec(self.num_bins, bin_width)


@dataclass(frozen=True)
class EffectiveOutcome:
    """Post-selected measurement vector of one output.

    ``vector[k]`` is conjugate to the bin-k -> output transfer
    amplitude at the designated slot, so the outcome probability on an
    input with bin amplitudes psi is |sum_k conj(vector[k]) psi[k]|^2.
    The squared norm is the success probability on a basis-matched
    input.
    """

    output: int
    basis_index: int
    vector: np.ndarray
    success_probability: float


@dataclass(frozen=True)
class ReducedNetwork:
    """Single root-to-leaf chain; side ports feed plain detectors."""

    depth: int
    leaf: int
    basis_index: int
    nodes: Mapping[tuple[int, int], FransonBlock]
    branches: tuple[int, ...]
    designated_slot: int

    @property
    def num_bins(self) -> int:
        return 2**self.depth


def block_transfer(
    block: FransonBlock, amplitudes: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Run slot amplitudes through one block.

    Returns the (+, -) channel amplitudes, each longer by ``delay``
    slots: ( a(t) + e^{i theta} a(t - L) ) / 2 and the sign-flipped
    counterpart.  The two channels together conserve the norm.
    """
    a = np.asarray(amplitudes, dtype=complex)
    out = np.zeros(a.size + block.delay, dtype=complex)
    out[: a.size] = a
    delayed = np.zeros_like(out)
    delayed[block.delay : block.delay + a.size] = a * cmath.exp(1j * block.phase)
    return 0.5 * (out + delayed), 0.5 * (out - delayed)


def _leaf_impulse_responses(net: MubNetwork) -> np.ndarray:
    """(M, M) array: row p is leaf p's impulse response over delay q."""
    current: dict[int, np.ndarray] = {0: np.ones(1, dtype=complex)}
    for row in range(1, net.depth + 1):
        half = 2 ** (row - 1)
        nxt: dict[int, np.ndarray] = {}
        for cls, u in current.items():
            plus, minus = block_transfer(net.nodes[(row, cls)], u)
            nxt[cls] = plus
            nxt[cls + half] = minus
        current = nxt
    m = net.num_bins
    out = np.zeros((m, m), dtype=complex)
    for pos, u in current.items():
        out[pos, : u.size] = u
    return out


def _designated_slot(impulse: np.ndarray, num_bins: int) -> int:
    """Arrival slot maximizing total detection probability at one leaf,
    for inputs confined to the frame's bins."""
    energy = np.abs(impulse) ** 2
    windowed = np.convolve(energy, np.ones(num_bins))
    return int(np.argmax(windowed))


def effective_povm(net: MubNetwork) -> list[EffectiveOutcome]:
    """Measurement vectors and success probabilities of all outputs."""
    impulses = _leaf_impulse_responses(net)
    m = net.num_bins
    outcomes = []
    for pos in range(m):
        t_star = net.designated_slots[pos]
        vector = np.zeros(m, dtype=complex)
        for k in range(m):
            q = t_star - k
            if 0 <= q < m:
                vector[k] = np.conj(impulses[pos, q])
        outcomes.append(
            EffectiveOutcome(
                output=pos,
                basis_index=net.output_map[pos],
                vector=vector,
                success_probability=float(np.sum(np.abs(vector) ** 2)),
            )
        )
    return outcomes


def certify_network(net: MubNetwork) -> dict[str, float]:
    """Max deviations of the analyzer from the target basis.

    ``basis_match``: per output, 1 - |overlap| between the normalized
    measurement vector and the basis state it is mapped to.
    ``gram``: pairwise orthonormality defect of the normalized vectors.
    ``unbiasedness``: per entry, | |v_k|^2 - 1/M | of normalized
    vectors against the time-bin basis.
    """
    m = net.num_bins
    outcomes = effective_povm(net)
    vectors = np.zeros((m, m), dtype=complex)
    for out in outcomes:
        norm = math.sqrt(out.success_probability)
        if norm == 0.0:
            return {"basis_match": 1.0, "gram": 1.0, "unbiasedness": 1.0}
        vectors[out.output] = out.vector / norm
    k = np.arange(m)
    basis_match = 0.0
    for out in outcomes:
        target = np.exp(2j * np.pi * out.basis_index * k / m) / math.sqrt(m)
        overlap = abs(np.vdot(vectors[out.output], target))
        basis_match = max(basis_match, 1.0 - overlap)
    gram = np.abs(vectors @ vectors.conj().T - np.eye(m)).max()
    unbiased = np.abs(np.abs(vectors) ** 2 - 1.0 / m).max()
    return {
        "basis_match": float(basis_match),
        "gram": float(gram),
        "unbiasedness": float(unbiased),
    }


def completeness_operator(net: MubNetwork, include_loss: bool = True) -> np.ndarray:
    """Sum of outcome operators on the M-bin input space.

    With ``include_loss`` the non-designated arrival slots are counted
    as extra outcomes and the sum is the identity (the tree is
    lossless overall); without, only the designated-slot operators are
    summed and the result is strictly below the identity.
    """
    impulses = _leaf_impulse_responses(net)
    m = net.num_bins
    total = np.zeros((m, m), dtype=complex)
    for pos in range(m):
        slots = range(2 * m - 1) if include_loss else [net.designated_slots[pos]]
        for t in slots:
            vec = np.zeros(m, dtype=complex)
            for k in range(m):
                q = t - k
                if 0 <= q < m:
                    vec[k] = np.conj(impulses[pos, q])
            total += np.outer(vec, vec.conj())
    return total


def synthesize_network(
    depth: int, method: str = "auto", certify_tol: float = 1e-10
) -> MubNetwork:
    """Build a depth-N analyzer tree realizing the phase basis.

    Row j gets delay 2^(N-j); the block at class c carries phase
    2*pi*c/2^j, a 2^N-th root of unity.  With the "+"/"-" branch word
    spelling the leaf index, leaf n's impulse response is then the
    Fourier tone exp(2*pi*i*n*q/M)/M, so output n projects onto basis
    state n directly (identity output map).

    ``method``: "constructive" trusts the closed-form phases,
    "search" backtracks over the discrete phase set 2*pi*m/2^N per
    node, and "auto" tries the closed form first.  The result is
    certified for M <= 64 (always, for "search"); failure raises
    SynthesisError with the deviation diagnostics.
    """
    if not 1 <= depth <= 12:
        raise ValueError("depth must lie in [1, 12]")
    if method not in ("auto", "constructive", "search"):
        raise ValueError(f"unknown method {method!r}")

    net: MubNetwork | None = None
    if method in ("auto", "constructive"):
        nodes = {
            (j, c): FransonBlock(2 ** (depth - j), _TWO_PI * c / 2**j)
            for j in range(1, depth + 1)
            for c in range(2 ** (j - 1))
        }
        net = _finalize(depth, nodes, tuple(range(2**depth)))
        if depth <= 6:
            report = certify_network(net)
            if max(report.values()) > certify_tol:
                if method == "constructive":
                    raise SynthesisError(
                        f"closed-form phases missed the target basis: {report}"
                    )
                net = None
    if net is None:
        if method == "constructive":
            raise SynthesisError("constructive synthesis unavailable")
        if depth > 4:
            raise SynthesisError(
                "phase search is only feasible up to depth 4; "
                "no assignment found constructively"
            )
        found = _search_phases(depth)
        if found is None:
            raise SynthesisError(
                f"no phase assignment over {{2*pi*m/2^{depth}}} realizes "
                f"the depth-{depth} target basis"
            )
        nodes, output_map = found
        net = _finalize(depth, nodes, output_map)
        report = certify_network(net)
        if max(report.values()) > certify_tol:
            raise SynthesisError(f"searched phases failed certification: {report}")
    return net


def _finalize(
    depth: int, nodes: dict[tuple[int, int], FransonBlock], output_map: tuple[int, ...]
) -> MubNetwork:
    m = 2**depth
    prelim = MubNetwork(depth, nodes, output_map, (m - 1,) * m)
    impulses = _leaf_impulse_responses(prelim)
    slots = tuple(_designated_slot(impulses[p], m) for p in range(m))
    if slots == prelim.designated_slots:
        return prelim
    return MubNetwork(depth, nodes, output_map, slots)


def _tone_index(factors: list[complex]) -> int | None:
    """Basis index whose Fourier tone matches the per-row path factors.

    Row j's factor (branch sign times e^{i theta}) must equal
    exp(2*pi*i*n/2^j); the rows pin n down bit by bit.  Returns None
    when the factors are not consistent roots of unity.
    """
    n = 0
    for j, f in enumerate(factors, start=1):
        turns = (cmath.phase(f) / _TWO_PI) % 1.0
        scaled = turns * 2**j
        nj = round(scaled) % 2**j
        if min(abs(scaled - round(scaled)), abs(scaled - 2**j)) > 1e-9:
            return None
        if nj % 2 ** (j - 1) != n:
            return None
        n = nj
    return n


def _search_phases(
    depth: int,
) -> tuple[dict[tuple[int, int], FransonBlock], tuple[int, ...]] | None:
    """Backtracking over the discrete per-node phase set.

    Work items are pending subtrees carrying the factor word of the
    path into them; a completed path is pruned immediately unless its
    factors form an unused Fourier tone.
    """
    m = 2**depth
    phase_set = [_TWO_PI * i / m for i in range(m)]
    nodes: dict[tuple[int, int], FransonBlock] = {}
    leaf_to_basis: dict[int, int] = {}
    used: set[int] = set()

    def solve(stack: list[tuple[int, int, list[complex]]]) -> bool:
        if not stack:
            return True
        row, cls, factors = stack[0]
        rest = stack[1:]
        if row > depth:
            n = _tone_index(factors)
            if n is None or n in used:
                return False
            used.add(n)
            leaf_to_basis[cls] = n
            if solve(rest):
                return True
            used.remove(n)
            del leaf_to_basis[cls]
            return False
        for theta in phase_set:
            nodes[(row, cls)] = FransonBlock(2 ** (depth - row), theta)
            f = cmath.exp(1j * theta)
            children = [
                (row + 1, cls, factors + [f]),
                (row + 1, cls + 2 ** (row - 1), factors + [-f]),
            ]
            if solve(children + rest):
                return True
        del nodes[(row, cls)]
        return False

    if not solve([(1, 0, [])]):
        return None
    output_map = tuple(leaf_to_basis[p] for p in range(m))
    return dict(nodes), output_map


def single_branch(net: MubNetwork, leaf: int) -> ReducedNetwork:
    """Keep only the chain of blocks feeding one output.

    The discarded sibling port at each row is terminated in a plain
    detector, so the reduced device still resolves every photon; it
    just distinguishes only one phase-basis state.
    """
    m = net.num_bins
    if not 0 <= leaf < m:
        raise ValueError(f"leaf {leaf} out of range for {m} outputs")
    nodes: dict[tuple[int, int], FransonBlock] = {}
    branches = []
    cls = 0
    for row in range(1, net.depth + 1):
        bit = (leaf >> (row - 1)) & 1
        nodes[(row, cls)] = net.nodes[(row, cls)]
        branches.append(-1 if bit else +1)
        cls = cls + 2 ** (row - 1) * bit
    return ReducedNetwork(
        depth=net.depth,
        leaf=leaf,
        basis_index=net.output_map[leaf],
        nodes=nodes,
        branches=tuple(branches),
        designated_slot=net.designated_slots[leaf],
    )


def _reduced_port_impulses(rnet: ReducedNetwork) -> tuple[np.ndarray, list[np.ndarray]]:
    """Impulse responses of the retained leaf and each terminator port."""
    u = np.ones(1, dtype=complex)
    cls = 0
    side_ports = []
    for row, sign in enumerate(rnet.branches, start=1):
        plus, minus = block_transfer(rnet.nodes[(row, cls)], u)
        if sign > 0:
            u, side = plus, minus
        else:
            u, side = minus, plus
        side_ports.append(side)
        cls = cls + 2 ** (row - 1) * (1 if sign < 0 else 0)
    return u, side_ports


def reduced_leaf_outcome(rnet: ReducedNetwork) -> EffectiveOutcome:
    """Post-selected measurement vector of the retained output."""
    u, _ = _reduced_port_impulses(rnet)
    m = rnet.num_bins
    vector = np.zeros(m, dtype=complex)
    for k in range(m):
        q = rnet.designated_slot - k
        if 0 <= q < u.size:
            vector[k] = np.conj(u[q])
    return EffectiveOutcome(
        output=rnet.leaf,
        basis_index=rnet.basis_index,
        vector=vector,
        success_probability=float(np.sum(np.abs(vector) ** 2)),
    )


def reduced_completeness(rnet: ReducedNetwork) -> np.ndarray:
    """Sum of all outcome operators of the reduced device.

    Counts the retained leaf at every arrival slot plus each
    terminator detector at every slot; equals the identity because the
    chain is lossless.
    """
    m = rnet.num_bins
    leaf_u, sides = _reduced_port_impulses(rnet)
    total = np.zeros((m, m), dtype=complex)
    for u in [leaf_u] + sides:
        for t in range(u.size + m - 1):
            vec = np.zeros(m, dtype=complex)
            for k in range(m):
                q = t - k
                if 0 <= q < u.size:
                    vec[k] = np.conj(u[q])
            total += np.outer(vec, vec.conj())
    return total


# ---------------------------------------------------------------------------
# netlist serialization

_SCHEMA = "mub-netlist/1"


def _node_id(row: int, cls: int) -> str:
    return f"r{row}c{cls}"


def network_to_json(net: MubNetwork) -> dict:
    """JSON netlist: nodes (id, L, theta), edges, output map, slots."""
    nodes = [
        {
            "id": _node_id(row, cls),
            "delay": net.nodes[(row, cls)].delay,
            "phase": net.nodes[(row, cls)].phase,
        }
        for (row, cls) in sorted(net.nodes)
    ]
    edges = []
    for row, cls in sorted(net.nodes):
        half = 2 ** (row - 1)
        for branch, child_cls in (("+", cls), ("-", cls + half)):
            if row == net.depth:
                target = f"out{child_cls}"
            else:
                target = _node_id(row + 1, child_cls)
            edges.append({"from": _node_id(row, cls), "branch": branch, "to": target})
    return {
        "schema": _SCHEMA,
        "depth": net.depth,
        "num_bins": net.num_bins,
        "nodes": nodes,
        "edges": edges,
        "output_map": {f"out{p}": net.output_map[p] for p in range(net.num_bins)},
        "designated_slots": {
            f"out{p}": net.designated_slots[p] for p in range(net.num_bins)
        },
    }


def network_from_json(doc: dict) -> MubNetwork:
    if doc.get("schema") != _SCHEMA:
        raise ValueError(f"unknown netlist schema {doc.get('schema')!r}")
    depth = int(doc["depth"])
    nodes = {}
    for entry in doc["nodes"]:
        ident = entry["id"]
        row, cls = ident.removeprefix("r").split("c")
        nodes[(int(row), int(cls))] = FransonBlock(
            int(entry["delay"]), float(entry["phase"])
        )
    m = 2**depth
    output_map = tuple(int(doc["output_map"][f"out{p}"]) for p in range(m))
    slots = tuple(int(doc["designated_slots"][f"out{p}"]) for p in range(m))
    return MubNetwork(depth, nodes, output_map, slots)
