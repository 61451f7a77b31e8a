"""Variable Markov Oracle analysis: symbolization, compression, information rate.

A factor oracle is built online over vector frames; two frames share a
symbol when their Euclidean distance is within a threshold theta. A
Compror-style block coder then parses the label sequence into literal
symbols and (pointer, length) repeats, and the per-position coding cost
is turned into an instantaneous information-rate profile

    IR(t) = max(0, log2(|S|) - c(t))

with |S| the final alphabet size. ``threshold_sweep`` repeats the whole
chain over candidate thresholds and keeps the one with maximal total IR.

Construction runs on a compiled kernel when the extension built, with a
pure-Python fallback producing identical structures; set MIDYN_PURE=1 to
force the fallback. ``BACKEND`` names the active one.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import InputDataError

if os.environ.get("MIDYN_PURE"):
    from . import _pure as _backend

    BACKEND = "pure"
else:
    try:
        from . import _kernel as _backend  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _pure as _backend  # type: ignore[no-redef]

        BACKEND = "pure"

DEFAULT_N_THRESHOLDS = 64
DEFAULT_MAX_DISTANCE_PAIRS = 10_000


@dataclass
class FactorOracle:
    """Oracle automaton over T frames: states 0..T, state t reads frame t-1.

    ``sfx[0]`` and ``labels[0]`` are -1 sentinels for the root.
    """

    sfx: np.ndarray
    lrs: np.ndarray
    labels: np.ndarray
    trn: list[list[int]]
    rsfx: list[list[int]]
    alphabet_size: int
    theta: float
    n_frames: int

    @property
    def n_states(self) -> int:
        return self.n_frames + 1


@dataclass(frozen=True)
class NewSymbol:
    pos: int


@dataclass(frozen=True)
class Repeat:
    pos: int
    source_pos: int
    length: int

    def __post_init__(self):
        if self.source_pos < 0 or self.source_pos >= self.pos:
            # self-referential copies may run past pos, but must start before it
            raise InputDataError(
                f"repeat at {self.pos} has bad source {self.source_pos}"
            )
        if self.length < 1:
            raise InputDataError(f"repeat at {self.pos} has length {self.length}")


@dataclass
class ComprorCode:
    blocks: list
    total_bits: float
    per_position_bits: np.ndarray


@dataclass
class IRProfile:
    per_bar: np.ndarray
    total: float
    theta: float
    alphabet_size: int


@dataclass
class SweepResult:
    theta_star: float
    oracle: FactorOracle
    profile: IRProfile
    curve: list[tuple[float, float]]  # (theta, total IR) per candidate


def build_vmo(frames, theta: float, metric: str = "euclidean") -> FactorOracle:
    """Online oracle construction over equal-length vector frames.

    For each new frame the suffix chain of the previous state is walked;
    chain states without an in-threshold forward target gain a transition
    to the new state, and the first chain state with one (minimum distance,
    earliest insertion on ties) provides the suffix link and symbol label.
    A fresh symbol is minted when the chain exhausts.
    """
    if metric != "euclidean":
        raise InputDataError(f"unsupported metric {metric!r}")
    if theta < 0:
        raise InputDataError(f"theta must be >= 0, got {theta}")
    X = _as_frame_matrix(frames)
    if X.shape[0] == 0:
        raise InputDataError("frames must be non-empty")
    sfx, lrs, labels, trn = _backend.build_arrays(X, float(theta))
    T = X.shape[0]
    rsfx: list[list[int]] = [[] for _ in range(T + 1)]
    for t in range(1, T + 1):
        rsfx[int(sfx[t])].append(t)
    return FactorOracle(
        sfx=np.asarray(sfx, dtype=np.int64),
        lrs=np.asarray(lrs, dtype=np.int64),
        labels=np.asarray(labels, dtype=np.int64),
        trn=trn,
        rsfx=rsfx,
        alphabet_size=int(labels[1:].max()) + 1 if T else 0,
        theta=float(theta),
        n_frames=T,
    )


def _as_frame_matrix(frames) -> np.ndarray:
    try:
        X = np.ascontiguousarray(frames, dtype=np.float64)
    except ValueError as exc:
        raise InputDataError(f"frames are ragged or non-numeric: {exc}") from exc
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise InputDataError(f"frames must be 2-D, got shape {X.shape}")
    return X


def compror_encode(oracle: FactorOracle) -> ComprorCode:
    """Greedy left-to-right block parse of the oracle's frame sequence.

    At position j, the longest stretch j..i-1 copyable from earlier
    material (tracked by the lrs values) becomes one Repeat block; a
    position that cannot start a copy is emitted as a literal NewSymbol.
    Costs: literal log2(|S|) bits, repeat log2(T) + log2(L) bits spread
    uniformly over its L positions.
    """
    T = oracle.n_frames
    lrs = oracle.lrs
    sfx = oracle.sfx
    symbol_bits = math.log2(oracle.alphabet_size) if oracle.alphabet_size else 0.0

    blocks: list = []
    per_pos = np.zeros(T, dtype=np.float64)
    total = 0.0
    j = 0
    while j < T:
        i = j
        while i < T and lrs[i + 1] >= i - j + 1:
            i += 1
        if i == j:
            blocks.append(NewSymbol(pos=j))
            per_pos[j] = symbol_bits
            total += symbol_bits
            j += 1
        else:
            length = i - j
            block = Repeat(pos=j, source_pos=int(sfx[i]) - length, length=length)
            blocks.append(block)
            cost = math.log2(T) + math.log2(length)
            per_pos[j:i] = cost / length
            total += cost
            j = i
    return ComprorCode(blocks=blocks, total_bits=total, per_position_bits=per_pos)


def ir_profile(oracle: FactorOracle, code: ComprorCode) -> IRProfile:
    """Instantaneous information rate from the coding gain, clipped at zero."""
    if oracle.alphabet_size < 1:
        raise InputDataError("oracle has an empty alphabet")
    if code.per_position_bits.shape[0] != oracle.n_frames:
        raise InputDataError(
            f"code covers {code.per_position_bits.shape[0]} positions, "
            f"oracle has {oracle.n_frames} frames"
        )
    per_bar = np.maximum(0.0, math.log2(oracle.alphabet_size) - code.per_position_bits)
    return IRProfile(
        per_bar=per_bar,
        total=float(per_bar.sum()),
        theta=oracle.theta,
        alphabet_size=oracle.alphabet_size,
    )


def analyze_frames(frames, theta: float) -> tuple[FactorOracle, IRProfile]:
    """Build, encode and profile in one step."""
    oracle = build_vmo(frames, theta)
    return oracle, ir_profile(oracle, compror_encode(oracle))


def threshold_sweep(frames, theta_candidates, max_workers: int | None = None) -> SweepResult:
    """Evaluate every candidate threshold and keep the max-total-IR one.

    Ties resolve to the smallest theta. Candidates are evaluated on a
    thread pool (the compiled kernel releases the GIL) and merged in
    candidate order, so the result never depends on scheduling.
    """
    candidates = sorted(float(c) for c in np.atleast_1d(np.asarray(theta_candidates)))
    if not candidates:
        raise InputDataError("theta_candidates must be non-empty")
    X = _as_frame_matrix(frames)

    def evaluate(theta):
        return analyze_frames(X, theta)

    if max_workers is None or max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(evaluate, candidates))
    else:
        results = [evaluate(c) for c in candidates]

    curve = [(theta, profile.total) for theta, (_, profile) in zip(candidates, results)]
    best = max(range(len(candidates)), key=lambda idx: (results[idx][1].total, -idx))
    oracle, profile = results[best]
    return SweepResult(theta_star=candidates[best], oracle=oracle,
                       profile=profile, curve=curve)


def default_threshold_candidates(
    frames,
    n_candidates: int = DEFAULT_N_THRESHOLDS,
    max_pairs: int = DEFAULT_MAX_DISTANCE_PAIRS,
    seed=0,
) -> list[float]:
    """Candidate thetas spanning the 2nd..98th percentile of pairwise distances.

    All pairs are used when there are at most ``max_pairs`` of them,
    otherwise that many index pairs are sampled with a seeded generator.
    """
    X = _as_frame_matrix(frames)
    T = X.shape[0]
    if T < 2:
        return [0.0]
    n_all = T * (T - 1) // 2
    if n_all <= max_pairs:
        ii, jj = np.triu_indices(T, k=1)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, T, size=max_pairs)
        jj = rng.integers(0, T - 1, size=max_pairs)
        jj = np.where(jj >= ii, jj + 1, jj)  # shift to avoid i == j
    dists = np.sqrt(np.sum((X[ii] - X[jj]) ** 2, axis=1))
    lo, hi = np.percentile(dists, [2.0, 98.0])
    if not hi > lo:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, n_candidates)]


def frames_from_symbols(text: str) -> np.ndarray:
    """One-hot frames for a symbol string; distinct symbols sit sqrt(2) apart."""
    if not text:
        raise InputDataError("symbol string is empty")
    alphabet = sorted(set(text))
    index = {ch: i for i, ch in enumerate(alphabet)}
    X = np.zeros((len(text), len(alphabet)), dtype=np.float64)
    for t, ch in enumerate(text):
        X[t, index[ch]] = 1.0
    return X


def oracle_to_json(oracle: FactorOracle) -> dict:
    """Debug dump of the automaton structure."""
    return {
        "n_states": oracle.n_states,
        "theta": oracle.theta,
        "alphabet_size": oracle.alphabet_size,
        "sfx": [int(v) for v in oracle.sfx],
        "lrs": [int(v) for v in oracle.lrs],
        "labels": [int(v) for v in oracle.labels],
        "trn": [[int(v) for v in row] for row in oracle.trn],
    }
