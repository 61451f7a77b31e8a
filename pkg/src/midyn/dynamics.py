"""Per-rate analysis pipeline and the information identities on top of it.

For each requested bit pool the piece's latent stream is squeezed through
the optimal channel, the degraded stream is symbolized and compressed for
its information-rate profile, and a critic estimates how much the degraded
past still says about the full-rate present. The surprisal profile is the
IR curve minus that constant predictive-quality penalty.

IR comes from compression bits and MI from a variational lower bound;
the scales are not directly compatible, so every report carries an
explicit comparative-only marker.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import vmo
from .errors import InputDataError, NumericalError
from .mine import MIEstimate, MineConfig, predictive_quality
from .rate_channel import BitAllocation, reverse_water_fill, transmit_sequence
from .vae import VaeParams, encode, latent_variance_profile

SCHEMA_VERSION = 1
DEFAULT_RATES = (10, 50, 10000)

UNITS_NOTE = (
    "IR is measured in compression bits, MI is a DV lower bound in bits; "
    "the units are not directly compatible and the surprisal profile is "
    "comparative only"
)
COST_MODEL_NOTE = (
    "NewSymbol: log2(|S|) bits; Repeat: log2(T) + log2(L) bits amortized "
    "uniformly over the block; single-level pointers"
)


@dataclass
class ResidualInformation:
    bits: float
    estimator_noise: bool  # set when the difference came out negative


@dataclass
class AnalysisConfig:
    master_seed: int = 0
    lag: int = 1
    n_thresholds: int = vmo.DEFAULT_N_THRESHOLDS
    max_distance_pairs: int = vmo.DEFAULT_MAX_DISTANCE_PAIRS
    unit_prior: bool = False  # N(0, 1) channel prior instead of empirical moments
    use_sample: bool = False  # feed sampled latents through the channel
    threads: int | None = None
    mine: MineConfig = field(default_factory=MineConfig)


@dataclass
class RateAnalysis:
    rate: int
    allocation: BitAllocation
    theta_star: float
    theta_curve: list[tuple[float, float]]
    ir: vmo.IRProfile
    mi: MIEstimate
    surprisal: np.ndarray

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "allocation": self.allocation.to_json(),
            "theta_star": self.theta_star,
            "theta_curve": [[t, v] for t, v in self.theta_curve],
            "ir": {
                "per_bar": [float(v) for v in self.ir.per_bar],
                "total": self.ir.total,
                "theta": self.ir.theta,
                "alphabet_size": self.ir.alphabet_size,
            },
            "mi": self.mi.to_json(),
            "surprisal": [float(v) for v in self.surprisal],
        }


@dataclass
class AnalysisReport:
    source: str
    n_bars: int
    input_dim: int
    latent_dim: int
    master_seed: int
    rates: list[RateAnalysis]

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "piece": {
                "source": self.source,
                "n_bars": self.n_bars,
                "input_dim": self.input_dim,
                "latent_dim": self.latent_dim,
            },
            "master_seed": self.master_seed,
            "units_note": UNITS_NOTE,
            "cost_model": COST_MODEL_NOTE,
            "rates": [r.to_json() for r in self.rates],
        }


def residual_information(i_zt: float, i_zy: float) -> ResidualInformation:
    """I(Z,T|Y) as the signed difference I(Z,T) - I(Z,Y).

    The true conditional MI is non-negative; a negative difference means
    estimator noise and is reported as-is with the flag set.
    """
    if not (np.isfinite(i_zt) and np.isfinite(i_zy)):
        raise InputDataError("residual information needs finite inputs")
    diff = float(i_zt - i_zy)
    return ResidualInformation(bits=diff, estimator_noise=diff < 0)


def surprisal_profile(ir: vmo.IRProfile, mi: MIEstimate) -> np.ndarray:
    """Per-bar IR minus the constant MI penalty; deliberately unclipped."""
    if not np.isfinite(mi.bits):
        raise InputDataError("MI estimate must be finite")
    return ir.per_bar - mi.bits


def analyze(
    bars,
    params: VaeParams,
    rates=DEFAULT_RATES,
    config: AnalysisConfig | None = None,
    source: str = "",
) -> AnalysisReport:
    """Full multi-rate pipeline over one piece.

    Bit allocation is computed once per piece from the empirical variance
    profile of the latent means and applied to every bar. Per-rate work
    runs on its own seed stream (master_seed, rate) so rates can execute
    in parallel yet merge deterministically.
    """
    config = config or AnalysisConfig()
    if len(bars) < 2:
        raise InputDataError(f"need at least 2 bars to analyze, got {len(bars)}")
    rate_list = sorted(int(r) for r in rates)
    if not rate_list:
        raise InputDataError("rates must be non-empty")
    if rate_list[0] < 1:
        raise InputDataError(f"rates must be >= 1 bit, got {rate_list[0]}")
    if len(set(rate_list)) != len(rate_list):
        raise InputDataError(f"duplicate rates in {rate_list}")

    full = [encode(params, bar, bar_index=i) for i, bar in enumerate(bars)]
    if config.unit_prior:
        prior_mean = np.zeros(params.latent_dim)
        prior_var = np.ones(params.latent_dim)
        alloc_var = prior_var
    else:
        means = np.stack([f.mean for f in full])
        prior_mean = means.mean(axis=0)
        alloc_var = latent_variance_profile(full)
        # channel math needs strictly positive prior variances
        prior_var = np.maximum(alloc_var, 1e-8)

    if config.use_sample:
        rng = np.random.default_rng([config.master_seed, len(full)])
        from .vae import reparameterize

        full = [reparameterize(f, rng) for f in full]

    threads = config.threads or os.cpu_count() or 1
    rate_workers = max(1, min(len(rate_list), threads))
    sweep_workers = max(1, threads // rate_workers)

    def run_rate(rate: int) -> RateAnalysis:
        try:
            alloc = reverse_water_fill(alloc_var, rate)
            limited = transmit_sequence(
                full, alloc, prior_mean, prior_var,
                seed=[config.master_seed, rate],
                use_sample=config.use_sample,
            )
            frames = np.stack([f.mean for f in limited])
            candidates = vmo.default_threshold_candidates(
                frames,
                n_candidates=config.n_thresholds,
                max_pairs=config.max_distance_pairs,
                seed=[config.master_seed, rate],
            )
            sweep = vmo.threshold_sweep(frames, candidates,
                                        max_workers=sweep_workers)
            mine_config = MineConfig(
                epochs=config.mine.epochs,
                batch_size=config.mine.batch_size,
                learning_rate=config.mine.learning_rate,
                seed=[config.master_seed, rate, 1],
                dropout=config.mine.dropout,
                hidden_units=config.mine.hidden_units,
                ema_correction=config.mine.ema_correction,
                ema_decay=config.mine.ema_decay,
                use_sample=config.use_sample,
            )
            mi = predictive_quality(limited, full, lag=config.lag,
                                    config=mine_config)
            return RateAnalysis(
                rate=rate,
                allocation=alloc,
                theta_star=sweep.theta_star,
                theta_curve=sweep.curve,
                ir=sweep.profile,
                mi=mi,
                surprisal=surprisal_profile(sweep.profile, mi),
            )
        except (InputDataError, NumericalError) as exc:
            raise type(exc)(f"[rate {rate}] {exc}") from exc

    if rate_workers > 1:
        with ThreadPoolExecutor(max_workers=rate_workers) as pool:
            analyses = list(pool.map(run_rate, rate_list))
    else:
        analyses = [run_rate(r) for r in rate_list]

    return AnalysisReport(
        source=source,
        n_bars=len(bars),
        input_dim=params.input_dim,
        latent_dim=params.latent_dim,
        master_seed=config.master_seed,
        rates=analyses,
    )


def rate_csv(analysis: RateAnalysis) -> str:
    """CSV body for one rate: bar_index, ir_bits, surprisal_bits."""
    lines = ["bar_index,ir_bits,surprisal_bits"]
    for i, (ir_bits, s_bits) in enumerate(zip(analysis.ir.per_bar,
                                              analysis.surprisal)):
        lines.append(f"{i},{float(ir_bits)!r},{float(s_bits)!r}")
    return "\n".join(lines) + "\n"
