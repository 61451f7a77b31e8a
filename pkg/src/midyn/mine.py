"""Neural mutual-information estimation via the Donsker-Varadhan bound.

A small critic (two 30-unit ReLU layers with dropout 0.3, single output)
scores concatenated (z, y) pairs. Gradient ascent on

    mean T(z, y)_joint - log mean exp T(z, y)_marginal

over paired batches and in-batch-permuted marginal batches tightens a
lower bound on I(Z; Y). Estimates convert to bits and the reported value
is the mean over the last tenth of the per-epoch curve, floored at zero;
estimates above log2(n) + 2 bits mark the result unreliable instead of
failing, since saturation is expected for (near-)identical inputs.

Everything is plain numpy with hand-derived gradients; runs are
deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputDataError, NumericalError
from .vae import LatentFrame, _Adam

LN2 = math.log(2.0)


@dataclass
class MineConfig:
    epochs: int = 300
    batch_size: int = 128
    learning_rate: float = 1e-3
    seed: int | list = 0
    dropout: float = 0.3
    hidden_units: int = 30
    ema_correction: bool = False  # smoothed-denominator gradient, off by default
    ema_decay: float = 0.99
    use_sample: bool = False  # predictive_quality feeds samples instead of means

    def __post_init__(self):
        if self.epochs < 1:
            raise InputDataError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise InputDataError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise InputDataError("learning_rate must be > 0")
        if not 0 <= self.dropout < 1:
            raise InputDataError(f"dropout must be in [0, 1), got {self.dropout}")

    def echo(self) -> dict:
        seed = self.seed if isinstance(self.seed, int) else list(self.seed)
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": seed,
        }


@dataclass
class MineNet:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def arrays(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2,
                "w3": self.w3, "b3": self.b3}


@dataclass
class MIEstimate:
    bits: float
    raw_bits: float
    curve: list[float]
    n_samples: int
    reliable: bool
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "bits": self.bits,
            "raw_bits": self.raw_bits,
            "curve": [float(v) for v in self.curve],
            "n_samples": self.n_samples,
            "reliable": self.reliable,
            "config": self.config,
        }


def init_net(input_dim: int, hidden: int, rng: np.random.Generator) -> MineNet:
    def w(n_in, n_out):
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))

    return MineNet(
        w1=w(input_dim, hidden), b1=np.zeros(hidden),
        w2=w(hidden, hidden), b2=np.zeros(hidden),
        w3=w(hidden, 1), b3=np.zeros(1),
    )


def critic_forward(net: MineNet, x: np.ndarray, masks=None):
    """Score a batch; masks are inverted-dropout multipliers (None = eval)."""
    pre1 = x @ net.w1 + net.b1
    h1 = np.maximum(pre1, 0.0)
    if masks is not None:
        h1 = h1 * masks[0]
    pre2 = h1 @ net.w2 + net.b2
    h2 = np.maximum(pre2, 0.0)
    if masks is not None:
        h2 = h2 * masks[1]
    t = (h2 @ net.w3 + net.b3).reshape(-1)
    cache = (x, pre1, h1, pre2, h2)
    return t, cache


def _critic_backward(net: MineNet, cache, g_t: np.ndarray, masks=None):
    x, pre1, h1, pre2, h2 = cache
    g_out = g_t.reshape(-1, 1)
    grads = {
        "w3": h2.T @ g_out,
        "b3": g_out.sum(axis=0),
    }
    g_h2 = g_out @ net.w3.T
    if masks is not None:
        g_h2 = g_h2 * masks[1]
    g_pre2 = g_h2 * (pre2 > 0)
    grads["w2"] = h1.T @ g_pre2
    grads["b2"] = g_pre2.sum(axis=0)
    g_h1 = g_pre2 @ net.w2.T
    if masks is not None:
        g_h1 = g_h1 * masks[0]
    g_pre1 = g_h1 * (pre1 > 0)
    grads["w1"] = x.T @ g_pre1
    grads["b1"] = g_pre1.sum(axis=0)
    return grads


def dv_objective(t_joint, t_marg) -> float:
    """mean(t_joint) - log(mean(exp(t_marg))) in nats, overflow-safe."""
    t_joint = np.asarray(t_joint, dtype=np.float64)
    t_marg = np.asarray(t_marg, dtype=np.float64)
    if t_joint.size == 0 or t_marg.size == 0:
        raise InputDataError("critic output vectors must be non-empty")
    if not (np.all(np.isfinite(t_joint)) and np.all(np.isfinite(t_marg))):
        raise NumericalError("non-finite critic outputs in the DV objective")
    m = float(t_marg.max())
    log_mean_exp = m + math.log(float(np.mean(np.exp(t_marg - m))))
    return float(t_joint.mean()) - log_mean_exp


def dv_value_and_grads(net: MineNet, x_joint, x_marg, masks_joint=None,
                       masks_marg=None, log_ema: float | None = None):
    """DV bound on a batch plus d(bound)/d(params).

    With ``log_ema`` given, the marginal-side gradient uses the smoothed
    denominator exp(log_ema) instead of the batch mean (bias-corrected
    ascent); the returned value is the plain batch bound either way.
    """
    t_j, cache_j = critic_forward(net, x_joint, masks_joint)
    t_m, cache_m = critic_forward(net, x_marg, masks_marg)
    value = dv_objective(t_j, t_m)

    g_tj = np.full(t_j.shape, 1.0 / t_j.shape[0])
    m = float(t_m.max())
    e_tm = np.exp(t_m - m)
    if log_ema is None:
        g_tm = -e_tm / e_tm.sum()
    else:
        g_tm = -np.exp(t_m - log_ema) / t_m.shape[0]
    grads_j = _critic_backward(net, cache_j, g_tj, masks_joint)
    grads_m = _critic_backward(net, cache_m, g_tm, masks_marg)
    return value, {k: grads_j[k] + grads_m[k] for k in grads_j}


def standardize(x: np.ndarray) -> np.ndarray:
    """Per-dimension z-score; constant dimensions map to zero."""
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    return (x - mu) / sd


def estimate_mi(z_samples, y_samples, config: MineConfig | None = None) -> MIEstimate:
    """Train the critic and report the bound in bits.

    The per-epoch curve is an evaluation pass over the full dataset with
    dropout off and a fresh marginal permutation; the headline number is
    the floored mean of the last 10% of epochs.
    """
    config = config or MineConfig()
    z = np.atleast_2d(np.asarray(z_samples, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y_samples, dtype=np.float64))
    if z.shape[0] != y.shape[0]:
        raise InputDataError(
            f"sample counts differ: {z.shape[0]} vs {y.shape[0]}"
        )
    n = z.shape[0]
    if n < 32:
        raise InputDataError(f"need at least 32 samples, got {n}")

    z = standardize(z)
    y = standardize(y)

    rng = np.random.default_rng(config.seed)
    net = init_net(z.shape[1] + y.shape[1], config.hidden_units, rng)
    arrays = net.arrays()
    opt = _Adam(arrays, config.learning_rate)
    batch = min(config.batch_size, n)
    keep = 1.0 - config.dropout
    log_ema: float | None = None

    def draw_masks(rows: int):
        if config.dropout == 0:
            return None
        shape = (rows, config.hidden_units)
        return ((rng.random(shape) < keep) / keep,
                (rng.random(shape) < keep) / keep)

    curve: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            if idx.size < 2:
                continue  # a 1-row tail batch has no permutation partner
            zb, yb = z[idx], y[idx]
            ym = yb[rng.permutation(idx.size)]
            masks_j = draw_masks(idx.size)
            masks_m = draw_masks(idx.size)
            if config.ema_correction:
                t_m_probe, _ = critic_forward(net, np.hstack([zb, ym]), masks_m)
                log_batch = _log_mean_exp(t_m_probe)
                log_ema = (log_batch if log_ema is None
                           else np.logaddexp(math.log(config.ema_decay) + log_ema,
                                             math.log1p(-config.ema_decay) + log_batch))
            value, grads = dv_value_and_grads(
                net, np.hstack([zb, yb]), np.hstack([zb, ym]),
                masks_j, masks_m, log_ema if config.ema_correction else None,
            )
            if not math.isfinite(value):
                raise NumericalError(
                    f"DV objective non-finite at epoch {epoch} "
                    f"(learning_rate={config.learning_rate})"
                )
            opt.step(arrays, {k: -g for k, g in grads.items()})  # ascent
        perm = rng.permutation(n)
        t_j, _ = critic_forward(net, np.hstack([z, y]))
        t_m, _ = critic_forward(net, np.hstack([z, y[perm]]))
        curve.append(dv_objective(t_j, t_m) / LN2)

    tail = curve[-max(1, math.ceil(0.1 * len(curve))):]
    raw_bits = float(np.mean(tail))
    reliable = raw_bits <= math.log2(n) + 2.0
    return MIEstimate(
        bits=max(0.0, raw_bits),
        raw_bits=raw_bits,
        curve=curve,
        n_samples=n,
        reliable=reliable,
        config=config.echo(),
    )


def _log_mean_exp(t: np.ndarray) -> float:
    m = float(t.max())
    return m + math.log(float(np.mean(np.exp(t - m))))


def predictive_quality(
    limited: list[LatentFrame],
    full: list[LatentFrame],
    lag: int = 1,
    config: MineConfig | None = None,
) -> MIEstimate:
    """I(limited past; full present) from lag-separated frame pairs."""
    config = config or MineConfig()
    if lag < 0:
        raise InputDataError(f"lag must be >= 0, got {lag}")
    if len(limited) != len(full):
        raise InputDataError(
            f"sequences differ in length: {len(limited)} vs {len(full)}"
        )
    for a, b in zip(limited, full):
        if a.bar_index != b.bar_index:
            raise InputDataError(
                f"sequences misaligned at bars {a.bar_index} vs {b.bar_index}"
            )
    n_pairs = len(limited) - lag
    if n_pairs < 32:
        raise InputDataError(
            f"{len(limited)} bars give {n_pairs} pairs at lag {lag}; "
            "the estimator needs at least 32 pairs"
        )
    if config.use_sample:
        for f in limited:
            if f.sample is None:
                raise InputDataError(
                    f"frame {f.bar_index} has no sample; reparameterize first"
                )
        z = np.stack([f.sample for f in limited[:n_pairs]])
    else:
        z = np.stack([f.mean for f in limited[:n_pairs]])
    y = np.stack([f.mean for f in full[lag:]])
    return estimate_mi(z, y, config)
