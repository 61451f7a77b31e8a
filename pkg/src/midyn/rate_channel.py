"""Gaussian rate-distortion math and the bit-rate-limited latent channel.

Three pieces:

* closed-form scalar rate/distortion conversions for a Gaussian source,
* reverse water-filling that hands out integer bits one at a time, each
  bit quartering the strongest remaining component variance,
* the optimal test channel, which interpolates every transmitted value
  toward the prior mean and adds just enough noise to meet the rate.

Zero-rate components transmit the prior mean exactly; the R = 0 branch
is special-cased so that no floating-point residue leaks through.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDataError
from .vae import LatentFrame

VAR_FLOOR = 1e-8


@dataclass
class BitAllocation:
    """Integer bits per component plus the variances left after coding."""

    bits: np.ndarray
    pool: int
    residual_variances: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int64)
        self.residual_variances = np.asarray(self.residual_variances, dtype=np.float64)
        if self.bits.shape != self.residual_variances.shape:
            raise InputDataError("bits and residual_variances lengths differ")
        if np.any(self.bits < 0):
            raise InputDataError("bit counts must be non-negative")
        if int(self.bits.sum()) != self.pool:
            raise InputDataError(
                f"bits sum to {int(self.bits.sum())}, pool is {self.pool}"
            )

    def to_json(self) -> dict:
        return {
            "pool": int(self.pool),
            "bits": [int(b) for b in self.bits],
            "residual_variances": [float(v) for v in self.residual_variances],
        }


@dataclass
class ChannelSpec:
    """Per-component prior moments and rates for the test channel."""

    prior_mean: np.ndarray
    prior_var: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        self.prior_mean = np.asarray(self.prior_mean, dtype=np.float64)
        self.prior_var = np.asarray(self.prior_var, dtype=np.float64)
        self.rates = np.asarray(self.rates, dtype=np.float64)
        if not self.prior_mean.shape == self.prior_var.shape == self.rates.shape:
            raise InputDataError("channel spec component counts differ")
        if np.any(self.prior_var <= 0):
            raise InputDataError("prior variances must be strictly positive")
        if np.any(self.rates < 0):
            raise InputDataError("rates must be non-negative")


def gaussian_rate(distortion: float, variance: float) -> float:
    """Bits needed to reach a mean-square distortion for a Gaussian source."""
    if distortion <= 0:
        raise InputDataError(f"distortion must be > 0, got {distortion}")
    if variance < 0:
        raise InputDataError(f"variance must be >= 0, got {variance}")
    if distortion >= variance:
        return 0.0
    return 0.5 * float(np.log2(variance / distortion))


def distortion_at_rate(variance, rate):
    """sigma^2 * 2^(-2R); accepts scalars or arrays."""
    rate = np.asarray(rate, dtype=np.float64)
    if np.any(rate < 0):
        raise InputDataError("rate must be non-negative")
    out = np.asarray(variance, dtype=np.float64) * np.exp2(-2.0 * rate)
    return float(out) if out.ndim == 0 else out


def reverse_water_fill(variances, pool: int) -> BitAllocation:
    """Greedy integer bit allocation, one bit at a time to the strongest
    component, quartering its variance. Ties go to the lowest index and
    exhausted (zero-variance) components are never picked.
    """
    variances = np.asarray(variances, dtype=np.float64)
    if variances.ndim != 1 or variances.size == 0:
        raise InputDataError("variances must be a non-empty vector")
    if np.any(variances < 0):
        raise InputDataError("variances must be non-negative")
    if pool < 0:
        raise InputDataError(f"pool must be >= 0, got {pool}")

    residual = variances.copy()
    bits = np.zeros(variances.shape, dtype=np.int64)
    for placed in range(pool):
        idx = int(np.argmax(residual))  # argmax takes the first maximum
        if residual[idx] <= 0.0:
            raise InputDataError(
                f"cannot place {pool - placed} remaining bits: "
                "all component variances are zero"
            )
        bits[idx] += 1
        residual[idx] *= 0.25
    return BitAllocation(bits=bits, pool=pool, residual_variances=residual)


def channel_transmit(z_e, prior_mean, prior_var, rate, rng: np.random.Generator):
    """Draw z_d ~ Normal(mu_d, sigma_d^2) for the optimal rate-R channel.

    mu_d = z_e + 2^(-2R) (mu_e - z_e) and sigma_d^2 = 2^(-4R)(2^(2R)-1) sigma_e^2.
    All arguments broadcast; R = 0 slots return mu_e exactly, with the noise
    draw still consumed so the random stream does not depend on the rates.
    """
    z_e = np.asarray(z_e, dtype=np.float64)
    prior_mean = np.asarray(prior_mean, dtype=np.float64)
    prior_var = np.asarray(prior_var, dtype=np.float64)
    rate = np.asarray(rate, dtype=np.float64)
    if np.any(prior_var <= 0):
        raise InputDataError("prior variance must be strictly positive")
    if np.any(rate < 0):
        raise InputDataError("rate must be non-negative")

    w = np.exp2(-2.0 * rate)  # weight on the prior mean; 1 at R=0, ->0 as R grows
    mu_d = z_e + w * (prior_mean - z_e)
    var_d = np.maximum(w - w * w, 0.0) * prior_var
    shape = np.broadcast_shapes(z_e.shape, prior_mean.shape, prior_var.shape,
                                rate.shape)
    out = mu_d + np.sqrt(var_d) * rng.standard_normal(shape)
    out = np.where(rate == 0, np.broadcast_to(prior_mean, shape), out)
    return float(out) if out.ndim == 0 else out


def transmit_sequence(
    frames: list[LatentFrame],
    alloc: BitAllocation,
    prior_mean,
    prior_var,
    seed,
    use_sample: bool = False,
) -> list[LatentFrame]:
    """Push every frame through the channel at the allocated per-component rates.

    Each frame consumes its own rng stream keyed on (seed, bar_index), so the
    result does not depend on processing order. The transmitted value becomes
    both mean and sample of the output frame; zero-bit components sit at the
    prior mean in every frame.
    """
    prior_mean = np.asarray(prior_mean, dtype=np.float64)
    prior_var = np.asarray(prior_var, dtype=np.float64)
    rates = alloc.bits.astype(np.float64)
    if not prior_mean.shape == prior_var.shape == rates.shape:
        raise InputDataError("allocation and prior component counts differ")
    seed = list(np.atleast_1d(np.asarray(seed, dtype=np.uint64)).tolist())

    out = []
    for frame in frames:
        value = frame.sample if use_sample else frame.mean
        if value is None:
            raise InputDataError(
                f"frame {frame.bar_index} has no sample; reparameterize first"
            )
        if value.shape != rates.shape:
            raise InputDataError(
                f"frame {frame.bar_index}: expected {rates.shape[0]} components, "
                f"got {value.shape[0]}"
            )
        rng = np.random.default_rng(seed + [frame.bar_index])
        z_d = channel_transmit(value, prior_mean, prior_var, rates, rng)
        var_d = np.maximum(alloc.residual_variances, VAR_FLOOR)
        out.append(LatentFrame(mean=z_d, var=var_d, bar_index=frame.bar_index,
                               sample=z_d))
    return out
