"""Bar-level variational auto-encoder over multi-hot note vectors.

The encoder maps a flat binary bar vector to a diagonal Gaussian
(mean head and log-variance head, both affine).  The decoder maps a
latent vector back to per-bit Bernoulli probabilities through a sigmoid.
Training minimizes cross-entropy reconstruction plus a weighted KL
divergence to the standard normal prior, with a hand-rolled Adam loop
so that runs are bit-reproducible given a seed.

An optional tanh layer can be inserted before the encoder heads
(``hidden_dim`` in the config); it is off by default since nothing
forces a particular nonlinearity here.

Gradients are derived by hand and checked against finite differences in
the test suite, so every forward detail (log-variance clamp included)
has a matching term in ``loss_and_grads``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputDataError, NumericalError

DEFAULT_INPUT_DIM = 2496
DEFAULT_LATENT_DIM = 500

LOGVAR_CLAMP = 18.0
VAR_FLOOR = 1e-8
VAR_CEIL = 1e8
PROB_EPS = 1e-12

PARAMS_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class VaeParams:
    """Weights of the encoder heads, the decoder, and the optional tanh layer.

    ``hidden_w``/``hidden_b`` are None when no pre-latent layer is used, in
    which case the heads read the input directly.
    """

    enc_w_mean: np.ndarray
    enc_b_mean: np.ndarray
    enc_w_logvar: np.ndarray
    enc_b_logvar: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray
    input_dim: int
    latent_dim: int
    hidden_dim: int = 0
    hidden_w: np.ndarray | None = None
    hidden_b: np.ndarray | None = None

    def arrays(self) -> dict[str, np.ndarray]:
        """Named parameter arrays, in a fixed order."""
        out = {}
        if self.hidden_dim:
            out["hidden_w"] = self.hidden_w
            out["hidden_b"] = self.hidden_b
        out.update(
            enc_w_mean=self.enc_w_mean,
            enc_b_mean=self.enc_b_mean,
            enc_w_logvar=self.enc_w_logvar,
            enc_b_logvar=self.enc_b_logvar,
            dec_w=self.dec_w,
            dec_b=self.dec_b,
        )
        return out

    def validate(self):
        enc_in = self.hidden_dim if self.hidden_dim else self.input_dim
        expect = {
            "enc_w_mean": (enc_in, self.latent_dim),
            "enc_b_mean": (self.latent_dim,),
            "enc_w_logvar": (enc_in, self.latent_dim),
            "enc_b_logvar": (self.latent_dim,),
            "dec_w": (self.latent_dim, self.input_dim),
            "dec_b": (self.input_dim,),
        }
        if self.hidden_dim:
            expect["hidden_w"] = (self.input_dim, self.hidden_dim)
            expect["hidden_b"] = (self.hidden_dim,)
        for name, shape in expect.items():
            arr = getattr(self, name)
            if arr is None or arr.shape != shape:
                got = None if arr is None else arr.shape
                raise InputDataError(f"{name}: expected shape {shape}, got {got}")
            if not np.all(np.isfinite(arr)):
                raise NumericalError(f"{name} contains non-finite values")


@dataclass
class LatentFrame:
    """Diagonal Gaussian posterior for one bar, sample optional."""

    mean: np.ndarray
    var: np.ndarray
    bar_index: int
    sample: np.ndarray | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.var)) or np.any(self.var <= 0):
            raise InputDataError(
                f"latent variance must be strictly positive and finite (bar {self.bar_index})"
            )


@dataclass
class VaeTrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    kl_weight: float = 1.0
    rng_seed: int = 0
    hidden_dim: int = 0  # 0 disables the pre-latent tanh layer
    latent_dim: int = DEFAULT_LATENT_DIM

    def __post_init__(self):
        if self.epochs < 0:
            raise InputDataError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise InputDataError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise InputDataError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.kl_weight < 0:
            raise InputDataError(f"kl_weight must be >= 0, got {self.kl_weight}")


def init_params(
    input_dim: int,
    latent_dim: int,
    rng: np.random.Generator,
    hidden_dim: int = 0,
) -> VaeParams:
    """Scaled-normal weight init, zero biases."""
    enc_in = hidden_dim if hidden_dim else input_dim

    def w(n_in, n_out):
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))

    hidden_w = w(input_dim, hidden_dim) if hidden_dim else None
    hidden_b = np.zeros(hidden_dim) if hidden_dim else None
    return VaeParams(
        enc_w_mean=w(enc_in, latent_dim),
        enc_b_mean=np.zeros(latent_dim),
        enc_w_logvar=w(enc_in, latent_dim),
        enc_b_logvar=np.zeros(latent_dim),
        dec_w=w(latent_dim, input_dim),
        dec_b=np.zeros(input_dim),
        input_dim=input_dim,
        latent_dim=latent_dim,
        hidden_dim=hidden_dim,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
    )


def _enc_input(params: VaeParams, x: np.ndarray) -> np.ndarray:
    if params.hidden_dim:
        return np.tanh(x @ params.hidden_w + params.hidden_b)
    return x


def encode(params: VaeParams, bar, bar_index: int | None = None) -> LatentFrame:
    """Posterior mean and variance for one bar; no sample drawn here."""
    x = np.asarray(getattr(bar, "values", bar), dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise InputDataError(
            f"bar vector: expected length {params.input_dim}, got {x.shape}"
        )
    h = _enc_input(params, x)
    mean = h @ params.enc_w_mean + params.enc_b_mean
    logvar = np.clip(h @ params.enc_w_logvar + params.enc_b_logvar,
                     -LOGVAR_CLAMP, LOGVAR_CLAMP)
    var = np.clip(np.exp(logvar), VAR_FLOOR, VAR_CEIL)
    if bar_index is None:
        bar_index = getattr(bar, "bar_index", 0)
    return LatentFrame(mean=mean, var=var, bar_index=bar_index)


def reparameterize(frame: LatentFrame, rng: np.random.Generator) -> LatentFrame:
    """Draw sample = mean + sqrt(var) * eps with eps standard normal."""
    eps = rng.standard_normal(frame.mean.shape)
    sample = frame.mean + np.sqrt(frame.var) * eps
    return LatentFrame(mean=frame.mean, var=frame.var,
                       bar_index=frame.bar_index, sample=sample)


def decode(params: VaeParams, z: np.ndarray) -> np.ndarray:
    """Per-bit Bernoulli probabilities, kept strictly inside (0, 1)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != params.latent_dim:
        raise InputDataError(
            f"latent vector: expected length {params.latent_dim}, got {z.shape[-1]}"
        )
    logits = z @ params.dec_w + params.dec_b
    return np.clip(_sigmoid(logits), PROB_EPS, 1.0 - PROB_EPS)


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def elbo_loss(x, x_hat, mean, var, kl_weight: float = 1.0):
    """Return (bce, kl, total) with total = bce + kl_weight * kl.

    bce = -sum(x log x_hat + (1-x) log(1-x_hat)), summed over every bit;
    kl is against the standard normal prior.
    """
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if np.any(x_hat <= 0.0) or np.any(x_hat >= 1.0):
        raise InputDataError("reconstruction probabilities must lie strictly in (0, 1)")
    bce = -float(np.sum(x * np.log(x_hat) + (1.0 - x) * np.log1p(-x_hat)))
    kl = 0.5 * float(np.sum(mean**2 + var - np.log(var) - 1.0))
    return bce, kl, bce + kl_weight * kl


def loss_and_grads(params: VaeParams, x: np.ndarray, eps: np.ndarray,
                   kl_weight: float):
    """Mean per-sample ELBO over a batch plus gradients for every array.

    ``eps`` fixes the reparameterization noise so the function is
    deterministic; the finite-difference gradient check relies on that.
    Returns (total, bce, kl, grads) where the three losses are batch means
    and grads maps the names from ``params.arrays()`` to arrays.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
    n = x.shape[0]

    if params.hidden_dim:
        pre = x @ params.hidden_w + params.hidden_b
        h = np.tanh(pre)
    else:
        h = x
    mean = h @ params.enc_w_mean + params.enc_b_mean
    logvar_raw = h @ params.enc_w_logvar + params.enc_b_logvar
    clip_mask = (np.abs(logvar_raw) < LOGVAR_CLAMP).astype(np.float64)
    logvar = np.clip(logvar_raw, -LOGVAR_CLAMP, LOGVAR_CLAMP)
    var = np.exp(logvar)  # clamp keeps this inside the [1e-8, 1e8] guard
    std = np.sqrt(var)
    z = mean + std * eps
    logits = z @ params.dec_w + params.dec_b
    probs = np.clip(_sigmoid(logits), PROB_EPS, 1.0 - PROB_EPS)

    bce = -np.sum(x * np.log(probs) + (1.0 - x) * np.log1p(-probs))
    kl = 0.5 * np.sum(mean**2 + var - logvar - 1.0)
    total = (bce + kl_weight * kl) / n

    # backward pass, all terms divided by n to match the batch mean
    g_logits = (probs - x) / n
    g_dec_w = z.T @ g_logits
    g_dec_b = g_logits.sum(axis=0)
    g_z = g_logits @ params.dec_w.T

    g_mean = g_z + kl_weight * mean / n
    g_var = g_z * eps / (2.0 * std) + kl_weight * 0.5 * (1.0 - 1.0 / var) / n
    g_logvar_raw = g_var * var * clip_mask

    grads = {
        "enc_w_mean": h.T @ g_mean,
        "enc_b_mean": g_mean.sum(axis=0),
        "enc_w_logvar": h.T @ g_logvar_raw,
        "enc_b_logvar": g_logvar_raw.sum(axis=0),
        "dec_w": g_dec_w,
        "dec_b": g_dec_b,
    }
    if params.hidden_dim:
        g_h = g_mean @ params.enc_w_mean.T + g_logvar_raw @ params.enc_w_logvar.T
        g_pre = g_h * (1.0 - h**2)
        grads["hidden_w"] = x.T @ g_pre
        grads["hidden_b"] = g_pre.sum(axis=0)
    return float(total), float(bce / n), float(kl / n), grads


class _Adam:
    def __init__(self, arrays: dict[str, np.ndarray], lr: float):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        for k, g in grads.items():
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g
            arrays[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + ADAM_EPS)


def train(dataset, config: VaeTrainConfig):
    """Fit the model; returns (params, per-epoch mean loss list)."""
    rows = [np.asarray(getattr(b, "values", b), dtype=np.float64) for b in dataset]
    if not rows:
        raise InputDataError("training dataset is empty")
    widths = {r.shape for r in rows}
    if len(widths) != 1 or rows[0].ndim != 1:
        raise InputDataError(f"bar vectors must share one length, got shapes {widths}")
    data = np.stack(rows)
    n, input_dim = data.shape

    rng = np.random.default_rng(config.rng_seed)
    params = init_params(input_dim, config.latent_dim, rng,
                         hidden_dim=config.hidden_dim)
    arrays = params.arrays()
    opt = _Adam(arrays, config.learning_rate)

    curve: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = data[order[start : start + config.batch_size]]
            eps = rng.standard_normal((batch.shape[0], config.latent_dim))
            total, _, _, grads = loss_and_grads(params, batch, eps, config.kl_weight)
            if not np.isfinite(total):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch} "
                    f"(learning_rate={config.learning_rate})"
                )
            epoch_loss += total * batch.shape[0]
            opt.step(arrays, grads)
        curve.append(epoch_loss / n)
    return params, curve


def latent_variance_profile(frames: list[LatentFrame]) -> np.ndarray:
    """Unbiased per-component variance of the frame means."""
    if len(frames) < 2:
        raise InputDataError(
            f"need at least 2 frames for a variance profile, got {len(frames)}"
        )
    means = np.stack([f.mean for f in frames])
    return means.var(axis=0, ddof=1)


def save_params(params: VaeParams, path: str):
    """Versioned binary dump: one JSON header line, then raw float64 rows."""
    params.validate()
    arrays = params.arrays()
    header = {
        "format_version": PARAMS_FORMAT_VERSION,
        "input_dim": params.input_dim,
        "latent_dim": params.latent_dim,
        "hidden_dim": params.hidden_dim,
        "order": list(arrays),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for name in header["order"]:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())


def load_params(path: str) -> VaeParams:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise InputDataError(f"bad params header: {exc}") from exc
        if header.get("format_version") != PARAMS_FORMAT_VERSION:
            raise InputDataError(
                f"unsupported params format_version {header.get('format_version')}"
            )
        input_dim = header["input_dim"]
        latent_dim = header["latent_dim"]
        hidden_dim = header.get("hidden_dim", 0)
        enc_in = hidden_dim if hidden_dim else input_dim
        shapes = {
            "hidden_w": (input_dim, hidden_dim),
            "hidden_b": (hidden_dim,),
            "enc_w_mean": (enc_in, latent_dim),
            "enc_b_mean": (latent_dim,),
            "enc_w_logvar": (enc_in, latent_dim),
            "enc_b_logvar": (latent_dim,),
            "dec_w": (latent_dim, input_dim),
            "dec_b": (input_dim,),
        }
        loaded: dict[str, np.ndarray] = {}
        for name in header["order"]:
            if name not in shapes:
                raise InputDataError(f"unknown params array {name!r}")
            shape = shapes[name]
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise InputDataError(f"params file truncated while reading {name}")
            loaded[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    params = VaeParams(
        enc_w_mean=loaded["enc_w_mean"],
        enc_b_mean=loaded["enc_b_mean"],
        enc_w_logvar=loaded["enc_w_logvar"],
        enc_b_logvar=loaded["enc_b_logvar"],
        dec_w=loaded["dec_w"],
        dec_b=loaded["dec_b"],
        input_dim=input_dim,
        latent_dim=latent_dim,
        hidden_dim=hidden_dim,
        hidden_w=loaded.get("hidden_w"),
        hidden_b=loaded.get("hidden_b"),
    )
    params.validate()
    return params
