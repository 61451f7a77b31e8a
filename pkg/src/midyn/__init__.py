"""Music information dynamics: rate-limited latent analysis of MIDI pieces.

The pipeline: MIDI bars -> variational encoder -> optimal Gaussian channel
at a chosen bit budget -> oracle symbolization + compression for the
information-rate profile, plus a neural MI estimate of how predictive the
degraded stream stays, combined into per-bar surprisal.
"""

from .dynamics import (AnalysisConfig, AnalysisReport, RateAnalysis, analyze,
                       residual_information, surprisal_profile)
from .errors import (InputDataError, MidiParseError, NumericalError,
                     UnsupportedMidiError)
from .midi_ingest import (BarVector, NoteEvent, NoteStateMatrix,
                          bars_from_midi_bytes, parse_midi, segment_bars,
                          to_state_matrix)
from .mine import MIEstimate, MineConfig, estimate_mi, predictive_quality
from .rate_channel import (BitAllocation, ChannelSpec, channel_transmit,
                           distortion_at_rate, gaussian_rate,
                           reverse_water_fill, transmit_sequence)
from .vae import (LatentFrame, VaeParams, VaeTrainConfig, decode, elbo_loss,
                  encode, latent_variance_profile, load_params, reparameterize,
                  save_params, train)
from .vmo import (BACKEND, ComprorCode, FactorOracle, IRProfile, SweepResult,
                  build_vmo, compror_encode, default_threshold_candidates,
                  frames_from_symbols, ir_profile, threshold_sweep)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "AnalysisReport", "RateAnalysis", "analyze",
    "residual_information", "surprisal_profile",
    "InputDataError", "MidiParseError", "NumericalError", "UnsupportedMidiError",
    "BarVector", "NoteEvent", "NoteStateMatrix", "bars_from_midi_bytes",
    "parse_midi", "segment_bars", "to_state_matrix",
    "MIEstimate", "MineConfig", "estimate_mi", "predictive_quality",
    "BitAllocation", "ChannelSpec", "channel_transmit", "distortion_at_rate",
    "gaussian_rate", "reverse_water_fill", "transmit_sequence",
    "LatentFrame", "VaeParams", "VaeTrainConfig", "decode", "elbo_loss",
    "encode", "latent_variance_profile", "load_params", "reparameterize",
    "save_params", "train",
    "BACKEND", "ComprorCode", "FactorOracle", "IRProfile", "SweepResult",
    "build_vmo", "compror_encode", "default_threshold_candidates",
    "frames_from_symbols", "ir_profile", "threshold_sweep",
    "__version__",
]
