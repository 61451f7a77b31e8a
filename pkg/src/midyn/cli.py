"""Command-line front end.

Four subcommands: ``train-vae`` fits encoder weights over a directory of
MIDI files, ``analyze`` runs the multi-rate pipeline on one piece,
``oracle`` is a debugging surface for the symbolization/compression layer,
and ``mine`` runs the MI estimator on two sample files.

Every command takes --config (INI-style key = value file), --seed,
--threads and --out-dir; command-line flags override config values.
Seeding is mandatory so that no run ever depends on the clock.

Exit codes: 0 success, 2 usage, 3 bad input data, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics, midi_ingest, svgplot, vmo
from .errors import InputDataError, MidiParseError, NumericalError
from .mine import MineConfig, estimate_mi
from .vae import VaeTrainConfig, encode, load_params, save_params, train

log = logging.getLogger("midyn")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="midyn",
        description="Information dynamics analysis of MIDI pieces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="INI config file")
        sp.add_argument("--seed", type=int, help="master seed (required here or in config)")
        sp.add_argument("--threads", type=int, help="worker threads")
        sp.add_argument("--out-dir", type=Path, help="output directory (default .)")
        sp.add_argument("--log-level", help="logging level name")

    p = sub.add_parser("train-vae", help="train encoder weights on a MIDI directory")
    common(p)
    p.add_argument("--midi-dir", type=Path, help="directory of .mid/.midi files")
    p.add_argument("--params-out", type=Path, help="weights file to write")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--kl-weight", type=float)
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.set_defaults(func=cmd_train_vae)

    p = sub.add_parser("analyze", help="multi-rate analysis of one piece")
    common(p)
    p.add_argument("--midi", type=Path, help="piece to analyze")
    p.add_argument("--params", type=Path, help="trained weights file")
    p.add_argument("--rates", help="comma-separated bit pools, e.g. 10,50,10000")
    p.add_argument("--lag", type=int)
    p.add_argument("--no-plot", action="store_true", help="skip SVG emission")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="oracle statistics for symbols or a piece")
    common(p)
    p.add_argument("--symbols", help="plain symbol string, e.g. abab")
    p.add_argument("--midi", type=Path, help="MIDI file instead of symbols")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--params", type=Path,
                   help="optional weights; analyze latent means instead of raw bars")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mine", help="MI estimate between two sample files")
    common(p)
    p.add_argument("--x", type=Path, help="first sample file (CSV or JSON)")
    p.add_argument("--y", type=Path, help="second sample file (CSV or JSON)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.set_defaults(func=cmd_mine)
    return parser


class Settings:
    """Merged view of flags over an optional INI config file."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg = configparser.ConfigParser()
        if args.config is not None:
            if not args.config.is_file():
                raise InputDataError(f"config file not found: {args.config}")
            self.cfg.read(args.config)

    def get(self, section: str, key: str, cast=str, flag=None, default=None):
        if flag is not None:
            return flag
        if self.cfg.has_option(section, key):
            raw = self.cfg.get(section, key)
            if cast is bool:
                return self.cfg.getboolean(section, key)
            return cast(raw)
        return default

    @property
    def seed(self) -> int:
        seed = self.get("run", "seed", int, self.args.seed)
        if seed is None:
            raise UsageError("--seed is required (flag or [run] seed in config)")
        return seed

    @property
    def threads(self) -> int:
        return self.get("run", "threads", int, self.args.threads,
                        os.cpu_count() or 1)

    @property
    def out_dir(self) -> Path:
        out = self.get("run", "out_dir", Path, self.args.out_dir, Path("."))
        out.mkdir(parents=True, exist_ok=True)
        return out


class UsageError(Exception):
    pass


def _setup_logging(settings: Settings):
    name = settings.get("run", "log_level", str, settings.args.log_level, "WARNING")
    logging.basicConfig(level=getattr(logging, name.upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _read_bars(path: Path) -> list:
    if not path.is_file():
        raise InputDataError(f"MIDI file not found: {path}")
    return midi_ingest.bars_from_midi_bytes(path.read_bytes())


def cmd_train_vae(args) -> int:
    settings = Settings(args)
    _setup_logging(settings)
    midi_dir = settings.get("paths", "midi_dir", Path, args.midi_dir)
    if midi_dir is None:
        raise UsageError("train-vae needs --midi-dir (or [paths] midi_dir)")
    if not midi_dir.is_dir():
        raise InputDataError(f"not a readable directory: {midi_dir}")

    files = sorted(p for p in midi_dir.iterdir()
                   if p.suffix.lower() in (".mid", ".midi"))
    bars = []
    failures = []
    for path in files:
        try:
            bars.extend(_read_bars(path))
        except (MidiParseError, InputDataError) as exc:
            failures.append(f"{path.name}: {exc}")
    for line in failures:
        print(f"skipped {line}", file=sys.stderr)
    if not bars:
        detail = "; ".join(failures) if failures else "no .mid/.midi files found"
        raise InputDataError(f"no usable MIDI in {midi_dir}: {detail}")

    config = VaeTrainConfig(
        epochs=settings.get("vae", "epochs", int, args.epochs, 100),
        batch_size=settings.get("vae", "batch_size", int, args.batch_size, 32),
        learning_rate=settings.get("vae", "learning_rate", float,
                                   args.learning_rate, 1e-3),
        kl_weight=settings.get("vae", "kl_weight", float, args.kl_weight, 1.0),
        latent_dim=settings.get("vae", "latent_dim", int, args.latent_dim, 500),
        hidden_dim=settings.get("vae", "hidden_dim", int, args.hidden_dim, 0),
        rng_seed=settings.seed,
    )
    params, curve = train(bars, config)

    out_dir = settings.out_dir
    params_path = settings.get("paths", "params", Path, args.params_out,
                               out_dir / "vae_params.bin")
    save_params(params, str(params_path))
    curve_path = out_dir / "loss_curve.csv"
    with open(curve_path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(curve):
            fh.write(f"{i},{loss!r}\n")
    final = curve[-1] if curve else float("nan")
    print(f"trained on {len(bars)} bars from {len(files) - len(failures)} files; "
          f"final loss {final:.4f}; params -> {params_path}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    settings = Settings(args)
    _setup_logging(settings)
    midi_path = settings.get("paths", "midi", Path, args.midi)
    params_path = settings.get("paths", "params", Path, args.params)
    if midi_path is None or params_path is None:
        raise UsageError("analyze needs --midi and --params (or [paths] entries)")
    if not params_path.is_file():
        raise InputDataError(f"params file not found: {params_path}")

    params = load_params(str(params_path))
    declared = settings.get("vae", "latent_dim", int)
    if declared is not None and declared != params.latent_dim:
        raise InputDataError(
            f"params file {params_path} has latent_dim {params.latent_dim} "
            f"but config declares {declared}"
        )

    bars = _read_bars(midi_path)
    rates_raw = settings.get("analyze", "rates", str, args.rates, "10,50,10000")
    try:
        rates = [int(tok) for tok in str(rates_raw).split(",") if tok.strip()]
    except ValueError as exc:
        raise InputDataError(f"bad rates list {rates_raw!r}: {exc}") from exc

    config = dynamics.AnalysisConfig(
        master_seed=settings.seed,
        lag=settings.get("analyze", "lag", int, args.lag, 1),
        n_thresholds=settings.get("analyze", "n_thresholds", int,
                                  default=vmo.DEFAULT_N_THRESHOLDS),
        max_distance_pairs=settings.get("analyze", "max_distance_pairs", int,
                                        default=vmo.DEFAULT_MAX_DISTANCE_PAIRS),
        unit_prior=settings.get("analyze", "unit_prior", bool, default=False),
        use_sample=settings.get("analyze", "use_sample", bool, default=False),
        threads=settings.threads,
        mine=MineConfig(
            epochs=settings.get("mine", "epochs", int, default=300),
            batch_size=settings.get("mine", "batch_size", int, default=128),
            learning_rate=settings.get("mine", "learning_rate", float,
                                       default=1e-3),
            dropout=settings.get("mine", "dropout", float, default=0.3),
            ema_correction=settings.get("mine", "ema_correction", bool,
                                        default=False),
        ),
    )
    report = dynamics.analyze(bars, params, rates, config,
                              source=str(midi_path))
    doc = report.to_json()
    jsonschema.validate(doc, _report_schema())

    out_dir = settings.out_dir
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    for analysis in report.rates:
        r = analysis.rate
        (out_dir / f"rate_{r}.csv").write_text(dynamics.rate_csv(analysis))
        if not args.no_plot:
            bar_idx = list(range(len(analysis.ir.per_bar)))
            (out_dir / f"ir_rate_{r}.svg").write_text(svgplot.line_chart(
                [(f"rate {r}", bar_idx, analysis.ir.per_bar)],
                f"information rate, pool {r} bits", "bar", "IR (bits)"))
            (out_dir / f"alloc_rate_{r}.svg").write_text(svgplot.bar_chart(
                analysis.allocation.bits,
                f"bit allocation, pool {r} bits", "component", "bits"))
            (out_dir / f"mine_rate_{r}.svg").write_text(svgplot.line_chart(
                [(f"rate {r}", list(range(len(analysis.mi.curve))),
                  analysis.mi.curve)],
                f"MI estimate, pool {r} bits", "epoch", "bits"))
        flag = "" if analysis.mi.reliable else " (unreliable)"
        print(f"rate {r}: theta*={analysis.theta_star:.4g} "
              f"total_ir={analysis.ir.total:.3f} mi={analysis.mi.bits:.3f}{flag}")
    print(f"report -> {report_path}")
    return EXIT_OK


def _report_schema() -> dict:
    text = resources.files("midyn").joinpath("report_schema.json").read_text()
    return json.loads(text)


def cmd_oracle(args) -> int:
    settings = Settings(args)
    _setup_logging(settings)
    if bool(args.symbols) == (args.midi is not None):
        raise UsageError("oracle needs exactly one of --symbols or --midi")
    if args.symbols:
        frames = vmo.frames_from_symbols(args.symbols)
    else:
        bars = _read_bars(args.midi)
        if args.params is not None:
            params = load_params(str(args.params))
            frames = np.stack(
                [encode(params, bar, bar_index=i).mean
                 for i, bar in enumerate(bars)]
            )
        else:
            frames = np.stack([np.asarray(b.values, dtype=np.float64)
                               for b in bars])
    oracle, profile = vmo.analyze_frames(frames, args.theta)
    print(f"alphabet_size={oracle.alphabet_size}")
    print(f"states={oracle.n_states}")
    print(f"theta={oracle.theta!r}")
    print(f"total_ir={profile.total!r}")
    print("position,ir_bits")
    for t, v in enumerate(profile.per_bar):
        print(f"{t},{float(v)!r}")
    return EXIT_OK


def _load_samples(path: Path) -> np.ndarray:
    if not path.is_file():
        raise InputDataError(f"sample file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            data = np.asarray(json.loads(path.read_text()), dtype=np.float64)
        else:
            data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise InputDataError(f"cannot read samples from {path}: {exc}") from exc
    return np.atleast_2d(data)


def cmd_mine(args) -> int:
    settings = Settings(args)
    _setup_logging(settings)
    if args.x is None or args.y is None:
        raise UsageError("mine needs --x and --y sample files")
    x = _load_samples(args.x)
    y = _load_samples(args.y)
    if x.shape[0] != y.shape[0]:
        raise InputDataError(
            f"row counts differ: {args.x} has {x.shape[0]}, "
            f"{args.y} has {y.shape[0]}"
        )
    config = MineConfig(
        epochs=settings.get("mine", "epochs", int, args.epochs, 300),
        batch_size=settings.get("mine", "batch_size", int, args.batch_size, 128),
        learning_rate=settings.get("mine", "learning_rate", float,
                                   args.learning_rate, 1e-3),
        dropout=settings.get("mine", "dropout", float, default=0.3),
        seed=settings.seed,
    )
    est = estimate_mi(x, y, config)
    print(json.dumps(est.to_json(), sort_keys=True))
    curve_path = settings.out_dir / "mine_curve.csv"
    with open(curve_path, "w") as fh:
        fh.write("epoch,bits\n")
        for i, v in enumerate(est.curve):
            fh.write(f"{i},{v!r}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2 with usage text
    except (MidiParseError, InputDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
