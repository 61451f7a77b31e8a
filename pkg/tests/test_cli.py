import json

import numpy as np
import pytest

import smfbuild
from midyn import cli
from midyn.cli import main


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def analyze_config(tmp_path, corpus, quick_params):
    """Config file wiring a fast analyze run over the held-out piece."""
    path = tmp_path / "analyze.ini"
    path.write_text(
        "[run]\n"
        "seed = 3\n"
        "threads = 2\n"
        f"[paths]\n"
        f"midi = {corpus['heldout']}\n"
        f"params = {quick_params['path']}\n"
        "[analyze]\n"
        "rates = 4,9\n"
        "n_thresholds = 6\n"
        "[mine]\n"
        "epochs = 6\n"
        "batch_size = 64\n"
    )
    return path


class TestParser:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["--help"])
        assert exc.value.code == 0
        assert "train-vae" in capsys.readouterr().out

    def test_subcommand_help_exits_zero(self):
        for command in ["train-vae", "analyze", "oracle", "mine"]:
            with pytest.raises(SystemExit) as exc:
                run([command, "--help"])
            assert exc.value.code == 0

    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run([])
        assert exc.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run(["oracle", "--symbols", "ab", "--bogus"])
        assert exc.value.code == 2

    def test_seed_is_mandatory_where_randomness_exists(self, corpus, tmp_path,
                                                       capsys):
        with pytest.raises(SystemExit) as exc:
            run(["train-vae", "--midi-dir", corpus["train"],
                 "--out-dir", tmp_path, "--epochs", "1"])
        assert exc.value.code == 2
        assert "--seed is required" in capsys.readouterr().err

    def test_oracle_needs_no_seed(self, capsys):
        # fully deterministic command, nothing random to seed
        assert run(["oracle", "--symbols", "abab"]) == 0

    def test_seed_can_come_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[run]\nseed = 7\n")
        rng = np.random.default_rng(3)
        x_path = tmp_path / "x.csv"
        np.savetxt(x_path, rng.normal(size=(40, 1)), delimiter=",")
        assert run(["mine", "--x", x_path, "--y", x_path, "--config", cfg,
                    "--epochs", "2", "--out-dir", tmp_path]) == 0

    def test_missing_config_file(self, tmp_path, capsys):
        assert run(["oracle", "--symbols", "ab", "--seed", "1",
                    "--config", tmp_path / "absent.ini"]) == cli.EXIT_INPUT
        assert "config file not found" in capsys.readouterr().err


class TestTrainVae:
    def train_args(self, corpus, out, extra=()):
        return ["train-vae", "--midi-dir", corpus["train"], "--seed", "4",
                "--out-dir", out, "--epochs", "1", "--batch-size", "64",
                "--latent-dim", "8", *extra]

    def test_writes_params_and_curve(self, corpus, tmp_path, capsys):
        out = tmp_path / "run"
        assert run(self.train_args(corpus, out)) == 0
        assert (out / "vae_params.bin").is_file()
        curve = (out / "loss_curve.csv").read_text().strip().split("\n")
        assert curve[0] == "epoch,loss"
        assert len(curve) == 2  # one epoch
        assert "final loss" in capsys.readouterr().out

    def test_same_seed_same_bytes(self, corpus, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run(self.train_args(corpus, out_a))
        run(self.train_args(corpus, out_b))
        assert (out_a / "vae_params.bin").read_bytes() == (
            out_b / "vae_params.bin").read_bytes()

    def test_flag_overrides_config_seed(self, corpus, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[run]\nseed = 4\n")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run(self.train_args(corpus, out_a))
        run(self.train_args(corpus, out_b, extra=["--config", cfg,
                                                  "--seed", "99"]))
        assert (out_a / "vae_params.bin").read_bytes() != (
            out_b / "vae_params.bin").read_bytes()

    def test_params_out_flag(self, corpus, tmp_path):
        dest = tmp_path / "weights.bin"
        assert run(self.train_args(corpus, tmp_path,
                                   extra=["--params-out", dest])) == 0
        assert dest.is_file()

    def test_missing_dir_flag(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["train-vae", "--seed", "1", "--out-dir", tmp_path])
        assert exc.value.code == 2

    def test_unreadable_directory(self, tmp_path, capsys):
        missing = tmp_path / "nope"
        assert run(["train-vae", "--midi-dir", missing, "--seed", "1",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        assert str(missing) in capsys.readouterr().err

    def test_directory_without_usable_midi(self, tmp_path, capsys):
        d = tmp_path / "bad"
        d.mkdir()
        (d / "junk.mid").write_bytes(b"not midi at all")
        assert run(["train-vae", "--midi-dir", d, "--seed", "1",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        err = capsys.readouterr().err
        assert "skipped junk.mid" in err
        assert "no usable MIDI" in err

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    def test_numeric_failure_exit_code(self, corpus, tmp_path, capsys):
        assert run(self.train_args(corpus, tmp_path,
                                   extra=["--learning-rate", "1e160",
                                          "--epochs", "2"])) == cli.EXIT_NUMERIC
        assert "numeric failure" in capsys.readouterr().err


class TestAnalyze:
    def test_full_run_outputs(self, analyze_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert run(["analyze", "--config", analyze_config,
                    "--out-dir", out]) == 0
        report = json.loads((out / "report.json").read_text())
        assert [r["rate"] for r in report["rates"]] == [4, 9]
        assert report["piece"]["n_bars"] >= 34
        for r in (4, 9):
            assert (out / f"rate_{r}.csv").is_file()
            for kind in ("ir", "alloc", "mine"):
                svg = (out / f"{kind}_rate_{r}.svg").read_text()
                assert svg.startswith("<svg")
        stdout = capsys.readouterr().out
        assert "rate 4:" in stdout and "rate 9:" in stdout

    def test_report_validates_against_schema(self, analyze_config, tmp_path):
        import importlib.resources

        import jsonschema

        out = tmp_path / "out"
        run(["analyze", "--config", analyze_config, "--out-dir", out])
        schema = json.loads(
            importlib.resources.files("midyn").joinpath("report_schema.json")
            .read_text())
        jsonschema.validate(json.loads((out / "report.json").read_text()),
                            schema)

    def test_no_plot_skips_svg(self, analyze_config, tmp_path):
        out = tmp_path / "out"
        run(["analyze", "--config", analyze_config, "--out-dir", out,
             "--no-plot"])
        assert (out / "report.json").is_file()
        assert not list(out.glob("*.svg"))

    def test_byte_identical_reports(self, analyze_config, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run(["analyze", "--config", analyze_config, "--out-dir", out_a])
        run(["analyze", "--config", analyze_config, "--out-dir", out_b])
        assert (out_a / "report.json").read_bytes() == (
            out_b / "report.json").read_bytes()

    def test_rates_flag_overrides_config(self, analyze_config, tmp_path):
        out = tmp_path / "out"
        run(["analyze", "--config", analyze_config, "--out-dir", out,
             "--rates", "6"])
        report = json.loads((out / "report.json").read_text())
        assert [r["rate"] for r in report["rates"]] == [6]

    def test_missing_params_file(self, corpus, tmp_path, capsys):
        assert run(["analyze", "--midi", corpus["heldout"],
                    "--params", tmp_path / "none.bin", "--seed", "1",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        assert "params file not found" in capsys.readouterr().err

    def test_latent_dim_mismatch(self, analyze_config, tmp_path, capsys):
        cfg = tmp_path / "extra.ini"
        cfg.write_text(analyze_config.read_text() + "[vae]\nlatent_dim = 99\n")
        assert run(["analyze", "--config", cfg,
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        err = capsys.readouterr().err
        assert "latent_dim 32" in err and "declares 99" in err

    def test_short_piece_names_pair_minimum(self, quick_params, tmp_path,
                                            capsys):
        notes = [(i * smfbuild.BAR_TICKS, 480, 60, 80) for i in range(10)]
        short = tmp_path / "short.mid"
        short.write_bytes(smfbuild.notes_to_smf(notes))
        assert run(["analyze", "--midi", short,
                    "--params", quick_params["path"], "--seed", "1",
                    "--rates", "4", "--out-dir", tmp_path,
                    "--no-plot"]) == cli.EXIT_INPUT
        assert "at least 32 pairs" in capsys.readouterr().err

    def test_bad_rates_list(self, analyze_config, tmp_path, capsys):
        assert run(["analyze", "--config", analyze_config,
                    "--out-dir", tmp_path, "--rates", "4,x"]) == cli.EXIT_INPUT
        assert "bad rates" in capsys.readouterr().err

    def test_unparsable_midi(self, quick_params, tmp_path, capsys):
        bad = tmp_path / "bad.mid"
        bad.write_bytes(b"garbage bytes")
        assert run(["analyze", "--midi", bad, "--params",
                    quick_params["path"], "--seed", "1",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT


class TestOracle:
    def test_symbols_abab(self, capsys):
        assert run(["oracle", "--symbols", "abab", "--seed", "0"]) == 0
        out = capsys.readouterr().out
        assert "alphabet_size=2" in out
        assert "states=5" in out
        assert "position,ir_bits" in out
        assert len(out.strip().split("\n")) == 5 + 4  # header rows + 4 positions

    def test_symbols_aaaa_degenerate(self, capsys):
        assert run(["oracle", "--symbols", "aaaa", "--seed", "0"]) == 0
        out = capsys.readouterr().out
        assert "alphabet_size=1" in out
        assert "total_ir=0.0" in out

    def test_requires_exactly_one_input(self, corpus, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["oracle", "--seed", "0"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run(["oracle", "--symbols", "ab", "--midi", corpus["heldout"],
                 "--seed", "0"])
        assert exc.value.code == 2

    def test_midi_input_raw_bars(self, corpus, capsys):
        assert run(["oracle", "--midi", corpus["heldout"], "--seed", "0",
                    "--theta", "0"]) == 0
        out = capsys.readouterr().out
        n_bars = corpus["bar_counts"]["heldout.mid"]
        assert f"states={n_bars + 1}" in out

    def test_midi_input_with_params(self, corpus, quick_params, capsys):
        assert run(["oracle", "--midi", corpus["heldout"], "--params",
                    quick_params["path"], "--seed", "0",
                    "--theta", "1.5"]) == 0
        assert "alphabet_size=" in capsys.readouterr().out


class TestMine:
    def write_csv(self, path, array):
        np.savetxt(path, array, delimiter=",")

    def test_independent_columns_near_zero(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        x_path, y_path = tmp_path / "x.csv", tmp_path / "y.csv"
        self.write_csv(x_path, rng.normal(size=(2000, 1)))
        self.write_csv(y_path, rng.normal(size=(2000, 1)))
        assert run(["mine", "--x", x_path, "--y", y_path, "--seed", "1",
                    "--epochs", "40", "--batch-size", "256",
                    "--out-dir", tmp_path]) == 0
        est = json.loads(capsys.readouterr().out)
        assert abs(est["raw_bits"]) < 0.15
        curve = (tmp_path / "mine_curve.csv").read_text().strip().split("\n")
        assert curve[0] == "epoch,bits"
        assert len(curve) == 41

    def test_identical_files_saturate(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(64, 1))
        x_path = tmp_path / "x.csv"
        self.write_csv(x_path, data)
        assert run(["mine", "--x", x_path, "--y", x_path, "--seed", "1",
                    "--epochs", "150", "--learning-rate", "5e-3",
                    "--out-dir", tmp_path]) == 0
        est = json.loads(capsys.readouterr().out)
        assert est["bits"] > 2.0
        assert "reliable" in est

    def test_json_sample_files(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 2))
        x_path = tmp_path / "x.json"
        y_path = tmp_path / "y.json"
        x_path.write_text(json.dumps(x.tolist()))
        y_path.write_text(json.dumps(x.tolist()))
        assert run(["mine", "--x", x_path, "--y", y_path, "--seed", "0",
                    "--epochs", "3", "--out-dir", tmp_path]) == 0
        assert json.loads(capsys.readouterr().out)["n_samples"] == 40

    def test_row_mismatch(self, tmp_path, capsys):
        x_path, y_path = tmp_path / "x.csv", tmp_path / "y.csv"
        self.write_csv(x_path, np.zeros((40, 1)))
        self.write_csv(y_path, np.zeros((41, 1)))
        assert run(["mine", "--x", x_path, "--y", y_path, "--seed", "0",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        assert "row counts differ" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        x_path = tmp_path / "x.csv"
        self.write_csv(x_path, np.zeros((40, 1)))
        assert run(["mine", "--x", x_path, "--y", tmp_path / "none.csv",
                    "--seed", "0", "--out-dir", tmp_path]) == cli.EXIT_INPUT

    def test_unreadable_samples(self, tmp_path, capsys):
        x_path = tmp_path / "x.csv"
        x_path.write_text("not,numbers\nat,all\n")
        assert run(["mine", "--x", x_path, "--y", x_path, "--seed", "0",
                    "--out-dir", tmp_path]) == cli.EXIT_INPUT
        assert "cannot read samples" in capsys.readouterr().err

    def test_requires_both_files(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["mine", "--x", tmp_path / "x.csv", "--seed", "0"])
        assert exc.value.code == 2
