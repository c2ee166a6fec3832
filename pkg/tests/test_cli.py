import subprocess
import sys

import numpy as np
import pytest

from onmfdenoise.audio_io import AudioBuffer, write_wav

SR = 16000
SMALL_STFT = ["--window-len", "256", "--hop", "128", "--fft-len", "256"]
SMALL_TRAIN = [
    "--k-signal", "3", "--k-noise", "2",
    "--max-iters", "40", "--seed", "0",
    "--steps", "10", "--batch-cols", "20",
] + SMALL_STFT


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "onmfdenoise.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def wavs(tmp_path_factory):
    """Tiny clean/noise/mixture WAV trio plus prior recordings."""
    root = tmp_path_factory.mktemp("wavs")
    rng = np.random.default_rng(0)
    t = np.arange(SR) / SR
    clean = 0.3 * (
        np.sin(2 * np.pi * 440 * t)
        + np.sin(2 * np.pi * 550 * t)
        + np.sin(2 * np.pi * 660 * t)
    ) / 3
    noise = 0.05 * rng.standard_normal(SR)
    paths = {}
    for name, samples in (
        ("clean", clean),
        ("noise", noise),
        ("mixture", clean + noise),
        ("clean_prior", np.tile(clean, 2)),
        ("noise_prior", 0.05 * rng.standard_normal(2 * SR)),
    ):
        path = root / f"{name}.wav"
        write_wav(AudioBuffer(samples, SR), path)
        paths[name] = path
    return paths


@pytest.fixture(scope="module")
def trained(wavs, tmp_path_factory):
    out = tmp_path_factory.mktemp("dicts")
    res = run_cli(
        "train",
        "--signal", wavs["clean_prior"],
        "--noise", wavs["noise_prior"],
        "--out-dir", out,
        *SMALL_TRAIN,
    )
    assert res.returncode == 0, res.stderr
    return {"signal": out / "w_signal.dict", "noise": out / "w_noise.dict"}


class TestTrain:
    def test_writes_both_dictionaries(self, trained):
        assert trained["signal"].exists() and trained["noise"].exists()

    def test_reports_atoms_and_loss(self, wavs, tmp_path):
        res = run_cli(
            "train",
            "--signal", wavs["clean_prior"],
            "--noise", wavs["noise_prior"],
            "--out-dir", tmp_path,
            *SMALL_TRAIN,
        )
        assert res.returncode == 0
        assert "signal: 3 atoms" in res.stdout
        assert "noise: 2 atoms" in res.stdout
        assert "final loss" in res.stdout

    def test_online_method(self, wavs, tmp_path):
        res = run_cli(
            "train",
            "--method", "onmf",
            "--signal", wavs["clean_prior"],
            "--noise", wavs["noise_prior"],
            "--out-dir", tmp_path,
            "--train-log", tmp_path / "log",
            *SMALL_TRAIN,
        )
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "w_signal.dict").exists()
        assert (tmp_path / "log.signal.jsonl").exists()
        assert (tmp_path / "log.noise.jsonl").exists()

    def test_deterministic_artifacts(self, wavs, tmp_path):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            res = run_cli(
                "train",
                "--signal", wavs["clean_prior"],
                "--noise", wavs["noise_prior"],
                "--out-dir", out,
                *SMALL_TRAIN,
            )
            assert res.returncode == 0
            outs.append(out)
        for name in ("w_signal.dict", "w_noise.dict"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_missing_input_exits_2(self, wavs, tmp_path):
        res = run_cli(
            "train",
            "--signal", tmp_path / "nope.wav",
            "--noise", wavs["noise_prior"],
            "--out-dir", tmp_path,
            *SMALL_TRAIN,
        )
        assert res.returncode == 2
        assert "error" in res.stderr.lower()

    def test_unknown_flag_exits_2(self, wavs):
        res = run_cli("train", "--signal", wavs["clean"], "--bogus", "1")
        assert res.returncode == 2


class TestDenoise:
    def test_output_duration_and_determinism(self, wavs, trained, tmp_path):
        from onmfdenoise.audio_io import read_wav

        outs = []
        for run in ("a.wav", "b.wav"):
            out = tmp_path / run
            res = run_cli(
                "denoise",
                "--dict-signal", trained["signal"],
                "--dict-noise", trained["noise"],
                "--input", wavs["mixture"],
                "--output", out,
                *SMALL_STFT,
            )
            assert res.returncode == 0, res.stderr
            outs.append(out)
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert len(read_wav(outs[0])) == SR

    def test_explicit_default_alpha_matches(self, wavs, trained, tmp_path):
        implicit = tmp_path / "implicit.wav"
        explicit = tmp_path / "explicit.wav"
        common = [
            "--dict-signal", trained["signal"],
            "--dict-noise", trained["noise"],
            "--input", wavs["mixture"],
        ] + SMALL_STFT
        assert run_cli("denoise", *common, "--output", implicit).returncode == 0
        assert (
            run_cli(
                "denoise", *common, "--output", explicit, "--alpha", "100"
            ).returncode
            == 0
        )
        assert implicit.read_bytes() == explicit.read_bytes()

    def test_emits_spectrogram_images(self, wavs, trained, tmp_path):
        out = tmp_path / "den.wav"
        res = run_cli(
            "denoise",
            "--dict-signal", trained["signal"],
            "--dict-noise", trained["noise"],
            "--input", wavs["mixture"],
            "--output", out,
            "--clean", wavs["clean"],
            "--emit-spectrograms",
            "--emit-noise", tmp_path / "noise_part.wav",
            *SMALL_STFT,
        )
        assert res.returncode == 0, res.stderr
        for suffix in ("noisy", "denoised", "noise", "clean"):
            pgm = tmp_path / f"den.{suffix}.pgm"
            assert pgm.exists()
            assert pgm.read_bytes().startswith(b"P5\n")
        assert (tmp_path / "noise_part.wav").exists()


class TestEval:
    def test_row_order_and_format(self, wavs, tmp_path):
        out = tmp_path / "m.csv"
        res = run_cli(
            "eval",
            "--clean", wavs["clean"],
            "--noise", wavs["noise"],
            "--nmf", wavs["mixture"],
            "--onmf", wavs["mixture"],
            "--noisy", wavs["mixture"],
            "--out", out,
        )
        assert res.returncode == 0, res.stderr
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "method,SDR,SIR,SAR"
        assert [line.split(",")[0] for line in lines[1:]] == ["NMF", "ONMF", "ORIGINAL"]
        for line in lines[1:]:
            for cell in line.split(",")[1:]:
                float(cell)  # four-decimal finite numbers
                assert len(cell.split(".")[1]) == 4

    def test_perfect_estimate_hits_sentinel_cap(self, wavs, tmp_path):
        out = tmp_path / "m.csv"
        res = run_cli(
            "eval",
            "--clean", wavs["clean"],
            "--noise", wavs["noise"],
            "--nmf", wavs["clean"],
            "--out", out,
        )
        assert res.returncode == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        # int16 quantization keeps SDR finite but the projections are exact
        assert row[2] == "300.0000"

    def test_deterministic_csv(self, wavs, tmp_path):
        outs = []
        for run in ("a.csv", "b.csv"):
            out = tmp_path / run
            res = run_cli(
                "eval",
                "--clean", wavs["clean"],
                "--noise", wavs["noise"],
                "--noisy", wavs["mixture"],
                "--out", out,
            )
            assert res.returncode == 0
            outs.append(out)
        assert outs[0].read_bytes() == outs[1].read_bytes()


class TestSweep:
    def test_default_grid(self, wavs, trained, tmp_path):
        out = tmp_path / "sweep.csv"
        res = run_cli(
            "sweep",
            "--dict-signal", trained["signal"],
            "--dict-noise", trained["noise"],
            "--input", wavs["mixture"],
            "--clean", wavs["clean"],
            "--noise", wavs["noise"],
            "--out", out,
            *SMALL_STFT,
        )
        assert res.returncode == 0, res.stderr
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "alpha,SDR,SIR,SAR"
        assert [line.split(",")[0] for line in lines[1:]] == ["50", "60", "70", "80", "90"]

    def test_single_alpha_matches_denoise_plus_eval(self, wavs, trained, tmp_path):
        out = tmp_path / "one.csv"
        res = run_cli(
            "sweep",
            "--dict-signal", trained["signal"],
            "--dict-noise", trained["noise"],
            "--input", wavs["mixture"],
            "--clean", wavs["clean"],
            "--noise", wavs["noise"],
            "--alphas", "100",
            "--out", out,
            *SMALL_STFT,
        )
        assert res.returncode == 0, res.stderr
        den = tmp_path / "den.wav"
        assert (
            run_cli(
                "denoise",
                "--dict-signal", trained["signal"],
                "--dict-noise", trained["noise"],
                "--input", wavs["mixture"],
                "--output", den,
                *SMALL_STFT,
            ).returncode
            == 0
        )
        ev = tmp_path / "ev.csv"
        assert (
            run_cli(
                "eval",
                "--clean", wavs["clean"],
                "--noise", wavs["noise"],
                "--nmf", den,
                "--out", ev,
            ).returncode
            == 0
        )
        sweep_sdr = float(out.read_text().strip().splitlines()[1].split(",")[1])
        eval_sdr = float(ev.read_text().strip().splitlines()[1].split(",")[1])
        # eval re-reads the written (int16-quantized) WAV, so allow a hair
        assert sweep_sdr == pytest.approx(eval_sdr, abs=0.05)


class TestSpectrogram:
    def test_pgm_and_csv_outputs(self, wavs, tmp_path):
        pgm = tmp_path / "s.pgm"
        csv_path = tmp_path / "s.csv"
        res = run_cli(
            "spectrogram",
            "--input", wavs["mixture"],
            "--out", pgm,
            "--csv", csv_path,
            *SMALL_STFT,
        )
        assert res.returncode == 0, res.stderr
        assert pgm.read_bytes().startswith(b"P5\n")
        mags = np.loadtxt(csv_path, delimiter=",")
        assert mags.shape[0] == 129
        assert "129x" in res.stdout


class TestConfigFile:
    def test_file_supplies_values_and_flags_win(self, wavs, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "k-signal = 3\nk-noise = 2\nmax-iters = 40\n"
            "window-len = 256\nhop = 128\nfft-len = 256\n"
            "steps = 10\nbatch-cols = 20\nseed = 5\n"
        )
        out_a = tmp_path / "a"
        res = run_cli(
            "train",
            "--signal", wavs["clean_prior"],
            "--noise", wavs["noise_prior"],
            "--out-dir", out_a,
            "--config", cfg,
        )
        assert res.returncode == 0, res.stderr
        # explicit --seed overrides the file value
        out_b = tmp_path / "b"
        assert (
            run_cli(
                "train",
                "--signal", wavs["clean_prior"],
                "--noise", wavs["noise_prior"],
                "--out-dir", out_b,
                "--config", cfg,
                "--seed", "0",
            ).returncode
            == 0
        )
        out_c = tmp_path / "c"
        assert (
            run_cli(
                "train",
                "--signal", wavs["clean_prior"],
                "--noise", wavs["noise_prior"],
                "--out-dir", out_c,
                *SMALL_TRAIN,
            ).returncode
            == 0
        )
        a = (out_a / "w_signal.dict").read_bytes()
        b = (out_b / "w_signal.dict").read_bytes()
        c = (out_c / "w_signal.dict").read_bytes()
        assert b == c  # flag seed 0 matches pure-flag run
        assert a != b  # file seed 5 differs

    def test_malformed_config_exits_2(self, wavs, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not a key value pair\n")
        res = run_cli(
            "train",
            "--signal", wavs["clean_prior"],
            "--noise", wavs["noise_prior"],
            "--out-dir", tmp_path,
            "--config", cfg,
        )
        assert res.returncode == 2
