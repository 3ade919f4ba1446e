import json

import numpy as np
import pytest

from crowdclean.audio import AudioClip, load_wav, save_wav
from crowdclean.baselines import baseline_max_elim
from crowdclean.cli import build_parser, main
from crowdclean.signals import impulsive_noise, music_like, speech_like
from crowdclean.spectral import StftParams
from crowdclean.synth import MixSpec, synthesize_mixture


@pytest.fixture(scope="module")
def material(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_material")
    rng = np.random.default_rng(0)
    src = speech_like(3.0, 16000, rng)
    save_wav(d / "source.wav", src)
    save_wav(d / "noise1.wav", impulsive_noise(3.0, 16000, rng))
    save_wav(d / "noise2.wav", impulsive_noise(3.0, 16000, rng))
    chans, _ = synthesize_mixture(
        src, [impulsive_noise(3.0, 16000, rng, label=f"n{i}") for i in range(5)],
        MixSpec(0.0, 5, seed=1))
    for i, ch in enumerate(chans):
        save_wav(d / f"chan{i}.wav", ch)
    return d


def test_help_lists_defaults(capsys):
    for cmd in ("enhance", "align", "mix", "baseline", "eval", "sweep"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        if cmd in ("enhance", "baseline", "sweep"):
            for token in ("1.15", "0.01", "1.1", "2048", "512"):
                assert token in out, f"{cmd} help missing default {token}"


def test_mix_is_deterministic(material, tmp_path):
    args = ["mix", "--source", str(material / "source.wav"),
            "--noise", str(material / "noise1.wav"),
            "--noise", str(material / "noise2.wav"),
            "--snr-db", "0", "--k", "5", "--seed", "42"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(out1)]) == 0
    assert main(args + ["--out-dir", str(out2)]) == 0
    for name in sorted(p.name for p in out1.iterdir()):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["snr_db"] == 0 and len(manifest["channels"]) == 5


def test_mix_packet_loss_manifest(material, tmp_path):
    out = tmp_path / "loss"
    assert main(["mix", "--source", str(material / "source.wav"),
                 "--noise", str(material / "noise1.wav"),
                 "--snr-db", "0", "--k", "2", "--seed", "3",
                 "--packet-loss-sec", "1.0", "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for entry in manifest["channels"]:
        assert entry["loss_end_sec"] - entry["loss_start_sec"] == pytest.approx(1.0)
        clip = load_wav(out / entry["path"])
        start = int(entry["loss_start_sec"] * 16000)
        assert np.all(clip.samples[start:start + 16000] == 0)


def test_eval_same_file_hits_cap(material, capsys):
    ref = str(material / "source.wav")
    assert main(["eval", "--ref", ref, "--est", ref]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == {"metric": "si-snr", "value": 100.0}


def test_baseline_matches_library(material, tmp_path, capsys):
    inputs = [str(material / f"chan{i}.wav") for i in range(5)]
    out = tmp_path / "maxelim.wav"
    assert main(["baseline", "--method", "max-elim", "-o", str(out)] + inputs) == 0
    clips = [load_wav(p) for p in inputs]
    expected = baseline_max_elim(clips, StftParams())
    got = load_wav(out)
    assert np.array_equal(got.samples,
                          expected.samples.astype(np.float32).astype(np.float64))


def test_enhance_skip_align(material, tmp_path, capsys):
    inputs = [str(material / f"chan{i}.wav") for i in range(5)]
    out = tmp_path / "enhanced.wav"
    report = tmp_path / "report.json"
    code = main(["enhance", "--skip-align", "-o", str(out),
                 "--report", str(report)] + inputs)
    assert code == 0
    assert out.exists()
    doc = json.loads(report.read_text())
    assert len(doc["clips"]) == 5
    assert all(c["offset_seconds"] == 0.0 and c["gain"] == 1.0 for c in doc["clips"])
    enhanced = load_wav(out)
    source = load_wav(material / "source.wav")
    from crowdclean.metrics import si_snr
    assert si_snr(enhanced.samples, source.samples) > 5.0


def test_enhance_single_input_passthrough(material, tmp_path, capsys, caplog):
    out = tmp_path / "single.wav"
    code = main(["enhance", str(material / "source.wav"), "-o", str(out)])
    assert code == 0
    assert "single input" in caplog.text
    back = load_wav(out)
    src = load_wav(material / "source.wav")
    assert np.allclose(back.samples, src.samples, atol=1e-6)


def test_enhance_unrelated_inputs_fails(tmp_path, capsys):
    rng = np.random.default_rng(1)
    a, b = tmp_path / "a.wav", tmp_path / "b.wav"
    save_wav(a, AudioClip(0.3 * rng.standard_normal(5 * 16000), 16000, "a"))
    save_wav(b, AudioClip(0.3 * rng.standard_normal(5 * 16000), 16000, "b"))
    code = main(["enhance", str(a), str(b), "-o", str(tmp_path / "out.wav")])
    assert code != 0
    assert "no common content" in capsys.readouterr().err


def test_align_reports_offsets(tmp_path, capsys):
    rate = 16000
    rng = np.random.default_rng(2)
    src = music_like(14.0, rate, rng)
    a = AudioClip(src.samples[:10 * rate], rate, "a")
    b = AudioClip(src.samples[2 * rate:12 * rate], rate, "b")
    pa, pb = tmp_path / "a.wav", tmp_path / "b.wav"
    save_wav(pa, a)
    save_wav(pb, b)
    assert main(["align", str(pa), str(pb), "--json", str(tmp_path / "r.json")]) == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    offs = {c["label"]: c["offset_seconds"] for c in doc["clips"]}
    assert abs((offs["b"] - offs["a"]) - 2.0) <= 0.032 + 1e-9
    assert doc["anchor"] in ("a", "b")


def test_sweep_end_to_end(material, tmp_path):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(f"""
source = {material}/source.wav
noises = {material}/noise1.wav, {material}/noise2.wav
snr_db = 0, 10
methods = mean, median, max-elim, ours
trials = 2
k = 3
seed = 5
""")
    out = tmp_path / "results"
    assert main(["sweep", str(cfg), "--out-dir", str(out)]) == 0
    csv_lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert csv_lines[0] == "method,snr_db,k,trial,si_snr"
    assert len(csv_lines) == 1 + 2 * 4 * 2  # header + snr x methods x trials
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["points"]) == 8
    assert (out / "sweep.png").stat().st_size > 1000
    # rerun with a different worker count: identical CSV
    out2 = tmp_path / "results2"
    assert main(["sweep", str(cfg), "--out-dir", str(out2), "--workers", "3"]) == 0
    assert (out / "sweep.csv").read_text() == (out2 / "sweep.csv").read_text()


def test_missing_file_is_clean_error(tmp_path, capsys):
    code = main(["eval", "--ref", "/nope.wav", "--est", "/nope.wav"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_parser_smoke():
    parser = build_parser()
    args = parser.parse_args(["enhance", "x.wav", "-o", "y.wav"])
    assert args.lambda1 == 1.15 and args.hop == 512
