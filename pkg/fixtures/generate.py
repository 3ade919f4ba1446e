#!/usr/bin/env python3
"""Generate the WAV material referenced by sweep_demo.cfg.

Deterministic (fixed seeds), so the demo sweep is fully reproducible:

    python fixtures/generate.py
    crowdclean sweep fixtures/sweep_demo.cfg --out-dir sweep_out
"""

from pathlib import Path

import numpy as np

from crowdclean.audio import save_wav
from crowdclean.signals import babble_noise, impulsive_noise, speech_like

HERE = Path(__file__).parent


def main():
    rng = np.random.default_rng(2024)
    save_wav(HERE / "source_speech.wav", speech_like(8.0, 16000, rng))
    save_wav(HERE / "noise_impulsive_a.wav", impulsive_noise(8.0, 16000, rng))
    save_wav(HERE / "noise_impulsive_b.wav", impulsive_noise(8.0, 16000, rng))
    save_wav(HERE / "noise_babble_a.wav", babble_noise(8.0, 16000, rng))
    save_wav(HERE / "noise_babble_b.wav", babble_noise(8.0, 16000, rng))
    print(f"wrote 5 fixture WAVs to {HERE}")


if __name__ == "__main__":
    main()
