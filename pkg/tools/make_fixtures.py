#!/usr/bin/env python3
"""Regenerate the committed WAV fixtures in tests/fixtures/.

Three half-second 22050 Hz mono signals with different spectral shapes:
a pure tone, a linear chirp, and amplitude-modulated filtered noise
(speech-ish).  Deterministic; run from the repository root.
"""

from pathlib import Path

import numpy as np

from bregman_pr.audio_io import TimeSignal, write_wav

SR = 22050
DUR = 0.5


def tone440():
    t = np.arange(int(SR * DUR)) / SR
    return 0.6 * np.sin(2 * np.pi * 440.0 * t)


def chirp():
    t = np.arange(int(SR * DUR)) / SR
    f0, f1 = 200.0, 2000.0
    phase = 2 * np.pi * (f0 * t + 0.5 * (f1 - f0) / DUR * t ** 2)
    return 0.5 * np.sin(phase)


def speechlike():
    rng = np.random.default_rng(1234)
    n = int(SR * DUR)
    x = rng.standard_normal(n)
    # crude formant shaping: two resonators in series
    for freq, bw in ((500.0, 80.0), (1500.0, 120.0)):
        r = np.exp(-np.pi * bw / SR)
        theta = 2 * np.pi * freq / SR
        a1, a2 = -2 * r * np.cos(theta), r * r
        y = np.empty(n)
        y1 = y2 = 0.0
        for i in range(n):
            y0 = x[i] - a1 * y1 - a2 * y2
            y[i] = y0
            y2, y1 = y1, y0
        x = y
    # syllable-rate amplitude modulation
    t = np.arange(n) / SR
    x *= 0.5 * (1.0 + np.sin(2 * np.pi * 4.0 * t))
    return 0.4 * x / np.max(np.abs(x))


def main():
    out_dir = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, make in (("tone440", tone440), ("chirp", chirp),
                       ("speechlike", speechlike)):
        sig = TimeSignal(make(), SR)
        write_wav(sig, out_dir / f"{name}.wav", 16)
        print(f"wrote {out_dir / f'{name}.wav'} ({len(sig)} samples)")


if __name__ == "__main__":
    main()
