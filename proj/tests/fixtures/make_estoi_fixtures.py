"""Generate (estimate, reference) WAV pairs and their eSTOI scores from pystoi.

Run from this directory: python3 make_estoi_fixtures.py
Writes estoi/pair_XX_{est,ref}.wav (16 kHz float32) and estoi/scores.json.
"""
import json
import os

import numpy as np
import scipy.io.wavfile as wavfile
import scipy.signal as sig
from pystoi import stoi

FS = 16000
OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "estoi")


def speechlike(rng, dur):
    n = int(dur * FS)
    t = np.arange(n) / FS
    f0 = rng.uniform(100, 220) * (1 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.5, 2) * t))
    phase = 2 * np.pi * np.cumsum(f0) / FS
    x = sum(np.sin(k * phase) / k for k in range(1, 30))
    b, a = sig.butter(2, [rng.uniform(400, 900), rng.uniform(1500, 3000)], btype="band", fs=FS)
    x = sig.lfilter(b, a, x)
    # syllabic envelope with pauses
    env = np.clip(np.sin(2 * np.pi * rng.uniform(2, 5) * t + rng.uniform(0, 6)), 0, None) ** 2
    x = x * env
    return 0.5 * x / np.max(np.abs(x))


def degrade(rng, x, kind):
    n = len(x)
    if kind == "white":
        v = rng.standard_normal(n)
        snr = rng.uniform(-5, 15)
    elif kind == "lowpass_noise":
        v = sig.lfilter([0.2], [1, -0.8], rng.standard_normal(n))
        snr = rng.uniform(-5, 10)
    elif kind == "reverb":
        L = int(0.5 * FS)
        h = rng.standard_normal(L) * np.exp(-np.arange(L) / (0.08 * FS))
        h[0] = 3.0
        y = np.convolve(x, h)[:n]
        return y / np.max(np.abs(y)) * 0.5
    elif kind == "clip":
        return np.clip(x, -0.1, 0.1)
    else:
        raise ValueError(kind)
    v *= np.sqrt(np.sum(x ** 2) / (np.sum(v ** 2) * 10 ** (snr / 10)))
    return x + v


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = np.random.default_rng(20240611)
    kinds = ["white", "white", "lowpass_noise", "lowpass_noise", "reverb",
             "reverb", "clip", "white", "lowpass_noise", "reverb"]
    scores = []
    for i, kind in enumerate(kinds):
        ref = speechlike(rng, rng.uniform(2.0, 3.5)).astype(np.float32)
        est = degrade(rng, ref.astype(np.float64), kind).astype(np.float32)
        base = f"pair_{i:02d}"
        wavfile.write(os.path.join(OUT, base + "_ref.wav"), FS, ref)
        wavfile.write(os.path.join(OUT, base + "_est.wav"), FS, est)
        score = stoi(ref.astype(np.float64), est.astype(np.float64), FS, extended=True)
        scores.append({"pair": base, "kind": kind, "estoi": float(score)})
    with open(os.path.join(OUT, "scores.json"), "w") as f:
        json.dump(scores, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
