"""Regenerates the WFDB fixtures and reference dumps using the wfdb Python package.

Run from this directory: python3 generate.py
"""
import json

import numpy as np
import wfdb

rng = np.random.default_rng(7)
fs = 360
n = 3600
t = np.arange(n) / fs

beats = np.arange(0.4, 10.0, 0.8)
sig0 = 0.05 * np.sin(2 * np.pi * 0.3 * t)
for b in beats:
    sig0 += 1.2 * np.exp(-0.5 * ((t - b) / 0.012) ** 2)
sig0 += rng.normal(0, 0.02, n)
sig1 = -0.6 * sig0 + rng.normal(0, 0.03, n)
sig = np.column_stack([sig0, sig1])

wfdb.wrsamp(
    "syn212", fs=fs, units=["mV", "mV"], sig_name=["MLII", "V5"],
    p_signal=sig, fmt=["212", "212"], adc_gain=[200.0, 200.0], baseline=[1024, 1024],
)
wfdb.wrsamp(
    "syn16", fs=250, units=["mV"], sig_name=["ECG"],
    p_signal=sig0[:2000, None], fmt=["16"], adc_gain=[1000.0], baseline=[0],
)

samples = [int(round(b * fs)) for b in beats]
symbols = ["N"] * len(samples)
symbols[3] = "V"
symbols[7] = "A"
extra = [(5, "+"), (1500, "~"), (3590, "|")]
ann = sorted([(s, c) for s, c in zip(samples, symbols)] + extra)
aux = ["(N\x00" if c == "+" else "" for _, c in ann]
subtype = [1 if c == "~" else 0 for _, c in ann]
chan = [1 if c == "V" else 0 for _, c in ann]
wfdb.wrann(
    "syn212", "atr", np.array([s for s, _ in ann]), symbol=[c for _, c in ann],
    subtype=np.array(subtype), chan=np.array(chan), aux_note=aux, fs=fs,
)
# sparse annotations exercise the SKIP pseudo-code (interval > 1023)
wfdb.wrann("syn16", "atr", np.array([100, 1500, 1999]), symbol=["N", "N", "V"], fs=250)

r212 = wfdb.rdrecord("syn212", physical=False)
r16 = wfdb.rdrecord("syn16", physical=False)
a212 = wfdb.rdann("syn212", "atr")
a16 = wfdb.rdann("syn16", "atr")
beat_codes = set("NLRBAaJSVrFejnEfQ?")
ref = {
    "syn212": {
        "n_signals": r212.n_sig, "fs": r212.fs, "n_samples": r212.sig_len,
        "gain": list(r212.adc_gain), "baseline": list(r212.baseline),
        "adc_ch0_first20": r212.d_signal[:20, 0].tolist(),
        "adc_ch1_first20": r212.d_signal[:20, 1].tolist(),
        "adc_ch0_sum": int(r212.d_signal[:, 0].astype(np.int64).sum()),
        "adc_ch1_sum": int(r212.d_signal[:, 1].astype(np.int64).sum()),
        "ann_samples": a212.sample.tolist(), "ann_symbols": a212.symbol,
        "beat_count": sum(1 for s in a212.symbol if s in beat_codes),
    },
    "syn16": {
        "n_signals": r16.n_sig, "fs": r16.fs, "n_samples": r16.sig_len,
        "gain": list(r16.adc_gain), "baseline": list(r16.baseline),
        "adc_ch0_first20": r16.d_signal[:20, 0].tolist(),
        "adc_ch0_sum": int(r16.d_signal[:, 0].astype(np.int64).sum()),
        "ann_samples": a16.sample.tolist(), "ann_symbols": a16.symbol,
        "beat_count": sum(1 for s in a16.symbol if s in beat_codes),
    },
}
with open("reference.json", "w") as f:
    json.dump(ref, f, indent=1)
