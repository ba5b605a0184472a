#!/usr/bin/env python3
"""Writes fixtures/cascade_dynamics.jsonl, a synthetic run log shaped like the
published training dynamics: reward saturation near step 50, length collapse
near 60, search avoidance near 110 and language drift near 140.

Each signal is a logistic step between plateau levels taken from the reported
end states, placed so that the noise-free per-step value first meets the stage
condition (phi within 0.05 of its plateau, length below 150, zero-search at
0.9, non-English at 0.1) at the onset step. A trailing-window detector then
lags by roughly half a window. A little seeded noise keeps the detectors honest.
"""
import json
import math
import random
import sys
from pathlib import Path

STEPS = 200
WIDTH = 2.5
ONSETS = {"phi": 50, "length": 60, "search": 110, "language": 140}


def logistic(t, centre, lo, hi):
    return lo + (hi - lo) / (1.0 + math.exp(-(t - centre) / WIDTH))


def centre_for(onset, lo, hi, crossing):
    # Solves logistic(onset, centre, lo, hi) == crossing for centre.
    return onset + WIDTH * math.log((hi - lo) / (crossing - lo) - 1.0)


def signal(t, name, lo, hi, crossing):
    return logistic(t, centre_for(ONSETS[name], lo, hi, crossing), lo, hi)


def main(out):
    rng = random.Random(50_60_110_140)
    lines = [json.dumps({"record": "header", "schema": "checkrl.runlog/1", "scenario": "cascade-dynamics-fixture",
                         "seed": 0, "steps": STEPS})]
    samples = 128
    for t in range(STEPS):
        phi = signal(t, "phi", 0.10, 0.62, 0.57) + rng.uniform(-0.01, 0.01)
        length = signal(t, "length", 394.0, 130.0, 150.0) + rng.uniform(-5, 5)
        zero_search = min(1.0, max(0.0, signal(t, "search", 0.02, 0.98, 0.9) + rng.uniform(-0.005, 0.005)))
        non_en = min(1.0, max(0.0, signal(t, "language", 0.0, 0.35, 0.1) + rng.uniform(-0.005, 0.005)))
        claims = int(round(samples * length / 66.0))
        support = 0.55 + 0.25 * (phi - 0.10) / 0.52
        entail = int(round(claims * support))
        contradict = int(round(claims * 0.05))
        lines.append(json.dumps({
            "record": "step",
            "step": t,
            "samples": samples,
            "mean_length": round(length, 3),
            "zero_search_fraction": round(zero_search, 4),
            "mean_search_calls": round(1.4 * (1.0 - zero_search), 4),
            "non_english_fraction": round(non_en, 4),
            "mean_phi": round(phi, 4),
            "support_rate": round(entail / claims, 4),
            "faithfulness": round(1.0 - 0.3 * (1.0 - support), 4),
            "tag_rate": 1.0,
            "mean_reward": round(0.25 * (1.0 + phi), 4),
            "claims": claims,
            "entail": entail,
            "neutral": claims - entail - contradict,
            "contradict": contradict,
        }))
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).resolve().parent.parent / "fixtures" / "cascade_dynamics.jsonl"))
