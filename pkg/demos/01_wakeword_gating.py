"""Wakeword gating: only transcripts starting with "blueberry" get through.

Run:  python demos/01_wakeword_gating.py
"""

from puppeteer.transcript_gate import (Transcript, WakewordConfig, gate,
                                       levenshtein, wakeword_similarity)

config = WakewordConfig()  # wakeword "blueberry", sensitivity 0.9

transcripts = [
    "Blueberry, move to the orange square",
    "blueberry what time is it",
    "blueberryy move to red",      # one typo: similarity 0.9, still passes
    "bluebery move to red",        # one deletion: similarity 0.889, rejected
    "strawberry move to red",      # different word entirely
    "move to red",                 # no wakeword at all
]

print(f"wakeword={config.wakeword!r} sensitivity={config.sensitivity}\n")
for text in transcripts:
    result = gate(Transcript("demo", text), config)
    first = text.split()[0].lower().strip(",.!?")
    sim = wakeword_similarity(first, config)
    dist = levenshtein(first, config.wakeword)
    verdict = f"-> {result.text!r}" if hasattr(result, "text") else "REJECTED"
    print(f"  {text!r:45s} lev={dist} sim={sim:.3f}  {verdict}")
