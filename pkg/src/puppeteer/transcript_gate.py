"""Wakeword gating for incoming speech transcripts.

Transcripts arrive as plain text. The gate normalizes the text, checks
whether the first token is close enough to the configured wakeword
(normalized edit distance against a sensitivity threshold), and hands the
remaining command text downstream. Everything here is pure and safe to
call from concurrent ingest handlers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_PUNCT = re.compile(r"[,.!?;:]")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class Transcript:
    """One unit of recognized speech."""

    session_id: str
    text: str
    received_at_ms: float = 0.0


@dataclass(frozen=True)
class WakewordConfig:
    wakeword: str = "blueberry"
    sensitivity: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.sensitivity <= 1.0:
            raise ValueError(f"sensitivity out of [0,1]: {self.sensitivity}")
        if not self.wakeword or _WS.search(self.wakeword):
            raise ValueError(f"wakeword must be a single non-empty token: {self.wakeword!r}")
        if self.wakeword != self.wakeword.lower():
            raise ValueError(f"wakeword must be lowercase: {self.wakeword!r}")


@dataclass(frozen=True)
class GatedCommandText:
    """Command remainder after a matched wakeword."""

    text: str
    wakeword_similarity: float
    source: Transcript = field(default=None, compare=False)  # type: ignore[assignment]


class NoWakeword:
    """Sentinel outcome: transcript did not start with the wakeword."""

    def __init__(self, similarity: float = 0.0):
        self.similarity = similarity

    def __repr__(self):
        return f"NoWakeword(similarity={self.similarity:.4f})"


def normalize(raw: str) -> str:
    """Lowercase, strip listed punctuation, collapse whitespace."""
    text = _PUNCT.sub(" ", raw.lower())
    return _WS.sub(" ", text).strip()


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance (insert/delete/substitute, unit costs)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def wakeword_similarity(token: str, config: WakewordConfig) -> float:
    """Similarity in [0,1]: 1 - lev/max(len); 1.0 on exact match."""
    if token == config.wakeword:
        return 1.0
    denom = max(len(token), len(config.wakeword))
    if denom == 0:
        return 1.0
    return 1.0 - levenshtein(token, config.wakeword) / denom


def gate(t: Transcript, config: WakewordConfig) -> GatedCommandText | NoWakeword:
    """Accept the transcript iff its first token matches the wakeword.

    Returns the normalized remainder after the wakeword, or NoWakeword.
    An empty remainder is still a pass; downstream validation rejects it.
    """
    text = normalize(t.text)
    if not text:
        return NoWakeword()
    first, _, rest = text.partition(" ")
    sim = wakeword_similarity(first, config)
    if sim >= config.sensitivity:
        return GatedCommandText(text=rest, wakeword_similarity=sim, source=t)
    return NoWakeword(sim)
