"""Staged validation of gated command text.

Order of stages: quick string match first; if that cannot decide, the text
is escalated to an LLM endpoint picked round-robin from the pool. An
uncertain LLM verdict is re-submitted (advancing the round-robin) up to
`max_revalidations` times, after which the configured exhaustion policy
applies.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .llm_pool import LlmPool, LlmUnavailable


class Mode(enum.Enum):
    PUPPETEER = "puppeteer"
    IDLE = "idle"


class SessionNotFound(KeyError):
    pass


class ColorTarget(enum.Enum):
    RED = "red"
    BLUE = "blue"
    ORANGE = "orange"
    YELLOW = "yellow"
    PURPLE = "purple"
    GREEN = "green"
    BLACK = "black"  # tutorial only

    @property
    def tutorial_only(self) -> bool:
        return self is ColorTarget.BLACK


COLOR_NAMES = {c.value for c in ColorTarget}


@dataclass(frozen=True)
class MoveCommand:
    target: ColorTarget
    origin_stage: str  # "quick" | "llm"
    source_text: str = ""

    def to_json(self) -> str:
        """Exact wire form: no whitespace, lowercase color."""
        return '{"command":"move","color":"%s"}' % self.target.value

    @classmethod
    def from_json(cls, raw: str, origin_stage: str = "quick") -> "MoveCommand":
        obj = json.loads(raw)
        if obj.get("command") != "move":
            raise ValueError(f"not a move command: {raw!r}")
        return cls(target=ColorTarget(obj["color"]), origin_stage=origin_stage)


@dataclass
class Valid:
    command: MoveCommand
    provenance: list = field(default_factory=list)


@dataclass
class Invalid:
    reason: str
    provenance: list = field(default_factory=list)


@dataclass
class Uncertain:
    attempts: int = 0
    provenance: list = field(default_factory=list)


ValidationOutcome = Valid | Invalid | Uncertain


class _NoMatch:
    def __repr__(self):
        return "NoMatch"


NO_MATCH = _NoMatch()


@dataclass(frozen=True)
class PipelinePolicy:
    max_revalidations: int = 1
    llm_timeout_ms: int = 3000
    uncertain_after_exhaustion: str = "discard"  # or "treat_invalid"

    def __post_init__(self):
        if self.max_revalidations < 0:
            raise ValueError("max_revalidations must be >= 0")
        if self.uncertain_after_exhaustion not in ("discard", "treat_invalid"):
            raise ValueError(f"unknown exhaustion policy: {self.uncertain_after_exhaustion}")


def identify_mode(sessions, session_id) -> Mode:
    """Look up the session's operational mode; only PUPPETEER proceeds."""
    try:
        return sessions[session_id]
    except KeyError:
        raise SessionNotFound(session_id) from None


def quick_validate(text: str):
    """Fast string match: "move to" followed by a predefined color.

    The color token may carry a leading article "the". Unknown colors
    escalate (return NO_MATCH) so the LLM can catch paraphrases.
    """
    idx = text.find("move to")
    if idx < 0:
        return NO_MATCH
    tokens = text[idx + len("move to"):].split()
    if tokens and tokens[0] == "the":
        tokens = tokens[1:]
    if tokens and tokens[0] in COLOR_NAMES:
        return Valid(MoveCommand(ColorTarget(tokens[0]), "quick", source_text=text))
    return NO_MATCH


_PROMPT_TEMPLATE = """\
You classify a spoken instruction for a robot arm that can move its \
end-effector to one of these colored areas: red, blue, orange, yellow, \
purple, green, black.

Answer with exactly one JSON object and nothing else:
- {"command":"move","color":"<one of red|blue|orange|yellow|purple|green|black>"} \
if the instruction unambiguously asks to move to that color,
- {"command":"none"} if it is clearly not a move instruction,
- {"command":"uncertain"} if you cannot tell.

Instruction (verbatim, between the markers):
<<<BEGIN
%s
END>>>
Answer:"""


def build_llm_prompt(text: str) -> str:
    """Instantiate the fixed classification prompt around the user text."""
    if not text:
        raise ValueError("empty command text")
    # json-escape so quotes/newlines in the utterance cannot break the block
    escaped = json.dumps(text)[1:-1]
    return _PROMPT_TEMPLATE % escaped


def parse_llm_reply(reply: str) -> ValidationOutcome:
    """Map the first complete JSON object in the reply to a verdict.

    Anything malformed (no JSON, unknown command, unknown color) counts
    as Uncertain rather than an error: chatty models are expected.
    """
    decoder = json.JSONDecoder()
    start = reply.find("{")
    while start >= 0:
        try:
            obj, _ = decoder.raw_decode(reply, start)
        except ValueError:
            start = reply.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            cmd = obj.get("command")
            if cmd == "move":
                color = obj.get("color")
                if isinstance(color, str) and color.lower() in COLOR_NAMES:
                    return Valid(MoveCommand(ColorTarget(color.lower()), "llm"))
                return Uncertain()
            if cmd == "none":
                return Invalid("not-a-move-command")
            return Uncertain()
        start = reply.find("{", start + 1)
    return Uncertain()


def validate(text: str, policy: PipelinePolicy, pool: LlmPool) -> ValidationOutcome:
    """Full chain: quick match, then LLM with bounded re-validation."""
    provenance = []
    if not text:
        out = Invalid("empty-command")
        out.provenance = [("quick", "empty")]
        return out

    quick = quick_validate(text)
    if isinstance(quick, Valid):
        quick.provenance = [("quick", "valid")]
        return quick
    provenance.append(("quick", "no-match"))

    prompt = build_llm_prompt(text)
    attempts = 0
    while True:
        try:
            reply = pool.complete(prompt, timeout_ms=policy.llm_timeout_ms)
        except LlmUnavailable:
            provenance.append(("llm", "unavailable"))
            return Invalid("llm-unavailable", provenance)
        outcome = parse_llm_reply(reply)
        if isinstance(outcome, Valid):
            outcome.command = MoveCommand(outcome.command.target, "llm", source_text=text)
            provenance.append(("llm", "valid"))
            outcome.provenance = provenance
            return outcome
        if isinstance(outcome, Invalid):
            provenance.append(("llm", "invalid"))
            outcome.provenance = provenance
            return outcome
        provenance.append(("llm", "uncertain"))
        if attempts >= policy.max_revalidations:
            break
        attempts += 1

    if policy.uncertain_after_exhaustion == "treat_invalid":
        return Invalid("uncertain-exhausted", provenance)
    return Uncertain(attempts=attempts, provenance=provenance)
