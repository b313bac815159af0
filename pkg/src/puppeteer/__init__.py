"""Voice-commanded robot teleoperation stack.

Wakeword-gated transcripts are validated in stages (string match, then
round-robin LLM validation), converted to move commands, executed on a
virtual 7-DOF arm and mirrored over OSC/UDP to a simulated real robot.
"""

__version__ = "0.1.0"

from .pipeline import ColorTarget, MoveCommand, PipelinePolicy  # noqa: F401
from .transcript_gate import Transcript, WakewordConfig, gate  # noqa: F401
