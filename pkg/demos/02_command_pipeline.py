"""Two-stage command validation: quick string match, then an LLM fallback.

A stub completion server stands in for the local LLM so the demo is
self-contained.  Run:  python demos/02_command_pipeline.py
"""

from puppeteer.gateway import stub_classifier
from puppeteer.llm_pool import LlmEndpoint, LlmPool, StubLlmServer
from puppeteer.pipeline import PipelinePolicy, validate

policy = PipelinePolicy()  # one re-validation, then discard

utterances = [
    "move to the orange square",        # quick path, zero LLM calls
    "please head toward the green area",  # paraphrase: LLM resolves it
    "what time is it",                  # junk: LLM rejects it
    "the reddish one maybe",            # hedged: LLM is uncertain, discarded
]

with StubLlmServer([stub_classifier]) as server:
    pool = LlmPool([LlmEndpoint(server.base_url)])
    for text in utterances:
        before = len(server.request_log)
        outcome = validate(text, policy, pool)
        calls = len(server.request_log) - before
        print(f"  {text!r:40s} -> {type(outcome).__name__:10s} "
              f"(llm calls: {calls})")
        for step in outcome.provenance:
            print(f"      {step}")
    pool.close()
