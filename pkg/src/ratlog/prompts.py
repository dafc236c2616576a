"""Prompt templates for candidate-solution generators.

Two fixed templates: one that lists the background operators and one that
does not.  Rendering is byte-deterministic; the operator block appears in a
prompt if and only if the ``with_predicates`` mode is selected.
"""
from __future__ import annotations

from .operators import OperatorRegistry, prompt_block

MODE_WITH_PREDICATES = "with_predicates"
MODE_WITHOUT_PREDICATES = "without_predicates"
PROMPT_MODES = (MODE_WITH_PREDICATES, MODE_WITHOUT_PREDICATES)

_HEADER = (
    "Below is an instruction that describes a task, paired with an input that "
    "provides further context. Write a response that appropriately completes "
    "the request."
)

WITHOUT_PREDICATES_TEMPLATE = (
    f"{_HEADER}\n"
    "\n"
    "### Instruction:\n"
    "Please generate a piece of Prolog code to solve the given math problem.\n"
    "\n"
    "### Input:\n"
    "{question}\n"
    "\n"
    "### Output:\n"
)

WITH_PREDICATES_TEMPLATE = (
    f"{_HEADER}\n"
    "\n"
    "### Instruction:\n"
    "Please generate a prolog answer based on the given predicates to solve "
    "the given math problem.\n"
    "{operators}\n"
    "\n"
    "### Input:\n"
    "{question}\n"
    "\n"
    "### Output:\n"
)


def render_prompt_text(
    question: str, mode: str, registry: OperatorRegistry | None = None
) -> str:
    if mode == MODE_WITHOUT_PREDICATES:
        return WITHOUT_PREDICATES_TEMPLATE.format(question=question)
    if mode == MODE_WITH_PREDICATES:
        return WITH_PREDICATES_TEMPLATE.format(question=question, operators=prompt_block(registry))
    raise ValueError(f"unknown prompt mode {mode!r}; expected one of {PROMPT_MODES}")
