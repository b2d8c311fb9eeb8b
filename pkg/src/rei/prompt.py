"""Few-shot prompts as JSON lines and parsing of the model's continuation.

A prompt is ``shots`` demonstration lines followed by the query line cut
off right after ``"output": "``; the model writes the output string and
closes it with ``"}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .annotate import label_realization
from .errors import NotEnoughDemos, UnterminatedCompletion
from .expr import Document, parse_document, render_document, signature

STOP = '"}'
DEFAULT_SHOTS = 8


@dataclass(frozen=True)
class Demonstration:
    input: str
    output: str

    @classmethod
    def from_realization(cls, doc: Document, realized: str, *, zero_based: bool = False) -> "Demonstration":
        return cls(render_document(doc), label_realization(realized, doc.expr, zero_based=zero_based))

    def line(self) -> str:
        return json.dumps({"input": self.input, "output": self.output}, ensure_ascii=False)


def load_demos(path) -> list[Demonstration]:
    demos = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                demos.append(Demonstration(rec["input"], rec["output"]))
    return demos


def select_demos(query: Document, demos, shots: int = DEFAULT_SHOTS) -> list[Demonstration]:
    """First ``shots`` demos whose expression has the query's structure."""
    want = signature(query)
    picked = []
    for demo in demos:
        if len(picked) == shots:
            break
        if signature(parse_document(demo.input, extended=True)) == want:
            picked.append(demo)
    if len(picked) < shots:
        raise NotEnoughDemos(f"need {shots} demos with signature {want}, found {len(picked)}")
    return picked


def build_fewshot_prompt(query: Document, demos, shots: int = DEFAULT_SHOTS) -> str:
    lines = [d.line() for d in select_demos(query, demos, shots)]
    head = json.dumps({"input": render_document(query), "output": ""}, ensure_ascii=False)
    lines.append(head[: -len(STOP)])
    return "\n".join(lines)


def encode_output(text: str) -> str:
    """The continuation a well-behaved model would write for ``text``."""
    return json.dumps(text, ensure_ascii=False)[1:] + "}"


def parse_completion(raw: str) -> str:
    """Decode the output string from a continuation of the query line."""
    chunk = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw):
            chunk.append(raw[i : i + 2])
            i += 2
            continue
        if c == '"':
            if raw.startswith(STOP, i):
                body = "".join(chunk)
                try:
                    return json.loads(f'"{body}"', strict=False)
                except json.JSONDecodeError as e:
                    raise UnterminatedCompletion(f"bad escape in completion: {e}") from e
            chunk.append('\\"')  # stray quote inside the string
        else:
            chunk.append(c)
        i += 1
    raise UnterminatedCompletion("completion has no closing '\"}'")
