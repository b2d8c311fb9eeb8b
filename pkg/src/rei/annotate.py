"""Word-count labels (``word_3``) and concept serial labels (``word(0)``).

Both kinds are auxiliary marks a model writes while generating; they are
stripped before a realization is validated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import AlreadyLabeled, MissingExpressionSpan
from .expr import CLOSE, OPEN, Expression, normalize_ws

_TOKEN = re.compile(r"\S+")
_WORD_LABEL = re.compile(r"_[0-9]+$")


class Scheme(str, Enum):
    WORD = "word_labels"
    SERIAL = "serial_labels"
    BOTH = "both"


@dataclass(frozen=True)
class LabeledText:
    text: str
    scheme: Scheme = Scheme.WORD

    def __str__(self):
        return self.text


def add_word_labels(text: str, *, zero_based: bool = False) -> LabeledText:
    """Suffix the i-th whitespace token with ``_i`` (1-based by default).

    Whitespace between tokens is preserved as-is.
    """
    for m in _TOKEN.finditer(text):
        if _WORD_LABEL.search(m.group()):
            raise AlreadyLabeled(f"token {m.group()!r} already carries a word label")
    counter = iter(range(0 if zero_based else 1, 10**9))
    return LabeledText(_TOKEN.sub(lambda m: f"{m.group()}_{next(counter)}", text), Scheme.WORD)


def strip_word_labels(text: LabeledText | str) -> str:
    return _TOKEN.sub(lambda m: _WORD_LABEL.sub("", m.group()), str(text))


def add_serial_labels(text: str, surfaces) -> str:
    """Append ``(i)`` after the i-th surface, scanning left to right.

    Whole-word occurrences are preferred; a bare substring is the fallback.
    """
    out, pos = [], 0
    for i, surface in enumerate(surfaces):
        m = re.compile(rf"(?<!\w){re.escape(surface)}(?!\w)").search(text, pos)
        if m is None:
            at = text.find(surface, pos)
            if at < 0:
                raise ValueError(f"surface {surface!r} not found after offset {pos}")
            end = at + len(surface)
        else:
            end = m.end()
        out.append(text[pos:end] + f"({i})")
        pos = end
    out.append(text[pos:])
    return "".join(out)


def strip_serial_labels(text: str, lexicon) -> str:
    """Remove ``(i)`` where it directly follows the i-th lexicon surface."""
    for i, surface in enumerate(lexicon):
        text = text.replace(f"{surface}({i})", surface)
    return text


def label_realization(text: str, expr: Expression, *, zero_based: bool = False) -> str:
    """Annotate a realization the way a fine-tuned model writes it."""
    surfaces = [lx.surface for lx in expr.lexicons]
    if surfaces:
        text = add_serial_labels(text, surfaces)
    if expr.length is not None:
        text = add_word_labels(text, zero_based=zero_based).text
    return f"{OPEN} {text} {CLOSE}"


def extract_realization(model_output: str, expr: Expression, *, tagged: bool | None = None) -> str:
    """Return the label-free realized text from raw model output.

    ``tagged=None`` looks for an expression span and falls back to treating
    the whole output as bare text; ``tagged=True`` requires the span.
    """
    start = model_output.find(OPEN)
    if start >= 0:
        inner = model_output[start + len(OPEN) :]
        end = inner.find(CLOSE)
        if end >= 0:
            inner = inner[:end]
        elif tagged:
            raise MissingExpressionSpan("no closing </expression> in model output")
    elif tagged:
        raise MissingExpressionSpan("no <expression> span in model output")
    else:
        inner = model_output
    inner = strip_word_labels(inner)
    inner = strip_serial_labels(inner, [lx.surface for lx in expr.lexicons])
    return normalize_ws(inner)
