"""Compile expressions to anchored regular expressions and check realizations.

Sequencing rule: two adjacent fixed pieces (anything but a mask) are
separated by exactly one space, the way they are written in the
markup.  A mask absorbs whatever lies between its neighbours, spaces
included.  Candidates are whitespace-normalized before matching.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .expr import Expression, Lexicon, Literal, Mask, normalize_ws

WILDCARD = ".*"
# escaping limited to the metacharacters every mainstream engine shares
_META = re.compile(r"([\\.^$|?*+()\[\]{}])")


def escape(text: str) -> str:
    return _META.sub(r"\\\1", text)


@dataclass(frozen=True)
class CompiledPattern:
    regex_source: str
    required_word_count: int | None = None

    @property
    def regex(self) -> re.Pattern:
        return _compiled(self.regex_source)


@lru_cache(maxsize=4096)
def _compiled(source: str) -> re.Pattern:
    # DOTALL: the wildcard spans line breaks
    return re.compile(source, re.DOTALL)


@dataclass(frozen=True)
class ValidationReport:
    regex_ok: bool
    length_ok: bool
    word_count: int

    @property
    def verdict(self) -> bool:
        return self.regex_ok and self.length_ok

    def to_dict(self) -> dict:
        return {
            "regex_ok": self.regex_ok,
            "length_ok": self.length_ok,
            "word_count": self.word_count,
            "verdict": self.verdict,
        }


def _sequence(items) -> str:
    out = []
    prev = None
    for node in items:
        if prev is not None and not isinstance(prev, Mask) and not isinstance(node, Mask):
            out.append(" ")
        if isinstance(node, Mask):
            out.append(WILDCARD)
        elif isinstance(node, Literal):
            out.append(escape(node.text))
        elif isinstance(node, Lexicon):
            out.append(escape(node.surface))
        else:
            out.append("(" + "|".join(_sequence(ch.body) for ch in node.choices) + ")")
        prev = node
    return "".join(out)


def compile_expression(expr: Expression) -> CompiledPattern:
    return CompiledPattern("^" + _sequence(expr.items) + "$", expr.length)


def full_match(pattern: CompiledPattern, candidate: str) -> bool:
    return pattern.regex.fullmatch(normalize_ws(candidate)) is not None


def count_words(text: str) -> int:
    return len(text.split())


def validate_output(expr: Expression | CompiledPattern, candidate: str) -> ValidationReport:
    pattern = expr if isinstance(expr, CompiledPattern) else compile_expression(expr)
    words = count_words(candidate)
    need = pattern.required_word_count
    return ValidationReport(
        regex_ok=full_match(pattern, candidate),
        length_ok=need is None or words == need,
        word_count=words,
    )
