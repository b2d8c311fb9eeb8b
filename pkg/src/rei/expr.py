"""Constraint expression AST with its parser and renderer.

A document is free text with exactly one ``<expression> ... </expression>``
span.  Inside the span the markup is::

    <mask_N>                       zero or more generated tokens
    word(N)                        required word, N = its serial
    <options> <choice_0> ... </choice_0> ... </options>
    <length=N>                     required word count, always last

Everything else inside the span is literal text.  Text outside the span is
kept verbatim in ``Document.prefix`` / ``Document.suffix``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import (
    DuplicateLengthLabel,
    InvalidExpression,
    MalformedLabel,
    MultipleOptions,
    NestedOptions,
    NonSequentialMaskIds,
    UnbalancedTags,
)

OPEN = "<expression>"
CLOSE = "</expression>"

_NUM = r"(0|[1-9][0-9]*)"
# anything that claims to be a label; classified precisely below
_LABELISH = re.compile(r"</?(?:expression|options|mask|choice|length)(?![A-Za-z])[^<>]*>")
_MASK = re.compile(rf"<mask_{_NUM}>")
_CHOICE_OPEN = re.compile(rf"<choice_{_NUM}>")
_CHOICE_CLOSE = re.compile(rf"</choice_{_NUM}>")
_LENGTH = re.compile(r"<length=([1-9][0-9]*)>")
_SERIAL_TOKEN = re.compile(rf"(.+)\({_NUM}\)")
_WS = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to one space and trim the ends."""
    return " ".join(text.split())


@dataclass(frozen=True)
class Mask:
    id: int

    def __post_init__(self):
        if self.id < 0:
            raise InvalidExpression(f"negative mask id {self.id}")


@dataclass(frozen=True)
class Literal:
    text: str

    def __post_init__(self):
        if not self.text or self.text != normalize_ws(self.text):
            raise InvalidExpression(f"literal must be non-empty, whitespace-normalized text: {self.text!r}")
        if _LABELISH.search(self.text):
            raise InvalidExpression(f"literal contains markup: {self.text!r}")


@dataclass(frozen=True)
class Lexicon:
    surface: str
    serial: int

    def __post_init__(self):
        if not self.surface or _WS.search(self.surface):
            raise InvalidExpression(f"lexicon surface must be one non-empty token: {self.surface!r}")
        if _LABELISH.search(self.surface):
            raise InvalidExpression(f"lexicon contains markup: {self.surface!r}")
        if self.serial < 0:
            raise InvalidExpression(f"negative serial {self.serial}")


@dataclass(frozen=True)
class Choice:
    id: int
    body: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise InvalidExpression(f"choice {self.id} is empty")
        if any(isinstance(n, Options) for n in self.body):
            raise InvalidExpression("options cannot nest inside a choice")


@dataclass(frozen=True)
class Options:
    choices: tuple

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))
        if not self.choices:
            raise InvalidExpression("options group without choices")
        for i, ch in enumerate(self.choices):
            if ch.id != i:
                raise InvalidExpression(f"choice ids must be 0..{len(self.choices) - 1}, got {ch.id} at {i}")


Node = Union[Mask, Literal, Lexicon, Options]


def walk(items) -> Iterator[Node]:
    """Yield nodes in reading order, descending into choices."""
    for node in items:
        yield node
        if isinstance(node, Options):
            for ch in node.choices:
                yield from walk(ch.body)


@dataclass(frozen=True)
class Expression:
    items: tuple
    length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise InvalidExpression("empty expression")
        if self.length is not None and self.length < 1:
            raise InvalidExpression(f"length must be positive, got {self.length}")
        nodes = list(walk(self.items))
        masks = [n.id for n in nodes if isinstance(n, Mask)]
        if masks != list(range(len(masks))):
            raise InvalidExpression(f"mask ids not sequential: {masks}")
        serials = [n.serial for n in nodes if isinstance(n, Lexicon)]
        if serials != list(range(len(serials))):
            raise InvalidExpression(f"lexicon serials not sequential: {serials}")

    @property
    def masks(self) -> list[Mask]:
        return [n for n in walk(self.items) if isinstance(n, Mask)]

    @property
    def lexicons(self) -> list[Lexicon]:
        return [n for n in walk(self.items) if isinstance(n, Lexicon)]

    @property
    def option_groups(self) -> list[Options]:
        return [n for n in self.items if isinstance(n, Options)]

    @property
    def extended(self) -> bool:
        """True when more than one options group is present."""
        return len(self.option_groups) > 1

    @property
    def has_nonterminal(self) -> bool:
        return any(isinstance(n, (Mask, Options)) for n in walk(self.items))


@dataclass(frozen=True)
class Document:
    prefix: str
    expr: Expression
    suffix: str = ""

    @classmethod
    def bare(cls, expr: Expression) -> "Document":
        return cls("", expr, "")


def renumber(items, length: int | None = None) -> Expression:
    """Build an Expression from ``items``, reassigning mask ids and serials.

    Used when splicing pieces of a larger expression into a standalone one.
    """
    masks = iter(range(10**9))
    serials = iter(range(10**9))

    def fix(node):
        if isinstance(node, Mask):
            return Mask(next(masks))
        if isinstance(node, Lexicon):
            return Lexicon(node.surface, next(serials))
        if isinstance(node, Options):
            return Options(Choice(ch.id, [fix(n) for n in ch.body]) for ch in node.choices)
        return node

    return Expression([fix(n) for n in items], length)


# -- parsing ---------------------------------------------------------------


class _Parser:
    def __init__(self, raw: str, start: int, extended: bool):
        self.raw = raw
        self.start = start  # char index of the body in raw
        self.extended = extended
        self.next_mask = 0
        self.next_serial = 0
        self.length: int | None = None
        self.length_at: int | None = None
        self.items: list = []
        self.choices: list | None = None  # inside <options>
        self.body: list | None = None  # inside <choice_N>
        self.choice_id: int | None = None
        self.groups = 0

    def byte_offset(self, i: int) -> int:
        return len(self.raw[: self.start + i].encode("utf-8"))

    def target(self, at: int) -> list:
        if self.body is not None:
            return self.body
        if self.choices is not None:
            raise MalformedLabel("text inside <options> must be wrapped in a choice", self.byte_offset(at))
        return self.items

    def check_after_length(self, at: int):
        if self.length is not None:
            raise MalformedLabel("<length=N> must be the last element of the expression", self.byte_offset(self.length_at))

    def text(self, chunk: str, at: int):
        for m in re.finditer(r"\S+", chunk):
            self.check_after_length(at + m.start())
            token = m.group()
            dest = self.target(at + m.start())
            sm = _SERIAL_TOKEN.fullmatch(token)
            if sm and int(sm.group(2)) == self.next_serial:
                dest.append(Lexicon(sm.group(1), self.next_serial))
                self.next_serial += 1
            elif dest and isinstance(dest[-1], Literal):
                dest[-1] = Literal(dest[-1].text + " " + token)
            else:
                dest.append(Literal(token))

    def label(self, tag: str, at: int):
        off = self.byte_offset(at)
        if tag in (OPEN, CLOSE):
            raise UnbalancedTags(f"nested {tag}", off)
        if (m := _LENGTH.fullmatch(tag)) is not None:
            if self.choices is not None:
                raise MalformedLabel("<length=N> is not allowed inside options", off)
            if self.length is not None:
                raise DuplicateLengthLabel("second <length=N> label", off)
            self.length = int(m.group(1))
            self.length_at = at
            return
        self.check_after_length(at)
        if (m := _MASK.fullmatch(tag)) is not None:
            n = int(m.group(1))
            if n != self.next_mask:
                raise NonSequentialMaskIds(f"expected <mask_{self.next_mask}>, got <mask_{n}>", off)
            self.next_mask += 1
            self.target(at).append(Mask(n))
        elif tag == "<options>":
            if self.choices is not None:
                raise NestedOptions("<options> inside another options group", off)
            if self.groups and not self.extended:
                raise MultipleOptions("more than one options group (extended mode disabled)", off)
            self.choices = []
            self.groups += 1
        elif tag == "</options>":
            if self.choices is None or self.body is not None:
                raise UnbalancedTags("</options> without matching <options>", off)
            if not self.choices:
                raise MalformedLabel("options group without choices", off)
            self.items.append(Options(self.choices))
            self.choices = None
        elif (m := _CHOICE_OPEN.fullmatch(tag)) is not None:
            if self.choices is None:
                raise MalformedLabel("<choice_N> outside <options>", off)
            if self.body is not None:
                raise UnbalancedTags("<choice_N> inside an open choice", off)
            n = int(m.group(1))
            if n != len(self.choices):
                raise MalformedLabel(f"expected <choice_{len(self.choices)}>, got <choice_{n}>", off)
            self.body, self.choice_id = [], n
        elif (m := _CHOICE_CLOSE.fullmatch(tag)) is not None:
            if self.body is None or int(m.group(1)) != self.choice_id:
                raise UnbalancedTags(f"{tag} does not close the open choice", off)
            if not self.body:
                raise MalformedLabel("empty choice", off)
            self.choices.append(Choice(self.choice_id, self.body))
            self.body = self.choice_id = None
        else:
            raise MalformedLabel(f"malformed label {tag!r}", off)

    def run(self, body: str) -> Expression:
        pos = 0
        for m in _LABELISH.finditer(body):
            self.text(body[pos : m.start()], pos)
            self.label(m.group(), m.start())
            pos = m.end()
        self.text(body[pos:], pos)
        if self.choices is not None:
            raise UnbalancedTags("unclosed options group", self.byte_offset(len(body)))
        if not self.items:
            raise MalformedLabel("empty expression", self.byte_offset(0))
        return Expression(self.items, self.length)


def parse_document(raw: str, *, extended: bool = False) -> Document:
    """Parse text holding exactly one expression.

    ``extended`` admits several sibling options groups (resolved left to
    right by recursive decoding); by default only one is accepted.
    """
    opens = [m.start() for m in re.finditer(re.escape(OPEN), raw)]
    closes = [m.start() for m in re.finditer(re.escape(CLOSE), raw)]

    def off(i):
        return len(raw[:i].encode("utf-8"))

    if len(opens) != 1 or len(closes) != 1 or closes[0] < opens[0]:
        bad = (opens[1:] or closes[1:] or closes or opens or [0])[0]
        raise UnbalancedTags("document must contain exactly one <expression>...</expression> pair", off(bad))
    start = opens[0] + len(OPEN)
    expr = _Parser(raw, start, extended).run(raw[start : closes[0]])
    return Document(raw[: opens[0]], expr, raw[closes[0] + len(CLOSE) :])


def parse_expression(raw: str, *, extended: bool = False) -> Expression:
    """Parse a bare expression; surrounding text must be blank."""
    doc = parse_document(raw, extended=extended)
    if doc.prefix.strip() or doc.suffix.strip():
        raise UnbalancedTags("unexpected text around the expression", 0)
    return doc.expr


# -- rendering -------------------------------------------------------------


def render_node(node: Node) -> str:
    if isinstance(node, Mask):
        return f"<mask_{node.id}>"
    if isinstance(node, Literal):
        return node.text
    if isinstance(node, Lexicon):
        return f"{node.surface}({node.serial})"
    parts = ["<options>"]
    for ch in node.choices:
        parts += [f"<choice_{ch.id}>", *map(render_node, ch.body), f"</choice_{ch.id}>"]
    parts.append("</options>")
    return " ".join(parts)


def render_expression(expr: Expression) -> str:
    parts = [OPEN, *map(render_node, expr.items)]
    if expr.length is not None:
        parts.append(f"<length={expr.length}>")
    parts.append(CLOSE)
    return " ".join(parts)


def render_document(doc: Document) -> str:
    return doc.prefix + render_expression(doc.expr) + doc.suffix


# -- structure signature ---------------------------------------------------


def _kinds(items) -> list[str]:
    out = []
    for node in items:
        if isinstance(node, Mask):
            out.append("mask")
        elif isinstance(node, Lexicon):
            out.append("lex")
        elif isinstance(node, Literal):
            out.append("lit")
        else:
            bodies = "|".join(",".join(_kinds(ch.body)) for ch in node.choices)
            out.append(f"opt({len(node.choices)}):{bodies}")
    return out


def signature(doc: Document | Expression) -> tuple[str, ...]:
    """Node-kind skeleton used to pick demonstrations of the same shape."""
    expr = doc.expr if isinstance(doc, Document) else doc
    kinds = _kinds(expr.items)
    if expr.length is not None:
        kinds.append("len")
    return tuple(kinds)
