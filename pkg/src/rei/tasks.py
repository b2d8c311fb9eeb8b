"""Convert raw dataset rows into constraint documents.

Raw rows are dicts (one JSON object per line).  Fields by task kind:

=====================  ==========================================================
kind                   fields (``?`` optional)
=====================  ==========================================================
anlg                   obs1, obs2, references?
anlg_length            obs1, obs2, length (or references)
anlg_lexicon           obs1, obs2, keyword (or references, heuristic)
anlg_length_lexicon    obs1, obs2, keyword, length (or references)
anli                   obs1, obs2, hyp1, hyp2, gold_choice?
commongen              concepts, ordered? (else aligned on references[0])
commongen_length       concepts, ordered?, length (or references)
storycloze_infill      context, endings (two), gold_choice?, references?
gigaword_length        text, length (or references)
mt_terms               source, terms, src_lang?, tgt_lang?, references?
=====================  ==========================================================

Every row also carries ``id``.  ``references`` may be given as a list or as
a single ``reference`` string.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConceptNotFound, MissingField
from .expr import Document, parse_document, render_document
from .metrics import lemmatize
from .pattern import count_words

log = logging.getLogger(__name__)

GIGAWORD_INSTRUCTION = "Summarize the aforementioned text in a single phrase."


class TaskKind(str, Enum):
    ANLG = "anlg"
    ANLG_LENGTH = "anlg_length"
    ANLG_LEXICON = "anlg_lexicon"
    ANLG_LENGTH_LEXICON = "anlg_length_lexicon"
    ANLI = "anli"
    COMMONGEN = "commongen"
    COMMONGEN_LENGTH = "commongen_length"
    STORYCLOZE_INFILL = "storycloze_infill"
    GIGAWORD_LENGTH = "gigaword_length"
    MT_TERMS = "mt_terms"


@dataclass(frozen=True)
class TaskInstance:
    id: str
    kind: TaskKind
    doc: Document
    references: tuple = ()
    gold_choice: int | None = None
    concepts: tuple | None = None
    keyword: str | None = None
    terms: tuple | None = None
    length: int | None = None
    contexts: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "document": render_document(self.doc),
            "references": list(self.references),
            "gold_choice": self.gold_choice,
            "concepts": None if self.concepts is None else list(self.concepts),
            "keyword": self.keyword,
            "terms": None if self.terms is None else list(self.terms),
            "length": self.length,
            "contexts": self.contexts,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TaskInstance":
        return cls(
            id=str(rec["id"]),
            kind=TaskKind(rec["kind"]),
            doc=parse_document(rec["document"], extended=True),
            references=tuple(rec.get("references") or ()),
            gold_choice=rec.get("gold_choice"),
            concepts=None if rec.get("concepts") is None else tuple(rec["concepts"]),
            keyword=rec.get("keyword"),
            terms=None if rec.get("terms") is None else tuple(rec["terms"]),
            length=rec.get("length"),
            contexts=rec.get("contexts") or {},
        )


def _strip_punct(token: str) -> str:
    return token.strip(string.punctuation + "“”‘’")


def align_concepts(lemmas, reference: str) -> list[str]:
    """Recover the order and surface form of concepts from a reference.

    Each concept claims the earliest unclaimed reference token with the same
    lemma; surfaces come back in reference order (serial = list index).
    """
    tokens = reference.split()
    token_lemmas = [lemmatize(t) for t in tokens]
    taken: set[int] = set()
    for concept in lemmas:
        target = lemmatize(concept)
        hit = next((i for i, lem in enumerate(token_lemmas) if i not in taken and lem == target), None)
        if hit is None:
            raise ConceptNotFound(concept)
        taken.add(hit)
    return [_strip_punct(tokens[i]) for i in sorted(taken)]


# frequent -ing/-ed words that are not verb forms
_NOT_VERBS = frozenset(
    "nothing something anything everything thing things during morning evening ceiling king "
    "wedding building bed red need seed feed speed hundred".split()
)


def guess_keyword(reference: str) -> str | None:
    """Heuristic stand-in for "first verb of the reference".

    Picks the first token ending in -ed/-ing whose lemma differs from it.
    No part-of-speech tagging is involved; pass ``keyword`` when it matters.
    """
    for token in reference.split():
        word = _strip_punct(token)
        low = word.lower()
        if low in _NOT_VERBS:
            continue
        if len(low) > 4 and low.endswith(("ed", "ing")) and lemmatize(low) != low:
            return word
    return None


def _require(row: dict, kind: TaskKind, name: str):
    value = row.get(name)
    if value is None or value == "" or value == []:
        raise MissingField(kind.value, name)
    return value


def _references(row: dict) -> tuple:
    refs = row.get("references")
    if refs is None and row.get("reference") is not None:
        refs = [row["reference"]]
    return tuple(refs or ())


def _length(row: dict, kind: TaskKind, refs: tuple) -> int:
    if row.get("length") is not None:
        return int(row["length"])
    if refs:
        return count_words(refs[0])
    raise MissingField(kind.value, "length")


def _lexicon_run(surfaces) -> str:
    """``<mask_0> w0(0) <mask_1> w1(1) ... <mask_k>``"""
    parts = ["<mask_0>"]
    for i, s in enumerate(surfaces):
        parts += [f"{s}({i})", f"<mask_{i + 1}>"]
    return " ".join(parts)


def _expr(body: str, length: int | None = None) -> str:
    tail = f" <length={length}>" if length is not None else ""
    return f"<expression> {body}{tail} </expression>"


def build_instance(kind: TaskKind | str, row: dict) -> TaskInstance:
    kind = TaskKind(kind)
    iid = str(_require(row, kind, "id"))
    refs = _references(row)
    extra: dict = {}
    gold = row.get("gold_choice")

    if kind in (TaskKind.ANLG, TaskKind.ANLG_LENGTH, TaskKind.ANLG_LEXICON, TaskKind.ANLG_LENGTH_LEXICON):
        o1, o2 = _require(row, kind, "obs1"), _require(row, kind, "obs2")
        extra["contexts"] = {"obs1": o1, "obs2": o2}
        body = "<mask_0>"
        if kind in (TaskKind.ANLG_LEXICON, TaskKind.ANLG_LENGTH_LEXICON):
            kw = row.get("keyword") or (guess_keyword(refs[0]) if refs else None)
            if not kw:
                raise MissingField(kind.value, "keyword")
            extra["keyword"] = kw
            body = _lexicon_run([kw])
        length = None
        if kind in (TaskKind.ANLG_LENGTH, TaskKind.ANLG_LENGTH_LEXICON):
            length = extra["length"] = _length(row, kind, refs)
        text = f"{o1} {_expr(body, length)} {o2}"

    elif kind is TaskKind.ANLI:
        o1, o2 = _require(row, kind, "obs1"), _require(row, kind, "obs2")
        h1, h2 = _require(row, kind, "hyp1"), _require(row, kind, "hyp2")
        extra["contexts"] = {"obs1": o1, "obs2": o2, "hyp1": h1, "hyp2": h2}
        body = f"<options> <choice_0> {h1} </choice_0> <choice_1> {h2} </choice_1> </options>"
        text = f"{o1} {_expr(body)} {o2}"

    elif kind in (TaskKind.COMMONGEN, TaskKind.COMMONGEN_LENGTH):
        concepts = list(_require(row, kind, "concepts"))
        ordered = row.get("ordered")
        if ordered is None:
            if not refs:
                raise MissingField(kind.value, "references")
            ordered = align_concepts(concepts, refs[0])
        extra["concepts"] = tuple(concepts)
        extra["terms"] = tuple(ordered)
        length = None
        if kind is TaskKind.COMMONGEN_LENGTH:
            length = extra["length"] = _length(row, kind, refs)
        text = _expr(_lexicon_run(ordered), length)

    elif kind is TaskKind.STORYCLOZE_INFILL:
        context = _require(row, kind, "context")
        endings = list(_require(row, kind, "endings"))
        if len(endings) != 2:
            raise MissingField(kind.value, "endings[2]")
        extra["contexts"] = {"context": context, "endings": endings}
        body = (
            f"<mask_0> <options> <choice_0> {endings[0]} </choice_0> "
            f"<choice_1> {endings[1]} </choice_1> </options>"
        )
        text = f"{context} {_expr(body)}"

    elif kind is TaskKind.GIGAWORD_LENGTH:
        source = _require(row, kind, "text")
        length = extra["length"] = _length(row, kind, refs)
        extra["contexts"] = {"text": source}
        text = f"{source}\n {GIGAWORD_INSTRUCTION}\n{_expr('<mask_0>', length)}"

    else:  # MT_TERMS
        source = _require(row, kind, "source")
        terms = list(_require(row, kind, "terms"))
        src, tgt = row.get("src_lang", "English"), row.get("tgt_lang", "German")
        extra["terms"] = tuple(terms)
        extra["contexts"] = {"source": source}
        text = f"Translate from {src} to {tgt}:\n\n{src}: {source}\n{tgt}: {_expr(_lexicon_run(terms))}"

    return TaskInstance(
        id=iid,
        kind=kind,
        doc=parse_document(text),
        references=refs,
        gold_choice=None if gold is None else int(gold),
        **extra,
    )


def convert_rows(kind: TaskKind | str, rows):
    """Yield instances, skipping rows whose concepts cannot be aligned."""
    for row in rows:
        try:
            yield build_instance(kind, row)
        except ConceptNotFound as e:
            log.warning("row %s skipped: %s", row.get("id"), e)
