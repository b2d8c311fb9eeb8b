"""Constraint metrics and generation statistics.

success rate   fraction of outputs matching their expression (pattern + length)
coverage       fraction of required concepts present among lemmatized output tokens
accuracy       fraction of option choices equal to the gold choice
avg try        mean attempts used by instances that succeeded
first SR       fraction of instances accepted on the first attempt
"""

from __future__ import annotations

import json
import string
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import EmptyEvalSet, LengthMismatch
from .expr import Expression, Literal, Mask, Options, normalize_ws, renumber
from .pattern import compile_expression, full_match, validate_output

_PUNCT = string.punctuation + "“”‘’«»…"
_VOWELS = set("aeiou")


@lru_cache(maxsize=1)
def irregular_forms() -> dict[str, str]:
    """Inflected form -> lemma table shipped in ``data/irregular.tsv``."""
    table = {}
    text = resources.files("rei").joinpath("data/irregular.tsv").read_text(encoding="utf-8")
    for line in text.splitlines():
        if line and not line.startswith("#"):
            form, lemma = line.split("\t")
            table[form] = lemma
    return table


def _has_vowel(stem: str) -> bool:
    return any(c in _VOWELS or c == "y" for c in stem)


def _consonant(c: str) -> bool:
    return c.isalpha() and c not in _VOWELS


def _restore(stem: str) -> str:
    """Undo spelling changes left behind by removing -ing / -ed."""
    if len(stem) == 2:
        return stem + "e"  # us(ed) -> use
    if len(stem) >= 4 and stem[-1] == stem[-2] and _consonant(stem[-1]) and stem[-1] not in "lsz":
        return stem[:-1]  # runn -> run
    if stem.endswith(("v", "c", "u", "dg", "rg")):
        return stem + "e"
    if len(stem) >= 3 and stem[-2] in _VOWELS and stem[-1] in "sz" and not stem.endswith(("us", "ss")):
        return stem + "e"  # rais -> raise
    if len(stem) >= 5 and stem.endswith("at") and _consonant(stem[-3]):
        return stem + "e"  # locat -> locate
    cvc = _consonant(stem[-3]) and stem[-2] in _VOWELS and _consonant(stem[-1]) and stem[-1] not in "wxy"
    if cvc and (len(stem) == 3 or (len(stem) == 4 and _consonant(stem[0]) and _consonant(stem[1]))):
        return stem + "e"  # mak -> make, smil -> smile
    return stem


def _lemma_step(w: str) -> str:
    table = irregular_forms()
    if w in table:
        return table[w]
    if len(w) > 4 and w.endswith("ies"):
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if len(w) > 3 and w.endswith("es"):
        return w[:-2] if w[:-2].endswith(("ss", "x", "z", "ch", "sh")) else w[:-1]
    if len(w) > 3 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    if w.endswith("ing") and len(w) > 4 and _has_vowel(w[:-3]):
        return _restore(w[:-3])
    if len(w) > 4 and w.endswith("ied"):
        return w[:-3] + "y"
    if w.endswith("ed") and not w.endswith("eed") and len(w) > 3 and _has_vowel(w[:-2]):
        return _restore(w[:-2])
    return w


def lemmatize(token: str) -> str:
    """Rule-based lemma of one token.

    The token is lowercased and loses edge punctuation plus any possessive
    ``'s``.  The first matching suffix rule is then applied until the token
    stops changing, so the result is a fixed point.
    """
    w = token.strip(_PUNCT + " ").lower()
    for tail in ("'s", "’s"):
        if w.endswith(tail) and len(w) > len(tail):
            w = w[: -len(tail)]
    prev = None
    while w != prev:
        prev, w = w, _lemma_step(w)
    return w


def lemma_set(text: str) -> set[str]:
    return {lemmatize(t) for t in text.split()} - {""}


# -- metrics ---------------------------------------------------------------


def success_rate(pairs) -> float:
    """Mean verdict over ``(expression, realized text)`` pairs; ``None`` text fails."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyEvalSet("success_rate needs at least one pair")
    ok = sum(text is not None and validate_output(expr, text).verdict for expr, text in pairs)
    return ok / len(pairs)


def concept_present(concept: str, lemmas: set[str]) -> bool:
    words = concept.split()
    return bool(words) and all(lemmatize(w) in lemmas for w in words)


def concept_coverage(concepts, outputs) -> float:
    """Average per-instance fraction of concepts found in the output."""
    concepts, outputs = list(concepts), list(outputs)
    if len(concepts) != len(outputs):
        raise LengthMismatch(f"{len(concepts)} concept lists vs {len(outputs)} outputs")
    if not concepts:
        raise EmptyEvalSet("concept_coverage needs at least one instance")
    total = 0.0
    for cs, out in zip(concepts, outputs):
        if not cs:
            raise EmptyEvalSet("instance with no concepts")
        lemmas = lemma_set(out or "")
        total += sum(concept_present(c, lemmas) for c in cs) / len(cs)
    return total / len(concepts)


def _trailing_text(body) -> str:
    tail = []
    for node in reversed(body):
        if isinstance(node, Mask):
            break
        tail.append(node.text if isinstance(node, Literal) else node.surface)
    return " ".join(reversed(tail))


def recover_choice(expr: Expression, output: str | None, group: int = 0) -> int | None:
    """Index of the choice in options group ``group`` that ``output`` realizes.

    A choice qualifies when the output matches the expression with the group
    replaced by that choice alone.  Ties go to the choice whose fixed ending
    the output ends with (longest ending first).
    """
    if output is None:
        return None
    groups = [i for i, n in enumerate(expr.items) if isinstance(n, Options)]
    if group >= len(groups):
        return None
    at = groups[group]
    opts = expr.items[at]
    hits = []
    for ch in opts.choices:
        items = list(expr.items[:at]) + list(ch.body) + list(expr.items[at + 1 :])
        restricted = renumber(items)
        if full_match(compile_expression(restricted), output):
            hits.append(ch.id)
    if len(hits) == 1:
        return hits[0]
    text = normalize_ws(output)
    endings = sorted(
        ((len(_trailing_text(opts.choices[i].body)), i) for i in hits),
        reverse=True,
    )
    for size, i in endings:
        if size and text.endswith(_trailing_text(opts.choices[i].body)):
            return i
    return hits[0] if hits else None


def choice_accuracy(results, gold) -> float:
    results, gold = list(results), list(gold)
    if len(results) != len(gold):
        raise LengthMismatch(f"{len(results)} results vs {len(gold)} gold labels")
    if not results:
        raise EmptyEvalSet("choice_accuracy needs at least one result")
    return sum(r is not None and r == g for r, g in zip(results, gold)) / len(results)


def try_stats(logs, k: int | None = None) -> tuple[float | None, float]:
    """``(avg_try, first_sr)``; avg_try is ``None`` when nothing succeeded."""
    logs = list(logs)
    if not logs:
        raise EmptyEvalSet("try_stats needs at least one log")
    used = [log.tries_used for log in logs if log.accepted is not None]
    if k is not None and any(n > k for n in used):
        raise ValueError(f"a log used more than k={k} tries")
    avg = sum(used) / len(used) if used else None
    first = sum(bool(log.first_try_success) for log in logs) / len(logs)
    return avg, first


@dataclass
class EvalSummary:
    n_instances: int
    success_rate: float
    first_sr: float
    avg_try: float | None = None
    coverage: float | None = None
    accuracy: float | None = None
    # externally computed quality scores (BLEU and the like) go here untouched
    external: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("success_rate", "first_sr", "coverage", "accuracy"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_table(self) -> str:
        def pct(v):
            return "-" if v is None else f"{100 * v:.1f}"

        cols = [
            ("N", str(self.n_instances)),
            ("SuR.", pct(self.success_rate)),
            ("Cov.", pct(self.coverage)),
            ("Acc.", pct(self.accuracy)),
            ("Avg. Try", "-" if self.avg_try is None else f"{self.avg_try:.2f}"),
            ("First SR.", pct(self.first_sr)),
        ]
        cols += [(k, str(v)) for k, v in sorted(self.external.items())]
        widths = [max(len(h), len(v)) for h, v in cols]
        head = "  ".join(h.rjust(w) for (h, _), w in zip(cols, widths))
        row = "  ".join(v.rjust(w) for (_, v), w in zip(cols, widths))
        return f"{head}\n{row}\n"
