"""Rejection-sampled generation and recursive decoding over options groups.

Backends follow the ``GeneratorBackend`` protocol.  The in-process
backends defined here need no model, so small runs stay reproducible.
"""

from __future__ import annotations

import itertools
import json
import random
import threading
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .annotate import extract_realization
from .errors import BackendFailure, DecodeFailure, InfeasibleLength, InvalidExpression
from .expr import (
    Choice,
    Document,
    Expression,
    Lexicon,
    Literal,
    Mask,
    Options,
    render_document,
    renumber,
)
from .pattern import ValidationReport, compile_expression, count_words, validate_output

FILLER = ("lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit")


@dataclass(frozen=True)
class GenerationConfig:
    max_tries: int = 512
    temperature: float = 0.7
    top_p: float = 0.95
    beam_size: int = 4
    beam_first: bool = True

    def __post_init__(self):
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")

    @classmethod
    def local(cls, **kw) -> "GenerationConfig":
        """Settings for a locally hosted model: many cheap samples, beam first."""
        return cls(**{"max_tries": 512, "beam_first": True, **kw})

    @classmethod
    def api(cls, **kw) -> "GenerationConfig":
        """Settings for a paid completion API: few retries, sampling only."""
        return cls(**{"max_tries": 8, "beam_first": False, **kw})


@dataclass(frozen=True)
class Request:
    doc: Document
    prompt: str
    config: GenerationConfig
    attempt: int = 0
    seed: int = 0
    beam: bool = False
    instance_id: str = ""


class GeneratorBackend(Protocol):
    supports_beam: bool
    concurrent_safe: bool

    def produce(self, request: Request) -> str: ...


@dataclass(frozen=True)
class Attempt:
    raw: str
    realized: str
    report: ValidationReport


@dataclass
class TrialLog:
    attempts: list = field(default_factory=list)
    accepted: str | None = None

    @property
    def tries_used(self) -> int:
        return len(self.attempts)

    @property
    def first_try_success(self) -> bool:
        return bool(self.attempts) and self.attempts[0].report.verdict

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "tries_used": self.tries_used,
            "first_try_success": self.first_try_success,
            "attempts": [{"raw": a.raw, "realized": a.realized, **a.report.to_dict()} for a in self.attempts],
        }


# -- seeds -----------------------------------------------------------------


def instance_seed(seed: int, instance_id: str) -> int:
    return seed ^ zlib.crc32(instance_id.encode("utf-8"))


def attempt_rng(seed: int, attempt: int) -> random.Random:
    # str seeds hash through sha512, independent of PYTHONHASHSEED
    return random.Random(f"{seed}/{attempt}")


def _sub_seed(seed: int, k: int) -> int:
    return seed if k == 0 else zlib.crc32(f"{seed}/sub{k}".encode())


# -- rejection sampling ----------------------------------------------------


def generate_with_rejection(
    doc: Document,
    backend: GeneratorBackend,
    cfg: GenerationConfig,
    *,
    instance_id: str = "",
    seed: int = 0,
) -> TrialLog:
    """Sample until a realization validates or ``cfg.max_tries`` is spent.

    Running out of tries is reported through ``log.accepted is None``; only
    backend errors raise (as :class:`BackendFailure`).
    """
    pattern = compile_expression(doc.expr)
    prompt = render_document(doc)
    log = TrialLog()
    for attempt in range(cfg.max_tries):
        req = Request(
            doc=doc,
            prompt=prompt,
            config=cfg,
            attempt=attempt,
            seed=seed,
            beam=attempt == 0 and cfg.beam_first and backend.supports_beam,
            instance_id=instance_id,
        )
        try:
            raw = backend.produce(req)
        except BackendFailure:
            raise
        except Exception as e:
            raise BackendFailure(f"backend raised {type(e).__name__}: {e}") from e
        realized = extract_realization(raw, doc.expr)
        report = validate_output(pattern, realized)
        log.attempts.append(Attempt(raw, realized, report))
        if report.verdict:
            log.accepted = realized
            break
    return log


# -- oracle and mock realizations ------------------------------------------


@dataclass(frozen=True)
class Hint:
    """Gold information for the oracle: chosen option and mask infills."""

    choice: int | None = None
    infill: Mapping[int, str] = field(default_factory=dict)


def _path(expr: Expression, hint: Hint | None) -> list:
    """Nodes along the realized path, option groups resolved to one choice."""
    out = []
    first = True
    for node in expr.items:
        if isinstance(node, Options):
            pick = hint.choice if hint and first and hint.choice is not None else 0
            if not 0 <= pick < len(node.choices):
                raise ValueError(f"hinted choice {pick} out of range")
            out.extend(node.choices[pick].body)
            first = False
        else:
            out.append(node)
    return out


def _fill(expr: Expression, hint: Hint | None = None, drop: frozenset = frozenset()) -> str:
    infill = dict(hint.infill) if hint else {}
    nodes = [n for i, n in enumerate(_path(expr, hint)) if i not in drop]
    fixed = 0
    free = []
    for n in nodes:
        if isinstance(n, Mask):
            if n.id in infill:
                fixed += count_words(infill[n.id])
            else:
                free.append(n.id)
        else:
            fixed += count_words(n.text if isinstance(n, Literal) else n.surface)
    if expr.length is None:
        budget = dict.fromkeys(free, 1)
    else:
        spare = expr.length - fixed
        if spare < 0 or (spare and not free):
            raise InfeasibleLength(f"length {expr.length} cannot hold {fixed} fixed words with {len(free)} free masks")
        base, extra = divmod(spare, len(free)) if free else (0, 0)
        budget = {m: base + (i < extra) for i, m in enumerate(free)}
    words = itertools.cycle(FILLER)
    parts = []
    for n in nodes:
        if isinstance(n, Mask):
            text = infill[n.id] if n.id in infill else " ".join(itertools.islice(words, budget[n.id]))
        else:
            text = n.text if isinstance(n, Literal) else n.surface
        if text.strip():
            parts.append(text.strip())
    return " ".join(parts)


def oracle_fill(doc: Document | Expression, hint: Hint | None = None) -> str:
    """Deterministic realization that always validates.

    Free masks share the spare word budget evenly, earlier masks taking the
    remainder; without a length constraint each free mask gets one word.
    """
    expr = doc.expr if isinstance(doc, Document) else doc
    return _fill(expr, hint)


def _corruptions(expr: Expression, good: str, rng: random.Random) -> list[str]:
    path = _path(expr, None)
    lex = [i for i, n in enumerate(path) if isinstance(n, Lexicon)]
    lit = [i for i, n in enumerate(path) if isinstance(n, Literal)]
    primary = []
    if expr.length is not None:
        primary.append(lambda: f"{good} {FILLER[0]}".strip())
    primary += [lambda i=i: _fill(expr, None, frozenset([i])) for i in lex]
    rng.shuffle(primary)
    fallback = [lambda i=i: _fill(expr, None, frozenset([i])) for i in lit]
    fallback.append(lambda: "")
    out = []
    for make in primary + fallback:
        try:
            out.append(make())
        except InfeasibleLength:
            pass
    return out


def mock_generate(doc: Document | Expression, p_valid: float, seed) -> str:
    """Oracle output with probability ``p_valid``, else a corrupted variant.

    Corruption drops a lexicon word or adds one word beyond the length
    constraint; literals are dropped only when neither applies.  When the
    expression accepts every string the oracle output is returned.
    """
    expr = doc.expr if isinstance(doc, Document) else doc
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    good = _fill(expr)
    if rng.random() < p_valid:
        return good
    pattern = compile_expression(expr)
    for bad in _corruptions(expr, good, rng):
        if not validate_output(pattern, bad).verdict:
            return bad
    return good


class OracleBackend:
    supports_beam = True
    concurrent_safe = True

    def __init__(self, hints: Mapping[str, Hint] | None = None):
        self.hints = dict(hints or {})

    def produce(self, request: Request) -> str:
        return oracle_fill(request.doc, self.hints.get(request.instance_id))


class MockBackend:
    supports_beam = False
    concurrent_safe = True

    def __init__(self, p_valid: float):
        if not 0 <= p_valid <= 1:
            raise ValueError("p_valid must be in [0, 1]")
        self.p_valid = p_valid

    def produce(self, request: Request) -> str:
        return mock_generate(request.doc, self.p_valid, attempt_rng(request.seed, request.attempt))


class ScriptedBackend:
    """Replays candidates per instance id, in order.

    Transcript files are JSONL: ``{"id": "...", "candidates": ["...", ...]}``.
    Every call is recorded in ``calls`` as ``(instance_id, prompt)``.
    """

    supports_beam = False
    concurrent_safe = True

    def __init__(self, transcript: Mapping[str, Sequence[str]]):
        self.transcript = {k: list(v) for k, v in transcript.items()}
        self.cursor: dict[str, int] = {}
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedBackend":
        script = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    rec = json.loads(line)
                    script[str(rec["id"])] = rec["candidates"]
        return cls(script)

    def produce(self, request: Request) -> str:
        with self._lock:
            queue = self.transcript.get(request.instance_id, [])
            i = self.cursor.get(request.instance_id, 0)
            if i >= len(queue):
                raise BackendFailure(f"script for {request.instance_id!r} exhausted after {i} candidates")
            self.cursor[request.instance_id] = i + 1
            self.calls.append((request.instance_id, request.prompt))
            return queue[i]


class _Serialized:
    def __init__(self, backend):
        self.backend = backend
        self.supports_beam = backend.supports_beam
        self.concurrent_safe = True
        self._lock = threading.Lock()

    def produce(self, request: Request) -> str:
        with self._lock:
            return self.backend.produce(request)


# -- recursive decoding ----------------------------------------------------


@dataclass
class Step:
    stage: str
    doc: Document
    log: TrialLog


@dataclass
class Decoded:
    text: str
    steps: list = field(default_factory=list)
    choices: list = field(default_factory=list)


def _fixed_text(items) -> str:
    return " ".join(n.text if isinstance(n, Literal) else n.surface for n in items)


def recursive_decode(
    doc: Document,
    backend: GeneratorBackend,
    cfg: GenerationConfig,
    *,
    instance_id: str = "",
    seed: int = 0,
    literal: bool = False,
    condition_remainder: bool = False,
) -> Decoded:
    """Solve option groups choice by choice, then pick among full realizations.

    For the first options group every choice is realized together with the
    text before the group; a second generation call then selects among the
    realized alternatives.  The remainder after the group is decoded the
    same way (left to right), or with a single plain generation call when
    ``literal`` is set.  ``condition_remainder`` appends the chosen text to
    the remainder's left context.

    A length constraint stays with the choices when nothing follows the
    group; otherwise the remainder receives whatever word budget is left.
    """
    result = Decoded("")
    calls = itertools.count()

    def generate(sub: Document, stage: str) -> str:
        log = generate_with_rejection(sub, backend, cfg, instance_id=instance_id, seed=_sub_seed(seed, next(calls)))
        result.steps.append(Step(stage, sub, log))
        if log.accepted is None:
            raise DecodeFailure(stage, sub, log)
        return log.accepted

    def solve(d: Document, stage: str) -> str:
        expr = d.expr
        if not expr.has_nonterminal:
            return _fixed_text(expr.items)
        at = next((i for i, n in enumerate(expr.items) if isinstance(n, Options)), None)
        if at is None:
            return generate(d, stage)
        before, group, after = expr.items[:at], expr.items[at], expr.items[at + 1 :]
        realized = []
        for ch in group.choices:
            sub = Document(d.prefix, renumber(list(before) + list(ch.body), None if after else expr.length), d.suffix)
            realized.append(solve(sub, f"{stage}/choice_{ch.id}"))
        try:
            pick = Expression([Options(Choice(i, [Literal(r)]) for i, r in enumerate(realized))])
        except InvalidExpression as e:
            raise DecodeFailure(f"{stage}/select", d) from e
        best = generate(Document(d.prefix, pick, d.suffix), f"{stage}/select")
        result.choices.append(realized.index(best))
        if not after:
            return best
        length = None
        if expr.length is not None and expr.length - count_words(best) > 0:
            length = expr.length - count_words(best)
        prefix = f"{d.prefix}{best} " if condition_remainder else d.prefix
        rest_doc = Document(prefix, renumber(after, length), d.suffix)
        rest = generate(rest_doc, f"{stage}/rest") if literal else solve(rest_doc, f"{stage}/rest")
        return " ".join(p for p in (best, rest) if p)

    try:
        result.text = solve(doc, "expression")
    except DecodeFailure as e:
        e.steps = result.steps
        raise
    return result


# -- batch runs ------------------------------------------------------------


@dataclass
class Outcome:
    instance_id: str
    output: str | None
    tries_used: int
    first_try_success: bool
    logs: list = field(default_factory=list)  # (stage, TrialLog)
    choices: list = field(default_factory=list)
    error: str | None = None

    @property
    def accepted(self) -> str | None:
        return self.output

    def record(self) -> dict:
        return {
            "id": self.instance_id,
            "output": self.output,
            "tries_used": self.tries_used,
            "first_try_success": self.first_try_success,
            "choices": self.choices,
            "error": self.error,
        }

    def log_record(self) -> dict:
        return {"id": self.instance_id, "steps": [{"stage": s, **log.to_dict()} for s, log in self.logs]}


def _run_one(iid: str, doc: Document, backend, cfg, seed: int, recursive: bool, decode_kw: dict) -> Outcome:
    s = instance_seed(seed, iid)
    if not recursive:
        log = generate_with_rejection(doc, backend, cfg, instance_id=iid, seed=s)
        return Outcome(iid, log.accepted, log.tries_used, log.first_try_success, [("expression", log)])
    try:
        dec = recursive_decode(doc, backend, cfg, instance_id=iid, seed=s, **decode_kw)
    except DecodeFailure as e:
        logs = [(st.stage, st.log) for st in e.steps]
        return Outcome(iid, None, sum(log.tries_used for _, log in logs), False, logs, error=str(e))
    logs = [(st.stage, st.log) for st in dec.steps]
    tries = sum(log.tries_used for _, log in logs)
    first = all(log.first_try_success for _, log in logs)
    return Outcome(iid, dec.text, tries, first, logs, dec.choices)


def run_batch(
    items: Sequence[tuple[str, Document]],
    backend: GeneratorBackend,
    cfg: GenerationConfig,
    *,
    seed: int = 0,
    jobs: int = 1,
    recursive: bool = False,
    **decode_kw,
) -> list[Outcome]:
    """Generate for many ``(instance_id, document)`` pairs.

    Results come back sorted by instance id whatever the parallelism; seeds
    derive from ids, so the schedule does not affect them.
    """
    if not backend.concurrent_safe and jobs > 1:
        backend = _Serialized(backend)

    def one(pair):
        iid, doc = pair
        return _run_one(iid, doc, backend, cfg, seed, recursive, decode_kw)

    if jobs <= 1:
        outcomes = [one(p) for p in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, items))
    return sorted(outcomes, key=lambda o: o.instance_id)
