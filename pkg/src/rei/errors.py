class ReiError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ReiError, ValueError):
    """A document could not be parsed.

    ``offset`` is the UTF-8 byte offset of the offending text in the raw input.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.message = message
        self.offset = offset


class UnbalancedTags(ParseError):
    pass


class NonSequentialMaskIds(ParseError):
    pass


class DuplicateLengthLabel(ParseError):
    pass


class NestedOptions(ParseError):
    pass


class MalformedLabel(ParseError):
    pass


class MultipleOptions(ParseError):
    """More than one options group outside extended mode."""


class InvalidExpression(ReiError, ValueError):
    """An AST built in code violates an invariant the parser would enforce."""


class AlreadyLabeled(ReiError, ValueError):
    pass


class MissingExpressionSpan(ReiError, ValueError):
    pass


class InfeasibleLength(ReiError, ValueError):
    pass


class BackendFailure(ReiError, RuntimeError):
    """Transport or backend error, as opposed to a constraint failure."""


class AuthMissing(BackendFailure):
    pass


class HttpError(BackendFailure):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class RequestTimeout(BackendFailure):
    pass


class DecodeFailure(ReiError):
    """Recursive decoding could not realize one of its sub-expressions."""

    def __init__(self, stage: str, document, log=None):
        super().__init__(f"no valid realization for {stage}")
        self.stage = stage
        self.document = document
        self.log = log
        self.steps = []


class NotEnoughDemos(ReiError, ValueError):
    pass


class UnterminatedCompletion(ReiError, ValueError):
    pass


class MissingField(ReiError, KeyError):
    def __init__(self, kind, name: str):
        super().__init__(f"{kind}: missing field {name!r}")
        self.kind = kind
        self.name = name

    def __str__(self):
        return self.args[0]


class ConceptNotFound(ReiError, ValueError):
    def __init__(self, lemma: str):
        super().__init__(f"concept {lemma!r} not found in reference")
        self.lemma = lemma


class EmptyEvalSet(ReiError, ValueError):
    pass


class LengthMismatch(ReiError, ValueError):
    pass
