"""Markup constraints for text generation, compiled to regular expressions."""

from .annotate import extract_realization, label_realization
from .engine import (
    GenerationConfig,
    Hint,
    MockBackend,
    OracleBackend,
    ScriptedBackend,
    TrialLog,
    generate_with_rejection,
    oracle_fill,
    recursive_decode,
    run_batch,
)
from .expr import Document, Expression, parse_document, parse_expression, render_document, render_expression
from .metrics import EvalSummary, choice_accuracy, concept_coverage, lemmatize, success_rate, try_stats
from .pattern import compile_expression, count_words, full_match, validate_output
from .prompt import build_fewshot_prompt, parse_completion
from .tasks import TaskInstance, TaskKind, build_instance

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
