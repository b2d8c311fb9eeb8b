"""Command line for the constraint-expression toolkit.

Bad input exits with status 1; a failing generation backend exits with 2.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .api import ApiConfig, HttpBackend
from .engine import GenerationConfig, Hint, MockBackend, OracleBackend, ScriptedBackend, run_batch
from .errors import BackendFailure, ParseError, ReiError
from .expr import Lexicon, Literal, Mask, Options, parse_document
from .metrics import EvalSummary, choice_accuracy, concept_coverage, recover_choice, success_rate, try_stats
from .pattern import compile_expression, validate_output
from .prompt import Demonstration, build_fewshot_prompt, load_demos
from .tasks import TaskInstance, TaskKind, convert_rows

log = logging.getLogger("rei")

BACKENDS = ("oracle", "mock", "scripted", "http")


class InputError(ReiError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are input errors; 2 is reserved for backend failures
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    task: str | None
    instances: str
    backend: str
    config: dict
    outputs: str
    logs: str | None
    seed: int
    jobs: int
    recursive: bool = False
    options: dict = field(default_factory=dict)

    def dump(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


# -- helpers ---------------------------------------------------------------


def _node_dict(node) -> dict:
    if isinstance(node, Mask):
        return {"mask": node.id}
    if isinstance(node, Literal):
        return {"literal": node.text}
    if isinstance(node, Lexicon):
        return {"lexicon": node.surface, "serial": node.serial}
    assert isinstance(node, Options)
    return {"options": [{"choice": ch.id, "body": [_node_dict(n) for n in ch.body]} for ch in node.choices]}


def document_dict(doc) -> dict:
    return {
        "prefix": doc.prefix,
        "items": [_node_dict(n) for n in doc.expr.items],
        "length": doc.expr.length,
        "suffix": doc.suffix,
        "extended": doc.expr.extended,
    }


def _text_arg(args, name="text") -> str:
    value = getattr(args, name)
    path = getattr(args, f"{name}_file", None)
    if path:
        with open(path, encoding="utf-8") as f:
            return f.read()
    if value is None:
        raise InputError(f"give {name.upper()} or --{name.replace('_', '-')}-file")
    return value


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise InputError(f"{path}:{n}: invalid JSON: {e}") from e
    return rows


def _write_jsonl(path: str, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _load_instances(path: str, task: str | None) -> list[TaskInstance]:
    out = []
    for n, rec in enumerate(_read_jsonl(path), 1):
        try:
            inst = TaskInstance.from_record(rec)
        except ParseError as e:
            raise InputError(f"{path}:{n}: record {rec.get('id')!r}: {e}") from e
        except (KeyError, ValueError) as e:
            raise InputError(f"{path}:{n}: record {rec.get('id')!r}: {e}") from e
        if task is None or inst.kind.value == task:
            out.append(inst)
    return out


def _emit(obj):
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


# -- subcommands -----------------------------------------------------------


def cmd_parse(args) -> int:
    doc = parse_document(_text_arg(args), extended=args.extended)
    _emit(document_dict(doc))
    return 0


def cmd_compile(args) -> int:
    doc = parse_document(_text_arg(args), extended=args.extended)
    pat = compile_expression(doc.expr)
    _emit({"regex_source": pat.regex_source, "required_word_count": pat.required_word_count})
    return 0


def cmd_validate(args) -> int:
    doc = parse_document(_text_arg(args), extended=True)
    report = validate_output(doc.expr, _text_arg(args, "candidate"))
    _emit(report.to_dict())
    return 0


def cmd_convert(args) -> int:
    rows = _read_jsonl(args.input)
    instances = []
    for n, row in enumerate(rows, 1):
        try:
            instances.extend(convert_rows(args.task, [row]))
        except (ReiError, ValueError, KeyError) as e:
            raise InputError(f"{args.input}:{n}: record {row.get('id')!r}: {e}") from e
    _write_jsonl(args.output, (inst.to_record() for inst in instances))
    if args.demos_output:
        demos = []
        for inst in instances:
            ref = next((r for r in inst.references if validate_output(inst.doc.expr, r).verdict), None)
            if ref is None:
                continue
            demos.append(Demonstration.from_realization(inst.doc, ref, zero_based=args.zero_based_labels))
        _write_jsonl(args.demos_output, ({"input": d.input, "output": d.output} for d in demos))
    print(f"converted {len(instances)} of {len(rows)} rows", file=sys.stderr)
    return 0


def cmd_prompt(args) -> int:
    doc = parse_document(_text_arg(args), extended=True)
    print(build_fewshot_prompt(doc, load_demos(args.demos), args.shots))
    return 0


def _config(args) -> GenerationConfig:
    base = GenerationConfig.api() if args.backend == "http" else GenerationConfig.local()
    kw = {}
    for name in ("max_tries", "temperature", "top_p", "beam_size"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    if args.no_beam_first:
        kw["beam_first"] = False
    return GenerationConfig(**{**asdict(base), **kw})


def _backend(args, instances):
    if args.backend == "oracle":
        return OracleBackend({i.id: Hint(choice=i.gold_choice) for i in instances})
    if args.backend == "mock":
        return MockBackend(args.p_valid)
    if args.backend == "scripted":
        if not args.script:
            raise InputError("--backend scripted needs --script")
        return ScriptedBackend.from_jsonl(args.script)
    if not args.demos:
        raise InputError("--backend http needs --demos")
    api = ApiConfig(
        base_url=args.api_base,
        model_name=args.model,
        auth_token_env=args.token_env,
        transport_retries=args.transport_retries,
    )
    backend = HttpBackend(api, load_demos(args.demos), args.shots)
    for inst in instances:  # fail fast on missing demonstrations
        backend.prompt_for(inst.doc)
    return backend


def _run(args, recursive: bool) -> int:
    instances = _load_instances(args.instances, args.task)
    cfg = _config(args)
    backend = _backend(args, instances)
    options = {"p_valid": args.p_valid} if args.backend == "mock" else {}
    kw = {}
    if recursive:
        kw = {"literal": args.strict_literal_alg1, "condition_remainder": args.condition_remainder}
        options.update(kw)
    outcomes = run_batch(
        [(i.id, i.doc) for i in instances],
        backend,
        cfg,
        seed=args.seed,
        jobs=args.jobs,
        recursive=recursive,
        **kw,
    )
    _write_jsonl(args.output, (o.record() for o in outcomes))
    logs_path = args.logs or args.output + ".logs.jsonl"
    _write_jsonl(logs_path, (o.log_record() for o in outcomes))
    RunManifest(
        task=args.task,
        instances=args.instances,
        backend=args.backend,
        config=asdict(cfg),
        outputs=args.output,
        logs=logs_path,
        seed=args.seed,
        jobs=args.jobs,
        recursive=recursive,
        options=options,
    ).dump(args.output + ".manifest.json")
    if outcomes:
        # recursive runs sum tries over several capped steps
        avg, first = try_stats(outcomes, None if recursive else cfg.max_tries)
        ok = sum(o.output is not None for o in outcomes)
        avg_s = "-" if avg is None else f"{avg:.2f}"
        print(f"{ok}/{len(outcomes)} accepted  avg_try {avg_s}  first_sr {first:.3f}", file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    return _run(args, recursive=False)


def cmd_decode(args) -> int:
    return _run(args, recursive=True)


def evaluate(instances, records, k: int | None = None) -> EvalSummary:
    by_id = {str(r["id"]): r for r in records}
    missing = [i.id for i in instances if i.id not in by_id]
    if missing:
        raise InputError(f"no output for instance(s) {missing[:5]}")
    rows = [(i, by_id[i.id]) for i in instances]

    class _Log:
        def __init__(self, rec):
            self.accepted = rec.get("output")
            self.tries_used = rec.get("tries_used", 1)
            self.first_try_success = rec.get("first_try_success", False)

    sr = success_rate((i.doc.expr, r.get("output")) for i, r in rows)
    avg, first = try_stats([_Log(r) for _, r in rows], k)
    cov_rows = [(i.concepts, r.get("output")) for i, r in rows if i.concepts]
    coverage = concept_coverage(*zip(*cov_rows)) if cov_rows else None
    acc_rows = [(recover_choice(i.doc.expr, r.get("output")), i.gold_choice) for i, r in rows if i.gold_choice is not None]
    accuracy = choice_accuracy(*zip(*acc_rows)) if acc_rows else None
    return EvalSummary(
        n_instances=len(rows),
        success_rate=sr,
        first_sr=first,
        avg_try=avg,
        coverage=coverage,
        accuracy=accuracy,
    )


def cmd_eval(args) -> int:
    instances = _load_instances(args.instances, args.task)
    summary = evaluate(instances, _read_jsonl(args.outputs), args.max_tries)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(summary.to_json() + "\n")
    sys.stdout.write(summary.to_table())
    return 0


# -- argument parsing ------------------------------------------------------


def _add_text(p, name="text", help="document text containing one <expression>"):
    p.add_argument(name, nargs="?", help=help)
    p.add_argument(f"--{name.replace('_', '-')}-file", help=f"read {name} from a file instead")


def _add_run_flags(p):
    p.add_argument("--instances", required=True, help="instance JSONL (from `rei convert`)")
    p.add_argument("--output", required=True, help="outputs JSONL")
    p.add_argument("--logs", help="trial logs JSONL (default: OUTPUT.logs.jsonl)")
    p.add_argument("--task", choices=[k.value for k in TaskKind], help="only instances of this kind")
    p.add_argument("--backend", choices=BACKENDS, default="oracle")
    p.add_argument("--max-tries", type=int, help="rejection-sampling cap k (default 512, or 8 for http)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--top-p", type=float)
    p.add_argument("--beam-size", type=int)
    p.add_argument("--no-beam-first", action="store_true", help="sample from the first attempt on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--p-valid", type=float, default=0.5, help="mock backend validity probability")
    p.add_argument("--script", help="scripted backend transcript JSONL")
    p.add_argument("--demos", help="demonstration pool JSONL (http backend)")
    p.add_argument("--shots", type=int, default=8)
    p.add_argument("--api-base", default=ApiConfig.base_url)
    p.add_argument("--model", default=ApiConfig.model_name)
    p.add_argument("--token-env", default=ApiConfig.auth_token_env, help="env var holding the API token")
    p.add_argument("--transport-retries", type=int, default=ApiConfig.transport_retries)
    p.add_argument("--zero-based-labels", action="store_true", help="accepted for symmetry; labels are stripped either way")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rei", description=__doc__.splitlines()[0].rstrip("."), allow_abbrev=False)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser = functools.partial(sub.add_parser, allow_abbrev=False)

    p = sub.add_parser("parse", help="print the AST of a document")
    _add_text(p)
    p.add_argument("--extended", action="store_true", help="allow several options groups")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("compile", help="print the anchored pattern and word-count requirement")
    _add_text(p)
    p.add_argument("--extended", action="store_true")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", help="check a candidate realization against an expression")
    _add_text(p)
    _add_text(p, "candidate", help="realized text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("convert", help="raw task rows -> instance JSONL")
    p.add_argument("--task", required=True, choices=[k.value for k in TaskKind])
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--demos-output", help="also write labeled demonstrations built from references")
    p.add_argument("--zero-based-labels", action="store_true", help="number word labels from 0")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("prompt", help="build a few-shot prompt for one document")
    _add_text(p)
    p.add_argument("--demos", required=True)
    p.add_argument("--shots", type=int, default=8)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("generate", help="rejection-sampled generation over instances")
    _add_run_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decode-recursive", help="generation with recursive decoding of options")
    _add_run_flags(p)
    p.add_argument("--strict-literal-alg1", action="store_true", help="decode the remainder with one plain call")
    p.add_argument("--condition-remainder", action="store_true", help="prepend the chosen text to the remainder's context")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score outputs against their instances")
    p.add_argument("--instances", required=True)
    p.add_argument("--outputs", required=True)
    p.add_argument("--task", choices=[k.value for k in TaskKind])
    p.add_argument("--report", help="write the summary as JSON here")
    p.add_argument("--max-tries", type=int)
    p.set_defaults(func=cmd_eval)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # help output and usage errors
        return e.code if isinstance(e.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except BackendFailure as e:
        print(f"rei: backend failure: {e}", file=sys.stderr)
        return 2
    except (ReiError, ValueError, KeyError, OSError) as e:
        print(f"rei: error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
