"""Command-line interface.

Machine-readable output (JSON, DOT, CSV) goes to stdout or to the requested
file; progress and errors go to stderr.  Exit status is 0 on success, 1 when
the command ran but failed (invalid script, execution error, fixture miss),
and 2 for usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .backends import AuthError, Backend, HttpBackendConfig, InferenceError, resolve_backend
from .backends.http import DEFAULT_API_KEY_ENV
from .bench import SCHEMES, fixture_planner, run_bench
from .lwt import ParseError, parse_script, to_dot, validate_script
from .metrics import PriceTable, count_prompt_cost, estimate_cost, report_csv, report_json, report_table
from .pipeline import AblationConfig, run_knot
from .runtime import ExecutionError, execute_parallel, execute_script
from .tasks import TASKS, UnknownTask, UnsupportedSize, get_task

log = logging.getLogger("knot")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass
class CliConfig:
    """Settings shared by the subcommands.

    Resolved with precedence: command-line flags, then the ``--config`` JSON
    file, then ``KNOT_*`` environment variables, then these defaults.
    """

    backend: str = "oracle"
    planner: str = "fixture"
    model: str = "gpt-3.5-turbo"
    base_url: str = "https://api.openai.com/v1"
    temperature: float = 0.0
    max_tokens: int = 4096
    api_key_env: str = DEFAULT_API_KEY_ENV
    parallelism: int = 1
    prices: str | None = None

    @classmethod
    def resolve(cls, args: argparse.Namespace, environ=os.environ) -> "CliConfig":
        file_values: dict[str, Any] = {}
        if getattr(args, "config", None):
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        values = {}
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            env = environ.get(f"KNOT_{f.name.upper()}")
            if flag is not None:
                values[f.name] = flag
            elif f.name in file_values:
                values[f.name] = file_values[f.name]
            elif env is not None:
                values[f.name] = env
        cfg = cls(**values)
        cfg.temperature = float(cfg.temperature)
        cfg.max_tokens = int(cfg.max_tokens)
        cfg.parallelism = int(cfg.parallelism)
        return cfg

    def http_config(self) -> HttpBackendConfig:
        return HttpBackendConfig(base_url=self.base_url, model=self.model, api_key_env=self.api_key_env,
                                 temperature=self.temperature, max_output_tokens=self.max_tokens)

    def make_backend(self) -> Backend:
        return resolve_backend(self.backend, http_config=self.http_config())

    def make_planner(self, backend: Backend) -> Backend | None:
        """``None`` means plan from the bundled fixtures."""
        if self.planner == "fixture":
            return None
        if self.planner == "same":
            return backend
        return resolve_backend(self.planner, http_config=self.http_config())

    def price_table(self) -> PriceTable | None:
        if not self.prices:
            return None
        return PriceTable.from_dict(json.loads(Path(self.prices).read_text(encoding="utf-8")))


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _bindings(pairs: Sequence[str] | None) -> dict[str, str]:
    out = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"--bind expects NAME=VALUE, got {pair!r}")
        out[name] = value
    return out


def _read_script(path: str):
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    return parse_script(data)


def cmd_run(args, cfg: CliConfig) -> int:
    backend = cfg.make_backend()
    abl = AblationConfig.from_mask(args.ablation)
    if args.script:
        script = _read_script(args.script)
        bindings = _bindings(args.bind)
        if args.query is not None:
            bindings.setdefault("input", args.query)
        run = execute_parallel if cfg.parallelism > 1 else execute_script
        kwargs = {"max_in_flight": cfg.parallelism} if cfg.parallelism > 1 else {}
        trace = run(script, bindings, backend, **kwargs)
        doc = {"answer": trace.final_answer, "outputs": trace.outputs}
    else:
        if not args.task:
            raise UsageError("run needs a task name or --script")
        task = get_task(args.task)
        if args.query is not None:
            planner = cfg.make_planner(backend)
            if planner is None:
                raise UsageError("a free-form --query needs --planner same|http|replay:PATH")
            query, bindings = args.query, {"input": args.query, **_bindings(args.bind)}
            instance = None
        else:
            size = args.size if args.size is not None else task.sizes[0]
            instance = task.generate(size, args.seed, strict_size=not args.any_size)
            query, bindings = task.render(instance)
            planner = cfg.make_planner(backend) or fixture_planner(task, instance)
        result = run_knot(query, bindings, task.prompt_parts(), abl, plan_backend=planner,
                          exec_backend=backend, max_in_flight=cfg.parallelism)
        trace = result.trace
        doc = {"task": task.name, "query": query, "answer": result.answer,
               "usage": asdict(result.usage)}
        if instance is not None:
            truth = task.ground_truth(instance)
            doc.update(size=instance.size, seed=instance.seed, ground_truth=task.format_answer(truth),
                       correct=task.is_correct(result.answer, instance))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fp:
            trace.write_jsonl(fp)
        log.info("trace written to %s", args.trace)
    _emit(json.dumps(doc, ensure_ascii=False, indent=2), None)
    return EXIT_OK


def _bench(args, cfg: CliConfig, ablations: Sequence[AblationConfig], schemes: Sequence[str]) -> int:
    backend = cfg.make_backend()
    planner = cfg.make_planner(backend)
    results = []
    for abl in ablations:
        results += run_bench(args.tasks, args.sizes, schemes, backend, n=args.n, seed=args.seed,
                             planner=planner, abl=abl, workers=cfg.parallelism,
                             round_intermediate=not args.round_final, strict_size=not args.any_size)
    log.info("\n%s", report_table(results))
    extra: dict[str, Any] = {"backend": cfg.backend, "n": args.n, "seed": args.seed}
    prices = cfg.price_table()
    if prices is not None:
        extra["cost"] = {r.label + f"/{r.task}/{r.size}": estimate_cost(r.usage, prices) for r in results}
    _emit(report_json(results, samples=not args.summary, **extra), args.out)
    if args.csv:
        Path(args.csv).write_text(report_csv(results), encoding="utf-8")
        log.info("wrote %s", args.csv)
    return EXIT_OK


def cmd_bench(args, cfg: CliConfig) -> int:
    return _bench(args, cfg, [AblationConfig.from_mask(args.ablation)], args.schemes)


ABLATION_MASKS = ("111111", "011111", "101111", "110111", "111011", "111101", "111110")


def cmd_ablate(args, cfg: CliConfig) -> int:
    masks = args.masks or list(ABLATION_MASKS)
    return _bench(args, cfg, [AblationConfig.from_mask(m) for m in masks], ["knot"])


def cmd_validate(args, cfg: CliConfig) -> int:
    script = _read_script(args.path)
    bound = args.inputs.split(",") if args.inputs is not None else script.named_inputs
    report = validate_script(script, [b for b in bound if b])
    doc = {"path": args.path, "instructions": len(script.instructions), **report.to_dict()}
    _emit(json.dumps(doc, indent=2), None)
    log.info("%d errors, %d warnings", len(report.errors), len(report.warnings))
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_graph(args, cfg: CliConfig) -> int:
    script = _read_script(args.path)
    _emit(to_dot(script, name=args.name), args.out)
    return EXIT_OK


def cmd_record(args, cfg: CliConfig) -> int:
    if cfg.backend.partition(":")[0] in ("replay", "record"):
        raise UsageError("record takes the live backend via --backend (oracle or http)")
    recorder = resolve_backend(f"record:{args.fixtures}", http_config=cfg.http_config(),
                               record_from=cfg.backend)
    planner = cfg.make_planner(recorder)
    results = run_bench(args.tasks, args.sizes, ["knot"], recorder, n=args.n, seed=args.seed,
                        planner=planner, workers=cfg.parallelism, strict_size=not args.any_size)
    log.info("\n%s", report_table(results))
    _emit(json.dumps({"fixtures": args.fixtures, "pairs": len(recorder)}), None)
    return EXIT_OK


def cmd_cost(args, cfg: CliConfig) -> int:
    rows = {}
    for name in args.tasks:
        rows[name] = count_prompt_cost(get_task(name).prompt_parts()).to_dict()
    _emit(json.dumps(rows, indent=2), None)
    return EXIT_OK


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("backend")
    g.add_argument("--backend", help="oracle (default), http, replay:PATH or record:PATH")
    g.add_argument("--planner", help="fixture (default: bundled plans/scripts), same, http or replay:PATH")
    g.add_argument("--model")
    g.add_argument("--base-url", dest="base_url")
    g.add_argument("--temperature", type=float)
    g.add_argument("--max-tokens", dest="max_tokens", type=int)
    g.add_argument("--api-key-env", dest="api_key_env",
                   help=f"environment variable holding the API key (default {DEFAULT_API_KEY_ENV})")
    g.add_argument("-j", "--parallelism", type=int, help="concurrent inferences / bench workers")
    g.add_argument("--prices", help="JSON price table {input_per_1k, output_per_1k}")
    g.add_argument("--config", help="JSON file with default settings")


def _add_grid_flags(p: argparse.ArgumentParser, *, schemes: bool) -> None:
    p.add_argument("--tasks", nargs="+", default=list(TASKS), metavar="TASK")
    p.add_argument("--sizes", nargs="+", type=int, metavar="N", help="default: each task's sizes")
    if schemes:
        p.add_argument("--schemes", nargs="+", default=["knot"], choices=SCHEMES)
        p.add_argument("--ablation", default="111111", help="six 0/1 flags, 1 keeps the component")
    p.add_argument("-n", type=int, default=100, help="samples per cell (default 100)")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--any-size", action="store_true", help="allow sizes outside the task's set")
    p.add_argument("--round-final", action="store_true",
                   help="arithmetic ground truth rounds only the final value")
    p.add_argument("--summary", action="store_true", help="omit per-sample records")
    p.add_argument("-o", "--out", help="report JSON path (default stdout)")
    p.add_argument("--csv", help="also write an accuracy grid as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knot",
        description="Plan, translate and execute LWT scripts as networks of single-step inferences.",
        epilog=f"Live runs use --backend http and read the API key from ${DEFAULT_API_KEY_ENV}.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one task instance or execute one script")
    p.add_argument("task", nargs="?", help=f"one of: {', '.join(TASKS)}")
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--any-size", action="store_true")
    p.add_argument("--query", help="free-form query (needs a planner) or the script's {(input)}")
    p.add_argument("--script", help="execute this LWT file directly ('-' for stdin)")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE", help="named input for the script")
    p.add_argument("--ablation", default="111111")
    p.add_argument("--trace", help="write the execution trace as JSON Lines")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="score schemes over a task/size grid")
    _add_grid_flags(p, schemes=True)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ablate", help="bench the knot scheme under ablation masks")
    _add_grid_flags(p, schemes=False)
    p.add_argument("--masks", nargs="+", help=f"default: {' '.join(ABLATION_MASKS)}")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("validate", help="parse and validate an LWT file")
    p.add_argument("path")
    p.add_argument("--inputs", help="comma-separated bound input names (default: all used)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("graph", help="emit the dependency graph of an LWT file as DOT")
    p.add_argument("path")
    p.add_argument("--name", default="lwt")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("record", help="run tasks and record every exchange to a fixture file")
    p.add_argument("fixtures", help="JSON Lines file to append to")
    _add_grid_flags(p, schemes=False)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("cost", help="character counts of constant and task-specific prompts")
    p.add_argument("--tasks", nargs="+", default=list(TASKS))
    p.set_defaults(func=cmd_cost)
    return parser


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        cfg = CliConfig.resolve(args)
        return args.func(args, cfg)
    except (UsageError, UnknownTask, UnsupportedSize) as exc:
        parser.print_usage(sys.stderr)
        print(f"knot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"knot: parse error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except AuthError as exc:
        print(f"knot: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (ExecutionError, InferenceError) as exc:
        print(f"knot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (OSError, ValueError) as exc:
        print(f"knot: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
