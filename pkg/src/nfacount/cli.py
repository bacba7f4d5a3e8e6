"""Command-line front end: ``nfacount <command> ...``.

Data goes to stdout, diagnostics to stderr.  Exit codes: 0 success, 2 usage
error, 3 unreadable or malformed input, 4 contract violation (for example
``count --exact`` on an ambiguous automaton).
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from fractions import Fraction
from typing import Sequence, TextIO

from scipy import stats as scipy_stats

from .automata import Nfa, Word, accepts_some_word, is_unambiguous, parse_nfa, remove_epsilon, serialize_nfa
from .enumeration import nfa_session, ufa_session
from .errors import ContractViolation, EmptyLanguageError, OracleCapExceeded, ParseError
from .exact import DEFAULT_CAP, brute_force_count, brute_force_language, count_exact_ufa
from .fpras import (
    GENERATION_RETRIES,
    R5,
    Budget,
    approximate_count,
    pplvug_generate,
    pplvug_preprocess,
)
from .randomness import stream
from .reductions import binarize, dnf_to_nfa, obdd_to_nfa, parse_dnf, parse_graph, parse_obdd, rpq_to_nfa
from .unroll import build_unrolled, trim

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CONTRACT = 0, 2, 3, 4
SCHEMA_VERSION = 1
DEFAULT_BUDGET_WARNING = 10**6


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_nfa(path: str) -> Nfa:
    return parse_nfa(_read(path))


def format_word(word: Sequence[str]) -> str:
    """Single-character symbols are concatenated, longer ones space-separated."""
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return " ".join(word)


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _budget(args: argparse.Namespace) -> Budget | None:
    if args.budget_s is None and args.budget_c is None:
        return None
    if args.budget_s is None or args.budget_c is None:
        raise argparse.ArgumentTypeError("--budget-s and --budget-c must be given together")
    return Budget.override(args.budget_s, args.budget_c, args.accept_scale)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _binary_view(a: Nfa, n: int):
    """The automaton and length the sampling core runs on, plus a decoder."""
    a = remove_epsilon(a)
    if len(a.alphabet) <= 2:
        return a, n, None
    b = binarize(a, n)
    return b.nfa, b.length, b


def _approx(a: Nfa, n: int, args: argparse.Namespace, seed: int):
    target, length, _ = _binary_view(a, n)
    budget = _budget(args)
    if budget is None and not args.oracle:
        k = Budget.for_instance(length, len(target.states), args.eps).sample_size
        if k > DEFAULT_BUDGET_WARNING:
            _warn(f"the default budget needs {k} samples per vertex; see --budget-s/--budget-c")
    return approximate_count(target, length, args.eps, seed, budget, args.threads, args.oracle)


def _count_method(a: Nfa, args: argparse.Namespace) -> str:
    """Without an explicit method: sampling options imply ``approx``, else exact if possible."""
    if args.method != "auto":
        return args.method
    if args.oracle or args.budget_s is not None or args.budget_c is not None:
        return "approx"
    return "exact" if is_unambiguous(remove_epsilon(a)) else "approx"


def cmd_count(args: argparse.Namespace, out: TextIO) -> int:
    a = _load_nfa(args.file)
    method = _count_method(a, args)
    if method == "exact":
        print(count_exact_ufa(a, args.len), file=out)
    elif method == "brute":
        print(brute_force_count(a, args.len, args.cap), file=out)
    else:
        result = _approx(a, args.len, args, args.seed)
        if result.failure is not None:
            _warn(f"{result.failure}; estimate reported as 0")
        print(result.estimate, file=out)
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace, out: TextIO) -> int:
    a = _load_nfa(args.file)
    method = args.method
    if method == "auto":
        method = "ufa" if is_unambiguous(remove_epsilon(a)) else "flashlight"
    session = ufa_session(a, args.len) if method == "ufa" else nfa_session(a, args.len)
    for i, word in enumerate(session):
        if args.limit is not None and i >= args.limit:
            break
        print(format_word(word), file=out)
    return EXIT_OK


def _generator(a: Nfa, n: int, args: argparse.Namespace, seed: int):
    target, length, code = _binary_view(a, n)
    sk = pplvug_preprocess(target, length, args.delta, _budget(args), seed, args.threads, args.oracle)
    return sk, code


def cmd_sample(args: argparse.Namespace, out: TextIO) -> int:
    a = _load_nfa(args.file)
    sk, code = _generator(a, args.len, args, args.seed)
    if sk is None:
        _warn(f"L_{args.len} is empty; nothing to sample")
        return EXIT_OK
    if not sk.good:
        _warn("preprocessing failed; samples carry no uniformity guarantee")
    rng = stream(args.seed, "generate")
    for _ in range(args.num):
        result = pplvug_generate(sk, rng, args.retries)
        if result.word is None:
            print("FAIL", file=out)
            continue
        word = code.decode(result.word) if code else result.word
        print(format_word(word), file=out)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, out: TextIO) -> int:
    a = _load_nfa(args.file)
    if args.property == "ambiguity":
        print("unambiguous" if is_unambiguous(remove_epsilon(a)) else "ambiguous", file=out)
    elif args.len is None:
        print("non-empty" if accepts_some_word(a) else "empty", file=out)
    else:
        dag = trim(build_unrolled(remove_epsilon(a), args.len))
        print("empty" if dag.is_empty() else "non-empty", file=out)
    return EXIT_OK


def cmd_reduce(args: argparse.Namespace, out: TextIO) -> int:
    if args.kind == "dnf":
        a, n = dnf_to_nfa(parse_dnf(_read(args.input)))
    elif args.kind == "obdd":
        a, n = obdd_to_nfa(parse_obdd(_read(args.input)))
    else:
        if args.query is None or args.source is None or args.target is None or args.len is None:
            raise argparse.ArgumentTypeError("rpq needs QUERY, --from, --to and --len")
        graph = parse_graph(_read(args.input))
        a, n = rpq_to_nfa(graph, _load_nfa(args.query), args.source, args.target, args.len)
    out.write(f"# length {n}\n")
    out.write(serialize_nfa(a))
    return EXIT_OK


def _exact_reference(a: Nfa, n: int, cap: int) -> int | None:
    a = remove_epsilon(a)
    if is_unambiguous(a):
        return count_exact_ufa(a, n)
    try:
        return brute_force_count(a, n, cap)
    except OracleCapExceeded:
        return None


def count_report(a: Nfa, args: argparse.Namespace) -> dict:
    exact = _exact_reference(a, args.len, args.cap)
    rows = []
    for trial in range(args.trials):
        seed = args.seed + trial
        result = _approx(a, args.len, args, seed)
        row: dict = {
            "trial": trial,
            "seed": seed,
            "estimate": result.estimate,
            "failed": result.failure is not None,
            "relative_error": None,
            "within_eps": None,
        }
        if exact:
            err = abs(result.estimate - exact) / exact
            row["relative_error"] = float(err)
            row["within_eps"] = bool(err <= args.eps)
        elif exact == 0:
            row["within_eps"] = result.estimate == 0
        rows.append(row)
    judged = [r["within_eps"] for r in rows if r["within_eps"] is not None]
    return {
        "schema": SCHEMA_VERSION,
        "experiment": "count",
        "length": args.len,
        "eps": str(args.eps),
        "trials": args.trials,
        "exact": exact,
        "rows": rows,
        "success_fraction": (sum(judged) / len(judged)) if judged else None,
    }


def sample_report(a: Nfa, args: argparse.Namespace) -> dict:
    language = sorted(brute_force_language(a, args.len, args.cap))
    sk, code = _generator(a, args.len, args, args.seed)
    counts: Counter[Word] = Counter()
    fails = 0
    if sk is not None:
        rng = stream(args.seed, "generate")
        for _ in range(args.trials):
            result = pplvug_generate(sk, rng, args.retries)
            if result.word is None:
                fails += 1
            else:
                counts[code.decode(result.word) if code else result.word] += 1
    observed = [counts[w] for w in language]
    p_value = None
    if len(language) > 1 and sum(observed):
        p_value = float(scipy_stats.chisquare(observed).pvalue)
    return {
        "schema": SCHEMA_VERSION,
        "experiment": "sample",
        "length": args.len,
        "trials": args.trials,
        "exact": len(language),
        "rows": [{"word": format_word(w), "count": c} for w, c in zip(language, observed)],
        "outside_language": sum(c for w, c in counts.items() if w not in set(language)),
        "fails": fails,
        "chi_square_p_value": p_value,
        "success_fraction": (args.trials - fails) / args.trials if args.trials else None,
    }


def cmd_stats(args: argparse.Namespace, out: TextIO) -> int:
    a = _load_nfa(args.file)
    report = count_report(a, args) if args.experiment == "count" else sample_report(a, args)
    if args.json:
        out.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    for key in ("experiment", "length", "trials", "exact", "success_fraction"):
        print(f"{key}: {report[key]}", file=out)
    if args.experiment == "count":
        for row in report["rows"]:
            print(f"trial {row['trial']}: estimate {row['estimate']}", file=out)
    else:
        print(f"fails: {report['fails']}", file=out)
        print(f"chi_square_p_value: {report['chi_square_p_value']}", file=out)
        for row in report["rows"]:
            print(f"{row['word']}: {row['count']}", file=out)
    return EXIT_OK


def _add_budget_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-s", type=int, help="sample size per vertex (override mode)")
    p.add_argument("--budget-c", type=int, help="attempts per sample slot (override mode)")
    p.add_argument(
        "--accept-scale", type=_fraction_arg, default=R5,
        help="acceptance scale in override mode, as a rational (default 167/24785)",
    )
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--oracle", action="store_true", help="use full languages instead of samples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfacount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count words of a given length")
    p.add_argument("file")
    p.add_argument("--len", type=int, required=True)
    how = p.add_mutually_exclusive_group()
    how.add_argument("--exact", dest="method", action="store_const", const="exact")
    how.add_argument("--approx", dest="method", action="store_const", const="approx")
    how.add_argument("--brute", dest="method", action="store_const", const="brute")
    p.add_argument("--eps", type=_fraction_arg, default=Fraction(1, 2))
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    _add_budget_options(p)
    p.set_defaults(method="auto", handler=cmd_count)

    p = sub.add_parser("enumerate", help="list words of a given length")
    p.add_argument("file")
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--method", choices=("auto", "ufa", "flashlight"), default="auto")
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser("sample", help="draw uniform words of a given length")
    p.add_argument("file")
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--num", type=int, default=1)
    p.add_argument("--delta", type=_fraction_arg, default=Fraction(1, 2))
    p.add_argument("--retries", type=int, default=GENERATION_RETRIES)
    _add_budget_options(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("check", help="decide ambiguity or emptiness")
    p.add_argument("property", choices=("ambiguity", "emptiness"))
    p.add_argument("file")
    p.add_argument("--len", type=int, help="emptiness of L_n instead of L")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("reduce", help="compile a DNF, OBDD or RPQ instance to an NFA")
    p.add_argument("kind", choices=("dnf", "obdd", "rpq"))
    p.add_argument("input")
    p.add_argument("query", nargs="?", help="query automaton (rpq only)")
    p.add_argument("--from", dest="source")
    p.add_argument("--to", dest="target")
    p.add_argument("--len", type=int)
    p.set_defaults(handler=cmd_reduce)

    p = sub.add_parser("stats", help="repeated experiments against the exact oracle")
    p.add_argument("file")
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--experiment", choices=("count", "sample"), default="count")
    p.add_argument("--json", action="store_true")
    p.add_argument("--eps", type=_fraction_arg, default=Fraction(1, 2))
    p.add_argument("--delta", type=_fraction_arg, default=Fraction(1, 2))
    p.add_argument("--retries", type=int, default=GENERATION_RETRIES)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    _add_budget_options(p)
    p.set_defaults(handler=cmd_stats)
    return parser


def run(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = out or sys.stdout
    try:
        return args.handler(args, out)
    except argparse.ArgumentTypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ContractViolation, EmptyLanguageError, OracleCapExceeded, ValueError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


def main() -> None:
    sys.exit(run())
