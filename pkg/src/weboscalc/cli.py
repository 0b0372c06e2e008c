"""Command line harness: ``weboscalc run|trace|golden|check``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import initial_state, run, show_state
from .errors import LoadError, ScriptError
from .printer import show
from .scenario import check_assertion, load_scenario, scenario_policy

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_LOAD = 2
EXIT_LIMIT = 3


def execute(sc, policy=None, max_steps=None, gc=False):
    """Run a loaded scenario; returns the RunResult."""
    if gc:
        sc.cfg.gc = True
    st = initial_state(sc.net, sc.cfg)
    steps = sc.max_steps if max_steps is None else max_steps
    return run(st, scenario_policy(sc, policy), steps)


def render_golden(sc, result):
    lines = [f"# scenario {sc.name}"]
    lines += [ev.text() for ev in result.trace]
    lines.append("# final")
    lines.append(show_state(result.state))
    lines.append("# stuck")
    lines += [show(it) for it in result.stuck]
    lines.append("# status " + ("terminal" if result.terminal else "max-steps-exceeded"))
    return "\n".join(lines) + "\n"


def _load(path, err):
    try:
        return load_scenario(path)
    except LoadError as exc:
        print(f"{path}: {exc}", file=err)
        return None


def cmd_run(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    sc = _load(args.file, err)
    if sc is None:
        return EXIT_LOAD
    try:
        result = execute(sc, args.policy, args.max_steps, args.gc)
    except (ScriptError, OSError, ValueError) as exc:
        print(f"{args.file}: {exc}", file=err)
        return EXIT_LOAD
    status = "terminal" if result.terminal else "max-steps-exceeded"
    print(f"scenario: {sc.name}", file=out)
    print(f"status: {status} after {len(result.trace)} steps", file=out)
    print(f"final: {show_state(result.state)}", file=out)
    print(f"stuck: {len(result.stuck)}", file=out)
    for it in result.stuck:
        print(f"  {show(it)}", file=out)
    failed = 0
    for a in sc.assertions:
        ok, detail = check_assertion(a, result)
        failed += not ok
        line = f"{'PASS' if ok else 'FAIL'} {a.text}"
        if not ok and detail:
            line += f"  ({detail})"
        print(line, file=out)
    if not failed:
        return EXIT_OK
    return EXIT_FAIL if result.terminal else EXIT_LIMIT


def cmd_trace(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    sc = _load(args.file, err)
    if sc is None:
        return EXIT_LOAD
    try:
        result = execute(sc, args.policy, args.max_steps, args.gc)
    except (ScriptError, OSError, ValueError) as exc:
        print(f"{args.file}: {exc}", file=err)
        return EXIT_LOAD
    if args.format == "structured":
        for ev in result.trace:
            print(ev.structured(), file=out)
        print(json.dumps({"final": show_state(result.state), "terminal": result.terminal,
                          "stuck": [show(it) for it in result.stuck]}, sort_keys=True), file=out)
    else:
        for ev in result.trace:
            print(ev.text(), file=out)
        print(f"# final {show_state(result.state)}", file=out)
    return EXIT_OK if result.terminal else EXIT_LIMIT


def cmd_golden(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    sc = _load(args.file, err)
    if sc is None:
        return EXIT_LOAD
    try:
        result = execute(sc)
    except (ScriptError, OSError, ValueError) as exc:
        print(f"{args.file}: {exc}", file=err)
        return EXIT_LOAD
    actual = render_golden(sc, result)
    golden = Path(args.golden)
    if args.update:
        golden.write_text(actual, encoding="utf-8")
        print(f"updated {golden}", file=out)
        return EXIT_OK
    try:
        expected = golden.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"{golden}: {exc.strerror}", file=err)
        return EXIT_LOAD
    if expected == actual:
        print(f"match {golden}", file=out)
        return EXIT_OK
    exp_lines, act_lines = expected.splitlines(), actual.splitlines()
    for k in range(max(len(exp_lines), len(act_lines))):
        e = exp_lines[k] if k < len(exp_lines) else "<end of file>"
        a = act_lines[k] if k < len(act_lines) else "<end of file>"
        if e != a:
            print(f"mismatch at line {k + 1}:", file=out)
            print(f"- {e}", file=out)
            print(f"+ {a}", file=out)
            break
    return EXIT_FAIL


def cmd_check(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    sc = _load(args.file, err)
    if sc is None:
        return EXIT_LOAD
    print(f"ok {sc.name}: {len(sc.assertions)} assertions", file=out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="weboscalc", description="Run calculus scenarios.")
    sub = p.add_subparsers(dest="command", required=True)

    def engine_flags(q):
        q.add_argument("--policy", help="det, rand:<seed> or script:<file>")
        q.add_argument("--max-steps", type=int, help="step limit (default from scenario)")
        q.add_argument("--gc", action="store_true", help="collect finished instances")

    q = sub.add_parser("run", help="run a scenario and check its assertions")
    q.add_argument("file")
    engine_flags(q)
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("trace", help="print the reduction trace")
    q.add_argument("file")
    q.add_argument("--format", choices=("text", "structured"), default="text")
    engine_flags(q)
    q.set_defaults(func=cmd_trace)

    q = sub.add_parser("golden", help="compare against a golden trace")
    q.add_argument("file")
    q.add_argument("golden")
    q.add_argument("--update", action="store_true")
    q.set_defaults(func=cmd_golden)

    q = sub.add_parser("check", help="parse and validate only")
    q.add_argument("file")
    q.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
