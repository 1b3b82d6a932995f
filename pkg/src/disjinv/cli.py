"""Command-line driver.

Default output, one line per item::

    l1: <invariant>          one line per branch location
    HEAD: <disjunction>      union of the branch invariants
    EXIT: <invariant>
    SUMMARY: <relation>      with --summary
    CHECK: PASS|FAIL ...     with --check
    ORACLE: PASS|FAIL ...    with --oracle-box
    TIME: <seconds>

``--format structured`` prints the same items as ``key: value`` lines with
lower-case keys (``location.l1``, ``head``, ``exit``, ``summary``, ``check``,
``oracle``, ``propagation``, ``seconds``), so the output can be split on the
first ``": "``.
"""

from __future__ import annotations

import argparse
import contextlib
import signal
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .ats import Ats, NoInitialBranchError, format_ats
from .canonical import BranchExplosionError, canonical_loop, format_canonical
from .farkas import AnalysisTimeout, DnfExplosionError, SolverOptions, SolverStats, check_inductive
from .loop_ir import ParseError, Program, contains_loop, parse
from .oracle import ExplosionError, check_invariant, check_summary, enumerate_auto, enumerate_reachable, parse_box
from .polyhedra import format_dnf, simplify_dnf
from .propagate import AnalysisOptions, analyze, compare_propagation
from .summary import UNIVERSE, loop_ats, summarize, summarize_with_map

OK, FAILED, USAGE = 0, 1, 2

ANALYSIS_ERRORS = (AnalysisTimeout, DnfExplosionError, BranchExplosionError, ExplosionError,
                   NoInitialBranchError, RecursionError)


def _mu_list(text: str) -> Tuple[Fraction, ...]:
    try:
        vals = tuple(Fraction(t.strip()) for t in text.split(",") if t.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad multiplier list {text!r}")
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("multipliers must be a non-empty list of nonnegative numbers")
    return vals


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _seconds(text: str) -> float:
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected seconds, got {text!r}")
    if t <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return t


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disjinv", description="Disjunctive invariants and summaries for affine loops.")
    ap.add_argument("path", help="an .afl program, or a directory with --suite")
    ap.add_argument("--propagate", choices=("auto", "on", "off"), default="auto")
    ap.add_argument("--summary", action="store_true", help="also compute the loop summary")
    ap.add_argument("--rounds", type=_positive, default=1, help="incremental strengthening rounds")
    ap.add_argument("--mu", type=_mu_list, default=None, help="consecution multipliers, e.g. 0,1")
    ap.add_argument("--check", action="store_true", help="verify inductiveness of the produced map")
    ap.add_argument("--oracle-box", default=None, help="x=0..60,y=0..60 or 'auto'")
    ap.add_argument("--oracle-steps", type=_positive, default=500)
    ap.add_argument("--dump-canonical", action="store_true")
    ap.add_argument("--dump-ats", action="store_true")
    ap.add_argument("--dump-paths", action="store_true")
    ap.add_argument("--compare-propagation", action="store_true")
    ap.add_argument("--format", choices=("text", "structured"), default="text")
    ap.add_argument("--ascii", action="store_true")
    ap.add_argument("--timeout", type=_seconds, default=None)
    ap.add_argument("--suite", action="store_true", help="run every .afl file in the directory")
    return ap


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass
class Result:
    lines: List[Tuple[str, str]] = field(default_factory=list)
    failed: bool = False
    status: Dict[str, str] = field(default_factory=dict)

    def add(self, key: str, value: str):
        self.lines.append((key, value))


_TEXT_KEYS = {"head": "HEAD", "exit": "EXIT", "summary": "SUMMARY", "check": "CHECK", "oracle": "ORACLE",
              "summary.check": "SUMMARY CHECK", "summary.oracle": "SUMMARY ORACLE", "seconds": "TIME",
              "propagation": "PROPAGATION", "ppg": "PPG", "no-ppg": "NO-PPG", "entails": "ENTAILS",
              "sampled": "SAMPLED"}


def render(res: Result, fmt: str) -> str:
    out = []
    for k, v in res.lines:
        if k.startswith("dump."):
            out.append(v)
        elif fmt == "structured":
            out.append(f"{k}: {v}")
        elif k.startswith("location."):
            out.append(f"{k[len('location.'):]}: {v}")
        else:
            out.append(f"{_TEXT_KEYS.get(k, k.upper())}: {v}")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@contextlib.contextmanager
def alarm(seconds: Optional[float]):
    """Raise AnalysisTimeout after ``seconds`` of wall-clock time (main thread, POSIX)."""
    if not seconds or not hasattr(signal, "setitimer"):
        yield
        return

    def fire(signum, frame):
        raise AnalysisTimeout(f"timed out after {seconds:g}s")

    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def options_from(args) -> AnalysisOptions:
    solver = SolverOptions(timeout=args.timeout)
    if args.mu is not None:
        solver = SolverOptions(mu=args.mu, timeout=args.timeout)
    return AnalysisOptions(propagate=args.propagate, rounds=args.rounds, solver=solver)


def _dump_paths(p: Program, options: AnalysisOptions, style: str) -> str:
    from .ats_nested import build_cfg, format_paths

    cfg = build_cfg(p.top_loop)
    inner = {nid: summarize(w, p.vars, p.mode, UNIVERSE, options) for nid, w in cfg.inner_loops().items()}
    return format_paths(cfg, inner, p.vars, p.mode, style)


def _oracle(args, p: Program):
    if args.oracle_box == "auto":
        reach, box = enumerate_auto(p, args.oracle_steps)
    else:
        box = parse_box(args.oracle_box)
        unknown = sorted(set(box) - set(p.vars))
        if unknown:
            raise ValueError(f"oracle box names unknown variables: {', '.join(unknown)}")
        reach = enumerate_reachable(p, box, args.oracle_steps)
    return reach, box


def _box_text(box) -> str:
    return ",".join(f"{v}={lo}..{hi}" for v, (lo, hi) in box.items()) or "fixed"


def analyze_program(p: Program, args) -> Result:
    style = "ascii" if args.ascii else "unicode"
    options = options_from(args)
    res = Result()
    t0 = time.monotonic()
    if args.dump_canonical:
        if contains_loop(p.top_loop.body):
            res.add("dump.canonical", "# nested loop: no single switch form; see --dump-paths")
        else:
            res.add("dump.canonical", format_canonical(canonical_loop(p.top_loop, p.vars, p.mode), style))
    if args.dump_paths:
        res.add("dump.paths", _dump_paths(p, options, style))
    ats = loop_ats(p.top_loop, p.vars, p.mode, p.init, options)
    if args.dump_ats:
        res.add("dump.ats", format_ats(ats, style))

    if args.compare_propagation:
        cmp, aam, _ = compare_propagation(ats, options.solver)
        res.add("ppg", f"{cmp.seconds_on:.3f}s ({cmp.report.reason}; inductive={_yn(cmp.inductive_on)})")
        res.add("no-ppg", f"{cmp.seconds_off:.3f}s (inductive={_yn(cmp.inductive_off)})")
        res.add("entails", {True: "yes", False: "no", None: "unknown"}[cmp.entails])
        res.add("sampled", f"{cmp.samples} points, "
                + ("PASS" if cmp.sampled_ok else f"FAIL at {cmp.sample_failure[0]} {_pt(cmp.sample_failure[1])}"))
        res.failed |= not (cmp.inductive_on and cmp.inductive_off and cmp.sampled_ok and cmp.entails is not False)
        report = cmp.report
    else:
        stats = SolverStats()
        aam, report = analyze(ats, options, stats)

    order = ats.vars
    for loc in ats.branch_locations:
        res.add(f"location.{loc}", format_dnf(aam.get(loc, []), order, style))
    head = simplify_dnf([q for loc in ats.branch_locations for q in aam.get(loc, [])])
    res.add("head", format_dnf(head, order, style))
    res.add("exit", format_dnf(aam.get(ats.exit, []), order, style))
    res.add("propagation", ("used" if report.used else "not used") + f" ({report.reason})")

    summary = None
    if args.summary:
        summary, inst, smap = summarize_with_map(ats, options)
        res.add("summary", summary.format(style))

    if args.check:
        _check_line(res, "check", ats, aam)
        if summary is not None:
            _check_line(res, "summary.check", inst, smap)

    if args.oracle_box:
        reach, box = _oracle(args, p)
        v = check_invariant(reach, aam, ats)
        tail = f"{v.checked} configurations, box {_box_text(box)}, {args.oracle_steps} steps"
        res.add("oracle", f"PASS ({tail})" if v else f"FAIL at {v.location} {_pt(v.state)}")
        res.status["oracle"] = "PASS" if v else "FAIL"
        res.failed |= not v
        if summary is not None:
            sv = check_summary(reach, summary)
            res.add("summary.oracle", f"PASS ({sv.checked} runs)" if sv else f"FAIL at {_pt(sv.state)}")
            res.failed |= not sv

    res.add("seconds", f"{time.monotonic() - t0:.3f}")
    return res


def _check_line(res: Result, key: str, ats: Ats, aam):
    c = check_inductive(ats, aam)
    if c:
        res.add(key, f"PASS ({c.method}, {c.obligations} obligations)")
    else:
        cex = f" counterexample {_pt(c.counterexample)}" if c.counterexample else ""
        res.add(key, f"FAIL ({c.failing}){cex}")
    res.status[key] = "PASS" if c else "FAIL"
    res.failed |= not c


def _yn(b: bool) -> str:
    return "yes" if b else "no"


def _pt(pt) -> str:
    if not pt:
        return "{}"
    return "{" + ", ".join(f"{k}={v}" for k, v in pt.items()) + "}"


def run_file(path: Path, args, out: Callable[[str], None], err: Optional[Callable[[str], None]] = None) -> int:
    err = err or out
    try:
        text = path.read_text()
    except OSError as e:
        err(f"error: cannot read {path}: {e.strerror}")
        return USAGE
    try:
        p = parse(text)
    except ParseError as e:
        err(f"{path}:{e.line}:{e.col}: error: {e.message}" if e.line else f"{path}: error: {e.message}")
        return USAGE
    try:
        with alarm(args.timeout):
            res = analyze_program(p, args)
    except ANALYSIS_ERRORS as e:
        err(f"{path}: analysis failed: {type(e).__name__}: {e}")
        return FAILED
    except ValueError as e:
        err(f"{path}: error: {e}")
        return USAGE
    out(render(res, args.format))
    return FAILED if res.failed else OK


def run_suite(root: Path, args, out: Callable[[str], None]) -> int:
    files = sorted(root.glob("*.afl"))
    if not files:
        out(f"error: no .afl files in {root}")
        return USAGE
    rows = []
    worst = OK
    for f in files:
        t0 = time.monotonic()
        captured: List[str] = []
        code = run_file(f, args, captured.append)
        dt = time.monotonic() - t0
        text = "\n".join(captured)
        status = "PASS" if code == OK else "FAIL"
        check = _grab(text, "CHECK" if args.format == "text" else "check")
        oracle = _grab(text, "ORACLE" if args.format == "text" else "oracle")
        rows.append((f.stem, status, f"{dt:.2f}s", check, oracle))
        worst = max(worst, code)
        if code != OK:
            rows.append(("", "", "", text.splitlines()[-1] if text else "", ""))
    widths = [max(len(r[i]) for r in rows + [("name", "status", "time", "check", "oracle")]) for i in range(5)]
    for r in [("name", "status", "time", "check", "oracle")] + rows:
        out("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return worst


def _grab(text: str, key: str) -> str:
    for line in text.splitlines():
        if line.startswith(key + ": "):
            return line[len(key) + 2:].split(" ")[0]
    return "-"


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    path = Path(args.path)
    if args.suite:
        if not path.is_dir():
            print(f"error: {path} is not a directory", file=sys.stderr)
            return USAGE
        return run_suite(path, args, print)
    if path.is_dir():
        print(f"error: {path} is a directory; pass --suite", file=sys.stderr)
        return USAGE
    return run_file(path, args, print, lambda m: print(m, file=sys.stderr))


if __name__ == "__main__":
    sys.exit(main())
