"""Command-line front end.

Three phases, runnable separately or in one shot:

    flowdoc build-db SOURCE...    write one .flowdb per source
    flowdoc makeflows SOURCE...   write PlantUML texts under aux_files/
    flowdoc makehtml [SOURCE...]  write the HTML pages and the index
    flowdoc all SOURCE...         the three phases in order

Phases communicate only through the output directory, so running them as
separate processes gives byte-identical results to ``all``. Diagnostics go
to stderr as ``file:line: severity: message [code]``; exit status is 0 for
success, 1 when errors (or warnings under --werror) occurred, 2 for usage
problems.
"""

from __future__ import annotations

import argparse
import os
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import activity_ir, cxx_structure, flowdb, html_emit, plantuml_emit
from .diagnostics import Diagnostic, Severity, error, warning
from .flowdb import SOURCE_SUFFIXES
from .ioutil import atomic_write_text

_PHASES = (
    ("build-db", "analyze sources and write flow databases"),
    ("makeflows", "write PlantUML activity diagrams for annotated functions"),
    ("makehtml", "write HTML pages and the index"),
    ("all", "run build-db, makeflows and makehtml in order"),
)


@dataclass
class Config:
    command: str
    sources: list[str] = field(default_factory=list)
    out_dir: Path = Path("flowdoc")
    render_cmd: str | None = None
    warnings_as_errors: bool = False
    quiet: bool = False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowdoc",
        description="Generate interlinked activity diagrams and HTML pages "
                    "from //$ annotations in C++ sources.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{build-db,makeflows,makehtml,all}")
    for name, help_text in _PHASES:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("sources", nargs="*", metavar="SOURCE",
                        help="C++ source file, directory (searched "
                             "recursively) or glob pattern")
        sp.add_argument("--out-dir", default=None,
                        help="output directory (default: $FLOWDOC_OUT "
                             "or ./flowdoc)")
        sp.add_argument("--render-cmd", default=None,
                        help="command template that renders a diagram text "
                             "to SVG; '{input}' is replaced by the .txt "
                             "path, e.g. 'plantuml -tsvg {input}'")
        sp.add_argument("--werror", action="store_true",
                        help="treat warnings as errors (exit status 1)")
        sp.add_argument("--quiet", action="store_true",
                        help="do not print warnings")
    return parser


def _expand_sources(patterns: list[str],
                    diags: list[Diagnostic]) -> list[str]:
    import glob as _glob
    out: list[str] = []
    for pattern in patterns:
        p = Path(pattern)
        if p.is_file():
            out.append(str(p))
        elif p.is_dir():
            out.extend(sorted(
                str(q) for q in p.rglob("*")
                if q.is_file() and q.suffix in SOURCE_SUFFIXES))
        else:
            hits = sorted(h for h in _glob.glob(pattern, recursive=True)
                          if Path(h).is_file())
            if hits:
                out.extend(hits)
            else:
                diags.append(error("io-error",
                                   f"no source matches '{pattern}'", pattern))
    seen = set()
    unique = []
    for s in out:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return unique


# ---------------------------------------------------------------------------
# phases

def _stem_groups(sources: list[str]) -> list[tuple[str, list[str]]]:
    """Sources bundled by stem, in first-appearance order.

    A header and its .cpp share one database, one page and one anchor
    namespace, so every phase must see them as a unit.
    """
    groups: dict[str, list[str]] = {}
    for src in sources:
        groups.setdefault(Path(src).stem, []).append(src)
    return list(groups.items())


def _phase_build_db(cfg: Config, diags: list[Diagnostic]) -> None:
    for _stem, group in _stem_groups(cfg.sources):
        flowdb.build_db(group, cfg.out_dir, diags)


def _function_trees(group: list[str], db: flowdb.FlowDb,
                    diags: list[Diagnostic]):
    """[(AnnotatedFunction, ActivityTree)] for the sources of one stem, or
    None when none of them is readable."""
    taken: dict[str, int] = {}
    pairs = []
    readable = False
    for src in group:
        analysis = flowdb.analyze_source(src, diags, taken)
        if analysis is None:
            continue
        readable = True
        for af in analysis.annotated:
            stmts = cxx_structure.parse_body(af.fn, analysis.tokens, diags)
            tree = activity_ir.build_activity(af.fn, stmts, af.annotations,
                                              db, diags, anchor=af.anchor)
            if tree is not None:
                pairs.append((af, tree))
    return pairs if readable else None


def _phase_makeflows(cfg: Config,
                     diags: list[Diagnostic]) -> list[plantuml_emit.DiagramText]:
    db = flowdb.load_merge(cfg.out_dir, diags)
    texts: list[plantuml_emit.DiagramText] = []
    for stem, group in _stem_groups(cfg.sources):
        pairs = _function_trees(group, db, diags)
        for _, tree in pairs or []:
            texts.extend(plantuml_emit.render_function(tree, stem, cfg.out_dir))
    for text in texts:
        atomic_write_text(text.path, text.content)
    if not texts:
        diags.append(warning("no-annotated-functions",
                             "no annotated functions found; "
                             "no diagrams were emitted"))
    return texts


def _phase_render(texts: list[plantuml_emit.DiagramText], cfg: Config,
                  diags: list[Diagnostic]) -> None:
    if not cfg.render_cmd:
        return
    args_template = shlex.split(cfg.render_cmd)
    has_placeholder = any("{input}" in a for a in args_template)
    for text in texts:
        argv = [a.replace("{input}", str(text.path)) for a in args_template]
        if not has_placeholder:
            argv.append(str(text.path))
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            diags.append(warning("render-failed",
                                 f"render command failed to start: {exc}"))
            return
        if proc.returncode != 0:
            detail = (proc.stderr or proc.stdout or "").strip().splitlines()
            suffix = f": {detail[0]}" if detail else ""
            diags.append(warning(
                "render-failed",
                f"render command exited with status {proc.returncode} "
                f"for {text.path.name}{suffix}"))


def _phase_makehtml(cfg: Config, diags: list[Diagnostic]) -> None:
    db = flowdb.load_merge(cfg.out_dir, diags)
    for stem, group in _stem_groups(cfg.sources):
        funcs = []
        for af, tree in _function_trees(group, db, diags) or []:
            diagrams = plantuml_emit.render_function(tree, stem, cfg.out_dir)
            funcs.append(html_emit.PageFunction(
                af.fn.qualified_name, af.fn.signature_text, af.anchor,
                diagrams))
        if funcs:
            html_emit.emit_page(stem, funcs, cfg.out_dir)
    html_emit.emit_index(db, cfg.out_dir)


# ---------------------------------------------------------------------------

def _dedupe(diags: list[Diagnostic]) -> list[Diagnostic]:
    seen = set()
    out = []
    for d in diags:
        key = (d.file, d.line, d.severity, d.code, d.message)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


def run(cfg: Config, diags: list[Diagnostic]) -> None:
    if cfg.command in ("build-db", "all"):
        _phase_build_db(cfg, diags)
    if cfg.command in ("makeflows", "all"):
        texts = _phase_makeflows(cfg, diags)
        _phase_render(texts, cfg, diags)
    if cfg.command in ("makehtml", "all"):
        _phase_makehtml(cfg, diags)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    diags: list[Diagnostic] = []
    sources = _expand_sources(args.sources, diags)
    if not args.sources and args.command != "makehtml":
        print(f"flowdoc {args.command}: at least one SOURCE is required",
              file=sys.stderr)
        return 2

    out_dir = args.out_dir or os.environ.get("FLOWDOC_OUT") or "flowdoc"
    cfg = Config(command=args.command, sources=sources,
                 out_dir=Path(out_dir), render_cmd=args.render_cmd,
                 warnings_as_errors=args.werror, quiet=args.quiet)
    run(cfg, diags)

    has_error = False
    has_warning = False
    for d in _dedupe(diags):
        if d.severity is Severity.ERROR:
            has_error = True
        else:
            has_warning = True
            if cfg.quiet:
                continue
        print(d.format(), file=sys.stderr)
    if has_error or (cfg.warnings_as_errors and has_warning):
        return 1
    return 0
