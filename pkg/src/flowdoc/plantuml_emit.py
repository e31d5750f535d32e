"""Deterministic PlantUML activity-diagram text from activity trees.

Output uses the current activity syntax (if/then/elseif/else/endif, while,
repeat, fork) with no indentation, one construct keyword per line, LF line
endings and a trailing newline, so diagram files are byte-stable across
runs and platforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .activity_ir import (ActionNode, ActivityTree, BranchNode, ForkNode,
                          LoopNode, LoopStyle, StopNode, project)

# a label line ending in one of these could glue onto the following syntax
_RISKY_ENDINGS = set(";|<>/]}")


def _escape_line(text: str) -> str:
    # every whitespace char except a plain space could break the
    # one-construct-per-line discipline (\r, \v, \f, NEL, U+2028...)
    out = re.sub(r"[^\S ]", " ", text)
    out = out.replace("[[", "[ [")
    return out.rstrip()


def _escape_label(text: str) -> str:
    out = re.sub(r"\s+", " ", text).strip()
    out = out.replace("[[", "[ [")
    return out or "..."


def _action_lines(node: ActionNode, link_base: str) -> list[str]:
    lines: list[str] = []
    if node.text:
        lines.append(_escape_line(node.text))
    for call in node.calls:
        display = call.display.replace("]]", "] ]")
        if call.href:
            lines.append(f"[[{link_base}{call.href} {display}]]")
        else:
            lines.append(_escape_line(display))
    if not lines:
        lines = [" "]
    for k in range(len(lines) - 1):
        if lines[k] and lines[k][-1] in _RISKY_ENDINGS:
            lines[k] += " "
    lines[0] = ":" + lines[0]
    lines[-1] += ";"
    return lines


def emit(tree: ActivityTree, link_base: str = "") -> str:
    """Render one (already projected) activity tree to PlantUML text."""
    out: list[str] = ["@startuml", "start"]
    _emit_seq(tree.root, out, link_base)
    out.append("@enduml")
    return "\n".join(out) + "\n"


def _emit_seq(nodes, out: list[str], link_base: str) -> None:
    for node in nodes:
        if isinstance(node, ActionNode):
            out.extend(_action_lines(node, link_base))
        elif isinstance(node, BranchNode):
            first = node.arms[0]
            out.append(f"if ({_escape_label(first.label or '')}) then (yes)")
            _emit_seq(first.body, out, link_base)
            for arm in node.arms[1:]:
                if arm.is_else:
                    if arm.label:
                        out.append(f"else ({_escape_label(arm.label)})")
                    else:
                        out.append("else (no)")
                else:
                    out.append(f"elseif ({_escape_label(arm.label or '')}) then (yes)")
                _emit_seq(arm.body, out, link_base)
            out.append("endif")
        elif isinstance(node, LoopNode):
            if node.style is LoopStyle.PRE_TEST:
                out.append(f"while ({_escape_label(node.label)})")
                _emit_seq(node.body, out, link_base)
                out.append("endwhile")
            else:
                out.append("repeat")
                _emit_seq(node.body, out, link_base)
                out.append(f"repeat while ({_escape_label(node.label)})")
        elif isinstance(node, ForkNode):
            out.append("fork")
            _emit_seq(node.branches[0], out, link_base)
            for branch in node.branches[1:]:
                out.append("fork again")
                _emit_seq(branch, out, link_base)
            out.append("end fork")
        elif isinstance(node, StopNode):
            if node.text:
                out.append(":" + _escape_line(node.text) + ";")
            out.append("stop")


def diagram_filename(source_stem: str, anchor: str, zoom: int) -> str:
    return f"{source_stem}__{anchor}__zoom{zoom}.txt"


@dataclass(frozen=True)
class DiagramText:
    content: str
    path: Path
    qualified_name: str
    anchor: str
    zoom: int
    source_stem: str


def render_function(tree: ActivityTree, source_stem: str, out_dir: str | Path,
                    link_base: str = "../") -> list[DiagramText]:
    """Diagram texts for every zoom level of one function.

    Hyperlinks are prefixed with link_base; the default suits SVGs that live
    in aux_files/ and link up to pages in the output root.
    """
    aux = Path(out_dir) / "aux_files"
    out = []
    for level in range(tree.max_zoom + 1):
        content = emit(project(tree, level), link_base)
        name = diagram_filename(source_stem, tree.anchor, level)
        out.append(DiagramText(content, aux / name, tree.qualified_name,
                               tree.anchor, level, source_stem))
    return out
