"""The ``//$`` annotation comment language.

Marker grammar, applied to a line comment's text:

    //$            action at zoom 0
    //$N           action at zoom N (digits attached to the marker)
    //$ <parallel> action participating in a fork with its neighbours
    //$ [text]     description for a following branch/loop condition or return

A ``//$`` comment on a line that already contains code is a call highlight
for that line. A bracket form standing before anything other than ``if``,
``else``, a loop keyword or ``return`` is kept as a plain action (brackets
and all) and reported, so a typo never silently drops documentation.

Binding of a standalone annotation to "the next statement" ignores blank
lines, ordinary comments and preprocessor directives, but another ``//$``
comment in between claims the statement for itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .cxx_structure import CodeStream, detect_calls
from .diagnostics import Diagnostic, sink, warning
from .scanner import Token, TokenKind, line_code_map


class AnnotationKind(Enum):
    ACTION = "action"
    CONDITION_DESC = "condition_desc"
    RETURN_DESC = "return_desc"
    CALL_HIGHLIGHT = "call_highlight"


@dataclass
class Annotation:
    kind: AnnotationKind
    text: str
    line: int
    zoom: int = 0
    parallel: bool = False
    # (line, col) of the keyword a description binds to
    target: tuple[int, int] | None = None


_MARKER_RE = re.compile(r"//\$(\d*)")
_PARALLEL_TAG = "<parallel>"

# keywords an annotation can describe, mapped from the lexeme(s) that follow
_HEADER_KINDS = ("if", "elseif", "else", "loop", "return")


def parse_marker(comment_text: str) -> tuple[int, bool, str] | None:
    """Split a ``//$`` comment into (zoom, parallel, payload text).

    Returns None for comments that are not annotations. Zoom digits must sit
    directly against the marker; ``//$ 1) step one`` is an action whose text
    begins with "1)", not a zoom-1 action.
    """
    m = _MARKER_RE.match(comment_text)
    if m is None:
        return None
    zoom = int(m.group(1)) if m.group(1) else 0
    rest = comment_text[m.end():].lstrip()
    parallel = False
    if rest.startswith(_PARALLEL_TAG):
        parallel = True
        rest = rest[len(_PARALLEL_TAG):].lstrip()
    return zoom, parallel, rest.rstrip()


def _bracket_payload(text: str) -> str | None:
    if len(text) >= 2 and text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if inner:
            return inner
    return None


def classify(comment: Token, following_kind: str | None,
             standalone: bool) -> Annotation | None:
    """Pure classification of one comment token.

    following_kind is one of "if", "elseif", "else", "loop", "return",
    "other" or None (nothing follows); it is only consulted for standalone
    bracket-form annotations.
    """
    parsed = parse_marker(comment.text)
    if parsed is None:
        return None
    zoom, parallel, text = parsed
    if not standalone:
        return Annotation(AnnotationKind.CALL_HIGHLIGHT, text, comment.line)
    inner = _bracket_payload(text)
    if inner is not None:
        if following_kind in ("if", "elseif", "else", "loop"):
            return Annotation(AnnotationKind.CONDITION_DESC, inner, comment.line)
        if following_kind == "return":
            return Annotation(AnnotationKind.RETURN_DESC, inner, comment.line)
        # orphan bracket: demoted to an action, brackets preserved
    return Annotation(AnnotationKind.ACTION, text, comment.line,
                      zoom=zoom, parallel=parallel)


def collect(tokens: list[Token], file: str = "<input>",
            diags: list[Diagnostic] | None = None) -> list[Annotation]:
    """All annotations of a token stream, in source order.

    Postfix highlights whose line holds no detectable call are dropped with
    a diagnostic; orphan bracket annotations are kept as actions and
    reported.
    """
    diags = sink(diags)
    view = CodeStream(tokens)
    code_by_line = line_code_map(tokens)
    out: list[Annotation] = []
    for idx, tok in enumerate(tokens):
        if tok.kind is not TokenKind.LINE_COMMENT or not tok.text.startswith("//$"):
            continue
        code = code_by_line.get(tok.line, "")
        if code.strip():
            if not detect_calls(code, tok.line):
                diags.append(warning(
                    "dangling-call-highlight",
                    "postfix '//$' on a line with no detectable call; ignored",
                    file, tok.line))
                continue
            ann = classify(tok, None, standalone=False)
            if ann is not None:
                out.append(ann)
            continue
        following_kind, target = _following_context(view, tokens, idx)
        ann = classify(tok, following_kind, standalone=True)
        if ann is None:
            continue
        if ann.kind is AnnotationKind.ACTION:
            parsed = parse_marker(tok.text)
            if parsed is not None and _bracket_payload(parsed[2]) is not None:
                diags.append(warning(
                    "orphan-bracket-annotation",
                    "'[...]' annotation does not precede a branch, loop or "
                    "return; kept as a plain action",
                    file, tok.line))
        elif ann.kind in (AnnotationKind.CONDITION_DESC, AnnotationKind.RETURN_DESC):
            ann.target = target
        out.append(ann)
    return out


def _following_context(view: CodeStream, tokens: list[Token],
                       idx: int) -> tuple[str | None, tuple[int, int] | None]:
    """Kind and keyword position of the code construct following a comment.

    Scans past whitespace, plain comments and preprocessor lines. Another
    ``//$`` comment blocks the binding.
    """
    tok = tokens[idx]
    comment_end = tok.offset + len(tok.text)
    block_at: int | None = None
    for later in tokens[idx + 1:]:
        if later.kind is TokenKind.LINE_COMMENT and later.text.startswith("//$"):
            block_at = later.offset
            break
    k = view.index_at_or_after(comment_end)
    lx = view.lexemes
    if k >= len(lx):
        return None, None
    if block_at is not None and lx[k].offset > block_at:
        return None, None
    word = lx[k].text
    pos = view.pos(lx[k].offset)
    if word == "if":
        return "if", pos
    if word == "else":
        if k + 1 < len(lx) and lx[k + 1].text == "if":
            return "elseif", pos
        return "else", pos
    if word in ("while", "for", "do"):
        return "loop", pos
    if word == "return":
        return "return", pos
    return "other", None
