"""Fusing statement trees with annotations into activity trees.

The activity tree is what actually gets drawn. Its nodes:

* ActionNode: one box, from a standalone annotation; absorbs the unannotated
  statements after it and carries highlighted calls found on ``//$`` lines.
* BranchNode / LoopNode: a control construct that contains at least one
  action, call highlight or described return somewhere inside. Constructs
  with none stay invisible, swallowed by the preceding action box.
* ForkNode: a run of two or more consecutive ``<parallel>`` actions at the
  same zoom level.
* StopNode: a reachable return in a rendered region, or the implicit end.

Zoom projection keeps actions whose level is at most the requested one and
drops construct shells that end up empty, so a low-zoom diagram is always a
subgraph of the next deeper one.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from enum import Enum

from .annotations import Annotation, AnnotationKind
from .cxx_structure import FunctionDef, Stmt, StmtKind
from .diagnostics import Diagnostic, sink, warning
from .flowdb import FlowDb


@dataclass
class HighlightedCall:
    display: str
    href: str | None  # None renders as plain text


@dataclass
class ActionNode:
    text: str
    zoom: int = 0
    parallel: bool = False
    calls: list[HighlightedCall] = field(default_factory=list)


@dataclass
class BranchArm:
    label: str | None  # None only for an undescribed else arm
    body: list
    is_else: bool = False


@dataclass
class BranchNode:
    arms: list[BranchArm]


class LoopStyle(Enum):
    PRE_TEST = "pre"    # while, for
    POST_TEST = "post"  # do-while


@dataclass
class LoopNode:
    style: LoopStyle
    label: str
    body: list


@dataclass
class ForkNode:
    branches: list[list]


@dataclass
class StopNode:
    text: str | None = None


ActivityNode = ActionNode | BranchNode | LoopNode | ForkNode | StopNode


@dataclass
class ActivityTree:
    qualified_name: str
    signature_text: str
    anchor: str
    root: list[ActivityNode]
    max_zoom: int


class LevelOutOfRange(ValueError):
    pass


def collapse_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def build_activity(fn: FunctionDef, stmt_root: Stmt,
                   annos: list[Annotation], db: FlowDb,
                   diags: list[Diagnostic] | None = None,
                   anchor: str = "") -> ActivityTree | None:
    """Build the activity tree for one function, or None when it carries no
    annotations at all."""
    diags = sink(diags)
    inside = [a for a in annos
              if fn.body_start.line <= a.line <= fn.body_end.line]
    if not inside:
        return None
    builder = _Builder(fn, inside, db, diags)
    root = builder.fuse_block(stmt_root)
    if not root or not isinstance(root[-1], StopNode):
        root.append(StopNode())
    builder.report_leftovers()
    max_zoom = max((a.zoom for a in inside
                    if a.kind is AnnotationKind.ACTION), default=0)
    return ActivityTree(fn.qualified_name, fn.signature_text, anchor,
                        root, max_zoom)


class _Seq:
    """Output list plus the currently open action box."""

    def __init__(self):
        self.out: list[ActivityNode] = []
        self.current: ActionNode | None = None

    def open(self, node: ActionNode) -> None:
        self.current = node
        self.out.append(node)

    def close(self) -> None:
        self.current = None

    def ensure(self) -> ActionNode:
        if self.current is None:
            self.open(ActionNode(""))
        return self.current

    def append(self, node: ActivityNode) -> None:
        self.close()
        self.out.append(node)


class _Builder:
    def __init__(self, fn: FunctionDef, annos: list[Annotation],
                 db: FlowDb, diags: list[Diagnostic]):
        self.fn = fn
        self.db = db
        self.diags = diags
        self.actions = [a for a in annos if a.kind is AnnotationKind.ACTION]
        self.descs = {a.target: a for a in annos
                      if a.kind is AnnotationKind.CONDITION_DESC and a.target}
        self.ret_descs = {a.target: a for a in annos
                          if a.kind is AnnotationKind.RETURN_DESC and a.target}
        self.highlight_lines = {a.line for a in annos
                                if a.kind is AnnotationKind.CALL_HIGHLIGHT}
        trigger = [a.line for a in annos
                   if a.kind in (AnnotationKind.ACTION,
                                 AnnotationKind.CALL_HIGHLIGHT,
                                 AnnotationKind.RETURN_DESC)]
        self.trigger_lines = sorted(trigger)
        self.consumed_descs: set[tuple[int, int]] = set()
        self.surfaced_highlights: set[int] = set()

    # -- queries ----------------------------------------------------------

    def _renders(self, stmt: Stmt) -> bool:
        lo, hi = stmt.span
        i = bisect.bisect_left(self.trigger_lines, lo)
        return i < len(self.trigger_lines) and self.trigger_lines[i] <= hi

    def _desc_for(self, positions) -> str | None:
        for pos in positions:
            if pos is not None and pos in self.descs:
                self.consumed_descs.add(pos)
                return self.descs[pos].text
        return None

    # -- fusion -----------------------------------------------------------

    def fuse_block(self, block: Stmt) -> list[ActivityNode]:
        seq = _Seq()
        self._fuse_into(block, seq)
        seq.close()
        return _fork_pass(seq.out)

    def _fuse_into(self, block: Stmt, seq: _Seq) -> None:
        mine = [a for a in self.actions
                if block.span[0] <= a.line <= block.span[1]
                and self._owning_block(block, a.line) is block]
        items: list = sorted(
            list(block.children) + mine,
            key=lambda x: x.line if isinstance(x, Annotation) else x.span[0])
        for item in items:
            if isinstance(item, Annotation):
                seq.open(ActionNode(item.text, item.zoom, item.parallel))
            else:
                self._fuse_stmt(item, seq)

    def _owning_block(self, block: Stmt, line: int) -> Stmt:
        for child in block.children:
            if child.span[0] <= line <= child.span[1]:
                deeper = self._deepest_block(child, line)
                return deeper if deeper is not None else block
        return block

    def _deepest_block(self, stmt: Stmt, line: int) -> Stmt | None:
        best = stmt if stmt.kind is StmtKind.BLOCK else None
        for child in stmt.children:
            if child.span[0] <= line <= child.span[1]:
                deeper = self._deepest_block(child, line)
                if deeper is not None:
                    return deeper
        return best

    def _fuse_stmt(self, stmt: Stmt, seq: _Seq) -> None:
        if stmt.kind is StmtKind.BLOCK:
            # bare blocks are scoping only; contents flow through
            self._fuse_into(stmt, seq)
            return
        if stmt.kind is StmtKind.RETURN:
            text = None
            if stmt.header_pos in self.ret_descs:
                self.consumed_descs.add(stmt.header_pos)
                text = self.ret_descs[stmt.header_pos].text
            self._absorb_calls(stmt, seq)
            seq.append(StopNode(text))
            return
        if stmt.kind is StmtKind.IF and self._renders(stmt):
            seq.append(self._branch(stmt))
            return
        if stmt.kind in (StmtKind.WHILE, StmtKind.FOR) and self._renders(stmt):
            label = self._desc_for([stmt.header_pos])
            if label is None:
                label = collapse_ws(stmt.condition_text or "") or "..."
            seq.append(LoopNode(LoopStyle.PRE_TEST, label,
                                self.fuse_block(stmt.children[0])))
            return
        if stmt.kind is StmtKind.DO_WHILE and self._renders(stmt):
            label = self._desc_for([stmt.header_pos] + stmt.extra_bind_positions)
            if label is None:
                label = collapse_ws(stmt.condition_text or "") or "..."
            seq.append(LoopNode(LoopStyle.POST_TEST, label,
                                self.fuse_block(stmt.children[0])))
            return
        # absorbed: plain statements and silent constructs
        self._absorb_calls(stmt, seq)

    def _absorb_calls(self, stmt: Stmt, seq: _Seq) -> None:
        for call in stmt.calls:
            if call.line not in self.highlight_lines:
                continue
            link = self.db.resolve(call, self.fn.file, self.diags)
            if link is not None:
                hc = HighlightedCall(link.display + "()", link.href)
            else:
                self.diags.append(warning(
                    "no-link",
                    f"no diagram found for call '{call.callee_text}'; "
                    f"shown without a link",
                    self.fn.file, call.line))
                hc = HighlightedCall(call.callee_text + "()", None)
            seq.ensure().calls.append(hc)
            self.surfaced_highlights.add(call.line)
        for child in stmt.children:
            self._absorb_calls(child, seq)

    def _branch(self, stmt: Stmt) -> BranchNode:
        arms: list[BranchArm] = []
        label = self._desc_for([stmt.header_pos])
        if label is None:
            label = collapse_ws(stmt.condition_text or "") or "..."
        arms.append(BranchArm(label, self.fuse_block(stmt.children[0])))
        rest = stmt.children[1:]
        n_elif = len(rest) - 1 if stmt.has_else else len(rest)
        for k in range(n_elif):
            label = self._desc_for([stmt.arm_header_positions[k]])
            if label is None:
                label = collapse_ws(stmt.arm_conditions[k]) or "..."
            arms.append(BranchArm(label, self.fuse_block(rest[k])))
        if stmt.has_else:
            label = self._desc_for([stmt.arm_header_positions[-1]])
            arms.append(BranchArm(label, self.fuse_block(rest[-1]),
                                  is_else=True))
        return BranchNode(arms)

    # -- diagnostics ------------------------------------------------------

    def report_leftovers(self) -> None:
        for pos, ann in sorted(self.descs.items()):
            if pos not in self.consumed_descs:
                self.diags.append(warning(
                    "unused-condition-description",
                    f"description '[{ann.text}]' was not applied to any "
                    f"rendered construct",
                    self.fn.file, ann.line))
        for pos, ann in sorted(self.ret_descs.items()):
            if pos not in self.consumed_descs:
                self.diags.append(warning(
                    "unused-condition-description",
                    f"description '[{ann.text}]' was not applied to any "
                    f"rendered return",
                    self.fn.file, ann.line))
        for line in sorted(self.highlight_lines - self.surfaced_highlights):
            self.diags.append(warning(
                "dangling-call-highlight",
                "call highlight could not be attached to an action; ignored",
                self.fn.file, line))


def _fork_pass(nodes: list[ActivityNode]) -> list[ActivityNode]:
    """Group runs of >= 2 consecutive parallel actions at one zoom level."""
    out: list[ActivityNode] = []
    i = 0
    while i < len(nodes):
        node = nodes[i]
        if isinstance(node, ActionNode) and node.parallel:
            j = i
            while (j < len(nodes) and isinstance(nodes[j], ActionNode)
                   and nodes[j].parallel and nodes[j].zoom == node.zoom):
                j += 1
            if j - i >= 2:
                out.append(ForkNode([[n] for n in nodes[i:j]]))
                i = j
                continue
        out.append(node)
        i += 1
    return out


def project(tree: ActivityTree, level: int) -> ActivityTree:
    """The tree restricted to actions at zoom <= level.

    Construct shells whose every surviving body is empty are dropped; a fork
    reduced to one branch is spliced inline; stops always survive.
    """
    if not 0 <= level <= tree.max_zoom:
        raise LevelOutOfRange(
            f"zoom level {level} outside 0..{tree.max_zoom} "
            f"for {tree.qualified_name}")

    def filter_nodes(nodes: list[ActivityNode]) -> list[ActivityNode]:
        out: list[ActivityNode] = []
        for node in nodes:
            if isinstance(node, ActionNode):
                if node.zoom <= level:
                    out.append(node)
            elif isinstance(node, BranchNode):
                arms = [BranchArm(a.label, filter_nodes(a.body), a.is_else)
                        for a in node.arms]
                if any(arm.body for arm in arms):
                    out.append(BranchNode(arms))
            elif isinstance(node, LoopNode):
                body = filter_nodes(node.body)
                if body:
                    out.append(LoopNode(node.style, node.label, body))
            elif isinstance(node, ForkNode):
                branches = [b for b in (filter_nodes(br) for br in node.branches) if b]
                if len(branches) >= 2:
                    out.append(ForkNode(branches))
                elif len(branches) == 1:
                    out.extend(branches[0])
            else:
                out.append(node)
        return out

    return ActivityTree(tree.qualified_name, tree.signature_text, tree.anchor,
                        filter_nodes(tree.root), tree.max_zoom)
