"""Static HTML pages around the rendered diagrams, plus the index.

One page per source file that has annotated functions. Every function gets a
section with one subsection per zoom level: the SVG (object tag, so links
inside the diagram stay clickable) with the PlantUML text as fallback and as
a collapsible block. Pages and the index are regenerated from scratch on
every run; nothing in the output directory is treated as input except the
``.flowdb`` files.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from pathlib import Path

from .flowdb import FlowDb
from .ioutil import atomic_write_text
from .plantuml_emit import DiagramText, diagram_filename

_PAGE_CSS = """\
body { font-family: sans-serif; margin: 2em auto; max-width: 60em; padding: 0 1em; }
h1 { border-bottom: 2px solid #888; padding-bottom: 0.2em; }
h2 { margin-top: 2em; border-bottom: 1px solid #bbb; }
code, pre { background: #f4f4f4; }
pre { padding: 0.8em; overflow-x: auto; }
nav { margin-bottom: 1.5em; }
details { margin: 0.5em 0 1.5em; }
.zoom { margin: 1em 0 2em; }
"""


@dataclass
class PageFunction:
    qualified_name: str
    signature: str
    anchor: str
    diagrams: list[DiagramText] = field(default_factory=list)


def _head(title: str) -> str:
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>{html.escape(title)}</title>\n"
        f"<style>\n{_PAGE_CSS}</style>\n</head>\n<body>\n"
    )


def emit_page(source_stem: str, funcs: list[PageFunction],
              out_dir: str | Path) -> Path:
    """Write <stem>.html for one source file."""
    parts = [_head(source_stem)]
    parts.append('<nav><a href="index.html">index</a></nav>\n')
    parts.append(f"<h1>{html.escape(source_stem)}</h1>\n")
    for fn in funcs:
        parts.append(f'<h2 id="{fn.anchor}">{html.escape(fn.qualified_name)}</h2>\n')
        sig = re.sub(r"\s+", " ", fn.signature).strip()
        parts.append(f"<p><code>{html.escape(sig)}</code></p>\n")
        for dia in fn.diagrams:
            svg = diagram_filename(dia.source_stem, dia.anchor, dia.zoom)
            svg = svg[:-len(".txt")] + ".svg"
            parts.append(f'<div class="zoom" id="{fn.anchor}__zoom{dia.zoom}">\n')
            parts.append(f"<h3>zoom level {dia.zoom}</h3>\n")
            parts.append(
                f'<object type="image/svg+xml" data="aux_files/{svg}">\n'
                f"<pre>{html.escape(dia.content)}</pre>\n"
                "</object>\n")
            parts.append(
                "<details><summary>PlantUML source</summary>\n"
                f"<pre>{html.escape(dia.content)}</pre>\n"
                "</details>\n</div>\n")
    parts.append("</body>\n</html>\n")
    page = Path(out_dir) / f"{source_stem}.html"
    atomic_write_text(page, "".join(parts))
    return page


def emit_index(db: FlowDb, out_dir: str | Path) -> Path:
    """Write index.html listing every documented function, grouped by page."""
    parts = [_head("flow documentation")]
    parts.append("<h1>flow documentation</h1>\n")
    by_page: dict[str, list] = {}
    for entry in db.entries.values():
        by_page.setdefault(entry.html_path, []).append(entry)
    if not by_page:
        parts.append("<p>No annotated functions were found.</p>\n")
    for page in sorted(by_page):
        parts.append(f'<h2><a href="{html.escape(page, quote=True)}">'
                     f"{html.escape(page)}</a></h2>\n<ul>\n")
        for entry in sorted(by_page[page], key=lambda e: (e.qualified_name, e.anchor)):
            zooms = ("zoom 0" if entry.max_zoom == 0
                     else f"zoom 0&ndash;{entry.max_zoom}")
            parts.append(
                f'<li><a href="{html.escape(entry.html_path, quote=True)}'
                f'#{entry.anchor}">{html.escape(entry.qualified_name)}</a>'
                f" ({zooms})</li>\n")
        parts.append("</ul>\n")
    parts.append("</body>\n</html>\n")
    page = Path(out_dir) / "index.html"
    atomic_write_text(page, "".join(parts))
    return page


@dataclass(frozen=True)
class LinkRef:
    source: str
    target: str
    ok: bool


@dataclass
class LinkReport:
    refs: list[LinkRef]

    @property
    def resolved(self) -> int:
        return sum(1 for r in self.refs if r.ok)

    @property
    def broken(self) -> int:
        return sum(1 for r in self.refs if not r.ok)


_ID_RE = re.compile(r'id="([^"]+)"')
_HREF_RE = re.compile(r'href="([^"]+)"')
_DIAGRAM_LINK_RE = re.compile(r"\[\[(\S+)")


def check_links(out_dir: str | Path) -> LinkReport:
    """Verify every internal link in an output tree.

    Covers hrefs in the HTML pages and ``[[target ...]]`` hyperlinks inside
    the diagram texts under aux_files/.
    """
    out = Path(out_dir)
    ids: dict[str, set[str]] = {}
    for page in out.glob("*.html"):
        ids[page.name] = set(_ID_RE.findall(page.read_text(encoding="utf-8")))

    refs: list[LinkRef] = []

    def check(source: str, target: str) -> None:
        if target.startswith(("http:", "https:", "mailto:")):
            return
        page, _, anchor = target.partition("#")
        page = page.removeprefix("../")
        if not page.endswith(".html"):
            return
        ok = page in ids and (not anchor or anchor in ids[page])
        refs.append(LinkRef(source, target, ok))

    for page in sorted(out.glob("*.html")):
        for href in _HREF_RE.findall(page.read_text(encoding="utf-8")):
            check(page.name, href)
    aux = out / "aux_files"
    if aux.is_dir():
        for txt in sorted(aux.glob("*.txt")):
            for target in _DIAGRAM_LINK_RE.findall(txt.read_text(encoding="utf-8")):
                check(f"aux_files/{txt.name}", target)
    return LinkReport(refs)
