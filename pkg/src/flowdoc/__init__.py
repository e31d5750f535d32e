"""flowdoc: flowchart documentation generated from annotated C++ sources.

The pipeline has three phases, mirrored by the CLI subcommands:

* ``build-db``  - scan each source and record its annotated functions in a
  per-source ``.flowdb`` text database,
* ``makeflows`` - emit one PlantUML activity diagram per annotated function
  and zoom level, with cross-diagram hyperlinks resolved through the merged
  database,
* ``makehtml``  - emit browsable HTML pages plus an index.

``all`` runs the phases in order (optionally rendering diagrams to SVG via an
external command).
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
