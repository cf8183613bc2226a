"""Shared CSV loading for the plot scripts.

Every experiment CSV starts with a "# schema: NAME" line; each script declares
the schema it can render and aborts with the expected name on mismatch.
"""

import csv
import sys

import matplotlib

matplotlib.use("Agg")

FIGSIZE = (6.4, 4.0)
DPI = 150


def load_rows(path: str, expected_schema: str):
    """Rows of a schema-tagged CSV as dicts; aborts on schema mismatch."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        prefix = "# schema: "
        found = first[len(prefix):] if first.startswith(prefix) else "<missing>"
        if found != expected_schema:
            sys.exit(f"{path}: expected schema {expected_schema}, found {found}")
        return list(csv.DictReader(fh))


def save(fig, out_path: str) -> None:
    fig.savefig(out_path, dpi=DPI)
    print(out_path)
