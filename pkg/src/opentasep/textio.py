"""CSV/JSON emission helpers shared by the table types and the CLI.

CSV files carry a header row, UTF-8, LF line endings, and floats in the
shortest representation that round-trips to the same double.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence


def fmt(value) -> str:
    """Render a cell: floats via shortest round-trip repr, ints plainly."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        # repr of the plain float, not of numpy float subclasses
        return repr(float(value))
    if hasattr(value, "item"):  # numpy scalar
        return fmt(value.item())
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(cell) for cell in row) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
