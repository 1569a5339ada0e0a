"""Reader for the result-table CSV contract.

A table file carries `#`-prefixed `key=value` metadata lines, then a header
row, then one row of floats per axis value. The first column is the x axis.
Every other column is named `<label>.<variant>`, where the variant records
how the series was produced: `analytic`, `exact`, and `approx` are closed
forms, `mc` is a simulation estimate, and `ci` is the 95% half-width that
belongs to the `mc` column of the same label.

The reader is intentionally self-contained. It shares no code with the tool
that writes these files, so tables can be rendered on machines that only
have the CSVs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["VARIANTS", "Table", "read_table", "split_name"]

VARIANTS = ("analytic", "exact", "approx", "mc", "ci")


def split_name(name: str) -> tuple[str, str]:
    """Split a series column name into its label and variant.

    Labels may themselves contain dots, so only the last segment is the
    variant, and it must be one of the known tags.
    """
    label, _, variant = name.rpartition(".")
    if not label:
        raise ValueError(f"column {name!r} has no variant suffix")
    if variant not in VARIANTS:
        raise ValueError(
            f"column {name!r} ends in unknown variant {variant!r}; "
            f"expected one of {', '.join(VARIANTS)}"
        )
    return label, variant


@dataclass(frozen=True)
class Table:
    axis: str
    columns: tuple[tuple[str, np.ndarray], ...]
    metadata: tuple[tuple[str, str], ...]

    @property
    def x(self) -> np.ndarray:
        return self.columns[0][1]

    def series_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns[1:])

    def column(self, name: str) -> np.ndarray:
        for col, values in self.columns:
            if col == name:
                return values
        raise KeyError(name)

    def metadata_dict(self) -> dict[str, str]:
        return dict(self.metadata)

    def groups(self) -> dict[str, dict[str, np.ndarray]]:
        """Series columns grouped by label, in header order."""
        out: dict[str, dict[str, np.ndarray]] = {}
        for name, values in self.columns[1:]:
            label, variant = split_name(name)
            out.setdefault(label, {})[variant] = values
        return out


def read_table(path) -> Table:
    metadata: list[tuple[str, str]] = []
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition("=")
                metadata.append((key.strip(), value))
                continue
            if header is None:
                header = [name.strip() for name in line.split(",")]
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise ValueError(
                    f"{path}: line {lineno} has {len(cells)} cells, "
                    f"header has {len(header)}"
                )
            rows.append([float(tok) for tok in cells])
    if header is None:
        raise ValueError(f"{path}: no header row found")
    for name in header[1:]:
        split_name(name)
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    columns = tuple(
        (name, np.ascontiguousarray(data[:, i])) for i, name in enumerate(header)
    )
    return Table(axis=header[0], columns=columns, metadata=tuple(metadata))
