"""Location -> Operation -> Contaminant chain extraction.

Per matrix row, columns at or above the row's 75th percentile are selected
(descending, truncated to k). Chains combine three matrices: a location's
closest contaminants, its closest operations, and each such operation's
closest contaminants.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .records import ViolationStats, stats_to_delimited
from .similarity import SimilarityMatrix
from .vocab import KeywordCatalog, KeywordCategory

PERCENTILE_METHOD = "weibull"  # linear interpolation over (n+1)q positions


@dataclass(frozen=True)
class OperationLink:
    operation: str
    similarity: float
    contaminants: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class RelationChain:
    location: str
    location_contaminants: tuple[tuple[str, float], ...]
    operations: tuple[OperationLink, ...]


def row_quartile_threshold(values: np.ndarray) -> float:
    return float(np.percentile(values, 75, method=PERCENTILE_METHOD))


def upper_quartile_select(
    matrix: SimilarityMatrix,
    row: str | int,
    threshold: float | None = None,
) -> list[tuple[str, float]]:
    """Columns whose value is >= the row's 75th percentile (or an explicit
    threshold, for global-quartile mode), descending by value with ties
    broken by column index."""
    index = matrix.row_labels.index(row) if isinstance(row, str) else row
    values = matrix.values[index]
    cut = row_quartile_threshold(values) if threshold is None else threshold
    selected = [j for j in range(len(values)) if values[j] >= cut]
    selected.sort(key=lambda j: (-values[j], j))
    return [(matrix.col_labels[j], float(values[j])) for j in selected]


def _dedup(pairs: Iterable[tuple[str, float]]) -> tuple[tuple[str, float], ...]:
    seen: set[str] = set()
    out = []
    for token, value in pairs:
        if token not in seen:
            seen.add(token)
            out.append((token, value))
    return tuple(out)


def _check_labels(name: str, got: Sequence[str], expected: Sequence[str]) -> None:
    got, expected = list(got), list(expected)
    if got == expected:
        return
    for a, b in zip(got, expected):
        if a != b:
            raise DataError(f"matrix label mismatch in {name}: first offending label {a!r}")
    extra = got[len(expected):] + expected[len(got):]
    raise DataError(f"matrix label mismatch in {name}: first offending label {extra[0]!r}")


def build_chains(
    loc_cont: SimilarityMatrix,
    loc_op: SimilarityMatrix,
    op_cont: SimilarityMatrix,
    k: int = 3,
    global_quartile: bool = False,
) -> list[RelationChain]:
    """One chain per location row: the top-k above-quartile contaminants and
    operations for the location, and per operation its top-k above-quartile
    contaminants. Row order follows loc_cont."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_labels("location rows (loc-cont vs loc-op)", loc_cont.row_labels, loc_op.row_labels)
    _check_labels("operation labels (loc-op cols vs op-cont rows)", loc_op.col_labels, op_cont.row_labels)

    def cut(matrix: SimilarityMatrix) -> float | None:
        return row_quartile_threshold(matrix.values.ravel()) if global_quartile else None

    chains: list[RelationChain] = []
    for location in loc_cont.row_labels:
        conts = _dedup(upper_quartile_select(loc_cont, location, cut(loc_cont)))[:k]
        ops = _dedup(upper_quartile_select(loc_op, location, cut(loc_op)))[:k]
        links = tuple(
            OperationLink(
                operation=op,
                similarity=sim,
                contaminants=_dedup(upper_quartile_select(op_cont, op, cut(op_cont)))[:k],
            )
            for op, sim in ops
        )
        chains.append(RelationChain(location, conts, links))
    return chains


def chains_to_delimited(chains: Iterable[RelationChain], *, delimiter: str = ",") -> str:
    """Flat export: location, operation rank, operation, contaminant rank,
    contaminant, similarity. Location-contaminant rows leave the operation
    fields empty; location-operation rows leave the contaminant fields empty.
    Similarities are written at full precision so the file re-parses to an
    equal structure."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(
        ["location", "operation_rank", "operation", "contaminant_rank", "contaminant", "similarity"]
    )
    for chain in chains:
        for i, (cont, sim) in enumerate(chain.location_contaminants, 1):
            writer.writerow([chain.location, "", "", i, cont, repr(sim)])
        for j, link in enumerate(chain.operations, 1):
            writer.writerow([chain.location, j, link.operation, "", "", repr(link.similarity)])
            for i, (cont, sim) in enumerate(link.contaminants, 1):
                writer.writerow([chain.location, j, link.operation, i, cont, repr(sim)])
    return out.getvalue()


def parse_chains_delimited(text: str, *, delimiter: str = ",") -> list[RelationChain]:
    """Inverse of chains_to_delimited."""
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = next(reader, None)
    if header != ["location", "operation_rank", "operation", "contaminant_rank", "contaminant", "similarity"]:
        raise DataError(f"unexpected chain export header: {header!r}")

    chains: list[RelationChain] = []
    location: str | None = None
    loc_conts: list[tuple[str, float]] = []
    links: list[OperationLink] = []
    op_conts: list[tuple[str, float]] = []
    current_op: tuple[str, float] | None = None

    def close_op() -> None:
        nonlocal current_op
        if current_op is not None:
            links.append(OperationLink(current_op[0], current_op[1], tuple(op_conts)))
            op_conts.clear()
            current_op = None

    def close_chain() -> None:
        nonlocal location
        close_op()
        if location is not None:
            chains.append(RelationChain(location, tuple(loc_conts), tuple(links)))
            loc_conts.clear()
            links.clear()
            location = None

    for lineno, row in enumerate(reader, 2):
        if len(row) != 6:
            raise DataError(f"chain export line {lineno}: expected 6 fields, got {len(row)}")
        loc, op_rank, op, cont_rank, cont, sim_text = row
        try:
            sim = float(sim_text)
        except ValueError:
            raise DataError(f"chain export line {lineno}: bad similarity {sim_text!r}") from None
        if loc != location:
            close_chain()
            location = loc
        if not op:
            loc_conts.append((cont, sim))
        elif not cont:
            close_op()
            current_op = (op, sim)
        else:
            if current_op is None or current_op[0] != op:
                raise DataError(f"chain export line {lineno}: contaminant row for unopened operation {op!r}")
            op_conts.append((cont, sim))
    close_chain()
    return chains


def _format_matrix_section(title: str, matrix: SimilarityMatrix) -> list[str]:
    lines = [title, "-" * len(title)]
    width = max(8, *(len(c) + 2 for c in matrix.col_labels))
    label_width = max(len(r) for r in matrix.row_labels) + 2
    lines.append(" " * label_width + "".join(c.rjust(width) for c in matrix.col_labels))
    for i, row_label in enumerate(matrix.row_labels):
        cells = []
        for j in range(len(matrix.col_labels)):
            marker = ""
            if matrix.row_max_col[i] == j:
                marker += "*"
            if matrix.col_max_row[j] == i:
                marker += "^"
            cells.append(f"{matrix.values[i, j]:.3f}{marker}".rjust(width))
        lines.append(row_label.ljust(label_width) + "".join(cells))
    lines.append("(* largest value in its row; ^ largest value in its column)")
    for i, row_label in enumerate(matrix.row_labels):
        j = int(matrix.row_max_col[i])
        lines.append(f"row max: {row_label} -> {matrix.col_labels[j]} ({matrix.values[i, j]:.3f})")
    lines.append("")
    return lines


def render_report(
    chains: Sequence[RelationChain],
    stats: ViolationStats | None = None,
    matrices: Sequence[tuple[str, SimilarityMatrix]] = (),
    catalog: KeywordCatalog | None = None,
    parameters: dict[str, object] | None = None,
) -> str:
    """Deterministic plain-text report over the supplied artifacts."""
    lines = ["VIOLATION PATTERN REPORT", "=" * 24, ""]
    params = {"percentile_method": PERCENTILE_METHOD}
    if parameters:
        params.update(parameters)
    lines.append("parameters: " + ", ".join(f"{k}={v}" for k, v in sorted(params.items())))
    lines.append("")

    if stats is not None:
        lines += ["Violation statistics", "--------------------"]
        lines += stats_to_delimited(stats).splitlines()
        lines.append("")

    if catalog is not None:
        lines += ["Keyword frequencies", "-------------------"]
        for category in KeywordCategory:
            entries = catalog.categories.get(category, [])
            listing = ", ".join(f"{t} ({f})" for t, f in entries) or "(none)"
            lines.append(f"{category.value}: {listing}")
        lines.append("")

    for title, matrix in matrices:
        lines += _format_matrix_section(title, matrix)

    lines += ["Relation chains (location -> operation -> contaminant)", "-" * 54]
    if not chains:
        lines.append("no relations above quartile")
    for chain in chains:
        conts = ", ".join(f"{t} ({v:.3f})" for t, v in chain.location_contaminants) or "(none)"
        lines.append(f"{chain.location}: contaminants {conts}")
        for link in chain.operations:
            op_conts = ", ".join(f"{t} ({v:.3f})" for t, v in link.contaminants) or "(none)"
            lines.append(f"  {link.operation} ({link.similarity:.3f}) -> {op_conts}")
    lines.append("")
    return "\n".join(lines)
