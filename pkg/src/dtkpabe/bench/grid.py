"""Experiment grids: one sweep variable, three schemes, R repetitions per cell."""
from __future__ import annotations

import csv
import hashlib
import statistics
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .schemes import KB, ROW_FIELDS, BenchParams, CostModel, SchemeKind, measure

SWEEPS = ("rus", "size", "attrs")
_SWEEP_FIELD = {"rus": "t", "size": "msg_size", "attrs": "attrs"}

# Defaults follow the published setup: 100 KB bids while the RU count grows to
# 100; 20 RUs while the bid size grows; 1 MB and 20 RUs while |gamma| grows.
DEFAULT_VALUES = {
    "rus": (10, 20, 40, 60, 80, 100),
    "size": (1 * KB, 10 * KB, 100 * KB, 1000 * KB),
    "attrs": (2, 4, 8, 16),
}
DEFAULT_BASE = {
    "rus": BenchParams(t=20, msg_size=100 * KB, attrs=4),
    "size": BenchParams(t=20, msg_size=100 * KB, attrs=4),
    "attrs": BenchParams(t=20, msg_size=1000 * KB, attrs=4),
}


@dataclass(frozen=True)
class ExperimentGrid:
    sweep: str
    values: tuple[int, ...]
    base: BenchParams
    schemes: tuple[SchemeKind, ...] = tuple(SchemeKind)
    reps: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if not self.values:
            raise ValueError("empty sweep")
        if self.reps < 1:
            raise ValueError("need at least one repetition")

    @classmethod
    def default(cls, sweep: str, **kw) -> ExperimentGrid:
        return cls(sweep=sweep, values=DEFAULT_VALUES[sweep], base=DEFAULT_BASE[sweep], **kw)

    def params(self, kind: SchemeKind, value: int) -> BenchParams:
        seed = int.from_bytes(hashlib.sha256(
            f"{self.seed}/{self.sweep}/{kind.value}/{value}".encode()).digest()[:8], "big")
        return replace(self.base, **{_SWEEP_FIELD[self.sweep]: value}, seed=seed)

    def cells(self) -> list[tuple[SchemeKind, int, BenchParams]]:
        return [(kind, v, self.params(kind, v)) for kind in self.schemes for v in self.values]


@dataclass
class GridRow:
    sweep: str
    value: int
    cost: CostModel

    def to_row(self) -> dict[str, object]:
        return {"sweep": self.sweep, "value": self.value, **self.cost.to_row()}

    @classmethod
    def from_row(cls, row) -> GridRow:
        return cls(row["sweep"], int(row["value"]), CostModel.from_row(row))


CSV_FIELDS = ["sweep", "value"] + ROW_FIELDS


def _run_cell(args) -> list[CostModel]:
    kind, params, reps = args
    return measure(kind, params, reps)


def run_grid(grid: ExperimentGrid, parallel: bool = False, workers: int | None = None) -> list[GridRow]:
    """One row per (scheme, sweep value, repetition)."""
    cells = grid.cells()
    for kind, _, params in cells:
        params.check(kind)
    jobs = [(kind, params, grid.reps) for kind, _, params in cells]
    if parallel:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]
    rows = []
    for (kind, value, _), samples in zip(cells, results):
        rows += [GridRow(grid.sweep, value, cm) for cm in samples]
    return rows


def write_csv(rows: Iterable[GridRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r.to_row())


def read_csv(path) -> list[GridRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"CSV is missing columns {sorted(missing)}")
        return [GridRow.from_row(r) for r in reader]


def medians(rows: Sequence[GridRow], metric: str) -> dict[tuple[str, str], list[tuple[int, float]]]:
    """(sweep, scheme) -> sorted [(value, median metric)]."""
    acc: dict[tuple[str, str, int], list[float]] = defaultdict(list)
    for r in rows:
        acc[(r.sweep, r.cost.scheme, r.value)].append(getattr(r.cost, metric))
    out: dict[tuple[str, str], list[tuple[int, float]]] = defaultdict(list)
    for (sweep, scheme, value), ys in sorted(acc.items()):
        out[(sweep, scheme)].append((value, statistics.median(ys)))
    return dict(out)


PLOT_METRICS = ("enc_total_ns", "enc_party_ns", "dec_total_ns")


def write_gnuplot(rows: Sequence[GridRow], path) -> None:
    """One data block per (sweep, scheme); plot with ``index N using 1:2``."""
    tables = {m: medians(rows, m) for m in PLOT_METRICS}
    blocks = []
    for key in sorted(tables[PLOT_METRICS[0]]):
        sweep, scheme = key
        lines = [f"# sweep={sweep} scheme={scheme}", "# value " + " ".join(m.replace("_ns", "_ms") for m in PLOT_METRICS)]
        cols = [dict(tables[m][key]) for m in PLOT_METRICS]
        for value in sorted(cols[0]):
            lines.append(f"{value} " + " ".join(f"{c[value] / 1e6:.6f}" for c in cols))
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n\n".join(blocks) + "\n", encoding="utf-8")
