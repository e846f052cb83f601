"""``bench`` command line: run sweeps, fit trends, replay protocol scenarios."""
from __future__ import annotations

import argparse
import re
import sys
from dataclasses import replace
from pathlib import Path

from .grid import DEFAULT_BASE, DEFAULT_VALUES, SWEEPS, ExperimentGrid, read_csv, run_grid, write_csv, write_gnuplot
from .schemes import SchemeKind
from .trends import fit_trends

_UNITS = {"": 1, "b": 1, "k": 1024, "kb": 1024, "kib": 1024, "m": 1024 ** 2, "mb": 1024 ** 2, "mib": 1024 ** 2}


def parse_size(text: str) -> int:
    """'100', '100KB', '1mb' -> bytes (binary multiples)."""
    m = re.fullmatch(r"\s*(\d+)\s*([a-zA-Z]*)\s*", text)
    if not m or m.group(2).lower() not in _UNITS:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2).lower()]


def _values(items: list[str] | None, sweep: str) -> tuple[int, ...]:
    if not items:
        return DEFAULT_VALUES[sweep]
    parts = [p for item in items for p in item.split(",") if p.strip()]
    conv = parse_size if sweep == "size" else int
    return tuple(conv(p) for p in parts)


def _schemes(text: str) -> tuple[SchemeKind, ...]:
    if text == "all":
        return tuple(SchemeKind)
    return (SchemeKind.parse(text),)


def cmd_run(args) -> int:
    base = DEFAULT_BASE[args.sweep]
    over = {}
    if args.n is not None:
        over["t"] = args.n
    if args.msg_size is not None:
        over["msg_size"] = args.msg_size
    if args.attrs is not None:
        over["attrs"] = args.attrs
    over["k"] = args.k
    over["tp"] = args.tp
    grid = ExperimentGrid(sweep=args.sweep, values=_values(args.values, args.sweep), base=replace(base, **over),
                          schemes=_schemes(args.scheme), reps=args.reps, seed=args.seed)
    rows = run_grid(grid, parallel=args.parallel)
    out = Path(args.out)
    write_csv(rows, out)
    write_gnuplot(rows, out.with_suffix(".dat"))
    print(f"wrote {len(rows)} rows to {out} (gnuplot data: {out.with_suffix('.dat')})")
    return 0


def cmd_fit(args) -> int:
    rows = []
    for path in args.inp:
        rows += read_csv(path)
    report = fit_trends(rows)
    if args.out:
        text = report.to_json() if str(args.out).endswith(".json") else report.to_text() + "\n"
        Path(args.out).write_text(text, encoding="utf-8")
    print(report.to_text())
    return 0 if report.ok else 1


def cmd_scenario(args) -> int:
    from ..protocol.scenario import run_scenario_file
    from ..protocol.simulator import summarize

    transcript = run_scenario_file(args.file, args.out)
    print(f"{len(transcript.records)} events, {len(transcript.accepted)} accepted, "
          f"{len(transcript.rejected)} rejected; transcript: {args.out}")
    for d in transcript.deliveries:
        state = "authorized" if d.authorized else "denied"
        print(f"  {d.ao} @ {d.t_us / 1e6:g}s: {state}, {len(d.payloads)}/{d.available} payloads")
    for role, ops in summarize(transcript).items():
        print(f"  {role}: " + " ".join(f"{k}={v}" for k, v in ops.items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="time the three upload schemes over one sweep")
    run.add_argument("--scheme", default="all", choices=["1", "2", "proposed", "all"])
    run.add_argument("--sweep", required=True, choices=SWEEPS)
    run.add_argument("--values", nargs="+", help="sweep points, space or comma separated (sizes accept KB/MB)")
    run.add_argument("--n", type=int, help="uploading RUs t when not swept")
    run.add_argument("--k", type=int, help="threshold for the proposed scheme (default: k = t)")
    run.add_argument("--msg-size", type=parse_size, help="bytes per RU when not swept")
    run.add_argument("--attrs", type=int, help="attribute count when not swept")
    run.add_argument("--reps", type=int, default=5)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--tp", type=float, default=0.0, help="transaction period in seconds, added analytically")
    run.add_argument("--out", required=True)
    run.add_argument("--parallel", action="store_true", help="run grid cells in worker processes")
    run.set_defaults(func=cmd_run)

    fit = sub.add_parser("fit", help="fit trends to one or more grid CSVs")
    fit.add_argument("--in", dest="inp", nargs="+", required=True)
    fit.add_argument("--out", help="optional report path (.json for JSON, text otherwise)")
    fit.set_defaults(func=cmd_fit)

    sc = sub.add_parser("scenario", help="replay a protocol scenario and write its transcript")
    sc.add_argument("--file", required=True)
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_scenario)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
