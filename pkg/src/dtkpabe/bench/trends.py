"""Least-squares trend fits over grid medians and the ordering/shape checks."""
from __future__ import annotations

import json
import statistics
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

from .grid import GridRow, medians
from .schemes import SchemeKind

MIN_POINTS = 4
S1, S2, P = SchemeKind.SCHEME1.value, SchemeKind.SCHEME2.value, SchemeKind.PROPOSED.value


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> Fit:
    if len(xs) != len(ys):
        raise ValueError("x and y differ in length")
    if len(set(xs)) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} distinct sweep points, got {len(set(xs))}")
    slope, intercept = statistics.linear_regression(xs, ys)
    mean = statistics.fmean(ys)
    ss_tot = sum((y - mean) ** 2 for y in ys)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return Fit(slope, intercept, r2, len(xs))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class TrendReport:
    fits: dict[str, Fit] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check | None:
        return next((c for c in self.checks if c.name == name), None)

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "fits": {k: asdict(v) for k, v in self.fits.items()},
                           "checks": [asdict(c) for c in self.checks], "notes": self.notes}, indent=2)

    def to_text(self) -> str:
        lines = [f"{k:<40} slope={f.slope:.6g} intercept={f.intercept:.6g} R2={f.r2:.4f} n={f.n}"
                 for k, f in sorted(self.fits.items())]
        lines += [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in self.checks]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def fit_trends(rows: Sequence[GridRow]) -> TrendReport:
    """Fit total time vs. sweep variable per (sweep, scheme) and evaluate the claims."""
    rep = TrendReport()
    series = {m: medians(rows, m) for m in ("enc_total_ns", "enc_party_ns", "dec_total_ns")}
    for metric, table in series.items():
        for (sweep, scheme), pts in table.items():
            rep.fits[f"{sweep}/{scheme}/{metric}"] = linear_fit([x for x, _ in pts], [y for _, y in pts])
    sweeps = {sweep for sweep, _ in series["dec_total_ns"]}

    def fit(sweep, scheme, metric):
        return rep.fits.get(f"{sweep}/{scheme}/{metric}")

    # S2 decryption grows linearly in the RU count
    f2 = fit("rus", S2, "dec_total_ns")
    if f2:
        rep.checks.append(Check("s2-decrypt-linear-in-rus", f2.slope > 0 and f2.r2 >= 0.9,
                                f"slope={f2.slope:.4g} ns/RU R2={f2.r2:.4f}"))

    # S1 and proposed decryption grow slower than S2
    for sweep in sorted(sweeps):
        ref = fit(sweep, S2, "dec_total_ns")
        for scheme in (S1, P):
            other = fit(sweep, scheme, "dec_total_ns")
            if ref and other:
                rep.checks.append(Check(f"decrypt-slope-{sweep}-{scheme}-below-s2", other.slope < ref.slope,
                                        f"{other.slope:.4g} vs {ref.slope:.4g}"))

    # S1 encryption grows with total data volume t*m
    for sweep in ("rus", "size"):
        pts = [(r.cost.t * r.cost.msg_size, r.cost.enc_total_ns) for r in rows
               if r.sweep == sweep and r.cost.scheme == S1]
        if len({x for x, _ in pts}) >= MIN_POINTS:
            vol = _median_fit(pts)
            rep.fits[f"{sweep}/{S1}/enc_total_ns_vs_volume"] = vol
            rep.checks.append(Check(f"s1-encrypt-grows-with-volume-{sweep}", vol.slope > 0,
                                    f"slope={vol.slope:.4g} ns/byte"))

    # encryption ordering at the largest attribute count (per-party view)
    party = series["enc_party_ns"]
    if all(("attrs", s) in party for s in (S1, S2, P)):
        top = {s: dict(party[("attrs", s)]) for s in (S1, S2, P)}
        vmax = max(top[S1])
        if all(vmax in top[s] for s in (S2, P)):
            for s in (P, S2):
                rep.checks.append(Check(f"encrypt-{s}-below-s1-at-{vmax}-attrs", top[s][vmax] < top[S1][vmax],
                                        f"{top[s][vmax] / 1e6:.3f} ms vs {top[S1][vmax] / 1e6:.3f} ms"))

    # informational: per-party S2 encryption vs RU count should be roughly flat
    fp = fit("rus", S2, "enc_party_ns")
    if fp:
        pts = party[("rus", S2)]
        xs = [x for x, _ in pts]
        drift = fp.slope * (max(xs) - min(xs)) / max(statistics.fmean(y for _, y in pts), 1)
        rep.notes.append(f"s2 per-RU encryption drift across the RU sweep: {drift:+.1%}")
    return rep


def _median_fit(pts: list[tuple[int, int]]) -> Fit:
    by_x: dict[int, list[int]] = {}
    for x, y in pts:
        by_x.setdefault(x, []).append(y)
    xs = sorted(by_x)
    return linear_fit(xs, [statistics.median(by_x[x]) for x in xs])
