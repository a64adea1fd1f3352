"""Experiment results and their on-disk form.

Each report becomes a directory holding one CSV and one SVG chart per rate
table plus ``summary.txt``.  Nothing time- or host-dependent is written, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import InvalidInputError
from .fitting import SlopeFit

PASS, FAIL, INFO, CONFIG_ERROR = "pass", "fail", "informational", "config-error"
EXIT_STATUS = {PASS: 0, INFO: 0, FAIL: 1, CONFIG_ERROR: 2}

EXACT, LOWER_BOUND = "exact", "certified-lower-bound"


def monte_carlo_mode(N: int, dkw: float) -> str:
    return f"monte-carlo(N={N};dkw={dkw!r})"


@dataclass
class RateTable:
    name: str
    family_id: str
    parameter: str
    grid: list
    distances: list
    mode: str = EXACT
    error_bounds: Optional[list] = None

    def __post_init__(self):
        self.grid = [float(g) for g in self.grid]
        self.distances = [float(d) for d in self.distances]
        if len(self.grid) != len(self.distances):
            raise InvalidInputError(f"table {self.name}: grid and distances differ in length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidInputError(f"table {self.name}: grid must be strictly increasing")
        if self.error_bounds is None:
            self.error_bounds = [0.0] * len(self.grid)
        self.error_bounds = [float(e) for e in self.error_bounds]

    def zero_fraction(self) -> float:
        return sum(d == 0 for d in self.distances) / max(1, len(self.distances))


@dataclass
class Check:
    name: str
    passed: Optional[bool]
    detail: str


@dataclass
class ExperimentReport:
    exp_id: str
    inputs: dict
    tables: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    verdict: str = INFO

    def table(self, name: str) -> RateTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def add_check(self, name: str, passed: Optional[bool], detail: str) -> None:
        self.checks.append(Check(name, passed, detail))

    def decide(self) -> str:
        """Verdict from the checks: any failed check fails the experiment."""
        graded = [c.passed for c in self.checks if c.passed is not None]
        if self.verdict == CONFIG_ERROR:
            return self.verdict
        if not graded:
            self.verdict = INFO
        else:
            self.verdict = PASS if all(graded) else FAIL
        return self.verdict

    @property
    def exit_status(self) -> int:
        return EXIT_STATUS[self.verdict]


def worst(verdicts) -> str:
    order = [PASS, INFO, FAIL, CONFIG_ERROR]
    return max(verdicts, key=order.index, default=INFO)


def _num(x: float) -> str:
    return "inf" if x == math.inf else repr(float(x))


def table_to_csv(t: RateTable) -> str:
    buf = io.StringIO()
    buf.write(f"# table: {t.name}\n# family: {t.family_id}\n# parameter: {t.parameter}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "distance", "mode", "error_bound"])
    for g, d, e in zip(t.grid, t.distances, t.error_bounds):
        w.writerow([_num(g), _num(d), t.mode, _num(e)])
    return buf.getvalue()


def read_rate_table(path) -> RateTable:
    meta, rows = {}, []
    with open(path, newline="") as fh:
        body = []
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(": ")
                meta[key] = val
            else:
                body.append(line)
    reader = csv.DictReader(body)
    for row in reader:
        rows.append(row)
    modes = {r["mode"] for r in rows}
    if len(modes) > 1:
        raise InvalidInputError(f"{path}: mixed modes in one table")
    return RateTable(meta.get("table", Path(path).stem), meta.get("family", ""),
                     meta.get("parameter", ""),
                     [float(r["parameter"]) for r in rows],
                     [float(r["distance"]) for r in rows],
                     modes.pop() if modes else EXACT,
                     [float(r["error_bound"]) for r in rows])


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def table_to_svg(t: RateTable, fit: Optional[SlopeFit] = None) -> str:
    """Log-log line chart; non-positive points are left out."""
    W, H, L, R, T, B = 480, 320, 70, 20, 40, 50
    pts = [(g, d) for g, d in zip(t.grid, t.distances) if g > 0 and d > 0]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" '
        f'height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{_esc(t.name)} ({_esc(t.family_id)})</text>',
        f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{H - T - B}" '
        'fill="none" stroke="black"/>',
    ]
    if pts:
        lx = [math.log10(p[0]) for p in pts]
        ly = [math.log10(p[1]) for p in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5

        def sx(v):
            return L + (v - x0) / (x1 - x0) * (W - L - R)

        def sy(v):
            return H - B - (v - y0) / (y1 - y0) * (H - T - B)

        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline points="{path}" fill="none" stroke="#1f77b4" '
                   'stroke-width="1.5"/>')
        for a, b in zip(lx, ly):
            out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="#1f77b4"/>')
        for v, anchor in ((x0, "start"), (x1, "end")):
            out.append(f'<text x="{sx(v):.2f}" y="{H - B + 16}" text-anchor="{anchor}" '
                       f'font-size="11" font-family="sans-serif">{10 ** v:.4g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{L - 4}" y="{sy(v) + 4:.2f}" text-anchor="end" '
                       f'font-size="11" font-family="sans-serif">{10 ** v:.3g}</text>')
    else:
        out.append(f'<text x="{W / 2:.1f}" y="{H / 2:.1f}" text-anchor="middle" '
                   'font-size="12" font-family="sans-serif">no positive values</text>')
    out.append(f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="12" '
               f'font-family="sans-serif">{_esc(t.parameter)} (log scale)</text>')
    if fit is not None:
        out.append(f'<text x="{L + 8}" y="{T + 16}" font-size="11" font-family="sans-serif">'
                   f'slope {fit.slope:.4f}, r2 {fit.r_squared:.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def summary_text(r: ExperimentReport) -> str:
    lines = [f"experiment: {r.exp_id}", f"verdict: {r.verdict}", "", "inputs:"]
    for k in sorted(r.inputs):
        lines.append(f"  {k}: {r.inputs[k]}")
    lines += ["", "tables:"]
    for t in r.tables:
        lines.append(f"  {t.name} [{t.family_id}] parameter={t.parameter} mode={t.mode}")
        for g, d, e in zip(t.grid, t.distances, t.error_bounds):
            lines.append(f"    {_num(g)}\t{_num(d)}\t(error bound {_num(e)})")
    if r.fits:
        lines += ["", "fits (log-log OLS):"]
        for name in sorted(r.fits):
            f = r.fits[name]
            lines.append(f"  {name}: slope={f.slope!r} intercept={f.intercept!r} "
                         f"r2={f.r_squared!r} used={f.n_used} excluded_zero={f.n_excluded}")
    if r.checks:
        lines += ["", "checks:"]
        for c in r.checks:
            status = {True: "PASS", False: "FAIL", None: "INFO"}[c.passed]
            lines.append(f"  [{status}] {c.name}: {c.detail}")
    if r.notes:
        lines += ["", "notes:"]
        lines += [f"  - {n}" for n in r.notes]
    return "\n".join(lines) + "\n"


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_.+" else "_" for ch in name)


def emit_report(report: ExperimentReport, out_dir) -> Path:
    """Write ``out_dir/<exp_id>/``; the directory appears only once complete."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f".{report.exp_id}.", dir=out_dir))
    except OSError as exc:
        raise OSError(f"cannot write reports under {out_dir}: {exc.strerror}") from exc
    try:
        for t in report.tables:
            stem = _safe(t.name)
            (tmp / f"{stem}.csv").write_text(table_to_csv(t))
            (tmp / f"{stem}.svg").write_text(table_to_svg(t, report.fits.get(t.name)))
        (tmp / "summary.txt").write_text(summary_text(report))
        final = out_dir / report.exp_id
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    os.chmod(final, 0o755)
    return final
