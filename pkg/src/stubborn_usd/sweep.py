"""Parameter sweeps over (x1, p) and their CSV / SVG renderings."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union
from xml.sax.saxutils import escape

from .analytics import threshold, weighted_bias
from .core import Configuration, ProtocolParams
from .engine import BatchSummary, Outcome, TrialSpec, run_batch

__all__ = ["SweepSpec", "SweepCell", "CSV_HEADER", "cell_from_summary", "run_sweep",
           "to_csv", "render_svg"]

CSV_HEADER = (
    "x1", "x2", "u", "p", "p_s", "delta_w0", "trials", "wins1", "wins2", "frozen", "timeouts",
    "medT1", "meanT1", "p95T1", "medT2", "meanT2", "p95T2",
)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of initial Opinion-1 counts against stubbornness.

    ``u`` is an absolute count (int) or a fraction of ``n`` (float).  With
    ``relative=True`` the entries of ``p_grid`` are offsets from each
    cell's threshold ``1 - x1/x2``; offsets landing outside [0, 1] are
    clamped to the interval.
    """

    n: int
    x1_grid: Sequence[int]
    u: Union[int, float]
    p_grid: Sequence[float]
    trials: int
    seed: int = 0
    max_interactions: Optional[int] = None
    relative: bool = False

    def __post_init__(self) -> None:
        if not self.x1_grid or not self.p_grid:
            raise ValueError("sweep grids must be non-empty")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for x1 in self.x1_grid:
            self.configuration(x1)
        for p in self.p_grid:
            if not self.relative and not 0.0 <= p <= 1.0:
                raise ValueError(f"p must lie in [0, 1], got {p}")

    @property
    def undecided(self) -> int:
        if isinstance(self.u, float):
            if not 0.0 <= self.u <= 1.0:
                raise ValueError(f"undecided fraction must lie in [0, 1], got {self.u}")
            return int(round(self.u * self.n))
        return int(self.u)

    def configuration(self, x1: int) -> Configuration:
        u = self.undecided
        x2 = self.n - x1 - u
        if x1 < 0 or x2 < 0 or u < 0:
            raise ValueError(f"x1={x1}, u={u} do not fit in n={self.n}")
        return Configuration(x1, x2, u)

    def stubbornness(self, c: Configuration, entry: float) -> float:
        if not self.relative:
            return entry
        p_s = threshold(c)
        if p_s is None:
            raise ValueError(f"threshold undefined for {c} (x2 = 0)")
        return min(1.0, max(0.0, p_s + entry))


@dataclass(frozen=True)
class SweepCell:
    x1: int
    x2: int
    u: int
    p: float
    p_s: Optional[float]
    delta_w0: float
    trials: int
    wins1: int
    wins2: int
    frozen: int
    timeouts: int
    medT1: Optional[float]
    meanT1: Optional[float]
    p95T1: Optional[float]
    medT2: Optional[float]
    meanT2: Optional[float]
    p95T2: Optional[float]

    @property
    def win1_fraction(self) -> float:
        return self.wins1 / self.trials

    def row(self) -> List[str]:
        return ["" if v is None else repr(v) if isinstance(v, float) else str(v)
                for v in (getattr(self, k) for k in CSV_HEADER)]


def cell_from_summary(c: Configuration, p: float, summary: BatchSummary) -> SweepCell:
    s1 = summary.stats(Outcome.WINNER1)
    s2 = summary.stats(Outcome.WINNER2)
    return SweepCell(
        x1=c.x1, x2=c.x2, u=c.u, p=p, p_s=threshold(c), delta_w0=weighted_bias(c, p),
        trials=summary.trials, wins1=summary.wins1, wins2=summary.wins2,
        frozen=summary.frozen, timeouts=summary.timeouts,
        medT1=s1 and s1.median, meanT1=s1 and s1.mean, p95T1=s1 and s1.p95,
        medT2=s2 and s2.median, meanT2=s2 and s2.mean, p95T2=s2 and s2.p95,
    )


def run_sweep(spec: SweepSpec, parallelism: int = 1) -> List[SweepCell]:
    """One cell per (x1, p) entry, x1-major.

    Cell ``k`` uses trial streams ``k*trials .. (k+1)*trials - 1`` of the
    sweep seed, so a 1x1 sweep reproduces a plain batch.
    """
    cells = []
    k = 0
    for x1 in spec.x1_grid:
        c = spec.configuration(x1)
        for entry in spec.p_grid:
            p = spec.stubbornness(c, entry)
            trial = TrialSpec(c, ProtocolParams(p), seed=spec.seed,
                              max_interactions=spec.max_interactions)
            summary = run_batch(trial, spec.trials, parallelism, start=k * spec.trials)
            cells.append(cell_from_summary(c, p, summary))
            k += 1
    return cells


def to_csv(cells: Sequence[SweepCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell in cells:
        writer.writerow(cell.row())
    return buf.getvalue()


def _color(f: float) -> str:
    # red (Opinion 2 wins) to green (Opinion 1 wins)
    red = round(215 * (1.0 - f) + 30 * f)
    green = round(40 * (1.0 - f) + 170 * f)
    blue = round(40 * (1.0 - f) + 60 * f)
    return f"#{red:02x}{green:02x}{blue:02x}"


def render_svg(cells: Sequence[SweepCell], n: int, width: int = 640, height: int = 480) -> str:
    """Heatmap of the Opinion-1 win fraction on (x1, p) axes.

    The threshold curve ``p = 1 - x1/x2`` is drawn as a polyline.
    """
    left, right, top, bottom = 60, 20, 20, 50
    pw, ph = width - left - right, height - top - bottom
    xs = sorted({c.x1 for c in cells})
    x_lo, x_hi = xs[0], xs[-1]
    span = max(x_hi - x_lo, 1)
    col_w = pw / len(xs)
    per_col = max(sum(1 for c in cells if c.x1 == xs[0]), 1)
    cell_h = max(ph / max(per_col * 2, 10), 4.0)

    def sx(x1: float) -> float:
        if x_hi == x_lo:
            return left + pw / 2
        return left + col_w / 2 + (x1 - x_lo) / span * (pw - col_w)

    def sy(p: float) -> float:
        return top + (1.0 - p) * ph

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{escape(f"Opinion-1 win fraction, n={n}")}</title>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="#f4f4f4" stroke="#333"/>',
    ]
    for c in cells:
        x, y = sx(c.x1) - col_w / 2, sy(c.p) - cell_h / 2
        parts.append(
            f'<rect class="cell" x="{x:.2f}" y="{y:.2f}" width="{col_w:.2f}" height="{cell_h:.2f}" '
            f'fill="{_color(c.win1_fraction)}" data-x1="{c.x1}" data-p="{c.p!r}" '
            f'data-win1="{c.win1_fraction!r}"/>'
        )
    curve = []
    for x1 in xs:
        x2 = next(c.x2 for c in cells if c.x1 == x1)
        if x2 > 0:
            p_s = 1.0 - x1 / x2
            if 0.0 <= p_s <= 1.0:
                curve.append(f"{sx(x1):.2f},{sy(p_s):.2f}")
    if curve:
        parts.append(f'<polyline id="threshold" points="{" ".join(curve)}" fill="none" '
                     f'stroke="#000" stroke-width="2"/>')
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{left - 8}" y="{sy(p) + 4:.2f}" text-anchor="end" '
                     f'font-size="11">{p:g}</text>')
    for x1 in xs:
        parts.append(f'<text x="{sx(x1):.2f}" y="{top + ph + 16}" text-anchor="middle" '
                     f'font-size="11">{x1}</text>')
    parts.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
                 f'font-size="12">x1</text>')
    parts.append(f'<text x="14" y="{top + ph / 2:.2f}" font-size="12" '
                 f'transform="rotate(-90 14 {top + ph / 2:.2f})">p</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
