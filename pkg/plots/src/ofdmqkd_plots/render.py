"""Render the four misalignment-sweep figures from ofdmqkd CSV files.

The CSV schema is the interface contract with the simulator CLI and is
validated column-for-column before anything is plotted. Figure 7 shows the
two background-click components (dark counts and crosstalk) per subcarrier
count; figures 8-10 show total secret key rate per subcarrier count for the
fixed and optimal gate, plus the DWDM baseline. For the rate figures the CSV
carries the fixed-gate sweep block first and the optimal-gate block second,
so within one (scheme, N, misalign) group the first row is the fixed gate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

#: the simulator CLI's sweep schema, column for column
EXPECTED_COLUMNS = [
    "scheme", "N", "misalign_norm", "b_ps", "gate_width_ps", "eta_g", "eta",
    "p_dc", "p_xtalk", "y0", "q_mu", "e_mu", "q1", "e1", "p_per_pulse",
    "r_bps", "s_percent",
]

#: which scheme each rate figure tracks
FIGURE_SCHEMES = {8: "scheme1", 9: "scheme2-passive", 10: "scheme2-active"}


class SchemaMismatch(ValueError):
    def __init__(self, missing, unexpected):
        self.missing = list(missing)
        self.unexpected = list(unexpected)
        super().__init__(f"CSV schema mismatch: missing {self.missing}, unexpected {self.unexpected}")


class EmptySeries(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    figure_id: int
    output_path: str

    def __post_init__(self):
        if self.figure_id not in (7, 8, 9, 10):
            raise ValueError(f"figure_id must be one of 7, 8, 9, 10, got {self.figure_id}")


@dataclass
class RenderResult:
    """What was drawn; the tests compare this across re-renders."""

    output_path: str
    x_log: bool
    y_log: bool
    series: list = field(default_factory=list)  # (label, n_points)


def read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(missing=EXPECTED_COLUMNS, unexpected=[])
        if header != EXPECTED_COLUMNS:
            missing = [c for c in EXPECTED_COLUMNS if c not in header]
            unexpected = [c for c in header if c not in EXPECTED_COLUMNS]
            raise SchemaMismatch(missing=missing, unexpected=unexpected)
        return [dict(zip(header, row)) for row in reader]


def _series_fig7(rows):
    """Two curves (p_dc, p_xtalk) per subcarrier count."""
    if not rows:
        raise EmptySeries("figure 7 needs at least one sweep row")
    series = []
    for n in sorted({int(r["N"]) for r in rows}):
        group = [r for r in rows if int(r["N"]) == n]
        xs = [float(r["misalign_norm"]) for r in group]
        series.append((f"N={n} p_dc", xs, [float(r["p_dc"]) for r in group]))
        series.append((f"N={n} p_xtalk", xs, [float(r["p_xtalk"]) for r in group]))
    return series, "background click probability per gate"


def _series_rate(rows, figure_id):
    """Rate curves per N, fixed vs optimal gate, plus the DWDM baseline.

    Within one (scheme, N, misalign_norm) group the first occurrence belongs
    to the fixed-gate block and the second to the optimal-gate block.
    """
    scheme = FIGURE_SCHEMES[figure_id]
    wanted = [r for r in rows if r["scheme"] == scheme]
    if not wanted:
        raise EmptySeries(f"no rows for scheme {scheme!r}")
    series = []
    for n in sorted({int(r["N"]) for r in wanted}):
        group = [r for r in wanted if int(r["N"]) == n]
        passes = {}
        for r in group:
            occurrence = passes.setdefault(r["misalign_norm"], [])
            occurrence.append(r)
        fixed = [occ[0] for occ in passes.values()]
        opt = [occ[1] for occ in passes.values() if len(occ) > 1]
        series.append(
            (f"{scheme} N={n} fixed gate",
             [float(r["misalign_norm"]) for r in fixed],
             [float(r["r_bps"]) for r in fixed])
        )
        if opt:
            series.append(
                (f"{scheme} N={n} optimal gate",
                 [float(r["misalign_norm"]) for r in opt],
                 [float(r["r_bps"]) for r in opt])
            )
    baseline = [r for r in rows if r["scheme"] == "dwdm"]
    if baseline:
        series.append(
            ("DWDM baseline",
             [float(r["misalign_norm"]) for r in baseline],
             [float(r["r_bps"]) for r in baseline])
        )
    return series, "secret key rate (bit/s)"


def render(spec):
    """Draw the figure and write the image; returns what was plotted."""
    rows = read_rows(spec.input_csv)
    if spec.figure_id == 7:
        series, ylabel = _series_fig7(rows)
    else:
        series, ylabel = _series_rate(rows, spec.figure_id)

    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for label, xs, ys in series:
        style = "--" if label == "DWDM baseline" else "-"
        ax.plot(xs, ys, style, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("mean time misalignment  E{|tau|}/T")
    ax.set_ylabel(ylabel)
    ax.set_title(f"Figure {spec.figure_id}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return RenderResult(
        output_path=spec.output_path,
        x_log=True,
        y_log=True,
        series=[(label, len(xs)) for label, xs, _ in series],
    )
