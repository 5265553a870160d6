#!/usr/bin/env python3
"""Regenerate the four misalignment-sweep CSVs and, when the ofdmqkd-plots
package is installed, render them to SVG.

Usage: python scripts/reproduce_figures.py [output_dir]
"""

import sys

from ofdmqkd.cli import main as simulator

out = sys.argv[1] if len(sys.argv) > 1 else "figures_out"
rc = simulator(["figures", "--out", out])
if rc != 0:
    sys.exit(rc)

try:
    from ofdmqkd_plots.cli import main as plots
except ImportError:
    print("ofdmqkd-plots not installed; CSVs written, skipping image rendering")
    sys.exit(0)

for fig in (7, 8, 9, 10):
    rc = plots(
        ["render", "--csv", f"{out}/fig{fig}.csv", "--figure", str(fig), "--out", f"{out}/fig{fig}.svg"]
    )
    if rc != 0:
        sys.exit(rc)
