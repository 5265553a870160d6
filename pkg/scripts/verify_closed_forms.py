#!/usr/bin/env python3
"""Full closed-form vs Monte-Carlo verification at 10^6 trials (about a
minute). Pass --trials / --seed / --config through to the CLI.

Usage: python scripts/verify_closed_forms.py [extra verify flags]
"""

import sys

from ofdmqkd.cli import main

args = ["verify"]
if not any(a.startswith("--trials") for a in sys.argv[1:]):
    args += ["--trials", "1000000"]
sys.exit(main(args + sys.argv[1:]))
