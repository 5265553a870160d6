"""Command-line front end: rate reports, figure sweeps, gate optimization and
Monte-Carlo verification of the closed forms.

Config files are flat `key = value` lines with `#` comments. Unknown and
duplicate keys are errors; omitted keys fall back to the Table-I defaults and
are listed on stderr. CSV output is UTF-8, comma-separated, scientific
notation with 10 significant digits, and byte-deterministic for identical
config + flags + seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import misalign, optics, schemes
from .keyrate import ofdm_yield
from .params import TABLE_DEFAULTS, ConfigError, SchemeKind, SchemeSpec, validate

CSV_COLUMNS = (
    "scheme,N,misalign_norm,b_ps,gate_width_ps,eta_g,eta,p_dc,p_xtalk,"
    "y0,q_mu,e_mu,q1,e1,p_per_pulse,r_bps,s_percent"
)

SCHEME_NAMES = {k.value: k for k in SchemeKind}

_MISALIGN_KEYS = ("misalign_dist", "misalign_half_width_ps", "misalign_norm")

#: oracle-equivalence grid: every scheme, N, a/T_c, b/T_c combination
VERIFY_SCHEMES = (SchemeKind.SCHEME1_PASSIVE, SchemeKind.SCHEME2_PASSIVE, SchemeKind.SCHEME2_ACTIVE)
VERIFY_N = (4, 8, 16)
VERIFY_A_FRAC = (0.1, 0.3, 0.6, 0.9)
VERIFY_B_FRAC = (0.0, 0.05, 0.15)
VERIFY_MIN_TRIALS = 1000


class CliError(Exception):
    """Config or flag problem; maps to exit code 2."""


def _fmt(x):
    return f"{x:.9e}"


def max_workers():
    """Thread cap: OFDMQKD_THREADS if set, else a small default."""
    env = os.environ.get("OFDMQKD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError(f"OFDMQKD_THREADS = {env!r} is not an integer") from exc
    return min(8, os.cpu_count() or 1)


def _pmap(fn, items):
    """Map preserving item order; parallel only when allowed and useful."""
    items = list(items)
    workers = max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Config parsing


def read_config_lines(path):
    """Flat `key = value` file -> {key: (raw string, line number)}."""
    entries = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = text.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        if key in entries:
            raise CliError(f"{path}:{lineno}: duplicate key '{key}' (first set on line {entries[key][1]})")
        entries[key] = (value, lineno)
    return entries


@dataclass
class Settings:
    params: object
    model: misalign.MisalignmentModel
    defaulted: list


def parse_config(path=None):
    """Config file -> validated SystemParams + misalignment model + defaults report."""
    entries = read_config_lines(path) if path else {}
    known = set(TABLE_DEFAULTS) | set(_MISALIGN_KEYS)
    for key, (_, lineno) in entries.items():
        if key not in known:
            raise CliError(f"{path}:{lineno}: unknown key '{key}'")
    if "misalign_half_width_ps" in entries and "misalign_norm" in entries:
        lineno = entries["misalign_norm"][1]
        raise CliError(f"{path}:{lineno}: give misalign_half_width_ps or misalign_norm, not both")

    def number(key, default):
        if key not in entries:
            return default, True
        raw, lineno = entries[key]
        try:
            return float(raw), False
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: {key} = {raw!r} is not a number") from exc

    raw_params, defaulted = {}, []
    for key, default in TABLE_DEFAULTS.items():
        value, used_default = number(key, default)
        raw_params[key] = value
        if used_default:
            defaulted.append(key)

    try:
        params = validate(raw_params)
    except ConfigError as exc:
        raise CliError(f"config error: {exc}") from exc

    dist = entries.get("misalign_dist", (misalign.UNIFORM, 0))[0]
    half_width, hw_default = number("misalign_half_width_ps", 0.0)
    norm, norm_default = number("misalign_norm", None if hw_default else 0.0)
    if not norm_default and norm is not None:
        half_width = 2.0 * norm * params.symbol_duration
    if hw_default and norm_default:
        defaulted.append("misalign_half_width_ps")
    if "misalign_dist" not in entries:
        defaulted.append("misalign_dist")
    try:
        model = misalign.MisalignmentModel(half_width, family=dist)
    except ValueError as exc:
        raise CliError(f"config error: {exc}") from exc
    return Settings(params=params, model=model, defaulted=defaulted)


def _report_defaults(settings):
    if settings.defaulted:
        print("# defaulted keys: " + ", ".join(sorted(settings.defaulted)), file=sys.stderr)


def _model_from_norm(norm, params):
    return misalign.MisalignmentModel(2.0 * norm * params.symbol_duration)


def _scheme_kind(name):
    if name not in SCHEME_NAMES:
        raise CliError(f"unknown scheme {name!r}; choose from {sorted(SCHEME_NAMES)}")
    return SCHEME_NAMES[name]


# ---------------------------------------------------------------------------
# Row evaluation and CSV output


def _report_for(kind, n, norm, params, b_spec):
    """KeyRateReport for one (scheme, N, misalignment) cell; b_spec is ps or 'opt'."""
    params_n = params.with_subcarriers(n)
    model = _model_from_norm(norm, params_n)
    if kind is SchemeKind.DWDM_BASELINE:
        return schemes.dwdm_baseline(params_n)
    if b_spec == "opt":
        _, report = schemes.optimize_gate(kind, params_n, model)
        return report
    try:
        return schemes.key_rate(SchemeSpec(kind, gate_narrowing=float(b_spec)), params_n, model)
    except (ConfigError, schemes.InvalidGate) as exc:
        raise CliError(str(exc)) from exc


def _csv_row(kind, n, norm, report):
    b = report.budget
    g = report.gains
    fields = [
        kind.value,
        str(n),
        _fmt(norm),
        _fmt(report.b_used),
        _fmt(b.gate_width),
        _fmt(b.eta_g),
        _fmt(b.eta),
        _fmt(b.p_dc),
        _fmt(b.p_xtalk),
        _fmt(g.y_0),
        _fmt(g.q_mu),
        _fmt(g.e_mu),
        _fmt(g.q_1),
        _fmt(g.e_1),
        _fmt(report.p_per_pulse),
        _fmt(report.r_total),
        _fmt(100.0 * report.spectral_efficiency),
    ]
    return ",".join(fields)


def write_csv_atomic(path, rows):
    """Write header + rows to a temp file and rename; no partial files."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".ofdmqkd-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_COLUMNS + "\n")
            for row in rows:
                fh.write(row + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_grid(text):
    """Grid flag 'log:LO:HI:POINTS' or 'lin:LO:HI:POINTS' -> ndarray of norms."""
    parts = text.split(":")
    if len(parts) != 4 or parts[0] not in ("log", "lin"):
        raise CliError(f"grid {text!r} must look like log:LO:HI:POINTS or lin:LO:HI:POINTS")
    try:
        lo, hi, points = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise CliError(f"grid {text!r}: {exc}") from exc
    if points < 2:
        raise CliError(f"grid {text!r}: need at least 2 points")
    if not lo < hi:
        raise CliError(f"grid {text!r}: need LO < HI")
    if parts[0] == "log":
        if lo <= 0:
            raise CliError(f"grid {text!r}: log grid needs LO > 0")
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def sweep_rows(params, kinds, n_list, norms, b_spec):
    """Deterministic row order: scheme (given order), then N, then grid point."""
    cells = [(kind, n, norm) for kind in kinds for n in sorted(n_list) for norm in norms]
    reports = _pmap(lambda c: _report_for(c[0], c[1], c[2], params, b_spec), cells)
    return [_csv_row(kind, n, norm, rep) for (kind, n, norm), rep in zip(cells, reports)]


# ---------------------------------------------------------------------------
# Subcommands


def cmd_rate(args):
    settings = parse_config(args.config)
    _report_defaults(settings)
    params = settings.params.with_subcarriers(args.n[0]) if args.n else settings.params
    if args.misalign_norm is not None:
        model = _model_from_norm(args.misalign_norm, params)
    else:
        model = settings.model
    kind = _scheme_kind(args.scheme[0] if isinstance(args.scheme, list) else args.scheme)

    b_star = 0.0
    if kind is SchemeKind.DWDM_BASELINE:
        report = schemes.dwdm_baseline(params)
    elif args.b == "opt":
        b_star, report = schemes.optimize_gate(kind, params, model)
    else:
        try:
            spec = SchemeSpec(kind, gate_narrowing=float(args.b))
            report = schemes.key_rate(spec, params, model)
        except (ConfigError, schemes.InvalidGate) as exc:
            raise CliError(str(exc)) from exc
        b_star = report.b_used

    budget, gains = report.budget, report.gains
    norm = misalign.mean_abs(model) / params.symbol_duration
    lines = [
        ("scheme", kind.value, ""),
        ("N", params.num_subcarriers, ""),
        ("misalign_half_width", _fmt(model.half_width), "ps"),
        ("misalign_norm", _fmt(norm), "E{|tau|}/T"),
        ("b", _fmt(b_star), "ps"),
        ("gate_width", _fmt(budget.gate_width), "ps"),
        ("eta_g", _fmt(budget.eta_g), ""),
        ("eta_sys", _fmt(budget.eta_sys), ""),
        ("eta", _fmt(budget.eta), ""),
        ("eta_g_clamped", budget.clamped, ""),
        ("p_dc", _fmt(budget.p_dc), "per gate"),
        ("p_xtalk", _fmt(budget.p_xtalk), "per gate"),
        ("y0", _fmt(gains.y_0), ""),
        ("q_mu", _fmt(gains.q_mu), ""),
        ("e_mu", _fmt(gains.e_mu), ""),
        ("q1", _fmt(gains.q_1), ""),
        ("e1", _fmt(gains.e_1), ""),
        ("p_per_pulse", _fmt(report.p_per_pulse), "bit/pulse"),
        ("r_total", _fmt(report.r_total), "bit/s"),
        ("spectral_efficiency", _fmt(100.0 * report.spectral_efficiency), "%"),
    ]
    for key, value, unit in lines:
        suffix = f" {unit}" if unit else ""
        print(f"{key} = {value}{suffix}")
    return 0


def cmd_sweep(args):
    settings = parse_config(args.config)
    _report_defaults(settings)
    kinds = [_scheme_kind(s) for s in (args.scheme or ["scheme2-active"])]
    n_list = [int(n) for n in (args.n or [settings.params.num_subcarriers])]
    norms = parse_grid(args.grid)
    b_spec = "opt" if args.optimize or args.b == "opt" else float(args.b)
    if b_spec != "opt" and b_spec < 0:
        raise CliError("gate_narrowing must be >= 0")
    rows = sweep_rows(settings.params, kinds, n_list, norms, b_spec)
    write_csv_atomic(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_optimize_gate(args):
    settings = parse_config(args.config)
    _report_defaults(settings)
    args.b = "opt"
    return cmd_rate(args)


def verify_cell_ok(ref, est, stderr):
    """Pass rule for one verify comparison: within 3 MC standard errors, or
    within 1% relative for values above 1e-9. The second clause absorbs the
    first-order-accounting corner of the closed forms (|tau| beyond the
    narrowed gate's reach) and chance >3-sigma excursions across the grid."""
    diff = abs(est - ref)
    return diff <= 3.0 * stderr or (abs(ref) > 1e-9 and diff <= 0.01 * abs(ref))


def cmd_verify(args):
    """Closed forms vs the waveform-level Monte-Carlo oracle over the full grid."""
    settings = parse_config(args.config)
    _report_defaults(settings)
    if args.trials < VERIFY_MIN_TRIALS:
        raise CliError(f"--trials {args.trials} below minimum {VERIFY_MIN_TRIALS}")

    cells = [
        (kind, n, a_frac, b_frac)
        for kind in VERIFY_SCHEMES
        for n in VERIFY_N
        for a_frac in VERIFY_A_FRAC
        for b_frac in VERIFY_B_FRAC
    ]

    def run_cell(item):
        idx, (kind, n, a_frac, b_frac) = item
        params_n = settings.params.with_subcarriers(n)
        t_c = params_n.chip_slot
        model = misalign.MisalignmentModel(a_frac * t_c)
        spec = SchemeSpec(kind, gate_narrowing=b_frac * t_c)
        cf = schemes.link_budget(spec, params_n, model)
        mc = optics.mc_link_budget(spec, params_n, model, args.trials, [args.seed, idx])
        return cf, mc

    results = _pmap(run_cell, list(enumerate(cells)))

    header = (
        f"{'scheme':<15} {'N':>3} {'a/Tc':>5} {'b/Tc':>5} {'quantity':>8} "
        f"{'closed_form':>16} {'mc_mean':>16} {'mc_stderr':>12} {'z':>8} {'rel_diff':>10}  verdict"
    )
    print(header)
    failures = 0
    for (kind, n, a_frac, b_frac), (cf, mc) in zip(cells, results):
        for quantity, ref, est, se in (
            ("eta_g", cf.eta_g, mc.eta_g, mc.eta_g_stderr),
            ("p_xtalk", cf.p_xtalk, mc.p_xtalk, mc.p_xtalk_stderr),
        ):
            diff = est - ref
            z = diff / se if se > 0 else 0.0
            rel = abs(diff) / abs(ref) if abs(ref) > 1e-9 else 0.0
            ok = verify_cell_ok(ref, est, se)
            failures += 0 if ok else 1
            print(
                f"{kind.value:<15} {n:>3} {a_frac:>5.2f} {b_frac:>5.2f} {quantity:>8} "
                f"{ref:>16.9e} {est:>16.9e} {se:>12.3e} {z:>8.2f} {rel:>10.3e}  {'pass' if ok else 'FAIL'}"
            )
    total = 2 * len(cells)
    print(f"{total - failures}/{total} comparisons passed ({args.trials} trials, seed {args.seed})")
    return 0 if failures == 0 else 1


FIGURE_GRID = "log:1e-4:1e-1:50"
FIGURE_N = (4, 8, 16)


def cmd_figures(args):
    """One-command reproduction of the four figure sweeps.

    fig7: background components for the active decoder, nominal gate.
    fig8/9/10: rate sweeps for scheme1 / scheme2-passive / scheme2-active —
    fixed-gate rows (with the DWDM baseline) followed by optimal-gate rows.
    """
    settings = parse_config(args.config)
    _report_defaults(settings)
    norms = parse_grid(FIGURE_GRID)
    params = settings.params
    os.makedirs(args.out, exist_ok=True)

    fig_schemes = {
        7: SchemeKind.SCHEME2_ACTIVE,
        8: SchemeKind.SCHEME1_PASSIVE,
        9: SchemeKind.SCHEME2_PASSIVE,
        10: SchemeKind.SCHEME2_ACTIVE,
    }
    written = []
    for fig, kind in fig_schemes.items():
        if fig == 7:
            rows = sweep_rows(params, [kind], FIGURE_N, norms, 0.0)
        else:
            rows = sweep_rows(params, [kind], FIGURE_N, norms, 0.0)
            rows += sweep_rows(params, [SchemeKind.DWDM_BASELINE], [params.num_subcarriers], norms, 0.0)
            rows += sweep_rows(params, [kind], FIGURE_N, norms, "opt")
        path = os.path.join(args.out, f"fig{fig}.csv")
        write_csv_atomic(path, rows)
        written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="ofdmqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, schemes_repeatable=False):
        p.add_argument("--config", default=None, help="flat key=value config file (Table I defaults)")
        p.add_argument(
            "--scheme",
            action="append" if schemes_repeatable else None,
            default=None,
            choices=sorted(SCHEME_NAMES),
            help="decoder scheme" + (" (repeatable)" if schemes_repeatable else ""),
        )
        p.add_argument("--n", action="append", type=int, default=None, help="subcarrier count (repeatable)")
        p.add_argument("--misalign-norm", type=float, default=None, help="E{|tau|}/T (a = 2*norm*T)")

    p_rate = sub.add_parser("rate", help="single key-rate report")
    common(p_rate)
    p_rate.add_argument("--b", default="0", help="gate narrowing in ps, or 'opt'")
    p_rate.set_defaults(func=cmd_rate)

    p_sweep = sub.add_parser("sweep", help="misalignment sweep to CSV")
    common(p_sweep, schemes_repeatable=True)
    p_sweep.add_argument("--grid", default=FIGURE_GRID, help="log:LO:HI:POINTS or lin:LO:HI:POINTS")
    p_sweep.add_argument("--b", default="0", help="gate narrowing in ps, or 'opt'")
    p_sweep.add_argument("--optimize", action="store_true", help="optimize the gate at every point")
    p_sweep.add_argument("--out", default="sweep.csv", help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_opt = sub.add_parser("optimize-gate", help="rate report at the optimal gate width")
    common(p_opt)
    p_opt.set_defaults(func=cmd_optimize_gate)

    p_verify = sub.add_parser("verify", help="closed forms vs Monte-Carlo oracle")
    p_verify.add_argument("--config", default=None)
    p_verify.add_argument("--trials", type=int, default=10**6)
    p_verify.add_argument("--seed", type=int, default=42)
    p_verify.set_defaults(func=cmd_verify)

    p_fig = sub.add_parser("figures", help="emit fig7..fig10 sweep CSVs")
    p_fig.add_argument("--config", default=None)
    p_fig.add_argument("--out", default=".", help="output directory")
    p_fig.set_defaults(func=cmd_figures)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if getattr(args, "scheme", None) is None and args.command in ("rate", "optimize-gate"):
        args.scheme = "scheme2-active"
    if args.command in ("rate", "optimize-gate") and isinstance(args.scheme, str):
        args.scheme = [args.scheme]
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
