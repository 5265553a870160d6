"""Closed-form link budgets, key-rate composition and gate optimization."""

import math

import pytest
from scipy.integrate import quad

from ofdmqkd import schemes
from ofdmqkd.keyrate import ofdm_yield
from ofdmqkd.misalign import MisalignmentModel
from ofdmqkd.params import SchemeKind, SchemeSpec, TABLE_DEFAULTS, validate

S1 = SchemeKind.SCHEME1_PASSIVE
S2P = SchemeKind.SCHEME2_PASSIVE
S2A = SchemeKind.SCHEME2_ACTIVE


def params_n(n, **over):
    cfg = dict(TABLE_DEFAULTS)
    cfg.update(over)
    return validate(cfg).with_subcarriers(n)


NO_MISALIGN = MisalignmentModel(0.0)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_ideal_gating(n):
    p = params_n(n)
    assert schemes.link_budget(SchemeSpec(S1), p, NO_MISALIGN).eta_g == 1.0 / n
    assert schemes.link_budget(SchemeSpec(S2P), p, NO_MISALIGN).eta_g == 1.0 / n
    assert schemes.link_budget(SchemeSpec(S2A), p, NO_MISALIGN).eta_g == 1.0
    for kind in (S1, S2P, S2A):
        assert schemes.link_budget(SchemeSpec(kind), p, NO_MISALIGN).p_xtalk == 0.0


def test_guard_absorbs_small_misalignment():
    p = params_n(8)
    model = MisalignmentModel(p.guard)  # a <= delta
    budget = schemes.link_budget(SchemeSpec(S2P), p, model)
    assert budget.p_xtalk == 0.0
    assert budget.eta_g == 1.0 / 8


def test_table1_active_example():
    """N = 16, E{|tau|}/T = 0.02: p_xtalk ~ 3.3e-4 and eta_g ~ 0.963."""
    p = params_n(16)
    model = MisalignmentModel(2.0 * 0.02 * p.symbol_duration)
    budget = schemes.link_budget(SchemeSpec(S2A), p, model)
    assert budget.p_xtalk == pytest.approx(3.3e-4, rel=0.02)
    assert budget.eta_g == pytest.approx(0.963, abs=5e-4)
    assert budget.eta == budget.eta_g * budget.eta_sys
    assert budget.p_dc == p.dark_count_rate * budget.gate_width


def test_invalid_gate():
    p = params_n(16)
    with pytest.raises(schemes.InvalidGate):
        schemes.link_budget(SchemeSpec(S1, gate_narrowing=p.chip_slot / 2), p, NO_MISALIGN)


@pytest.mark.parametrize("n", [4, 8, 16])
@pytest.mark.parametrize("a_frac", [0.1, 0.3, 0.6, 0.9])
@pytest.mark.parametrize("b_frac", [0.0, 0.05, 0.15, 0.3])
def test_active_is_exactly_n_times_passive(n, a_frac, b_frac, table1_no_switch):
    """48-cell grid: exact bit-level identity with switch loss zeroed."""
    p = table1_no_switch.with_subcarriers(n)
    model = MisalignmentModel(a_frac * p.chip_slot)
    spec_p = SchemeSpec(S2P, gate_narrowing=b_frac * p.chip_slot)
    spec_a = SchemeSpec(S2A, gate_narrowing=b_frac * p.chip_slot)
    passive = schemes.link_budget(spec_p, p, model)
    active = schemes.link_budget(spec_a, p, model)
    assert active.p_xtalk == n * passive.p_xtalk
    assert active.eta_g == n * passive.eta_g


def test_continuity_at_narrowing_kinks():
    """Closed forms continuous in b at b = delta and b = |a - delta|."""
    p = params_n(8)
    a = 0.5 * p.chip_slot
    model = MisalignmentModel(a)
    h = 1e-10 * p.chip_slot
    for kind in (S1, S2P, S2A):
        for b0 in (p.guard, abs(a - p.guard)):
            lo = schemes.link_budget(SchemeSpec(kind, gate_narrowing=b0 - h), p, model)
            hi = schemes.link_budget(SchemeSpec(kind, gate_narrowing=b0 + h), p, model)
            assert abs(lo.eta_g - hi.eta_g) < 1e-9
            assert abs(lo.p_xtalk - hi.p_xtalk) < 1e-9


def test_monotonicity_in_b():
    p = params_n(8)
    model = MisalignmentModel(0.6 * p.chip_slot)
    bs = [i * 0.49 * p.chip_slot / 60 for i in range(61)]
    for kind in (S1, S2P, S2A):
        budgets = [schemes.link_budget(SchemeSpec(kind, gate_narrowing=b), p, model) for b in bs]
        xs = [bud.p_xtalk for bud in budgets]
        assert all(x0 >= x1 - 1e-15 for x0, x1 in zip(xs, xs[1:]))
        if kind is S1:
            etas = [bud.eta_g for bud in budgets]
        else:
            etas = [bud.eta_g for b, bud in zip(bs, budgets) if b >= p.guard]
        assert all(e0 >= e1 - 1e-15 for e0, e1 in zip(etas, etas[1:]))


def test_scheme2_reduces_to_scheme1_when_guard_vanishes():
    """delta -> 0 collapses the Scheme II geometry onto Scheme I's."""
    p = params_n(8, delta_over_tp=0.0)
    assert p.guard == 0.0 and p.pulse_width == p.chip_slot
    for a_frac in (0.2, 0.7):
        model = MisalignmentModel(a_frac * p.chip_slot)
        for b_frac in (0.0, 0.1):
            spec1 = SchemeSpec(S1, gate_narrowing=b_frac * p.chip_slot)
            spec2 = SchemeSpec(S2P, gate_narrowing=b_frac * p.chip_slot)
            b1 = schemes.link_budget(spec1, p, model)
            b2 = schemes.link_budget(spec2, p, model)
            assert b2.p_xtalk == pytest.approx(b1.p_xtalk, rel=1e-12)
            assert b2.eta_g == pytest.approx(b1.eta_g, rel=1e-12)


def _piecewise_b(tau, n, t_p, delta, b):
    """Scheme II narrowed-gate per-misalignment gating factor."""
    kap = 1.0 - ((n - 1) / n) ** 2
    t = abs(tau)
    if t >= b + delta:
        return 1.0 / n - 2.0 * b / (n * t_p) - kap * (t - (b + delta)) / (n * t_p)
    if t >= abs(b - delta):
        return 1.0 / n - (t + b - delta) / (n * t_p)
    return 1.0 / n - 2.0 * (b - delta) * (1.0 if b > delta else 0.0) / (n * t_p)


def _piecewise_a(tau, n, t_p, delta, b):
    """Scheme II narrowed-gate per-misalignment crosstalk factor (unit eta' mu)."""
    t = abs(tau)
    if t <= b + delta:
        return 0.0
    return 2.0 * (n - 1) / (n**3 * t_p) * (t - (b + delta))


@pytest.mark.parametrize("n", [4, 16])
@pytest.mark.parametrize("a_frac,b_frac", [(0.3, 0.0), (0.6, 0.02), (0.5, 0.1), (0.9, 0.15)])
def test_scheme2_closed_form_equals_quadrature(n, a_frac, b_frac):
    """E{B} and E{A} by numerical quadrature over the piecewise definitions."""
    p = params_n(n)
    t_p, delta = p.pulse_width, p.guard
    a = a_frac * p.chip_slot
    b = b_frac * p.chip_slot
    model = MisalignmentModel(a)
    budget = schemes.link_budget(SchemeSpec(S2P, gate_narrowing=b), p, model)
    pts = sorted(x for x in (abs(b - delta), b + delta) if 0 < x < a)
    eta_quad, _ = quad(
        lambda t: _piecewise_b(t, n, t_p, delta, b) / a, 0.0, a,
        points=pts or None, limit=300, epsabs=1e-13, epsrel=1e-13,
    )
    assert abs(budget.eta_g - eta_quad) < 1e-9
    x_quad, _ = quad(
        lambda t: _piecewise_a(t, n, t_p, delta, b) / a, 0.0, a,
        points=pts or None, limit=300, epsabs=1e-14, epsrel=1e-13,
    )
    assert abs(budget.p_xtalk - budget.eta_sys * p.mu * x_quad) < 1e-9


def test_zero_misalignment_gate_costs_only_width():
    """At a = 0, narrowing costs exactly the window fraction for Scheme I and
    nothing below the guard for Scheme II."""
    p = params_n(8)
    b = 0.5 * p.guard
    assert schemes.link_budget(SchemeSpec(S2P, gate_narrowing=b), p, NO_MISALIGN).eta_g == pytest.approx(1.0 / 8, rel=1e-12)
    b1 = schemes.link_budget(SchemeSpec(S1, gate_narrowing=1.0), p, NO_MISALIGN)
    assert b1.eta_g == pytest.approx(1.0 / 8 - 2.0 / p.symbol_duration, rel=1e-12)


# ---------------------------------------------------------------------------
# key_rate / dwdm_baseline / optimize_gate


DWDM_R_BPS = 3.673131187e7  # frozen from the arbitrary-precision oracle
PEAK_S_PERCENT = 0.2316987


def test_dwdm_baseline(table1):
    rep = schemes.dwdm_baseline(table1)
    assert rep.r_total == pytest.approx(DWDM_R_BPS, rel=1e-9)
    assert rep.budget.eta_g == 1.0 and rep.budget.p_xtalk == 0.0
    assert rep.budget.gate_width == table1.dwdm_pulse
    assert 100.0 * rep.spectral_efficiency == pytest.approx(0.0734626, rel=1e-5)


def test_dwdm_noiseless_p_equals_q1():
    p = validate({**TABLE_DEFAULTS, "dark_count_rate_per_ns": 0.0, "phase_error": 0.0})
    rep = schemes.dwdm_baseline(p)
    assert rep.p_per_pulse == rep.gains.q_1


def test_dwdm_huge_loss_rate_zero():
    p = validate({**TABLE_DEFAULTS, "channel_loss_db": 300.0})
    assert schemes.dwdm_baseline(p).r_total == 0.0


def test_key_rate_peak_spectral_efficiency(table1):
    rep = schemes.key_rate(SchemeSpec(S2A), table1, NO_MISALIGN)
    assert 100.0 * rep.spectral_efficiency == pytest.approx(PEAK_S_PERCENT, rel=1e-6)
    y0 = ofdm_yield(rep.budget.p_dc, rep.budget.p_xtalk)
    assert rep.gains.y_0 == y0


def test_negative_fraction_clamps_to_zero_rate():
    p = params_n(16, phase_error=0.2)  # QBER far above threshold
    rep = schemes.key_rate(SchemeSpec(S1), p, NO_MISALIGN)
    assert rep.p_per_pulse < 0.0
    assert rep.r_total == 0.0


def test_optimize_gate_zero_misalignment():
    p = params_n(8)
    b_star, rep = schemes.optimize_gate(S1, p, NO_MISALIGN)
    assert b_star == 0.0
    assert rep.r_total == schemes.key_rate(SchemeSpec(S1), p, NO_MISALIGN).r_total


def test_optimize_gate_improves_when_crosstalk_dominates():
    p = params_n(8)
    model = MisalignmentModel(2.0 * 0.03 * p.symbol_duration)  # E{|tau|}/T = 0.03
    base = schemes.key_rate(SchemeSpec(S1), p, model)
    assert base.budget.p_xtalk > base.budget.p_dc
    b_star, rep = schemes.optimize_gate(S1, p, model)
    assert rep.r_total >= base.r_total
    assert rep.r_total > base.r_total  # strict: crosstalk dominates dark counts
    # exhaustive fine grid cannot beat the grid+golden result meaningfully
    t_c = p.chip_slot
    fine = max(
        schemes.key_rate(SchemeSpec(S1, gate_narrowing=i * t_c / 2 / 4096), p, model).r_total
        for i in range(4096)
    )
    assert rep.r_total >= fine * (1.0 - 1e-9)


def test_optimize_gate_degenerate_landscape():
    p = params_n(8, channel_loss_db=300.0, phase_error=0.4)
    b_star, rep = schemes.optimize_gate(S2A, p, MisalignmentModel(0.2 * p.chip_slot))
    assert b_star == 0.0
    assert rep.r_total == 0.0


def test_optimize_gate_dwdm_passthrough(table1):
    b_star, rep = schemes.optimize_gate(SchemeKind.DWDM_BASELINE, table1, NO_MISALIGN)
    assert b_star == 0.0
    assert rep.r_total == pytest.approx(DWDM_R_BPS, rel=1e-9)


def test_eta_g_clamp_flag():
    p = params_n(16)
    model = MisalignmentModel(3.0 * p.chip_slot)  # far outside the formula's domain
    budget = schemes.link_budget(SchemeSpec(S2P, gate_narrowing=0.45 * p.chip_slot), p, model)
    assert budget.clamped
    assert budget.eta_g == 0.0
