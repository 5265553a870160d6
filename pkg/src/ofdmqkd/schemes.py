"""Closed-form link budgets and key-rate composition for the OFDM decoders.

Per-channel gating loss and inter-subcarrier crosstalk, with the measurement
gate narrowed by b per side (T_g = T_c - 2b), kappa = 1 - ((N-1)/N)^2,
P(x) = P(|tau| >= x), M(x) = E{|tau| | |tau| >= x}:

Scheme I (directly generated subcarriers, passive decoder):

    p_xtalk = eta' 2 mu (N-1)/(N^2 T) * P(b) (M(b) - b)
    eta_g   = 1/N - 2b/T - kappa/T * P(b) (M(b) - b)

Scheme II (pulse-train tributaries, passive decoder; guard delta per side,
pulse width T_p, T_p + 2 delta = T_c):

    p_xtalk = eta' 2 mu (N-1)/(N^3 T_p) * P(b+delta) (M(b+delta) - (b+delta))

    eta_g = E{B} where B is piecewise in |tau| (u = step function):
      |tau| >= b+delta:          1/N - 2b/(N T_p) - kappa (|tau|-(b+delta))/(N T_p)
      |b-delta| <= |tau| <= b+delta:   1/N - (|tau|+b-delta)/(N T_p)
      |tau| <= |b-delta|:        1/N - 2(b-delta) u(b-delta)/(N T_p)

    expanded over the tail statistics (P0/M0 at |b-delta|, P1/M1 at b+delta):
      eta_g = 1/N - [ 2b P1 + kappa P1 (M1 - (b+delta)) + (b-delta)(P0-P1)
                      + (P0 M0 - P1 M1) + 2(b-delta) u(b-delta) (1-P0) ] / (N T_p)

Scheme II with the active (switch + star-FFT) decoder: both quantities are the
passive ones multiplied by N; the switch insertion loss enters eta'.

These are first-order overlap accountings, exact for |tau| within the narrowed
gate's reach (|tau| <= T_c - b - delta); outside they extrapolate linearly and
eta_g is clamped to [0, 1] with the clamp flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import keyrate, misalign
from .params import SchemeKind, SchemeSpec, eta_prime


class InvalidGate(ValueError):
    pass


@dataclass(frozen=True)
class LinkBudget:
    eta_g: float        # gating transmissivity
    eta_sys: float      # eta' = eta_d * 10^(-loss/10) (* switch term if active)
    eta: float          # total: eta_g * eta_sys
    p_dc: float         # dark-count probability per gate
    p_xtalk: float      # crosstalk click probability per gate
    gate_width: float   # T_g, ps
    clamped: bool = False


@dataclass(frozen=True)
class KeyRateReport:
    budget: LinkBudget
    gains: keyrate.GainErrorSet
    p_per_pulse: float
    r_total: float               # bit/s
    spectral_efficiency: float   # dimensionless fraction
    b_used: float                # ps


def _kappa(n):
    return 1.0 - ((n - 1) / n) ** 2


def _scheme1_geometry(n, t, b, model):
    """(p_xtalk geometry factor, raw eta_g) for Scheme I."""
    excess = misalign.excess_mean(model, b)
    p_x = 2.0 * (n - 1) / (n * n * t) * excess
    eta_g = 1.0 / n - 2.0 * b / t - _kappa(n) / t * excess
    return p_x, eta_g


def _scheme2_geometry(n, t_p, delta, b, model):
    """(p_xtalk geometry factor, raw eta_g) for Scheme II, passive decoder."""
    p1 = misalign.tail_prob(model, b + delta)
    m1 = misalign.tail_mean(model, b + delta)
    p0 = misalign.tail_prob(model, abs(b - delta))
    m0 = misalign.tail_mean(model, abs(b - delta))
    p_x = 2.0 * (n - 1) / (n ** 3 * t_p) * p1 * (m1 - (b + delta))
    step = 1.0 if b > delta else 0.0
    loss = (
        2.0 * b * p1
        + _kappa(n) * p1 * (m1 - (b + delta))
        + (b - delta) * (p0 - p1)
        + (p0 * m0 - p1 * m1)
        + 2.0 * (b - delta) * step * (1.0 - p0)
    )
    eta_g = 1.0 / n - loss / (n * t_p)
    return p_x, eta_g


def link_budget(scheme, params, model):
    """Per-channel gating transmissivity, crosstalk and dark-count budget."""
    kind = scheme.kind
    n = params.num_subcarriers
    eta_sys = eta_prime(kind, params)

    if kind is SchemeKind.DWDM_BASELINE:
        gate = params.dwdm_pulse
        eta_g, p_x = 1.0, 0.0
    else:
        t_c = params.chip_slot
        b = scheme.gate_narrowing
        if b >= t_c / 2:
            raise InvalidGate(f"gate_narrowing b = {b} ps must be below T_c/2 = {t_c / 2} ps")
        gate = t_c - 2.0 * b
        if kind is SchemeKind.SCHEME1_PASSIVE:
            geom_x, eta_g = _scheme1_geometry(n, params.symbol_duration, b, model)
        else:
            geom_x, eta_g = _scheme2_geometry(n, params.pulse_width, params.guard, b, model)
        p_x = eta_sys * params.mu * geom_x
        if kind is SchemeKind.SCHEME2_ACTIVE:
            # scale the final passive values so active == N x passive bit-exactly
            p_x *= n
            eta_g *= n

    clamped = not 0.0 <= eta_g <= 1.0
    eta_g = min(max(eta_g, 0.0), 1.0)
    return LinkBudget(
        eta_g=eta_g,
        eta_sys=eta_sys,
        eta=eta_g * eta_sys,
        p_dc=params.dark_count_rate * gate,
        p_xtalk=p_x,
        gate_width=gate,
        clamped=clamped,
    )


def key_rate(scheme, params, model):
    """Full chain: budget -> background yield -> gains -> rate and spectral
    efficiency (bandwidth N/T for OFDM, the configured spacing for DWDM)."""
    budget = link_budget(scheme, params, model)
    y0 = keyrate.ofdm_yield(budget.p_dc, budget.p_xtalk)
    gains = keyrate.gains_and_errors(budget.eta, params.mu, y0, params.phase_error)
    p = keyrate.secret_fraction(gains, params.ec_inefficiency)
    if scheme.kind is SchemeKind.DWDM_BASELINE:
        n_channels = 1
        bandwidth_hz = params.dwdm_channel_spacing_ghz * 1e9
    else:
        n_channels = params.num_subcarriers
        bandwidth_hz = n_channels / (params.symbol_duration * 1e-12)
    r = keyrate.total_rate(p, n_channels, params.rep_period)
    return KeyRateReport(
        budget=budget,
        gains=gains,
        p_per_pulse=p,
        r_total=r,
        spectral_efficiency=r / bandwidth_hz,
        b_used=0.0 if scheme.kind is SchemeKind.DWDM_BASELINE else scheme.gate_narrowing,
    )


_GRID_POINTS = 256
_INV_PHI = (5.0**0.5 - 1.0) / 2.0


def _golden_max(f, lo, hi, xtol):
    """Golden-section maximization on [lo, hi] to resolution xtol."""
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2.0


def optimize_gate(kind, params, model):
    """argmax over b in [0, T_c/2) of the total rate; ties toward smaller b.

    Coarse 256-point grid, the landscape's kink locations as explicit
    candidates (b = delta, b = a -/+ delta, b = a: the tail statistics and the
    u(b - delta) step change branch there, and optima often pin to a kink),
    then golden-section refinement of the bracketing interval. The result
    never falls below the b = 0 rate.
    """
    if kind is SchemeKind.DWDM_BASELINE:
        return 0.0, dwdm_baseline(params)
    t_c = params.chip_slot

    def rate_at(b):
        try:
            return key_rate(SchemeSpec(kind, gate_narrowing=b), params, model).r_total
        except keyrate.DegenerateChannel:
            return 0.0

    grid = [i * (t_c / 2.0) / _GRID_POINTS for i in range(_GRID_POINTS)]
    rates = [rate_at(b) for b in grid]
    best = max(range(_GRID_POINTS), key=lambda i: (rates[i], -grid[i]))
    candidates = [(rates[best], grid[best])]
    a = model.half_width
    delta = 0.0 if kind is SchemeKind.SCHEME1_PASSIVE else params.guard
    for kink in (delta, a, a - delta, a + delta, abs(delta - a)):
        if 0.0 <= kink < t_c / 2.0:
            candidates.append((rate_at(kink), kink))
    if rates[best] > 0.0:
        lo = grid[best - 1] if best > 0 else grid[0]
        hi = grid[best + 1] if best + 1 < _GRID_POINTS else t_c / 2.0 * (1.0 - 1e-9)
        b_ref = _golden_max(rate_at, lo, hi, 1e-5 * t_c)
        candidates.append((rate_at(b_ref), b_ref))
    r_star, b_star = max(candidates, key=lambda rb: (rb[0], -rb[1]))
    return b_star, key_rate(SchemeSpec(kind, gate_narrowing=b_star), params, model)


def dwdm_baseline(params):
    """Single-carrier DWDM reference: full gating transmissivity, no
    crosstalk, dark counts over the pulse-wide gate, same repetition period."""
    return key_rate(SchemeSpec(SchemeKind.DWDM_BASELINE), params, misalign.MisalignmentModel(0.0))
