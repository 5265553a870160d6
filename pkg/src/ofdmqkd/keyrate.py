"""Decoy-state BB84 rate formulas (infinite-decoy, infinite-key limit).

Gain/QBER set, per subcarrier:

    Q_mu = 1 - (1 - Y0) e^{-eta mu}
    E_mu = (Y0/2 + e_d (1 - e^{-eta mu})) / Q_mu
    Y1   = (1 - eta) Y0 + eta
    Q_1  = Y1 mu e^{-mu}
    e_1  = (Y0/2 + e_d eta) / Y1

Secret fraction per pulse P = Q_1 (1 - h(e_1)) - f Q_mu h(E_mu), returned
unclamped so the gate-width optimizer sees the landscape through zero; the
clamp to max(0, .) happens in `total_rate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class KeyRateError(ValueError):
    pass


class DomainError(KeyRateError):
    """Argument outside the probability domain."""


class DegenerateChannel(KeyRateError):
    """No click probability at all (division guard for Q_mu or Y1 = 0)."""


class ProbabilityOverflow(KeyRateError):
    """Combined background probability above 1."""


class InvalidRegime(KeyRateError):
    """QBER above 1/2; the rate formulas are meaningless there."""


@dataclass(frozen=True)
class GainErrorSet:
    q_mu: float   # overall gain
    e_mu: float   # QBER
    q_1: float    # single-photon gain
    e_1: float    # single-photon error rate
    y_0: float    # zero-photon (background) yield
    y_1: float    # single-photon yield


def binary_entropy(p):
    """h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"entropy argument {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def gains_and_errors(eta, mu, y0, e_d):
    """Gain/QBER set for total transmissivity eta and background yield y0."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta = {eta} outside [0, 1]")
    if not 0.0 <= y0 <= 1.0:
        raise DomainError(f"y0 = {y0} outside [0, 1]")
    att = math.exp(-eta * mu)
    q_mu = 1.0 - (1.0 - y0) * att
    y_1 = (1.0 - eta) * y0 + eta
    if q_mu <= 0.0 or y_1 <= 0.0:
        raise DegenerateChannel(f"no detection events (Q_mu={q_mu}, Y1={y_1})")
    e_mu = (y0 / 2.0 + e_d * (1.0 - att)) / q_mu
    q_1 = y_1 * mu * math.exp(-mu)
    e_1 = (y0 / 2.0 + e_d * eta) / y_1
    if e_mu > 0.5:
        raise InvalidRegime(f"QBER {e_mu} above 1/2")
    return GainErrorSet(q_mu=q_mu, e_mu=e_mu, q_1=q_1, e_1=e_1, y_0=y0, y_1=y_1)


def secret_fraction(gains, f):
    """Unclamped key bits per pulse P = Q_1(1-h(e_1)) - f Q_mu h(E_mu)."""
    return gains.q_1 * (1.0 - binary_entropy(gains.e_1)) - f * gains.q_mu * binary_entropy(gains.e_mu)


def ofdm_yield(p_dc, p_xtalk):
    """Background yield of the two-detector receiver: 1 - (1 - (p_dc + p_xtalk))^2."""
    p = p_dc + p_xtalk
    if p > 1.0:
        raise ProbabilityOverflow(f"p_dc + p_xtalk = {p} above 1")
    if p < 0.0:
        raise DomainError(f"negative background probability {p}")
    return 1.0 - (1.0 - p) ** 2


def total_rate(p_per_pulse, n, t_s):
    """Total secret key rate max(N * P / T_s, 0) in bit/s; t_s in ps."""
    if t_s <= 0.0:
        raise DomainError(f"repetition period {t_s} must be positive")
    return max(n * p_per_pulse / (t_s * 1e-12), 0.0)
