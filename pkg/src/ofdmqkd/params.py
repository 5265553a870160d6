"""System parameters, scheme selection and config validation.

Times are picoseconds everywhere. The config layer feeds dark counts in
ns^-1 (`dark_count_rate_per_ns`); `validate` converts to ps^-1. Channel and
switch losses stay in dB and are folded into linear transmissivities by
`eta_prime` / the schemes layer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class MissingKey(ConfigError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing required key '{name}'")


class UnknownKey(ConfigError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown key '{name}'")


class OutOfRange(ConfigError):
    def __init__(self, name, value, allowed):
        self.name = name
        self.value = value
        self.allowed = allowed
        super().__init__(f"{name} = {value!r} outside allowed range {allowed}")


class SchemeKind(Enum):
    SCHEME1_PASSIVE = "scheme1"
    SCHEME2_PASSIVE = "scheme2-passive"
    SCHEME2_ACTIVE = "scheme2-active"
    DWDM_BASELINE = "dwdm"


@dataclass(frozen=True)
class SchemeSpec:
    """Decoder configuration plus per-side gate narrowing b (ps).

    b must stay below T_c/2 so the gate width T_g = T_c - 2b is positive;
    the DWDM baseline ignores b and uses its fixed pulse-wide gate.
    """

    kind: SchemeKind
    gate_narrowing: float = 0.0

    def __post_init__(self):
        if self.gate_narrowing < 0.0:
            raise OutOfRange("gate_narrowing", self.gate_narrowing, "b >= 0")


@dataclass(frozen=True)
class SystemParams:
    """Physical constants and OFDM geometry (Table-I style parameter set)."""

    mu: float                    # mean photons per signal pulse at Alice's output
    detector_efficiency: float   # eta_d in (0, 1]
    channel_loss_db: float       # insertion + path loss, dB
    switch_loss_db: float        # extra loss, applied only to the active decoder
    dark_count_per_ns: float     # gamma_dc as configured, counts per ns
    ec_inefficiency: float       # f >= 1
    phase_error: float           # e_d in [0, 0.5)
    rep_period: float            # T_s, ps
    symbol_duration: float       # T, ps
    num_subcarriers: int         # N >= 1
    delta_over_tp: float         # guard-to-pulse ratio for Scheme II
    dwdm_pulse: float = 100.0            # baseline pulse width / dark-count gate, ps
    dwdm_channel_spacing_ghz: float = 50.0

    @property
    def dark_count_rate(self):
        """gamma_dc in counts per ps (config unit is ns^-1; the stored field
        keeps the config value so serialization round-trips exactly)."""
        return self.dark_count_per_ns * 1e-3

    @property
    def chip_slot(self):
        """T_c = T/N, the overlap slot targeted by time gating (ps)."""
        return self.symbol_duration / self.num_subcarriers

    @property
    def pulse_width(self):
        """Scheme II pulse width T_p with T_p + 2*delta = T_c exactly (ps)."""
        return self.chip_slot / (1.0 + 2.0 * self.delta_over_tp)

    @property
    def guard(self):
        """Scheme II guard delta = (T_c - T_p)/2 (ps)."""
        return self.delta_over_tp * self.pulse_width

    def to_config(self):
        """Key-value form accepted back by `validate` (round-trip safe)."""
        return {
            "mu": self.mu,
            "detector_efficiency": self.detector_efficiency,
            "channel_loss_db": self.channel_loss_db,
            "switch_loss_db": self.switch_loss_db,
            "dark_count_rate_per_ns": self.dark_count_per_ns,
            "error_correction_inefficiency": self.ec_inefficiency,
            "phase_error": self.phase_error,
            "pulse_repetition_ps": self.rep_period,
            "symbol_duration_ps": self.symbol_duration,
            "num_subcarriers": self.num_subcarriers,
            "delta_over_tp": self.delta_over_tp,
            "dwdm_pulse_ps": self.dwdm_pulse,
            "dwdm_channel_spacing_ghz": self.dwdm_channel_spacing_ghz,
        }

    def with_subcarriers(self, n):
        return replace(self, num_subcarriers=int(n))


#: Table-I nominal values, keyed by config-file names.
TABLE_DEFAULTS = {
    "mu": 0.48,
    "detector_efficiency": 0.3,
    "channel_loss_db": 10.0,
    "switch_loss_db": 2.0,
    "dark_count_rate_per_ns": 1e-7,
    "error_correction_inefficiency": 1.22,
    "phase_error": 0.005,
    "pulse_repetition_ps": 210.0,
    "symbol_duration_ps": 100.0,
    "num_subcarriers": 16,
    "delta_over_tp": 0.04,
    "dwdm_pulse_ps": 100.0,
    "dwdm_channel_spacing_ghz": 50.0,
}

_REQUIRED = tuple(TABLE_DEFAULTS)


def _require(cond, name, value, allowed):
    if not cond:
        raise OutOfRange(name, value, allowed)


def validate(raw_config):
    """Build a SystemParams from a key-value map, rejecting invariant violations.

    Every key in TABLE_DEFAULTS must be present (the cli layer fills defaults
    before calling this). Raises MissingKey / UnknownKey / OutOfRange.
    """
    for key in raw_config:
        if key not in TABLE_DEFAULTS:
            raise UnknownKey(key)
    for key in _REQUIRED:
        if key not in raw_config:
            raise MissingKey(key)

    c = raw_config
    mu = float(c["mu"])
    eta_d = float(c["detector_efficiency"])
    loss = float(c["channel_loss_db"])
    switch = float(c["switch_loss_db"])
    gdc_ns = float(c["dark_count_rate_per_ns"])
    f = float(c["error_correction_inefficiency"])
    e_d = float(c["phase_error"])
    t_s = float(c["pulse_repetition_ps"])
    t = float(c["symbol_duration_ps"])
    n = c["num_subcarriers"]
    r = float(c["delta_over_tp"])
    dwdm_pulse = float(c["dwdm_pulse_ps"])
    spacing = float(c["dwdm_channel_spacing_ghz"])

    _require(mu > 0, "mu", mu, "mu > 0")
    _require(0 < eta_d <= 1, "detector_efficiency", eta_d, "(0, 1]")
    _require(loss >= 0, "channel_loss_db", loss, ">= 0")
    _require(switch >= 0, "switch_loss_db", switch, ">= 0")
    _require(gdc_ns >= 0, "dark_count_rate_per_ns", gdc_ns, ">= 0")
    _require(f >= 1, "error_correction_inefficiency", f, "f >= 1")
    _require(0 <= e_d < 0.5, "phase_error", e_d, "[0, 0.5)")
    _require(t > 0, "symbol_duration_ps", t, "T > 0")
    _require(t_s >= t, "pulse_repetition_ps", t_s, "T_s >= T")
    _require(float(n) == int(n) and int(n) >= 1, "num_subcarriers", n, "integer N >= 1")
    _require(r >= 0, "delta_over_tp", r, ">= 0")
    _require(dwdm_pulse > 0, "dwdm_pulse_ps", dwdm_pulse, "> 0")
    _require(spacing > 0, "dwdm_channel_spacing_ghz", spacing, "> 0")

    return SystemParams(
        mu=mu,
        detector_efficiency=eta_d,
        channel_loss_db=loss,
        switch_loss_db=switch,
        dark_count_per_ns=gdc_ns,
        ec_inefficiency=f,
        phase_error=e_d,
        rep_period=t_s,
        symbol_duration=t,
        num_subcarriers=int(n),
        delta_over_tp=r,
        dwdm_pulse=dwdm_pulse,
        dwdm_channel_spacing_ghz=spacing,
    )


def eta_prime(scheme_kind, params):
    """Link transmissivity excluding time gating: eta_d * 10^(-loss/10).

    The active decoder's optical switch adds its insertion loss here as well,
    since leaked light traverses the same switch as the signal.
    """
    eta = params.detector_efficiency * 10.0 ** (-params.channel_loss_db / 10.0)
    if scheme_kind is SchemeKind.SCHEME2_ACTIVE:
        eta *= 10.0 ** (-params.switch_loss_db / 10.0)
    return eta
