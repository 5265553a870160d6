"""Key-rate simulator for OFDM-multiplexed decoy-state BB84 QKD links.

All times are picoseconds internally; rates are bit/s at the interface.
"""

from .params import SchemeKind, SchemeSpec, SystemParams, validate
from .misalign import MisalignmentModel
from .keyrate import GainErrorSet
from .schemes import LinkBudget, KeyRateReport, link_budget, key_rate, optimize_gate, dwdm_baseline

__all__ = [
    "SchemeKind",
    "SchemeSpec",
    "SystemParams",
    "validate",
    "MisalignmentModel",
    "GainErrorSet",
    "LinkBudget",
    "KeyRateReport",
    "link_budget",
    "key_rate",
    "optimize_gate",
    "dwdm_baseline",
]

__version__ = "0.1.0"
