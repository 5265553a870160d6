"""Per-subcarrier timing-error model tau_k ~ U(-a, a).

The crosstalk/loss closed forms consume only three statistics of |tau_k| —
E{|tau|}, P(|tau| >= x) and E{|tau| given |tau| >= x} — so other symmetric
zero-mean families would slot in behind the same interface. Only the uniform
family is implemented. The closed forms (and the oracle-equivalence grid)
assume a < T_c; larger half-widths are accepted and evaluated as stated, with
unphysical transmissivities clamped downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIFORM = "uniform"


@dataclass(frozen=True)
class MisalignmentModel:
    """Symmetric i.i.d. timing error per subcarrier; half_width a in ps."""

    half_width: float
    family: str = UNIFORM

    def __post_init__(self):
        if self.family != UNIFORM:
            raise ValueError(f"unsupported misalignment family {self.family!r}")
        if self.half_width < 0:
            raise ValueError(f"half_width must be >= 0, got {self.half_width}")


def mean_abs(model):
    """E{|tau|}; a/2 for the uniform family."""
    return 0.5 * model.half_width


def tail_prob(model, x):
    """P(|tau| >= x) for x >= 0; by convention 1 at x = 0 even when a = 0."""
    if x < 0:
        raise ValueError("threshold must be >= 0")
    if x == 0.0:
        return 1.0
    a = model.half_width
    if a == 0.0:
        return 0.0
    return max(0.0, 1.0 - x / a)


def tail_mean(model, x):
    """E{|tau| given |tau| >= x}; (x+a)/2 for uniform when the tail is nonempty.

    On an empty tail this returns x: every use multiplies it by tail_prob,
    so the product is the correct zero and no special case leaks out.
    """
    if x < 0:
        raise ValueError("threshold must be >= 0")
    a = model.half_width
    if tail_prob(model, x) == 0.0:
        return x
    return 0.5 * (x + a)


def excess_mean(model, x):
    """E{(|tau| - x)^+} = tail_prob(x) * (tail_mean(x) - x), the combination
    every narrowed-gate crosstalk and loss term reduces to."""
    return tail_prob(model, x) * (tail_mean(model, x) - x)


def sample_rng(model, rng, n):
    """n i.i.d. draws from U(-a, a) using an existing numpy Generator."""
    a = model.half_width
    if a == 0.0:
        return np.zeros(n)
    return rng.uniform(-a, a, n)


def sample(model, seed, n):
    """n i.i.d. draws from U(-a, a); deterministic for a given integer seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sample_rng(model, np.random.Generator(np.random.PCG64(seed)), n)
