"""Closed-form bound calculators for the discretization-error analysis.

These are the theoretical quantities the measured errors are compared
against: the rate exponent in n, the filter-count growth factor, the
per-layer error recurrence and its closed form, and the Monte Carlo
inner-product (Hoeffding) bound. All logarithms are natural; the analysis
only fixes rates, so the hidden constants are explicit inputs defaulting
to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def theoretical_rate_exponent(d: int) -> float:
    """The eigen-convergence rate exponent 2/(d+6): 1/4 for d=2, 2/7 for d=1."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    return 2.0 / (d + 6)


def filter_count_factor(widths, variant: str = "theorem") -> int:
    """Network-size factor multiplying the per-layer error.

    widths = (F_0, ..., F_L). The "theorem" variant is
    sum_{k=1..L} prod_{j=L-k..L} F_j; the "appendix" (per-feature) variant
    drops the final F_L from each product, so theorem = F_L * appendix.
    """
    widths = tuple(int(w) for w in widths)
    if any(w < 1 for w in widths):
        raise ValueError("widths must be positive")
    if variant not in ("theorem", "appendix"):
        raise ValueError(f"unknown variant: {variant!r}")
    L = len(widths) - 1
    stop = L + 1 if variant == "theorem" else L
    total = 0
    for k in range(1, L + 1):
        prod = 1
        for j in range(L - k, stop):
            prod *= widths[j]
        total += prod
    return total


@dataclass(frozen=True)
class BoundInputs:
    """Everything the error bound depends on, for one network and one n."""

    widths: tuple[int, ...]
    lipschitz: float  # C; the bound uses max(C, 1)
    intrinsic_dim: int
    n: int
    max_l2_norm: float  # max over layers/features of ||f_l^q||
    max_sup_norm: float  # max over layers/features of ||f_l^q||_inf

    @property
    def c_tilde(self) -> float:
        return max(self.lipschitz, 1.0)


def delta_n(inputs: BoundInputs, c1: float = 1.0, c2: float = 1.0) -> float:
    """Per-layer discretization increment delta_n.

    d >= 2: C~ [c1 sqrt(ln n)/n^{2/(d+6)} max||f|| +
               c2 (ln n)^{3/4}/n^{1/4 + 2/(d+6)} max||f||_inf];
    d = 1:  C~ [c1 sqrt(ln n)/n^{2/7} max||f|| +
               c2 sqrt(ln n)/n^{1/2} max||f||_inf].
    """
    n = inputs.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    ln = math.log(n)
    expo = theoretical_rate_exponent(inputs.intrinsic_dim)
    if inputs.intrinsic_dim >= 2:
        term1 = c1 * math.sqrt(ln) / n**expo * inputs.max_l2_norm
        term2 = c2 * ln**0.75 / n ** (0.25 + expo) * inputs.max_sup_norm
    else:
        term1 = c1 * math.sqrt(ln) / n ** (2.0 / 7.0) * inputs.max_l2_norm
        term2 = c2 * math.sqrt(ln) / math.sqrt(n) * inputs.max_sup_norm
    return inputs.c_tilde * (term1 + term2)


def error_recurrence(delta: float, eps0: float, factors) -> list[float]:
    """Iterate eps_l = F_{l-1} (eps_{l-1} + delta) through the layers.

    factors = (F_0, ..., F_{L-1}), one multiplier per layer; returns
    [eps_1, ..., eps_L]. With eps_0 = 0 this reproduces the closed form
    delta * sum_{k=1..l} prod_{j=l-k..l-1} F_j at every layer (the
    per-feature "appendix" variant of filter_count_factor).
    """
    if delta < 0 or eps0 < 0:
        raise ValueError("delta and eps0 must be nonnegative")
    eps = float(eps0)
    out = []
    for f in factors:
        eps = int(f) * (eps + delta)
        out.append(eps)
    return out


def hoeffding_bound(n: int, sup_fg: float) -> float:
    """sqrt(18 ln n / n) * ||fg||_inf, the Monte Carlo inner-product bound."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if sup_fg < 0:
        raise ValueError("sup norm must be nonnegative")
    return math.sqrt(18.0 * math.log(n) / n) * sup_fg
