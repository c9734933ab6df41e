"""Closed-form limits and reference rates.

* erasure asymptotics: as ``r`` grows Eve's converter either clips or sees a
  signal buried in one quantization cell, which acts as an erasure
* Gaussian erasure wiretap capacity with quantization noise of variance
  ``delta^2 / 12``
* secret-key capacity of the Gaussian source model with public discussion
* the high-resolution shaping rate of a keyed scalar gain
* Eve's information when her gain follows ``G(r) = r**(-exponent)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .entropy import DEFAULT_TOL, eve_mutual_info
from .quantizer import QuantizerSpec
from .signal_model import ChannelParams, PowerModulation

__all__ = [
    "ErasureModel", "erasure_rate", "gaussian_erasure_capacity", "public_discussion_capacity",
    "rough_shaping_rate", "ScalingRow", "scaling_check", "scaling_converged",
]

# successive r-decades closer than this count as converged
SCALING_CONVERGENCE = 1e-3


def _check_epsilon(epsilon):
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon!r}")


@dataclass(frozen=True)
class ErasureModel:
    """Eve's symbol is erased with probability ``epsilon``; Bob gets ``i_xy``."""

    epsilon: float
    i_xy: float

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if not (self.i_xy >= 0.0 and math.isfinite(self.i_xy)):
            raise ValueError(f"i_xy must be finite and nonnegative, got {self.i_xy!r}")

    @property
    def rate(self) -> float:
        return (1.0 - self.epsilon) * self.i_xy


def erasure_rate(epsilon: float, i_xy: float) -> float:
    """``(1 - epsilon) * i_xy``."""
    return ErasureModel(epsilon, i_xy).rate


def gaussian_erasure_capacity(epsilon: float, q: QuantizerSpec, power: float = 1.0) -> float:
    """``(1 - epsilon)/2 * ln(1 + gamma)`` with ``gamma = 12 P / delta^2``."""
    _check_epsilon(epsilon)
    if not (power > 0 and math.isfinite(power)):
        raise ValueError(f"power must be positive, got {power!r}")
    gamma = 12.0 * power / q.step**2
    return 0.5 * (1.0 - epsilon) * math.log1p(gamma)


def public_discussion_capacity(params: ChannelParams) -> float:
    """Secret-key capacity ``1/2 ln(1 + P s_E / ((P + s_E) s_B))`` in nats.

    A noiseless Bob (``sigma2_bob == 0``) gives ``inf``; a noiseless Eve
    gives 0.
    """
    P, sb, se = params.power, params.sigma2_bob, params.sigma2_eve
    if sb == 0.0:
        return math.inf
    return 0.5 * math.log1p(P * se / ((P + se) * sb))


def rough_shaping_rate(p: float, r: float) -> float:
    """``-(p ln a1 + (1 - p) ln a2)``: the average of ``h(X) - h(aX)``."""
    mod = PowerModulation(p, r)
    return -(p * math.log(mod.a1) + (1.0 - p) * math.log(mod.a2))


@dataclass(frozen=True)
class ScalingRow:
    r: float
    g: float
    i_eve_a1: float
    i_eve_a2: float


def scaling_check(exponent: float, r_values, p: float, params: ChannelParams,
                  q_eve: QuantizerSpec, mode="paper", tol=DEFAULT_TOL) -> list[ScalingRow]:
    """Eve's branch informations when she uses ``g = r**(-exponent)``.

    For exponents strictly between 0 and 1 both branches should die out as
    ``r`` grows; exponent 0 keeps the large branch and exponent 1 keeps the
    small one.
    """
    rs = [float(r) for r in r_values]
    if not rs:
        raise ValueError("r_values must not be empty")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValueError("r_values must be strictly increasing")
    rows = []
    for r in rs:
        mod = PowerModulation(p, r)
        g = r ** (-exponent)
        i1 = eve_mutual_info(mod.a1, g, params, q_eve, mode=mode, tol=tol).value
        i2 = eve_mutual_info(mod.a2, g, params, q_eve, mode=mode, tol=tol).value
        rows.append(ScalingRow(r, g, i1, i2))
    return rows


def scaling_converged(rows, threshold=SCALING_CONVERGENCE) -> bool:
    """True when the last two rows differ by less than ``threshold`` in both branches."""
    if len(rows) < 2:
        return False
    a, b = rows[-2], rows[-1]
    return abs(a.i_eve_a1 - b.i_eve_a1) < threshold and abs(a.i_eve_a2 - b.i_eve_a2) < threshold
