"""Channel parameters, keyed two-level power gain, and Eve's inverse gain.

Given the transmit gain ``a`` (known to Bob through the shared key) and Eve's
inverse gain ``g``, the converters see

* Bob:  ``X + n_B / a``
* Eve:  ``(a / g) X + n_E / g``

The sign of ``a`` is random but never matters for the rate computation: the
codebook and both noises are zero-mean symmetric, so everything below depends
on ``|a|`` only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ChannelParams:
    """Transmit power and receiver noise variances (zero means noiseless)."""

    power: float = 1.0
    sigma2_bob: float = 0.0
    sigma2_eve: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.power) and self.power > 0):
            raise ValueError(f"power must be positive, got {self.power!r}")
        for name in ("sigma2_bob", "sigma2_eve"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite nonnegative number, got {v!r}")

    @classmethod
    def from_snr_db(cls, power=1.0, snr_bob_db=math.inf, snr_eve_db=math.inf):
        """Build from per-receiver SNR in dB; ``inf`` gives a noiseless channel."""
        return cls(power, snr_to_noise_var(snr_bob_db, power), snr_to_noise_var(snr_eve_db, power))


def snr_to_noise_var(snr_db: float, power: float = 1.0) -> float:
    """Noise variance ``P * 10**(-snr/10)``; infinite SNR maps to 0."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return power * 10.0 ** (-snr_db / 10.0)


def solve_gains(p: float, r: float) -> tuple[float, float]:
    """Gain levels with ``a1/a2 = r`` and unit second moment ``p a1^2 + (1-p) a2^2 = 1``."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if not (r >= 1.0 and math.isfinite(r)):
        raise ValueError(f"r must be a finite number >= 1, got {r!r}")
    a2 = 1.0 / math.sqrt(p * r * r + (1.0 - p))
    return r * a2, a2


@dataclass(frozen=True)
class PowerModulation:
    """Keyed two-level gain: ``|A| = a1`` with probability ``p``, else ``a2``."""

    p: float
    r: float
    a1: float = field(init=False)
    a2: float = field(init=False)

    def __post_init__(self):
        a1, a2 = solve_gains(self.p, self.r)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def branches(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """``((a1, p), (a2, 1 - p))``."""
        return (self.a1, self.p), (self.a2, 1.0 - self.p)

    def second_moment(self) -> float:
        return self.p * self.a1**2 + (1.0 - self.p) * self.a2**2


@dataclass(frozen=True)
class EveStrategy:
    """Discrete distribution over Eve's inverse gain ``g``.

    A point mass is optimal for Eve; mixtures exist so that this can be
    checked rather than assumed.
    """

    gains: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        weights = tuple(float(w) for w in self.weights)
        if not gains or len(gains) != len(weights):
            raise ValueError("gains and weights must be nonempty and of equal length")
        if any(not (g > 0 and math.isfinite(g)) for g in gains):
            raise ValueError("all gains must be positive and finite")
        if any(w < 0 or w > 1 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-9:
            raise ValueError("weights must lie in [0, 1] and sum to 1")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, g: float) -> "EveStrategy":
        return cls((g,), (1.0,))

    @property
    def is_point_mass(self) -> bool:
        return sum(1 for w in self.weights if w > 0) == 1


@dataclass(frozen=True)
class EffectiveObservation:
    """What a converter sees: ``gain * X + noise`` before clipping/quantization."""

    signal_gain: float
    noise_var: float
    power: float

    @property
    def variance(self) -> float:
        return self.signal_gain**2 * self.power + self.noise_var

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def _check_gain(name, v):
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"{name} must be positive and finite, got {v!r}")


def bob_effective(a: float, params: ChannelParams) -> EffectiveObservation:
    """Bob undoes the gain before his A/D: ``X + n_B / a``."""
    _check_gain("a", a)
    return EffectiveObservation(1.0, params.sigma2_bob / a**2, params.power)


def eve_effective(a: float, g: float, params: ChannelParams) -> EffectiveObservation:
    """Eve applies ``1/g`` without knowing ``a``: ``(a/g) X + n_E / g``."""
    _check_gain("a", a)
    _check_gain("g", g)
    return EffectiveObservation(a / g, params.sigma2_eve / g**2, params.power)
