"""Uniform mid-rise A/D converter with clipping.

Two views of the same converter are provided.  The analytic engine uses the
additive model: in-range samples receive uniform noise on ``[-step/2, step/2]``
and out-of-range samples are clipped to ``+/-range``.  The Monte Carlo oracle
can additionally run the exact discrete quantizer implemented by
:func:`quantize`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# step/range above which the additive uniform-noise model is considered crude
MAX_RELATIVE_STEP = 0.05


class QuantizerWarning(UserWarning):
    """Raised when a converter is too coarse for the additive noise model."""


@dataclass(frozen=True)
class QuantizerSpec:
    """An ``bits``-bit uniform converter over the dynamic range ``[-range, range]``.

    Parameters
    ----------
    bits : int
        Resolution m; the converter has ``2**m`` reconstruction levels.
    range : float
        Half-width l of the dynamic range.
    """

    bits: int
    range: float

    def __post_init__(self):
        if isinstance(self.bits, bool) or int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"bits must be a positive integer, got {self.bits!r}")
        if not (math.isfinite(self.range) and self.range > 0):
            raise ValueError(f"range must be a positive finite number, got {self.range!r}")
        object.__setattr__(self, "bits", int(self.bits))
        object.__setattr__(self, "range", float(self.range))
        if self.step / self.range > MAX_RELATIVE_STEP:
            warnings.warn(
                f"{self.bits}-bit converter: step/range = {self.step / self.range:.3g} "
                f"exceeds {MAX_RELATIVE_STEP}; the uniform quantization-noise model is crude",
                QuantizerWarning,
                stacklevel=3,
            )

    @property
    def levels(self) -> int:
        return 2**self.bits

    @property
    def step(self) -> float:
        return 2.0 * self.range / self.levels


def step(q: QuantizerSpec) -> float:
    """Spacing between adjacent reconstruction levels, ``2 l / 2**m``."""
    return q.step


def quantize(q: QuantizerSpec, s):
    """Exact mid-rise quantizer with clipping.

    Inputs with ``|s| >= l`` map to ``sign(s) * l``.  Everything else maps to
    the midpoint of its cell ``[k*step, (k+1)*step)``; a value on a cell
    boundary belongs to the upper cell.

    Accepts a scalar or an array and returns the same shape.
    """
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("quantize() requires finite input")
    d = q.step
    out = d * (np.floor(arr / d) + 0.5)
    # floor(s/d) can reach levels/2 for s just below l due to rounding; keep it on the top level
    top = q.range - 0.5 * d
    out = np.clip(out, -top, top)
    out = np.where(arr >= q.range, q.range, out)
    out = np.where(arr <= -q.range, -q.range, out)
    if np.ndim(s) == 0:
        return float(out)
    return out


def noise_model_sample(q: QuantizerSpec, rng: np.random.Generator, size=None):
    """Draw additive quantization noise, uniform on ``[-step/2, step/2]``."""
    half = 0.5 * q.step
    return rng.uniform(-half, half, size=size)
