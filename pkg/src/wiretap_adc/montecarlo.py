"""Symbol-level simulation of the keyed wiretap pipeline and plug-in estimators.

All randomness comes from two counter-mode streams derived from one 256-bit
seed: the keystream (gain level and sign, shared by Alice and Bob) and the
channel stream (codeword, noises, dither of the additive converter model).
Each symbol consumes a fixed block of words at a counter equal to its index,
so any range of symbols can be generated on its own and the result does not
depend on how a run is partitioned.

The plug-in estimators average exact log-density ratios over samples.  The
densities here are those of the simulated model, written independently of
the quadrature engine so the two can check each other.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import ndtri
from scipy.stats import norm

from .quantizer import QuantizerSpec, quantize
from .signal_model import ChannelParams, PowerModulation

SIM_MODES = ("additive", "exact")
WORDS_PER_SYMBOL = 8
MIN_IN_RANGE = 100
CSV_COLUMNS = ("symbol_index", "x", "a", "y_bob", "z_eve", "bob_overflow", "eve_overflow")

__all__ = [
    "Keystream", "SimBatch", "McEstimate", "InsufficientSamplesError", "simulate",
    "plugin_entropy", "mutual_info_terms", "plugin_mutual_info", "branch_estimates",
    "mc_mutual_info", "key_overhead", "write_csv",
]


class InsufficientSamplesError(ValueError):
    """Too few in-range samples for a meaningful estimate."""


def _seed_bytes(seed) -> bytes:
    if isinstance(seed, (bytes, bytearray)):
        if len(seed) != 32:
            raise ValueError("a byte seed must be exactly 32 bytes")
        return bytes(seed)
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an int or 32 bytes, got {type(seed).__name__}")
    seed = int(seed)
    if not (0 <= seed < 2**256):
        raise ValueError("seed must lie in [0, 2**256)")
    return seed.to_bytes(32, "big")


class _CounterStream:
    """Philox-4x64 keyed by a hash of (domain, seed); block ``i`` belongs to symbol ``i``."""

    def __init__(self, seed, domain: bytes):
        digest = hashlib.sha256(domain + b"\x00" + _seed_bytes(seed)).digest()
        self._key = int.from_bytes(digest[:16], "little")

    def words(self, start: int, n: int) -> np.ndarray:
        if start < 0 or n < 0:
            raise ValueError("start and n must be nonnegative")
        # each Philox counter step yields 4 words
        steps = WORDS_PER_SYMBOL // 4
        bitgen = np.random.Philox(key=self._key, counter=start * steps)
        return bitgen.random_raw(n * WORDS_PER_SYMBOL).reshape(n, WORDS_PER_SYMBOL)


def _unit_open(w):
    """53-bit uniforms on the open interval (0, 1)."""
    return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class Keystream:
    """Shared gain sequence: a seed and a symbol counter.

    Symbol ``i`` takes the large level ``a1`` when its first uniform is below
    ``p`` and a negative sign when its second is below 1/2.
    """

    def __init__(self, seed, counter: int = 0):
        self.seed = seed
        self.counter = int(counter)
        self._stream = _CounterStream(seed, b"keystream")

    def gains(self, n: int, mod: PowerModulation) -> np.ndarray:
        """Signed gains for the next ``n`` symbols; advances the counter."""
        w = self._stream.words(self.counter, n)
        self.counter += n
        large = _unit_open(w[:, 0]) < mod.p
        sign = np.where(_unit_open(w[:, 1]) < 0.5, -1.0, 1.0)
        return sign * np.where(large, mod.a1, mod.a2)


def _channel_draws(seed, start, n, power):
    w = _CounterStream(seed, b"channel").words(start, n)
    x = math.sqrt(power) * ndtri(_unit_open(w[:, 0]))
    nb = ndtri(_unit_open(w[:, 1]))
    ne = ndtri(_unit_open(w[:, 2]))
    ub = _unit_open(w[:, 3]) - 0.5
    ue = _unit_open(w[:, 4]) - 0.5
    return x, nb, ne, ub, ue


def _convert(v, u, q: QuantizerSpec, mode):
    """Converter output and overflow flag (+1, -1 or 0)."""
    l = q.range
    flag = np.where(v >= l, 1, np.where(v <= -l, -1, 0)).astype(np.int8)
    if mode == "exact":
        return quantize(q, v), flag
    out = np.where(flag == 0, v + u * q.step, flag * l)
    return out, flag


def _check_sim_mode(mode):
    if mode not in SIM_MODES:
        raise ValueError(f"mode must be one of {SIM_MODES}, got {mode!r}")


@dataclass(frozen=True)
class SimBatch:
    """Symbols ``start .. start+n-1`` of one seeded run."""

    start: int
    x: np.ndarray
    a: np.ndarray
    y_bob: np.ndarray
    z_eve: np.ndarray
    bob_overflow: np.ndarray
    eve_overflow: np.ndarray
    p: float
    r: float
    g: float
    params: ChannelParams
    q_bob: QuantizerSpec
    q_eve: QuantizerSpec
    mode: str

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def symbol_index(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.n)


def simulate(n, seed, p, r, g_eve, params: ChannelParams, q_bob: QuantizerSpec,
             q_eve: QuantizerSpec, mode="additive", start=0, force_positive=False) -> SimBatch:
    """Run symbols ``start .. start+n-1`` through both receivers.

    Bob converts ``X + n_B/a``; Eve converts ``(a/g) X + n_E/g``.  ``mode``
    is ``"additive"`` (uniform noise inside the range, clipping outside) or
    ``"exact"`` (the discrete quantizer).  ``force_positive`` drops the key's
    sign bit.
    """
    _check_sim_mode(mode)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not (g_eve > 0 and math.isfinite(g_eve)):
        raise ValueError(f"g_eve must be positive and finite, got {g_eve!r}")
    n = int(n)
    mod = PowerModulation(p, r)
    a = Keystream(seed, start).gains(n, mod)
    if force_positive:
        a = np.abs(a)
    x, nb, ne, ub, ue = _channel_draws(seed, start, n, params.power)
    y, fb = _convert(x + math.sqrt(params.sigma2_bob) * nb / a, ub, q_bob, mode)
    z, fe = _convert((a / g_eve) * x + math.sqrt(params.sigma2_eve) * ne / g_eve, ue, q_eve, mode)
    return SimBatch(start, x, a, y, z, fb, fe, p, r, float(g_eve), params, q_bob, q_eve, mode)


# ---------------------------------------------------------------------------
# densities of the simulated model
# ---------------------------------------------------------------------------

def _interval_prob(lo, hi, mean, sd):
    """P(lo < V < hi) for V ~ N(mean, sd^2), accurate in both tails."""
    a, b = (lo - mean) / sd, (hi - mean) / sd
    return np.where(a > 0, norm.sf(a) - norm.sf(b), norm.cdf(b) - norm.cdf(a))


def _joint_in_density(z, mean, sd, q):
    """Density of the additive-model output together with the in-range event."""
    l, d = q.range, q.step
    hi = np.minimum(l, z + 0.5 * d)
    lo = np.maximum(-l, z - 0.5 * d)
    if np.isscalar(sd) and sd == 0.0:
        inside = (mean > lo) & (mean < hi)
        return np.where(inside, 1.0 / d, 0.0)
    return np.where(hi > lo, _interval_prob(lo, hi, mean, sd), 0.0) / d


def _in_prob(mean, sd, l):
    if np.isscalar(sd) and sd == 0.0:
        return (np.abs(mean) < l).astype(float)
    return _interval_prob(-l, l, mean, sd)


def _cell_bounds(z, q):
    """Input interval that the exact quantizer maps to the in-range output ``z``."""
    d = q.step
    k = np.rint(z / d - 0.5)
    return k * d, (k + 1.0) * d


def _event_prob(flag, mean, sd, l):
    if np.isscalar(sd) and sd == 0.0:
        over_pos = (mean >= l).astype(float)
        over_neg = (mean <= -l).astype(float)
    else:
        over_pos = norm.sf((l - mean) / sd)
        over_neg = norm.cdf((-l - mean) / sd)
    return np.where(flag > 0, over_pos, np.where(flag < 0, over_neg, 1.0 - over_pos - over_neg))


def mutual_info_terms(z, overflow, x, gain, noise_sd, power, q: QuantizerSpec,
                      mode="additive", overflow_info=False):
    """Per-sample log-likelihood ratios whose mean estimates the information.

    The receiver converts ``gain * x + noise_sd * N(0, 1)``; ``gain`` may be an
    array (signed).  Overflowed samples count as erasures and contribute 0,
    so the mean estimates ``I(X; Z | E)``; ``overflow_info`` adds the
    ``log P(e | x) / P(e)`` terms of ``I(X; E)``.
    """
    _check_sim_mode(mode)
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    inside = np.asarray(overflow) == 0
    mean = gain * x
    sd_total = np.sqrt(gain**2 * power + noise_sd**2)
    l = q.range
    terms = np.zeros(z.shape)
    zi = z[inside]
    mi = mean[inside] if np.ndim(mean) else np.full(zi.shape, mean)
    ti = sd_total[inside] if np.ndim(sd_total) else sd_total
    with np.errstate(divide="ignore"):
        if mode == "additive":
            cond = _joint_in_density(zi, mi, noise_sd, q) / _in_prob(mi, noise_sd, l)
            marg = _joint_in_density(zi, 0.0, ti, q) / _in_prob(0.0, ti, l)
        else:
            lo, hi = _cell_bounds(zi, q)
            if noise_sd == 0.0:
                cond = np.ones_like(zi)
            else:
                cond = _interval_prob(lo, hi, mi, noise_sd) / _in_prob(mi, noise_sd, l)
            marg = _interval_prob(lo, hi, 0.0, ti) / _in_prob(0.0, ti, l)
        terms[inside] = np.log(cond) - np.log(marg)
        if overflow_info:
            flag = np.asarray(overflow)
            terms += (np.log(_event_prob(flag, mean, noise_sd, l))
                      - np.log(_event_prob(flag, 0.0, sd_total, l)))
    if not np.all(np.isfinite(terms)):
        raise FloatingPointError("a sample has zero model density; simulation and model disagree")
    return terms


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error."""

    value: float
    se: float
    n: int
    in_range_fraction: float

    def agrees(self, reference: float, k: float = 3.0) -> bool:
        """``|value - reference| <= k * se`` (with a floor for zero-variance samples)."""
        return abs(self.value - reference) <= k * max(self.se, 1e-12)


def _mean_se(terms):
    terms = np.asarray(terms, dtype=float)
    n = terms.size
    if n < 2:
        raise InsufficientSamplesError("need at least two samples")
    return float(np.mean(terms)), float(np.std(terms, ddof=1) / math.sqrt(n))


def plugin_mutual_info(terms, overflow, min_in_range=0) -> McEstimate:
    """Estimate from :func:`mutual_info_terms` output.

    Erased samples contribute exact zeros, so a mostly overflowed receiver
    still gives an unbiased estimate; ``min_in_range`` can demand more.
    """
    inside = np.asarray(overflow) == 0
    if inside.sum() < min_in_range:
        raise InsufficientSamplesError(
            f"only {int(inside.sum())} in-range samples, need {min_in_range}")
    v, se = _mean_se(terms)
    return McEstimate(v, se, len(terms), float(inside.mean()))


def plugin_entropy(z, overflow, pdf, include_events=False) -> tuple[float, float]:
    """Plug-in estimate of ``p_in * h(Z | in range)`` (nats) and its standard error.

    ``pdf`` is the normalized in-range output density.  Each sample
    contributes ``-log pdf(z)`` when in range and 0 otherwise, so the mean is
    already scaled by the empirical in-range fraction.  ``include_events``
    adds the empirical entropy of the overflow pattern.
    """
    z = np.asarray(z, dtype=float)
    flag = np.asarray(overflow)
    inside = flag == 0
    if inside.sum() < MIN_IN_RANGE:
        raise InsufficientSamplesError(
            f"only {int(inside.sum())} in-range samples, need {MIN_IN_RANGE}")
    terms = np.zeros(z.shape)
    with np.errstate(divide="ignore"):
        terms[inside] = -np.log(pdf(z[inside]))
    if include_events:
        for value in (-1, 0, 1):
            hit = flag == value
            if hit.any():
                terms[hit] -= math.log(hit.mean())
    return _mean_se(terms)


def branch_estimates(batch: SimBatch, overflow_info=False) -> dict:
    """Per gain level: plug-in ``I(X;Y | a)`` and ``I(X;Z | a, g)`` from a keyed batch."""
    mod = PowerModulation(batch.p, batch.r)
    P = batch.params.power
    out = {}
    for name, level in (("a1", mod.a1), ("a2", mod.a2)):
        sel = np.isclose(np.abs(batch.a), level, rtol=1e-12, atol=0.0)
        if mod.a1 == mod.a2:
            sel = np.ones(batch.n, dtype=bool)
        a = batch.a[sel]
        tb = mutual_info_terms(batch.y_bob[sel], batch.bob_overflow[sel], batch.x[sel], 1.0,
                               math.sqrt(batch.params.sigma2_bob) / level, P, batch.q_bob,
                               batch.mode, overflow_info)
        te = mutual_info_terms(batch.z_eve[sel], batch.eve_overflow[sel], batch.x[sel],
                               a / batch.g, math.sqrt(batch.params.sigma2_eve) / batch.g, P,
                               batch.q_eve, batch.mode, overflow_info)
        out[name] = {
            "weight": float(sel.mean()),
            "bob": plugin_mutual_info(tb, batch.bob_overflow[sel]),
            "eve": plugin_mutual_info(te, batch.eve_overflow[sel]),
        }
    return out


def mc_mutual_info(a, g, params: ChannelParams, q: QuantizerSpec, side="eve", n=10**6,
                   seed=0, mode="additive", overflow_info=False) -> McEstimate:
    """Plug-in ``I(X; Z)`` for a fixed gain: the receiver converts ``(a/g) X + n/g``.

    Bob's information is ``side="bob"`` with ``g = a``.
    """
    _check_sim_mode(mode)
    if side not in ("eve", "bob"):
        raise ValueError(f"side must be 'eve' or 'bob', got {side!r}")
    if not (a > 0 and g > 0):
        raise ValueError("gains must be positive")
    sigma2 = params.sigma2_eve if side == "eve" else params.sigma2_bob
    x, nb, ne, ub, ue = _channel_draws(seed, 0, int(n), params.power)
    noise = ne if side == "eve" else nb
    u = ue if side == "eve" else ub
    c, s = a / g, math.sqrt(sigma2) / g
    z, flag = _convert(c * x + s * noise, u, q, mode)
    terms = mutual_info_terms(z, flag, x, c, s, params.power, q, mode, overflow_info)
    return plugin_mutual_info(terms, flag)


def key_overhead(scheme: str) -> Fraction:
    """Key bits spent per generated keystream bit.

    ``"ctr_rekey"``: a 128-bit key refreshed every 2**38 output bits.
    ``"trivium_like"``: an 80-bit key driving 2**64 output bits.
    """
    table = {"ctr_rekey": Fraction(128, 2**38), "trivium_like": Fraction(80, 2**64)}
    try:
        return table[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(table)}") from None


def write_csv(batch: SimBatch, fh) -> None:
    """Write one row per symbol to the open text file ``fh``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in zip(batch.symbol_index, batch.x, batch.a, batch.y_bob, batch.z_eve,
                   batch.bob_overflow, batch.eve_overflow):
        i, x, a, y, z, fb, fe = row
        w.writerow([int(i), repr(float(x)), repr(float(a)), repr(float(y)), repr(float(z)),
                    int(fb), int(fe)])
