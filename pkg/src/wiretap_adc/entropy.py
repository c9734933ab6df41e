"""Entropies and mutual information through a clipping, additive-noise A/D.

The receiver sees ``V = c X + N`` with ``X ~ N(0, P)`` and ``N ~ N(0, s^2)``.
Inside the dynamic range the converter adds uniform noise of width ``delta``;
outside it clips to ``+/-l``.  With ``sig = c sqrt(P)`` every quantity below is
a function of ``(sig, s, l, delta)`` alone.  For Eve ``c = a/g`` and
``s = sigma_E/g``; Bob's quantities follow by putting ``g = a`` and using his
own noise variance.

Two evaluation modes are offered.

``"paper"``
    In-range density ``f(z) = (Q((z-delta/2)/sd) - Q((z+delta/2)/sd)) / delta``
    on ``|z| < l`` with untruncated convolution limits and no normalization,
    weighted by the in-range probability:
    ``h(Z) = p_in * int -f log f``.  These are the formulas behind the
    published operating points (6.597 nats for a noiseless 10-bit converter
    with ``l = 2.5``).
``"exact"``
    The true density of the in-range output, i.e. the conditional density
    given no overflow with truncated convolution limits, on its full support
    ``|z| <= l + delta/2``.  This is what the Monte Carlo oracle estimates.

In both modes an overflowed sample is treated as an erasure, so the returned
value is ``I(X; Z | E)`` where ``E`` is the overflow event.  With
``overflow_info=True`` the information carried by the overflow pattern,
``I(X; E) = H(E) - H(E | X)``, is added (this includes the sign revealed by a
clipped sample).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf, ndtr

from .quadrature import DEFAULT_TOL, QuadratureError, cumulative, integrate, integrate_segments
from .quantizer import QuantizerSpec
from .signal_model import ChannelParams

MODES = ("paper", "exact")

# Gaussian tail cutoff in standard deviations; ndtr(-38) ~ 3e-316.
TAIL = 38.0
# Truncation of the outer integral over X, in standard deviations of X.
X_TRUNCATION = 10.0
# Half-width, in noise standard deviations, of the breakpoint pair placed
# around every smoothed step so that no Gauss panel straddles it unseen.
LAYER = 8.0
# Below this the integrand -f log f is taken as 0.
UNDERFLOW = 1e-300
# In-range probability under which a branch is treated as fully overflowed.
DEGENERATE_P_IN = 1e-12

__all__ = [
    "OverflowEvents", "MiResult", "in_range_prob", "conditional_output_pdf",
    "h_out", "h_out_given_x", "mutual_info", "bob_mutual_info", "eve_mutual_info",
    "to_unit", "QuadratureError",
]


def to_unit(value, unit="nats"):
    """Convert a value in nats for display (``"nats"`` or ``"bits"``)."""
    if unit == "nats":
        return value
    if unit == "bits":
        return value / math.log(2.0)
    raise ValueError(f"unknown unit {unit!r}")


def _xlogx_entropy(p):
    """-sum p log p with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return t


def _neg_f_log_f(f):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(f > UNDERFLOW, -f * np.log(np.where(f > UNDERFLOW, f, 1.0)), 0.0)


# Intervals narrower than this (in standard deviations) integrate the density
# directly instead of subtracting two nearly equal CDF values.
NARROW = 0.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _phi_diff(hi, lo):
    """Phi(hi) - Phi(lo) for hi >= lo, accurate in both tails and for narrow intervals."""
    hi, lo = np.broadcast_arrays(np.asarray(hi, dtype=float), np.asarray(lo, dtype=float))
    upper = ndtr(-lo) - ndtr(-hi)
    lower = ndtr(hi) - ndtr(lo)
    out = np.where(lo > 0, upper, lower)
    narrow = (hi - lo) < NARROW
    if np.any(narrow):
        h, m = 0.5 * (hi[narrow] - lo[narrow]), 0.5 * (hi[narrow] + lo[narrow])
        t = m[..., None] + h[..., None] * _GL_X
        out = out.copy()
        out[narrow] = h * (np.exp(-0.5 * t * t) @ _GL_W) / math.sqrt(2 * math.pi)
    return np.maximum(out, 0.0)


def _p_inside(l, sd):
    """P(|V| < l) for V ~ N(0, sd^2)."""
    return float(erf(l / (sd * math.sqrt(2.0))))


@dataclass(frozen=True)
class OverflowEvents:
    """Probabilities of in-range, positive overflow and negative overflow."""

    p_in: float
    p_over_pos: float
    p_over_neg: float

    @property
    def entropy(self) -> float:
        """Discrete entropy of the event in nats."""
        return float(np.sum(_xlogx_entropy([self.p_in, self.p_over_pos, self.p_over_neg])))

    # kept under the name used for the event entropy in reports
    @property
    def entropy_H(self) -> float:
        return self.entropy


@dataclass(frozen=True)
class MiResult:
    """Mutual information between the input and one converter output.

    ``value = h_out - h_out_given_x`` in nats.  The two entropies mix a
    differential part with the overflow handling of the chosen mode, so only
    their difference has an absolute meaning.
    """

    value: float
    h_out: float
    h_out_given_x: float
    events: OverflowEvents
    quad_error: float
    event_info: float
    mode: str
    overflow_info: bool

    def in_unit(self, unit="nats") -> float:
        return to_unit(self.value, unit)


# ---------------------------------------------------------------------------
# normalized-coordinate kernels (sig: signal std, s: noise std, l, d: step)
# ---------------------------------------------------------------------------

def _events(sd, l):
    p_in = _p_inside(l, sd)
    p_over = float(ndtr(-l / sd))
    return OverflowEvents(p_in, p_over, p_over)


def _cond_entropy_events(mu, s, l):
    """H(E | mu) for V ~ N(mu, s^2)."""
    p_pos = ndtr((mu - l) / s)
    p_neg = ndtr((-l - mu) / s)
    p_in = _phi_diff((l - mu) / s, (-l - mu) / s)
    return _xlogx_entropy(p_in) + _xlogx_entropy(p_pos) + _xlogx_entropy(p_neg)


def _unnormalized_pdf(z, sd, d):
    return _phi_diff((z + 0.5 * d) / sd, (z - 0.5 * d) / sd) / d


def _exact_joint_pdf(z, sd, l, d):
    """Density of the output jointly with the in-range event (integrates to p_in)."""
    hi = np.minimum(l, z + 0.5 * d)
    lo = np.maximum(-l, z - 0.5 * d)
    return np.where(hi > lo, _phi_diff(hi / sd, lo / sd), 0.0) / d


@lru_cache(maxsize=65536)
def _h_out(sig, s, l, d, mode, overflow_info, tol):
    sd = math.hypot(sig, s)
    ev = _events(sd, l)
    extra = ev.entropy if overflow_info else 0.0
    if ev.p_in < DEGENERATE_P_IN:
        return extra, 0.0
    width = max(sd, d) / 2
    if mode == "paper":
        zmax = min(l, 0.5 * d + TAIL * sd)
        J, err = integrate(lambda z: _neg_f_log_f(_unnormalized_pdf(z, sd, d)), 0.0, zmax,
                           points=_layered((0.5 * d,), sd), tol=tol / 2, max_width=width)
        return ev.p_in * 2 * J + extra, 2 * err
    zmax = min(l + 0.5 * d, 0.5 * d + TAIL * sd)
    J, err = integrate(lambda z: _neg_f_log_f(_exact_joint_pdf(z, sd, l, d)), 0.0, zmax,
                       points=_layered((0.5 * d, l - 0.5 * d, l), sd), tol=tol / 2,
                       max_width=width)
    # p_in * int -(F/p_in) log(F/p_in) = int -F log F + p_in log p_in
    return 2 * J + ev.p_in * math.log(ev.p_in) + extra, 2 * err


def _kernel_entropy(s, d, tol):
    """Shift-invariant inner kernel: e(w) = -f0 log f0, f0 = uniform(d) * N(0, s^2)."""
    wmax = 0.5 * d + TAIL * s

    def e(w):
        return _neg_f_log_f(_unnormalized_pdf(w, s, d))

    J0, err = integrate(e, 0.0, wmax, points=_layered((0.5 * d,), s), tol=tol / 2, max_width=max(s, d) / 2)
    return e, wmax, 2 * J0, 2 * err


def _strip_entropy(mu, s, l, d, tol):
    """R(mu) = int_{l-d}^{l} -F log F du, F = (Phi((l-mu)/s) - Phi((u-mu)/s)) / d.

    The output density inside the boundary strip of width ``d`` when the
    convolution limit is truncated at ``l``.
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    cut = np.clip(mu, l - d, l)
    lo = np.concatenate([np.full(n, l - d), cut])
    hi = np.concatenate([cut, np.full(n, l)])
    mus = np.concatenate([mu, mu])
    top = (l - mus) / s

    def F(u, k):
        return _neg_f_log_f(_phi_diff(top[k], (u - mus[k]) / s) / d)

    vals, errs = integrate_segments(F, lo, hi, tol=np.full(2 * n, 0.5 * tol))
    return vals[:n] + vals[n:], float(np.max(errs[:n] + errs[n:], initial=0.0))


@lru_cache(maxsize=65536)
def _h_out_given_x(sig, s, l, d, mode, overflow_info, tol):
    if s == 0.0:
        # deterministic converter input: only the uniform noise remains
        return _p_inside(l, sig) * math.log(d), 0.0
    sd = math.hypot(sig, s)
    if _p_inside(l, sd) < DEGENERATE_P_IN:
        if not overflow_info:
            return 0.0, 0.0
        v, err = integrate(lambda m: 2 * _gauss(m, sig) * _cond_entropy_events(m, s, l),
                           0.0, X_TRUNCATION * sig, points=_layered((l,), s), tol=tol)
        return v, err

    e, wmax, J0, err0 = _kernel_entropy(s, d, tol / 4)
    inner_err = [0.0]
    mu_int = l - d - TAIL * s
    mu_hi = min(X_TRUNCATION * sig, l + 0.5 * d + TAIL * s)
    interior = _p_inside(min(max(mu_int, 0.0), X_TRUNCATION * sig), sig) if mu_int > 0 else 0.0
    h = J0 * interior

    def G(t):
        vals, err = cumulative(e, t, -wmax, points=_layered((-0.5 * d, 0.5 * d), s), tol=tol / 8)
        inner_err[0] = max(inner_err[0], err)
        return vals

    def K(mu):
        p_in = _phi_diff((l - mu) / s, (-l - mu) / s)
        if mode == "paper":
            g = G(np.concatenate([l - mu, -l - mu]))
            k = p_in * (g[: mu.size] - g[mu.size:])
        else:
            g = G(np.concatenate([l - 0.5 * d - mu, -l + 0.5 * d - mu]))
            r, err = _strip_entropy(np.concatenate([mu, -mu]), s, l, d, tol / 8)
            inner_err[0] = max(inner_err[0], err)
            k = (g[: mu.size] - g[mu.size:]) + r[: mu.size] + r[mu.size:] - _xlogx_entropy(p_in)
        if overflow_info:
            k = k + _cond_entropy_events(mu, s, l)
        return k

    lo = max(mu_int, 0.0)
    err_outer = 0.0
    if mu_hi > lo:
        edge, err_outer = integrate(lambda m: 2 * _gauss(m, sig) * K(m), lo, mu_hi,
                                    points=_layered((l - d, l - 0.5 * d, l, l + 0.5 * d), s), tol=tol / 2,
                                    max_width=max(s, d) / 2)
        h += edge
    return h, err0 + err_outer + inner_err[0]


def _layered(points, width):
    """Breakpoints plus a pair at +/- LAYER*width around each of them."""
    out = []
    for p in points:
        out += [p - LAYER * width, p, p + LAYER * width]
    return tuple(out)


def _gauss(x, sd):
    return np.exp(-0.5 * (x / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


# ---------------------------------------------------------------------------
# public API in physical parameters
# ---------------------------------------------------------------------------

def _noise_var(params: ChannelParams, side: str) -> float:
    if side == "eve":
        return params.sigma2_eve
    if side == "bob":
        return params.sigma2_bob
    raise ValueError(f"side must be 'eve' or 'bob', got {side!r}")


def _normalized(a, g, params, side):
    if not (a > 0 and math.isfinite(a)):
        raise ValueError(f"gain a must be positive, got {a!r}")
    if not (g > 0 and math.isfinite(g)):
        raise ValueError(f"gain g must be positive, got {g!r}")
    sig = (a / g) * math.sqrt(params.power)
    s = math.sqrt(_noise_var(params, side)) / g
    return sig, s


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def in_range_prob(a, g, params: ChannelParams, q: QuantizerSpec, side="eve") -> OverflowEvents:
    """Overflow event probabilities at the converter input."""
    sig, s = _normalized(a, g, params, side)
    return _events(math.hypot(sig, s), q.range)


def conditional_output_pdf(z, a, g, params: ChannelParams, q: QuantizerSpec,
                           side="eve", mode="paper"):
    """Density of the converter output on the in-range event.

    In ``"paper"`` mode this is the unnormalized difference quotient of the
    Gaussian tail function on ``|z| <= l``; in ``"exact"`` mode it is the true
    conditional density (integrating to 1) on ``|z| <= l + delta/2``.
    """
    _check_mode(mode)
    sig, s = _normalized(a, g, params, side)
    sd = math.hypot(sig, s)
    l, d = q.range, q.step
    zz = np.asarray(z, dtype=float)
    limit = l if mode == "paper" else l + 0.5 * d
    if np.any(np.abs(zz) > limit * (1 + 1e-15)):
        raise ValueError(f"z outside the output range |z| <= {limit}")
    if mode == "paper":
        out = _unnormalized_pdf(zz, sd, d)
    else:
        p_in = _p_inside(l, sd)
        out = _exact_joint_pdf(zz, sd, l, d) / p_in if p_in > 0 else np.zeros_like(zz)
    return float(out) if np.ndim(z) == 0 else out


def h_out(a, g, params: ChannelParams, q: QuantizerSpec, side="eve", mode="paper",
          overflow_info=False, tol=DEFAULT_TOL):
    """Output entropy ``h(Z)`` (nats).  Returns ``(value, error_estimate)``."""
    _check_mode(mode)
    sig, s = _normalized(a, g, params, side)
    return _h_out(sig, s, q.range, q.step, mode, bool(overflow_info), tol)


def h_out_given_x(a, g, params: ChannelParams, q: QuantizerSpec, side="eve", mode="paper",
                  overflow_info=False, tol=DEFAULT_TOL):
    """Conditional output entropy ``h(Z|X)`` (nats).  Returns ``(value, error_estimate)``.

    For a noiseless channel this is ``log(delta) * p_in`` in both modes.
    """
    _check_mode(mode)
    sig, s = _normalized(a, g, params, side)
    return _h_out_given_x(sig, s, q.range, q.step, mode, bool(overflow_info), tol)


def mutual_info(a, g, params: ChannelParams, q: QuantizerSpec, side="eve", mode="paper",
                overflow_info=False, tol=DEFAULT_TOL) -> MiResult:
    """``I(X; Z)`` for a converter driven by ``(a/g) X + n/g``.

    ``side`` selects which noise variance of ``params`` is used.  Bob's
    information is ``mutual_info(a, a, params, q, side="bob")``.
    """
    _check_mode(mode)
    sig, s = _normalized(a, g, params, side)
    return _mutual_info(sig, s, q.range, q.step, mode, bool(overflow_info), tol)


@lru_cache(maxsize=65536)
def _mutual_info(sig, s, l, d, mode, overflow_info, tol):
    ho, e1 = _h_out(sig, s, l, d, mode, overflow_info, tol)
    hx, e2 = _h_out_given_x(sig, s, l, d, mode, overflow_info, tol)
    sd = math.hypot(sig, s)
    ev = _events(sd, l)
    hex_, _ = _h_event_given_x(sig, s, l, tol)
    event_info = ev.entropy - hex_
    return MiResult(ho - hx, ho, hx, ev, e1 + e2, event_info, mode, overflow_info)


@lru_cache(maxsize=65536)
def _h_event_given_x(sig, s, l, tol):
    if s == 0.0:
        return 0.0, 0.0
    return integrate(lambda m: 2 * _gauss(m, sig) * _cond_entropy_events(m, s, l),
                     0.0, X_TRUNCATION * sig, points=_layered((l,), s), tol=tol)


def bob_mutual_info(a, params: ChannelParams, q: QuantizerSpec, **kw) -> MiResult:
    """``I(X; Y | A = a)``: Bob removes the gain before his converter."""
    return mutual_info(a, a, params, q, side="bob", **kw)


def eve_mutual_info(a, g, params: ChannelParams, q: QuantizerSpec, **kw) -> MiResult:
    """``I(X; Z | A = a, G = g)``."""
    return mutual_info(a, g, params, q, side="eve", **kw)
