"""Vectorized adaptive Gauss-Legendre quadrature.

Every panel is integrated with a fixed-order Gauss-Legendre rule and with the
same rule on its two halves; the difference is the error estimate.  Panels
whose estimate exceeds their share of the absolute tolerance (proportional to
their width) are bisected.  All active panels are evaluated in one call to the
integrand, so integrands must accept arrays.

:func:`integrate_segments` integrates many independent segments at once and
passes the segment index to the integrand, which lets one call evaluate a batch
of parameterized integrals (for example one inner integral per outer node).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

DEFAULT_TOL = 1e-7
DEFAULT_ORDER = 10


class QuadratureError(ArithmeticError):
    """Adaptive subdivision did not reach the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual error estimate {residual:.3g})")
        self.residual = residual


@lru_cache(maxsize=8)
def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def integrate_segments(func, lo, hi, tol=DEFAULT_TOL, order=DEFAULT_ORDER,
                       max_iter=64, max_panels=400_000):
    """Integrate ``func(x, k)`` over each segment ``[lo[k], hi[k]]``.

    Parameters
    ----------
    func : callable
        ``func(x, k)`` with ``x`` and ``k`` integer arrays of equal shape; must
        return the integrand of segment ``k`` at ``x``.
    lo, hi : array_like
        Segment endpoints, ``lo <= hi``.
    tol : float or array_like
        Absolute tolerance.  A scalar applies to the sum over all segments;
        an array gives every segment its own tolerance.

    Returns
    -------
    values, errors : ndarray
        Per-segment integrals and error estimates.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("lo and hi must be 1-D arrays of equal length")
    if np.any(hi < lo):
        raise ValueError("segments must satisfy lo <= hi")
    nseg = lo.size
    values = np.zeros(nseg)
    errors = np.zeros(nseg)
    widths = hi - lo
    total = widths.sum()
    if total == 0.0:
        return values, errors
    if np.ndim(tol) == 0:
        density = np.full(nseg, tol / total)
    else:
        tol = np.broadcast_to(np.asarray(tol, dtype=float), (nseg,))
        with np.errstate(divide="ignore", invalid="ignore"):
            density = np.where(widths > 0, tol / widths, np.inf)
    # smallest panel worth splitting, relative to the largest coordinate involved
    scale = max(np.max(np.abs(lo)), np.max(np.abs(hi)), total)
    min_width = 64 * np.finfo(float).eps * scale

    with np.errstate(invalid="ignore", over="ignore"):
        return _adapt(func, lo, hi, widths, density, values, errors, order, min_width,
                      max_iter, max_panels)


def _adapt(func, lo, hi, widths, density, values, errors, order, min_width, max_iter, max_panels):
    xg, wg = _gauss_legendre(order)
    keep = widths > 0
    a, b, seg = lo[keep], hi[keep], np.flatnonzero(keep)
    coarse = None
    for _ in range(max_iter):
        if a.size == 0:
            return values, errors
        if a.size > max_panels:
            raise QuadratureError("panel budget exhausted", float(errors.sum()))
        mid = 0.5 * (a + b)
        quarter = 0.25 * (b - a)
        if coarse is None:
            half = 0.5 * (b - a)
            xs = np.concatenate([(mid[:, None] + half[:, None] * xg),
                                 (0.5 * (a + mid))[:, None] + quarter[:, None] * xg,
                                 (0.5 * (mid + b))[:, None] + quarter[:, None] * xg], axis=1)
            ks = np.broadcast_to(seg[:, None], xs.shape)
            fx = np.asarray(func(xs.ravel(), ks.ravel()), dtype=float).reshape(xs.shape)
            coarse = half * (fx[:, :order] @ wg)
            left = quarter * (fx[:, order:2 * order] @ wg)
            right = quarter * (fx[:, 2 * order:] @ wg)
        else:
            xs = np.concatenate([(0.5 * (a + mid))[:, None] + quarter[:, None] * xg,
                                 (0.5 * (mid + b))[:, None] + quarter[:, None] * xg], axis=1)
            ks = np.broadcast_to(seg[:, None], xs.shape)
            fx = np.asarray(func(xs.ravel(), ks.ravel()), dtype=float).reshape(xs.shape)
            left = quarter * (fx[:, :order] @ wg)
            right = quarter * (fx[:, order:] @ wg)
        fine = left + right
        err = np.abs(fine - coarse)
        if not np.all(np.isfinite(fine)):
            raise QuadratureError("integrand returned non-finite values", float("inf"))
        budget = density[seg] * (b - a)
        done = (err <= budget) | (err <= 1e-14 * np.abs(fine)) | ((b - a) <= min_width)
        np.add.at(values, seg[done], fine[done])
        np.add.at(errors, seg[done], err[done])
        todo = ~done
        a, b, seg, mid = a[todo], b[todo], seg[todo], mid[todo]
        coarse = np.concatenate([left[todo], right[todo]])
        a, b, seg = np.concatenate([a, mid]), np.concatenate([mid, b]), np.concatenate([seg, seg])
    residual = float(errors.sum() + np.abs(coarse).sum())
    raise QuadratureError("maximum subdivision depth reached", residual)


def _edges(a, b, points=(), max_width=None):
    pts = [p for p in points if a < p < b]
    edges = np.unique(np.concatenate([[a, b], np.asarray(pts, dtype=float)]))
    if max_width is not None and max_width > 0:
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, int(np.ceil((hi - lo) / max_width)))
            pieces.append(np.linspace(lo, hi, n + 1)[:-1])
        edges = np.concatenate(pieces + [[b]])
    return edges


def integrate(func, a, b, points=(), tol=DEFAULT_TOL, order=DEFAULT_ORDER, max_width=None):
    """Integrate a vectorized ``func(x)`` over ``[a, b]``.

    ``points`` are forced panel boundaries (kinks, steep layers); ``max_width``
    caps the initial panel width.  Returns ``(value, error_estimate)``.
    """
    if b < a:
        v, e = integrate(func, b, a, points, tol, order, max_width)
        return -v, e
    if b == a:
        return 0.0, 0.0
    edges = _edges(a, b, points, max_width)
    vals, errs = integrate_segments(lambda x, k: func(x), edges[:-1], edges[1:], tol, order)
    return float(vals.sum()), float(errs.sum())


def cumulative(func, x, lower, points=(), tol=DEFAULT_TOL, order=DEFAULT_ORDER):
    """Evaluate ``F(x) = integral of func from lower to x`` at every ``x``.

    The values of ``x`` may be unsorted; anything below ``lower`` gives 0.
    Returns ``(F, error_estimate)``.
    """
    x = np.asarray(x, dtype=float)
    flat = np.maximum(x.ravel(), lower)
    top = flat.max(initial=lower)
    edges = np.unique(np.concatenate([[lower], flat,
                                      [p for p in points if lower < p < top]]))
    if edges.size == 1:
        return np.zeros_like(x), 0.0
    vals, errs = integrate_segments(lambda t, k: func(t), edges[:-1], edges[1:], tol, order)
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    idx = np.searchsorted(edges, flat)
    return cum[idx].reshape(x.shape), float(errs.sum())
