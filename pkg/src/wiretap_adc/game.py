"""Average secrecy rate and the Alice-versus-Eve max-min game.

Alice picks the probability ``p`` of the large gain (``r`` is fixed); Eve, who
knows ``p``, ``r`` and both converters, picks her inverse gain ``g`` to
minimize

    R_s = p [I_Y(a1) - I_Z(a1, g)] + (1 - p) [I_Y(a2) - I_Z(a2, g)].

Eve only needs point masses (a mixture over ``g`` averages ``I_Z``, which can
never beat its best atom), but :func:`secrecy_rate` accepts an
:class:`EveStrategy` so that this can be checked.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .entropy import DEFAULT_TOL, MiResult, OverflowEvents, bob_mutual_info, eve_mutual_info
from .quantizer import QuantizerSpec
from .signal_model import ChannelParams, EveStrategy, PowerModulation

P_GRID_POINTS = 41
P_GRID_RANGE = (0.025, 0.975)
G_GRID_POINTS = 121
# Eve's grid spans [a2 / G_GRID_MARGIN, a1 * G_GRID_MARGIN]
G_GRID_MARGIN = 10.0
G_REL_TOL = 1e-4

__all__ = [
    "BranchInfo", "RateReport", "default_p_grid", "default_g_grid", "secrecy_rate",
    "eve_best_response", "alice_maximin",
]


@dataclass(frozen=True)
class BranchInfo:
    """Bob's and Eve's information for one gain level."""

    gain: float
    weight: float
    i_bob: float
    i_eve: float
    bob_events: OverflowEvents
    eve_events: tuple[OverflowEvents, ...]
    quad_error: float

    @property
    def difference(self) -> float:
        return self.i_bob - self.i_eve


@dataclass
class RateReport:
    """Secrecy rate at one operating point, optionally with the searched surface.

    ``rs`` is floored at zero; ``rs_raw`` keeps the signed expectation.
    ``surface`` rows are ``(p, g, rs_raw)``.
    """

    rs: float
    rs_raw: float
    p_star: float
    g_star: float
    r: float
    per_branch: dict[str, BranchInfo]
    surface: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def recomputed(self) -> float:
        """The expectation rebuilt from ``per_branch``."""
        return math.fsum(b.weight * b.difference for b in self.per_branch.values())


def default_p_grid(n=P_GRID_POINTS, lo=P_GRID_RANGE[0], hi=P_GRID_RANGE[1]):
    return np.linspace(lo, hi, n)


def default_g_grid(mod: PowerModulation, n=G_GRID_POINTS, margin=G_GRID_MARGIN):
    """Log-spaced gains over ``[a2 / margin, a1 * margin]``."""
    return np.geomspace(mod.a2 / margin, mod.a1 * margin, n)


def _as_strategy(g) -> EveStrategy:
    return g if isinstance(g, EveStrategy) else EveStrategy.point(float(g))


def _branch(a, weight, strategy, params, q_bob, q_eve, kw) -> BranchInfo:
    bob: MiResult = bob_mutual_info(a, params, q_bob, **kw)
    eves = [eve_mutual_info(a, g, params, q_eve, **kw) for g in strategy.gains]
    i_eve = math.fsum(w * e.value for w, e in zip(strategy.weights, eves))
    err = bob.quad_error + max(e.quad_error for e in eves)
    return BranchInfo(a, weight, bob.value, i_eve, bob.events,
                      tuple(e.events for e in eves), err)


def secrecy_rate(p, g, r, params: ChannelParams, q_bob: QuantizerSpec, q_eve: QuantizerSpec,
                 mode="paper", overflow_info=False, tol=DEFAULT_TOL) -> RateReport:
    """Average secrecy rate for Alice's ``(p, r)`` against Eve's gain ``g``.

    ``g`` is a positive number or an :class:`EveStrategy`; for a mixture Eve's
    information is the weighted average over its atoms.
    """
    mod = PowerModulation(p, r)
    strategy = _as_strategy(g)
    kw = dict(mode=mode, overflow_info=overflow_info, tol=tol)
    branches = {
        "a1": _branch(mod.a1, p, strategy, params, q_bob, q_eve, kw),
        "a2": _branch(mod.a2, 1.0 - p, strategy, params, q_bob, q_eve, kw),
    }
    raw = math.fsum(b.weight * b.difference for b in branches.values())
    g_report = strategy.gains[0] if strategy.is_point_mass else float("nan")
    diag = {
        "quad_error": sum(b.quad_error for b in branches.values()),
        "bob_overflow": {k: 1.0 - b.bob_events.p_in for k, b in branches.items()},
        "eve_overflow": {k: 1.0 - math.fsum(w * e.p_in for w, e in zip(strategy.weights, b.eve_events))
                         for k, b in branches.items()},
        "mode": mode,
    }
    return RateReport(max(raw, 0.0), raw, p, g_report, r, branches, None, diag)


def _eve_leak(p, mod, g, params, q_eve, kw):
    return (p * eve_mutual_info(mod.a1, g, params, q_eve, **kw).value
            + (1.0 - p) * eve_mutual_info(mod.a2, g, params, q_eve, **kw).value)


def _best_response(p, r, params, q_bob, q_eve, g_grid, refine, kw):
    mod = PowerModulation(p, r)
    grid = default_g_grid(mod) if g_grid is None else np.asarray(g_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("g_grid must not be empty")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("g_grid must contain positive finite gains")
    grid = np.sort(grid)
    i_bob = (p * bob_mutual_info(mod.a1, params, q_bob, **kw).value
             + (1.0 - p) * bob_mutual_info(mod.a2, params, q_bob, **kw).value)
    leak = np.array([_eve_leak(p, mod, g, params, q_eve, kw) for g in grid])
    rs = i_bob - leak
    k = int(np.argmin(rs))  # first minimum, i.e. the smallest g on ties
    g_star, rs_min = float(grid[k]), float(rs[k])
    if refine and 0 < k < grid.size - 1 and rs[k - 1] > rs[k] < rs[k + 1]:
        res = optimize.minimize_scalar(lambda g: i_bob - _eve_leak(p, mod, g, params, q_eve, kw),
                                       bracket=(grid[k - 1], grid[k], grid[k + 1]),
                                       method="golden", tol=G_REL_TOL)
        if res.fun < rs_min:
            g_star, rs_min = float(res.x), float(res.fun)
    return g_star, rs_min, grid, rs


def eve_best_response(p, r, params: ChannelParams, q_bob: QuantizerSpec, q_eve: QuantizerSpec,
                      g_grid=None, mode="paper", overflow_info=False, tol=DEFAULT_TOL,
                      refine=True) -> tuple[float, float]:
    """Eve's minimizing point-mass gain and the resulting (unclamped) rate.

    The grid defaults to 121 log-spaced gains over ``[a2/10, 10 a1]``.  The
    best grid point is refined by golden-section search between its
    neighbours, to ``1e-4`` relative in ``g``.
    """
    kw = dict(mode=mode, overflow_info=overflow_info, tol=tol)
    g_star, rs_min, _, _ = _best_response(p, r, params, q_bob, q_eve, g_grid, refine, kw)
    return g_star, rs_min


def _best_response_task(args):
    p, r, params, q_bob, q_eve, g_grid, refine, kw = args
    return _best_response(p, r, params, q_bob, q_eve, g_grid, refine, kw)


def alice_maximin(r, params: ChannelParams, q_bob: QuantizerSpec, q_eve: QuantizerSpec,
                  p_grid=None, g_grid=None, mode="paper", overflow_info=False,
                  tol=DEFAULT_TOL, surface=False, refine=True, workers=1) -> RateReport:
    """Maximize Eve's best-response rate over ``p_grid``.

    Ties go to the smallest ``p``.  ``workers > 1`` evaluates the rows of the
    grid in a process pool; the result does not depend on it.
    """
    ps = default_p_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if ps.size == 0:
        raise ValueError("p_grid must not be empty")
    if np.any((ps <= 0) | (ps >= 1)):
        raise ValueError("p_grid must lie inside (0, 1)")
    ps = np.sort(ps)
    kw = dict(mode=mode, overflow_info=overflow_info, tol=tol)
    tasks = [(float(p), r, params, q_bob, q_eve, g_grid, refine, kw) for p in ps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_best_response_task, tasks))
    else:
        rows = [_best_response_task(t) for t in tasks]

    best = np.array([row[1] for row in rows])
    k = int(np.argmax(best))
    p_star, (g_star, rs_min, _, _) = float(ps[k]), rows[k]
    report = secrecy_rate(p_star, g_star, r, params, q_bob, q_eve, **kw)
    report.diagnostics["best_response"] = np.column_stack(
        [ps, [row[0] for row in rows], best])
    if surface:
        report.surface = np.concatenate(
            [np.column_stack([np.full(row[2].size, p), row[2], row[3]]) for p, row in zip(ps, rows)])
    return report
