"""Command-line experiment runner.

Every command writes CSV: a ``#`` comment line with the tool version and the
full configuration, a header row, then data rows.  Output depends only on the
configuration, so re-running a command reproduces the file byte for byte.

Exit status: 0 on success, 2 on a usage or parameter error, 3 when a
numerical integration fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .baselines import (erasure_rate, gaussian_erasure_capacity, public_discussion_capacity,
                        rough_shaping_rate, scaling_check, scaling_converged)
from .entropy import MODES, QuadratureError, bob_mutual_info, eve_mutual_info
from .game import alice_maximin, default_g_grid, default_p_grid, eve_best_response, secrecy_rate
from .montecarlo import SIM_MODES, branch_estimates, key_overhead, simulate, write_csv
from .quantizer import QuantizerSpec
from .signal_model import ChannelParams, PowerModulation, snr_to_noise_var

EXIT_USAGE = 2
EXIT_CONVERGENCE = 3
MIN_MC_SYMBOLS = 10**4
AXIS_NAMES = ("r", "snr_bob", "snr_eve", "p", "g")
LN2 = math.log(2.0)


class UsageError(Exception):
    pass


def _snr(text):
    v = float(text)
    if math.isnan(v):
        raise ValueError("SNR must be a number or inf")
    return v


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(t) for t in str(text).replace(",", " ").split()]


# name -> (parser, default, help)
OPTIONS = {
    "p": (float, 0.45, "probability of the large gain level"),
    "r": (float, 1000.0, "gain ratio a1/a2"),
    "g": (float, None, "Eve's inverse gain; omitted means her best response"),
    "power": (float, 1.0, "codeword power P"),
    "snr_bob": (_snr, None, "Bob's SNR in dB (inf = noiseless)"),
    "snr_eve": (_snr, None, "Eve's SNR in dB (inf = noiseless)"),
    "sigma2_bob": (float, None, "Bob's noise variance (instead of --snr-bob)"),
    "sigma2_eve": (float, None, "Eve's noise variance (instead of --snr-eve)"),
    "bob_bits": (int, 10, "Bob's converter resolution"),
    "eve_bits": (int, 10, "Eve's converter resolution"),
    "range_l": (float, 2.5, "converter dynamic range l (both receivers)"),
    "mode": (str, "paper", "entropy evaluation mode"),
    "overflow_info": (_bool, False, "count the information in the overflow pattern"),
    "log_base": (str, "nats", "unit of information columns"),
    "p_count": (int, 41, "number of p grid points"),
    "p_min": (float, 0.025, "smallest p on the grid"),
    "p_max": (float, 0.975, "largest p on the grid"),
    "g_count": (int, 121, "number of log-spaced g grid points over [a2/10, 10 a1]"),
    "epsilon": (float, 0.5, "erasure probability for the erasure baselines"),
    "exponent": (float, 0.5, "Eve's gain scaling g = r**(-exponent)"),
    "r_values": (_floats, [1e2, 1e3, 1e4], "list of r values"),
    "seed": (int, 0, "Monte Carlo seed (0 <= seed < 2**256)"),
    "n_symbols": (int, 10**6, "Monte Carlo symbols"),
    "sim_mode": (str, "additive", "Monte Carlo converter: additive noise or exact quantizer"),
    "workers": (int, 1, "worker processes for grids"),
}
CHOICES = {"mode": MODES, "log_base": ("nats", "bits"), "sim_mode": SIM_MODES}

# columns holding information quantities (converted by --log-base)
INFO_COLUMNS = {
    "rs", "rs_raw", "i_bob_a1", "i_eve_a1", "i_bob_a2", "i_eve_a2", "i_bob", "quad_error",
    "mc", "se", "quadrature", "delta", "public_discussion", "gaussian_erasure", "erasure_rate",
    "shaping_rate", "i_eve_a1_scaled", "i_eve_a2_scaled",
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_config_file(path):
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in OPTIONS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _convert_option(key, value):
    if value is None or not isinstance(value, str):
        return value
    parser = OPTIONS[key][0]
    try:
        v = parser(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r} ({exc})") from None
    if key in CHOICES and v not in CHOICES[key]:
        raise UsageError(f"{key} must be one of {CHOICES[key]}, got {v!r}")
    return v


def resolve_config(args):
    """Defaults, then the config file, then explicit flags."""
    cfg = {k: spec[1] for k, spec in OPTIONS.items()}
    explicit = set()
    if args.config:
        try:
            for k, v in read_config_file(args.config).items():
                cfg[k] = _convert_option(k, v)
                explicit.add(k)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    for k in OPTIONS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _convert_option(k, v)
            explicit.add(k)
    for side in ("bob", "eve"):
        if cfg[f"snr_{side}"] is not None and cfg[f"sigma2_{side}"] is not None:
            raise UsageError(f"--snr-{side} and --sigma2-{side} are mutually exclusive")
    return cfg, explicit


def _params(cfg):
    def var(side):
        if cfg[f"sigma2_{side}"] is not None:
            return cfg[f"sigma2_{side}"]
        snr = cfg[f"snr_{side}"]
        return 0.0 if snr is None else snr_to_noise_var(snr, cfg["power"])
    return ChannelParams(cfg["power"], var("bob"), var("eve"))


def _quantizers(cfg):
    return QuantizerSpec(cfg["bob_bits"], cfg["range_l"]), QuantizerSpec(cfg["eve_bits"], cfg["range_l"])


def _kw(cfg):
    return dict(mode=cfg["mode"], overflow_info=cfg["overflow_info"])


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def format_value(v):
    """Deterministic CSV text: scientific notation below 1e-4 in magnitude."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        return "0"
    if abs(v) < 1e-4:
        return f"{v:.9e}"
    return f"{v:.10g}"


def _config_comment(command, cfg):
    items = " ".join(f"{k}={_config_text(v)}" for k, v in sorted(cfg.items()))
    return f"# wiretap-adc {__version__} command={command} {items}"


def _config_text(v):
    if isinstance(v, list):
        return ",".join(format_value(x) for x in v)
    return "none" if v is None else format_value(v)


def render_csv(command, cfg, rows, columns=None):
    """CSV text for ``rows`` (dicts sharing the same keys)."""
    unit = cfg["log_base"]
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    buf.write(_config_comment(command, cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            v = row[c]
            if c in INFO_COLUMNS and unit == "bits" and not isinstance(v, str):
                v = float(v) / LN2
            out.append(format_value(v))
        w.writerow(out)
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


GNUPLOT_TEMPLATE = """# gnuplot script for {csv}
set datafile separator ','
set key autotitle columnhead
set xlabel '{x}'
set ylabel '{y}'
set grid
{logscale}plot '{csv}' using '{x}':'{y}' with linespoints
"""


def write_plot_script(path, csv_path, x, y, logx=False):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GNUPLOT_TEMPLATE.format(csv=csv_path, x=x, y=y,
                                         logscale="set logscale x\n" if logx else ""))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _rate_row(cfg, p, g, rep):
    b1, b2 = rep.per_branch["a1"], rep.per_branch["a2"]
    d = rep.diagnostics
    return {
        "p": p, "r": cfg["r"], "g": g,
        "a1": b1.gain, "a2": b2.gain,
        "i_bob_a1": b1.i_bob, "i_eve_a1": b1.i_eve, "i_bob_a2": b2.i_bob, "i_eve_a2": b2.i_eve,
        "rs": rep.rs, "rs_raw": rep.rs_raw,
        "bob_overflow_a1": d["bob_overflow"]["a1"], "bob_overflow_a2": d["bob_overflow"]["a2"],
        "eve_overflow_a1": d["eve_overflow"]["a1"], "eve_overflow_a2": d["eve_overflow"]["a2"],
        "quad_error": d["quad_error"],
    }


def evaluate_point(cfg, use_p, use_g):
    """Rate row at one configuration: fixed (p, g), Eve's best response, or the maximin."""
    params = _params(cfg)
    qb, qe = _quantizers(cfg)
    kw = _kw(cfg)
    if use_p:
        p = cfg["p"]
        if use_g:
            g = cfg["g"]
        else:
            grid = default_g_grid(PowerModulation(p, cfg["r"]), cfg["g_count"])
            g, _ = eve_best_response(p, cfg["r"], params, qb, qe, g_grid=grid, **kw)
        rep = secrecy_rate(p, g, cfg["r"], params, qb, qe, **kw)
    else:
        rep = _maximin(cfg, params, qb, qe)
        p, g = rep.p_star, rep.g_star
    return _rate_row(cfg, p, g, rep)


def _p_grid(cfg):
    if not (0 < cfg["p_min"] <= cfg["p_max"] < 1) or cfg["p_count"] < 1:
        raise UsageError("p grid must satisfy 0 < p_min <= p_max < 1 and p_count >= 1")
    return default_p_grid(cfg["p_count"], cfg["p_min"], cfg["p_max"])


def _g_grid_for(cfg):
    if cfg["g_count"] < 2:
        raise UsageError("g_count must be at least 2")
    if cfg["g"] is not None:
        return np.array([cfg["g"]])
    return None


def _maximin(cfg, params, qb, qe, surface=False):
    ps = _p_grid(cfg)
    fixed = _g_grid_for(cfg)
    if fixed is None and cfg["g_count"] != 121:
        # per-p grids with a non-default count
        reps = []
        best = None
        for p in ps:
            grid = default_g_grid(PowerModulation(float(p), cfg["r"]), cfg["g_count"])
            rep = alice_maximin(cfg["r"], params, qb, qe, p_grid=[p], g_grid=grid,
                                surface=surface, **_kw(cfg))
            reps.append(rep)
            if best is None or rep.rs_raw > best.rs_raw:
                best = rep
        if surface:
            best.surface = np.concatenate([r.surface for r in reps])
        return best
    return alice_maximin(cfg["r"], params, qb, qe, p_grid=ps, g_grid=fixed, surface=surface,
                         workers=cfg["workers"], **_kw(cfg))


def cmd_rate(cfg, explicit, args):
    row = evaluate_point(cfg, True, cfg["g"] is not None)
    return [row]


def cmd_maximin(cfg, explicit, args):
    params = _params(cfg)
    qb, qe = _quantizers(cfg)
    rep = _maximin(cfg, params, qb, qe, surface=bool(args.surface))
    if args.surface:
        rows = [{"p": p, "g": g, "rs_raw": v} for p, g, v in rep.surface]
        _emit(render_csv("maximin-surface", cfg, rows, ["p", "g", "rs_raw"]), args.surface)
    return [_rate_row(cfg, rep.p_star, rep.g_star, rep)]


def parse_axis(text):
    """``name:start:stop:count[:lin|log]``."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise UsageError(f"axis must be name:start:stop:count[:lin|log], got {text!r}")
    name = parts[0].replace("-", "_")
    if name not in AXIS_NAMES:
        raise UsageError(f"unknown axis {name!r}; choose from {AXIS_NAMES}")
    try:
        start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise UsageError(f"bad axis numbers in {text!r}") from None
    spacing = parts[4] if len(parts) == 5 else "lin"
    if count < 1 or spacing not in ("lin", "log"):
        raise UsageError(f"bad axis count or spacing in {text!r}")
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise UsageError("log axes need positive endpoints")
        values = np.geomspace(start, stop, count)
    else:
        values = np.linspace(start, stop, count)
    return name, [float(v) for v in values]


def _axes(args, allow_none=False):
    axes = [parse_axis(a) for a in (args.axis or [])]
    if len(axes) > 2:
        raise UsageError("at most two sweep axes are allowed")
    if not axes and not allow_none:
        raise UsageError("give one or two --axis options")
    if len({n for n, _ in axes}) != len(axes):
        raise UsageError("sweep axes must be distinct")
    return axes


def _grid_configs(cfg, axes):
    names = [n for n, _ in axes]
    for combo in itertools.product(*[v for _, v in axes]):
        c = dict(cfg)
        for n, v in zip(names, combo):
            if n in ("snr_bob", "snr_eve"):
                c["sigma2_" + n[4:]] = None
            c[n] = v
        yield dict(zip(names, combo)), c


def _sweep_task(item):
    echo, c, use_p, use_g = item
    row = evaluate_point(c, use_p, use_g)
    return {**{f"axis_{k}": v for k, v in echo.items()}, **row}


def cmd_sweep(cfg, explicit, args):
    axes = _axes(args)
    names = {n for n, _ in axes}
    use_g = "g" in names or "g" in explicit
    use_p = "p" in names or "p" in explicit or use_g
    items = [(echo, c, use_p, use_g) for echo, c in _grid_configs(cfg, axes)]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            return list(pool.map(_sweep_task, items))
    return [_sweep_task(it) for it in items]


def cmd_baseline(cfg, explicit, args):
    axes = _axes(args, allow_none=True)
    rows = []
    for echo, c in _grid_configs(cfg, axes):
        params = _params(c)
        qb, _ = _quantizers(c)
        i_bob = bob_mutual_info(1.0, params, qb, **_kw(c)).value
        row = {f"axis_{k}": v for k, v in echo.items()}
        row.update({
            "sigma2_bob": params.sigma2_bob, "sigma2_eve": params.sigma2_eve,
            "epsilon": c["epsilon"], "i_bob": i_bob,
            "public_discussion": public_discussion_capacity(params),
            "gaussian_erasure": gaussian_erasure_capacity(c["epsilon"], qb, params.power),
            "erasure_rate": erasure_rate(c["epsilon"], max(i_bob, 0.0)),
        })
        rows.append(row)
    return rows


def cmd_mc(cfg, explicit, args):
    n = cfg["n_symbols"]
    if n < MIN_MC_SYMBOLS:
        raise UsageError(f"n_symbols must be at least {MIN_MC_SYMBOLS}")
    params = _params(cfg)
    qb, qe = _quantizers(cfg)
    p, r = cfg["p"], cfg["r"]
    g = cfg["g"]
    if g is None:
        grid = default_g_grid(PowerModulation(p, r), cfg["g_count"])
        g, _ = eve_best_response(p, r, params, qb, qe, g_grid=grid, **_kw(cfg))
    batch = simulate(n, cfg["seed"], p, r, g, params, qb, qe, mode=cfg["sim_mode"])
    if args.batch_csv:
        with open(args.batch_csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(batch, fh)
    est = branch_estimates(batch, overflow_info=cfg["overflow_info"])
    mod = PowerModulation(p, r)
    # the simulated model's true densities are the exact-mode ones
    kw = dict(mode="exact", overflow_info=cfg["overflow_info"])
    rows = []
    for name, level in (("a1", mod.a1), ("a2", mod.a2)):
        quad = {"bob": bob_mutual_info(level, params, qb, **kw).value,
                "eve": eve_mutual_info(level, g, params, qe, **kw).value}
        for side in ("bob", "eve"):
            e = est[name][side]
            rows.append({
                "branch": name, "receiver": side, "gain": level, "g": g,
                "weight": est[name]["weight"], "n": e.n, "mc": e.value, "se": e.se,
                "quadrature": quad[side], "delta": e.value - quad[side],
                "agree": e.agrees(quad[side]),
            })
    return rows


def cmd_scaling_check(cfg, explicit, args):
    params = _params(cfg)
    _, qe = _quantizers(cfg)
    table = scaling_check(cfg["exponent"], cfg["r_values"], cfg["p"], params, qe, mode=cfg["mode"])
    converged = scaling_converged(table)
    return [{"r": t.r, "g": t.g, "i_eve_a1_scaled": t.i_eve_a1, "i_eve_a2_scaled": t.i_eve_a2,
             "converged": converged} for t in table]


def cmd_shaping(cfg, explicit, args):
    axes = _axes(args, allow_none=True)
    rows = []
    if axes:
        for echo, c in _grid_configs(cfg, axes):
            rows.append({"p": c["p"], "r": c["r"], "shaping_rate": rough_shaping_rate(c["p"], c["r"])})
    else:
        for r in cfg["r_values"]:
            rows.append({"p": cfg["p"], "r": r, "shaping_rate": rough_shaping_rate(cfg["p"], r)})
    for row in rows:
        row["ctr_rekey_overhead"] = float(key_overhead("ctr_rekey"))
        row["trivium_like_overhead"] = float(key_overhead("trivium_like"))
    return rows


COMMANDS = {
    "rate": (cmd_rate, "secrecy rate at one point (Eve's best response unless --g)"),
    "maximin": (cmd_maximin, "solve the max-min game over p and g"),
    "sweep": (cmd_sweep, "rates over one or two parameter axes"),
    "baseline": (cmd_baseline, "public-discussion and erasure baselines"),
    "mc": (cmd_mc, "Monte Carlo plug-in estimates next to quadrature values"),
    "scaling-check": (cmd_scaling_check, "Eve's information for g = r**(-exponent)"),
    "shaping": (cmd_shaping, "high-resolution shaping rate and key overhead"),
}

PLOT_AXES = {
    "rate": ("p", "rs"), "maximin": ("p", "rs"), "baseline": (None, "public_discussion"),
    "mc": ("gain", "mc"), "scaling-check": ("r", "i_eve_a1_scaled"), "shaping": ("r", "shaping_rate"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    for key, (_, default, help_text) in OPTIONS.items():
        flag = "--" + key.replace("_", "-")
        shown = help_text if default is None else f"{help_text} (default: {default})"
        kwargs = dict(dest=key, default=None, help=shown)
        if key in CHOICES:
            kwargs["choices"] = CHOICES[key]
        common.add_argument(flag, **kwargs)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--plot", help="also write a gnuplot script for the CSV (needs --out)")

    parser = argparse.ArgumentParser(
        prog="wiretap-adc",
        description="Secrecy rates with keyed power modulation and clipping A/D converters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("sweep", "baseline", "shaping"):
            sp.add_argument("--axis", action="append",
                            help="name:start:stop:count[:lin|log], name in " + ", ".join(AXIS_NAMES))
        if name == "maximin":
            sp.add_argument("--surface", help="write the full (p, g, rs) grid to this CSV file")
        if name == "mc":
            sp.add_argument("--batch-csv", help="export every simulated symbol to this CSV file")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, explicit = resolve_config(args)
        func = COMMANDS[args.command][0]
        rows = func(cfg, explicit, args)
        if args.plot and not args.out:
            raise UsageError("--plot needs --out")
        _emit(render_csv(args.command, cfg, rows), args.out)
        if args.plot:
            x, y = PLOT_AXES.get(args.command, (None, "rs"))
            if x is None:
                x = next((c for c in rows[0] if c.startswith("axis_")), list(rows[0])[0])
            if args.command == "sweep":
                x = next(c for c in rows[0] if c.startswith("axis_"))
            write_plot_script(args.plot, args.out, x, y,
                              logx=x in ("r", "axis_r", "g", "axis_g", "gain"))
    except UsageError as exc:
        print(f"wiretap-adc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"wiretap-adc: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, TypeError) as exc:
        print(f"wiretap-adc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
