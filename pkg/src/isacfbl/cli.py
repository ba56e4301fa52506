"""Command-line front end: ``bounds``, ``region``, ``simulate`` and ``capcheck``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (``#`` starts a comment), then command-line flags.
Keys are the long flag names without the leading dashes.

Exit codes: 0 success/PASS, 1 usage or config error, 2 invariant violation
or FAIL, 3 infeasible codebook.
"""

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bounds import (
    BASELINES,
    CONVERSE_VARIANTS,
    CodeParams,
    SystemParams,
    ZeroRateRegime,
    d_m,
    delta_budget,
    evaluate_bounds,
    saturation_jump,
)
from .capgeom import angle_to_bias, bias_region_probability, cap_area_ratio, real_cap_fraction_mc
from .linksim import DECODER_MODES, InfeasibleCodebook, McConfig, run_campaign

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_INFEASIBLE = 3

BOUNDS_COLUMNS = (
    "N", "D", "epsilon", "D_m", "regime", "delta_WL", "phi_L", "gamma_L", "R_L",
    "r1", "r2", "r_eps", "gamma_U", "R_U_low", "R_U_high",
)
REGION_COLUMNS = ("N", "D", "D_m", "regime", "R_L", "jump")
SIMULATE_COLUMNS = (
    "N", "M", "delta_budget", "delta", "decoder", "h_true_mag", "h_true_phase", "trials",
    "seed", "errors", "eps_hat", "eps_se", "mse_hat", "mse_se", "prop1_bound", "margin",
    "eps_upper", "prop1_bound_upper",
)

DEFAULT_N_GRID = "log:10:1000:30"
DEFAULT_D_POINTS = 200


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# value parsing and formatting


def fmt(value):
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _positive_float(text):
    v = float(text)
    if not v > 0 or math.isinf(v):
        raise ValueError(f"expected a positive number, got {text!r}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or math.isinf(v):
        raise ValueError(f"expected a nonnegative number, got {text!r}")
    return v


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _seed(text):
    v = _int(text)
    if not 0 <= v < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {text!r}")
    return v


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return conv


def parse_grid(text, integer=False):
    """Parse ``a,b,c``, ``lin:start:stop:count`` or ``log:start:stop:count``.

    Integer grids from ``log:`` are rounded and de-duplicated.
    """
    text = text.strip()
    if text.startswith(("lin:", "log:")):
        kind, *parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like {kind}:start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), _int(parts[2])
        if count < 1:
            raise ValueError(f"grid {text!r} needs a positive count")
        if kind == "lin":
            values = np.linspace(start, stop, count)
        else:
            if not (start > 0 and stop > 0):
                raise ValueError(f"log grid {text!r} needs positive ends")
            values = np.geomspace(start, stop, count)
        values = [float(v) for v in values]
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    if integer:
        ints = []
        for v in values:
            iv = int(round(v))
            if not ints or iv != ints[-1]:
                ints.append(iv)
        values = ints
    if not values:
        raise ValueError("grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"grid {text!r} is not strictly increasing")
    return values


def format_grid(values):
    return ",".join(fmt(v) for v in values)


def _n_grid(text):
    values = parse_grid(text, integer=True)
    if values[0] < 1:
        raise ValueError("blocklengths must be >= 1")
    return values


def _d_grid(text):
    values = parse_grid(text)
    if values[0] < 0:
        raise ValueError("sensing requirements must be >= 0")
    return values


def _epsilon(text):
    v = float(text)
    if not 0.0 < v < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {text!r}")
    return v


def _phi(text):
    v = float(text)
    if not 0.0 < v <= math.pi:
        raise ValueError(f"phi must lie in (0, pi], got {text!r}")
    return v


# key -> (converter, formatter, default)
OPTIONS = {
    "rho": (_positive_float, fmt, 10.0),
    "sigma": (_nonneg_float, fmt, 1.0),
    "h-low": (_positive_float, fmt, 1.0),
    "h-high": (_positive_float, fmt, 1.5),
    "epsilon": (_epsilon, fmt, 1e-3),
    "seed": (_seed, fmt, 42),
    "out": (str, str, "-"),
    "n-grid": (_n_grid, format_grid, None),
    "d-grid": (_d_grid, format_grid, None),
    "baseline": (_choice(tuple(BASELINES)), str, "normal-approx"),
    "converse": (_choice(CONVERSE_VARIANTS), str, "factor2"),
    "jobs": (_int, fmt, 1),
    "n": (_int, fmt, 20),
    "m": (_int, fmt, 16),
    "d": (_positive_float, fmt, 0.02),
    "delta-budget": (float, fmt, None),
    "h-true-mag": (_positive_float, fmt, 1.2),
    "h-true-phase": (float, fmt, 0.0),
    "trials": (_int, fmt, 100_000),
    "decoder": (_choice(DECODER_MODES), str, "genie"),
    "phi": (_phi, fmt, math.pi / 2),
    "samples": (_int, fmt, 1_000_000),
    "max-attempts": (_int, fmt, 10_000_000),
}


def _normalize_key(key):
    return key.strip().lower().replace("_", "-")


def parse_config(text, source="<config>"):
    """Parse ``key = value`` lines into converted values, keyed by option name."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = _normalize_key(key)
        if key not in OPTIONS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        conv = OPTIONS[key][0]
        try:
            values[key] = conv(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: field {key!r}: {exc}") from None
    return values


def format_config(values):
    """Inverse of :func:`parse_config` (up to comments and spacing)."""
    lines = []
    for key in OPTIONS:
        if key in values and values[key] is not None:
            lines.append(f"{key} = {OPTIONS[key][1](values[key])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweep configuration


@dataclass(frozen=True)
class SweepConfig:
    sys: SystemParams
    epsilon: float
    n_grid: tuple
    d_grid: tuple
    baseline: str = "normal-approx"
    converse: str = "factor2"
    out: str = "-"
    seed: int = 42
    jobs: int = 1

    def __post_init__(self):
        for name, grid in (("n_grid", self.n_grid), ("d_grid", self.d_grid)):
            if not grid:
                raise ConfigError(f"{name} is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} is not strictly increasing")
        if self.sys.sigma_sq <= 0:
            raise ConfigError("sigma must be positive for bound evaluation")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError("epsilon must lie in (0, 1/2)")


def default_d_grid(sys_params, epsilon, n_grid):
    top = 1.5 * d_m(sys_params, CodeParams(min(n_grid), epsilon))
    return [float(v) for v in np.linspace(0.0, top, DEFAULT_D_POINTS)]


def _system(values):
    try:
        return SystemParams.from_sigma(
            values["rho"], values["sigma"], values["h-low"], values["h-high"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def sweep_config(values):
    sys_params = _system(values)
    n_grid = values["n-grid"] or _n_grid(DEFAULT_N_GRID)
    d_grid = values["d-grid"] or default_d_grid(sys_params, values["epsilon"], n_grid)
    return SweepConfig(
        sys=sys_params,
        epsilon=values["epsilon"],
        n_grid=tuple(n_grid),
        d_grid=tuple(d_grid),
        baseline=values["baseline"],
        converse=values["converse"],
        out=values["out"],
        seed=values["seed"],
        jobs=max(1, values["jobs"]),
    )


# ---------------------------------------------------------------------------
# row builders (module level so they can run in worker processes)


def _bounds_rows_for_n(cfg, N):
    code = CodeParams(N, cfg.epsilon)
    baseline = BASELINES[cfg.baseline]()
    rows = []
    for D in cfg.d_grid:
        rep = evaluate_bounds(cfg.sys, code, D, baseline, cfg.converse)
        if not rep.R_L <= rep.baseline_rate:
            raise CheckFailed(f"R_L={rep.R_L!r} exceeds the baseline at N={N}, D={D}")
        if not rep.R_U_low <= rep.R_U_high:
            raise CheckFailed(f"converse sandwich inverted at N={N}, D={D}")
        rows.append((
            N, D, cfg.epsilon, rep.D_m, rep.regime, rep.delta_WL, rep.phi_L, rep.gamma_L,
            rep.R_L, rep.r1, rep.r2, rep.r_eps, rep.gamma_U, rep.R_U_low, rep.R_U_high,
        ))
    return rows


def _region_rows_for_n(cfg, N):
    code = CodeParams(N, cfg.epsilon)
    baseline = BASELINES[cfg.baseline]()
    dm = d_m(cfg.sys, code)
    jump = saturation_jump(cfg.sys, code, baseline)
    rows = []
    for D in sorted(set(cfg.d_grid) | {dm}):
        rep = evaluate_bounds(cfg.sys, code, D, baseline, cfg.converse)
        if not rep.R_L <= rep.baseline_rate:
            raise CheckFailed(f"R_L={rep.R_L!r} exceeds the baseline at N={N}, D={D}")
        rows.append((N, D, dm, rep.regime, rep.R_L, jump if D == dm else 0.0))
    return rows


def _collect(builder, cfg):
    if cfg.jobs > 1 and len(cfg.n_grid) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(builder, [cfg] * len(cfg.n_grid), cfg.n_grid))
    else:
        chunks = [builder(cfg, N) for N in cfg.n_grid]
    return [row for chunk in chunks for row in chunk]


def bounds_table(cfg):
    return BOUNDS_COLUMNS, _collect(_bounds_rows_for_n, cfg)


def region_table(cfg):
    return REGION_COLUMNS, _collect(_region_rows_for_n, cfg)


def render_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bounds(values):
    cfg = sweep_config(values)
    _emit(render_csv(*bounds_table(cfg)), cfg.out)
    return EXIT_OK


def cmd_region(values):
    cfg = sweep_config(values)
    _emit(render_csv(*region_table(cfg)), cfg.out)
    return EXIT_OK


def simulate_config(values):
    sys_params = _system(values)
    N, M, trials = values["n"], values["m"], values["trials"]
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if N < 1 or M < 1:
        raise ConfigError(f"need N >= 1 and M >= 1, got N={N}, M={M}")
    budget = values["delta-budget"]
    if budget is None:
        if sys_params.sigma_sq == 0:
            budget = 2.0
        else:
            try:
                budget = delta_budget(sys_params, CodeParams(N, values["epsilon"]), values["d"])
            except ZeroRateRegime as exc:
                raise ConfigError(f"cannot derive a bias budget: {exc}") from None
            if budget <= 0.0:
                raise ConfigError("derived bias budget is zero")
    mag, phase = values["h-true-mag"], values["h-true-phase"]
    h_true = complex(mag * math.cos(phase), mag * math.sin(phase))
    try:
        return McConfig(
            sys=sys_params, N=N, M=M, delta_budget=budget, h_true=h_true, trials=trials,
            seed=values["seed"], decoder=values["decoder"], max_attempts=values["max-attempts"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(values):
    cfg = simulate_config(values)
    try:
        rep = run_campaign(cfg)
    except InfeasibleCodebook as exc:
        print(f"error: infeasible codebook (M={exc.M}, delta={exc.delta_budget}, N={exc.N}): {exc}",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    row = (
        rep.N, rep.M, rep.delta_budget, rep.delta, rep.decoder, values["h-true-mag"],
        values["h-true-phase"], rep.trials, rep.seed, rep.errors, rep.eps_hat, rep.eps_se,
        rep.mse_hat, rep.mse_se, rep.prop1_bound, rep.margin, rep.eps_upper,
        rep.prop1_bound_upper,
    )
    _emit(render_csv(SIMULATE_COLUMNS, [row]), values["out"])
    ok = rep.consistent(3.0)
    z = rep.margin / rep.mse_se if rep.mse_se > 0 else math.inf
    print(
        f"{'PASS' if ok else 'FAIL'}: mse_hat={fmt(rep.mse_hat)} prop1_bound={fmt(rep.prop1_bound)} "
        f"margin={fmt(rep.margin)} ({z:.2f} standard errors) eps_hat={fmt(rep.eps_hat)}",
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_CHECK


def capcheck_report(N, phi, samples, seed):
    """Compare the analytic cap share with a uniform-sphere Monte Carlo count."""
    analytic = cap_area_ratio(phi, N)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    frac, _ = real_cap_fraction_mc(N, phi, samples, rng)
    se = math.sqrt(analytic * (1.0 - analytic) / samples)
    ok = abs(frac - analytic) <= 3.0 * se
    bias_prob = bias_region_probability(angle_to_bias(phi), N)
    return {
        "N": N, "phi": phi, "samples": samples, "seed": seed, "analytic": analytic,
        "empirical": frac, "se": se, "pass": ok, "bias_region_probability": bias_prob,
    }


def cmd_capcheck(values):
    N, phi, samples = values["n"], values["phi"], values["samples"]
    if N < 1:
        raise ConfigError(f"N must be >= 1, got {N}")
    if samples < 10_000:
        raise ConfigError(f"samples must be >= 10000, got {samples}")
    rep = capcheck_report(N, phi, samples, values["seed"])
    lines = [
        f"N={N} phi={fmt(phi)} samples={samples} seed={values['seed']}",
        f"analytic cap_area_ratio = {fmt(rep['analytic'])}",
        f"empirical fraction      = {fmt(rep['empirical'])}",
        f"binomial standard error = {fmt(rep['se'])}",
        f"diagnostic: P(|1 - z| <= sin(phi/2)) for the complex bias predicate = "
        f"{fmt(rep['bias_region_probability'])}",
        "PASS" if rep["pass"] else "FAIL",
    ]
    _emit("\n".join(lines) + "\n", values["out"])
    return EXIT_OK if rep["pass"] else EXIT_CHECK


COMMANDS = {
    "bounds": (cmd_bounds, ("n-grid", "d-grid", "baseline", "converse", "jobs")),
    "region": (cmd_region, ("n-grid", "d-grid", "baseline", "converse", "jobs")),
    "simulate": (cmd_simulate, ("n", "m", "d", "delta-budget", "h-true-mag", "h-true-phase",
                                "trials", "decoder", "max-attempts")),
    "capcheck": (cmd_capcheck, ("n", "phi", "samples")),
}
SHARED = ("rho", "sigma", "h-low", "h-high", "epsilon", "seed", "out")

HELP = {
    "rho": "per-symbol power budget (linear)",
    "sigma": "noise standard deviation sigma (amplitude; squared internally)",
    "h-low": "lower channel gain |h|_L",
    "h-high": "upper channel gain |h|_U",
    "epsilon": "decoding-error probability in (0, 1/2)",
    "seed": "master RNG seed",
    "out": "output path, '-' for standard output",
    "config": "key = value settings file",
    "n-grid": f"blocklength grid: 'a,b,c', 'lin:a:b:k' or 'log:a:b:k' (default {DEFAULT_N_GRID})",
    "d-grid": "sensing-requirement grid (default: 200 points from 0 to 1.5 D_m(min N))",
    "baseline": "communication-only rate model",
    "converse": "converse rate scaling: factor2 = 2 log2(r1/r_eps), as-printed = log2(r1/r_eps)",
    "jobs": "worker processes for grid evaluation",
    "n": "blocklength N",
    "m": "codebook size M",
    "d": "sensing requirement used to derive the bias budget when --delta-budget is absent",
    "delta-budget": "maximal-bias budget in (0, 2]",
    "h-true-mag": "true channel magnitude",
    "h-true-phase": "true channel phase (radians)",
    "trials": "Monte Carlo trials",
    "decoder": "genie: decode with the true gain; midpoint: mid-interval magnitude",
    "phi": "cap angle in (0, pi]",
    "samples": "Monte Carlo samples (>= 10000)",
    "max-attempts": "candidate draws allowed while building the codebook",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="isacfbl", description="Finite-blocklength ISAC rate-error toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, keys) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help=HELP["config"])
        for key in SHARED + keys:
            conv = OPTIONS[key][0]
            default = OPTIONS[key][2]
            shown = "" if default is None else f" (default {OPTIONS[key][1](default)})"
            p.add_argument(f"--{key}", type=conv, default=None, help=HELP[key] + shown)
    return parser


def resolve(args):
    """Merge defaults, the config file and explicit flags."""
    _, keys = COMMANDS[args.command]
    values = {key: OPTIONS[key][2] for key in SHARED + keys}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        file_values = parse_config(text, args.config)
        unused = set(file_values) - set(values)
        if unused:
            raise ConfigError(
                f"{args.config}: keys not valid for '{args.command}': {', '.join(sorted(unused))}"
            )
        values.update(file_values)
    for key in SHARED + keys:
        v = getattr(args, key.replace("-", "_"))
        if v is not None:
            values[key] = v
    return values


def main(argv=None):
    parser = build_parser()
    # converter ValueErrors surface as usage errors (exit 1) through _Parser.error
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    func, _ = COMMANDS[args.command]
    try:
        return func(resolve(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckFailed as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
