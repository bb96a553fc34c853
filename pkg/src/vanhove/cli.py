"""Command-line front end.

Exit codes: 0 success, 1 computation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import bounds, diagrammatics, effective, ensemble, output
from .config import ConfigError, resolve
from .model import SpectrumConfig
from .propagator import QuadratureError

log = logging.getLogger("vanhove")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


def _spectrum(config: Dict[str, Any], n_levels=None, coupling=None) -> SpectrumConfig:
    model = config["model"]
    return SpectrumConfig(
        n_levels=int(n_levels if n_levels is not None else model["n_levels"]),
        coupling=float(coupling if coupling is not None else model["coupling"]),
        edge_cutoff=float(model["edge_cutoff"]),
        seed=int(config["ensemble"]["master_seed"]),
    )


def _scaled_grid(section: Dict[str, Any]) -> np.ndarray:
    return np.linspace(0.0, float(section["scaled_max"]), int(section["points"]))


def _initial(config) -> ensemble.InitialState:
    init = config["initial"]
    return ensemble.InitialState(int(init["site"]), tuple(float(x) for x in init["band"]))


def simulate_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    spec = _spectrum(config)
    T = _scaled_grid(config["time"])
    ens = config["ensemble"]
    stats = ensemble.run_ensemble(
        spec,
        _initial(config),
        samples=int(ens["samples"]),
        master_seed=int(ens["master_seed"]),
        scaled_times=T,
        threads=int(ens["threads"]),
    )
    mean, err = stats.trace_mean, stats.trace_stderr
    trace_csv = output.write_csv(
        out / "trace.csv",
        output.TRACE_COLUMNS,
        zip(mean.times, mean.scaled_times, mean.p1, err.p1, mean.p2, err.p2, mean.norm),
    )
    p0 = (1.0, 0.0) if config["initial"]["site"] == 1 else (0.0, 1.0)
    cf1, cf2 = effective.closed_form(mean.scaled_times, p0)
    svg = output.line_chart_svg(
        out / "trace.svg",
        [
            ("P1 ensemble", mean.scaled_times, mean.p1, "#1f77b4", False),
            ("P2 ensemble", mean.scaled_times, mean.p2, "#d62728", False),
            ("P1 closed form", mean.scaled_times, cf1, "#1f77b4", True),
            ("P2 closed form", mean.scaled_times, cf2, "#d62728", True),
        ],
        "T = lambda^2 t",
        "site probability",
        f"N={spec.n_levels}, lambda={spec.coupling}, S={stats.n_samples}",
    )
    summary = {"n_samples": stats.n_samples}
    try:
        fit = ensemble.fit_rate(stats, tuple(config["fit"]["window"]))
        summary.update(rate_summary(fit))
    except ValueError as exc:
        summary["fit_error"] = str(exc)
    summary_json = output.write_json(out / "summary.json", summary)
    return [trace_csv, svg, summary_json]


def rate_summary(fit: ensemble.RateFit) -> Dict[str, Any]:
    """Fit diagnostics plus z-scores against imbalance rates 4 pi and 8 pi."""
    se = fit.rate_stderr
    out = {
        "rate": fit.rate,
        "rate_stderr": se,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "fit_window": list(fit.fit_window),
        "n_points": fit.n_points,
    }
    for name, ref in (("4pi", 4 * math.pi), ("8pi", 8 * math.pi)):
        z = (fit.rate - ref) / se if se else math.inf
        out[f"z_{name}"] = z
        out[f"excluded_{name}_3sigma"] = bool(abs(z) > 3)
    return out


def sweep_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    ens = config["ensemble"]
    rows = ensemble.vanhove_sweep(
        _spectrum(config),
        [float(x) for x in config["sweep"]["couplings"]],
        [int(x) for x in config["sweep"]["n_levels"]],
        int(ens["samples"]),
        int(ens["master_seed"]),
        initial=_initial(config),
        scaled_times=_scaled_grid(config["time"]),
        window=tuple(config["fit"]["window"]),
        threads=int(ens["threads"]),
    )
    sweep_csv = output.write_csv(
        out / "sweep.csv",
        output.SWEEP_COLUMNS,
        [(r.n_levels, r.coupling, r.samples, r.rate, r.rate_stderr, r.equilibrium_p1, r.r_squared)
         for r in rows],
    )
    flags = output.write_json(
        out / "sweep_flags.json",
        {"rows": [{"N": r.n_levels, "lambda": r.coupling, "flagged": r.flagged, "note": r.note,
                   "equilibrium_stderr": r.equilibrium_stderr} for r in rows]},
    )
    return [sweep_csv, flags]


def diagrams_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    n, m = int(config["diagrams"]["n"]), int(config["diagrams"]["m"])
    simple, nested, crossing = diagrammatics.count_by_class(n, m)
    k = (n + m) // 2
    nc = simple + nested
    cat = diagrammatics.catalan(k)
    total = diagrammatics.double_factorial(n + m - 1)
    match = nc == cat and nc + crossing == total
    print(f"noncrossing={nc}, crossing={crossing}, catalan={cat}, match={'true' if match else 'false'}")
    path = output.write_csv(
        out / "diagrams.csv",
        ("n", "m", "simple", "nested", "crossing", "noncrossing", "catalan", "total",
         "double_factorial", "match"),
        [(n, m, simple, nested, crossing, nc, cat, nc + crossing, total, match)],
    )
    return [path]


def moments_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    sec = config["moments"]
    k, n, s = int(sec["k"]), int(sec["n_levels"]), int(sec["samples"])
    formula = diagrammatics.moment_from_pairings(k, n)
    mean, se = diagrammatics.moment_monte_carlo(k, n, s, int(config["ensemble"]["master_seed"]))
    z = (mean - formula) / se if se > 0 else 0.0
    print(f"k={k} N={n} S={s} formula={formula!r} mc={mean!r}+-{se!r} z={z:.3f}")
    path = output.write_csv(
        out / "moments.csv",
        ("k", "N", "S", "formula", "mc_mean", "mc_stderr", "z"),
        [(k, n, s, formula, mean, se, z)],
    )
    return [path]


def effective_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    sec = config["effective"]
    p0 = tuple(float(x) for x in sec["p0"])
    T = _scaled_grid(sec)
    cf1, cf2 = effective.closed_form(T, p0, float(sec["rate"]))
    res = np.array([effective.poisson_resum(t, p0, int(sec["nbar_max"])) for t in T])
    ode = effective.rate_ode(T[1:], p0, float(sec["coeff"])) if T.size > 1 else np.empty((0, 2))
    ode = np.vstack([np.array(p0)[None, :], ode])
    csv_path = output.write_csv(
        out / "effective.csv",
        ("T", "closed_p1", "closed_p2", "poisson_p1", "poisson_p2", "ode_p1", "ode_p2"),
        zip(T, cf1, cf2, res[:, 0], res[:, 1], ode[:, 0], ode[:, 1]),
    )
    svg = output.line_chart_svg(
        out / "effective.svg",
        [
            ("P1 closed form", T, cf1, "#1f77b4", False),
            ("P2 closed form", T, cf2, "#d62728", False),
            ("P1 rate ODE", T, ode[:, 0], "#2ca02c", True),
        ],
        "T",
        "site probability",
        "effective equation",
    )
    return [csv_path, svg]


def bounds_outputs(config: Dict[str, Any], out: Path) -> List[Path]:
    samples = int(config["bounds"]["samples"])
    reports = bounds.verify_all(samples, int(config["ensemble"]["master_seed"]))
    for r in reports:
        extra = "" if r.literal_violations is None else f" (literal constant 1: {r.literal_violations})"
        print(f"{r.inequality_id.name}: violations={r.violations} max_ratio={r.max_ratio:.4g} "
              f"constant={r.constant:.6g} [{r.constant_source}]{extra}")
    path = output.write_csv(
        out / "bounds.csv",
        ("inequality", "samples", "max_ratio", "violations", "constant", "constant_source",
         "literal_violations"),
        [(r.inequality_id.name, r.samples, r.max_ratio, r.violations, r.constant, r.constant_source,
          "" if r.literal_violations is None else r.literal_violations) for r in reports],
    )
    return [path]


COMMANDS = {
    "simulate": simulate_outputs,
    "sweep": sweep_outputs,
    "diagrams": diagrams_outputs,
    "moments": moments_outputs,
    "effective": effective_outputs,
    "verify-bounds": bounds_outputs,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vanhove", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML config file or a run manifest.json")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", type=Path, default=Path("runs") / name, help="output directory")
        p.add_argument("--threads", type=int, help="worker threads for ensemble members")
        p.add_argument("--set", dest="assignments", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override one config field")
        if name == "diagrams":
            p.add_argument("n", type=int, nargs="?")
            p.add_argument("m", type=int, nargs="?")
        elif name == "moments":
            p.add_argument("k", type=int, nargs="?")
            p.add_argument("N", type=int, nargs="?")
            p.add_argument("S", type=int, nargs="?")
        elif name == "verify-bounds":
            p.add_argument("samples", type=int, nargs="?")
    return parser


def _positional_overrides(args) -> List[str]:
    sets = []
    if args.command == "diagrams":
        sets += [f"diagrams.{key}={getattr(args, key)}" for key in ("n", "m")
                 if getattr(args, key) is not None]
    elif args.command == "moments":
        for attr, key in (("k", "k"), ("N", "n_levels"), ("S", "samples")):
            if getattr(args, attr) is not None:
                sets.append(f"moments.{key}={getattr(args, attr)}")
    elif args.command == "verify-bounds" and args.samples is not None:
        sets.append(f"bounds.samples={args.samples}")
    return sets


def _check_limits(command: str, config: Dict[str, Any]) -> None:
    if command == "diagrams":
        n, m = config["diagrams"]["n"], config["diagrams"]["m"]
        if n < 0 or m < 0 or (n + m) % 2:
            raise ConfigError("diagrams: n + m must be even and nonnegative")
        if (n + m) // 2 > diagrammatics.MAX_ENUMERATION_K:
            raise ConfigError(f"diagrams: (n+m)/2 must not exceed {diagrammatics.MAX_ENUMERATION_K}")
    elif command == "moments":
        sec = config["moments"]
        if not 0 <= sec["k"] <= diagrammatics.MAX_MOMENT_K:
            raise ConfigError(f"moments: k must lie in 0..{diagrammatics.MAX_MOMENT_K}")
        if sec["samples"] < 2:
            raise ConfigError("moments: S must be >= 2")
        if sec["n_levels"] < 1:
            raise ConfigError("moments: N must be >= 1")
    elif command == "verify-bounds" and config["bounds"]["samples"] < 1:
        raise ConfigError("verify-bounds: samples must be >= 1")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve(args.config, list(args.assignments) + _positional_overrides(args),
                         args.seed, args.threads)
        _check_limits(args.command, config)
    except ConfigError as exc:
        print(f"vanhove: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    started = output.utc_now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        files = COMMANDS[args.command](config, out)
    except (ArithmeticError, QuadratureError, ensemble.EnsembleMemberError, ValueError) as exc:
        print(f"vanhove: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    manifest = output.write_manifest(out, args.command, config, started, files)
    log.info("wrote %s", manifest)
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
