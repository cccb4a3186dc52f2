"""
Command-line front end.

Usage::

    subdiffusion forward --config run.yaml --output out/
    subdiffusion invert --config inverse.yaml
    subdiffusion diagnose-modes --config run.yaml
    subdiffusion example1 --rho 0.5 --b 0.1
    subdiffusion roundtrip
    subdiffusion verify
    subdiffusion ml-eval --rho 0.5 --mu 1 --z -1

Flags override config fields, which override built-in defaults. Exit codes:
0 success, 2 invalid configuration or input, 3 no solution, 4 accuracy failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from subdiffusion import __version__, oracles
from subdiffusion.config import (
    RUNTIME_KEYS,
    ConfigError,
    build_domain,
    build_field,
    build_profile,
    load_config,
    resolve,
)
from subdiffusion.errors import AccuracyError, CoverageError, DomainError, NoSolutionError, PreconditionError
from subdiffusion.forward import ForwardProblem, solve
from subdiffusion.inverse import InverseProblem, recover, roundtrip, uniqueness_certificate
from subdiffusion.kernel import bound_check, classify, duhamel
from subdiffusion.special_functions import mittag_leffler
from subdiffusion.spectral import SpectralCoeffs

EXIT_CONFIG = 2
EXIT_NO_SOLUTION = 3
EXIT_ACCURACY = 4

MANIFEST_VERSION = 1


def _clean(obj):
    """Make ``obj`` JSON-serializable with finite floats only."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _time_tag(t: float) -> str:
    return f"{t:.6g}".replace("-", "m")


def _mode_from_key(key) -> int | tuple[int, ...]:
    nums = [int(v) for v in re.findall(r"\d+", str(key))]
    return nums[0] if len(nums) == 1 else tuple(nums)


class Run:
    """Resolved config plus helpers shared by the commands."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.domain = build_domain(cfg)
        self.count = tuple(cfg["count"])
        self.nodes = tuple(cfg["nodes"])
        self.out = Path(cfg["output"])
        self.files: list[str] = []
        self.kernel_options = {"method": cfg["kernel"]["method"], "n_cells": cfg["kernel"]["n_cells"]}

    def field(self, key: str):
        return build_field(self.cfg[key], self.domain, self.count, self.nodes)

    def profile(self):
        return build_profile(self.cfg["g"])

    def open(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)

    def write_grid(self, name: str, grid) -> None:
        grid.to_csv(self.out / name)
        self.files.append(name)

    def write_json(self, name: str, obj) -> None:
        write_json(self.out / name, obj)
        self.files.append(name)

    def manifest(self) -> None:
        echo = {k: v for k, v in self.cfg.items() if k not in RUNTIME_KEYS}
        write_json(
            self.out / "manifest.json",
            {
                "manifest_version": MANIFEST_VERSION,
                "library": "subdiffusion",
                "version": __version__,
                "command": self.cfg["command"],
                "config": echo,
                "files": sorted(self.files),
            },
        )


def cmd_forward(run: Run) -> int:
    cfg = run.cfg
    g = run.profile()
    problem = ForwardProblem(
        run.domain, cfg["rho"], phi=run.field("phi"), f=run.field("f"), g=g,
        horizon=cfg["horizon"], count=run.count,
    )
    sol = solve(problem, **run.kernel_options)
    run.open()
    snapshots = []
    for t in cfg["times"]:
        name = f"u_t{_time_tag(t)}.csv"
        run.write_grid(name, sol.at(t, run.nodes))
        snapshots.append({"t": t, "file": name})
    steps = cfg["residual_steps"]
    if steps == 0:
        residual = {"skipped": "residual_steps is 0"}
    elif g.power_terms() is None and np.any(sol.f.values != 0):
        residual = {"skipped": "profile has no closed form; set residual_steps and run verify tooling"}
    else:
        rep = oracles.residual_check(sol, n_steps=steps, nodes=run.nodes)
        residual = {
            "max": rep.max_residual, "l2": rep.l2_residual, "n_steps": rep.n_steps,
            "window": list(rep.window), "nodes": list(rep.nodes),
        }
    run.write_json(
        "report.json",
        {
            "command": "forward",
            "modes": len(sol.phi),
            "count": list(run.count),
            "tail_indicator": sol.tail_indicator(),
            "snapshots": snapshots,
            "residual": residual,
        },
    )
    run.manifest()
    return 0


def _inverse_problem(run: Run, g) -> InverseProblem:
    cfg = run.cfg
    phi = run.field("phi")
    psi_spec = cfg["psi"]
    if psi_spec["kind"] == "snapshot":
        f_true = build_field(psi_spec["f"], run.domain, run.count, run.nodes)
        fwd = solve(
            ForwardProblem(run.domain, cfg["rho"], phi=phi, f=f_true, g=g, horizon=cfg["horizon"], count=run.count),
            **run.kernel_options,
        )
        psi = fwd.coefficients(cfg["t0"])
    else:
        psi = run.field("psi")
    free = {_mode_from_key(k): v for k, v in cfg["free"].items()}
    return InverseProblem(run.domain, cfg["rho"], phi, psi, g, cfg["t0"], cfg["horizon"], run.count, free)


def cmd_invert(run: Run) -> int:
    cfg = run.cfg
    problem = _inverse_problem(run, run.profile())
    th = cfg["thresholds"]
    run.open()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = recover(
                problem, rel_threshold=th["rel_threshold"], solvability_rtol=th["solvability_rtol"],
                **run.kernel_options,
            )
        except NoSolutionError as exc:
            run.write_json("report.json", {"command": "invert", **exc.report.to_dict()})
            run.manifest()
            print(f"no solution: {exc}", file=sys.stderr)
            return EXIT_NO_SOLUTION
    run.write_grid("f.csv", result.f_grid(run.nodes))
    times = sorted(set([cfg["t0"]] + [t for t in cfg["times"] if t <= cfg["horizon"]]))
    snaps = []
    for t in times:
        name = f"u_t{_time_tag(t)}.csv"
        run.write_grid(name, result.u.at(t, run.nodes))
        snaps.append({"t": t, "file": name})
    report = result.report.to_dict()
    family = result.family
    report.update(
        {
            "command": "invert",
            "near_singular": result.near_singular,
            "snapshot_error": result.snapshot_error,
            "snapshots": snaps,
            "warnings": [str(w.message) for w in caught],
            "family": {
                "free_modes": family.free_modes,
                "free_values": family.free_values,
                "sigma": family.sigma,
                "decay_verdict": None if family.decay is None else family.decay.verdict,
            },
        }
    )
    run.write_json("report.json", report)
    run.manifest()
    return 0


def cmd_diagnose(run: Run) -> int:
    cfg = run.cfg
    g = run.profile()
    modes = SpectralCoeffs.zeros(run.domain, run.count)
    lam = modes.eigenvalues
    kern = duhamel(g, cfg["rho"], lam, cfg["t0"], **run.kernel_options)
    cls = classify(g, cfg["rho"], lam, cfg["t0"], cfg["thresholds"]["rel_threshold"], kernel=kern)
    bounds = bound_check(g, cfg["rho"], lam, cfg["t0"], kernel=kern)
    run.open()
    header = ["k"] if run.domain.dim == 1 else ["k1", "k2"]
    with open(run.out / "modes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header + ["lambda", "b_value", "error_estimate", "class"])
        for i in range(lam.size):
            writer.writerow(
                [str(int(v)) for v in modes.modes[i]]
                + [repr(float(lam[i])), repr(float(kern.values[i])), repr(float(kern.errors[i]))]
                + ["null" if cls.null[i] else "regular"]
            )
    run.files.append("modes.csv")
    run.write_json(
        "report.json",
        {
            "command": "diagnose-modes",
            "method": kern.method,
            "null_modes": [modes.mode_label(i) for i in cls.null_modes],
            "bound": {
                "lower": bounds.lower, "upper": bounds.upper, "ratio": bounds.ratio,
                "hypothesis": bounds.hypothesis, "notice": bounds.notice,
                "violations": [modes.mode_label(i) for i in bounds.violations],
            },
        },
    )
    run.manifest()
    return 0


def cmd_example1(run: Run) -> int:
    cfg = run.cfg
    ex = cfg["example1"]
    sc = oracles.example1_scenario(cfg["rho"], ex["b"], _mode_from_key(ex["mode"]), run.domain, count=run.count)
    steps = ex["residual_steps"]
    residuals = {}
    for name, (u, f) in (("trivial", sc.trivial), ("nontrivial", sc.nontrivial)):
        rep = oracles.residual_check(u, f, sc.g, n_steps=steps, nodes=run.nodes)
        residuals[name] = {"max": rep.max_residual, "l2": rep.l2_residual}
    zero = SpectralCoeffs.zeros(run.domain, run.count)
    res = recover(InverseProblem(run.domain, sc.rho, zero, zero, sc.g, 1.0, count=run.count))
    t_alt = ex["t0_alt"]
    alt_problem = InverseProblem(run.domain, sc.rho, zero, sc.nontrivial[1] * float(sc.T(t_alt)), sc.g, t_alt, count=run.count)
    cert = uniqueness_certificate(alt_problem)
    alt = recover(alt_problem)
    report = {
        "command": "example1",
        "rho": sc.rho,
        "b": sc.b,
        "mode": sc.mode,
        "lambda": sc.lam,
        "g0": sc.g0,
        "g1": sc.g1,
        "changes_sign": sc.changes_sign,
        "t0": 1.0,
        "null_modes": res.family.free_modes,
        "verdict": res.verdict,
        "residuals": residuals,
        "residual_steps": steps,
        "alternative": {
            "t0": t_alt,
            "verdict": alt.verdict,
            "mode_margin": float(cert.margins[zero.index_of(sc.mode)]),
            "T_t0": float(sc.T(t_alt)),
            "recovery_error": (alt.f - sc.nontrivial[1]).norm(),
        },
    }
    run.open()
    run.write_json("report.json", report)
    run.manifest()
    print(json.dumps(_clean(report), sort_keys=True, indent=2))
    return 0


def cmd_roundtrip(run: Run) -> int:
    cfg = run.cfg
    rep = roundtrip(
        run.domain, cfg["rho"], run.field("phi"), run.field("f"), run.profile(), cfg["t0"],
        count=run.count, nodes=run.nodes, **run.kernel_options,
    )
    report = {
        "command": "roundtrip",
        "rel_error": rep.rel_l2_error,
        "max_error": rep.max_error,
        "abs_error": rep.abs_l2_error,
        "verdict": rep.verdict,
    }
    run.open()
    run.write_json("report.json", report)
    run.manifest()
    print(json.dumps(_clean(report), sort_keys=True, indent=2))
    return 0


def cmd_verify(run: Run) -> int:
    from subdiffusion.verify import run_checks

    checks = run_checks()
    ok = all(c.passed for c in checks)
    run.open()
    run.write_json("verify.json", {"passed": ok, "checks": [c.to_dict() for c in checks]})
    run.manifest()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.3g} (tol {c.tolerance:.3g})")
    return 0 if ok else EXIT_ACCURACY


COMMAND_RUNNERS = {
    "forward": cmd_forward,
    "invert": cmd_invert,
    "diagnose-modes": cmd_diagnose,
    "example1": cmd_example1,
    "roundtrip": cmd_roundtrip,
    "verify": cmd_verify,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration (or a run manifest)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--rho", type=float, help="fractional order in (0, 1]")
    p.add_argument("--count", type=int, help="retained modes per axis")
    p.add_argument("--nodes", type=int, help="interior grid nodes per axis")
    p.add_argument("--t0", type=float, help="snapshot time")
    p.add_argument("--horizon", type=float, help="final time T")
    p.add_argument("--times", help="comma-separated output times")
    p.add_argument("--threads", type=int, help="worker threads (else SUBDIFFUSION_THREADS)")
    p.add_argument("--seed", type=int, help="reserved; all computations are deterministic")


_HELP = {
    "forward": "solve the forward problem and write grid snapshots",
    "invert": "recover the spatial source from a snapshot at t0",
    "diagnose-modes": "tabulate b_k(t0) and classify every mode",
    "example1": "report on the sign-changing profile with two solutions",
    "roundtrip": "forward solve, snapshot and recover a known source",
    "verify": "run the built-in consistency checks",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subdiffusion", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_RUNNERS:
        p = sub.add_parser(name, help=_HELP[name])
        _add_common(p)
        if name == "example1":
            p.add_argument("--b", type=float, help="exponent b of T(t) = t^rho (1 - t^b)")
            p.add_argument("--residual-steps", type=int, dest="ex_steps", help="time steps of the residual check")
    p = sub.add_parser("ml-eval", help="evaluate E_{rho,mu}(z)")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--z", type=float, nargs="+", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    over = {
        "output": args.output,
        "rho": args.rho,
        "count": args.count,
        "nodes": args.nodes,
        "t0": args.t0,
        "horizon": args.horizon,
        "threads": args.threads,
        "seed": args.seed,
    }
    if args.times:
        try:
            over["times"] = [float(v) for v in args.times.split(",")]
        except ValueError as exc:
            raise ConfigError(f"times: cannot parse {args.times!r}") from exc
    ex = {}
    if getattr(args, "b", None) is not None:
        ex["b"] = args.b
    if getattr(args, "ex_steps", None) is not None:
        ex["residual_steps"] = args.ex_steps
    if ex:
        over["example1"] = ex
    return over


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ml-eval":
            for z in args.z:
                print(format(mittag_leffler(z, args.rho, args.mu), ".15g"))
            return 0
        config = load_config(args.config) if args.config else None
        cfg = resolve(args.command, config, _overrides(args))
        if cfg["threads"] is not None:
            os.environ["SUBDIFFUSION_THREADS"] = str(cfg["threads"])
        return COMMAND_RUNNERS[args.command](Run(cfg))
    except (ConfigError, DomainError, PreconditionError, CoverageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoSolutionError as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except AccuracyError as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY


if __name__ == "__main__":
    sys.exit(main())
