"""Command-line driver: problem ingestion, pipeline orchestration, reports.

Problem files are JSON with the exact keys of :class:`ProblemSpec`.  All
reports are JSON with sorted keys and 17-significant-digit floats, so a
given problem file and seed produce byte-identical output; figures (PNG)
are rendered next to the delimited output unless ``--no-figures`` is
given.  ``HILLQ_THREADS`` caps the worker threads used by the expansion
convolutions and the admissibility scan.

Exit codes: 0 success; 1 I/O or schema error; 2 unstable base equation;
3 resonance; 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from ._io import render_json, write_json
from .errors import (
    DegenerateEigenvector,
    HillqError,
    InsufficientSupport,
    NonResonanceViolation,
    PhaseWindingAmbiguous,
    ProblemFormatError,
    RealityViolation,
    ResonanceFound,
    ResonantMode,
    StepTooLarge,
    TruncationBlowup,
    UnstableUnperturbed,
)
from .floquet import (
    DrivePotential,
    PeriodicPotential,
    riccati_coefficients,
    solve_floquet,
)
from .lindstedt import corrected_rotation, expand, first_obstruction_order
from .smalldiv import ScaleConfig, diophantine_constant, scan_admissible
from .verify import (
    extract_rotation,
    integrate_hill,
    lyapunov_estimate,
    reconstruct_phi,
    riccati_residual,
    truncated_series,
)

DEFAULT_TOLERANCES = {"rotation": 5e-8, "reconstruction": 1e-5, "lyapunov": 1e-3}

_REQUIRED_KEYS = {"A", "omega1", "omega0", "p0_coeffs", "p1_coeffs"}
_OPTIONAL_KEYS = {
    "eps",
    "K",
    "cutoff",
    "tau",
    "tau1",
    "C1_factor",
    "n0",
    "tolerances",
    "seed",
}


class _ToleranceMiss(HillqError):
    """A cmd_verify check exceeded its tolerance (reported, then raised)."""


@dataclass(frozen=True)
class ProblemSpec:
    """Validated problem description; fields mirror the JSON keys."""

    A: int
    omega1: tuple[float, ...]
    omega0: float
    p0_coeffs: tuple[tuple[int, complex], ...]
    p1_coeffs: tuple[tuple[tuple[int, ...], complex], ...]
    eps: float = 1e-2
    K: int = 3
    cutoff: int | None = None
    tau: float = 2.0
    tau1: float | None = None
    C1_factor: float = 1.0 / 3.0
    n0: int | None = None
    tolerances: dict | None = None
    seed: int = 0

    def p0(self) -> PeriodicPotential:
        return PeriodicPotential(self.omega0, dict(self.p0_coeffs))

    def p1(self) -> DrivePotential:
        return DrivePotential(self.omega1, dict(self.p1_coeffs))

    def merged_tolerances(self) -> dict:
        out = dict(DEFAULT_TOLERANCES)
        out.update(self.tolerances or {})
        return out


def _fail(msg: str) -> ProblemFormatError:
    return ProblemFormatError(msg)


def _real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(f"{name} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise _fail(f"{name} must be finite")
    return value


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(f"{name} must be an integer")
    return value


def load_problem(path) -> ProblemSpec:
    """Read and validate a problem file; all failures are schema errors."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _fail(f"cannot read problem file: {exc}")
    except json.JSONDecodeError as exc:
        raise _fail(f"problem file is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise _fail("problem file must contain a JSON object")
    unknown = set(raw) - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise _fail(f"unknown problem keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise _fail(f"missing problem keys: {sorted(missing)}")

    a = _integer(raw["A"], "A")
    if a < 1:
        raise _fail("A must be >= 1")
    omega1 = raw["omega1"]
    if not isinstance(omega1, list) or len(omega1) != a:
        raise _fail("omega1 must be a list of length A")
    omega1 = tuple(_real(w, "omega1 entry") for w in omega1)
    omega0 = _real(raw["omega0"], "omega0")

    p0_coeffs = []
    if not isinstance(raw["p0_coeffs"], list):
        raise _fail("p0_coeffs must be a list of (n, re, im) triples")
    for item in raw["p0_coeffs"]:
        if not (isinstance(item, list) and len(item) == 3):
            raise _fail("p0_coeffs entries must be (n, re, im) triples")
        n = _integer(item[0], "p0 coefficient index")
        p0_coeffs.append((n, complex(_real(item[1], "p0 re"), _real(item[2], "p0 im"))))

    p1_coeffs = []
    if not isinstance(raw["p1_coeffs"], list):
        raise _fail("p1_coeffs must be a list of (mode, re, im) triples")
    for item in raw["p1_coeffs"]:
        if not (isinstance(item, list) and len(item) == 3):
            raise _fail("p1_coeffs entries must be (mode, re, im) triples")
        mode = item[0]
        if not (isinstance(mode, list) and len(mode) == a):
            raise _fail("p1 modes must be integer vectors of length A")
        mode = tuple(_integer(k, "p1 mode entry") for k in mode)
        p1_coeffs.append((mode, complex(_real(item[1], "p1 re"), _real(item[2], "p1 im"))))

    kwargs = {}
    if "eps" in raw:
        kwargs["eps"] = _real(raw["eps"], "eps")
    if "K" in raw:
        kwargs["K"] = _integer(raw["K"], "K")
        if kwargs["K"] < 0:
            raise _fail("K must be >= 0")
    if "cutoff" in raw and raw["cutoff"] is not None:
        kwargs["cutoff"] = _integer(raw["cutoff"], "cutoff")
        if kwargs["cutoff"] < 1:
            raise _fail("cutoff must be >= 1")
    if "tau" in raw:
        kwargs["tau"] = _real(raw["tau"], "tau")
    if "tau1" in raw and raw["tau1"] is not None:
        kwargs["tau1"] = _real(raw["tau1"], "tau1")
    if "C1_factor" in raw:
        kwargs["C1_factor"] = _real(raw["C1_factor"], "C1_factor")
        if not 0.0 < kwargs["C1_factor"] <= 1.0:
            raise _fail("C1_factor must lie in (0, 1]")
    if "n0" in raw and raw["n0"] is not None:
        kwargs["n0"] = _integer(raw["n0"], "n0")
        if kwargs["n0"] < 0:
            raise _fail("n0 must be >= 0")
    if "tolerances" in raw:
        tol = raw["tolerances"]
        if not isinstance(tol, dict):
            raise _fail("tolerances must be an object")
        kwargs["tolerances"] = {k: _real(v, f"tolerance {k}") for k, v in tol.items()}
    if "seed" in raw:
        kwargs["seed"] = _integer(raw["seed"], "seed")

    spec = ProblemSpec(
        A=a,
        omega1=omega1,
        omega0=omega0,
        p0_coeffs=tuple(p0_coeffs),
        p1_coeffs=tuple(p1_coeffs),
        **kwargs,
    )
    try:
        spec.p0()
        spec.p1()
    except ValueError as exc:
        raise _fail(f"invalid potential coefficients: {exc}")
    return spec


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HILLQ_THREADS", "1")))
    except ValueError:
        return 1


def _emit(args, name: str, payload: dict) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, name + ".json"), payload)
    else:
        sys.stdout.write(render_json(payload) + "\n")


def _figures_enabled(args) -> bool:
    return bool(args.out) and not args.no_figures


def _decay_dict(series):
    try:
        fit = series.fit_decay()
    except InsufficientSupport:
        return None
    return {"rate": fit.rate, "log_amplitude": fit.log_amplitude, "shells": fit.shells}


def _floquet_report(fd, grid: int) -> dict:
    return {
        "Omega0": fd.rotation,
        "trace": fd.trace,
        "abs_trace": abs(fd.trace),
        "grid": grid,
        "min_modulus": fd.min_modulus,
        "wronskian_drift": fd.wronskian_drift,
        "square_decay": _decay_dict(fd.square),
        "inv_square_decay": _decay_dict(fd.inv_square),
    }


def _pipeline(spec: ProblemSpec, grid: int, order: int | None, cutoff: int | None = None):
    cut = spec.cutoff if cutoff is None else cutoff
    fd = solve_floquet(spec.p0(), grid)
    system = riccati_coefficients(fd, spec.p1(), cutoff=cut)
    k = spec.K if order is None else order
    result = expand(system, k, cutoff=cut, threads=_threads())
    return fd, system, result


def _expand_report(spec, result, eps_values) -> dict:
    report = {
        "order": result.depth,
        "cutoff": spec.cutoff,
        "discarded": result.discarded,
        "compat_residuals": list(result.compat_residuals),
        "j0": result.first_obstruction,
        "orders": [
            {"k": k, "l1_norm": u.l1_norm(), "terms": len(u)}
            for k, u in enumerate(result.orders)
        ],
        "omega_eps": [
            {"eps": e, "value": corrected_rotation(result, e)} for e in eps_values
        ],
    }
    for k, g in enumerate(result.obstructions, start=1):
        report[f"G{k}"] = g
    return report


def _scan_config(spec: ProblemSpec, c0: float) -> ScaleConfig:
    return ScaleConfig.for_scan(
        c0,
        spec.tau,
        spec.A + 2,
        width=spec.C1_factor * c0,
        window_exponent=spec.tau1,
        start_scale=spec.n0,
    )


def cmd_floquet(spec: ProblemSpec, args) -> dict:
    fd = solve_floquet(spec.p0(), args.grid)
    report = _floquet_report(fd, args.grid)
    _emit(args, "floquet", report)
    if _figures_enabled(args):
        from . import figures

        figures.floquet_figure(fd, spec.p0(), os.path.join(args.out, "floquet.png"))
    return report


def cmd_expand(spec: ProblemSpec, args) -> dict:
    _, _, result = _pipeline(spec, args.grid, args.order, getattr(args, "cutoff", None))
    eps_values = args.eps if args.eps else [spec.eps]
    report = _expand_report(spec, result, eps_values)
    _emit(args, "expand", report)
    if _figures_enabled(args):
        from . import figures

        figures.expand_figure(result, os.path.join(args.out, "expand.png"))
    return report


def cmd_scan(spec: ProblemSpec, args) -> dict:
    _, system, result = _pipeline(spec, args.grid_floquet, args.order)
    j0 = result.first_obstruction
    coeff = result.obstructions[j0 - 1] if j0 is not None else 0j
    c0 = diophantine_constant(system.freqs, spec.tau, args.radius)
    config = _scan_config(spec, c0)
    report_obj = scan_admissible(
        coeff,
        j0,
        system.freqs,
        config,
        args.eps0,
        grid=args.grid,
        bands=args.bands,
        radius=args.radius,
        threads=_threads(),
    )
    report = {
        "C0": c0,
        "bands_requested": args.bands,
        "eps0": args.eps0,
        "grid": args.grid,
        "tau": spec.tau,
        **report_obj.summary(),
    }
    _emit(args, "scan", report)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report_obj.write_csv(os.path.join(args.out, "scan.csv"))
    if _figures_enabled(args):
        from . import figures

        figures.scan_figure(report_obj, os.path.join(args.out, "scan.png"))
    return report


def cmd_verify(spec: ProblemSpec, args) -> dict:
    fd, system, result = _pipeline(spec, args.grid, args.order)
    eps = spec.eps if args.eps is None else args.eps
    omega = corrected_rotation(result, eps)
    y0, v0 = reconstruct_phi(fd, result, eps, 0.0, with_derivative=True)
    probe = integrate_hill(
        spec.p0(), spec.p1(), eps, fd, args.horizon, args.step, y0=y0, v0=v0
    )
    rec = reconstruct_phi(fd, result, eps, probe.times)
    fit = extract_rotation(probe)
    lam = lyapunov_estimate(probe)
    residual = riccati_residual(truncated_series(result, eps), system, eps)

    seed = spec.seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    count = min(512, len(probe.times))
    idx = np.sort(rng.choice(len(probe.times), size=count, replace=False))
    gap = np.abs(rec[idx] - probe.values[idx])
    scale = float(np.max(np.abs(probe.values)))
    max_abs = float(np.max(gap))
    max_rel = max_abs / scale

    tols = spec.merged_tolerances()
    rotation_error = abs(omega - fit.value)
    rotation_bound = max(tols["rotation"], 3.0 * fit.stderr)
    checks = {
        "rotation": rotation_error <= rotation_bound,
        "reconstruction": max_rel <= tols["reconstruction"],
        "lyapunov": abs(lam) <= tols["lyapunov"],
    }
    report = {
        "eps": eps,
        "horizon": args.horizon,
        "step": probe.step,
        "seed": seed,
        "sampled_points": count,
        "omega_eps": omega,
        "rotation_fit": {"value": fit.value, "stderr": fit.stderr},
        "rotation_error": rotation_error,
        "rotation_bound": rotation_bound,
        "reconstruction_max_abs": max_abs,
        "reconstruction_max_rel": max_rel,
        "lyapunov": lam,
        "riccati_residual": residual,
        "tolerances": tols,
        "checks": {k: ("PASS" if ok else "FAIL") for k, ok in checks.items()},
    }
    _emit(args, "verify", report)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        probe.write_csv(os.path.join(args.out, "verify_probe.csv"))
    if _figures_enabled(args):
        from . import figures

        figures.verify_figure(probe, rec, os.path.join(args.out, "verify.png"))
    if not all(checks.values()):
        failed = sorted(k for k, ok in checks.items() if not ok)
        raise _ToleranceMiss(f"verification checks failed: {', '.join(failed)}")
    return report


def cmd_all(spec: ProblemSpec, args) -> dict:
    base = vars(args)
    cmd_floquet(spec, argparse.Namespace(**base))
    cmd_expand(spec, argparse.Namespace(**base))
    scan_args = argparse.Namespace(**base)
    scan_args.grid_floquet = args.grid  # the per-band grid is a separate knob
    scan_args.grid = args.scan_grid
    cmd_scan(spec, scan_args)
    verify_args = argparse.Namespace(**base)
    verify_args.eps = args.eps[0] if args.eps else None
    return cmd_verify(spec, verify_args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hillq",
        description="Rotation numbers of quasi-periodically perturbed Hill equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--problem", required=True, help="problem JSON file")
        p.add_argument("--out", default=None, help="report directory (default: stdout)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        p.add_argument("--seed", type=int, default=None, help="override the problem seed")

    p = sub.add_parser("floquet", help="solve the unperturbed equation")
    common(p)
    p.add_argument("--grid", type=int, default=1024, help="period samples (power of two)")
    p.set_defaults(func=cmd_floquet)

    p = sub.add_parser("expand", help="run the perturbation expansion")
    common(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--order", type=int, default=None, help="override the problem's K")
    p.add_argument("--cutoff", type=int, default=None, help="override the problem cutoff")
    p.add_argument("--eps", type=float, nargs="*", default=None, help="table eps values")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("scan", help="scan eps bands for admissibility")
    common(p)
    p.add_argument("--grid-floquet", type=int, default=1024, dest="grid_floquet")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--eps0", type=float, default=0.1, help="top of the scanned range")
    p.add_argument("--grid", type=int, default=512, help="points per band")
    p.add_argument("--bands", type=int, default=9)
    p.add_argument("--radius", type=int, default=20, help="l1 lattice radius")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="compare the series against direct integration")
    common(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--eps", type=float, default=None, help="override the problem eps")
    p.add_argument("--horizon", type=float, default=1000.0)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("all", help="floquet + expand + scan + verify")
    common(p)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--eps", type=float, nargs="*", default=None)
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--scan-grid", type=int, default=512, dest="scan_grid")
    p.add_argument("--bands", type=int, default=9)
    p.add_argument("--radius", type=int, default=20)
    p.add_argument("--horizon", type=float, default=1000.0)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        spec = load_problem(args.problem)
        args.func(spec, args)
        return 0
    except ProblemFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UnstableUnperturbed, DegenerateEigenvector) as exc:
        print(f"error: unstable base equation: {exc}", file=sys.stderr)
        return 2
    except ResonantMode as exc:
        nu = tuple(exc.index)
        print(
            f"error: resonant mode nu={nu} with divisor {exc.divisor!r}"
            + (f" at order {exc.order}" if exc.order is not None else ""),
            file=sys.stderr,
        )
        return 3
    except (NonResonanceViolation, ResonanceFound) as exc:
        print(f"error: resonance: {exc}", file=sys.stderr)
        return 3
    except (
        StepTooLarge,
        PhaseWindingAmbiguous,
        RealityViolation,
        TruncationBlowup,
        _ToleranceMiss,
    ) as exc:
        print(f"error: verification failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
