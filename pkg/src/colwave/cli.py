"""Config-driven command line front end.

Subcommands: solve-linear, solve-semilinear, valuation, check, oracle,
demo.  Configs are JSON documents (schema in the README); outputs are CSV
files plus a plain-text run summary.  Exit codes: 0 ok, 1 check failed,
2 config error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from .errors import (
    ColwaveError,
    ConfigError,
    DivergenceError,
    LifespanExceededError,
    ValidationError,
)
from .linwave import (
    QuadratureSpec,
    check_support,
    field_to_binary,
    field_to_csv,
    solve_linear,
)
from .nets import EpsilonLadder, InitialDatum, NonlinearitySpec, Problem
from .seminorms import SpaceTimeGrid, valuation_table
from .semilinear import reports_to_csv, residual_sup, solve_net
from .suite import RESIDUAL_C, run_suite
from .verify import (
    check_association,
    check_contraction,
    check_uniqueness_surrogate,
    check_wave_oracle,
    ode_check,
    oracle_lifespan,
)

CHECK_NAMES = ("support", "contraction", "association", "uniqueness", "oracle", "residual")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class ExperimentConfig:
    problem: Problem
    ladder: EpsilonLadder
    grid: SpaceTimeGrid
    quad: QuadratureSpec
    tol: float = 1e-10
    max_iter: int = 50
    outputs: str = "out"
    checks: list[str] = field(default_factory=list)
    residual_constant: float = RESIDUAL_C

    def to_dict(self) -> dict:
        doc = {
            "problem": {
                "dim": self.problem.dim,
                "horizon": self.problem.horizon,
                "support_radius": self.problem.support_radius,
                "u0": _datum_dict(self.problem.u0),
                "u1": _datum_dict(self.problem.u1),
                "f": _nonlinearity_dict(self.problem.f),
                "small_exponent": self.problem.small_exponent,
            },
            "ladder": {
                "eps0": self.ladder.eps0,
                "ratio": self.ladder.ratio,
                "count": self.ladder.count,
            },
            "grid": {
                "spatial_extent": self.grid.spatial_extent,
                "dx": self.grid.dx,
                "dt": self.grid.dt,
                "margin_cells": self.grid.margin_cells,
            },
            "quad": asdict(self.quad),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "outputs": self.outputs,
            "checks": list(self.checks),
            "residual_constant": self.residual_constant,
        }
        return doc


def _datum_dict(d: InitialDatum) -> dict:
    out = {"kind": d.kind}
    if d.kind != "zero":
        out["outer_radius"] = d.outer_radius
        out["amplitude"] = d.amplitude
    if d.kind == "plateau_bump":
        out["inner_radius"] = d.inner_radius
    return out


def _nonlinearity_dict(f: NonlinearitySpec) -> dict:
    out = {"kind": f.kind}
    if f.kind == "polynomial":
        out["coefficients"] = list(f.coefficients)
    return out


def _need(doc: dict, key: str, path: str):
    if key not in doc:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def _build(path: str, ctor, **kwargs):
    try:
        return ctor(**kwargs)
    except ValidationError as err:
        prefix = f"{path}.{err.parameter}" if path else err.parameter
        raise ConfigError(prefix, str(err)) from err
    except TypeError as err:
        raise ConfigError(path, f"bad fields: {err}") from err


def _parse_datum(doc, path: str) -> InitialDatum:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    return _build(path, InitialDatum, **doc)


def _parse_nonlinearity(doc, path: str) -> NonlinearitySpec:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    if "coefficients" in doc:
        doc = dict(doc)
        doc["coefficients"] = tuple(doc["coefficients"])
    return _build(path, NonlinearitySpec, **doc)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a JSON object")
    pdoc = dict(_need(doc, "problem", ""))
    u0 = _parse_datum(_need(pdoc, "u0", "problem"), "problem.u0")
    u1 = _parse_datum(_need(pdoc, "u1", "problem"), "problem.u1")
    f = _parse_nonlinearity(_need(pdoc, "f", "problem"), "problem.f")
    problem = _build(
        "problem",
        Problem,
        dim=_need(pdoc, "dim", "problem"),
        horizon=_need(pdoc, "horizon", "problem"),
        support_radius=_need(pdoc, "support_radius", "problem"),
        u0=u0,
        u1=u1,
        f=f,
        small_exponent=pdoc.get("small_exponent", 1.0),
    )
    ldoc = doc.get("ladder", {})
    ladder = _build("ladder", EpsilonLadder, **ldoc)
    gdoc = dict(doc.get("grid", {}))
    if "dx" not in gdoc:
        raise ConfigError("grid.dx", "missing required field")
    if "spatial_extent" in gdoc:
        grid = _build(
            "grid",
            SpaceTimeGrid,
            dim=problem.dim,
            horizon=problem.horizon,
            support_radius=problem.support_radius,
            **gdoc,
        )
    else:
        grid = _build(
            "grid",
            SpaceTimeGrid.covering,
            dim=problem.dim,
            horizon=problem.horizon,
            support_radius=problem.support_radius,
            dx=gdoc["dx"],
            dt=gdoc.get("dt"),
            margin_cells=gdoc.get("margin_cells", 2),
        )
    quad = _build("quad", QuadratureSpec, **doc.get("quad", {}))
    tol = doc.get("tol", 1e-10)
    if not (isinstance(tol, (int, float)) and tol > 0):
        raise ConfigError("tol", "must be a positive number")
    max_iter = doc.get("max_iter", 50)
    if not (isinstance(max_iter, int) and max_iter >= 1):
        raise ConfigError("max_iter", "must be a positive integer")
    checks = doc.get("checks", [])
    for name in checks:
        if name not in CHECK_NAMES:
            raise ConfigError("checks", f"unknown check {name!r}; choose from {CHECK_NAMES}")
    residual_constant = doc.get("residual_constant", RESIDUAL_C)
    if not (isinstance(residual_constant, (int, float)) and residual_constant > 0):
        raise ConfigError("residual_constant", "must be a positive number")
    return ExperimentConfig(
        problem=problem,
        ladder=ladder,
        grid=grid,
        quad=quad,
        tol=float(tol),
        max_iter=max_iter,
        outputs=doc.get("outputs", "out"),
        checks=list(checks),
        residual_constant=float(residual_constant),
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError("config", f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError("config", f"invalid JSON in {path}: {err}") from err
    return parse_config(doc)


def dump_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _outdir(cfg: ExperimentConfig | None, args) -> str:
    out = args.out or (cfg.outputs if cfg else "out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_summary(out: str, blocks: list[str]) -> None:
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write("\n".join(blocks) + "\n")


def _cmd_solve_linear(cfg: ExperimentConfig, args) -> int:
    out = _outdir(cfg, args)
    fld = solve_linear(cfg.problem.u0, cfg.problem.u1, None, cfg.grid, cfg.quad)
    field_to_csv(fld, os.path.join(out, "linear_field.csv"))
    field_to_binary(fld, os.path.join(out, "linear_field.bin"))
    rep = check_support(fld, cfg.problem.support_radius, tol=1e-8)
    block = (
        f"solve-linear ok\n  grid shape {fld.grid.shape}\n"
        f"  support max_outside={_fmt(rep.max_outside)}"
    )
    _write_summary(out, [block])
    print(block)
    return EXIT_OK


def _solve_net_or_fail(cfg: ExperimentConfig, threads: int):
    net, reports = solve_net(
        cfg.problem, cfg.ladder, cfg.grid, cfg.quad, cfg.tol, cfg.max_iter, threads=threads
    )
    return net, reports


def _cmd_solve_semilinear(cfg: ExperimentConfig, args) -> int:
    out = _outdir(cfg, args)
    net, reports = _solve_net_or_fail(cfg, args.threads)
    reports_to_csv(reports, os.path.join(out, "solve_reports.csv"))
    for j, fld in enumerate(net.fields):
        field_to_binary(fld, os.path.join(out, f"field_{j:03d}.bin"))
    lines = [
        f"solve-semilinear eps={_fmt(r.eps)} iterations={r.iterations} "
        f"converged={r.converged} final_increment={_fmt(r.final_increment)}"
        for r in reports
    ]
    _write_summary(out, lines)
    print("\n".join(lines))
    if not all(r.converged for r in reports):
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def _cmd_valuation(cfg: ExperimentConfig, args) -> int:
    out = _outdir(cfg, args)
    net, reports = _solve_net_or_fail(cfg, args.threads)
    rows = valuation_table(net)
    with open(os.path.join(out, "valuation.csv"), "w") as fh:
        fh.write("eps,mu,n,slope,stderr\n")
        for eps, mu, n, slope, stderr in rows:
            fh.write(f"{_fmt(eps)},{_fmt(mu)},{n},{_fmt(slope)},{_fmt(stderr)}\n")
    print(f"valuation table written ({len(rows)} rows)")
    if not all(r.converged for r in reports):
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def _run_check(name: str, cfg: ExperimentConfig, out: str, threads: int):
    """Run one named check; returns (ok, summary_block)."""
    prob, ladder, grid, quad = cfg.problem, cfg.ladder, cfg.grid, cfg.quad
    if name == "support":
        net, reports = _solve_net_or_fail(cfg, threads)
        lin = solve_linear(prob.u0, prob.u1, None, grid, quad)
        rows = [("linear", check_support(lin, prob.support_radius, 1e-8))]
        rows += [
            (f"eps={_fmt(r.eps)}", check_support(f, prob.support_radius, 1e-8))
            for f, r in zip(net.fields, reports)
        ]
        with open(os.path.join(out, "support.csv"), "w") as fh:
            fh.write("case,max_outside,ok\n")
            for label, rep in rows:
                fh.write(f"{label},{_fmt(rep.max_outside)},{str(rep.ok).lower()}\n")
        worst = max(rep.max_outside for _, rep in rows)
        ok = all(rep.ok for _, rep in rows) and all(r.converged for r in reports)
        return ok, f"support ok={ok} max_outside={_fmt(worst)} (tol 1e-08)"
    if name == "residual":
        net, reports = _solve_net_or_fail(cfg, threads)
        lines = ["eps,residual_sup,budget,ok"]
        ok = all(r.converged for r in reports)
        for f, r in zip(net.fields, reports):
            sup = residual_sup(f, r.eps, prob)
            budget = cfg.residual_constant * (grid.dx**2 + grid.dt**2) + cfg.tol / grid.dt**2
            good = sup <= budget
            ok = ok and good
            lines.append(f"{_fmt(r.eps)},{_fmt(sup)},{_fmt(budget)},{str(good).lower()}")
        with open(os.path.join(out, "residual.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return ok, f"residual ok={ok}"
    if name == "association":
        rep = check_association(prob, ladder, grid, quad, cfg.tol, cfg.max_iter, threads=threads)
        with open(os.path.join(out, "association.csv"), "w") as fh:
            fh.write("eps,mu0_difference\n")
            for eps, mu in zip(ladder.values, rep.mu0_history):
                fh.write(f"{_fmt(eps)},{_fmt(mu)}\n")
        ok = rep.associated and rep.strong_rate_ok
        return ok, (
            f"association ok={ok} rate={_fmt(rep.fitted_rate.slope)} "
            f"(need >= {_fmt(prob.small_exponent - 0.1)})"
        )
    if name == "contraction":
        rep = check_contraction(prob, ladder, grid, quad, tol=cfg.tol, max_iter=cfg.max_iter,
                                threads=threads)
        with open(os.path.join(out, "contraction.csv"), "w") as fh:
            fh.write("order,slope_gap\n")
            for n, gap in sorted(rep.slope_gaps.items()):
                fh.write(f"{n},{_fmt(gap)}\n")
        return rep.ok, (
            f"contraction ok={rep.ok} min_gap={_fmt(min(rep.slope_gaps.values()))} "
            f"metric_ratio={_fmt(rep.metric_ratio)} kappa_bound={_fmt(rep.kappa_bound)}"
        )
    if name == "uniqueness":
        rep = check_uniqueness_surrogate(prob, ladder, grid, quad, cfg.tol, cfg.max_iter,
                                         threads=threads)
        with open(os.path.join(out, "uniqueness.csv"), "w") as fh:
            fh.write("order,mu_max\n")
            for n, mu in sorted(rep.mu_max.items()):
                fh.write(f"{n},{_fmt(mu)}\n")
        cls = rep.classification.value if rep.classification else "n/a"
        return rep.ok, f"uniqueness ok={rep.ok} class={cls} ({rep.reason})"
    if name == "oracle":
        ode = ode_check(0.5, [i * 0.01 for i in range(101)])
        wave = check_wave_oracle(prob.dim)
        with open(os.path.join(out, "oracle.csv"), "w") as fh:
            fh.write("eps,max_error\n")
            for eps, err in wave.per_eps:
                fh.write(f"{_fmt(eps)},{_fmt(err)}\n")
        ok = wave.ok and ode.max_analytic_defect < 1e-12
        return ok, (
            f"oracle ok={ok} ode_defect={_fmt(ode.max_analytic_defect)} "
            f"wave_errs={[f'{e:.2e}' for _, e in wave.per_eps]} (tol {_fmt(wave.tol)})"
        )
    raise ConfigError("checks", f"unknown check {name!r}")


def _cmd_check(cfg: ExperimentConfig, args) -> int:
    out = _outdir(cfg, args)
    names = args.check or cfg.checks
    if not names:
        raise ConfigError("checks", "no checks selected (config 'checks' or --check)")
    blocks = []
    all_ok = True
    for name in names:
        ok, block = _run_check(name, cfg, out, args.threads)
        blocks.append(block)
        print(block)
        all_ok = all_ok and ok
    _write_summary(out, blocks)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def _cmd_oracle(args) -> int:
    value = oracle_lifespan(args.eps, args.t)
    print(repr(value))
    return EXIT_OK


def _cmd_demo(args) -> int:
    results = run_suite(threads=max(args.threads, 1))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "demo_summary.txt"), "w") as fh:
            for r in results:
                fh.write(f"{'PASS' if r.ok else 'FAIL'} {r.name} {r.details} [{r.seconds:.1f}s]\n")
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("COLWAVE_THREADS")
        value = int(env) if env else 1
    if value == 0:
        value = os.cpu_count() or 1
    if value < 0:
        raise ConfigError("threads", "must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colwave",
        description="Solution nets for small-nonlinearity wave equations, with verification checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (0 = auto; env COLWAVE_THREADS as fallback)")

    for name in ("solve-linear", "solve-semilinear", "valuation"):
        add_common(sub.add_parser(name))
    p_check = sub.add_parser("check")
    add_common(p_check)
    p_check.add_argument("--check", action="append", choices=CHECK_NAMES,
                         help="check to run (repeatable; defaults to config 'checks')")
    p_oracle = sub.add_parser("oracle")
    p_oracle.add_argument("--eps", type=float, required=True)
    p_oracle.add_argument("--t", type=float, required=True)
    p_demo = sub.add_parser("demo")
    add_common(p_demo, needs_config=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "oracle":
            return _cmd_oracle(args)
        args.threads = _resolve_threads(getattr(args, "threads", None))
        if args.command == "demo":
            return _cmd_demo(args)
        cfg = load_config(args.config)
        if args.command == "solve-linear":
            return _cmd_solve_linear(cfg, args)
        if args.command == "solve-semilinear":
            return _cmd_solve_semilinear(cfg, args)
        if args.command == "valuation":
            return _cmd_valuation(cfg, args)
        if args.command == "check":
            return _cmd_check(cfg, args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (ValidationError, LifespanExceededError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except DivergenceError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except ColwaveError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
