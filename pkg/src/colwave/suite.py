"""Preset verification suite: one self-contained check per headline claim.

Each check returns a SuiteResult; ``run_suite`` prints one pass/fail line
per check.  The presets are sized so the whole suite runs in minutes on a
laptop while every tolerance stays fixed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .linwave import QuadratureSpec, check_support, linear_value, solve_linear
from .nets import InitialDatum, NonlinearitySpec, Problem, ZERO_DATUM, make_ladder
from .seminorms import (
    Field,
    Net,
    NetClass,
    SpaceTimeGrid,
    classify,
    fit_decay_exponent,
    power_net,
    ultra_metric,
    valuation,
)
from .semilinear import picard_solve, residual_sup, solve_net
from .verify import (
    check_association,
    check_contraction,
    check_wave_oracle,
    oracle_lifespan,
)

#: Residual bound constant: sup residual <= RESIDUAL_C * (dx^2 + dt^2) + tol/dt^2
#: for the preset problems below.  The constant tracks the fourth
#: derivatives of the preset data (measured C_eff plateaus near 570 in 1D
#: and 370 in 3D); fixed here with at least 2x headroom.
RESIDUAL_C = 1200.0

_QUAD_1D = QuadratureSpec(angular_points=8, polar_points=10, time_points_per_dt=1)


@dataclass
class SuiteResult:
    name: str
    ok: bool
    details: str
    seconds: float


def _bump_problem(dim: int, b: float = 1.0, radius: float = 0.5, horizon: float = 1.0) -> Problem:
    return Problem(
        dim=dim,
        horizon=horizon,
        support_radius=radius,
        u0=InitialDatum("gaussian_bump", outer_radius=radius, amplitude=1.0),
        u1=InitialDatum("zero"),
        f=NonlinearitySpec("sine"),
        small_exponent=b,
    )


def _grid_1d(problem: Problem, dx: float = 0.02) -> SpaceTimeGrid:
    return SpaceTimeGrid.covering(1, problem.horizon, problem.support_radius, dx=dx, dt=dx / 2)


# ---------------------------------------------------------------------------
# 1. linear kernels
# ---------------------------------------------------------------------------

def check_linear_kernels() -> SuiteResult:
    """Translation-average identity in 1D; plateau means u(t,0)=t in 1D/2D/3D."""
    t0 = time.time()
    quad = QuadratureSpec(angular_points=16, polar_points=12)
    g = InitialDatum("gaussian_bump", outer_radius=0.5, amplitude=1.0)
    grid = SpaceTimeGrid.covering(1, 0.5, 0.5, dx=0.02, dt=0.01)
    field = solve_linear(g, ZERO_DATUM, None, grid, quad)
    tmesh, xmesh = grid.meshes()
    exact = 0.5 * (g.value((xmesh + tmesh)[..., None]) + g.value((xmesh - tmesh)[..., None]))
    err_translate = float(np.max(np.abs(field.samples - exact)))

    plateau = InitialDatum("plateau_bump", outer_radius=0.8, inner_radius=0.6, amplitude=1.0)
    err_mean = 0.0
    for dim in (1, 2, 3):
        for t in (0.2, 0.45):
            v = linear_value(ZERO_DATUM, plateau, t, np.zeros(dim), quad)
            err_mean = max(err_mean, abs(v - t))
    elapsed = time.time() - t0
    ok = err_translate <= 1e-8 and err_mean <= 1e-6 and elapsed < 30.0
    return SuiteResult(
        "linear_kernels",
        ok,
        f"translate_err={err_translate:.2e} (tol 1e-08), mean_err={err_mean:.2e} (tol 1e-06)",
        elapsed,
    )


# ---------------------------------------------------------------------------
# 2. cone support
# ---------------------------------------------------------------------------

def check_cone_support(threads: int = 1) -> SuiteResult:
    """Linear and semilinear presets vanish outside the 2-cell inflated cone."""
    t0 = time.time()
    tol = 1e-8
    worst = 0.0
    labels = []

    prob1 = _bump_problem(1)
    grid1 = _grid_1d(prob1)
    lin1 = solve_linear(prob1.u0, prob1.u1, None, grid1, _QUAD_1D)
    worst = max(worst, check_support(lin1, prob1.support_radius, tol).max_outside)
    labels.append("1d-linear")
    net1, reports1 = solve_net(prob1, make_ladder(0.5, 0.5, 8), grid1, _QUAD_1D, threads=threads)
    conv = all(r.converged for r in reports1)
    for f in net1.fields:
        worst = max(worst, check_support(f, prob1.support_radius, tol).max_outside)
    labels.append("1d-semilinear-net")

    quad23 = QuadratureSpec(angular_points=12, polar_points=8)
    for dim, dx in ((2, 0.08), (3, 0.12)):
        prob = _bump_problem(dim, radius=0.4, horizon=0.4)
        grid = SpaceTimeGrid.covering(dim, prob.horizon, prob.support_radius, dx=dx, dt=dx / 2)
        field, rep = picard_solve(prob, 0.25, grid, quad23)
        conv = conv and rep.converged
        worst = max(worst, check_support(field, prob.support_radius, tol).max_outside)
        labels.append(f"{dim}d-semilinear")

    elapsed = time.time() - t0
    ok = conv and worst <= tol
    return SuiteResult(
        "cone_support",
        ok,
        f"max_outside={worst:.2e} (tol 1e-08) over {', '.join(labels)}",
        elapsed,
    )


# ---------------------------------------------------------------------------
# 3. residual and refinement order
# ---------------------------------------------------------------------------

def _residual_problem(dim: int) -> Problem:
    # wide plateau transition keeps the data's fourth derivatives moderate,
    # so the refinement study reaches the second-order regime at these dx
    if dim == 1:
        datum = InitialDatum("plateau_bump", outer_radius=1.2, inner_radius=0.2, amplitude=1.0)
        horizon = 0.5
    else:
        # in 3D the imploding plateau edge focuses at the origin; an even
        # wider transition and half amplitude keep the focus mild
        datum = InitialDatum("plateau_bump", outer_radius=1.3, inner_radius=0.1, amplitude=0.5)
        horizon = 0.4
    return Problem(
        dim=dim,
        horizon=horizon,
        support_radius=datum.outer_radius,
        u0=datum,
        u1=InitialDatum("zero"),
        f=NonlinearitySpec("sine"),
        small_exponent=1.0,
    )


def check_residual_convergence(threads: int = 1) -> SuiteResult:
    """Wave-operator defect within budget; second-order under 1D refinement."""
    t0 = time.time()
    tol = 1e-12
    eps = 0.25
    prob = _residual_problem(1)
    sups = []
    spacings = []
    bound_ok = True
    for dx in (0.02, 0.01, 0.005):
        grid = SpaceTimeGrid.covering(1, prob.horizon, prob.support_radius, dx=dx, dt=dx / 2)
        field, rep = picard_solve(prob, eps, grid, _QUAD_1D, tol=tol)
        if not rep.converged:
            return SuiteResult("residual_convergence", False, f"1D solve at dx={dx} failed", 0.0)
        sup = residual_sup(field, eps, prob)
        budget = RESIDUAL_C * (grid.dx**2 + grid.dt**2) + tol / grid.dt**2
        bound_ok = bound_ok and sup <= budget
        sups.append(sup)
        spacings.append(grid.dx)
    order = fit_decay_exponent(np.array(spacings), sups).slope

    prob3 = _residual_problem(3)
    grid3 = SpaceTimeGrid.covering(3, prob3.horizon, prob3.support_radius, dx=0.12, dt=0.06)
    quad3 = QuadratureSpec(angular_points=12, polar_points=8)
    field3, rep3 = picard_solve(prob3, eps, grid3, quad3, tol=tol)
    sup3 = residual_sup(field3, eps, prob3)
    budget3 = RESIDUAL_C * (grid3.dx**2 + grid3.dt**2) + tol / grid3.dt**2
    bound_ok = bound_ok and rep3.converged and sup3 <= budget3

    elapsed = time.time() - t0
    ok = bound_ok and order >= 1.8 and elapsed < 300.0
    return SuiteResult(
        "residual_convergence",
        ok,
        f"order={order:.2f} (need >=1.8), 1d_sups={[f'{s:.2e}' for s in sups]}, "
        f"3d_sup={sup3:.2e} (budget {budget3:.2e})",
        elapsed,
    )


# ---------------------------------------------------------------------------
# 4. blow-up oracle
# ---------------------------------------------------------------------------

def check_lifespan_oracle() -> SuiteResult:
    """ODE oracle value and the 1/(1 - eps t) wave solution in 1D and 3D."""
    t0 = time.time()
    ode_exact = oracle_lifespan(0.5, 1.0) == 2.0
    rep1 = check_wave_oracle(1)
    rep3 = check_wave_oracle(3)
    elapsed = time.time() - t0
    ok = ode_exact and rep1.ok and rep3.ok
    fmt = lambda r: ", ".join(f"{e:g}:{v:.1e}" for e, v in r.per_eps)
    return SuiteResult(
        "lifespan_oracle",
        ok,
        f"ode(0.5,1)=2.0 exact: {ode_exact}; 1d errs {fmt(rep1)}; 3d errs {fmt(rep3)} (tol 1e-04)",
        elapsed,
    )


# ---------------------------------------------------------------------------
# 5. contraction factor
# ---------------------------------------------------------------------------

def check_contraction_factor(threads: int = 1) -> SuiteResult:
    """Valuation gap >= b - 0.1 and metric ratio <= exp(-(b - 0.1)) for b in {0.5, 1}."""
    t0 = time.time()
    ladder = make_ladder(0.5, 0.5, 8)
    details = []
    ok = True
    for b in (0.5, 1.0):
        prob = _bump_problem(1, b=b)
        rep = check_contraction(prob, ladder, _grid_1d(prob), _QUAD_1D, threads=threads)
        gap = min(rep.slope_gaps.values())
        details.append(f"b={b}: gap={gap:.2f}, ratio={rep.metric_ratio:.3f}")
        ok = ok and rep.ok
    elapsed = time.time() - t0
    return SuiteResult("contraction_factor", ok, "; ".join(details), elapsed)


# ---------------------------------------------------------------------------
# 6. association with the linear solution
# ---------------------------------------------------------------------------

def check_linear_association(threads: int = 1) -> SuiteResult:
    """mu_0 difference decay rate >= b - 0.1 for b in {0.5, 1, 2}."""
    t0 = time.time()
    ladder = make_ladder(0.5, 0.5, 8)
    details = []
    ok = True
    for b in (0.5, 1.0, 2.0):
        prob = _bump_problem(1, b=b)
        rep = check_association(prob, ladder, _grid_1d(prob), _QUAD_1D, threads=threads)
        details.append(f"b={b}: rate={rep.fitted_rate.slope:.3f}")
        ok = ok and rep.associated and rep.strong_rate_ok
    elapsed = time.time() - t0
    return SuiteResult("linear_association", ok, "; ".join(details), elapsed)


# ---------------------------------------------------------------------------
# 7. ultra-metric calculus
# ---------------------------------------------------------------------------

def _tiny_grid() -> SpaceTimeGrid:
    return SpaceTimeGrid(
        dim=1, horizon=0.1, support_radius=0.2, spatial_extent=0.5, dx=0.05, dt=0.05
    )


def check_ultrametric_calculus() -> SuiteResult:
    """Metric axioms on random triples; exact fits; planted classifications."""
    t0 = time.time()
    grid = _tiny_grid()
    ladder = make_ladder(0.5, 0.5, 8)
    rng = np.random.default_rng(20240811)

    # planted exponents recovered by the regression
    fit_err = 0.0
    for a in (0.0, 1.0, 2.5, 10.0):
        est = valuation(power_net(grid, ladder, a), 0)
        fit_err = max(fit_err, abs(est.slope - a))

    # planted classifications
    cls_ok = (
        classify(power_net(grid, ladder, 10.0)) is NetClass.NEGLIGIBLE_AT_TESTED_ORDER
        and classify(power_net(grid, ladder, 0.0)) is NetClass.BOUNDED_TYPE
        and classify(power_net(grid, ladder, -1.0)) is NetClass.MODERATE
    )

    # metric axioms on random triples: U = W + c eps^a1 phi1, V = W + c eps^a2 phi2
    # with phi2 the mirror image of phi1 (disjoint supports, symmetric cone
    # mask), so every pairwise difference is an exact power law with one
    # shared seminorm constant and the isoceles structure of the
    # ultra-metric must be reproduced by the fitted calculus.
    phi1 = np.zeros(grid.shape)
    phi1[:, 2:8] = np.array([0.4, 0.8, 1.0, 0.9, 0.6, 0.2])[None, :]
    phi2 = phi1[:, ::-1].copy()
    axiom_violation = 0.0
    for _ in range(50):
        a1, a2 = rng.uniform(0.0, 6.0, size=2)
        c = rng.uniform(0.5, 2.0)
        base = rng.uniform(-1.0, 1.0) * np.ones(grid.shape)
        w_net = power_net(grid, ladder, rng.uniform(0.0, 2.0), pattern=base)
        u_net = Net(
            ladder,
            tuple(
                Field(grid, f.samples + c * float(e) ** a1 * phi1)
                for f, e in zip(w_net.fields, ladder.values)
            ),
        )
        v_net = Net(
            ladder,
            tuple(
                Field(grid, f.samples + c * float(e) ** a2 * phi2)
                for f, e in zip(w_net.fields, ladder.values)
            ),
        )
        triples = ((u_net, v_net, w_net), (u_net, w_net, v_net), (v_net, w_net, u_net))
        for x_net, y_net, z_net in triples:
            dxy = ultra_metric(x_net, y_net, 3)
            dyx = ultra_metric(y_net, x_net, 3)
            axiom_violation = max(axiom_violation, abs(dxy - dyx))
            dxz = ultra_metric(x_net, z_net, 3)
            dzy = ultra_metric(z_net, y_net, 3)
            axiom_violation = max(axiom_violation, dxy - max(dxz, dzy))
        axiom_violation = max(axiom_violation, ultra_metric(u_net, u_net, 3))

    elapsed = time.time() - t0
    ok = fit_err <= 1e-10 and cls_ok and axiom_violation <= 1e-9
    return SuiteResult(
        "ultrametric_calculus",
        ok,
        f"fit_err={fit_err:.1e} (tol 1e-10), classifications={'ok' if cls_ok else 'BAD'}, "
        f"axiom_violation={axiom_violation:.1e}",
        elapsed,
    )


# ---------------------------------------------------------------------------
# 8. Picard increment scaling
# ---------------------------------------------------------------------------

def check_picard_scaling(threads: int = 1) -> SuiteResult:
    """Successive-increment ratios scale like eps (log-log slope 1 +/- 0.15)."""
    t0 = time.time()
    prob = _bump_problem(1, b=1.0)
    ladder = make_ladder(0.5, 0.5, 8)
    _, reports = solve_net(prob, ladder, _grid_1d(prob), _QUAD_1D, threads=threads)
    eps_used = []
    ratios = []
    for rep in reports:
        if rep.converged and len(rep.increment_history) >= 2 and rep.increment_history[0] > 0:
            eps_used.append(rep.eps)
            ratios.append(rep.increment_history[1] / rep.increment_history[0])
    if len(ratios) < 3:
        return SuiteResult("picard_scaling", False, "too few usable increment ratios", 0.0)
    slope = fit_decay_exponent(np.array(eps_used), ratios).slope
    elapsed = time.time() - t0
    ok = abs(slope - 1.0) <= 0.15
    return SuiteResult(
        "picard_scaling", ok, f"ratio slope={slope:.3f} (need 1 +/- 0.15)", elapsed
    )


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

CHECKS = {
    "linear_kernels": check_linear_kernels,
    "cone_support": check_cone_support,
    "residual_convergence": check_residual_convergence,
    "lifespan_oracle": check_lifespan_oracle,
    "contraction_factor": check_contraction_factor,
    "linear_association": check_linear_association,
    "ultrametric_calculus": check_ultrametric_calculus,
    "picard_scaling": check_picard_scaling,
}


def run_suite(names=None, threads: int = 1, quiet: bool = False) -> list[SuiteResult]:
    """Run the preset checks (all by default), printing one line each."""
    selected = list(CHECKS) if names is None else list(names)
    results = []
    for name in selected:
        fn = CHECKS[name]
        try:
            result = fn(threads=threads) if "threads" in fn.__code__.co_varnames else fn()
        except Exception as exc:  # a crashed check is a failed check
            result = SuiteResult(name, False, f"error: {exc}", 0.0)
        results.append(result)
        if not quiet:
            state = "PASS" if result.ok else "FAIL"
            print(f"{state}  {result.name:<24} {result.details}  [{result.seconds:.1f}s]")
    return results
