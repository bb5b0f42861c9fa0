"""Numerical sharp-topology calculus on sampled nets.

Seminorms mu_n take the sup over the light cone K0 = {|x| <= t + r} of all
finite-difference derivatives of total order <= n.  Decay exponents nu_n
are least-squares slopes of log mu_n against log eps over the ladder; the
ultra-pseudo-seminorms are p_n = exp(-nu_n) and the truncated ultra-metric
is d(U, V) = sum_n 2^(-n-1) min(p_n(U - V), 1).

All classifications here are finite-ladder surrogates of the asymptotic
definitions: a fitted slope can only witness behaviour down to the
smallest sampled eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InsufficientDataError, UnsupportedOrderError, ValidationError
from .nets import EpsilonLadder, InitialDatum

#: Highest derivative order entering the seminorms.  Finite differences of
#: sampled fields above order 2 are noise-dominated at practical grids.
MAX_SEMINORM_ORDER = 2

#: mu values at or below this are treated as exact zeros in rate fits.
UNDERFLOW_FLOOR = 1e-300

#: Default classification thresholds on fitted decay slopes.
NEGLIGIBLE_SLOPE = 6.0
BOUNDED_SLOPE_TOL = 0.05
MODERATE_SLOPE_MAX = 20.0

#: Sup over the cone is taken on nodes with |x| <= t + r + (this many) * dx
#: to avoid aliasing at the cone boundary.
CONE_INFLATION_CELLS = 1


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform tensor grid on [0, T] x [-R, R]^dim covering the cone K0.

    ``dx`` and ``dt`` are snapped so that the extents divide evenly; the
    snapped values are what all stencils use.  ``dt <= dx`` is required so
    that the residual stencils sample adequately.
    """

    dim: int
    horizon: float
    support_radius: float
    spatial_extent: float
    dx: float
    dt: float
    margin_cells: int = 2

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError("dim", f"space dimension must be 1, 2 or 3, got {self.dim}")
        for name in ("horizon", "spatial_extent", "dx", "dt"):
            v = getattr(self, name)
            if not (v > 0.0) or not math.isfinite(v):
                raise ValidationError(name, "must be positive and finite")
        if self.support_radius < 0.0:
            raise ValidationError("support_radius", "must be nonnegative")
        if self.margin_cells < 2:
            raise ValidationError("margin_cells", "need at least 2 margin cells")
        if self.spatial_extent < self.support_radius + self.horizon - 1e-12:
            raise ValidationError(
                "spatial_extent",
                "grid must cover the cone: spatial_extent >= support_radius + horizon",
            )
        nt = max(2, round(self.horizon / self.dt))
        object.__setattr__(self, "dt", self.horizon / nt)
        half = max(1, round(self.spatial_extent / self.dx))
        object.__setattr__(self, "dx", self.spatial_extent / half)
        if self.dt > self.dx * (1.0 + 1e-9):
            raise ValidationError("dt", f"dt={self.dt} must not exceed dx={self.dx}")

    @classmethod
    def covering(
        cls,
        dim: int,
        horizon: float,
        support_radius: float,
        dx: float,
        dt: float | None = None,
        margin_cells: int = 2,
    ) -> "SpaceTimeGrid":
        """Grid whose extent covers the cone plus ``margin_cells`` cells."""
        if not (dx > 0.0) or not math.isfinite(dx):
            raise ValidationError("dx", "must be positive and finite")
        cells = math.ceil((support_radius + horizon) / dx - 1e-12) + margin_cells
        return cls(
            dim=dim,
            horizon=horizon,
            support_radius=support_radius,
            spatial_extent=cells * dx,
            dx=dx,
            dt=dx / 2.0 if dt is None else dt,
            margin_cells=margin_cells,
        )

    # -- derived geometry -------------------------------------------------
    @cached_property
    def n_time(self) -> int:
        return round(self.horizon / self.dt)

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_time + 1)

    @cached_property
    def axis(self) -> np.ndarray:
        half = round(self.spatial_extent / self.dx)
        return np.linspace(-self.spatial_extent, self.spatial_extent, 2 * half + 1)

    @cached_property
    def spatial_shape(self) -> tuple[int, ...]:
        return (len(self.axis),) * self.dim

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return (self.n_time + 1, *self.spatial_shape)

    @cached_property
    def spatial_points(self) -> np.ndarray:
        """Flattened lattice coordinates, shape (n_nodes, dim)."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def node_radius(self) -> np.ndarray:
        """Euclidean norm of every spatial node, in lattice shape."""
        return np.sqrt(np.sum(self.spatial_points**2, axis=-1)).reshape(self.spatial_shape)

    def cone_mask(self, inflation_cells: int = CONE_INFLATION_CELLS) -> np.ndarray:
        """Boolean (n_time+1, *spatial) mask of the inflated cone."""
        bound = self.times + self.support_radius + inflation_cells * self.dx + 1e-12
        expand = (slice(None),) + (None,) * self.dim
        return self.node_radius[None] <= bound[expand]

    def outside_mask(self, inflation_cells: int = 2) -> np.ndarray:
        """Nodes strictly outside the inflated cone."""
        return ~self.cone_mask(inflation_cells)

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Full space-time meshgrid (T, X[, Y[, Z]]) in grid shape."""
        return tuple(np.meshgrid(self.times, *([self.axis] * self.dim), indexing="ij"))


@dataclass(eq=False)
class Field:
    """Sampled space-time function on a grid; all samples finite."""

    grid: SpaceTimeGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != self.grid.shape:
            raise ValidationError(
                "samples", f"shape {self.samples.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("samples", "all samples must be finite")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.samples - other.samples)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.samples * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.samples)

    def _check(self, other: "Field"):
        if not isinstance(other, Field) or other.grid != self.grid:
            raise ValidationError("grid", "fields must share one grid")

    def sup_on_cone(self, inflation_cells: int = CONE_INFLATION_CELLS) -> float:
        mask = self.grid.cone_mask(inflation_cells)
        return float(np.max(np.abs(self.samples[mask]))) if mask.any() else 0.0

    def copy(self) -> "Field":
        return Field(self.grid, self.samples.copy())


def sampled_field(grid: SpaceTimeGrid, fn) -> Field:
    """Sample ``fn(T, X[, Y[, Z]])`` (vectorized) on the grid."""
    return Field(grid, np.asarray(fn(*grid.meshes()), dtype=float) * np.ones(grid.shape))


def constant_field(grid: SpaceTimeGrid, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


@dataclass(eq=False)
class Net:
    """One field per ladder entry, all sharing a single grid."""

    ladder: EpsilonLadder
    fields: tuple[Field, ...]

    def __post_init__(self):
        self.fields = tuple(self.fields)
        if len(self.fields) != len(self.ladder):
            raise ValidationError("fields", "one field per ladder entry required")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise ValidationError("fields", "all fields must share one grid")

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.fields[0].grid

    def __sub__(self, other: "Net") -> "Net":
        self._check(other)
        return Net(self.ladder, tuple(a - b for a, b in zip(self.fields, other.fields)))

    def __add__(self, other: "Net") -> "Net":
        self._check(other)
        return Net(self.ladder, tuple(a + b for a, b in zip(self.fields, other.fields)))

    def __mul__(self, other: "Net") -> "Net":
        self._check(other)
        return Net(
            self.ladder,
            tuple(Field(a.grid, a.samples * b.samples) for a, b in zip(self.fields, other.fields)),
        )

    def _check(self, other: "Net"):
        if not isinstance(other, Net):
            raise ValidationError("net", "expected a Net")
        if other.ladder != self.ladder or other.grid != self.grid:
            raise ValidationError("net", "nets must share ladder and grid")


def power_net(grid: SpaceTimeGrid, ladder: EpsilonLadder, exponent: float, pattern=None) -> Net:
    """Net with entries ``eps_j**exponent * pattern`` (pattern defaults to 1)."""
    base = np.ones(grid.shape) if pattern is None else np.asarray(pattern, dtype=float) * np.ones(grid.shape)
    fields = tuple(Field(grid, float(e**exponent) * base) for e in ladder.values)
    return Net(ladder, fields)


@dataclass(frozen=True)
class ValuationEstimate:
    """Fitted decay exponent of a seminorm along the ladder.

    ``slope == inf`` is the sentinel for a numerically negligible net
    (every mu at or below the underflow floor); then ``n_points == 0``.
    """

    slope: float
    intercept: float
    stderr: float
    n_points: int

    @property
    def is_negligible_sentinel(self) -> bool:
        return math.isinf(self.slope)


def fit_decay_exponent(
    eps_values: np.ndarray, mu_values, floor: float = UNDERFLOW_FLOOR
) -> ValuationEstimate:
    """Least-squares slope of log mu against log eps.

    Entries at or below ``floor`` are excluded; if none survive the net is
    reported as negligible via the +inf sentinel.
    """
    eps = np.asarray(eps_values, dtype=float)
    mu = np.asarray(mu_values, dtype=float)
    usable = mu > floor
    if not usable.any():
        return ValuationEstimate(math.inf, -math.inf, 0.0, 0)
    if usable.sum() < 3:
        raise InsufficientDataError(
            f"need at least 3 ladder points above the floor, got {int(usable.sum())}"
        )
    x = np.log(eps[usable])
    y = np.log(mu[usable])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ y / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    m = len(x)
    var = float(resid @ resid) / (m - 2) if m > 2 else 0.0
    stderr = math.sqrt(max(var, 0.0) / sxx)
    return ValuationEstimate(slope, intercept, stderr, m)


def _derivative_stack(field: Field, n: int):
    """All FD partial-derivative arrays of total order <= n."""
    spacings = (field.grid.dt,) + (field.grid.dx,) * field.grid.dim
    axes = range(field.grid.dim + 1)
    yield field.samples
    if n == 0:
        return
    firsts = [np.gradient(field.samples, spacings[a], axis=a, edge_order=2) for a in axes]
    yield from firsts
    if n == 1:
        return
    for i in axes:
        for j in axes:
            if j < i:
                continue
            yield np.gradient(firsts[i], spacings[j], axis=j, edge_order=2)


def seminorm(field: Field, n: int) -> float:
    """Sup over the cone of all FD derivatives of total order <= n.

    Centered differences inside, second-order one-sided at the grid
    boundaries; order 0 is the plain sup.
    """
    if not (0 <= n <= MAX_SEMINORM_ORDER):
        raise UnsupportedOrderError(
            f"seminorm order must lie in [0, {MAX_SEMINORM_ORDER}], got {n}"
        )
    mask = field.grid.cone_mask(CONE_INFLATION_CELLS)
    best = 0.0
    for arr in _derivative_stack(field, n):
        best = max(best, float(np.max(np.abs(arr[mask]))))
    return best


def valuation(net: Net, n: int) -> ValuationEstimate:
    """Fitted decay exponent of mu_n along the ladder."""
    mus = [seminorm(f, n) for f in net.fields]
    return fit_decay_exponent(net.ladder.values, mus)


def ultra_pseudo_seminorm(net_u: Net, net_v: Net, n: int) -> float:
    """p_n(U - V) = exp(-nu_n(U - V)); 0 for the negligible sentinel."""
    est = valuation(net_u - net_v, n)
    if est.is_negligible_sentinel:
        return 0.0
    if est.slope < -700.0:  # exp would overflow; the net is wildly non-moderate
        return math.inf
    return math.exp(-est.slope)


def ultra_metric(net_u: Net, net_v: Net, n_terms: int) -> float:
    """Truncated ultra-metric sum_{n<n_terms} 2^(-n-1) min(p_n, 1)."""
    if not (1 <= n_terms <= MAX_SEMINORM_ORDER + 1):
        raise UnsupportedOrderError(
            f"n_terms must lie in [1, {MAX_SEMINORM_ORDER + 1}], got {n_terms}"
        )
    total = 0.0
    for n in range(n_terms):
        total += 2.0 ** (-n - 1) * min(ultra_pseudo_seminorm(net_u, net_v, n), 1.0)
    return total


class NetClass(Enum):
    NEGLIGIBLE_AT_TESTED_ORDER = "negligible_at_tested_order"
    BOUNDED_TYPE = "bounded_type"
    MODERATE = "moderate"
    NOT_MODERATE = "not_moderate"


def classify(
    net: Net,
    *,
    negligible_slope: float = NEGLIGIBLE_SLOPE,
    bounded_tol: float = BOUNDED_SLOPE_TOL,
    moderate_bound: float = MODERATE_SLOPE_MAX,
) -> NetClass:
    """Finite-ladder surrogate of negligible / bounded-type / moderate.

    The true definitions quantify over all exponents and all eps; here a
    net counts as negligible when every fitted slope at the tested orders
    is at least ``negligible_slope``, and analogously for the others.
    """
    slopes = [valuation(net, n).slope for n in range(MAX_SEMINORM_ORDER + 1)]
    if all(s >= negligible_slope for s in slopes):
        return NetClass.NEGLIGIBLE_AT_TESTED_ORDER
    if all(s >= -bounded_tol for s in slopes):
        return NetClass.BOUNDED_TYPE
    if all(s >= -moderate_bound for s in slopes):
        return NetClass.MODERATE
    return NetClass.NOT_MODERATE


def datum_seminorm(datum: InitialDatum, dim: int, n: int) -> float:
    """Sup over the support ball of closed-form datum derivatives <= n.

    Sampled sup: lattice over the ball plus dense radial lines, which is
    ample for the radial profiles used here.
    """
    if not (0 <= n <= MAX_SEMINORM_ORDER):
        raise UnsupportedOrderError(
            f"datum seminorm order must lie in [0, {MAX_SEMINORM_ORDER}], got {n}"
        )
    r = datum.outer_radius
    if datum.kind == "zero" or r <= 0.0:
        return 0.0
    axis = np.linspace(-r, r, 49)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = pts[np.sqrt(np.sum(pts**2, axis=-1)) <= r]
    line = np.zeros((1024, dim))
    line[:, 0] = np.linspace(-r, r, 1024)
    diag = np.linspace(-r, r, 1024)[:, None] * (np.ones(dim) / math.sqrt(dim))
    pts = np.concatenate([pts, line, diag], axis=0)
    best = float(np.max(np.abs(datum.value(pts))))
    if n >= 1:
        best = max(best, float(np.max(np.abs(datum.gradient(pts)))))
    if n >= 2:
        best = max(best, float(np.max(np.abs(datum.hessian(pts)))))
    return best


def valuation_table(net: Net, orders=(0, 1, 2)) -> list[tuple[float, float, int, float, float]]:
    """Rows (eps, mu_n, n, fitted slope, stderr) for CSV export."""
    rows = []
    for n in orders:
        mus = [seminorm(f, n) for f in net.fields]
        est = fit_decay_exponent(net.ladder.values, mus)
        for eps, mu in zip(net.ladder.values, mus):
            rows.append((float(eps), float(mu), int(n), est.slope, est.stderr))
    return rows
