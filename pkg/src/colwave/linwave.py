"""Classical solution operator of the linear wave equation in d = 1, 2, 3.

The data part uses the translated forms of the d'Alembert, Poisson and
Kirchhoff formulas; the time derivative of the position-data term is
expanded under the integral using closed-form datum gradients, so no
numerical time differentiation of means is ever performed.  The singular
2D disk weight 1/sqrt(1-|y|^2) is removed by the substitution rho =
sin(phi), after which both angular directions carry smooth integrands
(Gauss-Legendre in phi, uniform trapezoid in theta; Gauss-Legendre in
cos(theta) times uniform azimuth on the 3D sphere).

The Duhamel source integral is a composite trapezoid over grid time
levels refined by ``time_points_per_dt``; the sampled source is read off
the grid by multilinear interpolation and treated as zero outside the
lattice box.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .nets import InitialDatum
from .seminorms import Field, SpaceTimeGrid, datum_seminorm, seminorm

#: Upper bound on quadrature points evaluated in one numpy batch.
_CHUNK = 1 << 21

_BINARY_MAGIC = b"CWF1"


@dataclass(frozen=True)
class QuadratureSpec:
    """Point counts for the dimension-specific kernels.

    ``angular_points``: theta count (2D) / azimuth count (3D).
    ``polar_points``: Gauss-Legendre count in the phi-substitution (2D),
    in cos(theta) (3D), and per panel for 1D line integrals.
    ``time_points_per_dt``: refinement of the Duhamel time trapezoid.
    """

    angular_points: int = 16
    polar_points: int = 12
    time_points_per_dt: int = 1

    def __post_init__(self):
        if self.angular_points < 4:
            raise ValidationError("angular_points", "need at least 4 points")
        if self.angular_points % 2 != 0:
            raise ValidationError("angular_points", "must be even")
        if self.polar_points < 4:
            raise ValidationError("polar_points", "need at least 4 points")
        if self.time_points_per_dt < 1:
            raise ValidationError("time_points_per_dt", "must be >= 1")


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

def _gauss_panels(a: float, b: float, nodes: int, panels: int):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1] - edges[0]) / 2.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    xs = (mids[:, None] + half * x0[None, :]).ravel()
    ws = np.tile(w0 * half, panels)
    return xs, ws


def _mean_rule(dim: int, quad: QuadratureSpec):
    """Directions and weights for the normalized sphere/disk means.

    Returns (scaled_dirs, weights) with sum(weights) == 1 such that the
    mean of g over the radius-t surface/disk is
    ``sum_q weights[q] * g(x - t * scaled_dirs[q])``.
    """
    theta = np.arange(quad.angular_points) * (2.0 * math.pi / quad.angular_points)
    if dim == 3:
        c, wc = np.polynomial.legendre.leggauss(quad.polar_points)
        s = np.sqrt(1.0 - c**2)
        dirs = np.stack(
            [
                np.outer(s, np.cos(theta)).ravel(),
                np.outer(s, np.sin(theta)).ravel(),
                np.repeat(c, quad.angular_points),
            ],
            axis=-1,
        )
        weights = np.repeat(wc / 2.0, quad.angular_points) / quad.angular_points
        return dirs, weights
    if dim == 2:
        phi, wp = _gauss_panels(0.0, math.pi / 2.0, quad.polar_points, 1)
        sp = np.sin(phi)
        dirs = np.stack(
            [
                np.outer(sp, np.cos(theta)).ravel(),
                np.outer(sp, np.sin(theta)).ravel(),
            ],
            axis=-1,
        )
        weights = np.repeat(wp * sp, quad.angular_points) / quad.angular_points
        return dirs, weights
    raise ValidationError("dim", f"mean rule defined for dim 2 or 3, got {dim}")


def _feature_scale(datum: InitialDatum) -> float:
    """Finest length scale of the datum profile, for 1D panel sizing."""
    if datum.kind == "plateau_bump":
        return datum.outer_radius - datum.inner_radius
    if datum.kind == "gaussian_bump":
        return datum.outer_radius / 2.0
    return math.inf


def _line_rule(t: float, datum: InitialDatum, quad: QuadratureSpec):
    """Composite Gauss-Legendre rule on [-t, t] resolving the datum profile."""
    width = _feature_scale(datum) / 2.0
    panels = 1 if not math.isfinite(width) else min(512, max(1, math.ceil(2.0 * t / width)))
    return _gauss_panels(-t, t, quad.polar_points, panels)


# ---------------------------------------------------------------------------
# sampled-field interpolation
# ---------------------------------------------------------------------------

def _interp_spatial(values: np.ndarray, grid: SpaceTimeGrid, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of one spatial slice; 0 outside the box."""
    n = len(grid.axis)
    f = (pts + grid.spatial_extent) / grid.dx
    inside = np.all((f >= 0.0) & (f <= n - 1.0), axis=-1)
    f = np.clip(f, 0.0, n - 1.0)
    i = np.minimum(f.astype(np.int64), n - 2)
    w = f - i
    v = values.ravel()
    if grid.dim == 1:
        base = i[:, 0]
        out = v[base] * (1.0 - w[:, 0]) + v[base + 1] * w[:, 0]
    elif grid.dim == 2:
        base = i[:, 0] * n + i[:, 1]
        w0, w1 = w[:, 0], w[:, 1]
        lo = v[base] * (1 - w1) + v[base + 1] * w1
        hi = v[base + n] * (1 - w1) + v[base + n + 1] * w1
        out = lo * (1 - w0) + hi * w0
    else:
        base = (i[:, 0] * n + i[:, 1]) * n + i[:, 2]
        w0, w1, w2 = w[:, 0], w[:, 1], w[:, 2]
        n2 = n * n
        c00 = v[base] * (1 - w2) + v[base + 1] * w2
        c01 = v[base + n] * (1 - w2) + v[base + n + 1] * w2
        c10 = v[base + n2] * (1 - w2) + v[base + n2 + 1] * w2
        c11 = v[base + n2 + n] * (1 - w2) + v[base + n2 + n + 1] * w2
        out = (c00 * (1 - w1) + c01 * w1) * (1 - w0) + (c10 * (1 - w1) + c11 * w1) * w0
    return np.where(inside, out, 0.0)


# ---------------------------------------------------------------------------
# data terms
# ---------------------------------------------------------------------------

def _data_terms_at(
    u0: InitialDatum,
    u1: InitialDatum,
    dim: int,
    t: float,
    pts: np.ndarray,
    quad: QuadratureSpec,
) -> np.ndarray:
    """Homogeneous part of the solution at time t for targets pts (M, dim)."""
    m = pts.shape[0]
    out = np.zeros(m)
    if t == 0.0:
        if u0.kind != "zero":
            out += u0.value(pts)
        return out
    if dim == 1:
        if u0.kind != "zero":
            out += 0.5 * (u0.value(pts + t) + u0.value(pts - t))
        if u1.kind != "zero":
            offs, w = _line_rule(t, u1, quad)
            chunk = max(1, _CHUNK // len(offs))
            for lo in range(0, m, chunk):
                sub = pts[lo : lo + chunk]
                vals = u1.value(sub[:, None, :] + offs[None, :, None])
                out[lo : lo + chunk] += 0.5 * (vals @ w)
        return out
    sd, wq = _mean_rule(dim, quad)
    chunk = max(1, _CHUNK // len(wq))
    for lo in range(0, m, chunk):
        sub = pts[lo : lo + chunk]
        q = sub[:, None, :] - t * sd[None, :, :]
        acc = np.zeros(len(sub))
        if u0.kind != "zero":
            v0 = u0.value(q)
            g0 = u0.gradient(q)
            acc += (v0 - t * np.einsum("mqd,qd->mq", g0, sd)) @ wq
        if u1.kind != "zero":
            acc += t * (u1.value(q) @ wq)
        out[lo : lo + chunk] = acc
    return out


# ---------------------------------------------------------------------------
# Duhamel source integral
# ---------------------------------------------------------------------------

class _DuhamelKernel:
    """Evaluates the source part of the solution for a sampled source.

    Precomputes per-level support radii (used to skip target/radius pairs
    whose backward sphere provably misses the source) and, in 1D, the
    per-level cumulative integrals that make the inner line integral of
    the piecewise-linear interpolant exact.
    """

    def __init__(self, h: Field, quad: QuadratureSpec):
        self.h = h
        self.grid = h.grid
        self.quad = quad
        grid = self.grid
        radius = grid.node_radius
        rh = np.full(grid.n_time + 1, -np.inf)
        for mm in range(grid.n_time + 1):
            nz = np.abs(h.samples[mm]) > 0.0
            if nz.any():
                rh[mm] = float(np.max(radius[nz]))
        self.level_radius = rh
        self.is_zero = not np.isfinite(rh).any()
        if grid.dim == 1:
            vals = h.samples  # (nt+1, nx)
            step = 0.5 * grid.dx * (vals[:, :-1] + vals[:, 1:])
            cum = np.zeros_like(vals)
            np.cumsum(step, axis=1, out=cum[:, 1:])
            self._cum = cum
        else:
            self._dirs, self._weights = _mean_rule(grid.dim, quad)

    # -- 1D exact line integral of the interpolant -----------------------
    def _cumint(self, level: int, y: np.ndarray) -> np.ndarray:
        grid = self.grid
        n = len(grid.axis)
        vals = self.h.samples[level]
        cum = self._cum[level]
        yc = np.clip(y, -grid.spatial_extent, grid.spatial_extent)
        f = (yc + grid.spatial_extent) / grid.dx
        i = np.minimum(f.astype(np.int64), n - 2)
        delta = yc - grid.axis[i]
        out = cum[i] + vals[i] * delta + (vals[i + 1] - vals[i]) * delta**2 / (2.0 * grid.dx)
        # outside the box the source is zero: clamp to the boundary value
        out = np.where(y < -grid.spatial_extent, 0.0, out)
        out = np.where(y > grid.spatial_extent, cum[-1], out)
        return out

    def _line_integral(self, level: int, x: np.ndarray, s: float) -> np.ndarray:
        return self._cumint(level, x + s) - self._cumint(level, x - s)

    def _mean(self, level: int, pts: np.ndarray, s: float) -> np.ndarray:
        q = pts[:, None, :] - s * self._dirs[None, :, :]
        flat = q.reshape(-1, self.grid.dim)
        vals = _interp_spatial(self.h.samples[level], self.grid, flat)
        return vals.reshape(len(pts), -1) @ self._weights

    def _slice_term(self, tq: float, pts: np.ndarray, s: float) -> np.ndarray:
        """Inner integral at source time tq and radius s (time-interpolated)."""
        grid = self.grid
        g = tq / grid.dt
        m = min(int(math.floor(g + 1e-9)), grid.n_time)
        beta = g - m
        if beta < 1e-9 or m >= grid.n_time:
            beta = 0.0
        if grid.dim == 1:
            x = pts[:, 0]
            val = self._line_integral(m, x, s)
            if beta > 0.0:
                val = (1.0 - beta) * val + beta * self._line_integral(m + 1, x, s)
            return 0.5 * val
        val = self._mean(m, pts, s)
        if beta > 0.0:
            val = (1.0 - beta) * val + beta * self._mean(m + 1, pts, s)
        return s * val

    def _reach(self, tq: float) -> float:
        """Support radius of the interpolated source at time tq."""
        grid = self.grid
        g = tq / grid.dt
        m = min(int(math.floor(g + 1e-9)), grid.n_time)
        r = self.level_radius[m]
        if g - m > 1e-9 and m < grid.n_time:
            r = max(r, self.level_radius[m + 1])
        return r + grid.dx  # one interpolation cell

    def at(self, t: float, pts: np.ndarray, radii: np.ndarray | None = None) -> np.ndarray:
        """Source contribution at time t for targets pts (M, dim)."""
        out = np.zeros(len(pts))
        if self.is_zero or t <= 0.0:
            return out
        ds_target = self.grid.dt / self.quad.time_points_per_dt
        k_count = max(1, math.ceil(t / ds_target - 1e-9))
        ds = t / k_count
        if radii is None:
            radii = np.sqrt(np.sum(pts * pts, axis=-1))
        chunk = max(1, _CHUNK // (1 if self.grid.dim == 1 else len(self._weights)))
        for k in range(1, k_count + 1):
            s = k * ds
            tq = t - s
            reach = self._reach(tq)
            if not math.isfinite(reach):
                continue
            w = ds * (0.5 if k == k_count else 1.0)
            mask = radii <= s + reach + 1e-12
            if not mask.any():
                continue
            idx = np.nonzero(mask)[0]
            for lo in range(0, len(idx), chunk):
                sel = idx[lo : lo + chunk]
                out[sel] += w * self._slice_term(tq, pts[sel], s)
        return out


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def solve_linear(
    u0: InitialDatum,
    u1: InitialDatum,
    h: Field | None,
    grid: SpaceTimeGrid,
    quad: QuadratureSpec,
) -> Field:
    """Sample the solution of the linear wave problem on the grid.

    ``h`` is the sampled right-hand side (or None for the homogeneous
    problem).  The returned field reproduces the ``u0`` samples exactly
    at t = 0.
    """
    if h is not None and h.grid != grid:
        raise ValidationError("h", "source must be sampled on the target grid")
    pts = grid.spatial_points
    out = np.zeros(grid.shape)
    have_data = u0.kind != "zero" or u1.kind != "zero"
    if have_data:
        for n in range(grid.n_time + 1):
            out[n] = _data_terms_at(u0, u1, grid.dim, float(grid.times[n]), pts, quad).reshape(
                grid.spatial_shape
            )
    if h is not None:
        kernel = _DuhamelKernel(h, quad)
        if not kernel.is_zero:
            radii = grid.node_radius.ravel()
            for n in range(1, grid.n_time + 1):
                out[n] += kernel.at(float(grid.times[n]), pts, radii).reshape(grid.spatial_shape)
    return Field(grid, out)


def duhamel(h: Field, x, t: float, quad: QuadratureSpec) -> float:
    """Source term of the solution at a single point (t, x)."""
    grid = h.grid
    if not (-1e-12 <= t <= grid.horizon + 1e-12):
        raise ValidationError("t", f"time {t} outside [0, {grid.horizon}]")
    pts = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if pts.shape[1] != grid.dim:
        raise ValidationError("x", f"point must have dimension {grid.dim}")
    return float(_DuhamelKernel(h, quad).at(max(t, 0.0), pts)[0])


def linear_value(
    u0: InitialDatum,
    u1: InitialDatum,
    t: float,
    x,
    quad: QuadratureSpec,
    h: Field | None = None,
    dim: int | None = None,
) -> float:
    """Solution of the linear problem at one space-time point.

    Grid-free for the data part; ``h`` (when given) supplies its own grid
    for the source part.
    """
    pts = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    d = dim if dim is not None else pts.shape[1]
    if d not in (1, 2, 3):
        raise ValidationError("dim", f"space dimension must be 1, 2 or 3, got {d}")
    if pts.shape[1] != d:
        raise ValidationError("x", f"point must have dimension {d}")
    val = float(_data_terms_at(u0, u1, d, float(t), pts, quad)[0])
    if h is not None:
        val += duhamel(h, x, t, quad)
    return val


@dataclass(frozen=True)
class SupportReport:
    max_outside: float
    ok: bool
    tol: float


def check_support(field: Field, r: float, tol: float = 1e-10) -> SupportReport:
    """Max |field| over nodes with |x| > t + r + 2 dx."""
    grid = field.grid
    bound = grid.times + r + 2.0 * grid.dx
    expand = (slice(None),) + (None,) * grid.dim
    mask = grid.node_radius[None] > bound[expand]
    max_outside = float(np.max(np.abs(field.samples[mask]))) if mask.any() else 0.0
    return SupportReport(max_outside=max_outside, ok=max_outside <= tol, tol=tol)


@dataclass(frozen=True)
class ProbeEntry:
    order: int
    mu_solution: float
    bound_sum: float
    ratio: float | None


@dataclass(eq=False)
class OperatorNormReport:
    entries: list[ProbeEntry]
    field: Field


def operator_norm_probe(
    u0: InitialDatum,
    u1: InitialDatum,
    h: Field | None,
    grid: SpaceTimeGrid,
    quad: QuadratureSpec,
) -> OperatorNormReport:
    """Empirical boundedness probe: mu_n(L) against the data-side bound.

    Compares mu_n of the solution with mu0_{n+1}(u0) + mu0_n(u1) + mu_n(h)
    for n <= 1; a ratio of None means the bound side vanishes (zero data).
    """
    fld = solve_linear(u0, u1, h, grid, quad)
    entries = []
    for n in (0, 1):
        mu = seminorm(fld, n)
        den = datum_seminorm(u0, grid.dim, n + 1) + datum_seminorm(u1, grid.dim, n)
        if h is not None:
            den += seminorm(h, n)
        entries.append(ProbeEntry(n, mu, den, (mu / den) if den > 0.0 else None))
    return OperatorNormReport(entries=entries, field=fld)


# ---------------------------------------------------------------------------
# field export
# ---------------------------------------------------------------------------

def field_to_csv(field: Field, path) -> None:
    """Rows (t, x[, y[, z]], value) in C order, 17 significant digits."""
    grid = field.grid
    names = ["t", "x", "y", "z"][: grid.dim + 1]
    with open(path, "w") as fh:
        fh.write(",".join(names + ["value"]) + "\n")
        mesh = grid.meshes()
        flat = [m.ravel() for m in mesh] + [field.samples.ravel()]
        for row in zip(*flat):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def field_to_binary(field: Field, path) -> None:
    """Compact dump: header then row-major float64 samples.

    Header layout (little-endian): magic ``CWF1``, uint32 version=1,
    uint32 dim, uint32 margin_cells, uint32 time levels, uint32 nodes per
    axis, float64 horizon, support_radius, spatial_extent, dx, dt.
    """
    grid = field.grid
    header = _BINARY_MAGIC + struct.pack(
        "<5I5d",
        1,
        grid.dim,
        grid.margin_cells,
        grid.n_time + 1,
        len(grid.axis),
        grid.horizon,
        grid.support_radius,
        grid.spatial_extent,
        grid.dx,
        grid.dt,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        field.samples.astype("<f8").tofile(fh)


def field_from_binary(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BINARY_MAGIC:
            raise ValidationError("path", "not a colwave field dump")
        version, dim, margin, n_levels, n_axis = struct.unpack("<5I", fh.read(20))
        if version != 1:
            raise ValidationError("path", f"unsupported dump version {version}")
        horizon, support_radius, extent, dx, dt = struct.unpack("<5d", fh.read(40))
        grid = SpaceTimeGrid(
            dim=dim,
            horizon=horizon,
            support_radius=support_radius,
            spatial_extent=extent,
            dx=dx,
            dt=dt,
            margin_cells=margin,
        )
        if grid.n_time + 1 != n_levels or len(grid.axis) != n_axis:
            raise ValidationError("path", "dump header inconsistent with grid geometry")
        samples = np.fromfile(fh, dtype="<f8").reshape(grid.shape)
    return Field(grid, samples)
