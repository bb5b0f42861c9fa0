"""Epsilon ladders, generalized numbers, and closed-form problem data.

A net is a family indexed by a geometric ladder of regularization
parameters ``eps_j = eps0 * ratio**j``.  Initial data and nonlinearities
are specified in closed form so that values and derivatives up to total
order two are exact, which keeps every downstream quadrature and
finite-difference check honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import UnsupportedOrderError, ValidationError

DATUM_KINDS = ("plateau_bump", "gaussian_bump", "zero")
NONLINEARITY_KINDS = ("polynomial", "sine", "exp_minus_one", "zero")

#: Highest total derivative order available on initial data.  The linear
#: kernels consume at most first derivatives of the data and the
#: operator-norm probe at most second.
MAX_DATUM_ORDER = 2

# Transition arguments this close to the flat ends are rounded onto them;
# the true values there differ from 0/1 by less than exp(-1e6).
_FLAT_CLIP = 1e-6


@dataclass(frozen=True)
class EpsilonLadder:
    """Geometric grid of regularization parameters, largest first."""

    eps0: float = 0.5
    ratio: float = 0.5
    count: int = 8

    def __post_init__(self):
        if not (0.0 < self.eps0 <= 1.0) or not math.isfinite(self.eps0):
            raise ValidationError("eps0", f"must lie in (0, 1], got {self.eps0}")
        if not (0.0 < self.ratio < 1.0) or not math.isfinite(self.ratio):
            raise ValidationError("ratio", f"must lie in (0, 1), got {self.ratio}")
        if self.count < 3:
            raise ValidationError("count", "a rate fit needs at least 3 ladder points")

    @cached_property
    def values(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.count, dtype=float)

    def __len__(self) -> int:
        return self.count

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, j: int) -> float:
        return float(self.values[j])


def make_ladder(eps0: float, ratio: float, count: int) -> EpsilonLadder:
    """Build the geometric ladder ``eps_j = eps0 * ratio**j``."""
    return EpsilonLadder(eps0=eps0, ratio=ratio, count=int(count))


@dataclass(frozen=True)
class GeneralizedNumber:
    """A real number per ladder entry; the sampled stand-in for a scalar net."""

    ladder: EpsilonLadder
    values: tuple[float, ...]
    nominal_exponent: float | None = None

    def __post_init__(self):
        if len(self.values) != len(self.ladder):
            raise ValidationError("values", "one value per ladder entry required")
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError("values", "all values must be finite")

    def __mul__(self, other: "GeneralizedNumber") -> "GeneralizedNumber":
        if not isinstance(other, GeneralizedNumber):
            return NotImplemented
        if other.ladder != self.ladder:
            raise ValidationError("ladder", "operands must share one ladder")
        exp = None
        if self.nominal_exponent is not None and other.nominal_exponent is not None:
            exp = self.nominal_exponent + other.nominal_exponent
        vals = tuple(a * b for a, b in zip(self.values, other.values))
        return GeneralizedNumber(self.ladder, vals, exp)


def power_number(ladder: EpsilonLadder, b: float) -> GeneralizedNumber:
    """The net ``eps_j**b``, e.g. the small factor multiplying the nonlinearity."""
    if not math.isfinite(b):
        raise ValidationError("b", "exponent must be finite")
    return GeneralizedNumber(ladder, tuple(float(e**b) for e in ladder.values), b)


def _transition(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth step that is exactly 1 for s <= 0 and 0 for s >= 1.

    Built as phi(1-s) / (phi(1-s) + phi(s)) with phi(t) = exp(-1/t); all
    derivatives vanish at both ends, so gluing to the flat pieces stays
    smooth.  Returns (h, h', h'').
    """
    s = np.asarray(s, dtype=float)
    h = np.where(s <= _FLAT_CLIP, 1.0, 0.0)
    h1 = np.zeros_like(s)
    h2 = np.zeros_like(s)
    mid = (s > _FLAT_CLIP) & (s < 1.0 - _FLAT_CLIP)
    if np.any(mid):
        sm = s[mid]
        t = 1.0 - sm
        a = np.exp(-1.0 / t)
        b = np.exp(-1.0 / sm)
        da = -a / t**2
        db = b / sm**2
        dda = a * (1.0 / t**4 - 2.0 / t**3)
        ddb = b * (1.0 / sm**4 - 2.0 / sm**3)
        d = a + b
        n1 = da * b - a * db
        n2 = dda * b - a * ddb
        h[mid] = a / d
        h1[mid] = n1 / d**2
        h2[mid] = (n2 * d - 2.0 * n1 * (da + db)) / d**3
    return h, h1, h2


def _bump(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """g(u) = exp(1 - 1/u) for u > 0, 0 otherwise, with dg/du, d2g/du2.

    Evaluated in u = 1 - |x|^2/r^2 this is the standard compactly
    supported bell profile.
    """
    u = np.asarray(u, dtype=float)
    g = np.zeros_like(u)
    g1 = np.zeros_like(u)
    g2 = np.zeros_like(u)
    pos = u > _FLAT_CLIP
    if np.any(pos):
        up = u[pos]
        gp = np.exp(1.0 - 1.0 / up)
        g[pos] = gp
        g1[pos] = gp / up**2
        g2[pos] = gp * (1.0 / up**4 - 2.0 / up**3)
    return g, g1, g2


@dataclass(frozen=True)
class InitialDatum:
    """Radial, compactly supported smooth initial datum.

    ``plateau_bump`` equals ``amplitude`` exactly on the closed inner ball
    and drops smoothly to zero at ``outer_radius``; ``gaussian_bump`` is
    the bell profile ``amplitude * exp(1 - 1/(1 - (|x|/r)^2))``; ``zero``
    vanishes identically.  Values, gradients and Hessians are closed form
    for points of any space dimension.
    """

    kind: str
    outer_radius: float = 0.0
    inner_radius: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in DATUM_KINDS:
            raise ValidationError("kind", f"unknown datum kind {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ValidationError("amplitude", "must be finite")
        if self.kind == "zero":
            return
        if not (self.outer_radius > 0.0) or not math.isfinite(self.outer_radius):
            raise ValidationError("outer_radius", "must be positive and finite")
        if self.kind == "plateau_bump":
            if self.inner_radius is None:
                raise ValidationError("inner_radius", "required for plateau_bump")
            if not (0.0 < self.inner_radius < self.outer_radius):
                raise ValidationError(
                    "inner_radius",
                    f"must lie in (0, outer_radius), got {self.inner_radius}",
                )

    # -- radial profile -------------------------------------------------
    def _radial(self, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Profile F(rho) with dF/drho and d2F/drho2."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "zero":
            z = np.zeros_like(rho)
            return z, z.copy(), z.copy()
        if self.kind == "plateau_bump":
            width = self.outer_radius - self.inner_radius
            s = (rho - self.inner_radius) / width
            h, h1, h2 = _transition(s)
            return (
                self.amplitude * h,
                self.amplitude * h1 / width,
                self.amplitude * h2 / width**2,
            )
        # gaussian_bump: function of w = rho^2 through u = 1 - w/r^2
        r2 = self.outer_radius**2
        u = 1.0 - rho**2 / r2
        g, g1, g2 = _bump(u)
        # chain rule in w: dg/dw = -g1/r^2, d2g/dw2 = g2/r^4
        dgdw = -g1 / r2
        d2gdw2 = g2 / r2**2
        # F'(rho) = 2 rho dg/dw ; F''(rho) = 2 dg/dw + 4 rho^2 d2g/dw2
        return (
            self.amplitude * g,
            self.amplitude * 2.0 * rho * dgdw,
            self.amplitude * (2.0 * dgdw + 4.0 * rho**2 * d2gdw2),
        )

    # -- pointwise evaluation -------------------------------------------
    def value(self, points: np.ndarray) -> np.ndarray:
        """Datum value at ``points`` of shape (..., d)."""
        pts = np.asarray(points, dtype=float)
        rho = np.sqrt(np.sum(pts * pts, axis=-1))
        return self._radial(rho)[0]

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Spatial gradient at ``points``; shape (..., d)."""
        pts = np.asarray(points, dtype=float)
        rho = np.sqrt(np.sum(pts * pts, axis=-1))
        _, f1, _ = self._radial(rho)
        # radial direction; at rho == 0 the profile is flat so 0 is exact
        safe = np.where(rho > 0.0, rho, 1.0)
        return (f1 / safe)[..., None] * pts

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """Second-derivative matrix at ``points``; shape (..., d, d)."""
        pts = np.asarray(points, dtype=float)
        d = pts.shape[-1]
        rho = np.sqrt(np.sum(pts * pts, axis=-1))
        _, f1, f2 = self._radial(rho)
        safe = np.where(rho > 0.0, rho, 1.0)
        unit = pts / safe[..., None]
        outer = unit[..., :, None] * unit[..., None, :]
        eye = np.eye(d)
        radial_part = f2[..., None, None] * outer
        angular_part = (f1 / safe)[..., None, None] * (eye - outer)
        hess = radial_part + angular_part
        # both terms vanish on the flat core, including at the origin
        flat = ~(rho > 0.0)
        if np.any(flat):
            hess = np.where(flat[..., None, None], 0.0, hess)
        return hess

    def derivative(self, points: np.ndarray, multi_index: tuple[int, ...]) -> np.ndarray:
        """Closed-form partial derivative for a multi-index of total order <= 2."""
        order = sum(multi_index)
        if order > MAX_DATUM_ORDER or any(k < 0 for k in multi_index):
            raise UnsupportedOrderError(
                f"datum derivatives available up to total order {MAX_DATUM_ORDER}, "
                f"got multi-index {multi_index}"
            )
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != len(multi_index):
            raise ValidationError("multi_index", "length must equal the point dimension")
        if order == 0:
            return self.value(pts)
        if order == 1:
            axis = multi_index.index(1)
            return self.gradient(pts)[..., axis]
        if 2 in multi_index:
            i = multi_index.index(2)
            j = i
        else:
            i, j = [k for k, m in enumerate(multi_index) if m == 1]
        return self.hessian(pts)[..., i, j]


def eval_datum(datum: InitialDatum, x) -> float:
    """Datum value at a single point ``x`` (scalar allowed in 1D)."""
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    return float(datum.value(pts))


def datum_derivative(datum: InitialDatum, x, multi_index: tuple[int, ...]) -> float:
    """Closed-form datum derivative at a single point."""
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    return float(datum.derivative(pts, tuple(multi_index)))


@dataclass(frozen=True)
class NonlinearitySpec:
    """Smooth nonlinearity with f(0) = 0, evaluable in closed form.

    For ``polynomial`` the coefficient list starts at the linear term:
    ``coefficients[k]`` multiplies ``u**(k+1)``, so no constant term can
    sneak in through the list.  ``constant_term`` exists only so that an
    attempt to supply one is rejected explicitly.
    """

    kind: str
    coefficients: tuple[float, ...] = ()
    constant_term: float = 0.0

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ValidationError("kind", f"unknown nonlinearity kind {self.kind!r}")
        if self.constant_term != 0.0:
            raise ValidationError(
                "constant_term", "a constant term violates the requirement f(0) = 0"
            )
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind == "polynomial":
            if not self.coefficients:
                raise ValidationError("coefficients", "polynomial needs coefficients")
            if not all(math.isfinite(c) for c in self.coefficients):
                raise ValidationError("coefficients", "must be finite")
        elif self.coefficients:
            raise ValidationError(
                "coefficients", f"{self.kind} takes no coefficient list"
            )

    def value(self, u):
        u = np.asarray(u, dtype=float)
        # overflow to inf is the divergence signal callers test for
        with np.errstate(over="ignore", invalid="ignore"):
            if self.kind == "polynomial":
                out = np.zeros_like(u)
                for c in reversed(self.coefficients):
                    out = (out + c) * u  # Horner with zero constant term
                return out
            if self.kind == "sine":
                return np.sin(u)
            if self.kind == "exp_minus_one":
                return np.expm1(u)
            return np.zeros_like(u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            if self.kind == "polynomial":
                out = np.zeros_like(u)
                for k in reversed(range(len(self.coefficients))):
                    out = out * u + (k + 1) * self.coefficients[k]
                return out
            if self.kind == "sine":
                return np.cos(u)
            if self.kind == "exp_minus_one":
                return np.exp(u)
            return np.zeros_like(u)


def eval_nonlinearity(spec: NonlinearitySpec, u: float) -> float:
    return float(spec.value(u))


def nonlinearity_derivative(spec: NonlinearitySpec, u: float) -> float:
    return float(spec.derivative(u))


ZERO_DATUM = InitialDatum("zero")
ZERO_NONLINEARITY = NonlinearitySpec("zero")


@dataclass(frozen=True)
class Problem:
    """Semilinear wave problem on [0, horizon] x R^dim.

    The nonlinearity enters multiplied by the small factor
    ``eps**small_exponent``; data are supported in the ball of radius
    ``support_radius``, so solutions live in the cone |x| <= t + r.
    """

    dim: int
    horizon: float
    support_radius: float
    u0: InitialDatum
    u1: InitialDatum
    f: NonlinearitySpec
    small_exponent: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError("dim", f"space dimension must be 1, 2 or 3, got {self.dim}")
        if not (self.horizon > 0.0) or not math.isfinite(self.horizon):
            raise ValidationError("horizon", "must be positive and finite")
        if self.support_radius < 0.0 or not math.isfinite(self.support_radius):
            raise ValidationError("support_radius", "must be nonnegative and finite")
        if not (self.small_exponent > 0.0) or not math.isfinite(self.small_exponent):
            raise ValidationError("small_exponent", "must be positive (small-factor decay)")
        for name, datum in (("u0", self.u0), ("u1", self.u1)):
            if datum.kind != "zero" and datum.outer_radius > self.support_radius + 1e-12:
                raise ValidationError(
                    name, "datum support exceeds the problem support radius"
                )

    def small_factor(self, eps: float) -> float:
        """The factor eps**b multiplying f in the right-hand side."""
        return float(eps**self.small_exponent)
