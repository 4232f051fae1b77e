"""Discretized curves: sampling, speed, arclength, and the d/ds operator.

A curve is defined by one expression per component on a uniform grid in
the parameter u.  Sampling evaluates jets of every component so that
derivatives up to the ambient dimension are exact to rounding; curves that
arise from time evolution instead carry stencil-differentiated derivatives
(see ``SampledCurve.from_points``).

Derivatives with respect to arclength s use d/ds = (1/v) d/du with
second-order central differences, wrapping periodically for closed curves
and falling back to one-sided second-order stencils at open endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import exprjet, minkowski
from .errors import (
    DegenerateCurveError,
    DimensionMismatch,
    MixedCausalityError,
    NullCurveError,
)
from .exprjet import Expr
from .minkowski import CausalCharacter

CLOSED = "closed"
OPEN = "open"

ENDPOINT_MATCH_TOL = 1e-9
MIN_SAMPLES = 16


@dataclass(frozen=True)
class CurveSpec:
    """Expression-backed curve definition on [u0, u1]."""

    dimension: int
    components: tuple[Expr, ...]
    domain: tuple[float, float]
    topology: str = OPEN
    samples: int = 256

    @classmethod
    def from_strings(cls, components, domain, topology=OPEN, samples=256) -> "CurveSpec":
        exprs = tuple(exprjet.parse(c) for c in components)
        return cls(len(exprs), exprs, (float(domain[0]), float(domain[1])), topology, samples)

    def validate(self) -> None:
        if self.dimension < 2 or self.dimension != len(self.components):
            raise DimensionMismatch(
                f"dimension {self.dimension} does not match {len(self.components)} components"
            )
        if self.samples < MIN_SAMPLES:
            raise ValueError(f"samples must be >= {MIN_SAMPLES}, got {self.samples}")
        if self.topology not in (CLOSED, OPEN):
            raise ValueError(f"topology must be {CLOSED!r} or {OPEN!r}")
        u0, u1 = self.domain
        if not u1 > u0:
            raise ValueError(f"domain must satisfy u1 > u0, got {self.domain}")
        for c in self.components:
            extra = exprjet.variables(c) - {"u"}
            if extra:
                raise ValueError(f"curve components may only use 'u', found {sorted(extra)}")
        if self.topology == CLOSED:
            for j, c in enumerate(self.components):
                a = exprjet.eval_scalar(c, u=u0)
                b = exprjet.eval_scalar(c, u=u1)
                if abs(a - b) > ENDPOINT_MATCH_TOL * max(1.0, abs(a), abs(b)):
                    raise ValueError(
                        f"closed curve component {j} does not match at the endpoints "
                        f"({a!r} vs {b!r})"
                    )


@dataclass(frozen=True)
class SampledCurve:
    """Curve evaluated on a uniform grid, with cached speed and arclength.

    ``derivs[m]`` is the (N, n) array of m-th u-derivative vectors; index 0
    holds the points themselves.  ``exact_derivs`` records whether they came
    from jets (True) or from repeated stencil differentiation (False).
    """

    grid: np.ndarray
    h: float
    closed: bool
    derivs: np.ndarray  # (order+1, N, n)
    speeds: np.ndarray  # (N,)
    s: np.ndarray  # (N,) arclength from sample 0
    total_length: float
    quadrature: str
    char: CausalCharacter
    exact_derivs: bool
    null_tol: float
    spec: CurveSpec | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.derivs.shape[2]

    @property
    def samples(self) -> int:
        return self.derivs.shape[1]

    @property
    def points(self) -> np.ndarray:
        return self.derivs[0]

    @property
    def deriv_order(self) -> int:
        return self.derivs.shape[0] - 1

    @property
    def sign0(self) -> int:
        """Causal sign of the tangent: -1 timelike, +1 spacelike."""
        return -1 if self.char is CausalCharacter.TIMELIKE else 1

    @classmethod
    def from_points(
        cls,
        points: np.ndarray,
        grid: np.ndarray,
        closed: bool,
        deriv_order: int,
        null_tol: float = minkowski.DEFAULT_NULL_TOL,
    ) -> "SampledCurve":
        """Build a curve from raw sample points, differentiating by stencils.

        The stencil speed carries a systematic relative bias of order h^2
        (a sinc-like factor), so stencil-backed lengths must only ever be
        compared with other stencil-backed lengths; evolution therefore
        rebuilds its initial state through this path.
        """
        points = np.asarray(points, dtype=float)
        h = float(grid[1] - grid[0])
        derivs = np.empty((deriv_order + 1,) + points.shape)
        derivs[0] = points
        for m in range(1, deriv_order + 1):
            derivs[m] = d_du(derivs[m - 1], h, closed)
        metric_tangents = d_du4(points, h, closed)
        return cls._finish(
            grid, h, closed, derivs, exact=False, null_tol=null_tol, spec=None,
            metric_tangents=metric_tangents,
        )

    @classmethod
    def _finish(
        cls, grid, h, closed, derivs, exact, null_tol, spec, metric_tangents=None
    ) -> "SampledCurve":
        if not np.all(np.isfinite(derivs)):
            raise ValueError("curve evaluation produced non-finite values")
        tangents = derivs[1]
        q = minkowski.inner_many(tangents, tangents)
        euclid = np.einsum("ij,ij->i", tangents, tangents)
        thresh = null_tol * np.maximum(1.0, euclid)
        null_mask = (np.abs(q) <= thresh) & (euclid > 0)
        if np.any(null_mask):
            idx = int(np.argmax(null_mask))
            raise NullCurveError(f"tangent is null at sample {idx} (u={grid[idx]:.6g})")
        timelike = q < -thresh
        if np.any(timelike) and not np.all(timelike):
            raise MixedCausalityError("tangent causal character varies along the curve")
        char = CausalCharacter.TIMELIKE if timelike[0] else CausalCharacter.SPACELIKE
        # Speed and arclength come from the sharper tangent estimate when one
        # is supplied: the second-order stencil speed is biased by ~h^2/6,
        # which would make periodic flow speeds not close up around closed
        # curves (a seam in the velocity field at the wrap).
        if metric_tangents is None:
            speeds = np.sqrt(np.abs(q))
        else:
            speeds = minkowski.norm_many(metric_tangents)
        if np.any(speeds <= null_tol * np.sqrt(np.maximum(1.0, euclid))):
            idx = int(np.argmin(speeds))
            raise DegenerateCurveError(f"speed vanishes at sample {idx} (u={grid[idx]:.6g})")
        s, total, rule = _arclength_tables(speeds, h, closed)
        return cls(
            grid=grid,
            h=h,
            closed=closed,
            derivs=derivs,
            speeds=speeds,
            s=s,
            total_length=total,
            quadrature=rule,
            char=char,
            exact_derivs=exact,
            null_tol=null_tol,
            spec=spec,
        )


def sample(spec: CurveSpec, null_tol: float = minkowski.DEFAULT_NULL_TOL) -> SampledCurve:
    """Evaluate a CurveSpec on its grid with jet-exact derivatives."""
    spec.validate()
    u0, u1 = spec.domain
    N = spec.samples
    n = spec.dimension
    if spec.topology == CLOSED:
        h = (u1 - u0) / N
        grid = u0 + h * np.arange(N)
    else:
        grid = np.linspace(u0, u1, N)
        h = float(grid[1] - grid[0])
    derivs = np.empty((n + 1, N, n))
    for j, comp in enumerate(spec.components):
        jet = exprjet.eval_jet(comp, "u", grid, n)
        for m in range(n + 1):
            derivs[m, :, j] = jet.derivative(m)
    return SampledCurve._finish(
        grid, h, spec.topology == CLOSED, derivs, exact=True, null_tol=null_tol, spec=spec
    )


def speed(c: SampledCurve, i: int) -> float:
    """Parametrization speed v = |d(curve)/du| at sample i."""
    return float(c.speeds[_check_index(c, i)])


def arclength(c: SampledCurve, up_to: int) -> float:
    """Arclength from sample 0 to sample ``up_to`` (quadrature of v)."""
    return float(c.s[_check_index(c, up_to)])


def total_length(c: SampledCurve) -> float:
    """Full arclength; for closed curves this includes the wrap segment."""
    return c.total_length


def _check_index(c: SampledCurve, i: int) -> int:
    if not 0 <= i < c.samples:
        raise IndexError(f"sample index {i} out of range [0, {c.samples})")
    return i


# --------------------------------------------------------------------------
# Difference stencils (second order; a fourth-order variant for the verifier)


def d_du(values: np.ndarray, h: float, closed: bool) -> np.ndarray:
    """Second-order d/du of a grid function along axis 0."""
    f = np.asarray(values, dtype=float)
    out = np.empty_like(f)
    if closed:
        out[:] = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
        return out
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def d_du4(values: np.ndarray, h: float, closed: bool) -> np.ndarray:
    """Fourth-order d/du, used where the verifier needs a sharper instrument."""
    f = np.asarray(values, dtype=float)
    out = np.empty_like(f)
    if closed:
        fp1, fp2 = np.roll(f, -1, axis=0), np.roll(f, -2, axis=0)
        fm1, fm2 = np.roll(f, 1, axis=0), np.roll(f, 2, axis=0)
        out[:] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
        return out
    out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return out


def d_ds(values: np.ndarray, c: SampledCurve) -> np.ndarray:
    """Arclength derivative (1/v) d/du of a grid function on the curve."""
    f = np.asarray(values, dtype=float)
    if f.shape[0] != c.samples:
        raise ValueError(f"grid function has {f.shape[0]} samples, curve has {c.samples}")
    df = d_du(f, c.h, c.closed)
    v = c.speeds if f.ndim == 1 else c.speeds[:, None]
    return df / v


def d_ds4(values: np.ndarray, c: SampledCurve) -> np.ndarray:
    """Fourth-order arclength derivative (verifier instrument)."""
    f = np.asarray(values, dtype=float)
    df = d_du4(f, c.h, c.closed)
    v = c.speeds if f.ndim == 1 else c.speeds[:, None]
    return df / v


# --------------------------------------------------------------------------
# Quadrature


def _use_simpson(n_points: int, closed: bool) -> bool:
    # Full-period composite Simpson on a closed curve needs an even number
    # of intervals, which equals the sample count once the wrap is appended.
    if closed:
        return n_points % 2 == 0
    return n_points >= 3


def _arclength_tables(speeds: np.ndarray, h: float, closed: bool):
    if _use_simpson(speeds.shape[0], closed):
        rule = "simpson"
        s = cumulative_simpson(speeds, dx=h, initial=0.0)
    else:
        rule = "trapezoid"
        s = cumulative_trapezoid(speeds, dx=h, initial=0.0)
    if closed:
        wrapped = np.concatenate([speeds, speeds[:1]])
        total = _integrate(wrapped, h, rule)
    else:
        total = float(s[-1])
    return s, total, rule


def _integrate(values: np.ndarray, h: float, rule: str) -> float:
    if rule == "simpson" and (values.shape[0] - 1) % 2 == 0:
        w = np.ones(values.shape[0])
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return float(values @ w * h / 3.0)
    return float(np.trapezoid(values, dx=h))


def cumulative_integral(values: np.ndarray, h: float, rule: str) -> np.ndarray:
    """Cumulative integral of a grid function from sample 0, matching the
    curve's quadrature rule."""
    if rule == "simpson":
        return cumulative_simpson(values, dx=h, initial=0.0)
    return cumulative_trapezoid(values, dx=h, initial=0.0)


def loop_integral(values: np.ndarray, c: SampledCurve) -> float:
    """Integral of a grid function over the full period of a closed curve."""
    if not c.closed:
        raise ValueError("loop_integral requires a closed curve")
    wrapped = np.concatenate([values, values[:1]])
    return _integrate(wrapped, c.h, c.quadrature)
