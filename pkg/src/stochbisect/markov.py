"""Discretized Markov operator driving the normalized-root distribution.

One bisection step sends the CDF G of the normalized root to

    (T G)(t) = int_0^1 ( G(t c) + G(t + (1-t) c) - G(c) ) dF(c),

where F is the cut law. T is linear, positive, preserves every linear
function, and iterating it drives any admissible starting CDF to the
identity (the uniform law) at a known geometric rate. This module
represents CDFs as piecewise-linear grid functions and applies T exactly
or by quadrature, depending on the cut law:

* uniform cuts reduce to averaged integrals of G, computed in closed form
  from the exact cumulative integral of the piecewise-linear grid CDF;
* point masses and empirical laws evaluate the bracket at their atoms;
* other densities integrate against a fixed composite Gauss-Legendre
  measure, whose fixed node set keeps positivity (hence monotonicity of
  the output) exact.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, Empirical, PointMass, Uniform
from .theory import cut_concavity

__all__ = [
    "EndpointAtomError",
    "BandHypothesisError",
    "GridCdf",
    "apply_operator",
    "apply_operator_to_function",
    "iterate_operator",
    "ell_cdf_general",
    "band_epsilon",
    "rate_bound",
    "mean_rate_bound",
    "hn_mean_var",
]

logger = logging.getLogger(__name__)

_REPAIR_LIMIT = 1e-9
_ENDPOINT_TOL = 1e-12


class EndpointAtomError(ValueError):
    """Starting CDF has mass at 0 or 1, or the cut law is an endpoint atom."""


class BandHypothesisError(ValueError):
    """The measured band deviation exceeds the eps supplied to the bound."""


@dataclass(frozen=True)
class GridCdf:
    """Monotone piecewise-linear CDF on a uniform grid over [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("GridCdf needs at least two nodes")
        if np.any(np.diff(values) < -_REPAIR_LIMIT):
            raise ValueError("GridCdf values must be nondecreasing")
        if not 0.0 <= values[0] <= 1.0 or abs(values[-1] - 1.0) > 1e-9:
            raise ValueError("GridCdf needs values[0] in [0, 1] and values[-1] == 1")
        values = np.maximum.accumulate(np.clip(values, 0.0, 1.0))
        values[-1] = 1.0
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.values)

    @staticmethod
    def identity(grid_size: int = 2049) -> "GridCdf":
        return GridCdf(np.linspace(0.0, 1.0, grid_size))

    @staticmethod
    def from_callable(fn: Callable[[np.ndarray], np.ndarray], grid_size: int = 2049) -> "GridCdf":
        nodes = np.linspace(0.0, 1.0, grid_size)
        return GridCdf(np.asarray(fn(nodes), dtype=float))

    @staticmethod
    def from_distribution(dist: Distribution, grid_size: int = 2049) -> "GridCdf":
        nodes = np.linspace(0.0, 1.0, grid_size)
        return GridCdf(np.array([dist.cdf(x) for x in nodes]))

    def node_integrals(self) -> np.ndarray:
        """Exact integral of the piecewise-linear CDF from 0 to each node."""
        dx = 1.0 / (self.values.size - 1)
        cells = 0.5 * (self.values[1:] + self.values[:-1]) * dx
        return np.concatenate(([0.0], np.cumsum(cells)))

    def integral_to(self, t) -> np.ndarray:
        """Exact integral of the piecewise-linear CDF from 0 to arbitrary t."""
        t = np.asarray(t, dtype=float)
        n = self.values.size
        dx = 1.0 / (n - 1)
        integrals = self.node_integrals()
        j = np.minimum((t / dx).astype(int), n - 2)
        frac = t - j * dx
        v0 = self.values[j]
        slope = (self.values[j + 1] - v0) / dx
        return integrals[j] + v0 * frac + 0.5 * slope * frac * frac

    def sup_distance_to_identity(self) -> float:
        return float(np.max(np.abs(self.values - self.nodes)))


def _repair_monotone(raw: np.ndarray) -> np.ndarray:
    repaired = np.maximum.accumulate(raw)
    magnitude = float(np.max(repaired - raw))
    if magnitude > _REPAIR_LIMIT:
        raise ArithmeticError(
            f"monotone repair of {magnitude:.3e} exceeds the {_REPAIR_LIMIT:.0e} budget"
        )
    if magnitude > 0.0:
        logger.debug("monotone repair applied: max adjustment %.3e", magnitude)
    return repaired


def _atom_measure(cut_dist: Distribution) -> tuple[np.ndarray, np.ndarray] | None:
    if isinstance(cut_dist, PointMass):
        return np.array([cut_dist.c]), np.array([1.0])
    if isinstance(cut_dist, Empirical):
        m = cut_dist.samples.size
        return cut_dist.samples, np.full(m, 1.0 / m)
    return None


_CHUNK_ELEMENTS = 1 << 21  # caps the t x cut-point matrices at ~16 MB


def _bracket_sum(evaluate, pts: np.ndarray, wts: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Sum of w * (g(t c) + g(t + (1-t) c) - g(c)) over the cut measure."""
    out = np.zeros(t.size)
    step = max(1, _CHUNK_ELEMENTS // max(t.size, 1))
    for start in range(0, pts.size, step):
        c = pts[start:start + step]
        w = wts[start:start + step]
        vals = (evaluate(t[:, None] * c[None, :])
                + evaluate(t[:, None] + (1.0 - t[:, None]) * c[None, :])
                - np.asarray(evaluate(c))[None, :])
        out += vals @ w
    return out


def apply_operator(grid_cdf: GridCdf, cut_dist: Distribution) -> GridCdf:
    """One application of T to a grid CDF.

    All paths integrate the piecewise-linear grid function exactly up to
    the cut-measure representation; the output is clamped nondecreasing
    and the clamp magnitude is required to stay below 1e-9.
    """
    g = grid_cdf.values
    t = grid_cdf.nodes

    if isinstance(cut_dist, Uniform):
        # int_0^1 G(tc) dc = (1/t) int_0^t G, and similarly for the upper
        # branch, so T reduces to exact averages of the cumulative integral.
        integrals = grid_cdf.node_integrals()
        total = integrals[-1]
        out = np.empty_like(g)
        out[0] = g[0]
        out[-1] = g[-1]
        interior = slice(1, -1)
        ti = t[interior]
        out[interior] = (integrals[interior] / ti
                         + (total - integrals[interior]) / (1.0 - ti)
                         - total)
    else:
        atoms = _atom_measure(cut_dist)
        pts, wts = atoms if atoms is not None else cut_dist.quadrature()
        out = _bracket_sum(grid_cdf, pts, wts, t)

    return GridCdf(_repair_monotone(out))


def apply_operator_to_function(
    fn: Callable[[np.ndarray], np.ndarray], cut_dist: Distribution, t
) -> np.ndarray:
    """T applied to an exactly evaluable function (no grid interpolation).

    Used for proof checks such as the quadratic test function, where grid
    interpolation error would mask the identity being verified.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    atoms = _atom_measure(cut_dist)
    pts, wts = atoms if atoms is not None else cut_dist.quadrature()
    return _bracket_sum(fn, pts, wts, t)


def iterate_operator(
    grid_cdf: GridCdf, cut_dist: Distribution, k: int
) -> list[GridCdf]:
    """[T G, T^2 G, ..., T^k G].

    Requires G(0) = 0 and G(1) = 1 (no endpoint atoms) and a cut law that
    is not an endpoint atom; either obstruction makes T fail to converge
    to the uniform law.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if grid_cdf.values[0] > _ENDPOINT_TOL or grid_cdf.values[-1] < 1.0 - _ENDPOINT_TOL:
        raise EndpointAtomError(
            f"starting CDF has endpoint mass: G(0)={grid_cdf.values[0]!r}, "
            f"G(1)={grid_cdf.values[-1]!r}"
        )
    if isinstance(cut_dist, PointMass) and cut_dist.c in (0.0, 1.0):
        raise EndpointAtomError("cuts almost surely at an endpoint never contract")
    iterates = []
    current = grid_cdf
    for _ in range(k):
        current = apply_operator(current, cut_dist)
        iterates.append(current)
    return iterates


def ell_cdf_general(grid_cdf: GridCdf, cut_dist: Distribution, t) -> np.ndarray | float:
    """H_n(t) = int_0^t G dF + int_{1-t}^1 (1 - G) dF for a grid-CDF root.

    With the identity grid this reduces to the uniform-root law
    `theory.ell_cdf`. Accepts scalar or array t.
    """
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((ts < 0.0) | (ts > 1.0)):
        raise ValueError("t must lie in [0, 1]")

    atoms = _atom_measure(cut_dist)
    if isinstance(cut_dist, Uniform):
        total = grid_cdf.node_integrals()[-1]
        low = grid_cdf.integral_to(ts)
        high_missing = total - grid_cdf.integral_to(1.0 - ts)
        out = low + ts - high_missing
    elif atoms is not None:
        # Atoms are sorted, so both indicator sums are prefix/suffix sums.
        pts, wts = atoms
        gvals = grid_cdf(pts)
        low_prefix = np.concatenate(([0.0], np.cumsum(wts * gvals)))
        up_prefix = np.concatenate(([0.0], np.cumsum(wts * (1.0 - gvals))))
        below = np.searchsorted(pts, ts, side="right")
        above = np.searchsorted(pts, 1.0 - ts, side="left")
        out = low_prefix[below] + (up_prefix[-1] - up_prefix[above])
    else:
        # One measure whose panels align with the grid cells and with every
        # query point, so prefix sums over whole panels evaluate both
        # integrals exactly at each t.
        breaks = np.concatenate([grid_cdf.nodes, ts, 1.0 - ts])
        pts, wts = cut_dist.quadrature(breakpoints=breaks)
        gvals = grid_cdf(pts)
        low_prefix = np.concatenate(([0.0], np.cumsum(wts * gvals)))
        up_prefix = np.concatenate(([0.0], np.cumsum(wts * (1.0 - gvals))))
        below = np.searchsorted(pts, ts, side="right")
        above = np.searchsorted(pts, 1.0 - ts, side="left")
        out = low_prefix[below] + (up_prefix[-1] - up_prefix[above])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def band_epsilon(grid_cdf: GridCdf, delta: float) -> float:
    """Max |G(t) - t| over grid nodes in [0, delta) union (1 - delta, 1]."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")
    nodes = grid_cdf.nodes
    band = (nodes < delta) | (nodes > 1.0 - delta)
    return float(np.max(np.abs(grid_cdf.values[band] - nodes[band])))


def rate_bound(
    grid_cdf: GridCdf, cut_dist: Distribution, delta: float, eps: float, k: int
) -> float:
    """Sup-norm bound eps + ||G0 - t|| (1 - 2q)^k / (4 delta (1 - delta)).

    q is the cut law's E[c(1-c)]. The hypothesis |G0(t) - t| <= eps on the
    bands [0, delta) union (1 - delta, 1] is checked on the grid; pass
    `band_epsilon(G0, delta)` for the tightest admissible eps.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    measured = band_epsilon(grid_cdf, delta)
    if measured > eps:
        raise BandHypothesisError(
            f"band deviation {measured:.3e} exceeds eps={eps:.3e} on "
            f"[0,{delta}) u ({1 - delta},1]"
        )
    rate = 1.0 - 2.0 * cut_concavity(cut_dist)
    sup = grid_cdf.sup_distance_to_identity()
    return eps + sup * rate**k / (4.0 * delta * (1.0 - delta))


def mean_rate_bound(
    grid_cdf: GridCdf, cut_dist: Distribution, delta: float, eps: float, k: int
) -> float:
    """Bound 2 eps + ||G0 - t|| (1 - 2q)^k / (2 delta (1 - delta)) on |mean(H_k) - mean(H)|."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    measured = band_epsilon(grid_cdf, delta)
    if measured > eps:
        raise BandHypothesisError(
            f"band deviation {measured:.3e} exceeds eps={eps:.3e}"
        )
    rate = 1.0 - 2.0 * cut_concavity(cut_dist)
    sup = grid_cdf.sup_distance_to_identity()
    return 2.0 * eps + sup * rate**k / (2.0 * delta * (1.0 - delta))


def hn_mean_var(grid_cdf: GridCdf, cut_dist: Distribution) -> tuple[float, float]:
    """Mean and variance of the scaling-factor law H for a grid-CDF root.

    Stieltjes moments via integration by parts: E[ell] = 1 - int H dt and
    E[ell^2] = 1 - 2 int t H(t) dt, evaluated by trapezoid on the grid.
    """
    ts = grid_cdf.nodes
    h = np.asarray(ell_cdf_general(grid_cdf, cut_dist, ts))
    mean = 1.0 - float(np.trapezoid(h, ts))
    second = 1.0 - 2.0 * float(np.trapezoid(ts * h, ts))
    return mean, max(0.0, second - mean * mean)

