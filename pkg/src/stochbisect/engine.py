"""Stochastic bisection algorithms.

Three step rules live here: the interval-tracking bisection run (random
cut in the current bracket), the scale-invariant rescaled run on [0, 1]
(tracking the normalized root through the skewed dyadic map), and the
K-cut multisection step. Vectorized population steppers evolve many
independent chains at once for the statistical experiments.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, DomainError

__all__ = [
    "BracketError",
    "CutRedrawError",
    "IterationRecord",
    "RunTrace",
    "skewed_dyadic",
    "draw_cut",
    "bisection_run",
    "rescaled_run",
    "multisection_step",
    "population_step",
    "multisection_population_step",
]

_MAX_REDRAWS = 100

TERMINATED_TOLERANCE = "tolerance"
TERMINATED_MAX_ITERATIONS = "max_iterations"


class BracketError(ValueError):
    """f does not change sign over the starting interval."""


class CutRedrawError(RuntimeError):
    """Cut law kept producing endpoint cuts (0 or 1) past the redraw cap."""


def skewed_dyadic(c: float, r: float) -> float:
    """Rescaling map for one cut: r/c if c >= r, else (r-c)/(1-c).

    The tie c == r takes the first branch (returns 1). Cuts at exactly
    0 or 1 are rejected because the map degenerates there.
    """
    if not 0.0 < c < 1.0:
        raise DomainError(f"cut must lie strictly inside (0, 1), got {c}")
    if c >= r:
        return r / c
    return (r - c) / (1.0 - c)


def draw_cut(cut_dist: Distribution, rng: np.random.Generator) -> float:
    """One cut in the open interval (0, 1), redrawing endpoint values.

    Endpoint cuts stall the process (the interval never shrinks on one
    side), so they are rejected; after 100 consecutive rejections the law
    is considered degenerate and an error is raised.
    """
    for _ in range(_MAX_REDRAWS):
        c = float(cut_dist.sample(rng))
        if 0.0 < c < 1.0:
            return c
    raise CutRedrawError(
        f"{cut_dist.spec} produced {_MAX_REDRAWS} consecutive cuts at 0 or 1"
    )


def _draw_cuts(cut_dist: Distribution, rng: np.random.Generator, size: int) -> np.ndarray:
    cuts = np.asarray(cut_dist.sample(rng, size=size), dtype=float)
    for _ in range(_MAX_REDRAWS):
        bad = (cuts <= 0.0) | (cuts >= 1.0)
        if not bad.any():
            return cuts
        cuts[bad] = cut_dist.sample(rng, size=int(bad.sum()))
    raise CutRedrawError(
        f"{cut_dist.spec} kept producing cuts at 0 or 1 after {_MAX_REDRAWS} redraws"
    )


@dataclass(frozen=True)
class IterationRecord:
    """State after one iteration: bracket, cut, scaling, cumulative length."""

    n: int
    a: float
    b: float
    cut: float
    ell: float
    L: float
    r_normalized: float


@dataclass
class RunTrace:
    """Full record of one run.

    `log_L` carries the running sum of log scaling factors alongside the
    plain product, so cumulative lengths stay meaningful past the ~1e-300
    underflow limit of the product form.
    """

    records: list[IterationRecord] = field(default_factory=list)
    terminated_by: str = TERMINATED_MAX_ITERATIONS
    log_L: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def iterations(self) -> int:
        return len(self.records)

    def ells(self) -> np.ndarray:
        return np.array([rec.ell for rec in self.records])

    def final_length(self) -> float:
        return self.records[-1].L if self.records else 1.0

    def final_root(self) -> float:
        return self.records[-1].r_normalized if self.records else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "a", "b", "cut", "ell", "L", "r_normalized"])
        for rec in self.records:
            writer.writerow(
                [rec.n, repr(rec.a), repr(rec.b), repr(rec.cut),
                 repr(rec.ell), repr(rec.L), repr(rec.r_normalized)]
            )
        return buf.getvalue()


def bisection_run(
    f: Callable[[float], float],
    a: float,
    b: float,
    cut_dist: Distribution,
    tol: float,
    max_iter: int,
    rng: np.random.Generator,
    root: float | None = None,
) -> RunTrace:
    """Bisection with a random cut, bracketing a sign change of f.

    Each iteration draws c in (0, 1) and cuts at a + (b - a) c, keeping
    whichever side still brackets the root, until b - a < tol or the
    iteration cap is hit. When the true root is supplied its normalized
    position (r - a) / (b - a) is recorded; otherwise that column is NaN.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise BracketError(f"need a < b, got [{a}, {b}]")
    fa, fb = f(a), f(b)
    if fa * fb >= 0.0:
        raise BracketError(f"f does not change sign on [{a}, {b}]: f(a)={fa}, f(b)={fb}")

    width0 = b - a
    trace = RunTrace()
    length = 1.0
    log_length = 0.0
    n = 0
    while b - a >= tol and n < max_iter:
        c = draw_cut(cut_dist, rng)
        cut = a + (b - a) * c
        fc = f(cut)
        if fa * fc < 0.0:
            b = cut
        else:
            a, fa = cut, fc
        ell = (b - a) / (width0 * length)
        length = (b - a) / width0
        log_length += math.log(ell)
        r_norm = (root - a) / (b - a) if root is not None else math.nan
        n += 1
        trace.records.append(IterationRecord(n, a, b, cut, ell, length, r_norm))
        trace.log_L.append(log_length)
    trace.terminated_by = TERMINATED_TOLERANCE if b - a < tol else TERMINATED_MAX_ITERATIONS
    return trace


def rescaled_run(
    r0: float,
    cut_dist: Distribution,
    tol: float,
    max_iter: int,
    rng: np.random.Generator,
) -> RunTrace:
    """Scale-invariant run: every iteration restarts on [0, 1].

    The cut c is drawn on (0, 1); the kept side is [0, c] when c >= r and
    [c, 1] otherwise, so the scaling factor is c or 1 - c and the root is
    renormalized by the skewed dyadic map. Stops once a scaling factor
    drops below tol (the first iteration always runs).
    """
    r = float(r0)
    if not 0.0 < r < 1.0:
        raise DomainError(f"r0 must lie strictly inside (0, 1), got {r}")

    trace = RunTrace()
    length = 1.0
    log_length = 0.0
    n = 0
    while n < max_iter:
        c = draw_cut(cut_dist, rng)
        if c >= r:  # ties keep [0, c], matching the skewed dyadic case split
            lo, hi = 0.0, c
        else:
            lo, hi = c, 1.0
        ell = hi - lo
        r = skewed_dyadic(c, r)
        length *= ell
        log_length += math.log(ell)
        n += 1
        trace.records.append(IterationRecord(n, lo, hi, c, ell, length, r))
        trace.log_L.append(log_length)
        if ell < tol:
            trace.terminated_by = TERMINATED_TOLERANCE
            return trace
    trace.terminated_by = TERMINATED_MAX_ITERATIONS
    return trace


def multisection_step(
    r: float, k: int, rng: np.random.Generator
) -> tuple[float, float]:
    """One K-cut step with uniform cuts: returns (ell, next root).

    Draws k i.i.d. uniform cuts, brackets r between consecutive order
    statistics (with sentinels 0 and 1), and rescales r to the kept gap.
    """
    if k < 1:
        raise ValueError(f"need at least one cut, got k={k}")
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"r must lie in [0, 1], got {r}")
    cuts = np.sort(rng.uniform(size=k))
    j = int(np.searchsorted(cuts, r, side="right"))
    lo = 0.0 if j == 0 else float(cuts[j - 1])
    hi = 1.0 if j == k else float(cuts[j])
    if r == 1.0:  # all cuts <= 1: keep the last gap
        lo, hi = float(cuts[-1]), 1.0
    ell = hi - lo
    return ell, (r - lo) / ell


def population_step(
    roots: np.ndarray, cut_dist: Distribution, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Advance M independent chains one iteration (one cut each).

    Returns (ells, new_roots). Ties c == r take the c >= r branch, matching
    `skewed_dyadic`.
    """
    roots = np.asarray(roots, dtype=float)
    cuts = _draw_cuts(cut_dist, rng, roots.size).reshape(roots.shape)
    keep_low = cuts >= roots
    ells = np.where(keep_low, cuts, 1.0 - cuts)
    with np.errstate(invalid="ignore"):
        new_roots = np.where(keep_low, roots / cuts, (roots - cuts) / (1.0 - cuts))
    return ells, new_roots


def multisection_population_step(
    roots: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Advance M independent chains one K-cut iteration with uniform cuts."""
    if k < 1:
        raise ValueError(f"need at least one cut, got k={k}")
    roots = np.asarray(roots, dtype=float)
    m = roots.size
    cuts = np.sort(rng.uniform(size=(m, k)), axis=1)
    padded = np.empty((m, k + 2))
    padded[:, 0] = 0.0
    padded[:, 1:-1] = cuts
    padded[:, -1] = 1.0
    j = np.sum(cuts <= roots[:, None], axis=1)
    j = np.minimum(j, k)  # r == 1 falls in the last gap
    lo = np.take_along_axis(padded, j[:, None], axis=1)[:, 0]
    hi = np.take_along_axis(padded, (j + 1)[:, None], axis=1)[:, 0]
    ells = hi - lo
    return ells, (roots - lo) / ells
