"""Closed-form convergence quantities for the stochastic bisection step.

With a uniformly distributed root, the per-step scaling factor ell has an
explicit law determined by the cut distribution F alone:

    H(t) = P[ell <= t] = int_0^t x dF(x) + int_{1-t}^1 (1-x) dF(x)
    h(t) = t (f(t) + f(1-t))            when F has density f
    E[ell] = 1 - 2 q,   Var[ell] = q (1 - 4 q),   q = mu - mu^2 - sigma^2

where (mu, sigma^2) are the cut's moments. Since 0 <= c(1-c) <= 1/4 gives
q = E[c(1-c)] in [0, 1/4], the expected contraction always lies in
[1/2, 1], with 1/2 attained only by the deterministic midpoint cut.

The K-cut generalization (uniform cuts) contracts by E[ell] = 2/(K+2).
"""

from __future__ import annotations

import numpy as np

from .distributions import Distribution, DomainError, NoDensityError

__all__ = [
    "cut_concavity",
    "conditional_expected_length",
    "expected_contraction",
    "contraction_variance",
    "ell_cdf",
    "ell_pdf",
    "expected_interval_length",
    "ksection_conditional",
    "ksection_expected",
]


def cut_concavity(cut_dist: Distribution) -> float:
    """q = E[c(1-c)] = mu - mu^2 - sigma^2, always in [0, 1/4]."""
    mu, var = cut_dist.moments()
    return mu - mu * mu - var


def conditional_expected_length(r0: float, cut_dist: Distribution) -> float:
    """E[ell | root at r0] = int_{r0}^1 c dF + int_0^{r0} (1-c) dF.

    The cut keeps [0, c] when c >= r0 (factor c) and [c, 1] otherwise
    (factor 1 - c); splitting the quadrature at r0 keeps the indicator
    kink on a panel boundary.
    """
    r0 = float(r0)
    if not 0.0 <= r0 <= 1.0:
        raise DomainError(f"r0 must be in [0, 1], got {r0}")

    def integrand(c: np.ndarray) -> np.ndarray:
        return np.where(c >= r0, c, 1.0 - c)

    return cut_dist.stieltjes_expectation(integrand, breakpoints=(r0,))


def expected_contraction(cut_dist: Distribution) -> float:
    """E[ell] = 1 - 2 q for a uniform root; lies in [1/2, 1]."""
    return 1.0 - 2.0 * cut_concavity(cut_dist)


def contraction_variance(cut_dist: Distribution) -> float:
    """Var[ell] = q (1 - 4 q) for a uniform root; nonnegative since q <= 1/4."""
    q = cut_concavity(cut_dist)
    return q * (1.0 - 4.0 * q)


def ell_cdf(cut_dist: Distribution, t: float) -> float:
    """H(t) = P[ell <= t] for a uniform root.

    Computed from the Stieltjes form, which also covers atom-bearing cut
    laws (where the density form below does not apply).
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must be in [0, 1], got {t}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0

    def integrand(c: np.ndarray) -> np.ndarray:
        return np.where(c <= t, c, 0.0) + np.where(c >= 1.0 - t, 1.0 - c, 0.0)

    return cut_dist.stieltjes_expectation(integrand, breakpoints=(t, 1.0 - t))


def ell_pdf(cut_dist: Distribution, t: float) -> float:
    """h(t) = t (f(t) + f(1-t)) for a cut law with density f."""
    if not cut_dist.has_density:
        raise NoDensityError(f"{cut_dist.spec} has no density, use ell_cdf")
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"t must be in (0, 1), got {t}")
    return t * (float(np.asarray(cut_dist.pdf(t)).item())
                + float(np.asarray(cut_dist.pdf(1.0 - t)).item()))


def expected_interval_length(cut_dist: Distribution, n: int) -> float:
    """E[L_n] = E[ell]^n for a uniform root (the factors are independent)."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return expected_contraction(cut_dist) ** n


def ksection_conditional(r0: float, k: int) -> float:
    """E[ell | root at r0] for K uniform cuts: (2 - r0^(K+1) - (1-r0)^(K+1)) / (K+1)."""
    r0 = float(r0)
    if not 0.0 <= r0 <= 1.0:
        raise DomainError(f"r0 must be in [0, 1], got {r0}")
    if k < 1:
        raise ValueError(f"need at least one cut, got k={k}")
    return (2.0 - r0 ** (k + 1) - (1.0 - r0) ** (k + 1)) / (k + 1)


def ksection_expected(k: int) -> float:
    """E[ell] = 2/(K+2) for K uniform cuts and a uniform root."""
    if k < 1:
        raise ValueError(f"need at least one cut, got k={k}")
    return 2.0 / (k + 2)
