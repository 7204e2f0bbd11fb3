"""Phase-space geometry of k-star models.

For constrained pairs (edge density eps, k-star density tau) the feasible
region is bounded below by the Erdos-Renyi curve tau = eps^k and above by a
piecewise curve realized by two bipodal 0-1 graphons, the g-clique and the
g-anticlique.  The two branches cross at a single eps_0(k); the clique wins
above it, the anticlique below.  This module provides the closed forms, the
crossing point, and the grid verification that eliminates three-block
configurations from the upper boundary for star orders 2 through 30.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .graphon import StepGraphon

__all__ = [
    "PhasePoint",
    "UnverifiedStarOrderError",
    "Step4Report",
    "er_curve",
    "clique_graphon",
    "anticlique_graphon",
    "clique_tau",
    "anticlique_tau",
    "upper_boundary",
    "crossing_point",
    "step4_f",
    "step4_F",
    "step4_z",
    "verify_step4",
    "n2_ratio",
    "feasible",
    "boundary_samples",
]

K_VERIFIED_MAX = 30
FEASIBLE_SLACK = 1e-12


class UnverifiedStarOrderError(ValueError):
    """Raised for star orders outside the verified range 2..30."""


def _check_k(k: int, allow_unverified: bool = False) -> None:
    if k != int(k) or k < 2:
        raise ValueError(f"star order must be an integer >= 2, got {k!r}")
    if k > K_VERIFIED_MAX and not allow_unverified:
        raise UnverifiedStarOrderError(
            f"boundary formulas are verified only for 2 <= k <= {K_VERIFIED_MAX}; "
            f"pass allow_unverified=True to evaluate k={k} anyway")


@dataclass(frozen=True)
class PhasePoint:
    """A point (eps, tau) in the phase plane of the k-star model."""

    eps: float
    tau: float
    k: int


def er_curve(eps, k: int):
    """Lower boundary tau = eps^k, realized by constant graphons."""
    return np.asarray(eps, dtype=float) ** k if np.ndim(eps) else float(eps) ** k


def clique_graphon(eps: float) -> StepGraphon:
    """Bipodal 0-1 graphon with a full block of mass sqrt(eps); edge density eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"edge density must lie in (0,1), got {eps:g}")
    c = np.sqrt(eps)
    return StepGraphon(np.array([c, 1.0 - c]), np.array([[1.0, 0.0], [0.0, 0.0]]))


def anticlique_graphon(eps: float) -> StepGraphon:
    """Bipodal 0-1 graphon with an empty block of mass sqrt(1-eps); edge density eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"edge density must lie in (0,1), got {eps:g}")
    c = 1.0 - np.sqrt(1.0 - eps)
    return StepGraphon(np.array([c, 1.0 - c]), np.array([[1.0, 1.0], [1.0, 0.0]]))


def clique_tau(eps, k: int):
    """k-star density of the g-clique: eps^((k+1)/2)."""
    return np.asarray(eps, dtype=float) ** ((k + 1) / 2.0) if np.ndim(eps) \
        else float(eps) ** ((k + 1) / 2.0)


def anticlique_tau(eps, k: int):
    """k-star density of the g-anticlique: c + c^k - c^(k+1) with c = 1 - sqrt(1-eps)."""
    c = 1.0 - np.sqrt(1.0 - np.asarray(eps, dtype=float))
    out = c + c**k - c ** (k + 1)
    return out if np.ndim(eps) else float(out)


@lru_cache(maxsize=None)
def crossing_point(k: int, allow_unverified: bool = False) -> float:
    """The eps_0 where the clique and anticlique branches cross, by bisection.

    The anticlique dominates for small eps (tau ~ eps/2 beats eps^((k+1)/2))
    and loses near eps = 1, so the branch difference changes sign exactly once
    on [0.4, 1).  Resolved to 1e-12; increasing in k, approaching 1.
    """
    _check_k(k, allow_unverified)

    def diff(eps):
        return anticlique_tau(eps, k) - clique_tau(eps, k)

    lo, hi = 0.4, 1.0 - 1e-9
    flo = diff(lo)
    if flo <= 0.0 or diff(hi) >= 0.0:
        raise RuntimeError(f"crossing bracket invalid for k={k}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if diff(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def upper_boundary(eps, k: int, allow_unverified: bool = False):
    """Maximal k-star density at edge density eps: anticlique branch below the
    crossing point, clique branch above it."""
    _check_k(k, allow_unverified)
    eps0 = crossing_point(k, allow_unverified)
    eps_arr = np.asarray(eps, dtype=float)
    if np.any(eps_arr < 0.0) or np.any(eps_arr > 1.0):
        raise ValueError("edge density must lie in [0,1]")
    out = np.where(eps_arr <= eps0, anticlique_tau(eps_arr, k), clique_tau(eps_arr, k))
    return out if np.ndim(eps) else float(out)


def feasible(p: PhasePoint, allow_unverified: bool = False) -> bool:
    """Whether (eps, tau) lies between the lower and upper boundary curves."""
    _check_k(p.k, allow_unverified)
    if not 0.0 <= p.eps <= 1.0:
        return False
    lo = er_curve(p.eps, p.k)
    hi = upper_boundary(p.eps, p.k, allow_unverified)
    return lo - FEASIBLE_SLACK <= p.tau <= hi + FEASIBLE_SLACK


# -- step-4 verification ------------------------------------------------------
#
# Eliminating the three-block boundary candidates reduces to checking that
# F(x, z(x)) < 0 on 0 < x < 1, where z(x) solves f(x, z) = 0 and f is linear
# in z.  All power sums are evaluated as explicit polynomial sums, which are
# stable at x -> 1 and z -> 1 where the rational forms cancel catastrophically.


def _geom_sum(t, m: int):
    """sum_{j=0}^{m-1} t^j, by Horner; equals (t^m - 1)/(t - 1) away from t=1."""
    return np.polyval(np.ones(m), t) if m > 0 else np.zeros_like(np.asarray(t, dtype=float))


def step4_f(x, z, k: int):
    """The transversality polynomial, linear in z and of degree k-1 in x."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    lead = k * (k - 1) * (x ** (k - 2) * (1.0 - x) + z - 1.0)
    mid = 2.0 * ((k - 1) * x ** (k - 1) - _geom_sum(x, k - 1))
    tail = (z - 1.0) * np.polyval(np.arange(1, k, dtype=float), x)
    out = lead + mid + tail
    return out if (np.ndim(x) or np.ndim(z)) else float(out)


def step4_F(x, z, k: int):
    """The stationarity residual k x^(k-1) + sum z^j - k - sum x^j (j < k)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    out = k * x ** (k - 1) + _geom_sum(z, k) - k - _geom_sum(x, k)
    return out if (np.ndim(x) or np.ndim(z)) else float(out)


def step4_z(x, k: int):
    """Solve f(x, z) = 0 for z; f is linear in z with positive z-coefficient."""
    x = np.asarray(x, dtype=float)
    bcoef = k * (k - 1) + np.polyval(np.arange(1, k, dtype=float), x)
    acoef = k * (k - 1) * x ** (k - 2) * (1.0 - x) \
        + 2.0 * ((k - 1) * x ** (k - 1) - _geom_sum(x, k - 1))
    out = 1.0 - acoef / bcoef
    return out if np.ndim(x) else float(out)


@dataclass(frozen=True)
class Step4Report:
    k: int
    grid: int
    max_F: float
    x_at_max: float
    min_z: float
    passed: bool
    inconsistencies: int


def verify_step4(k: int, grid: int = 10_000, delta: float = 1e-6,
                 allow_unverified: bool = False) -> Step4Report:
    """Check F(x, z(x)) < 0 on a uniform grid in (delta, 1-delta).

    Points where z(x) falls strictly below 1 (beyond 1e-12) are counted as
    inconsistencies; z == 1 occurs identically at k=2, where the constraint
    branch degenerates, and is valid there as a limit.
    """
    _check_k(k, allow_unverified)
    if grid < 1000:
        raise ValueError("grid must have at least 1000 points")
    x = np.linspace(delta, 1.0 - delta, grid)
    z = step4_z(x, k)
    F = step4_F(x, z, k)
    imax = int(np.argmax(F))
    return Step4Report(
        k=k,
        grid=grid,
        max_F=float(F[imax]),
        x_at_max=float(x[imax]),
        min_z=float(np.min(z)),
        passed=bool(np.all(F < 0.0)),
        inconsistencies=int(np.sum(z < 1.0 - 1e-12)),
    )


def n2_ratio(z, k: int):
    """Two-block boundary objective (z^k + z - 1) / (2z - 1)^((k+1)/2), z >= 1.

    Unimodal in z: decreasing then increasing, so the constrained maximum sits
    at an endpoint, which is what forces the boundary graphon to be a clique
    or an anticlique.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 1.0):
        raise ValueError("ratio defined for z >= 1")
    out = (z**k + z - 1.0) / (2.0 * z - 1.0) ** ((k + 1) / 2.0)
    return out if np.ndim(z) else float(out)


def boundary_samples(k: int, samples: int = 500, allow_unverified: bool = False):
    """Rows (eps, tau_lower, tau_upper, branch) across eps in [0, 1]."""
    _check_k(k, allow_unverified)
    eps0 = crossing_point(k, allow_unverified)
    rows = []
    for eps in np.linspace(0.0, 1.0, samples):
        branch = "anticlique" if eps <= eps0 else "clique"
        rows.append((float(eps), er_curve(float(eps), k),
                     upper_boundary(float(eps), k, allow_unverified), branch))
    return rows
