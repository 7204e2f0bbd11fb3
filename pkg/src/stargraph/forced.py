"""Finitely-forced experiments around the triangle graphon.

The family g_alpha = alpha + (1 - 2 alpha) * halfplane interpolates between
the triangle graphon (alpha = 0), which is pinned down by finitely many
subgraph densities, and the flat 1/2 graphon (alpha = 1/2).  Matching its
densities with K-podal graphons forces the block count to grow as alpha
shrinks; this module provides the closed-form density polynomials, the two
constraint modes (four densities, or the two forcing combinations zeta1 and
zeta2), the entropy runs, and the podality trend table.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graphon import (
    CHAIN3,
    CYCLE4,
    EDGE,
    DensityVector,
    SIGNED_QUAD,
    StepGraphon,
    discretize_halfplane,
    k_star,
)
from .optimize import (
    LinearConstraint,
    OptimizationResult,
    OptimizerConfig,
    maximize_entropy,
)

__all__ = [
    "ForcedSpec",
    "FOUR_DENSITIES",
    "ZETA_CONSTRAINTS",
    "galpha_densities",
    "galpha_graphon",
    "zeta",
    "forced_constraints",
    "run_forced",
    "podality_trend",
    "halfplane_cell_average",
    "discretize_halfplane_cuts",
]

FOUR_DENSITIES = "four"
ZETA_CONSTRAINTS = "zeta"


@dataclass(frozen=True)
class ForcedSpec:
    alpha: float
    mode: str = FOUR_DENSITIES

    def __post_init__(self):
        if not 0.0 <= self.alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2), got {self.alpha:g}")
        if self.mode not in (FOUR_DENSITIES, ZETA_CONSTRAINTS):
            raise ValueError(f"mode must be {FOUR_DENSITIES!r} or {ZETA_CONSTRAINTS!r}")


def galpha_densities(alpha: float) -> DensityVector:
    """Densities of g_alpha in closed form.

    t1 = 1/2, t2 = (1 - a + a^2)/3, 3-chain = (5 - 8a + 8a^2)/24 and
    4-cycle = (1 - 3a + 5a^2 - 4a^3 + 2a^4)/6.
    """
    a = float(alpha)
    if not 0.0 <= a < 0.5:
        raise ValueError(f"alpha must lie in [0, 1/2), got {a:g}")
    return DensityVector((
        (EDGE, 0.5),
        (k_star(2), (1.0 - a + a * a) / 3.0),
        (CHAIN3, (5.0 - 8.0 * a + 8.0 * a * a) / 24.0),
        (CYCLE4, (1.0 - 3.0 * a + 5.0 * a**2 - 4.0 * a**3 + 2.0 * a**4) / 6.0),
    ))


def zeta(arg) -> tuple:
    """The two forcing combinations (zeta1, zeta2).

    zeta1 = t1 - t2 - 1/6 and zeta2 = tQ; both vanish exactly at the triangle
    graphon.  Accepts either an alpha (closed forms a(1-a)/3 and
    a(1+a-4a^2+2a^3)/6) or a step graphon (density evaluation).
    """
    if isinstance(arg, StepGraphon):
        t1 = arg.edge_density()
        return t1 - arg.star_density(2) - 1.0 / 6.0, arg.signed_quad_density()
    a = float(arg)
    if not 0.0 <= a < 0.5:
        raise ValueError(f"alpha must lie in [0, 1/2), got {a:g}")
    return a * (1.0 - a) / 3.0, a * (1.0 + a - 4.0 * a * a + 2.0 * a**3) / 6.0


def galpha_graphon(alpha: float, n: int) -> StepGraphon:
    """Blockwise g_alpha on n equal blocks: alpha + (1-2 alpha) * halfplane cell."""
    base = discretize_halfplane(n)
    return StepGraphon(base.c, alpha + (1.0 - 2.0 * alpha) * base.g)


def halfplane_cell_average(a: float, b: float, c: float, d: float) -> float:
    """Exact fraction of the rectangle [a,b] x [c,d] lying in {x + y > 1}."""
    if not (b > a and d > c):
        raise ValueError("degenerate rectangle")
    x1, x2 = 1.0 - d, 1.0 - c
    integral = (d - c) * max(0.0, b - max(a, x2))
    lo, hi = max(a, x1), min(b, x2)
    if hi > lo:
        integral += (d - 1.0) * (hi - lo) + 0.5 * (hi * hi - lo * lo)
    return integral / ((b - a) * (d - c))


def discretize_halfplane_cuts(cuts) -> StepGraphon:
    """Step graphon of {x + y > 1} on an arbitrary partition of [0,1].

    cuts are the interior cut points, strictly increasing inside (0,1); block
    values are exact cell averages, so uniform cuts reproduce the equal-block
    discretization.
    """
    edges = np.concatenate([[0.0], np.asarray(cuts, dtype=float), [1.0]])
    if np.any(np.diff(edges) <= 0):
        raise ValueError("cut points must be strictly increasing in (0,1)")
    K = edges.size - 1
    g = np.empty((K, K))
    for i in range(K):
        for j in range(i, K):
            g[i, j] = g[j, i] = halfplane_cell_average(
                edges[i], edges[i + 1], edges[j], edges[j + 1])
    return StepGraphon(np.diff(edges), g)


def forced_constraints(spec: ForcedSpec):
    """Lower a forced spec to optimizer constraints."""
    a = spec.alpha
    if spec.mode == FOUR_DENSITIES:
        return tuple(LinearConstraint.fix_density(f, v)
                     for f, v in galpha_densities(a).entries)
    z1, z2 = zeta(a)
    return (
        LinearConstraint(terms=((EDGE, 1.0), (k_star(2), -1.0)),
                         target=1.0 / 6.0 + z1, label="t1-t2"),
        LinearConstraint(terms=((SIGNED_QUAD, 1.0),), target=z2, label="tQ"),
    )


def _structured_seeds(alpha: float, K: int):
    """Discretizations of g_alpha itself, the natural candidates for the
    maximizer's block structure: uniform cuts plus partitions refined toward
    either end of [0,1] at two different rates."""
    if K < 2:
        return []
    seeds = []
    interior = lambda g: np.clip(g, 1e-4, 1.0 - 1e-4)
    idx = np.arange(1, K) / K
    families = [np.linspace(0.0, 1.0, K + 1)[1:-1], idx**2, 1.0 - idx[::-1] ** 2]
    if K >= 3:
        geo = 0.5 ** np.arange(K - 1, 0, -1)
        families.append(geo)            # fine near 0
        families.append(1.0 - geo[::-1])  # fine near 1
    for cuts in families:
        base = discretize_halfplane_cuts(cuts)
        seeds.append((base.c, interior(alpha + (1.0 - 2.0 * alpha) * base.g)))
    return seeds


_LADDER = (0.05, 0.02, 0.01, 0.005, 0.003, 0.002)


def _default_cfg(cfg):
    return cfg or OptimizerConfig(restarts=48, early_stop_agree=8)


def _solve_at(alpha, mode, cfg, warm, k_min=1):
    constraints = forced_constraints(ForcedSpec(alpha=alpha, mode=mode))
    cfg = replace(cfg, k_patience=cfg.k_patience or 2,
                  give_up_after=cfg.give_up_after or 6)
    return maximize_entropy(constraints, cfg, warm=warm, k_min=k_min,
                            extra_seeds_fn=lambda K: _structured_seeds(alpha, K))


def _track_branch(alpha, mode, cfg, warm):
    """Light continuation rung: follow the warm branch and its splits only."""
    rung_cfg = replace(cfg, restarts=min(cfg.restarts, 8), early_stop_agree=3,
                       give_up_after=6)
    k_min = 1
    if warm:
        k_min = max(g.K for g in warm)
        rung_cfg = replace(rung_cfg, K_max=max(min(cfg.K_max, k_min + 2), k_min))
    res = _solve_at(alpha, mode, rung_cfg, warm, k_min=k_min)
    return res.graphon


def _ladder_between(hi, lo):
    return [a for a in _LADDER if lo < a < hi and a > max(lo * 1.5, lo + 5e-4)]


def run_forced(spec: ForcedSpec, cfg: OptimizerConfig | None = None,
               warm=None, warm_alpha: float = 0.5) -> OptimizationResult:
    """Maximize entropy under the forced constraints and report podality.

    The quartic 4-cycle constraint flattens the landscape, so the default
    budget is larger than the generic optimizer's (48 restarts), the seed
    lists at every K include exact-cell discretizations of g_alpha, and small
    alphas are reached by continuation: a ladder of intermediate alphas is
    tracked first, each rung warm-starting the next, so the optimizer follows
    the branch across podality transitions instead of hunting for it cold.
    A caller that already has a solution at a nearby alpha can pass it as
    (warm, warm_alpha) to start the ladder from there.
    """
    cfg = _default_cfg(cfg)
    warm_list = () if warm is None else (warm,)
    for a in _ladder_between(warm_alpha, spec.alpha):
        warm_list = (_track_branch(a, spec.mode, cfg, warm_list or None),)
    return _solve_at(spec.alpha, spec.mode, cfg, warm_list or None)


def podality_trend(alphas, mode: str = FOUR_DENSITIES,
                   cfg: OptimizerConfig | None = None):
    """Podality per alpha, for decreasing alphas; returns rows of
    (alpha, podality, entropy, K_used, max_residual) and whether podality is
    non-decreasing as alpha decreases.

    The whole trend is one continuation sweep: requested alphas get the full
    restart budget and K sweep, while intermediate ladder rungs between them
    only track the incumbent branch.
    """
    alphas = list(alphas)
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly decreasing")
    cfg = _default_cfg(cfg)
    rows = []
    warm = None
    prev_alpha = 0.5
    for a in alphas:
        for rung in _ladder_between(prev_alpha, a):
            warm = _track_branch(rung, mode, cfg, (warm,) if warm is not None else None)
        res = _solve_at(a, mode, cfg, (warm,) if warm is not None else None)
        warm = res.graphon
        prev_alpha = a
        rows.append({
            "alpha": a,
            "podality": res.podality,
            "entropy": res.entropy,
            "K_used": res.K_used,
            "max_residual": max(res.residuals.values()),
        })
    monotone = all(r2["podality"] >= r1["podality"] for r1, r2 in zip(rows, rows[1:]))
    return rows, monotone
