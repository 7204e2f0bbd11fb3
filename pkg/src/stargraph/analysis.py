"""Phase-transition machinery for the 2-star model.

Below a critical 2-star density the entropy maximizer at edge density 1/2 is
a single symmetric bipodal graphon; above it the maximizer splits into a
complement-related pair and the entropy surface develops a jump in its first
eps-derivative across eps = 1/2.  This module locates the critical point from
its transcendental stability equation, sweeps the entropy and c1 surfaces,
detects the derivative jump, and probes for coexisting maximizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .graphon import (
    StepGraphon,
    binary_entropy,
    binary_entropy_double_prime,
    binary_entropy_prime,
    k_star,
    EDGE,
)
from . import phase
from .optimize import (
    ConstraintSet,
    InfeasibleError,
    MaxIterationsError,
    OptimizationResult,
    OptimizerConfig,
    maximize_entropy,
    maximize_entropy_K,
    _as_constraints,
    _cluster_runs,
    _multistart,
    _result_from_runs,
)

__all__ = [
    "CriticalPoint",
    "SweepRow",
    "SweepTable",
    "symmetric_bipodal",
    "critical_tau2",
    "entropy_surface",
    "default_surface_grid",
    "derivative_scan",
    "coexistence_probe",
    "two_star_constraints",
]


def two_star_constraints(eps: float, tau2: float) -> ConstraintSet:
    return ConstraintSet(((EDGE, eps), (k_star(2), tau2)))


def symmetric_bipodal(nu: float) -> StepGraphon:
    """Equal-block bipodal maximizer form: values 1/2+nu, 1/2, 1/2-nu.

    Edge density is exactly 1/2 and the 2-star density is 1/4 + nu^2/4.
    The complement composed with the block swap maps it to itself.
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"nu must lie in [0, 1/2), got {nu:g}")
    return StepGraphon(np.array([0.5, 0.5]),
                       np.array([[0.5 + nu, 0.5], [0.5, 0.5 - nu]]))


@dataclass(frozen=True)
class CriticalPoint:
    nu: float
    tau2_c: float
    sigma2_c: float
    residual: float

    def to_dict(self):
        return {"nu": self.nu, "tau2_c": self.tau2_c, "sigma2_c": self.sigma2_c,
                "equation_residual": self.residual}


def _stability_lhs(nu: float) -> float:
    """Second-variation stability combination for the symmetric maximizer."""
    S = binary_entropy
    Sp = binary_entropy_prime
    Spp = binary_entropy_double_prime
    w = 0.5 - nu
    return float((2.0 * S(w) - 2.0 * S(0.5) + 3.0 * nu * Sp(w))
                 * (2.0 - 0.5 * Spp(w)) + 8.0 * nu * nu * Spp(w))


def critical_tau2() -> CriticalPoint:
    """Solve the transcendental stability equation for the critical 2-star density.

    The equation has a degenerate root at nu = 0; the stability threshold is
    the interior sign change, bracketed by a scan over (0, 1/2) and resolved
    by Brent's method to 1e-12 in nu.  tau2_c = 1/4 + nu^2/4 (about 0.287).
    """
    grid = np.linspace(1e-3, 0.5 - 1e-9, 2000)
    vals = np.array([_stability_lhs(v) for v in grid])
    sign_changes = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if sign_changes.size == 0:
        raise RuntimeError("no interior root of the stability equation found")
    i = sign_changes[-1]
    nu = brentq(_stability_lhs, grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16)
    return CriticalPoint(
        nu=float(nu),
        tau2_c=0.25 + nu * nu / 4.0,
        sigma2_c=nu * nu / 4.0,
        residual=abs(_stability_lhs(nu)),
    )


# -- surface sweeps -----------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    eps: float
    sigma2: float
    tau2: float
    entropy: float
    c1: float
    podality: int
    el_residual: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    failures: tuple = ()
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def _sweep_config(cfg: OptimizerConfig | None) -> OptimizerConfig:
    # interior 2-star maximizers are bipodal; a short K sweep plus a modest
    # restart budget keeps grid scans fast without giving up the check
    return cfg or OptimizerConfig(K_max=3, restarts=10, early_stop_agree=5)


def _surface_point(task):
    eps, sig, cfg = task
    tau2 = sig + eps * eps
    point = phase.PhasePoint(eps, tau2, 2)
    if not phase.feasible(point):
        return ("fail", (eps, sig, "infeasible"))
    try:
        res = maximize_entropy(two_star_constraints(eps, tau2), cfg)
    except (InfeasibleError, MaxIterationsError) as exc:
        return ("fail", (eps, sig, type(exc).__name__))
    return ("row", SweepRow(
        eps=eps, sigma2=sig, tau2=tau2, entropy=res.entropy,
        c1=float(res.graphon.c[0]), podality=res.podality,
        el_residual=res.el_residual))


def entropy_surface(eps_grid, sigma2_grid, cfg: OptimizerConfig | None = None,
                    jobs: int = 1) -> SweepTable:
    """Maximize entropy on a (eps, sigma2) grid; infeasible or failed points
    are recorded in .failures rather than aborting the sweep.  Grid points
    are independent, so jobs > 1 fans them out over worker processes; the
    assembled table does not depend on completion order."""
    cfg = _sweep_config(cfg)
    tasks = [(float(eps), float(sig), cfg)
             for eps in np.asarray(eps_grid, dtype=float)
             for sig in np.asarray(sigma2_grid, dtype=float)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_surface_point, tasks))
    else:
        outcomes = [_surface_point(t) for t in tasks]
    rows = tuple(payload for kind, payload in outcomes if kind == "row")
    failures = tuple(payload for kind, payload in outcomes if kind == "fail")
    return SweepTable(rows=rows, failures=failures, meta={"model": "2star"})


def default_surface_grid(n_sigma: int = 9):
    """Cross-sections eps = 0.05 k for k = 7..13 with a fine band near 1/2."""
    eps = sorted(set(np.round(np.arange(7, 14) * 0.05, 10)) | {0.48, 0.52})
    sigma = np.linspace(0.005, 0.045, n_sigma)
    return np.array(eps), sigma


# -- derivative jump ----------------------------------------------------------


def derivative_scan(tau2: float, eps_center: float = 0.5, half_points: int = 5,
                    h: float = 1e-3, cfg: OptimizerConfig | None = None) -> dict:
    """Detect a jump of the eps-derivative of the entropy at eps_center.

    Entropy is evaluated at 2*half_points+1 nodes spaced h around the center.
    Adjacent differences give one-sided derivative samples at midpoints (five
    per side for the default window); a linear fit per side extrapolated to
    the center estimates the one-sided derivative limits.  The jump is their
    gap, and it counts as detected when it exceeds ten times its fit standard
    error, which absorbs both optimizer noise and surface curvature.
    """
    cfg = _sweep_config(cfg)
    if half_points < 3:
        raise ValueError("need at least 3 derivative samples per side for a "
                         "meaningful fit standard error")
    offsets = np.arange(-half_points, half_points + 1)
    eps_nodes = eps_center + offsets * h
    entropies = []
    for eps in eps_nodes:
        point = phase.PhasePoint(float(eps), float(tau2), 2)
        if not phase.feasible(point):
            raise InfeasibleError(f"grid point eps={eps:g}, tau2={tau2:g} infeasible")
        res = maximize_entropy(two_star_constraints(float(eps), float(tau2)), cfg)
        entropies.append(res.entropy)
    s = np.array(entropies)
    mid = (eps_nodes[:-1] + eps_nodes[1:]) / 2.0
    deriv = np.diff(s) / h
    left = mid < eps_center
    fit_l = _line_fit(mid[left], deriv[left], eps_center)
    fit_r = _line_fit(mid[~left], deriv[~left], eps_center)
    jump = abs(fit_r["value"] - fit_l["value"])
    se = float(np.hypot(fit_l["se"], fit_r["se"]))
    return {
        "tau2": float(tau2),
        "jump_size": float(jump),
        "jump_se": se,
        "jump_detected": bool(jump > 10.0 * se),
        "slope_left": fit_l["value"],
        "slope_right": fit_r["value"],
        "profile": list(zip(mid.tolist(), deriv.tolist())),
        "nodes": list(zip(eps_nodes.tolist(), s.tolist())),
    }


def _line_fit(x, y, x0):
    """OLS line fit with the predicted value and its standard error at x0."""
    n = x.size
    X = np.column_stack([np.ones(n), x - x0])
    coef, res_ss, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ coef
    dof = max(n - 2, 1)
    s2 = float(np.sum((y - fitted) ** 2)) / dof
    XtX_inv = np.linalg.inv(X.T @ X)
    se0 = float(np.sqrt(max(s2 * XtX_inv[0, 0], 0.0)))
    return {"value": float(coef[0]), "slope": float(coef[1]), "se": se0}


# -- coexistence --------------------------------------------------------------


def coexistence_probe(tau2: float, cfg: OptimizerConfig | None = None) -> dict:
    """Look for distinct maximizer clusters at (1/2, tau2).

    Complementing and swapping the blocks maps the problem at eps = 1/2 to
    itself, so after the multistart the mirror of the best run is injected as
    one more seed; a genuinely unique maximizer collapses back onto its own
    cluster, while a coexisting pair shows up as two clusters related by
    complement-and-flip with matching entropies.
    """
    cfg = cfg or OptimizerConfig(K_max=2, restarts=24)
    constraints = _as_constraints(two_star_constraints(0.5, tau2))
    runs, _ = _multistart(constraints, 2, cfg)
    if not runs:
        raise InfeasibleError(f"no feasible run at (0.5, {tau2:g})")
    best = max(runs, key=lambda r: r.entropy)
    mirror = best.graphon.complement().canonicalize()
    mruns, _ = _multistart(constraints, 2, cfg, extra_seeds=(mirror,))
    seen = runs + mruns
    best_entropy = max(r.entropy for r in seen)
    top = [r for r in seen if r.entropy >= best_entropy - 1e-7]
    clusters = _cluster_runs(top)
    reps = [max(cl, key=lambda r: r.entropy) for cl in clusters]
    entropies = [r.entropy for r in reps]
    gap = float(max(entropies) - min(entropies)) if len(entropies) > 1 else 0.0
    pairing = _mirror_pairing([r.canonical for r in reps])
    return {
        "tau2": float(tau2),
        "clusters": [r.canonical for r in reps],
        "entropies": entropies,
        "entropy_gap": gap,
        "mirror_related": pairing,
        "n_clusters": len(reps),
    }


def _mirror_pairing(graphons, tol=1e-3):
    """True when the cluster set is closed under complement-and-flip."""
    def close(a, b):
        return a.K == b.K and np.max(np.abs(a.c - b.c)) < tol \
            and np.max(np.abs(a.g - b.g)) < tol
    for g in graphons:
        m = g.complement().canonicalize()
        if not any(close(m, other) for other in graphons):
            return False
    return True
