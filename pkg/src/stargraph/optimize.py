"""Constrained entropy maximization over K-podal step graphons.

The problem is: maximize the Shannon entropy density over block fractions c
and symmetric values g, subject to equality constraints on subgraph densities
(or affine combinations of them).  Parameters are kept strictly interior by
construction: c lives on the open simplex through a softmax with the last
logit pinned to zero, and each g_ij passes through a logistic.  Equalities
are enforced with an augmented Lagrangian whose inner subproblems are solved
by L-BFGS-B with analytic gradients.  Multi-start over structured and random
seeds guards against local maxima; runs agreeing with the best entropy are
clustered by their degree vectors so coexisting maximizers are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from . import phase
from .graphon import (
    CHAIN3,
    CYCLE4,
    EDGE,
    SIGNED_QUAD,
    DensityFunctional,
    StepGraphon,
    binary_entropy,
    k_star,
)

__all__ = [
    "ConstraintSet",
    "LinearConstraint",
    "OptimizerConfig",
    "OptimizationResult",
    "InfeasibleError",
    "MaxIterationsError",
    "ELUndefinedError",
    "density_gradients",
    "entropy_gradients",
    "initializers",
    "maximize_entropy_K",
    "maximize_entropy",
    "el_fit",
    "el_residual_2star",
    "bipodal_identity_residual",
]

ENTROPY_TIE_TOL = 1e-7
CLUSTER_TOL = 1e-3
EL_BOUNDARY_DELTA = 1e-6
LOGIT_BOUND = 36.0
SIMPLEX_LOGIT_BOUND = 30.0


class InfeasibleError(RuntimeError):
    """No restart met the constraint tolerance and the targets look unreachable."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MaxIterationsError(RuntimeError):
    """Iteration budget exhausted while still closing in; best run attached."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ELUndefinedError(ValueError):
    """Euler-Lagrange diagnostics need interior edge probabilities."""


@dataclass(frozen=True)
class LinearConstraint:
    """Equality sum_m coeff_m * t_m(g) = target over density functionals."""

    terms: tuple
    target: float
    label: str = ""

    def evaluate(self, graphon: StepGraphon) -> float:
        return sum(coef * f.evaluate(graphon) for f, coef in self.terms)

    @classmethod
    def fix_density(cls, functional: DensityFunctional, target: float) -> "LinearConstraint":
        return cls(terms=((functional, 1.0),), target=float(target), label=functional.label)


@dataclass(frozen=True)
class ConstraintSet:
    """Targets for distinct density functionals, at most six of them."""

    items: tuple

    def __post_init__(self):
        items = tuple((f, float(v)) for f, v in self.items)
        if len(items) > 6:
            raise ValueError("at most 6 constraints supported")
        labels = [f.label for f, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError("constraint functionals must be distinct")
        for f, v in items:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"target {f.label}={v:g} outside [0,1]")
        object.__setattr__(self, "items", items)

    @classmethod
    def parse(cls, text: str) -> "ConstraintSet":
        """Parse 't1=0.5,t2=0.28' style strings."""
        items = []
        for chunk in text.split(","):
            label, _, value = chunk.partition("=")
            if not value:
                raise ValueError(f"bad constraint {chunk!r}, expected label=value")
            items.append((DensityFunctional.parse(label), float(value)))
        return cls(tuple(items))

    def lower(self) -> tuple:
        return tuple(LinearConstraint.fix_density(f, v) for f, v in self.items)

    def target_of(self, functional: DensityFunctional):
        for f, v in self.items:
            if f == functional:
                return v
        return None


@dataclass(frozen=True)
class OptimizerConfig:
    K_max: int = 8
    restarts: int = 24
    constraint_tol: float = 1e-9
    grad_tol: float = 1e-7
    penalty_growth: float = 10.0
    max_outer: int = 30
    seed: int = 0
    mu0: float = 100.0
    inner_maxiter: int = 3000
    # stop a restart loop once this many runs agree with the incumbent
    # entropy to 1e-8 (None = always run every restart)
    early_stop_agree: int | None = None
    # extra seeds derived by splitting blocks of a warm lower-K solution
    warm_splits: int = 2
    # stop the K sweep this many block counts after the last improvement
    k_patience: int | None = None
    # declare a block count infeasible when none of this many leading seeds
    # converges (the structured seeds run first)
    give_up_after: int | None = None

    def __post_init__(self):
        if not 1 <= self.K_max <= 16:
            raise ValueError("K_max must lie in 1..16")
        for name in ("constraint_tol", "grad_tol", "penalty_growth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 1 or self.max_outer < 1:
            raise ValueError("restarts and max_outer must be >= 1")


@dataclass(frozen=True)
class OptimizationResult:
    graphon: StepGraphon
    entropy: float
    residuals: dict
    el_residual: float
    podality: int
    multipliers: tuple
    K_used: int
    restarts_agreeing: int
    clusters: tuple = ()
    kkt_residual: float = float("nan")
    k_profile: tuple = ()

    def to_dict(self) -> dict:
        return {
            "entropy": self.entropy,
            "graphon": self.graphon.to_dict(),
            "residuals": self.residuals,
            "el_residual": self.el_residual,
            "podality": self.podality,
            "multipliers": list(self.multipliers),
            "K_used": self.K_used,
            "restarts_agreeing": self.restarts_agreeing,
            "clusters": [g.to_dict() for g in self.clusters],
        }


# -- analytic gradients -------------------------------------------------------
#
# Each density is a polynomial contraction of (c, g).  The raw derivative
# below treats every matrix entry as independent; the symmetric (tied)
# partial for i != j is the sum of the (i,j) and (j,i) raw entries.


def _raw_density_grads(c, g, d, functional: DensityFunctional):
    """Value and raw partials (dc, dG) of one density functional."""
    kind = functional.kind
    if kind == "edge":
        val = float(c @ d)
        return val, 2.0 * d, np.outer(c, c)
    if kind == "kstar":
        k = functional.k
        dk1 = d ** (k - 1)
        val = float(c @ (dk1 * d))
        dc = d**k + k * (g @ (c * dk1))
        dG = k * np.outer(c * dk1, c)
        return val, dc, dG
    if kind == "chain3":
        e = c * d
        ge = g @ e
        val = float(e @ g @ e)
        dc = 2.0 * d * ge + 2.0 * (g @ (c * ge))
        dG = np.outer(e, e) + 2.0 * np.outer(c * ge, c)
        return val, dc, dG
    if kind == "cycle4":
        gc = g * c[None, :]
        gc2 = gc @ gc
        val = float(np.trace(gc2 @ gc2))
        h3g = gc2 @ gc @ g
        dc = 4.0 * np.diag(h3g).copy()
        dG = 4.0 * (c[:, None] * (gc2 @ g)) * c[None, :]
        return val, dc, dG
    if kind == "signed_quad":
        t1, dc1, dG1 = _raw_density_grads(c, g, d, EDGE)
        t3, dc3, dG3 = _raw_density_grads(c, g, d, CHAIN3)
        t4, dc4, dG4 = _raw_density_grads(c, g, d, CYCLE4)
        val = t1 * t1 - 2.0 * t3 + t4
        return val, 2.0 * t1 * dc1 - 2.0 * dc3 + dc4, 2.0 * t1 * dG1 - 2.0 * dG3 + dG4
    raise ValueError(f"unknown functional kind {kind!r}")


def _raw_entropy_grads(c, g):
    S_mat = binary_entropy(g)
    val = float(0.5 * c @ S_mat @ c)
    dc = S_mat @ c
    with np.errstate(divide="ignore"):
        sp = np.log1p(-g) - np.log(g)
    sp = np.where((g <= 0.0) | (g >= 1.0), 0.0, sp)
    dG = 0.5 * sp * np.outer(c, c)
    return val, dc, dG


def _tie_symmetric(dG):
    """Fold raw matrix partials onto the upper triangle of a symmetric matrix."""
    tied = dG + dG.T
    tied[np.diag_indices_from(dG)] = np.diag(dG)
    return tied


def density_gradients(graphon: StepGraphon, functional: DensityFunctional):
    """Exact partials of a density w.r.t. every c_i and tied symmetric g_ij.

    Returns (value, dc, dg) with dg[i, j] the derivative when g_ij and g_ji
    move together (so off-diagonal entries carry the symmetry factor 2).
    """
    c, g = graphon.c, graphon.g
    val, dc, dG = _raw_density_grads(c, g, g @ c, functional)
    return val, dc, _tie_symmetric(dG)


def entropy_gradients(graphon: StepGraphon):
    """Exact partials of the entropy density w.r.t. every c_i and tied g_ij."""
    val, dc, dG = _raw_entropy_grads(graphon.c, graphon.g)
    return val, dc, _tie_symmetric(dG)


# -- parametrization ----------------------------------------------------------


class _Parametrization:
    """Bijection between unconstrained parameters and interior (c, g)."""

    def __init__(self, K: int):
        self.K = K
        self.n_u = K - 1
        self.iu, self.ju = np.triu_indices(K)
        self.n_v = self.iu.size
        self.dim = self.n_u + self.n_v

    def decode(self, theta):
        K = self.K
        w = np.zeros(K)
        w[: self.n_u] = theta[: self.n_u]
        w -= w.max()
        e = np.exp(w)
        c = e / e.sum()
        v = theta[self.n_u:]
        g = np.zeros((K, K))
        g[self.iu, self.ju] = expit(v)
        g = np.triu(g) + np.triu(g, 1).T
        return c, g

    def encode(self, c, g):
        c = np.clip(np.asarray(c, dtype=float), 1e-12, None)
        u = np.log(c[:-1] / c[-1])
        gv = np.clip(np.asarray(g, dtype=float)[self.iu, self.ju],
                     expit(-LOGIT_BOUND), expit(LOGIT_BOUND))
        theta = np.concatenate([np.clip(u, -SIMPLEX_LOGIT_BOUND, SIMPLEX_LOGIT_BOUND),
                                logit(gv)])
        return theta

    def chain(self, theta, c, g, dc, dG_tied):
        """Pull (dc, tied dG) back to unconstrained parameters."""
        grad = np.empty(self.dim)
        if self.n_u:
            grad[: self.n_u] = c[:-1] * (dc[:-1] - float(c @ dc))
        v = theta[self.n_u:]
        gv = g[self.iu, self.ju]
        grad[self.n_u:] = dG_tied[self.iu, self.ju] * gv * (1.0 - gv)
        return grad

    def bounds(self):
        return [(-SIMPLEX_LOGIT_BOUND, SIMPLEX_LOGIT_BOUND)] * self.n_u + \
               [(-LOGIT_BOUND, LOGIT_BOUND)] * self.n_v


def _constraint_eval(c, g, d, constraints):
    """Values and raw gradients for every linear constraint."""
    vals = np.empty(len(constraints))
    dcs, dGs = [], []
    for m, con in enumerate(constraints):
        v = 0.0
        dc = np.zeros_like(c)
        dG = np.zeros_like(g)
        for f, coef in con.terms:
            fv, fdc, fdG = _raw_density_grads(c, g, d, f)
            v += coef * fv
            dc += coef * fdc
            dG += coef * fdG
        vals[m] = v - con.target
        dcs.append(dc)
        dGs.append(dG)
    return vals, dcs, dGs


# -- augmented Lagrangian -----------------------------------------------------


@dataclass
class _Run:
    theta: np.ndarray
    entropy: float
    residuals: np.ndarray
    kkt: float
    converged: bool
    graphon: StepGraphon = None
    canonical: StepGraphon = None


def _pieces(param, constraints, th):
    c, g = param.decode(th)
    d = g @ c
    S, dSc, dSG = _raw_entropy_grads(c, g)
    r, dcs, dGs = _constraint_eval(c, g, d, constraints)
    grads = np.array([param.chain(th, c, g, dcm, _tie_symmetric(dGm))
                      for dcm, dGm in zip(dcs, dGs)])
    gS = param.chain(th, c, g, dSc, _tie_symmetric(dSG))
    return c, g, S, gS, r, grads


def _kkt_polish(param, constraints, theta, lam, cfg, max_newton=12):
    """Newton iteration on the KKT system of the equality-constrained problem.

    The augmented Lagrangian stalls once the penalty needed for the last few
    digits exceeds what the inner line searches resolve; this polish closes
    the final gap quadratically.  The Hessian block is a central finite
    difference of the analytic Lagrangian gradient, accurate enough for
    Newton directions at these tiny dimensions.
    """
    m = len(constraints)

    def kkt_vec(th, lm):
        _, _, _, gS, r, grads = _pieces(param, constraints, th)
        return np.concatenate([-gS + lm @ grads, r]), grads

    th = theta.copy()
    lm = lam.copy()
    F, grads = kkt_vec(th, lm)
    best = (float(np.max(np.abs(F))), th.copy(), lm.copy())
    h = 1e-6
    for _ in range(max_newton):
        n = th.size
        H = np.empty((n, n))
        for i in range(n):
            tp = th.copy(); tp[i] += h
            tm = th.copy(); tm[i] -= h
            _, _, _, gSp, _, gradsp = _pieces(param, constraints, tp)
            _, _, _, gSm, _, gradsm = _pieces(param, constraints, tm)
            H[:, i] = ((-gSp + lm @ gradsp) - (-gSm + lm @ gradsm)) / (2.0 * h)
        H = 0.5 * (H + H.T)
        J = np.zeros((n + m, n + m))
        J[:n, :n] = H
        J[:n, n:] = grads.T
        J[n:, :n] = grads
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        scale = 1.0
        for _ in range(8):
            th_try = th + scale * step[:n]
            lm_try = lm + scale * step[n:]
            try:
                F_try, grads_try = kkt_vec(th_try, lm_try)
            except (ValueError, FloatingPointError):
                scale *= 0.5
                continue
            if np.max(np.abs(F_try)) < np.max(np.abs(F)):
                th, lm, F, grads = th_try, lm_try, F_try, grads_try
                break
            scale *= 0.5
        else:
            break
        worst = float(np.max(np.abs(F)))
        if worst < best[0]:
            best = (worst, th.copy(), lm.copy())
        if worst <= 0.01 * min(cfg.grad_tol, cfg.constraint_tol):
            break
    return best[1], best[2]


def _auglag(param, constraints, theta0, cfg: OptimizerConfig) -> _Run:
    theta = np.asarray(theta0, dtype=float)
    bounds = param.bounds()

    def pieces(th):
        return _pieces(param, constraints, th)

    def phi(th, lam, mu):
        _, _, S, gS, r, grads = pieces(th)
        value = -S + float(lam @ r) + 0.5 * mu * float(r @ r)
        grad = -gS + (lam + mu * r) @ grads
        return value, grad

    # multiplier warm start: least-squares fit of grad S within the span of
    # the constraint gradients, so seeds placed at or near stationary points
    # are not dragged away by the first, weakly penalized subproblem
    _, _, _, gS0, r0, grads0 = pieces(theta)
    lam = np.zeros(len(constraints))
    if len(constraints):
        sol, *_ = np.linalg.lstsq(grads0.T, gS0, rcond=None)
        lam = np.clip(sol, -1e3, 1e3)

    # the first subproblem drifts to residuals of order |lam|/mu, so mu must
    # outweigh the warm-started multipliers or good seeds get dragged away
    mu = cfg.mu0
    lam_scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if lam_scale > 0.0:
        mu = float(np.clip(lam_scale / 1e-3, cfg.mu0, 1e8))
    prev_norm = float(np.max(np.abs(r0))) if r0.size else 0.0
    gtol = 1e-6
    res_norm = prev_norm
    r = r0
    stalled = 0
    polishes = 0
    for outer in range(cfg.max_outer):
        sol = minimize(phi, theta, args=(lam, mu), jac=True, method="L-BFGS-B",
                       bounds=bounds,
                       options={"maxiter": cfg.inner_maxiter, "ftol": 1e-18,
                                "gtol": gtol, "maxcor": 20})
        theta = sol.x
        c, g, _, gS, r, grads = pieces(theta)
        res_norm = float(np.max(np.abs(r))) if r.size else 0.0
        lam = lam + mu * r
        kkt = float(np.max(np.abs(-gS + lam @ grads)))
        if res_norm <= 1e-5 and (res_norm > cfg.constraint_tol or kkt > cfg.grad_tol) \
                and polishes < 2:
            polishes += 1
            theta, lam = _kkt_polish(param, constraints, theta, lam, cfg)
            c, g, _, gS, r, grads = pieces(theta)
            res_norm = float(np.max(np.abs(r))) if r.size else 0.0
            kkt = float(np.max(np.abs(-gS + lam @ grads)))
        if res_norm <= cfg.constraint_tol and kkt <= cfg.grad_tol:
            graphon = StepGraphon(c, g)
            return _Run(theta, graphon.shannon_entropy(), np.abs(r), kkt, True, graphon)
        # a dead run: the subproblem solver cannot move and the residual is
        # frozen well above tolerance; growing mu further only wastes time
        if sol.status != 0 and res_norm > 0.5 * prev_norm:
            stalled += 1
            if stalled >= 3:
                break
        else:
            stalled = 0
        if res_norm > 0.25 * prev_norm:
            mu *= cfg.penalty_growth
        prev_norm = max(res_norm, 1e-300)
        gtol = max(min(gtol, 0.1 * res_norm), 0.02 * cfg.grad_tol)

    c, g, _, gS, r, grads = pieces(theta)
    graphon = StepGraphon(c, g)
    return _Run(theta, graphon.shannon_entropy(), np.abs(r),
                float(np.max(np.abs(-gS + lam @ grads))), False, graphon)


# -- seeding ------------------------------------------------------------------


def _edge_target(constraints):
    for con in constraints:
        if len(con.terms) == 1 and con.terms[0][0] == EDGE and con.terms[0][1] == 1.0:
            return con.target
    return None


def _star2_target(constraints):
    for con in constraints:
        if len(con.terms) == 1 and con.terms[0][0] == k_star(2) and con.terms[0][1] == 1.0:
            return con.target
    return None


def _embed(c2, g2, K, rng):
    """Embed a 2-block pattern into K blocks by splitting the larger block."""
    c2 = np.asarray(c2, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if K == 2:
        return c2, g2
    big = int(np.argmax(c2))
    parts = K - 1
    c = np.empty(K)
    rows = np.empty(K, dtype=int)
    c[0] = c2[1 - big]
    rows[0] = 1 - big
    c[1:] = c2[big] / parts
    rows[1:] = big
    g = g2[np.ix_(rows, rows)] + 1e-3 * rng.standard_normal((K, K))
    g = np.clip((g + g.T) / 2.0, 1e-3, 1.0 - 1e-3)
    return c, g


def initializers(constraints, K: int, cfg: OptimizerConfig):
    """Deterministic seed list: ER constant, interior-perturbed clique and
    anticlique patterns, the symmetric bipodal closed form when the targets
    are an (edge, 2-star) pair, then uniform-random fills up to cfg.restarts.

    Structured seeds get a tiny reproducible jitter so that none of them sits
    exactly on a symmetry manifold, where every symmetry-breaking gradient
    component vanishes and descent methods would stay trapped.
    """
    param = _Parametrization(K)
    rng = np.random.default_rng(cfg.seed)

    def jittered(c, g):
        theta = param.encode(c, g)
        return theta + 1e-5 * rng.standard_normal(theta.size)

    eps = _edge_target(constraints)
    tau2 = _star2_target(constraints)
    fallback = 0.5 if eps is None else eps
    seeds = [jittered(np.full(K, 1.0 / K), np.full((K, K), np.clip(fallback, 1e-3, 1 - 1e-3)))]
    if K == 1:
        # one block leaves a single interior value; the ER seed is enough
        return seeds
    if K >= 2 and eps is not None and 0.0 < eps < 1.0:
        hi, lo = 1.0 - 1e-3, 1e-3
        cq = np.sqrt(eps)
        c, g = _embed([cq, 1.0 - cq], [[hi, lo], [lo, lo]], K, rng)
        seeds.append(jittered(c, g))
        ca = 1.0 - np.sqrt(1.0 - eps)
        c, g = _embed([ca, 1.0 - ca], [[hi, hi], [hi, lo]], K, rng)
        seeds.append(jittered(c, g))
        if tau2 is not None and tau2 > eps * eps:
            nu = 2.0 * np.sqrt(tau2 - eps * eps)
            vals = np.clip([eps + nu, eps, eps - nu], 1e-3, 1.0 - 1e-3)
            c, g = _embed([0.5, 0.5], [[vals[0], vals[1]], [vals[1], vals[2]]], K, rng)
            seeds.append(jittered(c, g))
    while len(seeds) < cfg.restarts:
        theta = np.concatenate([rng.uniform(-1.0, 1.0, param.n_u),
                                rng.uniform(-3.0, 3.0, param.n_v)])
        seeds.append(theta)
    return seeds[: max(cfg.restarts, len(seeds))]


# -- Euler-Lagrange diagnostics ------------------------------------------------


def _el_basis(graphon: StepGraphon, constraints):
    """Per-pair functional-derivative features for the EL fit.

    The optimality condition is ln(1/g_ij - 1) = beta_1 + sum_m beta_m
    phi_m(i,j), with phi_m the symmetrized functional derivative of the m-th
    constrained quantity divided by c_i c_j.  The edge functional contributes
    a constant and is absorbed by the intercept.
    """
    c, g = graphon.c, graphon.g
    d = g @ c
    iu, ju = np.triu_indices(graphon.K)
    cols = [np.ones(iu.size)]
    names = ["beta1"]
    for con in constraints:
        dG = np.zeros_like(g)
        pure_edge = all(f == EDGE for f, _ in con.terms)
        if pure_edge:
            continue
        for f, coef in con.terms:
            _, _, fdG = _raw_density_grads(c, g, d, f)
            dG += coef * fdG
        sym = 0.5 * (dG + dG.T)
        cc = np.outer(c, c)
        with np.errstate(divide="ignore", invalid="ignore"):
            feat = np.where(cc > 0, sym / cc, 0.0)
        cols.append(feat[iu, ju])
        names.append(con.label or "combo")
    return iu, ju, np.column_stack(cols), names


def el_fit(graphon: StepGraphon, constraints):
    """Weighted least-squares fit of the Euler-Lagrange multipliers.

    Pairs with g_ij within 1e-6 of {0,1} are excluded (the log diverges
    there) and counted.  Returns (betas, residual, n_excluded, degenerate)
    where residual is the c_i c_j weighted RMS misfit of ln(1/g_ij - 1).
    """
    c, g = graphon.c, graphon.g
    iu, ju, X, _ = _el_basis(graphon, constraints)
    y_g = g[iu, ju]
    w = (c[iu] * c[ju]) * np.where(iu == ju, 1.0, 2.0)
    keep = (y_g > EL_BOUNDARY_DELTA) & (y_g < 1.0 - EL_BOUNDARY_DELTA) & (w > 0)
    n_excluded = int(np.sum(~keep))
    if not np.any(keep):
        raise ELUndefinedError("all block pairs have boundary values")
    X, w, y_g = X[keep], w[keep], y_g[keep]
    y = np.log(1.0 / y_g - 1.0)
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    misfit = y - X @ beta
    residual = float(np.sqrt(np.sum(w * misfit**2) / np.sum(w)))
    return beta, residual, n_excluded, rank < X.shape[1]


def el_residual_2star(result_or_graphon, k: int = 2):
    """Fit ln(1/g_ij - 1) = beta1 + beta2 (d_i^(k-1) + d_j^(k-1)) over block
    pairs weighted by c_i c_j; at a true maximizer the weighted RMS misfit
    vanishes to solver precision."""
    graphon = result_or_graphon.graphon if isinstance(result_or_graphon, OptimizationResult) \
        else result_or_graphon
    c, g = graphon.c, graphon.g
    d = g @ c
    iu, ju = np.triu_indices(graphon.K)
    y_g = g[iu, ju]
    w = (c[iu] * c[ju]) * np.where(iu == ju, 1.0, 2.0)
    keep = (y_g > EL_BOUNDARY_DELTA) & (y_g < 1.0 - EL_BOUNDARY_DELTA) & (w > 0)
    if not np.any(keep):
        raise ELUndefinedError("all block pairs have boundary values")
    dk = d ** (k - 1)
    X = np.column_stack([np.ones(iu.size), dk[iu] + dk[ju]])[keep]
    w, y_g = w[keep], y_g[keep]
    y = np.log(1.0 / y_g - 1.0)
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    misfit = y - X @ beta
    residual = float(np.sqrt(np.sum(w * misfit**2) / np.sum(w)))
    return {"beta1": float(beta[0]), "beta2": float(beta[1]), "residual": residual,
            "degenerate": bool(rank < 2), "excluded": int(np.sum(~keep))}


def bipodal_identity_residual(graphon: StepGraphon) -> float:
    """|(1/g11 - 1)(1/g22 - 1) - (1/g12 - 1)^2| for an interior bipodal graphon."""
    if graphon.K != 2:
        raise ValueError("identity applies to bipodal graphons")
    g = graphon.g
    if np.any(g <= EL_BOUNDARY_DELTA) or np.any(g >= 1.0 - EL_BOUNDARY_DELTA):
        raise ELUndefinedError("identity needs interior edge probabilities")
    return float(abs((1.0 / g[0, 0] - 1.0) * (1.0 / g[1, 1] - 1.0)
                     - (1.0 / g[0, 1] - 1.0) ** 2))


# -- drivers ------------------------------------------------------------------


def _as_constraints(cs):
    if isinstance(cs, ConstraintSet):
        return cs.lower()
    return tuple(cs)


def _kstar_pair(constraints):
    """(eps, tau, k) when the constraints are exactly an edge/k-star pair."""
    if len(constraints) != 2:
        return None
    eps = tau = None
    k = None
    for con in constraints:
        if len(con.terms) != 1 or con.terms[0][1] != 1.0:
            return None
        f = con.terms[0][0]
        if f == EDGE:
            eps = con.target
        elif f.kind == "kstar":
            k, tau = f.k, con.target
        else:
            return None
    if eps is None or tau is None:
        return None
    return eps, tau, k


def _cluster_key(graphon: StepGraphon):
    can = graphon.canonicalize()
    d = can.g @ can.c
    return can, d


def _cluster_runs(runs):
    """Group runs whose canonical degree and fraction vectors agree to 1e-3."""
    clusters = []
    for run in runs:
        can = run.canonical
        d = can.g @ can.c
        placed = False
        for cl in clusters:
            ref = cl[0].canonical
            rd = ref.g @ ref.c
            if can.K == ref.K and np.max(np.abs(d - rd)) < CLUSTER_TOL \
                    and np.max(np.abs(can.c - ref.c)) < CLUSTER_TOL:
                cl.append(run)
                placed = True
                break
        if not placed:
            clusters.append([run])
    return clusters


def _multistart(constraints, K, cfg, extra_seeds=(), warm=None):
    """Run the augmented Lagrangian from every seed; returns (runs, best_failed).

    Warm splits and caller-provided structured seeds run first, so both the
    agreement early-stop and the infeasibility give-up see the most promising
    candidates before any random fill.
    """
    param = _Parametrization(K)
    seeds = []
    warm_list = () if warm is None else (warm,) if isinstance(warm, StepGraphon) else tuple(warm)
    rng = np.random.default_rng(cfg.seed + 7919 * K)
    for w in warm_list:
        if not (cfg.warm_splits > 0 and 2 <= w.K <= K):
            continue
        if w.K == K:
            seeds.append(param.encode(w.c, w.g))
            continue
        for j in range(cfg.warm_splits):
            c, g = _split_block(w, K, rng, first=j if j < w.K else None)
            seeds.append(param.encode(c, g))
    for item in extra_seeds:
        if isinstance(item, StepGraphon):
            if item.K != K:
                continue
            seeds.append(param.encode(item.c, item.g))
        else:
            seeds.append(param.encode(*item))
    seeds.extend(initializers(constraints, K, cfg))

    runs = []
    best_failed = None
    best_entropy = -np.inf
    agree = 0
    for idx, theta0 in enumerate(seeds):
        run = _auglag(param, constraints, theta0, cfg)
        if run.converged:
            run.canonical = run.graphon.canonicalize()
            runs.append(run)
            if run.entropy > best_entropy + 1e-8:
                best_entropy = run.entropy
                agree = 1
            elif run.entropy >= best_entropy - 1e-8:
                best_entropy = max(best_entropy, run.entropy)
                agree += 1
            if cfg.early_stop_agree is not None and agree >= cfg.early_stop_agree:
                break
        else:
            worst = float(np.max(run.residuals)) if run.residuals.size else 0.0
            if best_failed is None or worst < float(np.max(best_failed.residuals)):
                best_failed = run
        if cfg.give_up_after is not None and not runs and idx + 1 >= cfg.give_up_after:
            break
    return runs, best_failed


def _result_from_runs(constraints, K, runs):
    best = max(runs, key=lambda r: r.entropy)
    top = [r for r in runs if r.entropy >= best.entropy - ENTROPY_TIE_TOL]
    clusters = _cluster_runs(top)
    winner = best
    can = winner.canonical
    residuals = {con.label or f"c{m}": float(abs(con.evaluate(winner.graphon) - con.target))
                 for m, con in enumerate(constraints)}
    try:
        betas, el_res, _, degenerate = el_fit(winner.graphon, constraints)
        if degenerate:
            el_res = 0.0
    except ELUndefinedError:
        betas, el_res = np.array([]), float("nan")
    return OptimizationResult(
        graphon=can,
        entropy=winner.entropy,
        residuals=residuals,
        el_residual=el_res,
        podality=can.K,
        multipliers=tuple(float(b) for b in betas),
        K_used=K,
        restarts_agreeing=len(top),
        clusters=tuple(max(cl, key=lambda r: r.entropy).canonical for cl in clusters),
        kkt_residual=winner.kkt,
    )


def maximize_entropy_K(cs, K: int, cfg: OptimizerConfig | None = None,
                       warm=None, extra_seeds=()) -> OptimizationResult:
    """Best entropy over K-block graphons meeting the constraints.

    Runs the augmented Lagrangian from every seed, keeps runs whose worst
    constraint residual is within cfg.constraint_tol, and returns the highest
    entropy found, canonicalized.  Raises InfeasibleError when no restart
    comes close and MaxIterationsError when the best run was still closing in
    when the budget ran out.
    """
    cfg = cfg or OptimizerConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    constraints = _as_constraints(cs)
    pair = _kstar_pair(constraints)
    if pair is not None and 2 <= pair[2] <= phase.K_VERIFIED_MAX:
        if not phase.feasible(phase.PhasePoint(*pair)):
            raise InfeasibleError(
                f"targets (eps={pair[0]:g}, t{pair[2]}={pair[1]:g}) lie outside "
                f"the k-star phase space")
    runs, best_failed = _multistart(constraints, K, cfg, extra_seeds, warm)
    if not runs:
        worst = float(np.max(best_failed.residuals)) if best_failed is not None else np.inf
        if worst <= math.sqrt(cfg.constraint_tol):
            raise MaxIterationsError(
                f"residual {worst:.3g} above tolerance {cfg.constraint_tol:g} "
                f"after {cfg.max_outer} outer iterations", best=best_failed)
        raise InfeasibleError(
            f"no restart met the constraint tolerance (best residual {worst:.3g})",
            best=best_failed)
    return _result_from_runs(constraints, K, runs)


def _split_block(graphon: StepGraphon, K: int, rng, first=None):
    """Refine a lower-podal solution into K blocks by splitting blocks.

    Identical value rows keep the step function (hence every density) exact;
    the uneven mass split and small row jitter avoid parking the seed on the
    duplicated-block symmetry manifold.  `first` picks the block to split
    first, after which the heaviest block is split until K is reached.
    """
    c = list(graphon.c)
    rows = list(range(len(c)))
    while len(c) < K:
        i = int(np.argmax(c)) if first is None else first % len(graphon.c)
        first = None
        keep = 0.6 * c[i]
        c.append(c[i] - keep)
        c[i] = keep
        rows.append(rows[i])
    g = graphon.g[np.ix_(rows, rows)] + 1e-3 * rng.standard_normal((K, K))
    g = np.clip((g + g.T) / 2.0, 1e-4, 1.0 - 1e-4)
    return np.asarray(c), g


def maximize_entropy(cs, cfg: OptimizerConfig | None = None,
                     extra_seeds_fn=None, warm=None, k_min: int = 1) -> OptimizationResult:
    """Sweep K = k_min..K_max and report the smallest K achieving the best entropy.

    The returned result carries the canonical graphon of the smallest K whose
    best entropy is within 1e-7 of the overall best, so the podality is the
    effective one, not the requested block count.  extra_seeds_fn, when given,
    maps K to additional (c, g) seeds for that block count; warm, when given,
    seeds every K with splits of a known nearby solution (continuation).
    """
    cfg = cfg or OptimizerConfig()
    per_K = {}
    best_seen = -np.inf
    errors = {}
    external = () if warm is None else (warm,) if isinstance(warm, StepGraphon) else tuple(warm)
    incumbent = None
    for K in range(max(1, k_min), cfg.K_max + 1):
        try:
            extra = tuple(extra_seeds_fn(K)) if extra_seeds_fn is not None else ()
            warm_list = external + ((incumbent,) if incumbent is not None else ())
            res = maximize_entropy_K(cs, K, cfg, warm=warm_list, extra_seeds=extra)
        except (InfeasibleError, MaxIterationsError) as exc:
            errors[K] = exc
            continue
        per_K[K] = res
        if res.entropy >= best_seen:
            best_seen = res.entropy
            incumbent = res.graphon
        if cfg.k_patience is not None and per_K:
            best_K = min(Kx for Kx, r in per_K.items()
                         if r.entropy >= best_seen - ENTROPY_TIE_TOL)
            if K >= best_K + cfg.k_patience:
                break
    if not per_K:
        if errors:
            raise next(iter(errors.values()))
        raise InfeasibleError("no feasible K")
    best_entropy = max(r.entropy for r in per_K.values())
    K_used = min(K for K, r in per_K.items() if r.entropy >= best_entropy - ENTROPY_TIE_TOL)
    chosen = per_K[K_used]
    profile = tuple(sorted((K, r.entropy) for K, r in per_K.items()))
    return replace(chosen, K_used=K_used, k_profile=profile)
