"""The three-constraint (edge, 2-star, 3-star) phase space.

Two closed-form inequalities, a Cauchy-Schwarz bound and its image under the
complement involution, cut out the front and back faces of the taco-shaped
phase space.  The remaining upper faces are traced by brute force: the
boundary-attaining graphons are tripodal with 0-1 values and doubly monotone
block structure, so sweeping every such pattern over the weight simplex and
keeping the maximal 2-star density per (edge, 3-star) bin recovers them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from .graphon import StepGraphon

__all__ = [
    "TacoPoint",
    "cs_inequality",
    "dual_inequality",
    "involution",
    "jacobian_poly",
    "monotone_01_patterns",
    "boundary_bruteforce",
    "TacoCloud",
]


@dataclass(frozen=True)
class TacoPoint:
    """Density triple (t1, t2, t3) with the taco plot coordinates attached."""

    t1: float
    t2: float
    t3: float

    @property
    def sigma2(self) -> float:
        return self.t2 - self.t1 * self.t1

    @property
    def u(self) -> float:
        if self.t1 <= 0.0:
            return 0.0
        return self.t3 - self.t2 * self.t2 / self.t1

    @classmethod
    def of(cls, graphon: StepGraphon) -> "TacoPoint":
        return cls(graphon.edge_density(), graphon.star_density(2),
                   graphon.star_density(3))


def cs_inequality(p: TacoPoint) -> float:
    """t1 t3 - t2^2; nonnegative for every realizable triple (Cauchy-Schwarz)."""
    return p.t1 * p.t3 - p.t2 * p.t2


def involution(p: TacoPoint) -> TacoPoint:
    """Density action of the complement: an involution of the phase space."""
    return TacoPoint(1.0 - p.t1,
                     1.0 - 2.0 * p.t1 + p.t2,
                     1.0 - 3.0 * p.t1 + 3.0 * p.t2 - p.t3)


def dual_inequality(p: TacoPoint) -> float:
    """(1-t1)(1-3t1+3t2-t3) - (1-2t1+t2)^2, the involution image of the
    Cauchy-Schwarz bound; also nonnegative on realizable triples."""
    return (1.0 - p.t1) * (1.0 - 3.0 * p.t1 + 3.0 * p.t2 - p.t3) \
        - (1.0 - 2.0 * p.t1 + p.t2) ** 2


def jacobian_poly(a: float, x2: float, x3: float) -> float:
    """Jacobian of the interior three-parameter graphon family.

    (a-1)^2 x2^4 (a^2 x2^3 + 2 a^2 x3 x2^2 + 2 a x3^2 x2 + x3 x2^2
    + x3^2 x2 + x3^3): a sum of positive terms, hence nonzero on the open
    parameter domain, which is what makes the family fill the taco interior.
    """
    return (a - 1.0) ** 2 * x2**4 * (
        a * a * x2**3 + 2.0 * a * a * x3 * x2 * x2 + 2.0 * a * x3 * x3 * x2
        + x3 * x2 * x2 + x3 * x3 * x2 + x3**3)


def _is_doubly_monotone(mat) -> bool:
    """Rows and columns nonincreasing (blocks sorted by descending degree)."""
    return bool(np.all(np.diff(mat, axis=0) <= 0) and np.all(np.diff(mat, axis=1) <= 0))


def monotone_01_patterns():
    """All distinct symmetric 3x3 0-1 matrices that are doubly monotone under
    some block ordering, reduced to their sorted representative."""
    seen = {}
    for bits in product((0.0, 1.0), repeat=6):
        m = np.empty((3, 3))
        m[np.triu_indices(3)] = bits
        m = np.triu(m) + np.triu(m, 1).T
        for perm in permutations(range(3)):
            p = m[np.ix_(perm, perm)]
            if _is_doubly_monotone(p):
                seen[p.tobytes()] = p
                break
    return [seen[k] for k in sorted(seen)]


@dataclass(frozen=True)
class TacoCloud:
    """Brute-force sweep output: the point cloud and the binned upper envelope."""

    points: np.ndarray         # columns t1, t2, t3, u, sigma2, family_id
    envelope: np.ndarray       # columns t1, t3, max t2 (bin centers)
    bins: int
    resolution: int

    def envelope_sigma2_profile(self, n_eps: int = 101):
        """Project the cloud to (t1, max sigma2): recovers the 2-star boundary."""
        pts = self.points
        eps_edges = np.linspace(0.0, 1.0, n_eps + 1)
        idx = np.clip(np.digitize(pts[:, 0], eps_edges) - 1, 0, n_eps - 1)
        best = np.full(n_eps, -np.inf)
        np.maximum.at(best, idx, pts[:, 4])
        centers = (eps_edges[:-1] + eps_edges[1:]) / 2.0
        keep = np.isfinite(best)
        return centers[keep], best[keep]


def boundary_bruteforce(resolution: int = 200, bins: int = 200) -> TacoCloud:
    """Sweep all monotone tripodal 0-1 patterns over the weight simplex.

    Weights run over the closed simplex grid x_i = n_i / resolution, so
    bipodal and constant degenerations (the ER curve, g-cliques and
    g-anticliques) are included exactly.  The envelope keeps the largest
    2-star density in each (t1, t3) bin.
    """
    if resolution < 50:
        raise ValueError("resolution must be at least 50")
    patterns = monotone_01_patterns()
    i, j = np.meshgrid(np.arange(resolution + 1), np.arange(resolution + 1),
                       indexing="ij")
    keep = (i + j) <= resolution
    x1 = i[keep] / resolution
    x2 = j[keep] / resolution
    x3 = 1.0 - x1 - x2
    X = np.stack([x1, x2, x3], axis=1)
    chunks = []
    for fid, pat in enumerate(patterns):
        D = X @ pat.T
        t1 = np.sum(X * D, axis=1)
        t2 = np.sum(X * D**2, axis=1)
        t3 = np.sum(X * D**3, axis=1)
        sigma2 = t2 - t1 * t1
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(t1 > 0.0, t3 - t2 * t2 / np.where(t1 > 0, t1, 1.0), 0.0)
        chunks.append(np.column_stack([t1, t2, t3, u, sigma2,
                                       np.full(t1.size, float(fid))]))
    points = np.vstack(chunks)
    envelope = _bin_envelope(points, bins)
    return TacoCloud(points=points, envelope=envelope, bins=bins,
                     resolution=resolution)


def _bin_envelope(points, bins):
    """Per (t1, t3) bin, the point of maximal t2, reported at its own
    coordinates so every envelope row is an exactly realizable triple."""
    t1, t2, t3 = points[:, 0], points[:, 1], points[:, 2]
    i1 = np.clip((t1 * bins).astype(int), 0, bins - 1)
    i3 = np.clip((t3 * bins).astype(int), 0, bins - 1)
    flat = i1 * bins + i3
    order = np.lexsort((t2, flat))
    flat_sorted = flat[order]
    last = np.nonzero(np.diff(np.append(flat_sorted, -1)) != 0)[0]
    winners = order[last]
    return np.column_stack([t1[winners], t3[winners], t2[winners]])
