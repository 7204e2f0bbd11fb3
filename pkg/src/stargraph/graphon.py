"""Step graphons: the block data model, subgraph densities, and entropy.

A K-podal step graphon is a symmetric function on [0,1]^2 that is constant
on the cells of a product partition.  It is stored as a vector ``c`` of K
block fractions (summing to one) and a symmetric K x K matrix ``g`` of edge
probabilities.  All densities used in this package (edges, k-stars, 3-chains,
4-cycles, signed quadrilaterals) reduce to small polynomial contractions of
``c`` and ``g`` and are evaluated exactly here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

__all__ = [
    "StepGraphon",
    "DensityFunctional",
    "DensityVector",
    "LabeledGraph",
    "EDGE",
    "CHAIN3",
    "CYCLE4",
    "SIGNED_QUAD",
    "k_star",
    "binary_entropy",
    "binary_entropy_prime",
    "binary_entropy_double_prime",
    "constant_graphon",
    "discretize_halfplane",
    "signed_quad_density_direct",
    "graph_star_density",
]

SIMPLEX_TOL = 1e-12
SYMMETRY_TOL = 1e-12
CLAMP_TOL = 1e-14

# canonicalization defaults, chosen so optimizer noise well below the
# constraint tolerance never inflates the measured podality
DEFAULT_MERGE_TOL = 1e-4
DEFAULT_DROP_TOL = 1e-6


def binary_entropy(w):
    """Pointwise Shannon entropy S(w) = -w ln w - (1-w) ln(1-w), with 0 ln 0 = 0."""
    w = np.asarray(w, dtype=float)
    return -(xlogy(w, w) + xlogy(1.0 - w, 1.0 - w))


def binary_entropy_prime(w):
    """S'(w) = ln((1-w)/w)."""
    w = np.asarray(w, dtype=float)
    return np.log((1.0 - w) / w)


def binary_entropy_double_prime(w):
    """S''(w) = -1 / (w (1-w))."""
    w = np.asarray(w, dtype=float)
    return -1.0 / (w * (1.0 - w))


def _clamp_unit(a, tol=CLAMP_TOL, what="value"):
    a = np.asarray(a, dtype=float)
    if np.min(a) < -tol or np.max(a) > 1.0 + tol:
        raise ValueError(f"{what} outside [0,1] beyond tolerance {tol:g}: "
                         f"range [{np.min(a):.17g}, {np.max(a):.17g}]")
    return np.clip(a, 0.0, 1.0)


@dataclass(frozen=True)
class StepGraphon:
    """K-podal step graphon: block fractions ``c`` and symmetric values ``g``.

    Invariants enforced at construction: c_i >= 0 with sum(c) = 1 to 1e-12,
    g exactly symmetric (asymmetry up to 1e-12 is averaged away), and all
    values in [0,1] (roundoff up to 1e-14 outside is clamped).  Instances are
    immutable; the backing arrays are marked read-only.
    """

    c: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        c = _clamp_unit(np.atleast_1d(np.asarray(self.c, dtype=float)), what="block fraction")
        g = np.asarray(self.g, dtype=float)
        if g.shape != (c.size, c.size):
            raise ValueError(f"value matrix shape {g.shape} does not match {c.size} blocks")
        if abs(c.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"block fractions sum to {c.sum():.17g}, not 1")
        asym = np.max(np.abs(g - g.T)) if g.size else 0.0
        if asym > SYMMETRY_TOL:
            raise ValueError(f"value matrix asymmetry {asym:.3g} exceeds {SYMMETRY_TOL:g}")
        g = _clamp_unit((g + g.T) / 2.0, what="edge probability")
        c.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "g", g)

    @property
    def K(self) -> int:
        return self.c.size

    # -- densities ---------------------------------------------------------

    def degree_vector(self) -> np.ndarray:
        """Block degrees d_i = sum_j g_ij c_j."""
        return self.g @ self.c

    def edge_density(self) -> float:
        """t_1 = sum_ij g_ij c_i c_j."""
        return float(self.c @ self.g @ self.c)

    def star_density(self, k: int) -> float:
        """k-star density t_k = sum_i c_i d_i^k (k-th moment of the degree function)."""
        if k < 1:
            raise ValueError("star order k must be >= 1")
        d = self.degree_vector()
        return float(self.c @ d**k)

    def chain3_density(self) -> float:
        """3-chain density, evaluated as sum_xy c_x d_x g_xy d_y c_y."""
        e = self.c * self.degree_vector()
        return float(e @ self.g @ e)

    def cycle4_density(self) -> float:
        """Unsigned 4-cycle density tr(A^4) with A_ij = sqrt(c_i) g_ij sqrt(c_j)."""
        r = np.sqrt(self.c)
        a = r[:, None] * self.g * r[None, :]
        a2 = a @ a
        return float(np.sum(a2 * a2))

    def signed_quad_density(self) -> float:
        """Signed quadrilateral density t_Q = t_1^2 - 2*t3chain + t4cycle."""
        return self.edge_density() ** 2 - 2.0 * self.chain3_density() + self.cycle4_density()

    def shannon_entropy(self) -> float:
        """Entropy density (1/2) sum_ij S(g_ij) c_i c_j, in [0, ln(2)/2]."""
        return float(0.5 * self.c @ binary_entropy(self.g) @ self.c)

    # -- transforms --------------------------------------------------------

    def complement(self) -> "StepGraphon":
        """Graphon with values 1 - g_ij; entropy is unchanged."""
        return StepGraphon(self.c.copy(), 1.0 - self.g)

    def permute(self, order) -> "StepGraphon":
        """Reorder blocks; all densities and the entropy are invariant."""
        order = np.asarray(order, dtype=int)
        return StepGraphon(self.c[order], self.g[np.ix_(order, order)])

    def canonicalize(self, merge_tol: float = DEFAULT_MERGE_TOL,
                     drop_tol: float = DEFAULT_DROP_TOL) -> "StepGraphon":
        """Normal form: drop negligible blocks, merge indistinguishable ones, sort.

        Blocks with c_i < drop_tol are removed (mass renormalized).  Blocks
        whose value rows differ by less than merge_tol in sup norm are merged
        into one block with the c-weighted average row; merging repeats until
        stable.  Remaining blocks are sorted by degree descending, ties broken
        by interior value g_ii, then by c_i.  Every density moves by at most
        a small multiple of merge_tol.
        """
        for name, tol in (("merge_tol", merge_tol), ("drop_tol", drop_tol)):
            if not 0.0 < tol < 0.1:
                raise ValueError(f"{name} must lie in (0, 0.1), got {tol:g}")
        c, g = self.c, self.g
        keep = c >= drop_tol
        if not keep.any():
            keep[int(np.argmax(c))] = True
        c = c[keep] / c[keep].sum()
        g = g[np.ix_(keep, keep)]

        while True:
            K = c.size
            groups = _merge_groups(g, merge_tol)
            if len(groups) == K:
                break
            cm = np.array([c[idx].sum() for idx in groups])
            gm = np.empty((len(groups), len(groups)))
            for a, ia in enumerate(groups):
                for b, ib in enumerate(groups):
                    w = np.outer(c[ia], c[ib])
                    gm[a, b] = float(np.sum(w * g[np.ix_(ia, ib)]) / w.sum())
            gm = (gm + gm.T) / 2.0
            c, g = cm / cm.sum(), gm

        d = g @ c
        order = sorted(range(c.size), key=lambda i: (-d[i], -g[i, i], -c[i]))
        return StepGraphon(c[order], g[np.ix_(order, order)])

    def podality(self, merge_tol: float = DEFAULT_MERGE_TOL) -> int:
        """Number of blocks after canonicalization."""
        return self.canonicalize(merge_tol=merge_tol).K

    # -- sampling ----------------------------------------------------------

    def sample_graph(self, n: int, seed: int) -> "LabeledGraph":
        """Sample a simple graph on n vertices from this graphon.

        Vertices are assigned to blocks by largest-remainder rounding of n*c,
        and each edge (i, j), i < j, appears independently with probability
        g[block(i), block(j)].  Deterministic for fixed (graphon, n, seed).
        """
        if n < 1:
            raise ValueError("need n >= 1")
        sizes = _largest_remainder(self.c, n)
        membership = np.repeat(np.arange(self.K), sizes)
        probs = self.g[np.ix_(membership, membership)]
        rng = np.random.default_rng(seed)
        u = rng.random((n, n))
        upper = np.triu(u < probs, k=1)
        adj = (upper | upper.T).astype(np.uint8)
        return LabeledGraph(n=n, adjacency=adj)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"c": self.c.tolist(), "g": self.g.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "StepGraphon":
        return cls(np.asarray(obj["c"], dtype=float), np.asarray(obj["g"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "StepGraphon":
        return cls.from_dict(json.loads(text))


def _merge_groups(g, merge_tol):
    """Union-find partition of block indices with sup-norm row distance < merge_tol."""
    K = g.shape[0]
    parent = list(range(K))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(K):
        for j in range(i + 1, K):
            if np.max(np.abs(g[i] - g[j])) < merge_tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(K):
        groups.setdefault(find(i), []).append(i)
    return [np.array(v, dtype=int) for v in sorted(groups.values(), key=lambda v: v[0])]


def _largest_remainder(c, n):
    """Apportion n items to fractions c, largest fractional remainder first."""
    raw = c * n
    sizes = np.floor(raw).astype(int)
    short = n - sizes.sum()
    if short > 0:
        remainders = raw - sizes
        for i in np.lexsort((np.arange(c.size), -remainders))[:short]:
            sizes[i] += 1
    return sizes


# -- density functionals ----------------------------------------------------


@dataclass(frozen=True)
class DensityFunctional:
    """Identifier for one subgraph density: edge, k-star, 3-chain, 4-cycle or
    signed quadrilateral."""

    kind: str
    k: int = 0

    _KINDS = ("edge", "kstar", "chain3", "cycle4", "signed_quad")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "kstar" and self.k < 2:
            raise ValueError("k-star functional requires k >= 2")

    def evaluate(self, graphon: StepGraphon) -> float:
        if self.kind == "edge":
            return graphon.edge_density()
        if self.kind == "kstar":
            return graphon.star_density(self.k)
        if self.kind == "chain3":
            return graphon.chain3_density()
        if self.kind == "cycle4":
            return graphon.cycle4_density()
        return graphon.signed_quad_density()

    @property
    def label(self) -> str:
        if self.kind == "kstar":
            return f"t{self.k}"
        return {"edge": "t1", "chain3": "t3chain", "cycle4": "t4cycle",
                "signed_quad": "tQ"}[self.kind]

    @classmethod
    def parse(cls, label: str) -> "DensityFunctional":
        """Parse labels like t1, t2, t5, t3chain, t4cycle, tQ."""
        label = label.strip()
        if label == "t1":
            return EDGE
        if label == "t3chain":
            return CHAIN3
        if label == "t4cycle":
            return CYCLE4
        if label == "tQ":
            return SIGNED_QUAD
        if label.startswith("t") and label[1:].isdigit():
            return k_star(int(label[1:]))
        raise ValueError(f"unknown density label {label!r}")


EDGE = DensityFunctional("edge")
CHAIN3 = DensityFunctional("chain3")
CYCLE4 = DensityFunctional("cycle4")
SIGNED_QUAD = DensityFunctional("signed_quad")


def k_star(k: int) -> DensityFunctional:
    return DensityFunctional("kstar", k)


@dataclass(frozen=True)
class DensityVector:
    """Ordered list of (functional, value) pairs.

    Values must lie in [0,1]; the signed-quadrilateral density is a
    probability of a signed event combination and is allowed to dip below
    zero only by 1e-12 of roundoff.
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple((f, float(v)) for f, v in self.entries)
        for f, v in entries:
            lo = -1e-12 if f.kind == "signed_quad" else 0.0
            if v < lo or v > 1.0:
                raise ValueError(f"density {f.label}={v:.17g} outside [0,1]")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, graphon: StepGraphon, functionals) -> "DensityVector":
        return cls(tuple((f, f.evaluate(graphon)) for f in functionals))

    def as_dict(self) -> dict:
        return {f.label: v for f, v in self.entries}

    def __getitem__(self, functional: DensityFunctional) -> float:
        for f, v in self.entries:
            if f == functional:
                return v
        raise KeyError(functional)


# -- sampled graphs ----------------------------------------------------------


@dataclass(frozen=True)
class LabeledGraph:
    """Simple labeled graph: vertex count and a symmetric 0/1 adjacency matrix."""

    n: int
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.uint8)
        if adj.shape != (self.n, self.n):
            raise ValueError("adjacency shape does not match vertex count")
        if np.any(adj != adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("no loops allowed")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    def edge_list(self):
        iu, ju = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(iu.tolist(), ju.tolist()))


def graph_star_density(graph: LabeledGraph, k: int) -> float:
    """Homomorphism density of the k-star in a finite graph: sum_v deg(v)^k / n^(k+1)."""
    if k < 1:
        raise ValueError("star order k must be >= 1")
    degs = graph.degrees().astype(float)
    return float(np.sum(degs**k) / graph.n ** (k + 1))


# -- constructions -----------------------------------------------------------


def constant_graphon(p: float, K: int = 1) -> StepGraphon:
    """Erdos-Renyi graphon g == p on K equal blocks."""
    c = np.full(K, 1.0 / K)
    return StepGraphon(c, np.full((K, K), float(p)))


def discretize_halfplane(n: int) -> StepGraphon:
    """n-block step graphon of the set {x + y > 1}, with exact cell averages.

    Cells strictly above the anti-diagonal get value 1, cells strictly below
    get 0, and the n cells the line x+y=1 cuts in half get exactly 1/2.  The
    edge density is 1/2 for every n.
    """
    if n < 2:
        raise ValueError("need n >= 2 blocks")
    i = np.arange(1, n + 1)
    s = i[:, None] + i[None, :]
    g = np.where(s >= n + 2, 1.0, np.where(s == n + 1, 0.5, 0.0))
    return StepGraphon(np.full(n, 1.0 / n), g)


def signed_quad_density_direct(graphon: StepGraphon) -> float:
    """Signed quadrilateral density from its defining integral.

    Evaluates the four-fold sum of g(w,x) [1-g(x,y)] g(y,z) [1-g(z,w)] over
    blocks as tr((G C Gbar C)^2), an independent path from the
    t1^2 - 2*t3chain + t4cycle identity.
    """
    C = np.diag(graphon.c)
    M = graphon.g @ C
    N = (1.0 - graphon.g) @ C
    MN = M @ N
    return float(np.trace(MN @ MN))
