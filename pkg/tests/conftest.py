import numpy as np
import pytest

from stargraph.graphon import StepGraphon


def random_graphon(rng, K=None, interior=False):
    """Random step graphon; interior keeps values away from 0 and 1."""
    if K is None:
        K = int(rng.integers(1, 7))
    c = rng.dirichlet(np.ones(K))
    lo, hi = (0.05, 0.95) if interior else (0.0, 1.0)
    g = rng.uniform(lo, hi, (K, K))
    g = (g + g.T) / 2.0
    return StepGraphon(c, g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# -- independent brute-force density oracles (multi-index einsum sums) --------


def brute_star(graphon, k):
    """t_k as an explicit (k+1)-index contraction, independent of the
    degree-moment path."""
    c, g = graphon.c, graphon.g
    letters = "abcdefgh"
    center = "z"
    spec = ",".join(f"{center}{letters[i]}" for i in range(k))
    operands = [g] * k + [c] + [c] * k
    spec = spec + "," + center + "," + ",".join(letters[i] for i in range(k))
    return float(np.einsum(spec + "->", *operands))


def brute_chain3(graphon):
    c, g = graphon.c, graphon.g
    return float(np.einsum("wx,xy,yz,w,x,y,z->", g, g, g, c, c, c, c))


def brute_cycle4(graphon):
    c, g = graphon.c, graphon.g
    return float(np.einsum("wx,xy,yz,zw,w,x,y,z->", g, g, g, g, c, c, c, c))


def brute_signed_quad(graphon):
    c, g = graphon.c, graphon.g
    h = 1.0 - g
    return float(np.einsum("wx,xy,yz,zw,w,x,y,z->", g, h, g, h, c, c, c, c))
