"""Entropy-maximizing step graphons under subgraph-density constraints."""

from .graphon import (
    StepGraphon,
    DensityFunctional,
    DensityVector,
    LabeledGraph,
    EDGE,
    CHAIN3,
    CYCLE4,
    SIGNED_QUAD,
    k_star,
    binary_entropy,
    constant_graphon,
    discretize_halfplane,
    graph_star_density,
    signed_quad_density_direct,
)

__version__ = "0.1.0"
