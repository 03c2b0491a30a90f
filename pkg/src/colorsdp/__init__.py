"""Semidefinite encoding of 3-colourability for degree-4 graphs, with an
interior-point solver and an oracle-backed falsification harness."""

from .graph import (
    Coloring,
    Graph,
    GraphError,
    OracleResult,
    enumerate_graphs,
    generate,
    is_d_graph,
    oracle_3color,
    parse_dimacs,
)

__version__ = "0.1.0"
