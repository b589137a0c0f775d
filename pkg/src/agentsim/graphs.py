"""Undirected graphs as plain adjacency maps, plus the textual encoding
used in traversal prompts.

A graph is ``dict[int, tuple[int, ...]]`` with nodes 0..n-1 and neighbor
lists in ascending order.
"""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Sequence

Graph = dict[int, tuple[int, ...]]

__all__ = ["Graph", "encode_incident", "gnp_random_graph", "graph_from_edges"]


def graph_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build an adjacency map over nodes 0..n-1 from undirected edges."""
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    for u, v in edges:
        if u == v:
            raise ValueError("self-loops are not supported")
        adj[u].add(v)
        adj[v].add(u)
    return {i: tuple(sorted(adj[i])) for i in range(n)}


def gnp_random_graph(n: int, p: float, rng: random.Random) -> Graph:
    """Erdos-Renyi G(n, p) sample.

    Iterates ordered pairs i < j and includes each edge iff the next uniform
    draw is below p, so a given ``rng`` state yields exactly one graph.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return graph_from_edges(n, edges)


def encode_incident(graph: Mapping[int, Sequence[int]]) -> str:
    """Canonical text form: one line per node, ascending, neighbors ascending.

    "Node i is connected to nodes a, b, c." with an explicit "is not
    connected to any node." line for isolated nodes.  Byte-stable for equal
    graphs.
    """
    lines = []
    for node in sorted(graph):
        neighbors = sorted(graph[node])
        if neighbors:
            listed = ", ".join(str(v) for v in neighbors)
            lines.append(f"Node {node} is connected to nodes {listed}.")
        else:
            lines.append(f"Node {node} is not connected to any node.")
    return "\n".join(lines)
