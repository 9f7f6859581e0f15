"""Communication topologies.

A :class:`Digraph` stores, for every agent ``i``, the set of agents ``j`` that
``i`` receives information from. Self-loops are never stored; every weight
matrix built on top of a graph gets a positive diagonal anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Digraph",
    "GraphNotConnectableError",
    "generate_graph",
    "directed_cycle",
    "directed_exponential",
    "undirected_cycle",
    "erdos_renyi",
    "from_edges",
    "read_edge_list",
    "is_strongly_connected",
    "is_weight_balanced",
]

GRAPH_KINDS = ("directed_cycle", "directed_exponential", "undirected_cycle", "erdos_renyi")


class GraphNotConnectableError(RuntimeError):
    """Raised when random sampling never produced a strongly connected graph."""


@dataclass(frozen=True)
class Digraph:
    n: int
    in_neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        if len(self.in_neighbors) != self.n:
            raise ValueError("need one in-neighbor set per node")
        for i, nbrs in enumerate(self.in_neighbors):
            if i in nbrs:
                raise ValueError(f"self-loop at node {i}")
            for j in nbrs:
                if not 0 <= j < self.n:
                    raise ValueError(f"node {i} lists out-of-range neighbor {j}")

    def edges(self) -> list[tuple[int, int]]:
        """Directed edges as ``(src, dst)`` pairs, sorted."""
        return sorted((j, i) for i, nbrs in enumerate(self.in_neighbors) for j in nbrs)

    def out_neighbors(self) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in range(self.n)]
        for i, nbrs in enumerate(self.in_neighbors):
            for j in nbrs:
                out[j].add(i)
        return tuple(frozenset(s) for s in out)

    def in_degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.in_neighbors], dtype=int)

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for nbrs in self.in_neighbors:
            for j in nbrs:
                deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 matrix ``A`` with ``A[i, j] = 1`` iff ``i`` receives from ``j``."""
        a = np.zeros((self.n, self.n))
        for i, nbrs in enumerate(self.in_neighbors):
            a[i, sorted(nbrs)] = 1.0
        return a


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Digraph:
    """Build a digraph from ``(src, dst)`` pairs; ``dst`` receives from ``src``.

    Self-loops in the input are dropped.
    """
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for src, dst in edges:
        if not (0 <= src < n and 0 <= dst < n):
            raise ValueError(f"edge ({src}, {dst}) out of range for n={n}")
        if src != dst:
            nbrs[dst].add(src)
    return Digraph(n, tuple(frozenset(s) for s in nbrs))


def read_edge_list(path: str | Path, n: int | None = None) -> Digraph:
    """Read a ``src dst`` per line edge list (0-indexed, ``#`` comments)."""
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'src dst', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return from_edges(n, edges)


def directed_exponential(n: int, e: int) -> Digraph:
    """Node ``i`` sends to ``(i + 2**j) mod n`` for ``j = 0..e-1``."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if e < 1 or 2 ** (e - 1) >= n:
        raise ValueError(f"exponent e={e} invalid for n={n} (need 1 <= e and 2**(e-1) < n)")
    return from_edges(n, ((i, (i + 2**j) % n) for i in range(n) for j in range(e)))


def directed_cycle(n: int) -> Digraph:
    return directed_exponential(n, 1)


def undirected_cycle(n: int) -> Digraph:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    edges = []
    for i in range(n):
        edges += [(i, (i + 1) % n), ((i + 1) % n, i)]
    return from_edges(n, edges)


def erdos_renyi(n: int, p: float, seed: int = 0, max_attempts: int = 1000) -> Digraph:
    """Undirected G(n, p) resampled until connected.

    Each unordered pair is kept independently with probability ``p`` and
    stored in both directions.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"connectivity probability must lie in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        keep = rng.random(iu.size) < p
        src, dst = iu[keep], ju[keep]
        g = from_edges(n, list(zip(src, dst)) + list(zip(dst, src)))
        if is_strongly_connected(g):
            return g
    raise GraphNotConnectableError(
        f"graph not connectable at this p: no connected G({n}, {p}) in {max_attempts} attempts"
    )


def generate_graph(
    kind: str,
    n: int,
    seed: int = 0,
    *,
    e: int | None = None,
    p: float | None = None,
    max_attempts: int = 1000,
) -> Digraph:
    """Build one of the supported graph families and check strong connectivity.

    ``seed`` only matters for ``erdos_renyi``.
    """
    if kind == "directed_cycle":
        g = directed_cycle(n)
    elif kind == "directed_exponential":
        if e is None:
            raise ValueError("directed_exponential needs the exponent e")
        g = directed_exponential(n, e)
    elif kind == "undirected_cycle":
        g = undirected_cycle(n)
    elif kind == "erdos_renyi":
        if p is None:
            raise ValueError("erdos_renyi needs the probability p")
        g = erdos_renyi(n, p, seed=seed, max_attempts=max_attempts)
    else:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    if not is_strongly_connected(g):
        raise GraphNotConnectableError(f"{kind} graph with n={n} is not strongly connected")
    return g


def is_strongly_connected(g: Digraph) -> bool:
    if g.n == 1:
        return True
    n_comp, _ = connected_components(csr_matrix(g.adjacency()), directed=True, connection="strong")
    return n_comp == 1


def is_weight_balanced(g: Digraph) -> bool:
    return bool(np.array_equal(g.in_degrees(), g.out_degrees()))
