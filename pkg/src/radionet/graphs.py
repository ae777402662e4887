"""Undirected connected graphs in CSR form, with BFS helpers.

The simulator works on static topologies; the diameter is computed eagerly at
construction (desk scale, n <= ~4096) and cached on the instance.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class GraphError(ValueError):
    """Malformed topology: not undirected/connected, self-loop, bad file."""


class Graph:
    """Undirected connected graph over nodes 0..n-1.

    Attributes
    ----------
    n : number of nodes
    indptr, indices : CSR adjacency (each undirected edge stored twice)
    diameter : max BFS distance over all pairs, computed at construction
    split : optional (node, offset) marking a node whose adjacency list is
        split into two groups for the merged-copy reception rule used by the
        broadcast reduction; plain graphs leave it at (-1, 0).
    """

    __slots__ = ("n", "indptr", "indices", "diameter", "split", "_edge_set")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], split=(-1, 0), _skip_checks=False):
        if n <= 0:
            raise GraphError("graph needs at least one node")
        self.n = int(n)
        edge_list = [(int(u), int(v)) for u, v in edges]
        seen = set()
        for u, v in edge_list:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for n={n}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge ({u},{v})")
            seen.add(key)
        self._edge_set = seen
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in edge_list:
            adj[u].append(v)
            adj[v].append(u)
        if split[0] < 0:
            adj = [sorted(a) for a in adj]
        counts = np.array([len(a) for a in adj], dtype=np.int64)
        self.indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int32)
        self.indices = np.fromiter(
            (w for a in adj for w in a), dtype=np.int32, count=int(counts.sum())
        )
        self.split = (int(split[0]), int(split[1]))
        if not _skip_checks:
            dist0 = bfs_distances(self, [0])
            if (dist0 < 0).any():
                raise GraphError("graph is not connected")
        self.diameter = self._compute_diameter()

    # -- basic queries ---------------------------------------------------

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    @property
    def num_edges(self) -> int:
        return len(self._edge_set)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_set

    def edges(self):
        return sorted(self._edge_set)

    def _csr(self) -> csr_matrix:
        data = np.ones(self.indices.shape[0], dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def _compute_diameter(self) -> int:
        if self.n == 1:
            return 0
        mat = self._csr()
        best = 0
        chunk = 256
        for lo in range(0, self.n, chunk):
            idx = np.arange(lo, min(lo + chunk, self.n))
            d = shortest_path(mat, method="D", unweighted=True, indices=idx)
            best = max(best, int(d.max()))
        return best

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges}, D={self.diameter})"


def bfs_distances(graph: Graph, sources: Sequence[int]) -> np.ndarray:
    """Min hop distance from each node to the nearest source (-1 unreachable)."""
    src = np.asarray(list(sources), dtype=np.int64)
    if src.size == 0:
        raise ValueError("sources must be nonempty")
    dist = np.full(graph.n, -1, dtype=np.int32)
    dist[src] = 0
    frontier = np.unique(src).astype(np.int32)
    d = 0
    indptr, indices = graph.indptr, graph.indices
    while frontier.size:
        d += 1
        parts = [indices[indptr[v] : indptr[v + 1]] for v in frontier]
        nxt = np.concatenate(parts) if parts else np.empty(0, np.int32)
        nxt = np.unique(nxt)
        nxt = nxt[dist[nxt] < 0]
        if nxt.size == 0:
            break
        dist[nxt] = d
        frontier = nxt
    return dist


def parse_graph_text(text: str) -> Graph:
    """Parse the text format: first line n, then one '0-indexed u v' per line."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise GraphError(f"bad node count line: {lines[0]!r}") from exc
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"bad edge line: {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges)


def load_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph_text(fh.read())


def save_graph(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{graph.n}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")
