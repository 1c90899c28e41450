"""Simple undirected graphs, edge indexing, triangle and wedge counts.

Three triangle counters are kept deliberately independent so they can check
one another: a literal triple loop, the trace of A^3 from a sparse integer
product, and sorted-neighbour intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DomainError, ResourceCapError

ENUM_MAX_N = 2000


class EdgeIndex(NamedTuple):
    """Lexicographic position ``a`` (0-based) of the vertex pair (i, j), i < j."""

    a: int
    i: int
    j: int


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> EdgeIndex:
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"invalid vertex pair ({i}, {j}) for n={n}")
    if i > j:
        i, j = j, i
    a = i * n - i * (i + 1) // 2 + (j - i - 1)
    return EdgeIndex(a, i, j)


def edge_from_index(a: int, n: int) -> EdgeIndex:
    m = n_pairs(n)
    if not 0 <= a < m:
        raise DomainError(f"edge index {a} out of range [0, {m})")
    i = 0
    row = n - 1
    rem = a
    while rem >= row:
        rem -= row
        i += 1
        row -= 1
    return EdgeIndex(a, i, i + 1 + rem)


def all_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays (i_a, j_a) for a = 0..m-1 in lexicographic order."""
    i, j = np.triu_indices(n, k=1)
    return i.astype(np.int64), j.astype(np.int64)


@dataclass(frozen=True, eq=False)
class GraphSample:
    """Immutable simple graph on vertices 0..n-1.

    Stored as lexicographically sorted edge arrays (src < dst) and CSR
    neighbour lists sorted ascending. A dense boolean matrix is built on
    first request.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    seed: Optional[int] = None
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        n = int(self.n)
        if n < 0:
            raise DomainError("vertex count must be nonnegative")
        if src.shape != dst.shape or src.ndim != 1:
            raise DomainError("edge endpoint arrays must be 1-d and equal length")
        if src.size:
            if np.any(src >= dst):
                raise DomainError("edges must satisfy src < dst (no loops)")
            if src.min() < 0 or dst.max() >= n:
                raise DomainError("edge endpoint out of range")
            key = src * n + dst
            order = np.argsort(key, kind="stable")
            if np.any(np.diff(key[order]) == 0):
                raise DomainError("duplicate edge")
            src = src[order]
            dst = dst[order]
        both_src = np.concatenate([src, dst])
        both_dst = np.concatenate([dst, src])
        order = np.lexsort((both_dst, both_src))
        indices = both_dst[order]
        counts = np.bincount(both_src, minlength=n) if n else np.zeros(0, np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        for name, arr in (("src", src), ("dst", dst), ("indptr", indptr), ("indices", indices)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_edges(cls, n, src, dst, seed=None) -> "GraphSample":
        return cls(n, src, dst, seed=seed)

    @classmethod
    def from_pairs(cls, n, pairs, seed=None) -> "GraphSample":
        """Build from any iterable of (u, v) pairs; orientation is normalised."""
        arr = np.array(list(pairs), dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        return cls(n, lo, hi, seed=seed)

    @classmethod
    def from_adjacency(cls, adj, seed=None) -> "GraphSample":
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DomainError("adjacency must be square")
        if np.any(np.diag(adj)) or not np.array_equal(adj, adj.T):
            raise DomainError("adjacency must be symmetric with zero diagonal")
        i, j = np.nonzero(np.triu(adj, k=1))
        return cls(adj.shape[0], i, j, seed=seed)

    @property
    def m_present(self) -> int:
        return int(self.src.size)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < nb.size and nb[k] == j)

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        adj[self.src, self.dst] = True
        adj[self.dst, self.src] = True
        adj.setflags(write=False)
        return adj

    def sparse_adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.int64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def with_edge(self, i: int, j: int) -> "GraphSample":
        e = edge_index(i, j, self.n)
        if self.has_edge(e.i, e.j):
            return self
        return GraphSample(self.n, np.append(self.src, e.i), np.append(self.dst, e.j), self.seed)

    def __eq__(self, other):
        if not isinstance(other, GraphSample):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst))

    def __hash__(self):
        return hash((self.n, self.src.tobytes(), self.dst.tobytes()))


def count_triangles_enum(g: GraphSample) -> int:
    """sum_{i<j<k} I_ij I_jk I_ki by direct triple loop (dense, small n only)."""
    if g.n > ENUM_MAX_N:
        raise ResourceCapError(f"triple-loop counter is limited to n <= {ENUM_MAX_N}")
    if g.n < 3:
        return 0
    return int(_kernels.triangles_enum(g.adjacency))


def count_triangles_matrix(g: GraphSample) -> int:
    """tr(A^3) / 6 from an exact int64 sparse product."""
    if g.m_present == 0:
        return 0
    a = g.sparse_adjacency()
    a2 = a @ a
    trace = int(a2.multiply(a).sum(dtype=np.int64))
    assert trace % 6 == 0
    return trace // 6


def count_triangles_wedge(g: GraphSample) -> int:
    """Sorted-neighbour intersection over degree-oriented edges."""
    if g.m_present == 0:
        return 0
    return int(_kernels.triangles_wedge(g.indptr, g.indices))


def wedge_count(g: GraphSample, a) -> int:
    """V_a: number of k outside e_a with both I_{i_a k} and I_{j_a k} present.

    ``a`` may be an :class:`EdgeIndex` or its integer position.
    """
    if not isinstance(a, EdgeIndex):
        a = edge_from_index(int(a), g.n)
    return int(_kernels.common_neighbours(g.indptr, g.indices, a.i, a.j))


# ------------------------------------------------------------- edge-list I/O


def edge_list_text(g: GraphSample) -> str:
    """"i j" per line, 0-based, i < j, lexicographic."""
    return "".join(f"{i} {j}\n" for i, j in zip(g.src.tolist(), g.dst.tolist()))


def dump_edge_list(g: GraphSample, path) -> None:
    Path(path).write_text(edge_list_text(g), encoding="utf-8")


def load_edge_list(path, n: int) -> GraphSample:
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"{path}:line {lineno}: expected two integers")
        pairs.append((int(parts[0]), int(parts[1])))
    return GraphSample.from_pairs(n, pairs)
