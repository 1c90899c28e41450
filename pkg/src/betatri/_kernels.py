"""Compiled inner loops: counter-based edge randomness, sampling, counting.

Edge (i, j), i < j, reads the a-th output of a SplitMix64 stream keyed by the
graph seed, where a is the lexicographic edge index. Draws therefore depend
only on (seed, i, j), never on loop order or threading.
"""

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

MASK64 = (1 << 64) - 1


def splitmix64_py(x: int) -> int:
    """Pure-Python SplitMix64 step (state + golden gamma, then finalize)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@nb.njit(nb.uint64(nb.uint64), cache=True, nogil=True)
def splitmix64(x):
    z = x + GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, nogil=True)
def edge_uniform(key, a):
    # a-th output of the SplitMix64 stream whose state starts at `key`
    z = splitmix64(key + np.uint64(a) * GOLDEN)
    return np.float64(z >> _S11) * _INV53


@nb.njit(cache=True, nogil=True)
def edge_uniforms(key, idx):
    out = np.empty(idx.size, dtype=np.float64)
    for t in range(idx.size):
        out[t] = edge_uniform(key, idx[t])
    return out


@nb.njit(cache=True, nogil=True)
def sample_edges(mu, key):
    """Return (src, dst) of present edges, lexicographic, src < dst."""
    n = mu.size
    cap = 1024
    src = np.empty(cap, dtype=np.int64)
    dst = np.empty(cap, dtype=np.int64)
    count = 0
    a = 0
    for i in range(n):
        mi = mu[i]
        for j in range(i + 1, n):
            x = mi * mu[j]
            p = x / (1.0 + x)
            if edge_uniform(key, a) < p:
                if count == cap:
                    cap *= 2
                    s2 = np.empty(cap, dtype=np.int64)
                    d2 = np.empty(cap, dtype=np.int64)
                    s2[:count] = src[:count]
                    d2[:count] = dst[:count]
                    src = s2
                    dst = d2
                src[count] = i
                dst[count] = j
                count += 1
            a += 1
    return src[:count].copy(), dst[:count].copy()


@nb.njit(cache=True, nogil=True)
def triangles_enum(adj):
    """Triple loop over i < j < k on a dense boolean adjacency matrix."""
    n = adj.shape[0]
    total = np.int64(0)
    for i in range(n):
        for j in range(i + 1, n):
            if not adj[i, j]:
                continue
            for k in range(j + 1, n):
                if adj[j, k] and adj[k, i]:
                    total += 1
    return total


@nb.njit(cache=True, nogil=True)
def triangles_wedge(indptr, indices):
    """Count triangles by merging sorted forward-neighbour lists.

    Each edge is oriented from the endpoint of lower (degree, id) rank to the
    higher one; every triangle is then found exactly once as a wedge u->v,
    u->w closed by v->w.
    """
    n = indptr.size - 1
    deg = indptr[1:] - indptr[:-1]
    fptr = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        c = 0
        for t in range(indptr[u], indptr[u + 1]):
            v = indices[t]
            if deg[v] > deg[u] or (deg[v] == deg[u] and v > u):
                c += 1
        fptr[u + 1] = fptr[u] + c
    fwd = np.empty(fptr[n], dtype=np.int64)
    for u in range(n):
        pos = fptr[u]
        for t in range(indptr[u], indptr[u + 1]):
            v = indices[t]
            if deg[v] > deg[u] or (deg[v] == deg[u] and v > u):
                fwd[pos] = v
                pos += 1
        # neighbour lists arrive sorted by id; keep that order
    total = np.int64(0)
    for u in range(n):
        for t in range(fptr[u], fptr[u + 1]):
            v = fwd[t]
            p = fptr[u]
            pe = fptr[u + 1]
            q = fptr[v]
            qe = fptr[v + 1]
            while p < pe and q < qe:
                a = fwd[p]
                b = fwd[q]
                # branch-free merge step
                total += a == b
                p += a <= b
                q += b <= a
    return total


@nb.njit(cache=True, nogil=True)
def common_neighbours(indptr, indices, i, j):
    p = indptr[i]
    pe = indptr[i + 1]
    q = indptr[j]
    qe = indptr[j + 1]
    c = 0
    while p < pe and q < qe:
        a = indices[p]
        b = indices[q]
        if a == b:
            if a != i and a != j:
                c += 1
            p += 1
            q += 1
        elif a < b:
            p += 1
        else:
            q += 1
    return c


@nb.njit(cache=True, nogil=True)
def csr_from_lex_edges(n, src, dst):
    """Sorted CSR neighbour lists from lexicographically ordered edges."""
    deg = np.zeros(n, dtype=np.int64)
    for t in range(src.size):
        deg[src[t]] += 1
        deg[dst[t]] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        indptr[v + 1] = indptr[v] + deg[v]
    fill = indptr[:-1].copy()
    indices = np.empty(indptr[n], dtype=np.int64)
    # row i collects j in increasing order; row j collects i in increasing order
    for t in range(src.size):
        i = src[t]
        j = dst[t]
        indices[fill[i]] = j
        fill[i] += 1
        indices[fill[j]] = i
        fill[j] += 1
    return indptr, indices


@nb.njit(cache=True, nogil=True)
def sample_and_count(mu, key):
    src, dst = sample_edges(mu, key)
    if src.size == 0:
        return np.int64(0)
    indptr, indices = csr_from_lex_edges(mu.size, src, dst)
    return triangles_wedge(indptr, indices)
