"""Near-perfect matching of the residual graph and the final 2-matching union.

Karp-Sipser: take pendant edges while any exist, otherwise a uniformly random
edge.  The result is then improved by alternating-path search without blossom
shrinking, so odd cycles can hide an augmenting path.  The shortfall is
reported, not hidden.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .seq_graph import HalfEdgeSequence, adjacency


class StructuralFault(RuntimeError):
    pass


@dataclass
class Matching:
    n: int
    mate: list[int]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v in enumerate(self.mate) if v > u]

    @property
    def size(self) -> int:
        return sum(1 for u, v in enumerate(self.mate) if v > u)

    def exposed(self, vertices=None) -> list[int]:
        vs = range(self.n) if vertices is None else vertices
        return [v for v in vs if self.mate[v] < 0]

    def check(self, edges) -> None:
        es = {(u, v) for u, v in edges} | {(v, u) for u, v in edges}
        for u, v in enumerate(self.mate):
            if v >= 0 and (self.mate[v] != u or (u, v) not in es or u == v):
                raise StructuralFault(f"bad matching at {u}->{v}")


def karp_sipser(n: int, edges, rng: random.Random) -> Matching:
    seq = HalfEdgeSequence.from_edges(n, [(u, v) for u, v in edges if u != v])
    mate = [-1] * n
    deg = seq.deg
    queue = deque(v for v in range(n) if deg[v] == 1)

    def take(u, w):
        mate[u] = w
        mate[w] = u
        for x in (u, w):
            for y in seq.delete_vertex_edges(x):
                if deg[y] == 1:
                    queue.append(y)

    while True:
        while queue:
            v = queue.popleft()
            if deg[v] != 1:
                continue
            p = seq.slots[seq.start[v]]
            take(v, seq.entries[p ^ 1])
        if not seq.live_edges:
            break
        i = seq.live_edges[rng.randrange(len(seq.live_edges))]
        u, w = seq.edge(i)
        take(u, w)
    return Matching(n, mate)


def _search(adj, mate, root, stamp, label, parent, tick) -> bool:
    """One alternating BFS from an exposed root; augments and returns True on success."""
    label[root] = 0
    stamp[root] = tick
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w == root or stamp[w] == tick:
                continue
            if mate[w] < 0:
                # flip the path root ... u - w
                odd, even = w, u
                while True:
                    prev = mate[even]
                    mate[even] = odd
                    mate[odd] = even
                    if even == root:
                        return True
                    odd = prev
                    even = parent[odd]
            stamp[w] = tick
            label[w] = 1
            parent[w] = u
            x = mate[w]
            if stamp[x] != tick:
                stamp[x] = tick
                label[x] = 0
                queue.append(x)
    return False


def augment(n: int, edges, matching: Matching, effort: int = 8) -> Matching:
    adj = adjacency(n, [(u, v) for u, v in edges if u != v])
    mate = list(matching.mate)
    stamp = [0] * n
    label = [0] * n
    parent = [-1] * n
    tick = 0
    for _ in range(effort):
        found = False
        for r in range(n):
            if mate[r] >= 0 or not adj[r]:
                continue
            tick += 1
            if _search(adj, mate, r, stamp, label, parent, tick):
                found = True
        if not found:
            break
    return Matching(n, mate)


def maximum_matching_size(n: int, edges) -> int:
    """Exhaustive maximum matching size for small graphs (bitmask memo)."""
    adj = [0] * n
    for u, v in edges:
        if u != v:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
    memo = {}

    def best(avail: int) -> int:
        if avail == 0:
            return 0
        if avail in memo:
            return memo[avail]
        u = (avail & -avail).bit_length() - 1
        rest = avail & ~(1 << u)
        out = best(rest)
        nb = adj[u] & rest
        while nb:
            w = (nb & -nb).bit_length() - 1
            nb &= nb - 1
            out = max(out, 1 + best(rest & ~(1 << w)))
        memo[avail] = out
        return out

    return best((1 << n) - 1)


@dataclass
class TwoMatching:
    n: int
    edges: list[tuple[int, int]]
    cycles: int = 0
    paths: int = 0
    isolated: int = 0
    component_sizes: list[int] = field(default_factory=list)

    @property
    def kappa_total(self) -> int:
        return self.cycles + self.paths + self.isolated

    @property
    def kappa_nontrivial(self) -> int:
        return self.cycles + self.paths


def combine(n: int, m_edges, m_star) -> TwoMatching:
    """Union of the greedy 2-matching edges and the matching M**, with a census."""
    edges = list(m_edges) + list(m_star)
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
        if deg[u] > 2 or deg[v] > 2:
            bad = u if deg[u] > 2 else v
            raise StructuralFault(f"vertex {bad} has degree > 2 in the union")
    root = list(range(n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for u, v in edges:
        a, b = find(u), find(v)
        if a != b:
            root[a] = b
    nv, ne = {}, {}
    for v in range(n):
        r = find(v)
        nv[r] = nv.get(r, 0) + 1
    for u, v in edges:
        r = find(u)
        ne[r] = ne.get(r, 0) + 1
    out = TwoMatching(n, edges)
    for r, size in nv.items():
        k = ne.get(r, 0)
        out.component_sizes.append(size)
        if k == 0:
            out.isolated += 1
        elif k == size:
            out.cycles += 1
        elif k == size - 1:
            out.paths += 1
        else:
            raise StructuralFault(f"component at {r} has {size} vertices and {k} edges")
    return out
