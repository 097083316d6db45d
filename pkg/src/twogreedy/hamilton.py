"""Extension-rotation: from a 2-matching with few components to a Hamilton cycle.

The graph is split as G = H + X, where X is a set of booster edges removed
from G.  HAM repeatedly grows a path of the current 2-matching.  A grown path
absorbs neighbouring components (extension) and eventually closes into a cycle,
either by a chord of H or by a booster.

Paths in a rotation search are not stored.  Each discovered endpoint keeps its
parent endpoint and pivot vertex, and a path is rebuilt by replaying rotations
from the root path.
"""

from __future__ import annotations

import math
import random
from collections import OrderedDict, deque
from dataclasses import dataclass, field

import numpy as np

from .seq_graph import adjacency


class RotationFault(ValueError):
    pass


class BoosterError(ValueError):
    def __init__(self, msg: str, deficit: int):
        super().__init__(msg)
        self.deficit = deficit


# -- parameters --------------------------------------------------------------------

def default_nu(n: int, asymptotic: bool = False) -> int:
    ln = math.log(n) if n > 1 else 1.0
    nu = math.ceil(n**0.75 * ln**2)
    return nu if asymptotic else min(n, nu)


def default_s(n: int, asymptotic: bool = False) -> int:
    ln = math.log(n) if n > 1 else 1.0
    asym_s = math.sqrt(n) / ln**2
    if asymptotic:
        return int(asym_s)
    return max(math.ceil(math.sqrt(n)), math.ceil(asym_s))


# -- boosters ----------------------------------------------------------------------

@dataclass
class BoosterSet:
    edges: list[tuple[int, int]]
    examined: int = 0                       # edges before this index are never revisited
    used: list[tuple[int, int]] = field(default_factory=list)

    def next(self) -> tuple[int, int] | None:
        if self.examined >= len(self.edges):
            return None
        e = self.edges[self.examined]
        self.examined += 1
        return e

    @property
    def exhausted(self) -> bool:
        return self.examined >= len(self.edges)


def eligible_edges(n: int, edges) -> list[tuple[int, int]]:
    deg = np.bincount(np.asarray(edges, dtype=np.int64).ravel(), minlength=n) if edges else np.zeros(n, int)
    return [(u, v) for u, v in edges if deg[u] > 3 and deg[v] > 3]


def split_boosters(n: int, edges, s: int, rng: np.random.Generator,
                   max_tries: int = 1000) -> tuple[list[tuple[int, int]], BoosterSet]:
    """Remove s uniformly chosen edges avoiding degree-3 vertices.

    Two removed edges sharing a degree-4 vertex would leave it with degree 2,
    so draws that break minimum degree 3 are rejected and redrawn.
    """
    edges = [tuple(e) for e in edges]
    if len({(min(e), max(e)) for e in edges}) != len(edges) or any(u == v for u, v in edges):
        raise ValueError("split_boosters needs a simple graph")
    elig = eligible_edges(n, edges)
    if len(elig) < s:
        raise BoosterError(f"need {s} eligible edges, have {len(elig)} (deficit {s - len(elig)})",
                           s - len(elig))
    deg = np.bincount(np.asarray(edges, dtype=np.int64).ravel(), minlength=n) if edges else np.zeros(n, int)
    for _ in range(max_tries):
        pick = rng.choice(len(elig), size=s, replace=False) if s else np.zeros(0, int)
        x = [elig[i] for i in sorted(pick.tolist())]
        loss = np.bincount(np.asarray(x, dtype=np.int64).ravel(), minlength=n) if x else np.zeros(n, int)
        if np.all(deg - loss >= 3):
            break
    else:
        raise BoosterError(f"no booster set of size {s} keeps minimum degree 3", 0)
    xs = set(x)
    h = [e for e in edges if e not in xs]
    order = rng.permutation(len(x)) if x else []
    return h, BoosterSet([x[i] for i in order])


# -- rotations ---------------------------------------------------------------------

def rotate(path, pivot_edge) -> list:
    """(u1..u_i, u_k, u_{k-1}..u_{i+1}) for the chord (u_k, u_i); u1 stays fixed."""
    path = list(path)
    uk, ui = pivot_edge
    if not path or path[-1] != uk:
        raise RotationFault(f"{uk} is not the free endpoint")
    try:
        i = path.index(ui)
    except ValueError:
        raise RotationFault(f"{ui} is not on the path") from None
    if i >= len(path) - 2:
        raise RotationFault("pivot must be at least two steps from the endpoint")
    return path[:i + 1] + path[i + 1:][::-1]


@dataclass
class Extension:
    path: np.ndarray      # fixed endpoint first; path[-1] has a neighbour `outside` off the path
    outside: int
    forest: "RotationForest | None" = None


@dataclass
class Closure:
    path: np.ndarray      # path[-1] is adjacent to path[0]
    booster: tuple[int, int] | None = None
    forest: "RotationForest | None" = None


class RotationForest:
    """Rotation search tree from a root path with fixed endpoint root[0]."""

    def __init__(self, n: int, root: np.ndarray, nu: int, cache: int = 64):
        self.n = n
        self.root = np.asarray(root, dtype=np.int64)
        self.fixed = int(self.root[0])
        self.nu = nu
        self.parent: dict[int, tuple[int, int] | None] = {int(self.root[-1]): None}
        self.order: list[int] = [int(self.root[-1])]
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_size = cache
        self.expansions = 0

    @property
    def end(self) -> list[int]:
        return self.order

    def add(self, x: int, parent: int, pivot: int) -> None:
        if x in self.parent:
            raise RotationFault(f"endpoint {x} already present")
        self.parent[x] = (parent, pivot)
        self.order.append(x)

    def path_to(self, x: int) -> np.ndarray:
        """Replay rotations from the nearest cached ancestor."""
        chain = []
        cur = x
        while cur not in self._cache and self.parent[cur] is not None:
            chain.append(cur)
            cur = self.parent[cur][0]
        arr = self._cache[cur].copy() if cur in self._cache else self.root.copy()
        for y in reversed(chain):
            pivot = self.parent[y][1]
            i = int(np.flatnonzero(arr == pivot)[0])
            arr[i + 1:] = arr[i + 1:][::-1]
            if arr[-1] != y:
                raise RotationFault("replay produced the wrong endpoint")
        self._cache[x] = arr
        self._cache.move_to_end(x)
        while len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return arr.copy()


@dataclass
class EndpointSets:
    forest: RotationForest


def rrs(adj, adjset, path, nu: int, target: int | None = None, close: bool = True,
        forest_cache: int = 64):
    """Breadth-first rotation search with the path's first vertex fixed.

    Returns Extension at the first endpoint with a neighbour off the path,
    Closure when an endpoint is adjacent to the fixed endpoint (through H, or
    equal to `target`, which stands for a booster edge), and EndpointSets once
    every endpoint (at most nu) has been expanded.  The forest rides along on
    every result so callers can charge its expansions.  close=False turns off
    the H-chord closure and leaves the plain rotation search.
    """
    path = np.asarray(path, dtype=np.int64)
    n = len(adj)
    forest = RotationForest(n, path, nu, forest_cache)
    a = forest.fixed
    k = len(path)
    queue = deque([int(path[-1])])
    while queue:
        x = queue.popleft()
        arr = forest.path_to(x)
        if k >= 3:
            if x == target:
                return Closure(arr, (x, a), forest)
            if close and a in adjset[x]:
                return Closure(arr, None, forest)
        forest.expansions += 1
        pos = np.full(n, -1, dtype=np.int64)
        pos[arr] = np.arange(k)
        for w in adj[x]:
            p = int(pos[w])
            if p < 0:
                return Extension(arr, w, forest)
            if p >= k - 2 or len(forest.order) >= nu:
                continue
            y = int(arr[p + 1])
            if y not in forest.parent:
                forest.add(y, x, w)
                queue.append(y)
    return EndpointSets(forest)


# -- HAM --------------------------------------------------------------------------

@dataclass
class HamiltonCycle:
    cycle: list[int]
    iterations: int
    boosters_examined: int
    boosters_used: list[tuple[int, int]]
    work: int


@dataclass
class Failure:
    reason: str           # boosters_exhausted | disconnected | rrs_stalled | iteration_cap
    iterations: int = 0
    boosters_examined: int = 0
    work: int = 0


def components(n: int, edges) -> tuple[list[list[int]], list[list[int]]]:
    """Paths (isolated vertices included) and cycles of a max-degree-2 edge set."""
    adj = adjacency(n, edges)
    if any(len(a) > 2 for a in adj):
        raise ValueError("not a 2-matching")
    seen = [False] * n
    paths, cycles = [], []
    for v in range(n):
        if seen[v] or len(adj[v]) == 2:
            continue
        out = [v]
        seen[v] = True
        prev, cur = -1, v
        while True:
            nxt = [w for w in adj[cur] if w != prev and not seen[w]]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seen[cur] = True
            out.append(cur)
        paths.append(out)
    for v in range(n):
        if seen[v]:
            continue
        out = [v]
        seen[v] = True
        prev, cur = v, adj[v][0]
        while cur != v:
            seen[cur] = True
            out.append(cur)
            a, b = adj[cur]
            prev, cur = cur, (b if a == prev else a)
        cycles.append(out)
    return paths, cycles


def is_connected(n: int, adj) -> bool:
    if n == 0:
        return True
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == n


def iteration_cap(sizes) -> int:
    kappa = len(sizes)
    return 4 * (kappa + sum(math.ceil(math.log2(s)) for s in sizes if s > 1)) + 4


def normalize_cycle(cycle) -> list[int]:
    c = list(cycle)
    i = c.index(min(c))
    c = c[i:] + c[:i]
    if len(c) > 2 and c[-1] < c[1]:
        c = [c[0]] + c[1:][::-1]
    return c


class _State:
    def __init__(self, n, paths, cycles):
        self.n = n
        self.comp = [-1] * n
        self.members: dict[int, tuple[str, list[int]]] = {}
        self._next = 0
        for p in paths:
            self.put("path", p)
        for c in cycles:
            self.put("cycle", c)

    def put(self, kind, verts) -> int:
        cid = self._next
        self._next += 1
        self.members[cid] = (kind, verts)
        for v in verts:
            self.comp[v] = cid
        return cid

    def take(self, cid):
        return self.members.pop(cid)


def _absorb(state: _State, q: list[int], z: int, rng: random.Random) -> list[int]:
    """Case a: extend q (ending at a neighbour of z) through z's component."""
    kind, verts = state.take(state.comp[z])
    j = verts.index(z)
    if kind == "cycle":
        # delete one cycle edge at z, chosen at random
        if rng.random() < 0.5:
            r = verts[j:] + verts[:j]
        else:
            r = (verts[j::-1] + verts[:j:-1])
        return q + r
    k = len(verts)
    if j + 1 < k / 2:          # orient so that z = u_j with j >= k/2 (1-based)
        verts = verts[::-1]
        j = k - 1 - j
    rest = verts[j + 1:]
    if rest:
        state.put("path", rest)
    return q + verts[j::-1]


def ham(n: int, h_edges, boosters: BoosterSet, m0_edges, nu: int,
        rng: random.Random | None = None, max_work: int | None = None) -> HamiltonCycle | Failure:
    rng = rng or random.Random(0)
    adj = adjacency(n, h_edges)
    if not is_connected(n, adj):
        return Failure("disconnected")
    adjset = [set(a) for a in adj]
    paths, cycles = components(n, m0_edges)
    cap = iteration_cap([len(p) for p in paths] + [len(c) for c in cycles])
    state = _State(n, paths, cycles)
    max_work = max_work if max_work is not None else nu * (nu + 1)
    work = 0
    it = 0
    cur: list[int] | None = None

    def fail(reason):
        return Failure(reason, it, boosters.examined, work)

    def add_edge(u, v):
        if v not in adjset[u]:
            adj[u].append(v)
            adj[v].append(u)
            adjset[u].add(v)
            adjset[v].add(u)

    while True:
        if cur is None:
            # Step 1
            ps = [(len(v), cid) for cid, (kind, v) in state.members.items() if kind == "path"]
            if ps:
                _, cid = max(ps)
                cur = state.take(cid)[1]
            else:
                cs = [(len(v), cid) for cid, (kind, v) in state.members.items()]
                _, cid = max(cs)
                verts = state.take(cid)[1]
                if len(verts) == n:
                    return HamiltonCycle(normalize_cycle(verts), it, boosters.examined,
                                         boosters.used, work)
                i = rng.randrange(len(verts))
                cur = verts[i + 1:] + verts[:i + 1]
            for v in cur:
                state.comp[v] = -1
        it += 1
        if it > cap:
            return fail("iteration_cap")
        # the fixed endpoint may itself have a neighbour off the path
        onpath = set(cur)
        head = next((w for w in adj[cur[0]] if w not in onpath), None)
        if head is not None:
            cur = _absorb(state, cur[::-1], head, rng)
            continue
        res = rrs(adj, adjset, cur, nu)
        work += res.forest.expansions
        if isinstance(res, EndpointSets):
            # Case b: boosters in fixed order, each examined once
            forest = res.forest
            res = None
            while res is None:
                e = boosters.next()
                if e is None:
                    return fail("boosters_exhausted")
                for p, q in (e, e[::-1]):
                    if p == forest.fixed and q in forest.parent:
                        res = Closure(forest.path_to(q), e)
                        break
                    if p in forest.parent:
                        sub = rrs(adj, adjset, forest.path_to(p)[::-1], nu, target=q)
                        work += sub.forest.expansions
                        if work > max_work:
                            return fail("rrs_stalled")
                        if isinstance(sub, EndpointSets):
                            continue
                        res = sub
                        break
        if isinstance(res, Extension):
            cur = _absorb(state, [int(v) for v in res.path], res.outside, rng)
            continue
        # closure: a cycle through every vertex of the current path
        cyc = [int(v) for v in res.path]
        if res.booster is not None:
            boosters.used.append(res.booster)
            add_edge(*res.booster)
        if len(cyc) == n and not state.members:
            return HamiltonCycle(normalize_cycle(cyc), it, boosters.examined, boosters.used, work)
        onc = set(cyc)
        link = None
        for i, u in enumerate(cyc):
            v = next((w for w in adj[u] if w not in onc), None)
            if v is not None:
                link = (i, u, v)
                break
        if link is None:
            return fail("disconnected")
        i, u, v = link
        left, right = cyc[i - 1], cyc[(i + 1) % len(cyc)]
        if left < right:
            # drop (u, left): path left ... u
            q = (cyc[i:] + cyc[:i])[::-1]
        else:
            # drop (u, right): path right ... u
            q = cyc[i + 1:] + cyc[:i + 1]
        if q[-1] != u:
            raise RotationFault("cycle opening did not end at the link vertex")
        cur = _absorb(state, q, v, rng)


def verify_hamilton(n: int, edges, cycle, boosters=()) -> bool:
    cycle = list(cycle)
    if len(cycle) != n or len(set(cycle)) != n or any(not 0 <= v < n for v in cycle):
        return False
    es = set()
    for u, v in list(edges) + list(boosters):
        es.add((u, v))
        es.add((v, u))
    return all((cycle[i], cycle[(i + 1) % n]) in es for i in range(n))


def format_cycle(cycle) -> str:
    return ",".join(str(v) for v in normalize_cycle(cycle))


# -- fixtures ------------------------------------------------------------------------

def k4_edges() -> list[tuple[int, int]]:
    return [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def petersen_edges() -> list[tuple[int, int]]:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return outer + spokes + inner


def has_hamilton_cycle(n: int, edges) -> bool:
    """Exhaustive Held-Karp style check for small n."""
    adj = [0] * n
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    full = (1 << n) - 1
    reach = [0] * (1 << n)          # reach[S] = bitmask of ends of paths from 0 covering S
    reach[1] = 1
    for s in range(1, full + 1):
        if not s & 1 or not reach[s]:
            continue
        ends = reach[s]
        e = ends
        while e:
            v = (e & -e).bit_length() - 1
            e &= e - 1
            nb = adj[v] & ~s
            while nb:
                w = (nb & -nb).bit_length() - 1
                nb &= nb - 1
                reach[s | (1 << w)] |= 1 << w
    return n >= 3 and bool(reach[full] & adj[0])
