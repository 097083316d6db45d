"""Random pairing sequences and the multigraph they induce.

Edge i of a sequence occupies positions 2i and 2i+1 (0-based).  Deleting an
edge stars both positions.  Each vertex owns a contiguous block of a slot
array holding its live positions; deletion swaps the freed slot with the
block's last live one, so delete and uniform sampling are O(1).
"""

from __future__ import annotations

import math
import random
from collections import Counter
from pathlib import Path

import numpy as np

from .degree_model import DegreeProfile, sample_conditioned_degrees, solve_lambda
from .special_functions import f

STAR = -1


class SimplicityError(RuntimeError):
    def __init__(self, msg: str, rate: float):
        super().__init__(msg)
        self.rate = rate


def _randbelow(rng, k: int) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(k))
    return rng.randrange(k)


def _random(rng) -> float:
    return float(rng.random())


class HalfEdgeSequence:
    journal: list | None = None    # when a list, every write is logged for rollback

    def __init__(self, n: int, entries):
        entries = [int(v) for v in entries]
        if len(entries) % 2:
            raise ValueError("sequence length must be even")
        self.n = n
        self.entries = entries
        m2 = len(entries)
        deg = [0] * n
        for v in entries:
            if v != STAR:
                deg[v] += 1
        start = [0] * (n + 1)
        for v in range(n):
            start[v + 1] = start[v] + deg[v]
        fill = start[:n]
        fill = list(fill)
        slots = [0] * start[n]
        slot_of = [-1] * m2
        for p, v in enumerate(entries):
            if v != STAR:
                s = fill[v]
                slots[s] = p
                slot_of[p] = s
                fill[v] += 1
        self.deg = deg
        self.start = start[:n]
        self.slots = slots
        self.slot_of = slot_of
        live = [i for i in range(m2 // 2) if entries[2 * i] != STAR]
        if any((entries[2 * i] == STAR) != (entries[2 * i + 1] == STAR) for i in range(m2 // 2)):
            raise ValueError("improper sequence: unpaired star")
        self.live_edges = live
        self.edge_slot = [-1] * (m2 // 2)
        for k, i in enumerate(live):
            self.edge_slot[i] = k

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges) -> "HalfEdgeSequence":
        entries = []
        for u, v in edges:
            entries.append(u)
            entries.append(v)
        return cls(n, entries)

    def copy(self) -> "HalfEdgeSequence":
        new = object.__new__(HalfEdgeSequence)
        new.n = self.n
        new.entries = self.entries[:]
        new.deg = self.deg[:]
        new.start = self.start
        new.slots = self.slots[:]
        new.slot_of = self.slot_of[:]
        new.live_edges = self.live_edges[:]
        new.edge_slot = self.edge_slot[:]
        return new

    # -- queries ----------------------------------------------------------

    @property
    def mu(self) -> int:
        return len(self.live_edges)

    @property
    def length(self) -> int:
        return len(self.entries)

    def positions(self, v: int) -> list[int]:
        s = self.start[v]
        return self.slots[s:s + self.deg[v]]

    def neighbours(self, v: int) -> list[int]:
        e = self.entries
        return [e[p ^ 1] for p in self.positions(v)]

    def edge(self, i: int) -> tuple[int, int]:
        return self.entries[2 * i], self.entries[2 * i + 1]

    def edges(self) -> list[tuple[int, int]]:
        e = self.entries
        return [(e[2 * i], e[2 * i + 1]) for i in self.live_edges]

    def is_simple(self) -> bool:
        seen = set()
        for u, v in self.edges():
            if u == v:
                return False
            key = (u, v) if u < v else (v, u)
            if key in seen:
                return False
            seen.add(key)
        return True

    # -- edits ------------------------------------------------------------

    def _drop_position(self, p: int) -> int:
        v = self.entries[p]
        s = self.slot_of[p]
        last = self.start[v] + self.deg[v] - 1
        q = self.slots[last]
        j = self.journal
        if j is not None:
            j.extend(((self.slots, s, self.slots[s]), (self.slot_of, q, self.slot_of[q]),
                      (self.slot_of, p, self.slot_of[p]), (self.deg, v, self.deg[v]),
                      (self.entries, p, v)))
        self.slots[s] = q
        self.slot_of[q] = s
        self.slot_of[p] = -1
        self.deg[v] -= 1
        self.entries[p] = STAR
        return v

    def delete_pair(self, i: int) -> tuple[int, int]:
        """Star edge i; returns its endpoints."""
        e = self.entries
        if e[2 * i] == STAR:
            raise RuntimeError(f"edge {i} already deleted")
        u = self._drop_position(2 * i)
        v = self._drop_position(2 * i + 1)
        k = self.edge_slot[i]
        j = self.journal
        if j is not None:
            j.append((None, None, self.live_edges[-1]))
            j.append((self.edge_slot, i, k))
            if self.live_edges[-1] != i:
                j.append((self.live_edges, k, i))
                j.append((self.edge_slot, self.live_edges[-1], self.edge_slot[self.live_edges[-1]]))
        last = self.live_edges.pop()
        if last != i:
            self.live_edges[k] = last
            self.edge_slot[last] = k
        self.edge_slot[i] = -1
        return u, v

    def delete_vertex_edges(self, v: int) -> list[int]:
        """Star every live edge at v.

        Returns the other endpoint of each deleted edge, with multiplicity.
        A loop is reported once, as v itself.
        """
        out = []
        e = self.entries
        st = self.start[v]
        while self.deg[v]:
            p = self.slots[st]
            w = e[p ^ 1]
            self.delete_pair(p >> 1)
            out.append(w)
        return out

    def rollback(self) -> None:
        """Undo every journalled write and stop journalling."""
        j = self.journal
        self.journal = None
        for container, idx, old in reversed(j):
            if container is None:
                self.live_edges.append(old)
            else:
                container[idx] = old

    # -- lazy re-pairing ---------------------------------------------------

    def _swap_values(self, a: int, b: int) -> None:
        e = self.entries
        x, y = e[a], e[b]
        if x == y:
            return
        sa, sb = self.slot_of[a], self.slot_of[b]
        j = self.journal
        if j is not None:
            j.extend(((e, a, x), (e, b, y), (self.slots, sa, a), (self.slots, sb, b),
                      (self.slot_of, a, sa), (self.slot_of, b, sb)))
        e[a], e[b] = y, x
        self.slots[sa], self.slots[sb] = b, a
        self.slot_of[a], self.slot_of[b] = sb, sa

    def _reveal_vertex(self, v: int, matched: set, rng) -> None:
        while True:
            todo = [p for p in self.positions(v) if (p >> 1) not in matched]
            if not todo:
                return
            p = todo[0]
            # partner of half-edge p: uniform over the other unmatched half-edges
            while True:
                i = self.live_edges[_randbelow(rng, len(self.live_edges))]
                r = 2 * i + _randbelow(rng, 2)
                if r != p and i not in matched:
                    break
            if r != p ^ 1:
                self._swap_values(p ^ 1, r)
            matched.add(p >> 1)

    def reveal_around(self, v: int, rng) -> None:
        """Redraw the residual pairing within distance two of v.

        The pairing is uniform given the degrees, so by deferred decisions the
        partners of v's half-edges, then of its neighbours' half-edges, are
        drawn uniformly among unmatched half-edges.  Everything a single step
        at v can read is then distributed as under a fresh uniform pairing.
        """
        matched: set = set()
        self._reveal_vertex(v, matched, rng)
        for w in dict.fromkeys(self.neighbours(v)):
            if w != v:
                self._reveal_vertex(w, matched, rng)

    # -- sampling ---------------------------------------------------------

    def random_live_edge(self, rng) -> int:
        if not self.live_edges:
            raise ValueError("no live edges")
        return self.live_edges[_randbelow(rng, len(self.live_edges))]

    def random_live_halfedge(self, class_filter, rng, candidates=None, tries: int = 32) -> int:
        """Uniform live position among those owned by a vertex passing class_filter.

        Rejection from the global live set first; if that keeps missing, an
        exact degree-weighted pick over `candidates` (or all vertices).
        """
        if self.live_edges:
            e = self.entries
            for _ in range(tries):
                i = self.live_edges[_randbelow(rng, len(self.live_edges))]
                p = 2 * i + _randbelow(rng, 2)
                if class_filter(e[p]):
                    return p
        pool = range(self.n) if candidates is None else candidates
        pool = [v for v in pool if self.deg[v] and class_filter(v)]
        total = sum(self.deg[v] for v in pool)
        if total == 0:
            raise ValueError("no live half-edge satisfies the filter")
        r = _randbelow(rng, total)
        for v in pool:
            if r < self.deg[v]:
                return self.slots[self.start[v] + r]
            r -= self.deg[v]
        raise AssertionError("unreachable")

    # -- audit ------------------------------------------------------------

    def audit(self) -> list[str]:
        problems = []
        e = self.entries
        for i in range(len(e) // 2):
            if (e[2 * i] == STAR) != (e[2 * i + 1] == STAR):
                problems.append(f"edge {i}: unpaired star")
        counts = Counter(v for v in e if v != STAR)
        for v in range(self.n):
            if counts.get(v, 0) != self.deg[v]:
                problems.append(f"vertex {v}: degree {self.deg[v]} but {counts.get(v, 0)} live entries")
            for p in self.positions(v):
                if e[p] != v:
                    problems.append(f"vertex {v}: slot holds position {p} owned by {e[p]}")
        live = sum(1 for v in e if v != STAR)
        if live != 2 * self.mu:
            problems.append(f"mu={self.mu} but {live} live entries")
        for k, i in enumerate(self.live_edges):
            if self.edge_slot[i] != k or e[2 * i] == STAR:
                problems.append(f"live edge list broken at {i}")
        return problems


# -- generation -----------------------------------------------------------------

def pair_sequence(profile: DegreeProfile, rng: np.random.Generator) -> HalfEdgeSequence:
    if profile.total % 2:
        raise ValueError("total degree must be even")
    arr = np.repeat(np.arange(profile.n), profile.degrees)
    return HalfEdgeSequence(profile.n, rng.permutation(arr).tolist())


def simplicity_estimate(lam: float) -> float:
    """Asymptotic Pr(simple) for a min-degree-3 pairing with parameter lam."""
    nu = lam * f(1, lam) / f(2, lam) if lam > 0 else 2.0
    return math.exp(-nu / 2.0 - nu * nu / 4.0)


def sample_simple(profile_gen, rng: np.random.Generator, max_tries: int = 1000) -> HalfEdgeSequence:
    """Regenerate degrees and pairing until the multigraph is simple."""
    for k in range(1, max_tries + 1):
        seq = pair_sequence(profile_gen(rng), rng)
        if seq.is_simple():
            seq.tries = k
            return seq
    raise SimplicityError(f"no simple pairing in {max_tries} tries", rate=0.0)


def simplicity_rate(profile_gen, rng: np.random.Generator, tries: int) -> float:
    return sum(pair_sequence(profile_gen(rng), rng).is_simple() for _ in range(tries)) / tries


def make_simple(seq: HalfEdgeSequence, rng: np.random.Generator, max_rounds: int = 10**6) -> HalfEdgeSequence:
    """Remove loops and repeated edges by degree-preserving double-edge switches.

    Each defective edge is switched with a uniformly random partner edge;
    a switch is kept only if it creates no new defect.
    """
    e = list(seq.entries)
    m = len(e) // 2
    mult = Counter()
    for i in range(m):
        u, v = e[2 * i], e[2 * i + 1]
        mult[(u, v) if u < v else (v, u)] += 1

    def key(u, v):
        return (u, v) if u < v else (v, u)

    def bad(i):
        u, v = e[2 * i], e[2 * i + 1]
        return u == v or mult[key(u, v)] > 1

    defects = [i for i in range(m) if bad(i)]
    rounds = 0
    while defects:
        i = defects.pop()
        if not bad(i):
            continue
        while True:
            rounds += 1
            if rounds > max_rounds:
                raise SimplicityError("switching did not terminate", 0.0)
            j = int(rng.integers(m))
            if j == i:
                continue
            a, b = e[2 * i], e[2 * i + 1]
            c, d = e[2 * j], e[2 * j + 1]
            if rng.random() < 0.5:
                c, d = d, c
            # (a,b),(c,d) -> (a,d),(c,b)
            if a == d or c == b:
                continue
            k1, k2 = key(a, d), key(c, b)
            if k1 == k2 or mult[k1] or mult[k2]:
                continue
            if bad(j):
                continue
            mult[key(a, b)] -= 1
            mult[key(c, d)] -= 1
            mult[k1] += 1
            mult[k2] += 1
            e[2 * i], e[2 * i + 1] = a, d
            e[2 * j], e[2 * j + 1] = c, b
            break
    return HalfEdgeSequence(seq.n, e)


def min3_template(n: int) -> DegreeProfile:
    return DegreeProfile.template(n)


def generate(n: int, m: int, rng: np.random.Generator, simple: bool = True,
             method: str = "auto") -> HalfEdgeSequence:
    """A pairing for G_{n,m} with minimum degree 3.

    simple=False returns the raw pairing.  For simple graphs, method "reject"
    regenerates until simple, "switch" repairs defects by switchings, and
    "auto" rejects when the estimated simplicity probability is at least 1%.
    """
    template = min3_template(n)
    seq = pair_sequence(sample_conditioned_degrees(template, m, rng), rng)
    if not simple or seq.is_simple():
        return seq
    if method == "auto":
        lam = solve_lambda(n, 0, 2 * m) if 2 * m > 3 * n else 0.0
        method = "reject" if simplicity_estimate(lam) >= 0.01 else "switch"
    if method == "reject":
        return sample_simple(lambda r: sample_conditioned_degrees(template, m, r), rng)
    if method == "switch":
        return make_simple(seq, rng)
    raise ValueError(f"unknown method {method!r}")


# -- plain graphs -------------------------------------------------------------------

def adjacency(n: int, edges) -> list[list[int]]:
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        if u != v:
            adj[v].append(u)
    return adj


def canonical_edges(edges) -> list[tuple[int, int]]:
    return sorted((u, v) if u < v else (v, u) for u, v in edges)


def write_graph(path, n: int, edges) -> None:
    es = canonical_edges(edges)
    if any(u == v for u, v in es) or len(set(es)) != len(es):
        raise ValueError("only simple graphs can be exported")
    lines = [f"{n} {len(es)}"] + [f"{u} {v}" for u, v in es]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> tuple[int, list[tuple[int, int]]]:
    rows = Path(path).read_text().split("\n")
    n, m = (int(t) for t in rows[0].split())
    edges = []
    for row in rows[1:]:
        if row.strip():
            u, v = (int(t) for t in row.split())
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"vertex out of range in {row!r}")
            edges.append((u, v))
    if len(edges) != m:
        raise ValueError(f"header says {m} edges, found {len(edges)}")
    return n, edges
