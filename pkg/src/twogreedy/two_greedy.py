"""The 2GREEDY 2-matching algorithm.

Vertices are classified by (live degree, b) where b marks coverage by the
growing 2-matching M:

    V00  degree 0, b = 0   (isolated, a trivial component)
    V01  degree 0, b = 1   (internal/cycle vertex, or a path end that can no longer grow)
    Y1, Y2, Y  b = 0 with degree 1, 2, >= 3
    Z1, Z      b = 1 with degree 1, >= 2

Forced moves on Y1, Y2, Z1 have priority over the random move on Y.  When
Y1, Y2, Z1 and Y are all empty the residual graph lives on Z and is handed
to Karp-Sipser (Step 3).

M-bar is stored as `partner`: each path end points at the opposite end.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import ks_matching
from .degree_model import DegreeProfile, InfeasibleError, sample_conditioned_degrees, solve_lambda
from .seq_graph import HalfEdgeSequence, pair_sequence
from .special_functions import abcd, f

V00, V01, Y1, Y2, Z1, YY, ZZ = range(7)
CLASS_NAMES = ("V00", "V01", "Y1", "Y2", "Z1", "Y", "Z")
KINDS = ("1a", "1b", "1c", "2")


class AuditError(RuntimeError):
    pass


def classify(d: int, b: int) -> int:
    if d == 0:
        return V01 if b else V00
    if b:
        return Z1 if d == 1 else ZZ
    if d == 1:
        return Y1
    return Y2 if d == 2 else YY


@dataclass
class StateVector:
    y1: int
    y2: int
    z1: int
    y: int
    z: int
    mu: int
    kind: str = ""

    @property
    def n_live(self) -> int:
        return self.y + self.z

    @property
    def zeta(self) -> int:
        return self.y1 + 2 * self.y2 + self.z1

    @property
    def pi(self) -> int:
        return 2 * self.mu - self.zeta

    def as_tuple(self) -> tuple[int, ...]:
        return (self.y1, self.y2, self.z1, self.y, self.z, self.mu)


@dataclass
class Options:
    audit_every: int = 0          # full audit every K steps (0 = off)
    capture_every: int | None = None
    step2: str = "halfedge"       # or "edge"
    ks_effort: int = 8
    run_step3: bool = True


TRAJ_FIELDS = ("t", "kind", "y1", "y2", "z1", "y", "z", "mu", "zeta", "lam", "q", "kappa")


@dataclass
class RunResult:
    matching: ks_matching.TwoMatching | None
    trajectory: list[tuple]
    summary: dict
    cycles: list[list[int]] = field(default_factory=list)


def _py_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    if isinstance(rng, np.random.Generator):
        return random.Random(int(rng.integers(2**63)))
    return random.Random(rng)


class TwoGreedy:
    """Mutable run state plus the four step procedures."""

    def __init__(self, seq: HalfEdgeSequence, rng, options: Options | None = None):
        self.seq = seq
        self.rng = _py_rng(rng)
        self.opt = options or Options()
        n = seq.n
        self.n = n
        self.b = [0] * n
        self.partner = [-1] * n
        self.madj = [[] for _ in range(n)]
        self.m_edges: list[tuple[int, int]] = []
        self.cycles: list[list[int]] = []
        self.cls = [classify(seq.deg[v], 0) for v in range(n)]
        self.members = [[] for _ in range(7)]
        self.pos = [0] * n
        for v in range(n):
            lst = self.members[self.cls[v]]
            self.pos[v] = len(lst)
            lst.append(v)
        self.t = 0
        self.counts = dict.fromkeys(KINDS, 0)
        self.loops_dropped = 0
        self.zp = 0
        self.completed_paths = 0
        self.max_zeta = 0
        self.max_zeta_t0 = 0
        self.reached_t0 = False
        self.cur_excursion = 0
        self.longest_excursion = 0
        self.trajectory: list[tuple] = []
        self._last_lam = None
        self._is_y = lambda v: self.cls[v] == YY

    # -- bookkeeping ----------------------------------------------------------

    def copy(self, share_seq: bool = False) -> "TwoGreedy":
        """Independent copy.

        share_seq=True keeps the same sequence object; the caller is expected
        to journal and roll back its edits, or to replace it.
        """
        new = object.__new__(TwoGreedy)
        new.__dict__.update(self.__dict__)
        new.seq = self.seq if share_seq else self.seq.copy()
        new.b = self.b[:]
        new.partner = self.partner[:]
        new.madj = self.madj[:]
        new.m_edges = self.m_edges[:]
        new.cycles = self.cycles[:]
        new.cls = self.cls[:]
        new.members = [m[:] for m in self.members]
        new.pos = self.pos[:]
        new.counts = dict(self.counts)
        new.trajectory = []
        new.rng = random.Random(self.rng.getrandbits(64))
        new._is_y = lambda v: new.cls[v] == YY
        return new

    def reseed(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def state(self, kind: str = "") -> StateVector:
        m = self.members
        return StateVector(len(m[Y1]), len(m[Y2]), len(m[Z1]), len(m[YY]), len(m[ZZ]),
                           self.seq.mu, kind)

    @property
    def zeta(self) -> int:
        m = self.members
        return len(m[Y1]) + 2 * len(m[Y2]) + len(m[Z1])

    @property
    def kappa_running(self) -> int:
        return len(self.cycles) + len(self.members[V00]) + self.completed_paths

    def _move(self, v: int, new: int) -> None:
        old = self.cls[v]
        lst = self.members[old]
        i = self.pos[v]
        last = lst.pop()
        if last != v:
            lst[i] = last
            self.pos[last] = i
        dst = self.members[new]
        self.pos[v] = len(dst)
        dst.append(v)
        self.cls[v] = new
        if new == V00:
            self.zp += 1
        elif new == V01:
            p = self.partner[v]
            if p >= 0:
                self.zp += 1
                if self.cls[p] == V01:
                    self.completed_paths += 1

    def _reclass(self, v: int) -> None:
        new = classify(self.seq.deg[v], self.b[v])
        if new != self.cls[v]:
            self._move(v, new)

    def _set_partner(self, a: int, c: int) -> None:
        self.partner[a] = c
        self.partner[c] = a
        if self.cls[a] == V01 and self.cls[c] == V01:
            self.completed_paths += 1

    def _add_m(self, u: int, v: int) -> None:
        # rebind rather than append so copies can share the inner lists
        self.madj[u] = self.madj[u] + [v]
        self.madj[v] = self.madj[v] + [u]
        self.m_edges.append((u, v))
        self.b[u] = 1
        self.b[v] = 1

    def _remove_vertex(self, w: int) -> None:
        """Delete w from the graph and tidy up its former neighbours."""
        for x in self.seq.delete_vertex_edges(w):
            if x != w:
                self._reclass(x)
        self._reclass(w)

    def _record_cycle(self, start: int) -> None:
        out = [start]
        prev, cur = start, self.madj[start][0]
        while cur != start:
            out.append(cur)
            a, c = self.madj[cur]
            nxt = c if a == prev else a
            prev, cur = cur, nxt
        self.cycles.append(out)

    def _pick(self, cls: int) -> int:
        lst = self.members[cls]
        return lst[self.rng.randrange(len(lst))]

    # -- steps ---------------------------------------------------------------

    def step_1a(self, v: int | None = None) -> str:
        if not self.members[Y1]:
            raise RuntimeError("step 1(a) needs Y1 nonempty")
        seq = self.seq
        if v is None:
            v = self._pick(Y1)
        p = seq.slots[seq.start[v]]
        w = seq.entries[p ^ 1]
        seq.delete_pair(p >> 1)
        covered = self.b[w]
        self._add_m(v, w)
        if not covered:
            self._set_partner(v, w)
            self._reclass(w)
            self._reclass(v)
        else:
            u = self.partner[w]
            self.partner[w] = -1
            self._set_partner(v, u)
            self._remove_vertex(w)
            self._reclass(v)
        return "1a"

    def step_1b(self, v: int | None = None) -> str:
        if self.members[Y1] or not self.members[Y2]:
            raise RuntimeError("step 1(b) needs Y1 empty and Y2 nonempty")
        seq = self.seq
        if v is None:
            v = self._pick(Y2)
        p1, p2 = seq.positions(v)
        w1, w2 = seq.entries[p1 ^ 1], seq.entries[p2 ^ 1]
        if w1 == v:
            # a loop: v leaves the graph uncovered
            seq.delete_pair(p1 >> 1)
            self._reclass(v)
            return "1b"
        if w1 == w2:
            # parallel pair (multigraph only): drop one copy, then v is in Y1
            seq.delete_pair(p2 >> 1)
            self._reclass(v)
            self.step_1a(v)
            return "1b"
        seq.delete_pair(p1 >> 1)
        seq.delete_pair(p2 >> 1)
        b1, b2 = self.b[w1], self.b[w2]
        self._add_m(v, w1)
        self._add_m(v, w2)
        self._reclass(v)
        if not b1 and not b2:
            self._set_partner(w1, w2)
            self._reclass(w1)
            self._reclass(w2)
        elif b1 and b2:
            u1, u2 = self.partner[w1], self.partner[w2]
            self.partner[w1] = self.partner[w2] = -1
            if u1 == w2:
                self._record_cycle(v)
            else:
                self._set_partner(u1, u2)
            self._remove_vertex(w1)
            self._remove_vertex(w2)
        else:
            if b1:
                w1, w2 = w2, w1
            u2 = self.partner[w2]
            self.partner[w2] = -1
            self._set_partner(w1, u2)
            self._reclass(w1)
            self._remove_vertex(w2)
        return "1b"

    def step_1c(self, v: int | None = None) -> str:
        if self.members[Y1] or self.members[Y2] or not self.members[Z1]:
            raise RuntimeError("step 1(c) needs Y1, Y2 empty and Z1 nonempty")
        seq = self.seq
        if v is None:
            v = self._pick(Z1)
        p = seq.slots[seq.start[v]]
        w = seq.entries[p ^ 1]
        u = self.partner[v]
        seq.delete_pair(p >> 1)
        covered = self.b[w]
        self._add_m(v, w)
        self.partner[v] = -1
        if not covered:
            self._set_partner(w, u)
            self._reclass(w)
            self._reclass(v)
            return "1c"
        u2 = self.partner[w]
        self.partner[w] = -1
        if u2 == v:
            self._record_cycle(v)
        else:
            self._set_partner(u, u2)
        self._reclass(v)
        self._remove_vertex(w)
        return "1c"

    def step_2(self) -> str:
        if self.members[Y1] or self.members[Y2] or self.members[Z1] or not self.members[YY]:
            raise RuntimeError("step 2 needs Y1, Y2, Z1 empty and Y nonempty")
        seq = self.seq
        e = seq.entries
        while True:
            p = seq.random_live_halfedge(self._is_y, self.rng, candidates=self.members[YY])
            v, w = e[p], e[p ^ 1]
            if w == v:
                seq.delete_pair(p >> 1)
                self.loops_dropped += 1
                self._reclass(v)
                if self.cls[v] != YY:
                    return "2"
                continue
            if self.opt.step2 == "edge" and self.cls[w] == YY and self.rng.random() < 0.5:
                continue
            break
        seq.delete_pair(p >> 1)
        covered = self.b[w]
        self._add_m(v, w)
        if not covered:
            self._set_partner(v, w)
            self._reclass(v)
            self._reclass(w)
        else:
            u = self.partner[w]
            self.partner[w] = -1
            self._set_partner(u, v)
            self._reclass(v)
            self._remove_vertex(w)
        return "2"

    def step(self) -> str | None:
        m = self.members
        if m[Y1]:
            kind = self.step_1a()
        elif m[Y2]:
            kind = self.step_1b()
        elif m[Z1]:
            kind = self.step_1c()
        elif m[YY]:
            kind = self.step_2()
        else:
            return None
        self.counts[kind] += 1
        self.t += 1
        return kind

    # -- trajectory ------------------------------------------------------------

    def solve_lambda(self, s: StateVector) -> float:
        try:
            lam = solve_lambda(s.y, s.z, s.pi, lam0=self._last_lam)
        except InfeasibleError:
            return float("nan")
        self._last_lam = lam
        return lam

    def capture(self, kind: str) -> None:
        s = self.state(kind)
        lam = self.solve_lambda(s)
        q = float("nan")
        if lam == lam and s.mu > 0:
            A, B, _, _ = abcd(s.y, s.z, s.mu, lam)
            q = 2.0 * A + B
        self.trajectory.append((self.t, kind, s.y1, s.y2, s.z1, s.y, s.z, s.mu, s.zeta, lam, q,
                                self.kappa_running))
        if lam == lam and lam <= 1.0:
            self.reached_t0 = True

    def _track_zeta(self) -> None:
        zt = self.zeta
        if zt > self.max_zeta:
            self.max_zeta = zt
        if not self.reached_t0:
            if 2 * (len(self.members[YY]) + len(self.members[ZZ])) <= self.n:
                self.reached_t0 = True
            elif zt > self.max_zeta_t0:
                self.max_zeta_t0 = zt
        if zt > 0:
            self.cur_excursion += 1
            self.longest_excursion = max(self.longest_excursion, self.cur_excursion)
        else:
            self.cur_excursion = 0

    # -- driver ------------------------------------------------------------------

    def run(self) -> RunResult:
        n = self.n
        every = self.opt.capture_every
        if every is None:
            every = 1 if n <= 10**4 else math.ceil(n / 10**4)
        self.capture("0")
        kind = None
        while True:
            kind = self.step()
            if kind is None:
                break
            self._track_zeta()
            if every and self.t % every == 0:
                self.capture(kind)
            if self.opt.audit_every and self.t % self.opt.audit_every == 0:
                problems = audit(self)
                if problems:
                    raise AuditError(f"audit failed at t={self.t}: " + "; ".join(problems[:10]))
        if not self.trajectory or self.trajectory[-1][0] != self.t:
            self.capture("end")
        s3 = self.state("3")
        lam3 = self.trajectory[-1][9]
        if self.opt.audit_every:
            problems = audit(self)
            if problems:
                raise AuditError("audit failed before step 3: " + "; ".join(problems[:10]))
        summary = {
            "n": n,
            "steps": self.t,
            "counts": dict(self.counts),
            "loops_dropped": self.loops_dropped,
            "step3_y": s3.y, "step3_z": s3.z, "step3_mu": s3.mu, "step3_lambda": lam3,
            "max_zeta": self.max_zeta,
            "max_zeta_t0": self.max_zeta_t0,
            "longest_excursion": self.longest_excursion,
            "z_p": self.zp,
            "greedy_cycles": len(self.cycles),
        }
        matching = None
        if self.opt.run_step3:
            residual = self.seq.edges()
            for u, v in residual:
                if self.cls[u] != ZZ or self.cls[v] != ZZ:
                    raise AuditError(f"residual edge ({u},{v}) outside Z")
            mstar = ks_matching.karp_sipser(n, residual, self.rng)
            ks_size = mstar.size
            mstar = ks_matching.augment(n, residual, mstar, self.opt.ks_effort)
            mstar.check(residual)
            zs = self.members[ZZ]
            matching = ks_matching.combine(n, self.m_edges, mstar.edges)
            summary.update({
                "step3_nu": len(zs),
                "step3_edges": len(residual),
                "ks_size": ks_size,
                "mstar_size": mstar.size,
                "mstar_exposed": len(mstar.exposed(zs)),
                "kappa_total": matching.kappa_total,
                "kappa_nontrivial": matching.kappa_nontrivial,
                "cycles": matching.cycles,
                "paths": matching.paths,
                "isolated": matching.isolated,
            })
        return RunResult(matching, self.trajectory, summary, self.cycles)


def run(seq: HalfEdgeSequence, rng, options: Options | None = None) -> RunResult:
    """Run 2GREEDY to completion on `seq` (which is consumed)."""
    return TwoGreedy(seq, rng, options).run()


# -- audit -------------------------------------------------------------------------

def audit(g: TwoGreedy) -> list[str]:
    """Full rescan of the run state; returns a list of discrepancies."""
    out = list(g.seq.audit())
    n = g.n
    deg = g.seq.deg
    for v in range(n):
        want = classify(deg[v], g.b[v])
        if g.cls[v] != want:
            out.append(f"vertex {v}: class {CLASS_NAMES[g.cls[v]]}, expected {CLASS_NAMES[want]}")
        lst = g.members[g.cls[v]]
        if g.pos[v] >= len(lst) or lst[g.pos[v]] != v:
            out.append(f"vertex {v}: membership index broken")
        k = len(g.madj[v])
        if k > 2:
            out.append(f"vertex {v}: {k} M-edges")
        if g.b[v] != (1 if k else 0):
            out.append(f"vertex {v}: b={g.b[v]} but {k} M-edges")
        if k == 2 and deg[v]:
            out.append(f"vertex {v}: internal but still has degree {deg[v]}")
        p = g.partner[v]
        if k == 1 and p < 0:
            out.append(f"vertex {v}: path end without partner")
        if p >= 0:
            if k != 1:
                out.append(f"vertex {v}: partner set but {k} M-edges")
            if p == v or g.partner[p] != v:
                out.append(f"vertex {v}: partner not an involution")
    if sum(len(m) for m in g.members) != n:
        out.append("class lists do not cover the vertex set")
    # walk M: paths end at partnered vertices, cycles match the record
    seen = [False] * n
    ncyc = 0
    for v in range(n):
        if seen[v] or len(g.madj[v]) != 1:
            continue
        prev, cur = -1, v
        while True:
            seen[cur] = True
            nb = [x for x in g.madj[cur]]
            if prev >= 0:
                nb.remove(prev)
            if not nb:
                break
            prev, cur = cur, nb[0]
        if g.partner[v] != cur:
            out.append(f"path {v}..{cur}: partner of {v} is {g.partner[v]}")
    for v in range(n):
        if not seen[v] and g.madj[v]:
            ncyc += 1
            prev, cur = -1, v
            while not seen[cur]:
                seen[cur] = True
                nb = list(g.madj[cur])
                if prev >= 0:
                    nb.remove(prev)
                prev, cur = cur, nb[0]
    if ncyc != len(g.cycles):
        out.append(f"{ncyc} cycles in M but {len(g.cycles)} recorded")
    return out


# -- expected changes --------------------------------------------------------------

def state_lambda(s: StateVector) -> float:
    return solve_lambda(s.y, s.z, s.pi)


def drift_expected(s: StateVector, kind: str, form: str = "abcd",
                   lam: float | None = None) -> dict[str, float]:
    """Expected one-step changes of (y1, y2, z1, y, z, mu) for a step kind.

    form="abcd" gives the simplified A/B/C/D expressions, form="full" keeps the
    terms proportional to y1, y2, z1.
    """
    if lam is None:
        lam = state_lambda(s)
    A, B, C, D = abcd(s.y, s.z, s.mu, lam)
    if form == "abcd":
        table = {
            "1a": (-1.0, A, B, -C - A, C - (1.0 - C) - B, -1.0 - D),
            "1b": (0.0, -1.0 + 2 * A, 2 * B, -2 * C - 2 * A, 2 * C - 2 * (1.0 - C) - 2 * B, -2.0 - 2 * D),
            "1c": (0.0, A, -1.0 + B, -C - A, C - (1.0 - C) - B, -1.0 - D),
            "2": (0.0, A, B, -1.0 - C - A, 1.0 + C - (1.0 - C) - B, -1.0 - D),
        }
    elif form == "full":
        mu = float(s.mu)
        y1, y2, z1 = s.y1, s.y2, s.z1
        r2 = s.z * lam * f(1, lam) / f(2, lam) / (2 * mu)  # share of half-edges on Z
        table = {
            "1a": (-1.0 - y1 / (2 * mu) - y1 * D / (2 * mu) + y2 * D / mu,
                   -y2 / mu - y2 * D / mu + A,
                   -z1 / (2 * mu) - z1 * D / (2 * mu) + B,
                   -C - A, C - r2 - B, -1.0 - D),
            "1b": (2 * y2 * D / mu,
                   -1.0 - 2 * y2 / mu - 2 * y2 * D / mu + 2 * A,
                   -z1 / mu - z1 * D / mu + 2 * B,
                   -2 * C - 2 * A, 2 * C - 2 * r2 - 2 * B, -2.0 - 2 * D),
            "1c": (0.0, A,
                   -1.0 - z1 / (2 * mu) - z1 * D / (2 * mu) + B,
                   -C - A, C - r2 - B, -1.0 - D),
            "2": (0.0, A, B, -1.0 - C - A, 1.0 - r2 - B + C, -1.0 - D),
        }
    else:
        raise ValueError(f"unknown form {form!r}")
    return dict(zip(("y1", "y2", "z1", "y", "z", "mu"), table[kind]))


def zeta_drift(s: StateVector, kind: str, lam: float | None = None) -> float:
    """Expected one-step change of zeta = y1 + 2 y2 + z1 in a forced step."""
    if lam is None:
        lam = state_lambda(s)
    A, B, _, D = abcd(s.y, s.z, s.mu, lam)
    Q = 2 * A + B
    mu = float(s.mu)
    w = 1.0 / (2 * mu) + D / (2 * mu)  # 1/(2mu) + z lam^2 f0 / (4 mu^2 f2)
    if kind == "1a":
        return -(1.0 - Q) - (s.zeta + s.y2) * w
    if kind == "1b":
        return -2.0 * (1.0 - Q) - s.zeta * 2 * w
    if kind == "1c":
        return -(1.0 - Q) - s.zeta * w
    raise ValueError("zeta drift is defined for forced steps only")


_FORCED = {"1a": (Y1, "step_1a"), "1b": (Y2, "step_1b"), "1c": (Z1, "step_1c")}


def resample_residual(snapshot: TwoGreedy, rng: np.random.Generator) -> TwoGreedy:
    """Copy of the snapshot with a fresh residual graph of the same state vector.

    Degrees on Y (at least 3) and Z (at least 2) are redrawn truncated Poisson
    conditioned on the live degree total, Y1, Y2, Z1 keep degrees 1, 2, 1, and
    the half-edges are paired uniformly.  Class membership is unchanged.
    """
    g = snapshot.copy(share_seq=True)
    m = g.members
    fixed = {v: 0 for c in (V00, V01) for v in m[c]}
    fixed.update({v: 1 for v in m[Y1]})
    fixed.update({v: 2 for v in m[Y2]})
    fixed.update({v: 1 for v in m[Z1]})
    tpl = DegreeProfile.template(g.n, j2=m[ZZ], j3=m[YY], fixed=fixed)
    prof = sample_conditioned_degrees(tpl, g.seq.mu, rng)
    g.seq = pair_sequence(prof, rng)
    return g


def one_step_samples(snapshot: TwoGreedy, kind: str, reps: int, rng: random.Random,
                     fields=("zeta",)) -> np.ndarray:
    """Changes of the given state fields over `reps` one-step continuations.

    Each continuation picks the step vertex, redraws the residual pairing
    around it, takes the forced step and rolls the sequence back, so the
    snapshot is left untouched.
    """
    cls, name = _FORCED[kind]
    seq = snapshot.seq
    base = snapshot.state(kind)
    z0 = snapshot.zeta
    out = np.empty((reps, len(fields)))
    for r in range(reps):
        g = snapshot.copy(share_seq=True)
        g.rng = rng
        seq.journal = []
        try:
            v = g._pick(cls)
            seq.reveal_around(v, rng)
            getattr(g, name)(v)
            s = g.state(kind)
        finally:
            seq.rollback()
        for k, fld in enumerate(fields):
            out[r, k] = (g.zeta - z0) if fld == "zeta" else getattr(s, fld) - getattr(base, fld)
    return out


@dataclass
class ZetaReport:
    max_zeta: int
    max_zeta_t0: int
    t0: int | None
    longest_excursion: int


def zeta_monitor(trajectory, n: int) -> ZetaReport:
    """Max zeta over t >= 1, overall and up to T0 (first record with lambda <= 1 or N <= n/2)."""
    t0 = None
    mz = mz0 = 0
    run = longest = 0
    last_t = None
    for rec in trajectory:
        t, zt, lam, y, z = rec[0], rec[8], rec[9], rec[5], rec[6]
        if t == 0:
            continue
        if t0 is None and ((lam == lam and lam <= 1.0) or 2 * (y + z) <= n):
            t0 = t
        mz = max(mz, zt)
        if t0 is None:
            mz0 = max(mz0, zt)
        step = 1 if last_t is None else t - last_t
        run = run + step if zt > 0 else 0
        longest = max(longest, run)
        last_t = t
    return ZetaReport(mz, mz0, t0, longest)
