import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twogreedy import hamilton as hm
from twogreedy import seq_graph as sg
from twogreedy.degree_model import solve_lambda
from twogreedy.special_functions import f


def adjs(n, edges):
    adj = sg.adjacency(n, edges)
    return adj, [set(a) for a in adj]


def test_rotate_fixture():
    assert hm.rotate((1, 2, 3, 4, 5), (5, 2)) == [1, 2, 5, 4, 3]


@given(st.integers(4, 30), st.data())
def test_rotate_new_endpoint_and_mirror(k, data):
    path = list(range(k))
    data.draw(st.randoms()).shuffle(path)
    i = data.draw(st.integers(0, k - 3))
    out = hm.rotate(path, (path[-1], path[i]))
    assert out[-1] == path[i + 1] and out[0] == path[0]
    assert sorted(out) == sorted(path)
    # the mirrored chord from the new endpoint undoes the rotation
    back = hm.rotate(out, (out[-1], path[i]))
    assert back == path and {back[0], back[-1]} == {path[0], path[-1]}


def test_rotate_faults():
    with pytest.raises(hm.RotationFault):
        hm.rotate([1, 2, 3], (1, 2))
    with pytest.raises(hm.RotationFault):
        hm.rotate([1, 2, 3, 4], (4, 9))
    with pytest.raises(hm.RotationFault):
        hm.rotate([1, 2, 3, 4], (4, 3))


def test_rrs_extension_immediate():
    edges = [(0, 1), (1, 2), (2, 3)]
    adj, aset = adjs(4, edges)
    res = hm.rrs(adj, aset, [0, 1, 2], nu=10)
    assert isinstance(res, hm.Extension) and res.outside == 3 and list(res.path) == [0, 1, 2]


def rotation_closure(adj, path):
    """Endpoints of every path reachable by explicit rotations, first vertex fixed."""
    seen = {tuple(path)}
    todo = [tuple(path)]
    while todo:
        p = todo.pop()
        for w in adj[p[-1]]:
            if w in p[:-2]:
                q = tuple(hm.rotate(p, (p[-1], w)))
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
    return {p[-1] for p in seen}


def test_rrs_c5_exhausts():
    c5 = [(i, (i + 1) % 5) for i in range(5)]
    adj, aset = adjs(5, c5)
    # inside C5 the only rotation from 0-1-2-3-4 uses the chord (4, 0) and ends at 1
    res = hm.rrs(adj, aset, [0, 1, 2, 3, 4], nu=10, close=False)
    assert isinstance(res, hm.EndpointSets)
    assert set(res.forest.end) == {4, 1} == rotation_closure(adj, [0, 1, 2, 3, 4])
    res = hm.rrs(adj, aset, [0, 1, 2, 3, 4], nu=10)
    assert isinstance(res, hm.Closure) and res.booster is None


def test_rrs_c5_with_chord():
    edges = [(i, (i + 1) % 5) for i in range(5)] + [(4, 1)]
    adj, aset = adjs(5, edges)
    res = hm.rrs(adj, aset, [0, 1, 2, 3, 4], nu=10, close=False)
    assert set(res.forest.end) == rotation_closure(adj, [0, 1, 2, 3, 4]) == {1, 2, 3, 4}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rrs_endpoints_match_explicit_rotations(seed):
    rng = random.Random(seed)
    n = rng.randint(5, 9)
    order = list(range(n))
    rng.shuffle(order)
    edges = [(order[i], order[i + 1]) for i in range(n - 1)]
    edges += [e for e in itertools.combinations(range(n), 2)
              if rng.random() < 0.3 and e not in edges and e[::-1] not in edges]
    adj, aset = adjs(n, edges)
    res = hm.rrs(adj, aset, order, nu=n, close=False)
    assert isinstance(res, hm.EndpointSets)
    # one stored path per endpoint can miss endpoints only reachable through another path
    assert set(res.forest.end) <= rotation_closure(adj, order)
    for x in res.forest.end:
        q = res.forest.path_to(x)
        assert q[0] == order[0] and q[-1] == x
        assert all(int(q[i + 1]) in aset[int(q[i])] for i in range(n - 1))


def test_rrs_paths_are_valid_rotations():
    rng = np.random.default_rng(0)
    n = 60
    edges = sg.generate(n, 150, rng).edges()
    adj, aset = adjs(n, edges)
    # a genuine path: greedy walk
    walk, seen = [0], {0}
    while True:
        nxt = [w for w in adj[walk[-1]] if w not in seen]
        if not nxt:
            break
        walk.append(nxt[0])
        seen.add(nxt[0])
    res = hm.rrs(adj, aset, walk, nu=40, close=False)
    forest = res.forest
    for x in forest.end:
        p = forest.path_to(x)
        assert p[0] == walk[0] and p[-1] == x and sorted(p) == sorted(walk)
        assert all(int(p[i + 1]) in aset[int(p[i])] for i in range(len(p) - 1))
    assert forest.expansions <= 40**2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 60))
def test_rrs_work_bounded(seed, nu):
    rng = np.random.default_rng(seed)
    n = 200
    edges = sg.generate(n, 600, rng).edges()
    adj, aset = adjs(n, edges)
    walk, seen = [0], {0}
    while True:
        nxt = [w for w in adj[walk[-1]] if w not in seen]
        if not nxt:
            break
        walk.append(nxt[0])
        seen.add(nxt[0])
    res = hm.rrs(adj, aset, walk, nu=nu, close=False)
    assert len(res.forest.end) <= nu
    assert res.forest.expansions <= nu * nu


def test_verify_hamilton():
    k4 = hm.k4_edges()
    assert hm.verify_hamilton(4, k4, [0, 1, 2, 3])
    assert not hm.verify_hamilton(4, k4, [0, 1, 1, 3])
    assert not hm.verify_hamilton(4, k4, [0, 1, 2])


def test_verify_random_permutation_sparse():
    rng = np.random.default_rng(1)
    n = 200
    edges = sg.generate(n, 400, rng).edges()
    hits = sum(hm.verify_hamilton(n, edges, rng.permutation(n).tolist()) for _ in range(200))
    assert hits == 0


def test_has_hamilton_cycle_oracle():
    assert hm.has_hamilton_cycle(4, hm.k4_edges())
    assert not hm.has_hamilton_cycle(10, hm.petersen_edges())
    rng = random.Random(3)
    for _ in range(30):
        n = rng.randint(4, 8)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.5]
        # brute force over permutations fixing vertex 0
        es = set(edges) | {(v, u) for u, v in edges}
        want = any(all((c[i], c[(i + 1) % n]) in es for i in range(n))
                   for c in ((0,) + p for p in itertools.permutations(range(1, n))))
        assert hm.has_hamilton_cycle(n, edges) == want


def test_ham_k4():
    out = hm.ham(4, hm.k4_edges(), hm.BoosterSet([]), [], nu=4)
    assert isinstance(out, hm.HamiltonCycle)
    assert hm.verify_hamilton(4, hm.k4_edges(), out.cycle)


def test_ham_petersen_fails():
    out = hm.ham(10, hm.petersen_edges(), hm.BoosterSet([]), [], nu=10)
    assert isinstance(out, hm.Failure)


def test_ham_disconnected():
    edges = hm.k4_edges() + [(u + 4, v + 4) for u, v in hm.k4_edges()]
    out = hm.ham(8, edges, hm.BoosterSet([]), [], nu=8)
    assert isinstance(out, hm.Failure) and out.reason == "disconnected"


def test_ham_uses_booster():
    # a path 0..5 in H plus the closing edge as a booster
    h = [(i, i + 1) for i in range(5)]
    out = hm.ham(6, h, hm.BoosterSet([(5, 0)]), [], nu=6)
    assert isinstance(out, hm.HamiltonCycle)
    assert out.boosters_used == [(5, 0)]
    assert hm.verify_hamilton(6, h, out.cycle, out.boosters_used)


def test_split_boosters_k4_raises():
    with pytest.raises(hm.BoosterError):
        hm.split_boosters(4, hm.k4_edges(), 1, np.random.default_rng(0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 10))
def test_split_boosters_keeps_min_degree(seed, s):
    rng = np.random.default_rng(seed)
    n = 100
    edges = sg.generate(n, 400, rng).edges()
    h, x = hm.split_boosters(n, edges, s, rng)
    deg = np.bincount(np.asarray(h).ravel(), minlength=n)
    assert deg.min() >= 3
    assert len(x.edges) == s and len(h) + s == len(edges)


def test_eligible_fraction_c15():
    n = 10**4
    rng = np.random.default_rng(0)
    edges = sg.generate(n, 15 * n, rng).edges()
    lam = solve_lambda(n, 0, 30 * n)
    rho3 = lam**3 / (6 * f(3, lam))
    frac = len(hm.eligible_edges(n, edges)) / len(edges)
    assert abs(frac - (1 - rho3 * (2 - rho3))) <= 0.02


def test_defaults():
    assert hm.default_nu(10**4) == 10**4
    assert hm.default_s(10**4) == 100
    assert hm.default_nu(10**4, asymptotic=True) == math.ceil(10**3 * math.log(10**4) ** 2)


def test_pipeline_small():
    from twogreedy import two_greedy as tg

    n = 2000
    rng = np.random.default_rng(4)
    edges = sg.generate(n, 15 * n, rng).edges()
    h, x = hm.split_boosters(n, edges, hm.default_s(n), rng)
    res = tg.run(sg.HalfEdgeSequence.from_edges(n, h), rng)
    out = hm.ham(n, h, x, res.matching.edges, hm.default_nu(n), random.Random(0))
    assert isinstance(out, hm.HamiltonCycle)
    assert hm.verify_hamilton(n, h, out.cycle, out.boosters_used)
    assert out.work <= hm.default_nu(n) * (hm.default_nu(n) + 1)
