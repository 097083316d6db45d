import itertools
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twogreedy import ks_matching as ks
from twogreedy import seq_graph as sg
from twogreedy.degree_model import DegreeProfile, sample_conditioned_degrees


def test_path_three():
    m = ks.karp_sipser(3, [(0, 1), (1, 2)], random.Random(0))
    assert m.edges in ([(0, 1)], [(1, 2)])
    assert len(m.exposed()) == 1


def test_four_cycle_every_branch():
    c4 = [(0, 1), (1, 2), (2, 3), (3, 0)]
    sizes = {ks.karp_sipser(4, c4, random.Random(s)).size for s in range(50)}
    assert sizes == {2}


def test_empty_graph():
    m = ks.karp_sipser(5, [], random.Random(0))
    assert m.size == 0 and len(m.exposed()) == 5


def test_augment_single_path():
    edges = [(0, 1), (1, 2), (2, 3)]
    m = ks.Matching(4, [-1, 2, 1, -1])
    out = ks.augment(4, edges, m)
    assert out.size == 2 and out.exposed() == []


def test_augment_keeps_maximum():
    edges = [(0, 1), (2, 3), (1, 2)]
    m = ks.Matching(4, [1, 0, 3, 2])
    assert ks.augment(4, edges, m).mate == m.mate


def test_check_rejects_non_edge():
    with pytest.raises(ks.StructuralFault):
        ks.Matching(3, [2, -1, 0]).check([(0, 1)])


def test_maximum_matching_size_oracle_agrees_with_networkx():
    rng = random.Random(1)
    for _ in range(30):
        n = rng.randint(1, 10)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.35]
        g = nx.Graph(edges)
        assert ks.maximum_matching_size(n, edges) == len(nx.max_weight_matching(g, maxcardinality=True))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.floats(0.1, 0.7), st.integers(0, 2**32 - 1))
def test_matching_is_valid(n, p, seed):
    rng = random.Random(seed)
    edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
    m = ks.augment(n, edges, ks.karp_sipser(n, edges, rng))
    m.check(edges)
    assert m.size <= ks.maximum_matching_size(n, edges)


def small_instances(trials, seed):
    rng = random.Random(seed)
    for _ in range(trials):
        n = rng.randint(2, 12)
        p = rng.uniform(0.15, 0.6)
        yield n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p], rng


def brute_force_agreement(trials=200, seed=0):
    hits = 0
    for n, edges, rng in small_instances(trials, seed):
        m = ks.augment(n, edges, ks.karp_sipser(n, edges, rng))
        hits += m.size == ks.maximum_matching_size(n, edges)
    return hits / trials


def test_brute_force_agreement():
    assert brute_force_agreement() >= 0.95


def sample_min2(nu, ratio, rng):
    prof = sample_conditioned_degrees(DegreeProfile.template(nu, j2=range(nu), j3=[]), round(ratio * nu), rng)
    return sg.pair_sequence(prof, rng).edges()


def test_near_perfect_on_min_degree_two():
    nu = 2000
    for s, ratio in enumerate((1.5, 2.2, 3.0)):
        rng = np.random.default_rng(s)
        edges = sample_min2(nu, ratio, rng)
        m = ks.augment(nu, edges, ks.karp_sipser(nu, edges, random.Random(s)))
        m.check([e for e in edges if e[0] != e[1]])
        assert len(m.exposed()) <= max(2, 0.001 * nu)


def test_combine_path_plus_edge_is_cycle():
    tm = ks.combine(3, [(0, 2), (2, 1)], [(0, 1)])
    assert (tm.cycles, tm.paths, tm.isolated) == (1, 0, 0)


def test_combine_matching_only():
    k = 4
    tm = ks.combine(2 * k, [], [(2 * i, 2 * i + 1) for i in range(k)])
    assert (tm.paths, tm.cycles, tm.isolated) == (k, 0, 0)
    assert tm.kappa_total == k and sorted(tm.component_sizes) == [2] * k


def test_combine_degree_check():
    with pytest.raises(ks.StructuralFault):
        ks.combine(4, [(0, 1), (0, 2)], [(0, 3)])
