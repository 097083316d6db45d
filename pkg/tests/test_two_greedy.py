import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twogreedy import cli, seq_graph as sg, two_greedy as tg
from twogreedy.two_greedy import V00, V01, Y1, Y2, Z1, YY, ZZ


def greedy(edges, n, seed=0, **opt):
    return tg.TwoGreedy(sg.HalfEdgeSequence.from_edges(n, edges), random.Random(seed), tg.Options(**opt))


def test_classify():
    assert [tg.classify(d, 0) for d in range(5)] == [V00, Y1, Y2, YY, YY]
    assert [tg.classify(d, 1) for d in range(4)] == [V01, Z1, ZZ, ZZ]


@pytest.mark.parametrize("seed", range(6))
def test_triangle(seed):
    g = greedy([(0, 1), (1, 2), (2, 0)], 3, seed)
    assert g.step() == "1b"
    assert g.step() == "1c"
    assert g.step() is None
    assert len(g.cycles) == 1 and sorted(g.cycles[0]) == [0, 1, 2]
    res = g.run()
    assert res.summary["kappa_total"] == 1 and res.summary["step3_edges"] == 0
    assert tg.zeta_monitor(res.trajectory, 3).max_zeta <= 2


def test_triangle_run_zeta():
    res = tg.run(sg.HalfEdgeSequence.from_edges(3, [(0, 1), (1, 2), (2, 0)]), random.Random(0))
    assert tg.zeta_monitor(res.trajectory, 3).max_zeta <= 2
    assert res.matching.cycles == 1


def test_empty_graph():
    res = tg.run(sg.HalfEdgeSequence(7, []), random.Random(0))
    assert res.summary["kappa_total"] == 7 and res.summary["steps"] == 0


def test_step_1a_covered_neighbour():
    # 0-1 first (1 uncovered), then 4-1 with 1 covered: the M-bar edge (1,0) becomes (4,0)
    edges = [(0, 1), (4, 1), (1, 2), (2, 3), (3, 5), (5, 2), (2, 6), (6, 3)]
    g = greedy(edges, 7)
    g.step_1a(0)
    assert g.partner[0] == 1 and g.cls[1] == ZZ
    g.step_1a(4)
    assert g.partner[4] == 0 and g.partner[0] == 4
    assert g.cls[1] == V01 and g.seq.deg[1] == 0 and g.partner[1] == -1
    assert tg.audit(g) == []


def test_step_1b_closes_cycle():
    # C4 x-a-v-b: 1(b) at x makes path a-x-b, then 1(b) at v closes it
    x, a, v, b = 0, 1, 2, 3
    g = greedy([(x, a), (a, v), (v, b), (b, x)], 4)
    g.step_1b(x)
    assert g.partner[a] == b and g.cls[a] == Z1 and g.cls[b] == Z1
    g.step_1b(v)
    assert len(g.cycles) == 1 and sorted(g.cycles[0]) == [0, 1, 2, 3]
    assert all(g.cls[u] == V01 for u in range(4))
    assert tg.audit(g) == []


def test_step_1c_cycle_closure():
    g = greedy([(0, 1), (1, 2), (2, 0)], 3)
    g.step_1b(1)
    assert g.members[Z1] and g.partner[0] == 2
    g.step_1c(0)
    assert len(g.cycles) == 1
    assert tg.audit(g) == []


def test_step_preconditions():
    g = greedy([(0, 1), (1, 2), (2, 0)], 3)
    with pytest.raises(RuntimeError):
        g.step_1a()
    with pytest.raises(RuntimeError):
        g.step_2()


def test_audit_detects_corrupted_b():
    seq = sg.generate(200, 600, np.random.default_rng(0))
    g = tg.TwoGreedy(seq, random.Random(0))
    assert tg.audit(g) == []
    g.b[17] = 1
    problems = tg.audit(g)
    assert problems and any("vertex 17" in p for p in problems)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.6, 3.0, 15.0]))
def test_audit_clean_through_run(seed, c):
    n = 1000
    rng = np.random.default_rng(seed)
    res = tg.run(sg.generate(n, round(c * n), rng), rng, tg.Options(audit_every=100))
    assert res.summary["kappa_total"] >= 1
    assert max(d for _, d in _degrees(res.matching.edges, n)) <= 2


def _degrees(edges, n):
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return enumerate(deg)


def test_multigraph_run_audits():
    rng = np.random.default_rng(8)
    seq = sg.generate(500, 1500, rng, simple=False)
    res = tg.run(seq, rng, tg.Options(audit_every=50))
    assert res.summary["steps"] > 0


def test_copy_is_independent():
    rng = np.random.default_rng(1)
    g = tg.TwoGreedy(sg.generate(300, 900, rng), random.Random(1))
    for _ in range(50):
        g.step()
    before = (g.state().as_tuple(), g.b[:], g.partner[:], [m[:] for m in g.madj])
    h = g.copy()
    for _ in range(50):
        h.step()
    assert (g.state().as_tuple(), g.b, g.partner, [m[:] for m in g.madj]) == before
    assert tg.audit(g) == [] and tg.audit(h) == []


def test_drift_step2_z_zero():
    s = tg.StateVector(0, 0, 0, 1000, 0, 15000)
    d = tg.drift_expected(s, "2")
    assert d["mu"] == -1.0 and d["y1"] == 0.0


def test_drift_forms_agree_when_forced_sets_empty():
    s = tg.StateVector(0, 0, 0, 4000, 3000, 40000)
    a, b = tg.drift_expected(s, "2"), tg.drift_expected(s, "2", form="full")
    for k in ("y1", "y2", "z1", "y", "mu"):
        assert a[k] == pytest.approx(b[k], rel=1e-12, abs=1e-15)


def test_zeta_drift_negative_mid_run():
    # at c = 15 forced steps are rare, so put one Y1 vertex into a mid-run state
    rng = cli.trial_rng(3, 0)
    g = tg.TwoGreedy(sg.generate(20000, 300000, rng), rng)
    for _ in range(5000):
        g.step()
    s = g.state()
    for extra in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (3, 2, 4)):
        t = tg.StateVector(s.y1 + extra[0], s.y2 + extra[1], s.z1 + extra[2], s.y, s.z, s.mu)
        assert t.zeta > 0
        for kind in ("1a", "1b", "1c"):
            assert tg.zeta_drift(t, kind) < 0


def test_zeta_drift_rejects_step2():
    with pytest.raises(ValueError):
        tg.zeta_drift(tg.StateVector(0, 0, 0, 10, 10, 100), "2")


def test_one_step_samples_leave_snapshot_untouched():
    rng = cli.trial_rng(5, 0)
    g = tg.TwoGreedy(sg.generate(3000, 9000, rng), rng)
    snap = cli.find_snapshot(g, "1b", min_t=300)
    assert snap is not None
    before = (snap.seq.entries[:], snap.state("1b").as_tuple())
    out = tg.one_step_samples(snap, "1b", 200, random.Random(0), fields=("zeta", "mu"))
    assert out.shape == (200, 2) and np.all(out[:, 1] <= -2)
    assert (snap.seq.entries, snap.state("1b").as_tuple()) == before
    assert snap.seq.audit() == []


def test_resample_residual_keeps_classes():
    rng = cli.trial_rng(6, 0)
    g = tg.TwoGreedy(sg.generate(3000, 9000, rng), rng)
    snap = cli.find_snapshot(g, "1c", min_t=300)
    assert snap is not None
    h = tg.resample_residual(snap, np.random.default_rng(0))
    assert h.state().as_tuple() == snap.state().as_tuple()
    assert tg.audit(h) == []
    assert all(tg.classify(h.seq.deg[v], h.b[v]) == h.cls[v] for v in range(h.n))


def test_drift_monte_carlo_small():
    rng = cli.trial_rng(0, 0)
    g = tg.TwoGreedy(sg.generate(3000, 9000, rng), rng)
    snap = cli.find_snapshot(g, "1a", min_t=300)
    row = cli.drift_monte_carlo(snap, "1a", 2000, np.random.default_rng(1), batches=20)
    assert row["negative"]
    assert abs(row["z_score"]) < 4


def test_trajectory_lambda_residual():
    from twogreedy.special_functions import phi

    rng = np.random.default_rng(2)
    res = tg.run(sg.generate(2000, 10000, rng), rng)
    for rec in res.trajectory[1:200]:
        y, z, mu, zt, lam = rec[5], rec[6], rec[7], rec[8], rec[9]
        if lam == lam:
            pi = 2 * mu - zt
            assert abs(y * phi(3, lam) + z * phi(2, lam) - pi) <= 1e-6 * pi


def test_zeta_monitor_skips_start():
    traj = [(0, "0", 0, 5, 0, 10, 0, 50, 10, 3.0, 0.0, 0), (1, "2", 0, 0, 0, 9, 2, 49, 0, 3.0, 0.1, 0)]
    rep = tg.zeta_monitor(traj, 10)
    assert rep.max_zeta == 0


def test_mu_strictly_decreases():
    rng = np.random.default_rng(4)
    res = tg.run(sg.generate(2000, 6000, rng), rng, tg.Options(capture_every=1))
    tr = res.trajectory
    for a, b in zip(tr[:-1], tr[1:]):
        if b[1] in tg.KINDS:
            assert b[7] <= a[7] - 1
