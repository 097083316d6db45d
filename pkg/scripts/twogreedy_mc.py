"""Several 2GREEDY runs at one (n, c): trajectory deviation, final z, zeta and component counts."""
import argparse
import math

import numpy as np

from twogreedy import cli, seq_graph, trajectory_ode, two_greedy

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=10**5)
    p.add_argument("--c", type=float, default=15.0)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--master", type=int, default=0)
    a = p.parse_args()
    slide = trajectory_ode.euler_integrate(a.c, 1e-5, y_floor=0.0)
    print(f"ln^2 n = {math.log(a.n) ** 2:.1f}, 12 ln n = {12 * math.log(a.n):.1f}")
    for i in range(a.seeds):
        rng = cli.trial_rng(a.master, i)
        res = two_greedy.run(seq_graph.generate(a.n, round(a.c * a.n), rng), rng)
        tr = np.array([(r[0], r[5], r[6], r[7]) for r in res.trajectory], dtype=float)
        dev = trajectory_ode.sup_deviation(tr[:, 0], tr[:, 1], tr[:, 2], tr[:, 3], a.n, slide)
        s = res.summary
        print(f"seed {i}: dev y {dev['y']:.4f} z {dev['z']:.4f} mu {dev['mu']:.4f} | "
              f"z_final/n {s['step3_z'] / a.n:.3f} max_zeta {s['max_zeta']} "
              f"kappa_nontrivial {s['kappa_nontrivial']}", flush=True)
