"""Command-line harness.

Trial i of a run with master seed S uses

    numpy.random.Generator(PCG64(SeedSequence(entropy=S, spawn_key=(i,))))

so every trial is reproducible on its own and independent of --jobs.
Reports are JSON with "schema": 1 and trials ordered by index.

Exit codes: 0 success, 1 usage or config error, 2 algorithmic failure,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import hamilton, seq_graph, trajectory_ode, two_greedy
from .degree_model import ConvergenceError, InfeasibleError, SamplingError
from .ks_matching import StructuralFault
from .special_functions import QuadratureError, constants, delta_bar

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INVARIANT = 0, 1, 2, 3
SCHEMA = 1


class UsageError(ValueError):
    pass


def trial_rng(master: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=master, spawn_key=(i,))))


@dataclass
class ExperimentConfig:
    n: int = 10**4
    c: float = 15.0
    seed: int = 0
    trials: int = 1
    jobs: int = 1
    audit: bool = False
    multigraph: bool = False
    paper_params: bool = False
    h: float = 1e-5
    nu: int | None = None
    s: int | None = None
    y_floor: float = 1e-5
    out: str | None = None

    def validate(self) -> None:
        if self.n < 4:
            raise UsageError("--n must be at least 4")
        if self.c < 1.5:
            raise UsageError("--c must be at least 1.5")
        if self.trials < 1:
            raise UsageError("--trials must be at least 1")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if not 0 < self.h <= 1e-3:
            raise UsageError("--h must be in (0, 1e-3]")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")

    @property
    def m(self) -> int:
        return round(self.c * self.n)


def _map(fn, args, jobs):
    if jobs == 1 or len(args) == 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


def _suffixed(path: str, i: int, trials: int) -> Path:
    p = Path(path)
    return p if trials == 1 else p.with_name(f"{p.stem}_trial{i}{p.suffix}")


def _clean(x):
    # strict JSON has no NaN or infinity
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return _clean(float(x))
    return x


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _aggregate(rows: list[dict], keys) -> dict:
    agg = {}
    for k in keys:
        vals = [r[k] for r in rows if isinstance(r.get(k), (int, float)) and r[k] == r[k]]
        if vals:
            agg[k] = {"mean": sum(vals) / len(vals), "min": min(vals), "max": max(vals)}
    return agg


def _graph(cfg: ExperimentConfig, rng):
    return seq_graph.generate(cfg.n, cfg.m, rng, simple=not cfg.multigraph)


# -- gen --------------------------------------------------------------------------

def write_pairing(path, seq) -> None:
    edges = seq.edges()
    lines = [f"{seq.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_gen(cfg: ExperimentConfig) -> int:
    for i in range(cfg.trials):
        seq = _graph(cfg, trial_rng(cfg.seed, i))
        out = _suffixed(cfg.out or "graph.txt", i, cfg.trials)
        if cfg.multigraph:
            write_pairing(out, seq)
        else:
            seq_graph.write_graph(out, seq.n, seq.edges())
    return EXIT_OK


# -- twogreedy --------------------------------------------------------------------

TRIAL_KEYS = ("kappa_total", "kappa_nontrivial", "y_final", "z_final", "mu_final", "lambda_final",
              "max_zeta", "wall_time")


def _twogreedy_trial(args):
    cfg, i, traj_path = args
    t0 = time.perf_counter()
    rng = trial_rng(cfg.seed, i)
    seq = _graph(cfg, rng)
    opts = two_greedy.Options(audit_every=100 if cfg.audit else 0)
    res = two_greedy.run(seq, rng, opts)
    s = res.summary
    row = {
        "trial": i,
        "kappa_total": s["kappa_total"],
        "kappa_nontrivial": s["kappa_nontrivial"],
        "y_final": s["step3_y"], "z_final": s["step3_z"], "mu_final": s["step3_mu"],
        "lambda_final": s["step3_lambda"],
        "max_zeta": s["max_zeta"],
        "hamilton": None,
        "boosters_consumed": None,
        "wall_time": time.perf_counter() - t0,
        "summary": s,
    }
    if traj_path:
        write_trajectory(_suffixed(traj_path, i, cfg.trials), res.trajectory)
    return row


def write_trajectory(path, trajectory) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(two_greedy.TRAJ_FIELDS) + "\n")
        for rec in trajectory:
            fh.write(",".join(f"{v:.9g}" if isinstance(v, float) else str(v) for v in rec) + "\n")


def cmd_twogreedy(cfg: ExperimentConfig, trajectory: str | None = None) -> int:
    rows = _map(_twogreedy_trial, [(cfg, i, trajectory) for i in range(cfg.trials)], cfg.jobs)
    _emit({"schema": SCHEMA, "command": "twogreedy", "config": asdict(cfg),
           "trials": rows, "aggregate": _aggregate(rows, TRIAL_KEYS)}, cfg.out)
    return EXIT_OK


# -- ode / constants ----------------------------------------------------------------

def cmd_ode(cfg: ExperimentConfig, cs=None, approx: bool = False, const=None,
            csv_dir: str | None = None, method: str = "euler") -> int:
    out = []
    if const is not None:
        c, lam = const
        rep = constants(c, lam)
        out.append(f"C1 = {rep.c1_value:.6f}")
        out.append(f"delta_bar({lam:g}) = {rep.delta_at:.9f}")
    elif approx:
        forms = trajectory_ode.approx_closed_forms(cfg.c)
        res = trajectory_ode.approx_integrate(cfg.c, cfg.h)
        out.append(f"T~/n = {forms['t_tilde_frac']:.6f}")
        out.append(f"T~/n (integrated) = {res.t_cross:.6f}")
        out.append(f"lambda~(T~) (integrated) = {res.lambda_cross:.6f}")
        out.append(f"lambda~ at X=1 (quadrature) = {forms['lambda_tilde_x1']:.6f}")
        out.append(f"A1*c - A2 = {forms['lambda_tilde_linear']:.6f}")
    else:
        out.append(f"{'c':>4} {'y_final':>9} {'z_final':>9} {'mu_final':>9} {'lambda_final':>12}")
        for c in cs or trajectory_ode.TABLE_C:
            r = trajectory_ode.euler_integrate(c, cfg.h, cfg.y_floor, method=method)
            f = r.final
            out.append(f"{c:4.1f} {f.yhat:9.6f} {f.zhat:9.6f} {f.muhat:9.6f} {f.lamhat:12.6f}")
            if csv_dir:
                Path(csv_dir).mkdir(parents=True, exist_ok=True)
                trajectory_ode.write_csv(r.rows, Path(csv_dir) / f"slide_c{c:g}.csv")
    text = "\n".join(out) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_constants(cfg: ExperimentConfig, lam: float = 16.0, variant: str = "c+1") -> int:
    rep = constants(cfg.c, lam, a3_variant=variant)
    d = rep.as_dict()
    d["delta_bar_exact_tails"] = delta_bar(lam, tails="exact")
    _emit({"schema": SCHEMA, "command": "constants", "constants": d}, cfg.out)
    return EXIT_OK


# -- hamilton ---------------------------------------------------------------------

def _hamilton_trial(args):
    cfg, i, graph, cycle_path = args
    t0 = time.perf_counter()
    rng = trial_rng(cfg.seed, i)
    if graph is None:
        seq = seq_graph.generate(cfg.n, cfg.m, rng, simple=True)
        n, edges = seq.n, seq.edges()
    else:
        n, edges = graph
    s_req = cfg.s if cfg.s is not None else hamilton.default_s(n, cfg.paper_params)
    nu = cfg.nu if cfg.nu is not None else hamilton.default_nu(n, cfg.paper_params)
    s_used = min(s_req, len(hamilton.eligible_edges(n, edges)))
    h_edges, boosters = hamilton.split_boosters(n, edges, s_used, rng)
    res = two_greedy.run(seq_graph.HalfEdgeSequence.from_edges(n, h_edges), rng,
                         two_greedy.Options(audit_every=100 if cfg.audit else 0))
    m0 = res.matching.edges
    out = hamilton.ham(n, h_edges, boosters, m0, nu, random.Random(int(rng.integers(2**63))))
    ok = isinstance(out, hamilton.HamiltonCycle)
    if ok and not hamilton.verify_hamilton(n, h_edges, out.cycle, boosters.used):
        raise StructuralFault("HAM returned a cycle that does not verify")
    if ok and cycle_path:
        Path(_suffixed(cycle_path, i, cfg.trials)).write_text(hamilton.format_cycle(out.cycle) + "\n")
    s = res.summary
    return {
        "trial": i,
        "kappa_total": s["kappa_total"],
        "kappa_nontrivial": s["kappa_nontrivial"],
        "y_final": s["step3_y"], "z_final": s["step3_z"], "mu_final": s["step3_mu"],
        "lambda_final": s["step3_lambda"],
        "max_zeta": s["max_zeta"],
        "hamilton": "cycle" if ok else out.reason,
        "verified": ok,
        "boosters_consumed": out.boosters_examined,
        "boosters_used": len(out.boosters_used) if ok else 0,
        "s_requested": s_req, "s_used": s_used, "nu": nu,
        "iterations": out.iterations, "work": out.work,
        "wall_time": time.perf_counter() - t0,
    }


def cmd_hamilton(cfg: ExperimentConfig, graph_file: str | None = None,
                 cycle_path: str | None = None) -> int:
    graph = seq_graph.read_graph(graph_file) if graph_file else None
    rows = _map(_hamilton_trial, [(cfg, i, graph, cycle_path) for i in range(cfg.trials)], cfg.jobs)
    agg = _aggregate(rows, TRIAL_KEYS + ("boosters_consumed",))
    agg["verified"] = sum(r["verified"] for r in rows)
    _emit({"schema": SCHEMA, "command": "hamilton", "config": asdict(cfg),
           "trials": rows, "aggregate": agg}, cfg.out)
    return EXIT_OK if all(r["verified"] for r in rows) else EXIT_FAIL


# -- drift-test -------------------------------------------------------------------

def find_snapshot(g: two_greedy.TwoGreedy, kind: str, min_t: int = 0, min_zeta: int = 1):
    """Advance g until the next step would be `kind` with zeta >= min_zeta."""
    m = g.members
    while True:
        ready = {"1a": bool(m[two_greedy.Y1]),
                 "1b": not m[two_greedy.Y1] and bool(m[two_greedy.Y2]),
                 "1c": not m[two_greedy.Y1] and not m[two_greedy.Y2] and bool(m[two_greedy.Z1])}[kind]
        if g.t >= min_t and ready and g.zeta >= min_zeta:
            return g
        if g.step() is None:
            return None


def drift_monte_carlo(snapshot: two_greedy.TwoGreedy, kind: str, reps: int,
                      rng: np.random.Generator, batches: int = 100) -> dict:
    """One forced step from the frozen state vector of `snapshot`, `reps` times.

    The residual graph is redrawn for each of `batches` batches and the pairing
    around the step vertex for every continuation; the standard error comes
    from the batch means.
    """
    s = snapshot.state(kind)
    lam = two_greedy.state_lambda(s)
    expected = two_greedy.zeta_drift(s, kind, lam)
    batches = max(2, min(batches, reps // 2))
    per = reps // batches
    prng = random.Random(int(rng.integers(2**63)))
    means = np.empty(batches)
    for b in range(batches):
        g = two_greedy.resample_residual(snapshot, rng)
        means[b] = two_greedy.one_step_samples(g, kind, per, prng)[:, 0].mean()
    mean = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(batches))
    return {"kind": kind, "t": snapshot.t, "zeta": snapshot.zeta, "y": s.y, "z": s.z, "mu": s.mu,
            "lambda": lam, "expected": expected, "reps": per * batches, "batches": batches,
            "mean": mean, "se": se, "z_score": (mean - expected) / se if se > 0 else 0.0,
            "negative": mean < 0, "within_3se": abs(mean - expected) <= 3 * se}


def drift_snapshots(cfg: ExperimentConfig, max_graphs: int = 20) -> dict:
    """First snapshot with zeta > 0 after n/10 steps for each forced kind, over successive graphs."""
    found = {}
    for i in range(max_graphs):
        rng = trial_rng(cfg.seed, i)
        base = two_greedy.TwoGreedy(_graph(cfg, rng), rng)
        for kind in ("1a", "1b", "1c"):
            if kind not in found:
                g = find_snapshot(base.copy(), kind, min_t=cfg.n // 10)
                if g is not None:
                    found[kind] = g
        if len(found) == 3:
            break
    return found


def cmd_drift_test(cfg: ExperimentConfig, reps: int = 10**4) -> int:
    snaps = drift_snapshots(cfg)
    mc_rng = trial_rng(cfg.seed, 10**6)
    rows = []
    for kind in ("1a", "1b", "1c"):
        if kind not in snaps:
            rows.append({"kind": kind, "error": "no snapshot with zeta > 0"})
            continue
        rows.append(drift_monte_carlo(snaps[kind], kind, reps, mc_rng))
    _emit({"schema": SCHEMA, "command": "drift-test", "config": asdict(cfg), "kinds": rows}, cfg.out)
    ok = all(r.get("negative") and r.get("within_3se") for r in rows)
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, n=10**4, c=15.0) -> None:
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--c", type=float, default=c)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--multigraph", action="store_true")
    p.add_argument("--paper-params", action="store_true")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--nu", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--y-floor", type=float, default=1e-5)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="twogreedy", description="2GREEDY 2-matchings, trajectories and Hamilton cycles")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    _common(sub.add_parser("gen", help="sample a minimum-degree-3 random graph"))
    p = sub.add_parser("twogreedy", help="run 2GREEDY and report component counts")
    _common(p)
    p.add_argument("--trajectory", help="trajectory CSV path")
    p = sub.add_parser("ode", help="sliding trajectory table and closed forms")
    _common(p)
    p.add_argument("--cs", type=float, nargs="+")
    p.add_argument("--approx", action="store_true")
    p.add_argument("--constants", type=float, nargs=2, metavar=("C", "LAMBDA"))
    p.add_argument("--csv-dir")
    p.add_argument("--method", choices=("euler", "rk4"), default="euler")
    p = sub.add_parser("hamilton", help="2GREEDY followed by extension-rotation")
    _common(p)
    p.add_argument("--graph", help="edge-list file instead of a sampled graph")
    p.add_argument("--cycle", help="write the cycle here")
    p = sub.add_parser("constants", help="numerical constants for given c and lambda")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=16.0)
    p.add_argument("--a3-variant", choices=("c+1", "2c+1"), default="c+1")
    p = sub.add_parser("drift-test", help="one-step Monte Carlo of the zeta drift")
    _common(p, n=5000, c=3.0)
    p.add_argument("--reps", type=int, default=10**4)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(n=args.n, c=args.c, seed=args.seed, trials=args.trials, jobs=args.jobs,
                           audit=args.audit, multigraph=args.multigraph,
                           paper_params=args.paper_params, h=args.h, nu=args.nu, s=args.s,
                           y_floor=args.y_floor, out=args.out)
    try:
        cfg.validate()
        if args.cmd == "gen":
            return cmd_gen(cfg)
        if args.cmd == "twogreedy":
            return cmd_twogreedy(cfg, args.trajectory)
        if args.cmd == "ode":
            return cmd_ode(cfg, args.cs, args.approx, args.constants, args.csv_dir, args.method)
        if args.cmd == "hamilton":
            return cmd_hamilton(cfg, args.graph, args.cycle)
        if args.cmd == "constants":
            return cmd_constants(cfg, args.lam, args.a3_variant)
        if args.cmd == "drift-test":
            return cmd_drift_test(cfg, args.reps)
    except (UsageError, InfeasibleError, OSError) as exc:
        sys.stderr.write(f"error: {exc} (seed {cfg.seed})\n")
        return EXIT_USAGE
    except (SamplingError, ConvergenceError, QuadratureError, hamilton.BoosterError) as exc:
        sys.stderr.write(f"failure: {exc} (seed {cfg.seed})\n")
        return EXIT_FAIL
    except (StructuralFault, two_greedy.AuditError, hamilton.RotationFault) as exc:
        sys.stderr.write(f"invariant violation: {exc} (seed {cfg.seed})\n")
        return EXIT_INVARIANT
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
