"""Deterministic trajectories: the sliding trajectory and its large-c approximation.

All quantities are per-n; one unit of `t` is n algorithm steps.  The sliding
trajectory mixes the step kinds with weights theta chosen so that y1, y2, z1
stay at zero, which gives

    y' = (B - C)/(1 - A) - 1
    z' = (2C - 2A - 2B)/(1 - A)
    mu' = -(1 + D)/(1 - A)

with lambda re-solved from  y phi3(lam) + z phi2(lam) = 2 mu  at every step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .degree_model import InfeasibleError, solve_lambda
from .special_functions import (
    T_TILDE_FRAC,
    abcd,
    closeness_envelope,
    constants,
    delta_bar,
    lambda_tilde_at,
)


class InfeasibleWeights(ValueError):
    pass


@dataclass
class Weights:
    theta_a: float
    theta_b: float
    theta_c: float
    theta_2: float


def weights(A: float, B: float) -> Weights:
    if A >= 1.0 or 2.0 * A + B > 1.0 + 1e-15:
        raise InfeasibleWeights(f"2A + B = {2 * A + B} > 1")
    tb = A / (1.0 - A)
    tc = B / (1.0 - A)
    return Weights(0.0, tb, tc, 1.0 - tb - tc)


@dataclass
class SlideState:
    yhat: float
    zhat: float
    muhat: float
    lamhat: float


@dataclass
class ApproxState:
    ytilde: float
    ztilde: float
    mutilde: float
    lambdatilde: float


def slide_rhs(s: SlideState) -> tuple[float, float, float]:
    A, B, C, D = abcd(s.yhat, s.zhat, s.muhat, s.lamhat)
    k = 1.0 - A
    return (B - C) / k - 1.0, (2.0 * C - 2.0 * A - 2.0 * B) / k, -(1.0 + D) / k


def _solve(y, z, mu, lam0):
    return solve_lambda(y, z, 2.0 * mu, lam0=lam0)


SLIDE_FIELDS = ("t_frac", "yhat", "zhat", "muhat", "lambdahat", "A", "B", "C", "D",
                "theta_b", "theta_c", "theta_2")


def _row(t, s: SlideState):
    A, B, C, D = abcd(s.yhat, s.zhat, s.muhat, s.lamhat)
    w = weights(A, B)
    return (t, s.yhat, s.zhat, s.muhat, s.lamhat, A, B, C, D, w.theta_b, w.theta_c, w.theta_2)


@dataclass
class SlideResult:
    final: SlideState
    t_final: float
    steps: int
    reason: str
    rows: list[tuple]

    def column(self, name: str) -> np.ndarray:
        i = SLIDE_FIELDS.index(name)
        return np.array([r[i] for r in self.rows])


def euler_integrate(c: float, h: float = 1e-5, y_floor: float = 1e-5, method: str = "euler",
                    record_every: int = 100, t_max: float = 2.0) -> SlideResult:
    """Integrate the sliding trajectory from (1, 0, c) until y <= y_floor."""
    if not 0 < h <= 1e-3:
        raise ValueError("h must be in (0, 1e-3]")
    if c < 2.5:
        raise ValueError("sliding trajectory needs c >= 2.5")
    y, z, mu = 1.0, 0.0, float(c)
    lam = _solve(y, z, mu, None)
    s = SlideState(y, z, mu, lam)
    rows = [_row(0.0, s)]
    t = 0.0
    k = 0
    reason = "t_max"
    while t < t_max:
        try:
            if method == "euler":
                dy, dz, dm = slide_rhs(s)
                y, z, mu = s.yhat + h * dy, s.zhat + h * dz, s.muhat + h * dm
            elif method == "rk4":
                y, z, mu = _rk4(s, h)
            else:
                raise ValueError(f"unknown method {method!r}")
            if z < 0:
                reason = "z_negative"
                break
            lam = _solve(y, z, mu, s.lamhat)
        except (InfeasibleError, InfeasibleWeights) as exc:
            reason = f"infeasible: {exc}"
            break
        k += 1
        t = k * h
        s = SlideState(y, z, mu, lam)
        if k % record_every == 0:
            rows.append(_row(t, s))
        if y <= y_floor:
            reason = "y_floor"
            break
    if rows[-1][0] != t:
        rows.append(_row(t, s))
    return SlideResult(s, t, k, reason, rows)


def _rk4(s: SlideState, h: float):
    def f(y, z, mu, lam0):
        lam = _solve(y, z, mu, lam0)
        return slide_rhs(SlideState(y, z, mu, lam)), lam

    (k1y, k1z, k1m) = slide_rhs(s)
    y0, z0, m0 = s.yhat, s.zhat, s.muhat
    (k2y, k2z, k2m), l2 = f(y0 + h / 2 * k1y, z0 + h / 2 * k1z, m0 + h / 2 * k1m, s.lamhat)
    (k3y, k3z, k3m), l3 = f(y0 + h / 2 * k2y, z0 + h / 2 * k2z, m0 + h / 2 * k2m, l2)
    (k4y, k4z, k4m), _ = f(y0 + h * k3y, z0 + h * k3z, m0 + h * k3m, l3)
    return (y0 + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y),
            z0 + h / 6 * (k1z + 2 * k2z + 2 * k3z + k4z),
            m0 + h / 6 * (k1m + 2 * k2m + 2 * k3m + k4m))


def slide_crossing(res: SlideResult) -> float:
    """Time at which yhat reaches zero, by linear extrapolation of the last record."""
    r0, r1 = res.rows[-2], res.rows[-1]
    (t0, y0), (t1, y1) = (r0[0], r0[1]), (r1[0], r1[1])
    if y1 >= y0:
        return t1
    return t1 + y1 * (t1 - t0) / (y0 - y1)


# -- approximate system ---------------------------------------------------------------

def approx_rhs(s: ApproxState) -> tuple[float, float, float]:
    y, z, mu = s.ytilde, s.ztilde, s.mutilde
    n_live = y + z
    return -y / n_live - 1.0, 2.0 * y / n_live, -1.0 - 2.0 * z * mu / n_live**2


@dataclass
class ApproxResult:
    rows: list[tuple]          # (t, y, z, mu, lam)
    t_cross: float
    lambda_cross: float
    z_cross: float
    max_invariant_error: float


def approx_integrate(c: float, h: float = 1e-5, record_every: int = 100) -> ApproxResult:
    """Euler on the approximate system until ytilde crosses zero."""
    if c < 2:
        raise ValueError("approximate system needs c >= 2")
    y, z, mu = 1.0, 0.0, float(c)
    t = 0.0
    k = 0
    rows = [(0.0, y, z, mu, 2.0 * mu / (y + z))]
    inv_err = 0.0
    while True:
        s = ApproxState(y, z, mu, 2.0 * mu / (y + z))
        dy, dz, dm = approx_rhs(s)
        y1, z1, m1 = y + h * dy, z + h * dz, mu + h * dm
        k += 1
        t1 = k * h
        if y1 <= 0.0:
            # interpolate the crossing inside the last step
            frac = y / (y - y1)
            tc = t + frac * h
            zc = z + frac * (z1 - z)
            mc = mu + frac * (m1 - mu)
            lc = 2.0 * mc / zc
            rows.append((tc, 0.0, zc, mc, lc))
            return ApproxResult(rows, tc, lc, zc, inv_err)
        y, z, mu, t = y1, z1, m1, t1
        inv_err = max(inv_err, abs(y + z / 2.0 + t - 1.0))
        if k % record_every == 0:
            rows.append((t, y, z, mu, 2.0 * mu / (y + z)))


def approx_closed_forms(c: float) -> dict:
    """T~/n, lambda~ at X = 1 from the integral solution, and the linear fit A1 c - A2."""
    rep = constants(c, 16.0) if c >= 2 else None
    return {
        "t_tilde_frac": T_TILDE_FRAC,
        "lambda_tilde_x1": lambda_tilde_at(c, 1.0),
        "lambda_tilde_linear": rep.a1 * c - rep.a2 if rep else float("nan"),
    }


# -- closeness of the two systems --------------------------------------------------------

@dataclass
class ClosenessReport:
    c: float
    max_dev_y: float
    max_dev_z: float
    max_ratio: float          # max over t of deviation / (delta * F1(t))
    bound_at_crossing: float  # delta * F1(T~/n)
    delta: float
    z_at_crossing: float
    beta: float
    lambda_hat_crossing: float
    lambda_tilde_crossing: float
    lambda_floor: float       # lambda~(T~) - alpha5 * delta

    @property
    def ok(self) -> bool:
        return (self.max_ratio <= 1.0 and self.z_at_crossing >= self.beta
                and self.lambda_hat_crossing >= self.lambda_floor)


def closeness_check(c: float, h: float = 1e-5) -> ClosenessReport:
    if c < 15:
        raise ValueError("closeness check is meaningful for c >= 15")
    rep = constants(c, 16.0)
    delta = delta_bar(rep.lambda_star)
    slide = euler_integrate(c, h, y_floor=0.0, record_every=10)
    approx = approx_integrate(c, h, record_every=10)
    ts = np.array([r[0] for r in slide.rows])
    ys = np.array([r[1] for r in slide.rows])
    zs = np.array([r[2] for r in slide.rows])
    ta = np.array([r[0] for r in approx.rows])
    ya = np.array([r[1] for r in approx.rows])
    za = np.array([r[2] for r in approx.rows])
    tmax = min(ts[-1], ta[-1])
    mask = ts <= tmax
    dy = np.abs(ys[mask] - np.interp(ts[mask], ta, ya))
    dz = np.abs(zs[mask] - np.interp(ts[mask], ta, za))
    env = np.array([delta * closeness_envelope(1.0, t, rep.beta) for t in ts[mask]])
    dev = np.maximum(dy, dz)
    ratio = np.where(env > 0, dev / np.where(env > 0, env, 1.0), np.where(dev > 0, np.inf, 0.0))
    return ClosenessReport(
        c=c, max_dev_y=float(dy.max()), max_dev_z=float(dz.max()),
        max_ratio=float(ratio.max()),
        bound_at_crossing=delta * rep.alpha0, delta=delta,
        z_at_crossing=slide.final.zhat, beta=rep.beta,
        lambda_hat_crossing=slide.final.lamhat, lambda_tilde_crossing=approx.lambda_cross,
        lambda_floor=approx.lambda_cross - rep.alpha5 * delta,
    )


def write_csv(rows, path, fields=SLIDE_FIELDS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in r])


TABLE_C = (3.0, 2.9, 2.8, 2.7, 2.6, 2.5)


def sup_deviation(t, y, z, mu, n: int, slide: SlideResult) -> dict:
    """Sup-norm distance of an empirical (y, z, mu)/n path from the sliding trajectory.

    Only records up to the end of the slide (its y-crossing) are compared.
    """
    t = np.asarray(t, dtype=float) / n
    ts = slide.column("t_frac")
    mask = t <= ts[-1]
    out = {}
    for name, vals in (("y", y), ("z", z), ("mu", mu)):
        ref = np.interp(t[mask], ts, slide.column({"y": "yhat", "z": "zhat", "mu": "muhat"}[name]))
        out[name] = float(np.max(np.abs(np.asarray(vals, dtype=float)[mask] / n - ref)))
    out["sup"] = max(out["y"], out["z"], out["mu"])
    return out
