"""Truncated Poisson degree machinery.

The state equation  y*phi3(lam) + z*phi2(lam) = pi  is solved by a bracketed
Newton iteration, and degree sequences are drawn i.i.d. truncated Poisson and
conditioned on their exact sum by whole-block rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special_functions import f, phi, phi_prime


class InfeasibleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class SamplingError(RuntimeError):
    def __init__(self, msg: str, attempts: int):
        super().__init__(msg)
        self.attempts = attempts


# -- lambda ------------------------------------------------------------------

def solve_lambda(y: float, z: float, pi: float, lam0: float | None = None,
                 rtol: float = 1e-10, max_iter: int = 200) -> float:
    """Root of y*phi3(lam) + z*phi2(lam) = pi.

    The left side is increasing and convex in lam and at least (y+z)*lam, so
    Newton started to the right of the root decreases monotonically onto it.
    lam0 is a warm start; it is only used if it lies right of the root.
    """
    n_live = y + z
    if n_live <= 0:
        raise InfeasibleError("y + z must be positive")
    floor = 3.0 * y + 2.0 * z
    if pi <= floor:
        raise InfeasibleError(f"pi={pi} is not above 3y+2z={floor}")
    if pi / n_live > 200.0:
        raise InfeasibleError(f"pi/(y+z)={pi / n_live:.3g} exceeds guard 200")

    def g(lam):
        return y * phi(3, lam) + z * phi(2, lam) - pi

    tol = rtol * pi
    lo, hi = 0.0, pi / n_live
    lam = hi
    if lam0 is not None and 0.0 < lam0 < hi:
        if g(lam0) >= 0.0:
            lam = lam0
        else:
            lo = lam0
    for _ in range(max_iter):
        r = g(lam)
        if abs(r) <= tol:
            return lam
        if r > 0:
            hi = min(hi, lam)
        else:
            lo = max(lo, lam)
        d = y * phi_prime(3, lam) + z * phi_prime(2, lam)
        nxt = lam - r / d if d > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        lam = nxt
    r = g(lam)
    if abs(r) <= tol:
        return lam
    raise ConvergenceError(f"solve_lambda did not converge: lam={lam}, residual={r}")


def sigma_sq(ell: int, lam: float) -> float:
    return lam * phi_prime(ell, lam)


# -- distributions -------------------------------------------------------------

@dataclass
class TruncatedPoisson:
    lam: float
    min_degree: int

    def __post_init__(self):
        if self.min_degree not in (2, 3):
            raise ValueError("min_degree must be 2 or 3")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        # pmf table out to where the remaining mass is negligible
        k = self.min_degree
        tmax = int(self.lam + 12.0 * math.sqrt(self.lam) + 40)
        t = np.arange(k, tmax + 1)
        logp = t * math.log(self.lam) - np.array([math.lgamma(v + 1) for v in t]) \
            - math.log(f(k, self.lam))
        p = np.exp(logp)
        self.support = t
        self.probs = p
        self._build_alias(p / p.sum())

    def pmf(self, t: int) -> float:
        if t < self.min_degree:
            return 0.0
        return math.exp(t * math.log(self.lam) - math.lgamma(t + 1)) / f(self.min_degree, self.lam)

    def _build_alias(self, p: np.ndarray) -> None:
        # Vose's alias table
        k = len(p)
        scaled = p * k
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        self._prob = prob
        self._alias = alias

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        i = rng.integers(0, len(self._prob), size)
        u = rng.random(size)
        return self.support[np.where(u < self._prob[i], i, self._alias[i])]


@dataclass
class DegreeProfile:
    """Degrees on [0, n) with the vertex set split into J0 (fixed), J2 and J3.

    A template has degree -1 on J2 and J3; a sampled profile is complete.
    """

    degrees: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    j0: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    attempts: int = 0

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=np.int64)
        self.j2 = np.asarray(self.j2, dtype=np.int64)
        self.j3 = np.asarray(self.j3, dtype=np.int64)
        self.j0 = np.asarray(self.j0, dtype=np.int64)
        n = len(self.degrees)
        allv = np.concatenate([self.j0, self.j2, self.j3])
        if len(allv) != n or (n and not np.array_equal(np.sort(allv), np.arange(n))):
            raise ValueError("J0, J2, J3 must partition the vertex set")
        if self.complete:
            if np.any(self.degrees[self.j2] < 2) or np.any(self.degrees[self.j3] < 3):
                raise ValueError("minimum degree violated")
            if np.any(self.degrees < 0):
                raise ValueError("negative degree")

    @classmethod
    def template(cls, n: int, j2=(), j3=None, fixed: dict[int, int] | None = None) -> "DegreeProfile":
        fixed = fixed or {}
        j2 = np.asarray(sorted(j2), dtype=np.int64)
        if j3 is None:
            taken = set(j2.tolist()) | set(fixed)
            j3 = [v for v in range(n) if v not in taken]
        deg = np.full(n, -1, dtype=np.int64)
        for v, d in fixed.items():
            deg[v] = d
        return cls(deg, j2, np.asarray(sorted(j3), dtype=np.int64),
                   np.asarray(sorted(fixed), dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def complete(self) -> bool:
        return bool(np.all(self.degrees[np.concatenate([self.j2, self.j3])] >= 0))

    @property
    def d_fixed(self) -> int:
        return int(self.degrees[self.j0].sum()) if len(self.j0) else 0

    @property
    def total(self) -> int:
        if not self.complete:
            raise ValueError("template has no total")
        return int(self.degrees.sum())


def pooled_sigma_sq(profile: DegreeProfile, lam: float) -> float:
    n2, n3 = len(profile.j2), len(profile.j3)
    return (n2 * sigma_sq(2, lam) + n3 * sigma_sq(3, lam)) / (n2 + n3)


def _setup(template: DegreeProfile, m: int):
    target = 2 * m - template.d_fixed
    n2, n3 = len(template.j2), len(template.j3)
    if n2 + n3 == 0:
        if target != 0:
            raise InfeasibleError("no free vertices but 2m - D != 0")
        return target, None, None, None
    if target < 2 * n2 + 3 * n3:
        raise InfeasibleError(f"2m - D = {target} below the minimum {2 * n2 + 3 * n3}")
    if target == 2 * n2 + 3 * n3:
        return target, 0.0, None, None
    lam = solve_lambda(n3, n2, target)
    return target, lam, TruncatedPoisson(lam, 2) if n2 else None, TruncatedPoisson(lam, 3) if n3 else None


def retry_budget(template: DegreeProfile, lam: float) -> int:
    nbar = len(template.j2) + len(template.j3)
    sigma = math.sqrt(pooled_sigma_sq(template, lam))
    return 200 * max(1, math.ceil(sigma * math.sqrt(2.0 * math.pi * nbar)))


def _attempt(target, tp2, tp3, n2, n3, rng):
    # draw J3 first; abort early if the partial sum already overshoots
    d3 = tp3.sample(n3, rng) if n3 else np.zeros(0, dtype=np.int64)
    s3 = int(d3.sum())
    if s3 + 2 * n2 > target:
        return None
    d2 = tp2.sample(n2, rng) if n2 else np.zeros(0, dtype=np.int64)
    if s3 + int(d2.sum()) != target:
        return None
    return d2, d3


def sample_conditioned_degrees(template: DegreeProfile, m: int, rng: np.random.Generator,
                               max_attempts: int | None = None) -> DegreeProfile:
    """Degrees on J2 and J3 i.i.d. truncated Poisson conditioned on summing to 2m - D."""
    target, lam, tp2, tp3 = _setup(template, m)
    deg = template.degrees.copy()
    n2, n3 = len(template.j2), len(template.j3)
    if lam is None or lam == 0.0:
        deg[template.j2] = 2
        deg[template.j3] = 3
        return DegreeProfile(deg, template.j2, template.j3, template.j0, attempts=1)
    budget = max_attempts if max_attempts is not None else retry_budget(template, lam)
    for attempt in range(1, budget + 1):
        got = _attempt(target, tp2, tp3, n2, n3, rng)
        if got is not None:
            deg[template.j2], deg[template.j3] = got
            out = DegreeProfile(deg, template.j2, template.j3, template.j0, attempts=attempt)
            assert out.total == 2 * m
            return out
    raise SamplingError(f"no degree sequence with sum {target} after {budget} attempts", budget)


def acceptance_count(template: DegreeProfile, m: int, rng: np.random.Generator,
                     attempts: int) -> int:
    """Number of accepted draws among a fixed number of rejection attempts."""
    target, lam, tp2, tp3 = _setup(template, m)
    n2, n3 = len(template.j2), len(template.j3)
    return sum(_attempt(target, tp2, tp3, n2, n3, rng) is not None for _ in range(attempts))


def predicted_acceptance(template: DegreeProfile, m: int) -> float:
    target, lam, _, _ = _setup(template, m)
    nbar = len(template.j2) + len(template.j3)
    return 1.0 / math.sqrt(2.0 * math.pi * nbar * pooled_sigma_sq(template, lam))


# -- audits ----------------------------------------------------------------------

@dataclass
class BucketCheck:
    ell: int
    k: int
    observed: int
    expected: float
    envelope: float

    @property
    def ok(self) -> bool:
        return abs(self.observed - self.expected) <= self.envelope


@dataclass
class ConcentrationReport:
    buckets: list[BucketCheck]
    max_degree: int
    max_degree_bound: float

    @property
    def ok(self) -> bool:
        return all(b.ok for b in self.buckets)

    @property
    def max_degree_ok(self) -> bool:
        return self.max_degree <= self.max_degree_bound


def degree_concentration_audit(profile: DegreeProfile, lam: float,
                               max_degree_slack: float = 5.0) -> ConcentrationReport:
    nbar = len(profile.j2) + len(profile.j3)
    log_n = math.log(nbar) if nbar > 1 else 1.0
    buckets = []
    for ell, members in ((2, profile.j2), (3, profile.j3)):
        if len(members) == 0:
            continue
        counts = np.bincount(profile.degrees[members], minlength=int(log_n) + 2)
        for k in range(ell, int(math.floor(log_n)) + 1):
            if lam > 0:
                expected = len(members) * math.exp(k * math.log(lam) - math.lgamma(k + 1)) / f(ell, lam)
            else:
                expected = float(len(members)) if k == ell else 0.0
            env = (1.0 + math.sqrt(expected)) * log_n**2
            buckets.append(BucketCheck(ell, k, int(counts[k]) if k < len(counts) else 0, expected, env))
    free = np.concatenate([profile.j2, profile.j3])
    maxd = int(profile.degrees[free].max()) if len(free) else 0
    loglog = math.log(log_n) if log_n > 1 else 1.0
    bound = log_n / math.sqrt(loglog) + max_degree_slack
    return ConcentrationReport(buckets, maxd, bound)
