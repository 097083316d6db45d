"""Numeric kernel: truncated exponential tails, the ratio functions phi_j,
the A/B/C/D multipliers, the epsilon ladder and the derived constants.

Two tail conventions are available wherever it matters:

* ``"exact"``      f_k(x) = e^x - sum_{i<k} x^i/i!
* ``"recurrence"`` the recurrence f1 = f0 - 1, f2 = f1 - 1 - x, f3 = f2 - 1 - x - x^2/2,
  under which the reference constants come out.  It is the default for
  :func:`epsilon`, :func:`delta_bar` and :func:`constants`; pass
  ``tails="exact"`` for the true tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

EXACT = "exact"
RECURRENCE = "recurrence"

_SERIES_CUTOFF = 1.0
_FACT = [math.factorial(i) for i in range(200)]


class QuadratureError(RuntimeError):
    pass


def _tail_series(k: int, lam: float) -> float:
    # sum_{i>=k} lam^i / i!
    term = lam**k / _FACT[k]
    total = term
    i = k
    while term > 1e-18 * total:
        i += 1
        term *= lam / i
        total += term
    return total


def f(k: int, lam: float, tails: str = EXACT) -> float:
    """Tail f_k(lam) for k in 0..3."""
    if k < 0 or k > 3:
        raise ValueError(f"k must be in 0..3, got {k}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if k == 0:
        return math.exp(lam)
    if tails == RECURRENCE:
        v = math.exp(lam) - 1.0
        if k >= 2:
            v = v - 1.0 - lam
        if k >= 3:
            v = v - 1.0 - lam - lam * lam / 2.0
        return v
    if tails != EXACT:
        raise ValueError(f"unknown tails convention {tails!r}")
    if lam == 0.0:
        return 0.0
    if lam < _SERIES_CUTOFF:
        return _tail_series(k, lam)
    return math.exp(lam) - sum(lam**i / _FACT[i] for i in range(k))


def _g(k: int, x: float) -> tuple[float, float]:
    """g_k(x) = k! x^-k f_k(x) and its derivative, by series (used for x < 1)."""
    val, der = 1.0, 0.0
    coef = 1.0
    i = 0
    while True:
        i += 1
        coef /= k + i  # k! / (k+i)!
        t = coef * x**i
        val += t
        der += i * coef * x ** (i - 1)
        if coef * max(x, 1e-300) ** i < 1e-18 and i > 3:
            break
        if i > 80:
            break
    return val, der


def phi(j: int, lam: float) -> float:
    """phi_j(lam) = lam f_{j-1}(lam) / f_j(lam); equals j at lam = 0."""
    if j not in (2, 3):
        raise ValueError("j must be 2 or 3")
    if lam <= 0.0:
        return float(j)
    if lam < _SERIES_CUTOFF:
        return j * _g(j - 1, lam)[0] / _g(j, lam)[0]
    return lam * f(j - 1, lam) / f(j, lam)


def phi_prime(j: int, lam: float) -> float:
    """Derivative of phi_j, closed form for lam >= 1 and series below."""
    if j not in (2, 3):
        raise ValueError("j must be 2 or 3")
    if lam < _SERIES_CUTOFF:
        a, da = _g(j - 1, max(lam, 0.0))
        b, db = _g(j, max(lam, 0.0))
        return j * (da * b - a * db) / (b * b)
    e1 = math.exp(-lam)
    e2 = e1 * e1
    x = lam
    if j == 2:
        num = 1.0 - (x * x + 2.0) * e1 + e2
        den = (1.0 - (1.0 + x) * e1) ** 2
        return num / den
    num = 2.0 - e1 * (x**3 - x * x + 4.0 * x + 4.0) + (x * x + 4.0 * x + 2.0) * e2
    den = 2.0 * (1.0 - (1.0 + x + x * x / 2.0) * e1) ** 2
    return num / den


def abcd(y: float, z: float, mu: float, lam: float) -> tuple[float, float, float, float]:
    """The four multipliers A, B, C, D at state (y, z, mu) and parameter lam."""
    if mu <= 0 or y + z <= 0:
        raise ValueError("need mu > 0 and y + z > 0")
    f0 = math.exp(lam)
    f2 = f(2, lam)
    f3 = f(3, lam)
    A = y * z * lam**5 * f0 / (8.0 * mu * mu * f2 * f3)
    B = z * z * lam**4 * f0 / (4.0 * mu * mu * f2 * f2)
    C = y * lam * f2 / (2.0 * mu * f3)
    D = z * lam * lam * f0 / (2.0 * mu * f2)
    out = (A, B, C, D)
    if not all(math.isfinite(v) for v in out):
        raise FloatingPointError(f"non-finite multipliers at lam={lam}: {out}")
    return out


def q_value(A: float, B: float) -> float:
    return 2.0 * A + B


# -- worst-case ray ---------------------------------------------------------

def x_bar(lam: float) -> float:
    """Ratio y/z maximising Q at fixed lam."""
    f1, f2, f3 = f(1, lam), f(2, lam), f(3, lam)
    return f3 * (lam * f1 - 2.0 * f2) / (lam * f2 * f2)


def q_on_ray(x: float, lam: float) -> float:
    """Q at y/z = x with mu chosen so that lam solves the state equation."""
    y, z = x, 1.0
    mu = 0.5 * (y * phi(3, lam) + z * phi(2, lam))
    A, B, _, _ = abcd(y, z, mu, lam)
    return q_value(A, B)


def _d_coefficients(jmax: int = 60) -> list[float]:
    # Taylor coefficients of -4 - 4x - (x^4 + 4x^2 - 8) e^x + (4x - 4) e^{2x}
    out = []
    for j in range(jmax + 1):
        c = Fraction(0)
        if j == 0:
            c -= 4
        if j == 1:
            c -= 4
        if j >= 4:
            c -= Fraction(1, _FACT[j - 4])
        if j >= 2:
            c -= Fraction(4, _FACT[j - 2])
        c += Fraction(8, _FACT[j])
        if j >= 1:
            c += Fraction(4 * 2 ** (j - 1), _FACT[j - 1])
        c -= Fraction(4 * 2**j, _FACT[j])
        out.append(float(c))
    return out


_D_COEF = _d_coefficients()


def big_d(lam: float) -> float:
    if lam < 2.0:
        return sum(c * lam**j for j, c in enumerate(_D_COEF) if c)
    e = math.exp(lam)
    return -4.0 - 4.0 * lam - (lam**4 + 4.0 * lam**2 - 8.0) * e + (4.0 * lam - 4.0) * e * e


def one_minus_q_bar(lam: float) -> float:
    """1 - Q along the worst-case ray, from the closed form in D(lam)."""
    f1, f2 = f(1, lam), f(2, lam)
    return big_d(lam) / (4.0 * f2 * (lam * f1 - f2))


# -- epsilon ladder ---------------------------------------------------------

def epsilons(lam: float, tails: str = RECURRENCE) -> tuple[float, ...]:
    """(e1, ..., e11) at lam.  Differences of tails are formed exactly."""
    x = lam
    f0 = math.exp(x)
    f2 = f(2, x, tails)
    f3 = f(3, x, tails)
    if tails == RECURRENCE:
        g12, g02, g03 = 1.0 + x + x * x / 2.0, 2.0 + x, 3.0 + 2.0 * x + x * x / 2.0
    else:
        g12, g02, g03 = x * x / 2.0, 1.0 + x, 1.0 + x + x * x / 2.0
    e1 = g12 / f3
    e2 = g02 / f2
    e3 = g03 / f3
    e4 = e1 / (1.0 + e1)
    e5 = (1.0 + e2) * (1.0 + e3) * x**3 / (8.0 * f0)
    e6 = x * x * (1.0 + e2) ** 2 / f0
    e7 = (e4 + e5 + e6) / (1.0 - e5)
    e8 = (e1 + e5) / (1.0 - e5)
    e9 = x * e4
    e10 = 2.0 * x * e4 / (1.0 - e4)
    e11 = (x * (e2 + e5) + e5) / ((1.0 - e4) * (1.0 - e5))
    return (e1, e2, e3, e4, e5, e6, e7, e8, e9, e10, e11)


def epsilon(p: int, lam: float, tails: str = RECURRENCE) -> float:
    if not 1 <= p <= 11:
        raise ValueError("p must be in 1..11")
    return epsilons(lam, tails)[p - 1]


def delta_bar(lam: float, tails: str = RECURRENCE) -> float:
    return max(epsilons(lam, tails)[:8])


# -- quadrature -------------------------------------------------------------

def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) * (fa + 4.0 * fm + fb) / 6.0

    def rec(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureError(f"no convergence on [{lo}, {hi}], error estimate {delta}")
        return (rec(lo, mid, fa, flm, fm, left, eps / 2.0, depth - 1)
                + rec(mid, hi, fm, frm, fb, right, eps / 2.0, depth - 1))

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def arctan_integrand(x: float) -> float:
    return 2.0 * math.exp(math.atan(x)) / ((1.0 + x) * math.sqrt(1.0 + x * x))


def arctan_prefactor(X: float) -> float:
    return (1.0 + X) * math.exp(-math.atan(X)) / math.sqrt(1.0 + X * X)


def lambda_tilde_at(c: float, X: float, tol: float = 1e-10) -> float:
    """Closed-form solution of the approximate system for lambda as a function of X."""
    integral = adaptive_simpson(arctan_integrand, 0.0, X, tol) if X > 0 else 0.0
    return arctan_prefactor(X) * (2.0 * c - integral)


# -- constants --------------------------------------------------------------

T_TILDE_FRAC = 1.0 - math.exp(-math.pi / 4.0) / math.sqrt(2.0)


@dataclass
class ConstantsReport:
    c: float
    lambda_eval: float
    t_tilde_frac: float
    beta: float
    alpha0: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    a1: float
    a2: float
    c1_value: float
    lambda_star: float
    delta_at: float

    def as_dict(self) -> dict:
        return asdict(self)


def constants(c: float, lambda_eval: float, tails: str = RECURRENCE,
              a3_variant: str = "c+1") -> ConstantsReport:
    """Constants chain at (c, lambda_eval).

    a3_variant="c+1" uses (c+1) in the last term of alpha3, "2c+1" uses (2c+1).
    """
    if c < 2:
        raise ValueError("constants need c >= 2")
    T = T_TILDE_FRAC
    beta = -0.01 + 2.0 * (1.0 - T)
    a0 = beta * (math.exp(2.0 * T / beta) - 1.0)
    pref = arctan_prefactor(T)
    a1 = 2.0 * pref
    a2 = pref * adaptive_simpson(arctan_integrand, 0.0, 1.0, 1e-9)
    d = delta_bar(lambda_eval, tails)
    k = {"c+1": c + 1.0, "2c+1": 2.0 * c + 1.0}[a3_variant]
    a3 = (10.0 * a0 * c / beta**2 + 8.0 * a0 * a0 * c * d / beta**3
          + k * d / (beta * (1.0 - d) ** 2))
    a4 = a0 * a3 / 2.0
    a5 = 2.0 * c / beta + 2.0 * a4 / beta + 4.0 * c * a0 / beta**2
    c1 = a1 * c - a2 - a5 * d
    return ConstantsReport(
        c=c, lambda_eval=lambda_eval, t_tilde_frac=T, beta=beta,
        alpha0=a0, alpha1=a1, alpha2=a2, alpha3=a3, alpha4=a4, alpha5=a5,
        a1=a1, a2=a2, c1_value=c1, lambda_star=a1 * c - a2 - 5.0, delta_at=d,
    )


def closeness_envelope(a: float, x: float, beta: float) -> float:
    """F_a(x) = beta (exp(2 a x / beta) - 1)."""
    return beta * (math.exp(2.0 * a * x / beta) - 1.0)
