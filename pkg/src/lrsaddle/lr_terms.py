"""Lugannani-Rice expansion terms.

Two routes are provided for the low-order corrections: the closed forms
for the first two terms, and the general chain

    theta-derivatives at w_hat  ->  g = theta(w)/w  ->  h = log g

from which the m-th correction is phi(w_hat) (-1)^m / (2m)!! h^(2m+1)(w_hat).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapabilityError, DegenerateThresholdError, UnsupportedOrderError
from .saddle import DEGENERATE_W, SaddleInfo, solve_saddlepoint

__all__ = [
    "MAX_TERM",
    "normal_pdf",
    "normal_sf",
    "ThetaDerivs",
    "GhDerivs",
    "LrResult",
    "h_table",
    "theta_hat_derivs",
    "theta_taylor",
    "gh_derivs",
    "psi0_closed",
    "psi1_closed",
    "psi_m",
    "double_factorial",
    "tail_lr",
]

MAX_TERM = 3
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_pdf(w):
    return _INV_SQRT_2PI * math.exp(-0.5 * w * w)


def normal_sf(w):
    return 0.5 * math.erfc(w / _SQRT2)


def double_factorial(n):
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# --------------------------------------------------------------------------
# theta(w) derivatives at w_hat


@dataclass(frozen=True)
class ThetaDerivs:
    """``d[n]`` is the n-th derivative of theta(w) at w_hat; ``d[0]`` is theta_hat."""

    d: tuple

    @property
    def order(self):
        return len(self.d) - 1


def _theta_derivs_from_cumulants(k, max_order):
    """theta^(1..max_order) at w_hat from K'', ..., K^(max_order+1) at theta_hat."""
    k2 = k[2]
    r = math.sqrt(k2)
    out = [1.0 / r]
    if max_order >= 2:
        out.append(-k[3] / (3.0 * k2**2))
    if max_order >= 3:
        out.append(5.0 * k[3] ** 2 / (12.0 * k2**3.5) - k[4] / (4.0 * k2**2.5))
    if max_order >= 4:
        out.append(
            -k[5] / (5.0 * k2**3)
            + k[3] * k[4] / k2**4
            - 8.0 * k[3] ** 3 / (9.0 * k2**5)
        )
    if max_order >= 5:
        out.append(
            -k[6] / (6.0 * k2**3.5)
            + 35.0 * k[4] ** 2 / (48.0 * k2**4.5)
            + 7.0 * k[3] * k[5] / (6.0 * k2**4.5)
            - 35.0 * k[3] ** 2 * k[4] / (8.0 * k2**5.5)
            + 385.0 * k[3] ** 4 / (144.0 * k2**6.5)
        )
    if max_order >= 6:
        out.append(
            -k[7] / (7.0 * k2**4)
            - 280.0 * k[3] ** 5 / (27.0 * k2**8)
            + 200.0 * k[3] ** 3 * k[4] / (9.0 * k2**7)
            - 25.0 * k[3] * k[4] ** 2 / (3.0 * k2**6)
            - 20.0 * k[3] ** 2 * k[5] / (3.0 * k2**6)
            + 2.0 * k[4] * k[5] / k2**5
            + 4.0 * k[3] * k[6] / (3.0 * k2**5)
        )
    if max_order >= 7:
        out.append(
            -k[8] / (8.0 * k2**4.5)
            + 85085.0 * k[3] ** 6 / (1728.0 * k2**9.5)
            - 25025.0 * k[3] ** 4 * k[4] / (192.0 * k2**8.5)
            + 5005.0 * k[3] ** 2 * k[4] ** 2 / (64.0 * k2**7.5)
            - 385.0 * k[4] ** 3 / (64.0 * k2**6.5)
            + 1001.0 * k[3] ** 3 * k[5] / (24.0 * k2**7.5)
            - 231.0 * k[3] * k[4] * k[5] / (8.0 * k2**6.5)
            + 63.0 * k[5] ** 2 / (40.0 * k2**5.5)
            - 77.0 * k[3] ** 2 * k[6] / (8.0 * k2**6.5)
            + 21.0 * k[4] * k[6] / (8.0 * k2**5.5)
            + 3.0 * k[3] * k[7] / (2.0 * k2**5.5)
        )
    return out


def theta_hat_derivs(model, s: SaddleInfo, max_order=7):
    """Derivatives of the implicit map theta(w) at w_hat, orders 1..max_order."""
    if not 1 <= max_order <= 7:
        raise UnsupportedOrderError(f"theta derivatives are available up to order 7, not {max_order}")
    need = max_order + 1
    if need > model.max_order:
        raise CapabilityError(f"{model.label} cannot supply K^({need})")
    k = model.derivatives(s.theta_hat, need)
    return ThetaDerivs(d=(s.theta_hat, *_theta_derivs_from_cumulants(k, max_order)))


def _series_sqrt(q, n):
    r = np.zeros(n)
    r[0] = math.sqrt(q[0])
    for k in range(1, n):
        r[k] = (q[k] - np.dot(r[1:k], r[k - 1 : 0 : -1])) / (2.0 * r[0])
    return r


def _series_reciprocal(q, n):
    r = np.zeros(n)
    r[0] = 1.0 / q[0]
    for k in range(1, n):
        r[k] = -np.dot(q[1 : k + 1], r[k - 1 :: -1]) / q[0]
    return r


def theta_taylor(c, n):
    """Taylor coefficients of theta(w) about w_hat, by series reversion.

    ``c[r] = K^(r)(theta_hat)/r!`` for r = 0..n+1. Returns ``a`` of length
    n+1 with ``a[k] = theta^(k)(w_hat)/k!`` (``a[0]`` is left at 0).
    Uses ``(w - w_hat)^2/2 = sum_{r>=2} c_r tau^r`` with ``tau = theta - theta_hat``
    and Lagrange inversion.
    """
    c = np.asarray(c, dtype=float)
    if len(c) < n + 2:
        raise CapabilityError(f"need {n + 2} Taylor coefficients of K, got {len(c)}")
    root = _series_sqrt(2.0 * c[2 : n + 2], n)  # (w - w_hat) / tau
    recip = _series_reciprocal(root, n)  # tau / (w - w_hat)
    a = np.zeros(n + 1)
    power = np.zeros(n)
    power[0] = 1.0
    for k in range(1, n + 1):
        power = np.convolve(power, recip)[:n]
        a[k] = power[k - 1] / k
    return a


# --------------------------------------------------------------------------
# g and h = log g


@lru_cache(maxsize=None)
def h_table(n):
    """Coefficients of h^(n) = d^n/dw^n log g in terms of g and its derivatives.

    Returns a tuple of ``(coef, g0_power, exponents)`` with ``exponents[j-1]``
    the power of g^(j); the term is ``coef * prod g^(j)**e_j / g**g0_power``.
    Built from the set-partition expansion of the derivatives of log(g).
    """
    terms = []

    def parts(remaining, largest, acc):
        if remaining == 0:
            yield acc
            return
        for j in range(min(remaining, largest), 0, -1):
            yield from parts(remaining - j, j, acc + [j])

    for partition in parts(n, n, []):
        mult = [partition.count(j) for j in range(1, n + 1)]
        k = len(partition)
        count = math.factorial(n)
        for j, m in enumerate(mult, start=1):
            count //= math.factorial(m) * math.factorial(j) ** m
        coef = (-1) ** (k - 1) * math.factorial(k - 1) * count
        terms.append((coef, k, tuple(mult)))
    return tuple(terms)


def _eval_h(n, g):
    total = 0.0
    for coef, power, exps in h_table(n):
        term = float(coef)
        for j, e in enumerate(exps, start=1):
            if e:
                term *= g[j] ** e
        total += term / g[0] ** power
    return total


@dataclass(frozen=True)
class GhDerivs:
    """g[n] = g^(n)(w_hat) for n = 0..N and h[n] = h^(n)(w_hat) for n = 1..N (h[0] = log g)."""

    g: tuple
    h: tuple
    condition: float = field(default=1.0)

    @property
    def order(self):
        return len(self.g) - 1


def _g_backward(w, a, order):
    """g^(n)(w)/n! = sum_j a[n+1+j] (-w)^j, the stable direction for small |w|.

    Relies on theta(0) = 0 exactly instead of dividing by w repeatedly.
    Returns None if the sums have not converged to round-off.
    """
    top = len(a) - 1
    if top < order + 4:
        return None
    out = []
    for n in range(order + 1):
        terms = a[n + 1 :] * (-w) ** np.arange(top - n)
        biggest = float(np.max(np.abs(terms)))
        tail = float(np.sum(np.abs(terms[-3:])))
        if not math.isfinite(biggest) or tail > 1e-15 * biggest:
            return None
        out.append(math.fsum(terms) * math.factorial(n))
    return out


def gh_derivs(s: SaddleInfo, t: ThetaDerivs, taylor=None):
    """g- and h-derivative chains at w_hat.

    ``taylor`` optionally holds many Taylor coefficients of theta(w) at w_hat
    (see :func:`theta_taylor`); when the backward sums converge they replace
    the forward recurrence, which loses about ``n log10(1/|w_hat|)`` digits.
    """
    w = s.w_hat
    if abs(w) < DEGENERATE_W:
        raise DegenerateThresholdError(f"|w_hat| = {abs(w):.3e} is degenerate")
    g = None
    if taylor is not None:
        g = _g_backward(w, np.asarray(taylor, dtype=float), t.order)
    if g is None:
        g = [s.theta_hat / w]
        # w g' = theta' - g, evaluated through u_hat - w_hat to avoid cancellation
        g.append(-s.u_minus_w / (math.sqrt(s.k2) * w * w))
        for n in range(2, t.order + 1):
            g.append((t.d[n] - n * g[n - 1]) / w)
    h = [math.log(g[0])] + [_eval_h(n, g) for n in range(1, t.order + 1)]
    d1 = t.d[1]
    diff = abs(d1 - g[0])
    condition = abs(d1) / diff if diff > 0 else math.inf
    return GhDerivs(g=tuple(g), h=tuple(h), condition=condition)


# --------------------------------------------------------------------------
# Correction terms


def _require_nondegenerate(s):
    if abs(s.w_hat) < DEGENERATE_W:
        raise DegenerateThresholdError(f"|w_hat| = {abs(s.w_hat):.3e} is degenerate")


def psi0_closed(s: SaddleInfo):
    """phi(w) (1/u - 1/w), the classical Lugannani-Rice correction."""
    _require_nondegenerate(s)
    return -normal_pdf(s.w_hat) * s.u_minus_w / (s.u_hat * s.w_hat)


def psi1_closed(s: SaddleInfo):
    _require_nondegenerate(s)
    u, w = s.u_hat, s.w_hat
    l3, l4 = s.lambda3, s.lambda4
    # 1/u^3 - 1/w^3 written through u - w
    inv_cubes = -s.u_minus_w * (u * u + u * w + w * w) / (u * w) ** 3
    return normal_pdf(w) * (
        (l4 / 8.0 - 5.0 * l3 * l3 / 24.0) / u
        - l3 / (2.0 * s.theta_hat**2 * s.k2)
        - inv_cubes
    )


def psi_m(s: SaddleInfo, gh: GhDerivs, m):
    """m-th correction term phi(w) (-1)^m / (2m)!! * h^(2m+1)(w)."""
    if not 0 <= m <= MAX_TERM:
        raise UnsupportedOrderError(f"correction order {m} not implemented (max {MAX_TERM})")
    if gh.order < 2 * m + 1:
        raise CapabilityError(f"h^({2 * m + 1}) needed, chain only has order {gh.order}")
    return normal_pdf(s.w_hat) * (-1) ** m / double_factorial(2 * m) * gh.h[2 * m + 1]


@dataclass(frozen=True)
class LrResult:
    base: float
    psi: tuple
    total: float
    order: int
    clamped: float
    saddle: SaddleInfo

    @property
    def partial_sums(self):
        """Normal, 0th, 1st, ... formula values."""
        out = [self.base]
        for p in self.psi:
            out.append(out[-1] + p)
        return out


TAYLOR_TERMS = 32


def _stable_taylor(model, s):
    try:
        c = model.taylor_coefficients(s.theta_hat, TAYLOR_TERMS + 1)
    except CapabilityError:
        return None
    a = theta_taylor(c, TAYLOR_TERMS)
    a[0] = s.theta_hat
    return a


def tail_lr(model, x, M=1, saddle: SaddleInfo | None = None):
    """M-th Lugannani-Rice approximation of P(X > x)."""
    if not 0 <= M <= MAX_TERM:
        raise UnsupportedOrderError(f"order M={M} outside 0..{MAX_TERM}")
    s = saddle if saddle is not None else solve_saddlepoint(model, x)
    t = theta_hat_derivs(model, s, 2 * M + 1)
    gh = gh_derivs(s, t, _stable_taylor(model, s))
    psi = tuple(float(psi_m(s, gh, m)) for m in range(M + 1))
    base = normal_sf(s.w_hat)
    total = base
    for p in psi:
        total += p
    return LrResult(
        base=base,
        psi=psi,
        total=total,
        order=M,
        clamped=float(np.clip(total, 0.0, 1.0)),
        saddle=s,
    )
