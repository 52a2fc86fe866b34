"""Cumulant generating functions and their derivatives.

Every model exposes the same small surface:

* ``cgf(theta)`` for real ``theta`` inside the effective domain,
* ``cgf_complex(z)`` (vectorised) for complex ``z`` with real part in the domain,
* ``derivatives(theta, max_order)`` returning ``[K, K', ..., K^(max_order)]``,
* ``taylor_gap(theta)`` = ``K - theta K' + theta^2 K''/2``, which the expansion
  terms need without cancellation.

Models are immutable once built.
"""

from __future__ import annotations

import json
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AccuracyWarning,
    CapabilityError,
    ConvergenceError,
    DomainError,
    ParameterError,
)

__all__ = [
    "DomainInterval",
    "CgfModel",
    "GaussianCgf",
    "GammaSumCgf",
    "HestonParams",
    "HestonCgf",
    "TiltedCgf",
    "gaussian_cgf",
    "gamma_sum_cgf",
    "heston_cgf",
    "tilt_cgf",
    "heston_domain_bounds",
    "heston_alpha_bounds",
    "heston_theta_star",
    "cauchy_derivatives",
    "cauchy_taylor",
    "cgf_deriv_cauchy",
    "min_K2_scan",
    "model_from_config",
    "load_model_config",
]

MAX_ORDER = 8


@dataclass(frozen=True)
class DomainInterval:
    """Open interval of real arguments on which K is finite."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower < 0.0 < self.upper):
            raise ParameterError(
                f"domain ({self.lower}, {self.upper}) must contain 0 in its interior"
            )

    def contains(self, theta):
        return self.lower < theta < self.upper

    def distance(self, theta):
        """Distance from ``theta`` to the nearest finite endpoint."""
        return min(theta - self.lower, self.upper - theta)

    def clipped(self, frac=0.999, cap=100.0):
        """``frac`` of the interval, with infinite ends replaced by +-cap."""
        lo = -cap if math.isinf(self.lower) else frac * self.lower
        hi = cap if math.isinf(self.upper) else frac * self.upper
        return lo, hi

    def shifted(self, by):
        return DomainInterval(self.lower - by, self.upper - by)


def _clog1p(z):
    # numpy's complex log1p drops the real part for tiny arguments
    x, y = z.real, z.imag
    return 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)


class CgfModel(ABC):
    """Abstract cumulant generating function."""

    label = "cgf"
    max_order = MAX_ORDER

    @property
    @abstractmethod
    def domain(self) -> DomainInterval: ...

    @property
    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def cgf(self, theta: float) -> float: ...

    @abstractmethod
    def cgf_complex(self, z): ...

    @abstractmethod
    def derivatives(self, theta: float, max_order: int = MAX_ORDER) -> np.ndarray: ...

    def derivative(self, theta, r):
        return float(self.derivatives(theta, r)[r])

    def taylor_coefficients(self, theta, n):
        """``[K, K', K''/2!, ..., K^(n)/n!]`` at real ``theta``.

        Models that can go beyond :attr:`max_order` override this; the
        expansion terms use it for a numerically stable route at small w_hat.
        """
        k = self.derivatives(theta, n)
        return k / np.array([math.factorial(r) for r in range(n + 1)], dtype=float)

    def taylor_gap(self, theta):
        k = self.derivatives(theta, 2)
        return float(k[0] - theta * k[1] + 0.5 * theta * theta * k[2])

    def _check_real(self, theta):
        if not np.isfinite(theta) or not self.domain.contains(theta):
            raise DomainError(
                f"{self.label}: theta={theta!r} outside domain "
                f"({self.domain.lower}, {self.domain.upper})"
            )

    def _check_complex(self, z):
        re = np.real(z)
        if np.any(re <= self.domain.lower) or np.any(re >= self.domain.upper):
            raise DomainError(f"{self.label}: complex argument leaves the domain strip")

    def _check_order(self, max_order):
        if not 0 <= max_order <= self.max_order:
            raise CapabilityError(
                f"{self.label}: derivative order {max_order} not available "
                f"(max {self.max_order})"
            )

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


# --------------------------------------------------------------------------
# Gaussian


class GaussianCgf(CgfModel):
    def __init__(self, m, sigma):
        if not sigma > 0:
            raise ParameterError(f"sigma must be positive, got {sigma!r}")
        self.m = float(m)
        self.sigma = float(sigma)
        self.label = f"gaussian(m={self.m:g}, sigma={self.sigma:g})"
        self._domain = DomainInterval(-math.inf, math.inf)

    @property
    def domain(self):
        return self._domain

    @property
    def mean(self):
        return self.m

    def cgf(self, theta):
        self._check_real(theta)
        return self.m * theta + 0.5 * self.sigma**2 * theta * theta

    def cgf_complex(self, z):
        z = np.asarray(z, dtype=complex)
        return self.m * z + 0.5 * self.sigma**2 * z * z

    def derivatives(self, theta, max_order=MAX_ORDER):
        self._check_order(max_order)
        self._check_real(theta)
        s2 = self.sigma**2
        out = np.zeros(max_order + 1)
        out[0] = self.m * theta + 0.5 * s2 * theta * theta
        if max_order >= 1:
            out[1] = self.m + s2 * theta
        if max_order >= 2:
            out[2] = s2
        return out

    def taylor_coefficients(self, theta, n):
        self._check_real(theta)
        out = np.zeros(n + 1)
        out[: min(n, 2) + 1] = self.derivatives(theta, min(n, 2))
        if n >= 2:
            out[2] *= 0.5
        return out

    def taylor_gap(self, theta):
        return 0.0


def gaussian_cgf(m, sigma):
    """Normal law with mean ``m`` and standard deviation ``sigma``."""
    return GaussianCgf(m, sigma)


# --------------------------------------------------------------------------
# Gamma sums


def _log1p_minus_u_plus_half_u2(u):
    """log(1+u) - u + u^2/2 without cancellation for small |u|."""
    if abs(u) < 0.1:
        total, term, k = 0.0, u * u, 3
        while True:
            term *= u
            add = term / k * (1 if k % 2 else -1)
            total += add
            if abs(add) <= 1e-18 * abs(total) or k > 60:
                return total
            k += 1
    return math.log1p(u) - u + 0.5 * u * u


class GammaSumCgf(CgfModel):
    """Gamma(alpha, rate) law, optionally centred to mean zero.

    With ``alpha = 1/eps**2`` and ``rate = 1/eps`` this is the law of a
    standardised sum of ``1/eps**2`` unit exponentials, a family whose
    cumulants of order r scale like ``eps**(r-2)``.
    """

    def __init__(self, alpha, rate=1.0, center=False):
        if not alpha > 0 or not rate > 0:
            raise ParameterError(f"alpha and rate must be positive, got {alpha!r}, {rate!r}")
        self.alpha = float(alpha)
        self.rate = float(rate)
        self.center = bool(center)
        self.label = f"gamma_sum(alpha={self.alpha:g}, rate={self.rate:g}, center={self.center})"
        self._domain = DomainInterval(-math.inf, self.rate)

    @property
    def domain(self):
        return self._domain

    @property
    def mean(self):
        return 0.0 if self.center else self.alpha / self.rate

    def _shift(self):
        return self.alpha / self.rate if self.center else 0.0

    def cgf(self, theta):
        self._check_real(theta)
        return -self.alpha * math.log1p(-theta / self.rate) - self._shift() * theta

    def cgf_complex(self, z):
        z = np.asarray(z, dtype=complex)
        self._check_complex(z)
        return -self.alpha * _clog1p(-z / self.rate) - self._shift() * z

    def derivatives(self, theta, max_order=MAX_ORDER):
        self._check_order(max_order)
        self._check_real(theta)
        out = np.empty(max_order + 1)
        out[0] = self.cgf(theta)
        gap = self.rate - theta
        for r in range(1, max_order + 1):
            out[r] = self.alpha * math.factorial(r - 1) / gap**r
        if max_order >= 1:
            out[1] -= self._shift()
        return out

    def taylor_coefficients(self, theta, n):
        self._check_real(theta)
        out = np.empty(n + 1)
        out[0] = self.cgf(theta)
        gap = self.rate - theta
        for r in range(1, n + 1):
            out[r] = self.alpha / (r * gap**r)
        if n >= 1:
            out[1] -= self._shift()
        return out

    def taylor_gap(self, theta):
        self._check_real(theta)
        u = theta / (self.rate - theta)
        return self.alpha * _log1p_minus_u_plus_half_u2(u)


def gamma_sum_cgf(alpha, rate=1.0, center=False):
    return GammaSumCgf(alpha, rate, center)


# --------------------------------------------------------------------------
# Cauchy-integral derivative engine


def cauchy_taylor(f, center, radius, n_terms, n_nodes=64, rtol=1e-10, n_max=2048):
    """Taylor coefficients ``f^(r)(center)/r!`` for r = 0..n_terms.

    Trapezoidal rule on the circle of the given radius (computed with one
    FFT), doubling the node count until two successive estimates agree to
    ``rtol`` or to the round-off floor of the circle values.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    scale = radius ** np.arange(n_terms + 1)
    prev = None
    n = max(int(n_nodes), 2 * (n_terms + 1))
    while True:
        t = 2.0 * np.pi * np.arange(n) / n
        vals = np.asarray(f(center + radius * np.exp(1j * t)), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"non-finite value on Cauchy circle about {center} (radius {radius})")
        est = np.fft.fft(vals)[: n_terms + 1] / n / scale
        floor = 64.0 * np.finfo(float).eps * np.max(np.abs(vals)) / scale
        if prev is not None:
            err = np.abs(est - prev)
            if np.all(err <= rtol * np.abs(est) + floor):
                break
        if n >= n_max:
            raise ConvergenceError(
                "Cauchy derivative estimates did not settle",
                {"center": center, "radius": radius, "nodes": n},
            )
        prev = est
        n *= 2
    imag = np.abs(est.imag)
    if np.any(imag > 1e-10 * np.maximum(1.0, np.abs(est.real)) + floor):
        warnings.warn(
            f"Cauchy derivatives at {center}: imaginary residue {imag.max():.3e}",
            AccuracyWarning,
            stacklevel=3,
        )
    return est.real


def cauchy_derivatives(f, center, radius, max_order, n_nodes=64, rtol=1e-10, n_max=2048):
    """All Taylor derivatives of an analytic ``f`` at ``center`` up to ``max_order``.

    Returns a real array ``[f, f', ..., f^(max_order)]``.
    """
    fact = np.array([math.factorial(r) for r in range(max_order + 1)], dtype=float)
    return cauchy_taylor(f, center, radius, max_order, n_nodes, rtol, n_max) * fact


def cgf_deriv_cauchy(model, theta, r, radius, n_nodes=64):
    """r-th derivative of ``model`` at real ``theta`` by the Cauchy integral formula."""
    if not 1 <= r <= MAX_ORDER:
        raise CapabilityError(f"order {r} outside 1..{MAX_ORDER}")
    dom = model.domain
    if not (dom.lower < theta - radius and theta + radius < dom.upper):
        raise DomainError(f"disk of radius {radius} about {theta} leaves the domain")
    return float(cauchy_derivatives(model.cgf_complex, theta, radius, r, n_nodes)[r])


# --------------------------------------------------------------------------
# Heston


@dataclass(frozen=True)
class HestonParams:
    kappa: float
    b: float
    rho: float
    v0: float
    x0: float
    T: float
    eps: float

    def __post_init__(self):
        if not (self.kappa > 0 and self.b > 0 and self.v0 > 0 and self.T > 0):
            raise ParameterError("kappa, b, v0 and T must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.eps >= 0:
            raise ParameterError(f"eps must be non-negative, got {self.eps}")
        if 2.0 * self.kappa * self.b < self.eps**2:
            raise ParameterError("2*kappa*b >= eps^2 is required")

    @property
    def sigma2(self):
        """Variance of the eps = 0 Gaussian limit."""
        k, T = self.kappa, self.T
        return self.b * T + (self.v0 - self.b) * (-math.expm1(-k * T)) / k

    def replace(self, **kw):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return HestonParams(**d)


def _p_eps(p, theta):
    beta = p.kappa - p.eps * p.rho * theta
    return beta * beta + p.eps**2 * (theta - theta * theta)


def heston_domain_bounds(p):
    """Roots ``(u_minus, u_plus)`` of p_eps, between which the cosh/sinh form applies."""
    if p.eps == 0:
        return -math.inf, math.inf
    if abs(p.rho) >= 1.0:
        raise ParameterError("|rho| = 1 is not supported")
    if p.eps * p.rho >= p.kappa:
        raise ParameterError("eps*rho < kappa is required")
    e, k, r = p.eps, p.kappa, p.rho
    root = math.sqrt(4 * k * k + e * e - 4 * k * r * e)
    den = 2 * e * (1 - r * r)
    return (e - 2 * k * r - root) / den, (e - 2 * k * r + root) / den


def heston_alpha_bounds(p):
    """Solutions ``alpha_-1 < 0 < alpha_+1`` of p_eps(theta) = -4 pi^2 / T^2."""
    if p.eps == 0:
        return -math.inf, math.inf
    e, k, r = p.eps, p.kappa, p.rho
    a = e * e * (1 - r * r)
    b = e * e - 2 * k * e * r
    c = k * k + 4 * math.pi**2 / p.T**2
    root = math.sqrt(b * b + 4 * a * c)
    # stable pair of roots of a t^2 - b t - c = 0
    t1 = (b + math.copysign(root, b)) / (2 * a)
    t2 = -c / (a * t1)
    return min(t1, t2), max(t1, t2)


def _sinc_half(s, T):
    """sin(s T/2)/s, continuous at s = 0."""
    y = 0.5 * s * T
    if abs(y) < 1e-4:
        return 0.5 * T * (1 - y * y / 6)
    return math.sin(y) / s


def _sinhc_half(d, T):
    y = 0.5 * d * T
    if abs(y) < 1e-4:
        return 0.5 * T * (1 + y * y / 6)
    return math.sinh(y) / d


def _q_tilde(p, theta):
    s = math.sqrt(max(-_p_eps(p, theta), 0.0))
    beta = p.kappa - p.eps * p.rho * theta
    return math.cos(0.5 * s * p.T) + beta * _sinc_half(s, p.T)


def heston_theta_star(p, scan=400):
    """Moment-explosion bounds ``(theta_minus, theta_plus)`` of the Heston CGF.

    Each bound is the first zero of the cos/sin denominator q~ beyond
    u_{eps,+-}, searched up to alpha_{eps,+-1} where q~ = -1.
    """
    if p.eps == 0:
        return -math.inf, math.inf
    u_lo, u_hi = heston_domain_bounds(p)
    a_lo, a_hi = heston_alpha_bounds(p)
    out = []
    for u, a in ((u_hi, a_hi), (u_lo, a_lo)):
        if _q_tilde(p, u) <= 0:
            raise ConvergenceError(
                "q~ is not positive at u_eps; explosion inside the cosh/sinh region",
                {"u": u, "q_tilde": _q_tilde(p, u)},
            )
        grid = np.linspace(u, a, scan + 1)
        vals = [_q_tilde(p, t) for t in grid]
        idx = next((i for i in range(1, len(vals)) if vals[i] <= 0), None)
        if idx is None:
            raise ConvergenceError("no sign change of q~ between u_eps and alpha_eps",
                                   {"u": u, "alpha": a})
        root = brentq(lambda t: _q_tilde(p, t), grid[idx - 1], grid[idx], xtol=1e-14, rtol=1e-15)
        out.append(root)
    return out[1], out[0]


class HestonCgf(CgfModel):
    """CGF of the log-price X_T in the Heston model with vol-of-vol ``eps``."""

    def __init__(self, params: HestonParams):
        self.params = params
        p = params
        self.label = (
            f"heston(kappa={p.kappa:g}, b={p.b:g}, rho={p.rho:g}, v0={p.v0:g}, "
            f"x0={p.x0:g}, T={p.T:g}, eps={p.eps:g})"
        )
        s2 = p.sigma2
        self._mean = p.x0 - 0.5 * s2
        if p.eps == 0:
            self._gauss = GaussianCgf(self._mean, math.sqrt(s2))
            self._domain = self._gauss.domain
            self.u_bounds = (-math.inf, math.inf)
        else:
            self._gauss = None
            self.u_bounds = heston_domain_bounds(p)
            self._domain = DomainInterval(*heston_theta_star(p))

    @property
    def domain(self):
        return self._domain

    @property
    def mean(self):
        return self._mean

    # -- real evaluation ---------------------------------------------------

    def _k_real_centered(self, theta):
        """K(theta) - x0*theta for real theta in the domain."""
        p = self.params
        T, eps = p.T, p.eps
        beta = p.kappa - eps * p.rho * theta
        a = theta - theta * theta
        pp = beta * beta + eps * eps * a
        pref = 2.0 * p.kappa * p.b / (eps * eps)
        u_lo, u_hi = self.u_bounds
        if u_lo <= theta <= u_hi:
            d = math.sqrt(max(pp, 0.0))
            if d * T >= 0.1 and beta > 0:
                dd = d + beta
                e1 = math.exp(-d * T)
                e2a = eps * eps * a
                curly = (
                    -e2a * T / (2 * dd)
                    - math.log1p(-e2a / (2 * d * dd))
                    - math.log1p(e2a / (dd * dd) * e1)
                )
                return pref * curly - p.v0 * a * (-math.expm1(-d * T)) / (dd + e2a / dd * e1)
            sh = _sinhc_half(d, T)
            q = math.cosh(0.5 * d * T) + beta * sh
        else:
            s = math.sqrt(-pp)
            sh = _sinc_half(s, T)
            q = math.cos(0.5 * s * T) + beta * sh
        if q <= 0:
            raise DomainError(f"{self.label}: moment explosion at theta={theta}")
        return pref * (0.5 * beta * T - math.log(q)) - p.v0 * a * sh / q

    def cgf(self, theta):
        if self._gauss is not None:
            return self._gauss.cgf(theta)
        self._check_real(theta)
        return self.params.x0 * theta + self._k_real_centered(theta)

    def cgf_direct(self, theta):
        """Real K from the printed cosh/sinh (or cos/sin) form, no rearrangement."""
        p = self.params
        self._check_real(theta)
        beta = p.kappa - p.eps * p.rho * theta
        a = theta - theta * theta
        pp = _p_eps(p, theta)
        if pp >= 0:
            d = math.sqrt(pp)
            sh = _sinhc_half(d, p.T)
            q = math.cosh(0.5 * d * p.T) + beta * sh
        else:
            s = math.sqrt(-pp)
            sh = _sinc_half(s, p.T)
            q = math.cos(0.5 * s * p.T) + beta * sh
        pref = 2.0 * p.kappa * p.b / p.eps**2
        return p.x0 * theta + pref * (0.5 * beta * p.T - math.log(q)) - p.v0 * a * sh / q

    # -- complex evaluation ------------------------------------------------

    def _k_complex_direct(self, z):
        p = self.params
        T = p.T
        beta = p.kappa - p.eps * p.rho * z
        a = z - z * z
        d = np.sqrt(beta * beta + p.eps**2 * a)
        y = 0.5 * d * T
        small = np.abs(y) < 1e-4
        d_safe = np.where(small, 1.0, d)
        sh = np.where(small, 0.5 * T * (1 + y * y / 6), np.sinh(y) / d_safe)
        q = np.cosh(y) + beta * sh
        pref = 2.0 * p.kappa * p.b / p.eps**2
        return pref * (0.5 * beta * T - np.log(q)) - p.v0 * a * sh / q

    def _k_complex_stable(self, z):
        p = self.params
        T, eps = p.T, p.eps
        beta = p.kappa - eps * p.rho * z
        a = z - z * z
        d = np.sqrt(beta * beta + eps * eps * a)
        dd = d + beta
        e1 = np.exp(-d * T)
        e2a = eps * eps * a
        curly = -e2a * T / (2 * dd) - _clog1p(-e2a / (2 * d * dd)) - _clog1p(e2a / (dd * dd) * e1)
        pref = 2.0 * p.kappa * p.b / (eps * eps)
        return pref * curly - p.v0 * a * (1 - e1) / (dd + e2a / dd * e1)

    def cgf_complex(self, z):
        """K on the strip; the root of p_eps is taken with Re >= 0 so that the
        logarithms stay on their principal branch along vertical lines."""
        if self._gauss is not None:
            return self._gauss.cgf_complex(z)
        z = np.asarray(z, dtype=complex)
        self._check_complex(z)
        beta = self.params.kappa - self.params.eps * self.params.rho * z
        d = np.sqrt(beta * beta + self.params.eps**2 * (z - z * z))
        near = np.abs(d) * self.params.T < 0.1
        if not np.any(near):
            return self.params.x0 * z + self._k_complex_stable(z)
        out = np.empty_like(z)
        out[~near] = self._k_complex_stable(z[~near])
        out[near] = self._k_complex_direct(z[near])
        return self.params.x0 * z + out

    # -- derivatives -------------------------------------------------------

    def _disk(self, theta):
        """Evaluator and radius for Cauchy derivatives centred at real ``theta``."""
        r_dom = 0.25 * self.domain.distance(theta)
        u_lo, u_hi = self.u_bounds
        if u_lo < theta < u_hi:
            r_u = 0.5 * min(theta - u_lo, u_hi - theta)
            if r_u >= 0.5 * r_dom:
                return self._k_complex_stable, min(r_dom, r_u)
        return self._k_complex_direct, r_dom

    def _centered_taylor(self, theta, n):
        # coefficients of K - x0*theta; the linear x0 term only inflates round-off
        f, radius = self._disk(theta)
        k0 = self._k_real_centered(theta)
        out = cauchy_taylor(lambda z: f(z) - k0, theta, radius, max(n, 1))[: n + 1]
        out[0] = k0
        return out

    def derivatives(self, theta, max_order=MAX_ORDER):
        if self._gauss is not None:
            return self._gauss.derivatives(theta, max_order)
        self._check_order(max_order)
        self._check_real(theta)
        c = self._centered_taylor(theta, max_order)
        out = c * np.array([math.factorial(r) for r in range(max_order + 1)], dtype=float)
        out[0] = self.cgf(theta)
        if max_order >= 1:
            out[1] += self.params.x0
        return out

    def taylor_coefficients(self, theta, n):
        if self._gauss is not None:
            return self._gauss.taylor_coefficients(theta, n)
        self._check_real(theta)
        out = self._centered_taylor(theta, n)
        out[0] = self.cgf(theta)
        if n >= 1:
            out[1] += self.params.x0
        return out

    def taylor_gap(self, theta):
        if self._gauss is not None:
            return 0.0
        self._check_real(theta)
        # linear part of K drops out of the gap, so evaluate without x0
        k = self.derivatives(theta, 2)
        k0 = self._k_real_centered(theta)
        k1 = k[1] - self.params.x0
        return float(k0 - theta * k1 + 0.5 * theta * theta * k[2])


def heston_cgf(p: HestonParams):
    return HestonCgf(p)


# --------------------------------------------------------------------------
# Exponential tilt


class TiltedCgf(CgfModel):
    """K~(theta) = K(theta + shift) - K(shift); shift = 1 gives the share measure."""

    def __init__(self, base: CgfModel, shift=1.0):
        if not base.domain.contains(shift):
            raise DomainError(f"tilt point {shift} outside domain of {base.label}")
        self.base = base
        self.shift = float(shift)
        self._k_shift = base.cgf(self.shift)
        self._domain = base.domain.shifted(self.shift)
        self._mean = float(base.derivatives(self.shift, 1)[1])
        self.label = f"tilt({base.label}, {self.shift:g})"

    @property
    def domain(self):
        return self._domain

    @property
    def mean(self):
        return self._mean

    def cgf(self, theta):
        self._check_real(theta)
        return self.base.cgf(theta + self.shift) - self._k_shift

    def cgf_complex(self, z):
        return self.base.cgf_complex(np.asarray(z, dtype=complex) + self.shift) - self._k_shift

    def derivatives(self, theta, max_order=MAX_ORDER):
        self._check_real(theta)
        out = np.array(self.base.derivatives(theta + self.shift, max_order), dtype=float)
        out[0] -= self._k_shift
        return out

    def taylor_coefficients(self, theta, n):
        self._check_real(theta)
        out = np.array(self.base.taylor_coefficients(theta + self.shift, n), dtype=float)
        out[0] -= self._k_shift
        return out


def tilt_cgf(base: CgfModel, shift=1.0):
    """Esscher tilt of ``base`` by ``shift`` (share-measure CGF for shift = 1)."""
    return TiltedCgf(base, shift)


# --------------------------------------------------------------------------
# Diagnostics


def min_K2_scan(model, grid_n=200, bounds=None, frac=0.999):
    """Minimum of K'' over an equispaced grid inside the (clipped) domain."""
    if grid_n < 3:
        raise ParameterError("grid_n must be at least 3")
    lo, hi = bounds if bounds is not None else model.domain.clipped(frac)
    best = math.inf
    for theta in np.linspace(lo, hi, int(grid_n)):
        k2 = model.derivative(float(theta), 2)
        if not math.isfinite(k2):
            raise DomainError(f"non-finite K'' at theta={theta}")
        best = min(best, k2)
    return best


# --------------------------------------------------------------------------
# Config files

_CONFIG_FIELDS = {
    "gaussian": ("m", "sigma"),
    "gamma_sum": ("alpha", "rate", "center"),
    "heston": ("kappa", "b", "rho", "v0", "x0", "T", "eps"),
}


def model_from_config(cfg):
    """Build a model from ``{"model": name, "params": {...}}``."""
    if not isinstance(cfg, dict):
        raise ParameterError("model config must be a JSON object")
    extra = set(cfg) - {"model", "params"}
    if extra:
        raise ParameterError(f"unknown config keys: {sorted(extra)}")
    name = cfg.get("model")
    if name not in _CONFIG_FIELDS:
        raise ParameterError(f"unknown model {name!r}; expected one of {sorted(_CONFIG_FIELDS)}")
    params = cfg.get("params", {})
    allowed = _CONFIG_FIELDS[name]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ParameterError(f"unknown {name} params: {sorted(unknown)}")
    try:
        if name == "gaussian":
            return GaussianCgf(params["m"], params["sigma"])
        if name == "gamma_sum":
            return GammaSumCgf(params["alpha"], params.get("rate", 1.0), params.get("center", False))
        missing = set(allowed) - set(params)
        if missing:
            raise ParameterError(f"missing heston params: {sorted(missing)}")
        return HestonCgf(HestonParams(**{k: float(params[k]) for k in allowed}))
    except KeyError as exc:
        raise ParameterError(f"missing parameter {exc.args[0]!r} for {name}") from None


def load_model_config(path):
    with open(Path(path)) as fh:
        return model_from_config(json.load(fh))
