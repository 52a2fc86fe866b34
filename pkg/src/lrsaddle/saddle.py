"""Saddlepoint equation K'(theta) = x and the scalars derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DegenerateThresholdError, RangeError

__all__ = ["SaddleInfo", "find_theta_hat", "solve_saddlepoint", "signed_root"]

DEGENERATE_W = 1e-6


@dataclass(frozen=True)
class SaddleInfo:
    x: float
    theta_hat: float
    w_hat: float
    u_hat: float
    k2: float
    lambda3: float
    lambda4: float
    # K(theta_hat) - theta_hat K' + theta_hat^2 K''/2, i.e. (u_hat^2 - w_hat^2)/2
    gap: float
    newton_residuals: tuple = ()

    @property
    def u_minus_w(self):
        """u_hat - w_hat computed without cancellation."""
        return 2.0 * self.gap / (self.u_hat + self.w_hat)


def signed_root(theta, radicand):
    """sgn(theta) * sqrt(radicand), with tiny negative round-off clamped to 0."""
    if radicand < 0:
        if radicand < -1e-14 * max(1.0, abs(theta)):
            raise ConvergenceError("negative radicand in w_hat", {"radicand": radicand})
        radicand = 0.0
    return math.copysign(math.sqrt(radicand), 1.0 if theta >= 0 else -1.0)


def _bracket(model, x, k1_0):
    """Expand geometrically from 0 until K' straddles x."""
    dom = model.domain
    direction = 1.0 if x > k1_0 else -1.0
    limit = dom.upper if direction > 0 else dom.lower
    inner, step, k1 = 0.0, 0.5, k1_0
    for _ in range(200):
        outer = direction * step
        if abs(outer) >= 0.5 * abs(limit):
            # halve the remaining distance to a finite endpoint
            outer = inner + 0.5 * (limit - inner)
        k1 = model.derivatives(outer, 1)[1]
        if (k1 - x) * direction >= 0:
            return (inner, outer) if direction > 0 else (outer, inner)
        if abs(limit - outer) < 1e-12 * max(1.0, abs(limit)):
            break
        inner = outer
        step *= 2.0
    raise RangeError(
        f"x={x} not reachable: K' only reaches {k1} inside the domain of {model.label}",
        k1_inf=k1 if direction < 0 else None,
        k1_sup=k1 if direction > 0 else None,
    )


def find_theta_hat(model, x, tol=1e-12, max_iter=200):
    """Root of K'(theta) = x by bracketed Newton; returns ``(theta, residuals)``."""
    x = float(x)
    k1_0 = model.derivatives(0.0, 1)[1]
    if x == k1_0:
        theta = 0.0
        residuals = (0.0,)
    else:
        lo, hi = _bracket(model, x, k1_0)
        f_lo = model.derivatives(lo, 1)[1] - x
        f_hi = model.derivatives(hi, 1)[1] - x
        theta = hi if f_hi == 0 else (lo if f_lo == 0 else 0.5 * (lo + hi))
        residuals = []
        scale = max(1.0, abs(x))
        for _ in range(max_iter):
            k = model.derivatives(theta, 2)
            f = k[1] - x
            residuals.append(float(abs(f)))
            if abs(f) <= tol * scale:
                # one more Newton step: downstream closed forms cancel heavily
                # near the mean and need theta_hat to full precision
                polished = theta - f / k[2]
                if lo <= polished <= hi:
                    f_pol = model.derivatives(polished, 1)[1] - x
                    if abs(f_pol) <= abs(f):
                        theta = polished
                        residuals.append(float(abs(f_pol)))
                break
            if f > 0:
                hi, f_hi = theta, f
            else:
                lo, f_lo = theta, f
            nxt = theta - f / k[2]
            if not lo <= nxt <= hi:
                # secant through the bracket ends, kept off the endpoints
                nxt = lo - f_lo * (hi - lo) / (f_hi - f_lo)
                width = hi - lo
                nxt = min(max(nxt, lo + 0.05 * width), hi - 0.05 * width)
            if nxt == theta or hi - lo <= 4e-16 * max(1.0, abs(theta)):
                theta = nxt
                residuals.append(float(abs(model.derivatives(theta, 1)[1] - x)))
                break
            theta = nxt
        else:
            raise ConvergenceError(
                "saddlepoint Newton iteration did not converge",
                {"x": x, "theta": theta, "residual": residuals[-1]},
            )
        residuals = tuple(residuals)
    return float(theta), residuals


def solve_saddlepoint(model, x, tol=1e-12, max_iter=200):
    """Solve K'(theta_hat) = x and assemble :class:`SaddleInfo`."""
    x = float(x)
    theta, residuals = find_theta_hat(model, x, tol, max_iter)
    k = model.derivatives(theta, 4)
    k2 = float(k[2])
    w_hat = signed_root(theta, 2.0 * (x * theta - float(k[0])))
    if abs(w_hat) < DEGENERATE_W:
        raise DegenerateThresholdError(
            f"|w_hat| = {abs(w_hat):.3e} < {DEGENERATE_W}: x={x} is too close to the mean"
        )
    sk = math.sqrt(k2)
    return SaddleInfo(
        x=x,
        theta_hat=theta,
        w_hat=w_hat,
        u_hat=theta * sk,
        k2=k2,
        lambda3=float(k[3]) / k2**1.5,
        lambda4=float(k[4]) / k2**2,
        gap=float(model.taylor_gap(theta)),
        newton_residuals=residuals,
    )
