"""Daniels-type density expansion built from the same theta(w) derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnsupportedOrderError
from .lr_terms import MAX_TERM, double_factorial, normal_pdf, theta_hat_derivs
from .saddle import SaddleInfo, solve_saddlepoint

__all__ = ["DanielsResult", "density_daniels", "daniels_terms"]


@dataclass(frozen=True)
class DanielsResult:
    theta_terms: tuple
    total: float
    order: int
    saddle: SaddleInfo

    @property
    def partial_sums(self):
        out, acc = [], 0.0
        for t in self.theta_terms:
            acc += t
            out.append(acc)
        return out


def daniels_terms(s: SaddleInfo, d):
    """(-1)^m phi(w_hat) theta^(2m+1)(w_hat) / (2m)!! for each available odd order.

    The alternating sign comes from integrating s^(2m) against exp(s^2/2) along
    the imaginary axis; without it the first correction has the wrong sign.
    """
    phi = normal_pdf(s.w_hat)
    return tuple(
        (-1) ** m * phi * d[2 * m + 1] / double_factorial(2 * m)
        for m in range((len(d) - 2) // 2 + 1)
    )


def density_daniels(model, x, M=1, saddle: SaddleInfo | None = None):
    """Density approximation sum_{m<=M} (-1)^m phi(w) theta^(2m+1)(w) / (2m)!!.

    ``M=0`` is the classical saddlepoint density phi(w_hat)/sqrt(K''(theta_hat)).
    """
    if not 0 <= M <= MAX_TERM:
        raise UnsupportedOrderError(f"order M={M} outside 0..{MAX_TERM}")
    s = saddle if saddle is not None else solve_saddlepoint(model, x)
    t = theta_hat_derivs(model, s, 2 * M + 1)
    terms = tuple(float(v) for v in daniels_terms(s, t.d))
    return DanielsResult(theta_terms=terms, total=math.fsum(terms), order=M, saddle=s)
