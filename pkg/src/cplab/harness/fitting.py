"""Least-squares power-law fits on log-log axes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_used: int
    n_excluded: int = 0

    def within(self, lo: float, hi: float) -> bool:
        return lo <= self.slope <= hi


def fit_slope(xs, ys) -> SlopeFit:
    """OLS of log y on log x.  Pairs with a non-positive y are excluded and counted."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError("xs and ys differ in length")
    if np.any(x <= 0):
        raise InvalidInputError("xs must be positive")
    keep = y > 0
    if keep.sum() < 3:
        raise InvalidInputError("need at least 3 positive pairs to fit a slope")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    mx, my = lx.mean(), ly.mean()
    sxx = ((lx - mx) ** 2).sum()
    if sxx == 0:
        raise InvalidInputError("xs must not all be equal")
    slope = ((lx - mx) * (ly - my)).sum() / sxx
    intercept = my - slope * mx
    ss_tot = ((ly - my) ** 2).sum()
    ss_res = ((ly - intercept - slope * lx) ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return SlopeFit(float(slope), float(intercept), float(r2), int(keep.sum()),
                    int((~keep).sum()))
