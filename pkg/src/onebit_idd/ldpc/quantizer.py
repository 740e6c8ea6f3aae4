"""Quasi-uniform LLR quantizer.

Magnitudes below growth*n_levels*delta are rounded uniformly with step
delta (saturating at n_levels*delta); beyond that the output snaps to
geometrically spaced levels growth^r * n_levels * delta, extending the
dynamic range far past the uniform region before saturating at
growth^(n_levels+1) * n_levels * delta.  The map is odd, monotone and
idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QuantizerParams:
    """Step size, geometric growth rate and level count.

    thresholds[i] = growth**(i+1) * n_levels * delta for i = 0..n_levels;
    the last entry is the saturation value.
    """

    delta: float = 0.25
    growth: float = 1.3
    n_levels: int = 6
    thresholds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.growth <= 1.0:
            raise ValueError("growth rate must exceed 1")
        if self.n_levels < 1:
            raise ValueError("need at least one level")
        base = self.n_levels * self.delta
        thr = base * np.cumprod(np.full(self.n_levels + 1, self.growth))
        thr.setflags(write=False)
        object.__setattr__(self, "thresholds", thr)

    @property
    def saturation(self) -> float:
        return float(self.thresholds[-1])


def quasi_uniform_quantize(
    llr: np.ndarray | float, params: QuantizerParams
) -> np.ndarray | float:
    """Apply the quasi-uniform quantizer elementwise.

    Uniform cells are [m*delta - delta/2, m*delta + delta/2) on the
    positive side, mirrored oddly on the negative side.
    """
    x = np.asarray(llr, dtype=np.float64)
    a = np.abs(x)
    s = np.where(x >= 0.0, 1.0, -1.0)
    thr = params.thresholds
    n = params.n_levels
    uniform = params.delta * np.minimum(
        np.floor(a / params.delta + 0.5), n
    )
    # Count of thresholds <= a: 0 means the uniform region, r in 1..n the
    # geometric cell [thr[r-1], thr[r]), n+1 the saturation region.
    r = np.searchsorted(thr, a, side="right")
    geometric = thr[np.clip(r, 1, n + 1) - 1]
    out = s * np.where(r == 0, uniform, geometric)
    if np.isscalar(llr):
        return float(out)
    return out
