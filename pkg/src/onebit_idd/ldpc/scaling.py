"""Adaptive LLR scaling for the decoder input.

The offline factor alpha is fitted once per operating point from
training LLR histograms: a correctly calibrated LLR channel satisfies
log(Pr(L|+1)/Pr(L|-1)) = L, so the fitted slope of that log-ratio
directly measures the miscalibration.  The online factor f rescales
later-iteration LLRs so their mean magnitude matches the stored
alpha-scaled training mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALPHA_MIN, ALPHA_MAX = 0.1, 10.0
F_MAX = 10.0
_LBAR_GUARD = 1e-6
_MIN_SAMPLES = 10_000
_MIN_BIN_COUNT = 20


class InsufficientSamplesError(ValueError):
    """Too few training samples for a stable histogram fit."""


@dataclass
class ScalingState:
    """Per-user scaling parameters.

    alpha:    offline factor applied at the first outer iteration.
    lbar_ref: stored alpha * mean|L| from training.
    f:        online factor, set once at the second outer iteration.
    """

    alpha: float = 1.0
    lbar_ref: float = float("nan")
    f: float | None = None


def offline_scaling_train(llr_samples: np.ndarray, true_bits: np.ndarray,
                          n_bins: int = 41) -> float:
    """Fit the offline factor alpha from labelled detector LLRs.

    true_bits holds the transmitted bipolar values (+1 is the
    positive-LLR class).  Conditional histograms of L given the bit give
    f(L) = log(Pr(L|+1)/Pr(L|-1)); alpha is the least-squares slope of
    f(L) ~ alpha*L over bins with at least 20 samples in each class,
    clipped to [0.1, 10].  Degenerate (fully separated) histograms
    return the upper clip.
    """
    llr = np.asarray(llr_samples, dtype=np.float64).ravel()
    bits = np.asarray(true_bits).ravel()
    if llr.size != bits.size:
        raise ValueError("LLR and bit arrays must match in length")
    if llr.size < _MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"need at least {_MIN_SAMPLES} samples, got {llr.size}"
        )
    pos = bits > 0
    limit = np.percentile(np.abs(llr), 99.9)
    if limit <= 0.0:
        return ALPHA_MAX
    edges = np.linspace(-limit, limit, n_bins + 1)
    h_pos, _ = np.histogram(llr[pos], bins=edges)
    h_neg, _ = np.histogram(llr[~pos], bins=edges)
    good = (h_pos >= _MIN_BIN_COUNT) & (h_neg >= _MIN_BIN_COUNT)
    if not np.any(good):
        return ALPHA_MAX
    centers = 0.5 * (edges[:-1] + edges[1:])[good]
    dens_pos = h_pos[good] / max(pos.sum(), 1)
    dens_neg = h_neg[good] / max((~pos).sum(), 1)
    f_of_l = np.log(dens_pos / dens_neg)
    denom = np.dot(centers, centers)
    if denom == 0.0:
        return ALPHA_MAX
    alpha = float(np.dot(centers, f_of_l) / denom)
    return float(np.clip(alpha, ALPHA_MIN, ALPHA_MAX))


def online_scaling(state: ScalingState, lbar_2nd: float) -> float:
    """Online factor f = lbar_ref / lbar_2nd with a division guard."""
    if lbar_2nd < _LBAR_GUARD:
        return F_MAX
    return float(state.lbar_ref / lbar_2nd)
