"""1-bit quantization of complex signals and second-order statistics of
quantized Gaussian vectors.

The sign quantizer maps each real/imaginary component to +-1/sqrt(2), so
quantized entries have unit power.  For a circularly symmetric Gaussian
input with covariance C, the quantizer output obeys two closed forms:
the cross-covariance with the input is sqrt(2/pi)*K*C with
K = diag(C)^(-1/2), and the output covariance follows the arcsine law
(2/pi)*(asin(K*Re{C}*K) + 1j*asin(K*Im{C}*K)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

# Normalized correlations may exceed 1 by round-off; anything worse is a
# genuinely invalid input.
_CORRELATION_SLACK = 1e-9
_HERMITIAN_RTOL = 1e-12


class DegenerateCovarianceError(ValueError):
    """Covariance has a non-positive diagonal entry."""


class InvalidCorrelationError(ValueError):
    """Normalized correlation magnitude exceeds 1 beyond round-off slack."""


@dataclass(frozen=True)
class BussgangStats:
    """Second-order statistics of a 1-bit quantized Gaussian vector.

    k_gain: diagonal of diag(C)^(-1/2) as a 1-D real array.
    c_q:    covariance of the quantized vector (unit diagonal, Hermitian).
    c_qs:   cross-covariance E[quantized * unquantized^H].
    """

    k_gain: np.ndarray
    c_q: np.ndarray
    c_qs: np.ndarray


def quantize_1bit(y: np.ndarray) -> np.ndarray:
    """Element-wise 1-bit quantization of a complex array.

    Each real and imaginary part maps to +-1/sqrt(2) by sign; a part that
    is exactly zero maps to +1/sqrt(2).
    """
    y = np.asarray(y)
    re = np.where(np.real(y) >= 0.0, 1.0, -1.0)
    im = np.where(np.imag(y) >= 0.0, 1.0, -1.0)
    return (re + 1j * im) / np.sqrt(2.0)


def ensure_hermitian(c: np.ndarray) -> np.ndarray:
    """Validate Hermitian symmetry within round-off and symmetrize.

    Raises InvalidCorrelationError if C deviates from C^H by more than
    1e-12 relative to its largest magnitude entry.
    """
    c = np.asarray(c, dtype=np.complex128)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {c.shape}")
    scale = np.max(np.abs(c)) if c.size else 0.0
    dev = np.max(np.abs(c - c.conj().T)) if c.size else 0.0
    if scale > 0 and dev > _HERMITIAN_RTOL * scale:
        raise InvalidCorrelationError(
            f"matrix is not Hermitian: relative asymmetry {dev / scale:.3e}"
        )
    return 0.5 * (c + c.conj().T)


def bussgang_gain(c: np.ndarray) -> np.ndarray:
    """Diagonal Bussgang gain diag(C)^(-1/2) as a 1-D real array."""
    c = ensure_hermitian(c)
    d = np.real(np.diagonal(c))
    if np.any(d <= 0.0):
        raise DegenerateCovarianceError(
            "covariance diagonal must be strictly positive"
        )
    return 1.0 / np.sqrt(d)


def _normalize(c: np.ndarray, k: np.ndarray) -> np.ndarray:
    """K C K for diagonal K given as a vector, clamping |entries| <= 1."""
    r = k[:, None] * c * k[None, :]
    worst = np.max(np.abs(r)) if r.size else 0.0
    if worst > 1.0 + _CORRELATION_SLACK:
        raise InvalidCorrelationError(
            f"normalized correlation magnitude {worst:.12f} exceeds 1"
        )
    return np.clip(r, -1.0, 1.0)


def arcsine_covariance(c: np.ndarray) -> np.ndarray:
    """Covariance of the 1-bit quantized version of a Gaussian vector.

    Applies the arcsine law to the normalized real and imaginary parts of
    C.  The result is Hermitian with an exactly unit diagonal and is
    invariant to positive rescaling of C.
    """
    c = ensure_hermitian(c)
    k = bussgang_gain(c)
    re = np.arcsin(_normalize(np.real(c), k))
    im = np.arcsin(_normalize(np.imag(c), k))
    out = (2.0 / np.pi) * (re + 1j * im)
    out = 0.5 * (out + out.conj().T)
    np.fill_diagonal(out, 1.0)
    return out


def cross_covariance(c: np.ndarray) -> np.ndarray:
    """Cross-covariance sqrt(2/pi) * K * C between quantized and input."""
    c = ensure_hermitian(c)
    k = bussgang_gain(c)
    return SQRT_2_OVER_PI * k[:, None] * c


def bussgang_stats(c: np.ndarray) -> BussgangStats:
    """Bundle gain, quantized covariance and cross-covariance for C."""
    return BussgangStats(
        k_gain=bussgang_gain(c),
        c_q=arcsine_covariance(c),
        c_qs=cross_covariance(c),
    )
