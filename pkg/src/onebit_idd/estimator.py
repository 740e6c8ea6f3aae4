"""Bussgang-based LMMSE channel estimation from 1-bit quantized pilots.

All K users transmit tau orthogonal pilot symbols simultaneously; the
estimator whitens the quantized observation with the arcsine-law
covariance and projects onto the scaled pilot matrix.  Because the pilot
covariance has the Kronecker form A (x) I_M, the (M*tau)-dimensional
whitening solve collapses to a tau x tau solve; the dense formulation is
kept only as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SIGMA_X2
from .detector import hermitian_solve
from .quantization import SQRT_2_OVER_PI, arcsine_covariance


@dataclass(frozen=True)
class PilotBlock:
    """Orthogonal pilot matrix X_p (K x tau) with X_p X_p^H = tau sigma_x2 I."""

    x_p: np.ndarray
    tau: int


def build_pilot_matrix(k: int, tau: int) -> PilotBlock:
    """K rows of the tau-point DFT matrix at per-symbol power sigma_x2."""
    if tau < k:
        raise ValueError(f"need tau >= K, got tau={tau}, K={k}")
    rows = np.arange(k)[:, None] * np.arange(tau)[None, :]
    x_p = np.sqrt(SIGMA_X2) * np.exp(-2j * np.pi * rows / tau)
    return PilotBlock(x_p=x_p, tau=tau)


def _pilot_core(pilots: PilotBlock, sigma_n2: float) -> np.ndarray:
    """tau x tau core A = X_p^T X_p^* + sigma_n2 I."""
    x_p = pilots.x_p
    return x_p.T @ x_p.conj() + sigma_n2 * np.eye(pilots.tau)


def blmmse_estimate(y_qp: np.ndarray, pilots: PilotBlock,
                    sigma_n2: float) -> np.ndarray:
    """Estimate the M x K channel from quantized pilot observations.

    y_qp is the M x tau quantized receive block.  Uses the Kronecker
    structure C_yp = A (x) I_M, so the whitening solve is tau x tau.
    """
    y_qp = np.asarray(y_qp, dtype=np.complex128)
    m, tau = y_qp.shape
    if tau != pilots.tau:
        raise ValueError("observation width does not match pilot length")
    a = _pilot_core(pilots, sigma_n2)
    g = arcsine_covariance(a)
    d = 1.0 / np.sqrt(np.real(np.diagonal(a)))
    # vec-identity: (G^-1 (x) I) vec(Y) = vec(Y G^-T)
    z = hermitian_solve(g, y_qp.T).T
    return SQRT_2_OVER_PI * z @ (d[:, None] * pilots.x_p.conj().T)


def blmmse_estimate_dense(y_qp: np.ndarray, pilots: PilotBlock,
                          sigma_n2: float) -> np.ndarray:
    """Direct (M*tau)-dimensional evaluation; oracle for small sizes."""
    y_qp = np.asarray(y_qp, dtype=np.complex128)
    m, tau = y_qp.shape
    x_tilde = np.kron(pilots.x_p.T, np.eye(m))          # (M tau) x (K M)
    c_yp = x_tilde @ x_tilde.conj().T + sigma_n2 * np.eye(m * tau)
    a_p = SQRT_2_OVER_PI / np.sqrt(np.real(np.diagonal(c_yp)))
    c_yqp = arcsine_covariance(c_yp)
    y_vec = y_qp.reshape(-1, order="F")
    h_vec = (a_p[:, None] * x_tilde).conj().T @ hermitian_solve(c_yqp, y_vec)
    return h_vec.reshape(m, -1, order="F")


def scaled_ls_estimate(y_qp: np.ndarray, pilots: PilotBlock,
                       sigma_n2: float) -> np.ndarray:
    """Baseline without whitening: (A_p X_tilde)^H y, reshaped to M x K."""
    y_qp = np.asarray(y_qp, dtype=np.complex128)
    a = _pilot_core(pilots, sigma_n2)
    d = 1.0 / np.sqrt(np.real(np.diagonal(a)))
    return SQRT_2_OVER_PI * y_qp @ (d[:, None] * pilots.x_p.conj().T)
