"""Quantization-aware MMSE detection with soft parallel interference
cancellation.

The receive filter for user k solves C_yQk w = c where C_yQk models the
covariance of the 1-bit quantized observation after soft cancellation
and c is the Bussgang cross-correlation sigma_x2 sqrt(2/pi) K h_k.
Per-bit LLRs follow from a Gaussian approximation of the filter output.

Two self-consistent cancellation/likelihood pairs are provided:

* "verbatim": interference is subtracted at the unquantized scale,
  y_Qk = y_Q - H x_k, and the conditional means push each noiseless
  hypothesis through the sign quantizer, mu = w^H (Q(h_k x + H x_k) -
  H x_k).  This ignores the noise inside the quantizer, which is
  accurate only when the signal dominates the noise.
* "linearized": the quantizer is replaced by its Bussgang equivalent
  y_Q ~ sqrt(2/pi) K (H x + n) + distortion, so cancellation subtracts
  sqrt(2/pi) K H x_k and the means are mu = sqrt(2/pi) w^H K h_k x with
  the matching covariance C_yQ - (2/pi) K H C_x H^H K.

A conventional MMSE filter that ignores quantization altogether serves
as the baseline.  Per fading block, everything that depends only on
(H, sigma_n2) is computed once and reused across users and outer
iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .channel import SIGMA_X2, QPSK, ModulationScheme, soft_symbols
from .quantization import SQRT_2_OVER_PI, arcsine_covariance, quantize_1bit

LLR_CLIP = 30.0
VAR_FLOOR = 1e-12
_REG_SCALE = 1e-10


class SingularCovarianceError(np.linalg.LinAlgError):
    """Covariance solve failed even after diagonal regularization."""


@dataclass(frozen=True)
class SoftSymbolBelief:
    """Per-user soft symbol means and second-moment surrogates.

    x_tilde: complex K-vector of posterior-mean symbols.
    q:       real K-vector feeding the cancelled-interference covariance
             diag(q); q equals |x_tilde|^2.
    """

    x_tilde: np.ndarray
    q: np.ndarray

    @classmethod
    def from_llrs(cls, le: np.ndarray,
                  scheme: ModulationScheme = QPSK) -> "SoftSymbolBelief":
        """Build beliefs for one channel use from (K, bits) extrinsic LLRs."""
        xt = soft_symbols(le, scheme)
        return cls(x_tilde=xt, q=np.abs(xt) ** 2)

    @classmethod
    def none(cls, k: int) -> "SoftSymbolBelief":
        return cls(x_tilde=np.zeros(k, dtype=np.complex128), q=np.zeros(k))


@dataclass(frozen=True)
class DetectorWorkspace:
    """Per-block cache of quantities depending only on H and sigma_n2."""

    h: np.ndarray
    sigma_n2: float
    c_y: np.ndarray      # unquantized covariance sigma_x2 H H^H + sigma_n2 I
    k_gain: np.ndarray   # diag(C_y)^(-1/2) as a vector
    c_yq: np.ndarray     # arcsine-law covariance of the quantized vector
    cross: np.ndarray    # M x K, column k = sigma_x2 sqrt(2/pi) K h_k


def build_workspace(h: np.ndarray, sigma_n2: float) -> DetectorWorkspace:
    h = np.asarray(h, dtype=np.complex128)
    m = h.shape[0]
    c_y = SIGMA_X2 * (h @ h.conj().T) + sigma_n2 * np.eye(m)
    k_gain = 1.0 / np.sqrt(np.real(np.diagonal(c_y)))
    c_yq = arcsine_covariance(c_y)
    cross = SIGMA_X2 * SQRT_2_OVER_PI * k_gain[:, None] * h
    return DetectorWorkspace(h, float(sigma_n2), c_y, k_gain, c_yq, cross)


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the Hermitian positive-definite system a x = b by Cholesky.

    A failed factorization is retried with a small diagonal load
    (1e-10 * mean diagonal, then 100x that) before giving up.
    """
    lam = _REG_SCALE * np.real(np.trace(a)) / a.shape[0]
    for shift in (0.0, lam, 100.0 * lam):
        try:
            cf = scipy.linalg.cho_factor(
                a + shift * np.eye(a.shape[0]) if shift else a,
                check_finite=False,
            )
            return scipy.linalg.cho_solve(cf, b, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise SingularCovarianceError(
        "covariance not positive definite after regularization"
    )


def pic_covariance(ws: DetectorWorkspace, q: np.ndarray, k: int,
                   mu_mode: str = "verbatim") -> np.ndarray:
    """Covariance of the quantized vector after cancelling user k's
    interferers with reliabilities q (own entry forced to zero)."""
    qk = np.asarray(q, dtype=np.float64).copy()
    qk[k] = 0.0
    if not np.any(qk):
        return ws.c_yq
    b = (ws.h * qk) @ ws.h.conj().T
    kb = ws.k_gain[:, None] * b
    if mu_mode == "linearized":
        return ws.c_yq - (2.0 / np.pi) * (kb * ws.k_gain[None, :])
    return ws.c_yq - SQRT_2_OVER_PI * (kb + kb.conj().T) + b


def build_filter(h: np.ndarray, sigma_n2: float, belief: SoftSymbolBelief,
                 k: int, workspace: DetectorWorkspace | None = None,
                 mu_mode: str = "verbatim"):
    """LRA-MMSE filter and cross-correlation vector for user k."""
    ws = workspace if workspace is not None else build_workspace(h, sigma_n2)
    c = ws.cross[:, k]
    w = hermitian_solve(pic_covariance(ws, belief.q, k, mu_mode), c)
    return w, c


def mmse_baseline_filter(h: np.ndarray, sigma_n2: float, k: int,
                         workspace: DetectorWorkspace | None = None
                         ) -> np.ndarray:
    """Conventional MMSE filter (sigma_x2 H H^H + sigma_n2 I)^-1 h_k sigma_x2,
    applied to the quantized signal as if it were unquantized."""
    ws = workspace if workspace is not None else build_workspace(h, sigma_n2)
    return hermitian_solve(ws.c_y, SIGMA_X2 * ws.h[:, k])


def soft_pic(y_q: np.ndarray, h: np.ndarray, belief: SoftSymbolBelief,
             k: int) -> np.ndarray:
    """Cancel the soft interference of all users except k (unquantized
    scale, y_Q - H x_k)."""
    y_q = np.asarray(y_q)
    h = np.asarray(h)
    if y_q.shape[0] != h.shape[0]:
        raise ValueError("observation and channel dimensions differ")
    xt = belief.x_tilde.copy()
    xt[k] = 0.0
    return y_q - h @ xt


def filter_output(w: np.ndarray, y: np.ndarray) -> complex:
    """Filter estimate w^H y."""
    return complex(np.vdot(w, y))


def conditional_moments(w: np.ndarray, c: np.ndarray, h: np.ndarray, k: int,
                        belief: SoftSymbolBelief, x: complex,
                        mu_mode: str = "verbatim",
                        k_gain: np.ndarray | None = None,
                        var_floor: float = VAR_FLOOR):
    """Mean and variance of the filter output given hypothesis x.

    Verbatim mode pairs with soft_pic: the noiseless hypothesis signal
    goes through the sign quantizer.  Linearized mode (needs k_gain)
    pairs with Bussgang-scaled cancellation and gives mu = w^H c / sigma_x2
    * x.  The variance Re{w^H c} - Re{w^H c}^2 is hypothesis independent
    and floored at var_floor.
    """
    rho = float(np.real(np.vdot(w, c)))
    eta2 = max(rho - rho * rho, var_floor)
    if mu_mode == "linearized":
        return (rho / SIGMA_X2) * x, eta2
    if mu_mode != "verbatim":
        raise ValueError(f"unknown mu_mode {mu_mode!r}")
    xt = belief.x_tilde.copy()
    xt[k] = 0.0
    interference = h @ xt
    mu = np.vdot(w, quantize_1bit(h[:, k] * x + interference) - interference)
    return complex(mu), eta2


def _log_sigmoid(v: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -v)


def detector_llr(x_hat: complex, mus: np.ndarray, eta2, le_prior: np.ndarray,
                 scheme: ModulationScheme = QPSK,
                 llr_clip: float = LLR_CLIP) -> np.ndarray:
    """Extrinsic per-bit LLRs from the Gaussian output approximation.

    mus holds one conditional mean per constellation point (ordered as
    scheme.points); eta2 may be scalar or per hypothesis.  The prior
    from le_prior enters the hypothesis weights and is subtracted again
    from the posterior ratio.  Output clipped to +-llr_clip.
    """
    mus = np.asarray(mus, dtype=np.complex128)
    eta2 = np.broadcast_to(np.asarray(eta2, dtype=np.float64), mus.shape)
    le_prior = np.asarray(le_prior, dtype=np.float64)
    # log P(xhat | x) + log Pr(x), up to a common constant
    metric = -np.abs(x_hat - mus) ** 2 / eta2 - np.log(eta2)
    metric = metric + _log_sigmoid(
        scheme.labels * le_prior[None, :]
    ).sum(axis=1)
    out = np.empty(scheme.bits_per_symbol)
    for l in range(scheme.bits_per_symbol):
        plus = scheme.labels[:, l] > 0
        num = scipy.special.logsumexp(metric[plus])
        den = scipy.special.logsumexp(metric[~plus])
        out[l] = num - den - le_prior[l]
    return np.clip(out, -llr_clip, llr_clip)


def detect_frame(y_q: np.ndarray, ws: DetectorWorkspace,
                 le_bits: np.ndarray | None = None, *,
                 detector: str = "lra-mmse", mu_mode: str = "linearized",
                 llr_clip: float = LLR_CLIP, var_floor: float = VAR_FLOOR,
                 scheme: ModulationScheme = QPSK) -> np.ndarray:
    """Detect one fading block of T channel uses for all K users.

    y_q:     quantized observations, M x T.
    le_bits: decoder extrinsic LLRs (K, T, bits) or None for no prior.
    Returns detector extrinsic LLRs of the same shape.

    Soft cancellation and the hypothesis means use the per-slot
    beliefs; the receive filter of each user uses the block-averaged
    interferer reliabilities, so it is built once per call.
    """
    y_q = np.asarray(y_q)
    m, t = y_q.shape
    k_users = ws.h.shape[1]
    mc = scheme.bits_per_symbol
    if le_bits is None:
        le_bits = np.zeros((k_users, t, mc))
    x_tilde = soft_symbols(le_bits, scheme)          # (K, T)
    q_bar = np.mean(np.abs(x_tilde) ** 2, axis=1)    # (K,)
    no_prior = not np.any(x_tilde)

    if detector == "mmse-baseline":
        w_all = hermitian_solve(ws.c_y, SIGMA_X2 * ws.h)  # (M, K)
        c_all = SIGMA_X2 * ws.h
        mu_mode = "linearized"
        pic_h = ws.h                     # cancellation channel
        gain_h = ws.h                    # channel behind the x_hat gain
    elif detector == "lra-mmse":
        c_all = ws.cross
        gain_h = SQRT_2_OVER_PI * ws.k_gain[:, None] * ws.h
        if mu_mode == "linearized":
            pic_h = gain_h
        elif mu_mode == "verbatim":
            pic_h = ws.h
        else:
            raise ValueError(f"unknown mu_mode {mu_mode!r}")
        if no_prior:
            w_all = hermitian_solve(ws.c_yq, c_all)
        elif mu_mode == "linearized":
            w_all = _linearized_filters(ws, q_bar)
        else:
            w_all = np.empty_like(c_all)
            for k in range(k_users):
                w_all[:, k] = hermitian_solve(
                    pic_covariance(ws, q_bar, k, mu_mode), c_all[:, k]
                )
    else:
        raise ValueError(f"unknown detector {detector!r}")

    rho = np.real(np.sum(w_all.conj() * c_all, axis=0))  # (K,)
    eta2 = np.maximum(rho - rho * rho, var_floor)
    # Soft PIC shared across users: y - H_pic x_tilde, plus own term back.
    y_res = y_q - pic_h @ x_tilde
    x_hat = w_all.conj().T @ y_res \
        + np.sum(w_all.conj() * pic_h, axis=0)[:, None] * x_tilde  # (K, T)

    if mu_mode == "linearized":
        # With means g*x, real g and a common variance, the per-bit QPSK
        # posterior ratio collapses: the opposite-bit logsumexp terms are
        # shared by numerator and denominator and the prior cancels
        # exactly, leaving a linear function of the matched output.
        g = np.real(np.sum(w_all.conj() * gain_h, axis=0)) / SIGMA_X2
        scale = (2.0 * np.sqrt(2.0) * g / eta2)[:, None]
        lc = np.stack(
            [scale * np.real(x_hat), scale * np.imag(x_hat)], axis=-1
        )
        return np.clip(lc, -llr_clip, llr_clip)

    logsig_pos = _log_sigmoid(le_bits)               # (K, T, mc)
    logsig_neg = _log_sigmoid(-le_bits)
    lc = np.empty((k_users, t, mc))
    points = scheme.points
    labels = scheme.labels
    for k in range(k_users):
        h_k = ws.h[:, k]
        w_k = w_all[:, k]
        if no_prior:
            mus_pts = np.array(
                [np.vdot(w_k, quantize_1bit(h_k * x)) for x in points]
            )
            mus = mus_pts[:, None] * np.ones(t)
        else:
            s_k = (y_q - y_res
                   - np.outer(pic_h[:, k], x_tilde[k]))  # est. H x_k
            hyp = h_k[None, :, None] * points[:, None, None] + s_k[None]
            mus = np.einsum(
                "m,pmt->pt", w_k.conj(), quantize_1bit(hyp) - s_k[None]
            )
        metric = -np.abs(x_hat[k][None, :] - mus) ** 2 / eta2[k]
        prior = np.zeros((len(points), t))
        for l in range(mc):
            plus = labels[:, l] > 0
            prior[plus] += logsig_pos[k, :, l]
            prior[~plus] += logsig_neg[k, :, l]
        metric = metric + prior
        for l in range(mc):
            plus = labels[:, l] > 0
            num = _logsumexp_rows(metric[plus])
            den = _logsumexp_rows(metric[~plus])
            lc[k, :, l] = num - den - le_bits[k, :, l]
    return np.clip(lc, -llr_clip, llr_clip)


def _linearized_filters(ws: DetectorWorkspace, q_bar: np.ndarray
                        ) -> np.ndarray:
    """Per-user PIC filters for the linearized model, one batched solve.

    The per-user covariance differs from the all-users-cancelled one by
    a rank-one restore of the user's own column, so the K systems are
    assembled by broadcasting and solved together.
    """
    u = ws.k_gain[:, None] * ws.h                    # K h_k columns
    b_all = (u * q_bar) @ u.conj().T                 # sum_j q_j u_j u_j^H
    base = ws.c_yq - (2.0 / np.pi) * b_all
    restore = np.einsum("k,mk,nk->kmn", (2.0 / np.pi) * q_bar, u, u.conj())
    rhs = ws.cross.T[:, :, None]                     # (K, M, 1)
    w = np.linalg.solve(base[None] + restore, rhs)
    return w[:, :, 0].T


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    """logsumexp over axis 0 for finite metrics."""
    top = np.max(a, axis=0)
    return top + np.log(np.exp(a - top).sum(axis=0))
