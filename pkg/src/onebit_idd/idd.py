"""Outer detection/decoding loop with extrinsic LLR exchange.

Iteration 1 detects with no prior and scales the decoder input by the
offline factor alpha.  From iteration 2 on, decoder extrinsics feed the
soft interference canceller, and the online factor f (fixed at
iteration 2 from the mean LLR magnitude) scales the decoder input.
The loop exits early once every user's syndrome is satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import QPSK
from .config import SystemConfig
from .detector import DetectorWorkspace, build_workspace, detect_frame
from .ldpc import (
    LdpcCode,
    ScalingState,
    online_scaling,
    quasi_uniform_quantize,
    spa_decode,
)


@dataclass
class IddResult:
    """Outcome of one fading block.

    decoded_info:  final hard information bits, (K, k_info).
    info_errors:   per-iteration per-user info bit errors (None without
                   ground truth), shape (iterations_run, K).
    frame_errors:  per-iteration per-user wrong-codeword flags.
    converged:     per-iteration per-user zero-syndrome flags.
    f_factors:     online scaling factors (ones until iteration 2).
    """

    decoded_info: np.ndarray
    info_errors: np.ndarray | None
    frame_errors: np.ndarray | None
    converged: np.ndarray
    iterations_run: int
    f_factors: np.ndarray


def run_idd(y_q: np.ndarray, h_hat: np.ndarray, sigma_n2: float,
            code: LdpcCode, config: SystemConfig,
            scaling: list[ScalingState] | None = None,
            true_info: np.ndarray | None = None,
            workspace: DetectorWorkspace | None = None) -> IddResult:
    """Run the iterative receiver on one fading block.

    y_q is the M x T quantized data observation with T = n / 2 QPSK
    uses per user; h_hat is the channel estimate the receiver trusts.
    """
    k_users = h_hat.shape[1]
    t_slots = y_q.shape[1]
    mc = QPSK.bits_per_symbol
    if t_slots * mc != code.n:
        raise ValueError("block length does not match one codeword per user")
    if scaling is not None and len(scaling) != k_users:
        raise ValueError("need one scaling state per user")
    ws = workspace if workspace is not None else build_workspace(
        h_hat, sigma_n2)
    qp = config.quantizer_params()

    f_k = np.ones(k_users)
    le_det = None
    info_err, frame_err, conv = [], [], []
    hard_info = np.zeros((k_users, code.k), dtype=np.uint8)
    iterations_run = 0

    for it in range(1, config.n_outer + 1):
        iterations_run = it
        lc = detect_frame(
            y_q, ws, le_det,
            detector=config.detector, mu_mode=config.mu_mode,
            llr_clip=config.llr_clip,
        ).reshape(k_users, code.n)

        if scaling is not None and it == 1 and config.offline_scaling:
            gain = np.array([s.alpha for s in scaling])
        elif it >= 2 and config.online_scaling and scaling is not None:
            if it == 2:
                for k in range(k_users):
                    f_k[k] = online_scaling(
                        scaling[k], float(np.mean(np.abs(lc[k])))
                    )
                    scaling[k].f = f_k[k]
            gain = f_k
        else:
            gain = np.ones(k_users)

        le_next = np.empty_like(lc)
        ok = np.zeros(k_users, dtype=bool)
        for k in range(k_users):
            res = spa_decode(gain[k] * lc[k], code, params=qp,
                             max_iters=config.inner_iters)
            le_next[k] = res.extrinsic
            ok[k] = res.converged
            hard_info[k] = res.hard_bits[code.message_cols]
        conv.append(ok)
        if true_info is not None:
            errs = (hard_info != true_info).sum(axis=1)
            info_err.append(errs)
            frame_err.append(errs > 0)
        if ok.all():
            break

        if qp is not None and config.quantize_extrinsic:
            le_next = quasi_uniform_quantize(le_next, qp)
        else:
            le_next = np.clip(le_next, -config.llr_clip, config.llr_clip)
        le_det = le_next.reshape(k_users, t_slots, mc)

    return IddResult(
        decoded_info=hard_info,
        info_errors=np.array(info_err) if info_err else None,
        frame_errors=np.array(frame_err) if frame_err else None,
        converged=np.array(conv),
        iterations_run=iterations_run,
        f_factors=f_k,
    )
