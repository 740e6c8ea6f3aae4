"""Box-plus sum-product decoding with quasi-uniform message quantization.

LLR convention: positive values favour binary 0 (bipolar +1), so the
pairwise box-plus operator log((1+e^(x+y))/(e^x+e^y)) is the exact
check-node combiner.  The flooding inner loop is JIT-compiled; one full
decode of the length-512 code costs a few hundred microseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numba
import numpy as np

from .code import LdpcCode
from .quantizer import QuantizerParams

_BIG = 1e300  # stand-in for saturated (infinite) LLRs
# log1p(exp(-t)) < 1e-16 beyond this, below double resolution of the sum
_EXP_CUTOFF = 37.0

_MODE_NONE, _MODE_QUANTIZE, _MODE_CLIP = 0, 1, 2


def box_plus(x, y):
    """Pairwise box-plus via the sign-min decomposition.

    Exact within round-off: equals log((1+e^(x+y))/(e^x+e^y)) and
    2*atanh(tanh(x/2)*tanh(y/2)).  Saturated (infinite) inputs are
    treated as +-1e300.
    """
    scalar = np.isscalar(x) and np.isscalar(y)
    x = np.clip(np.asarray(x, dtype=np.float64), -_BIG, _BIG)
    y = np.clip(np.asarray(y, dtype=np.float64), -_BIG, _BIG)
    s = np.where((x < 0) != (y < 0), -1.0, 1.0)
    mn = np.minimum(np.abs(x), np.abs(y))
    corr = np.log1p(np.exp(-np.abs(x + y))) - np.log1p(np.exp(-np.abs(x - y)))
    out = s * mn + corr
    return float(out) if scalar else out


def cn_update(messages) -> float:
    """Check-node message: left fold of box-plus over the inputs."""
    messages = np.atleast_1d(np.asarray(messages, dtype=np.float64))
    if messages.size == 0:
        raise ValueError("check-node update needs at least one message")
    return float(reduce(box_plus, messages))


def vn_update(l_i: float, messages,
              params: QuantizerParams | None = None) -> float:
    """Variable-node message: channel LLR plus incoming check messages,
    quasi-uniformly quantized when params are given."""
    total = float(l_i) + float(np.sum(np.asarray(messages, dtype=np.float64)))
    if params is not None:
        from .quantizer import quasi_uniform_quantize

        total = quasi_uniform_quantize(total, params)
    return total


@dataclass(frozen=True)
class DecodeResult:
    extrinsic: np.ndarray
    posterior: np.ndarray
    hard_bits: np.ndarray
    converged: bool
    iterations: int


def _level_tanh_table(params: QuantizerParams) -> np.ndarray:
    """tanh(level/2) for every non-negative quantizer output level:
    uniform levels m*delta (m = 0..N) then geometric thresholds."""
    levels = np.concatenate([
        params.delta * np.arange(params.n_levels + 1),
        params.thresholds,
    ])
    return np.tanh(0.5 * levels)


@numba.njit(inline="always", cache=True)
def _bp(x, y):
    s = 1.0
    if x < 0.0:
        s = -s
    if y < 0.0:
        s = -s
    ax = -x if x < 0.0 else x
    ay = -y if y < 0.0 else y
    mn = ax if ax < ay else ay
    t1 = x + y
    if t1 < 0.0:
        t1 = -t1
    t2 = x - y
    if t2 < 0.0:
        t2 = -t2
    c = 0.0
    if t1 < _EXP_CUTOFF:
        c += math.log1p(math.exp(-t1))
    if t2 < _EXP_CUTOFF:
        c -= math.log1p(math.exp(-t2))
    return s * mn + c


@numba.njit(inline="always", cache=True)
def _qquant(x, delta, n_levels, thr):
    a = -x if x < 0.0 else x
    s = -1.0 if x < 0.0 else 1.0
    if a < thr[0]:
        mm = math.floor(a / delta + 0.5)
        if mm > n_levels:
            mm = float(n_levels)
        return s * (delta * mm)
    for r in range(1, n_levels + 1):
        if a < thr[r]:
            return s * thr[r - 1]
    return s * thr[n_levels]


@numba.njit(inline="always", cache=True)
def _qquant_tanh(x, delta, n_levels, thr, tanh_tab):
    """Quantize and return (value, tanh(value/2)) via the level table."""
    a = -x if x < 0.0 else x
    s = -1.0 if x < 0.0 else 1.0
    if a < thr[0]:
        mm = int(math.floor(a / delta + 0.5))
        if mm > n_levels:
            mm = n_levels
        return s * (delta * mm), s * tanh_tab[mm]
    for r in range(1, n_levels + 1):
        if a < thr[r]:
            return s * thr[r - 1], s * tanh_tab[n_levels + r]
    return s * thr[n_levels], s * tanh_tab[2 * n_levels + 1]


@numba.njit(inline="always", cache=True)
def _xform(x, mode, delta, n_levels, thr, clip_val):
    if mode == _MODE_QUANTIZE:
        return _qquant(x, delta, n_levels, thr)
    if mode == _MODE_CLIP:
        if x > clip_val:
            return clip_val
        if x < -clip_val:
            return -clip_val
    return x


# Messages bounded this low keep 1 - tanh(x/2)^2 far above double
# epsilon, so the tanh-product check update loses nothing.
_TANH_SAFE_BOUND = 12.0


@numba.njit(cache=True)
def _decode_kernel(lc, row_cols, col_rows, col_slot, mode, delta, n_levels,
                   thr, tanh_tab, clip_val, max_iters):
    m, dc = row_cols.shape
    n, dv = col_rows.shape
    c2v = np.zeros((m, dc))
    v2c = np.zeros((m, dc))
    v2c_th = np.zeros((m, dc))   # tanh(msg/2), kept in the quantized path
    tot = lc.copy()
    prefix = np.empty(dc)
    suffix = np.empty(dc)
    quant_tanh = mode == _MODE_QUANTIZE and thr[n_levels] <= _TANH_SAFE_BOUND
    clip_tanh = mode == _MODE_CLIP and clip_val <= _TANH_SAFE_BOUND
    converged = False
    iters = 0
    for _ in range(max_iters):
        iters += 1
        # Variable-to-check: split of the running totals, then quantize.
        if quant_tanh:
            for i in range(n):
                for j in range(dv):
                    r = col_rows[i, j]
                    s = col_slot[i, j]
                    v, t = _qquant_tanh(tot[i] - c2v[r, s], delta, n_levels,
                                        thr, tanh_tab)
                    v2c[r, s] = v
                    v2c_th[r, s] = t
        elif clip_tanh:
            for i in range(n):
                for j in range(dv):
                    r = col_rows[i, j]
                    s = col_slot[i, j]
                    v = _xform(tot[i] - c2v[r, s], mode, delta, n_levels,
                               thr, clip_val)
                    v2c[r, s] = v
                    v2c_th[r, s] = math.tanh(0.5 * v)
        else:
            for i in range(n):
                for j in range(dv):
                    r = col_rows[i, j]
                    s = col_slot[i, j]
                    v2c[r, s] = _xform(tot[i] - c2v[r, s], mode, delta,
                                       n_levels, thr, clip_val)
        # Check-to-variable: forward/backward box-plus fold per row.
        # With bounded messages the equivalent tanh-product form is used;
        # |tanh products| stay strictly below 1 there.
        if quant_tanh or clip_tanh:
            for r in range(m):
                acc = v2c_th[r, 0]
                prefix[0] = acc
                for s in range(1, dc):
                    acc *= v2c_th[r, s]
                    prefix[s] = acc
                acc = v2c_th[r, dc - 1]
                suffix[dc - 1] = acc
                for s in range(dc - 2, -1, -1):
                    acc *= v2c_th[r, s]
                    suffix[s] = acc
                for s in range(dc):
                    if s == 0:
                        p = suffix[1]
                    elif s == dc - 1:
                        p = prefix[dc - 2]
                    else:
                        p = prefix[s - 1] * suffix[s + 1]
                    c2v[r, s] = _xform(2.0 * math.atanh(p), mode, delta,
                                       n_levels, thr, clip_val)
        else:
            for r in range(m):
                acc = v2c[r, 0]
                prefix[0] = acc
                for s in range(1, dc):
                    acc = _bp(acc, v2c[r, s])
                    prefix[s] = acc
                acc = v2c[r, dc - 1]
                suffix[dc - 1] = acc
                for s in range(dc - 2, -1, -1):
                    acc = _bp(acc, v2c[r, s])
                    suffix[s] = acc
                for s in range(dc):
                    if s == 0:
                        out = suffix[1]
                    elif s == dc - 1:
                        out = prefix[dc - 2]
                    else:
                        out = _bp(prefix[s - 1], suffix[s + 1])
                    c2v[r, s] = _xform(out, mode, delta, n_levels, thr,
                                       clip_val)
        # Posterior and syndrome; stop once all checks hold.
        any_decided = False
        for i in range(n):
            t = lc[i]
            for j in range(dv):
                t += c2v[col_rows[i, j], col_slot[i, j]]
            tot[i] = t
            if t != 0.0:
                any_decided = True
        ok = True
        for r in range(m):
            p = 0
            for s in range(dc):
                if tot[row_cols[r, s]] < 0.0:
                    p ^= 1
            if p:
                ok = False
                break
        if ok and any_decided:
            converged = True
            break
    return tot, converged, iters


def spa_decode(lc: np.ndarray, code: LdpcCode,
               params: QuantizerParams | None = None,
               max_iters: int = 10,
               clip: float | None = None) -> DecodeResult:
    """Flooding box-plus SPA decode of one codeword.

    When params are given every passed message goes through the
    quasi-uniform quantizer; clip instead bounds message magnitudes
    (mutually exclusive with params).  Hard bits are 1 where the
    posterior is negative.  Extrinsic output is posterior minus input.
    """
    if params is not None and clip is not None:
        raise ValueError("quantization and plain clipping are exclusive")
    lc = np.ascontiguousarray(lc, dtype=np.float64)
    if lc.shape != (code.n,):
        raise ValueError(f"expected {code.n} channel LLRs")
    if not np.all(np.isfinite(lc)):
        raise ValueError("channel LLRs must be finite")
    if params is not None:
        mode, delta, n_levels = _MODE_QUANTIZE, params.delta, params.n_levels
        thr = params.thresholds.copy()
        tanh_tab = _level_tanh_table(params)
        clip_val = np.inf
    elif clip is not None:
        mode, delta, n_levels, thr = _MODE_CLIP, 1.0, 1, np.zeros(1)
        tanh_tab = np.zeros(1)
        clip_val = float(clip)
    else:
        mode, delta, n_levels, thr = _MODE_NONE, 1.0, 1, np.zeros(1)
        tanh_tab = np.zeros(1)
        clip_val = np.inf
    posterior, converged, iterations = _decode_kernel(
        lc, code.row_cols, code.col_rows, code.col_slot, mode, delta,
        n_levels, np.ascontiguousarray(thr, dtype=np.float64), tanh_tab,
        clip_val, int(max_iters),
    )
    return DecodeResult(
        extrinsic=posterior - lc,
        posterior=posterior,
        hard_bits=(posterior < 0).astype(np.uint8),
        converged=bool(converged),
        iterations=int(iterations),
    )
