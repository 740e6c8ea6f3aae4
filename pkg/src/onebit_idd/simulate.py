"""Monte-Carlo BER/FER harness: training phase, sharded sweeps, CSV and
plot-script output.

Every fading block draws from its own counter-based RNG stream keyed by
(seed, role, snr index, shard, block), so results are bit-identical for
any worker count and blocks can be processed in any order.  Shards are
merged in index order; the optional error budget stops a sweep point
after the ordered prefix of shards has accumulated enough bit errors.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import QPSK, bits_to_bipolar, generate_channel, map_bits, transmit
from .config import BerRecord, SystemConfig, write_csv
from .estimator import PilotBlock, blmmse_estimate, build_pilot_matrix
from .idd import run_idd
from .ldpc import (
    LdpcCode,
    ScalingState,
    construct_code,
    encode,
    offline_scaling_train,
)
from .quantization import quantize_1bit

_ROLE_DATA = 0
_ROLE_TRAIN = 1

__all__ = [
    "run_ber_sweep",
    "run_training_phase",
    "simulate_block",
    "emit_plot_script",
    "write_csv",
]


def block_rng(seed: int, role: int, snr_index: int, shard: int,
              block: int) -> np.random.Generator:
    """Independent counter-based stream for one fading block."""
    ss = np.random.SeedSequence(
        entropy=seed, spawn_key=(role, snr_index, shard, block)
    )
    return np.random.Generator(np.random.Philox(ss))


@lru_cache(maxsize=8)
def _get_code(n: int, rate: float, seed: int) -> LdpcCode:
    return construct_code(n, rate, seed)


@lru_cache(maxsize=8)
def _get_pilots(k: int, tau: int) -> PilotBlock:
    return build_pilot_matrix(k, tau)


def _channel_and_estimate(config: SystemConfig, sigma_n2: float,
                          rng: np.random.Generator):
    """Draw a block channel and the receiver's view of it."""
    ch = generate_channel(config.m, config.k, rng, sigma_n2)
    if config.csi == "blmmse":
        pilots = _get_pilots(config.k, config.tau)
        y_p = transmit(ch.h, pilots.x_p, sigma_n2, rng)
        h_hat = blmmse_estimate(quantize_1bit(y_p), pilots, sigma_n2)
    else:
        h_hat = ch.h
    return ch, h_hat


def simulate_block(config: SystemConfig, code: LdpcCode, sigma_n2: float,
                   rng: np.random.Generator,
                   scaling: list[ScalingState] | None):
    """One end-to-end fading block; returns the IddResult and truth."""
    info = rng.integers(0, 2, size=(config.k, code.k), dtype=np.uint8)
    ch, h_hat = _channel_and_estimate(config, sigma_n2, rng)
    symbols = map_bits(bits_to_bipolar(encode(info, code)), QPSK)
    y_q = quantize_1bit(transmit(ch.h, symbols, sigma_n2, rng))
    result = run_idd(y_q, h_hat, sigma_n2, code, config,
                     scaling=scaling, true_info=info)
    return result, info


@dataclass
class _ShardResult:
    shard: int
    blocks: int
    bit_errors: np.ndarray      # (n_outer,)
    frame_errors: np.ndarray    # (n_outer,)
    per_block: np.ndarray       # (n_outer, blocks) info-bit errors


def _pad_iterations(arr: np.ndarray, n_outer: int) -> np.ndarray:
    """Repeat the last recorded iteration up to n_outer rows."""
    if arr.shape[0] == n_outer:
        return arr
    pad = np.repeat(arr[-1:], n_outer - arr.shape[0], axis=0)
    return np.concatenate([arr, pad], axis=0)


def _run_shard(config: SystemConfig, snr_index: int, shard: int,
               n_blocks: int,
               scaling: list[ScalingState] | None) -> _ShardResult:
    code = _get_code(config.n, config.rate, config.code_seed)
    sigma_n2 = config.sigma_n2(config.snr_db[snr_index])
    bit_errors = np.zeros(config.n_outer, dtype=np.int64)
    frame_errors = np.zeros(config.n_outer, dtype=np.int64)
    per_block = np.zeros((config.n_outer, n_blocks), dtype=np.int64)
    for b in range(n_blocks):
        rng = block_rng(config.seed, _ROLE_DATA, snr_index, shard, b)
        states = ([ScalingState(s.alpha, s.lbar_ref) for s in scaling]
                  if scaling is not None else None)
        result, _ = simulate_block(config, code, sigma_n2, rng, states)
        errs = _pad_iterations(result.info_errors, config.n_outer)
        ferr = _pad_iterations(result.frame_errors, config.n_outer)
        bit_errors += errs.sum(axis=1)
        frame_errors += ferr.sum(axis=1)
        per_block[:, b] = errs.sum(axis=1)
    return _ShardResult(shard, n_blocks, bit_errors, frame_errors, per_block)


def run_training_phase(config: SystemConfig,
                       snr_db: float | None = None,
                       snr_index: int = 0) -> list[ScalingState]:
    """Fit per-user offline scaling factors at one SNR point.

    Known data blocks are sent through the full receiver front end; the
    first-pass detector LLRs and the true bipolar bits feed the
    histogram fit.  With scaling disabled this returns identity states.
    """
    if not config.scaling_enabled():
        return [ScalingState(alpha=1.0, lbar_ref=1.0)
                for _ in range(config.k)]
    from .detector import build_workspace, detect_frame

    code = _get_code(config.n, config.rate, config.code_seed)
    if snr_db is None:
        snr_db = config.snr_db[snr_index]
    sigma_n2 = config.sigma_n2(snr_db)
    llrs = [[] for _ in range(config.k)]
    bits = [[] for _ in range(config.k)]
    for b in range(config.training_frames):
        rng = block_rng(config.seed, _ROLE_TRAIN, snr_index, 0, b)
        info = rng.integers(0, 2, size=(config.k, code.k), dtype=np.uint8)
        ch, h_hat = _channel_and_estimate(config, sigma_n2, rng)
        bipolar = bits_to_bipolar(encode(info, code))
        y_q = quantize_1bit(
            transmit(ch.h, map_bits(bipolar, QPSK), sigma_n2, rng)
        )
        ws = build_workspace(h_hat, sigma_n2)
        lc = detect_frame(y_q, ws, None, detector=config.detector,
                          mu_mode=config.mu_mode, llr_clip=config.llr_clip)
        lc = lc.reshape(config.k, code.n)
        for k in range(config.k):
            llrs[k].append(lc[k])
            bits[k].append(bipolar[k])
    states = []
    for k in range(config.k):
        samples = np.concatenate(llrs[k])
        labels = np.concatenate(bits[k])
        if config.offline_scaling:
            alpha = offline_scaling_train(samples, labels)
        else:
            alpha = 1.0
        states.append(ScalingState(
            alpha=alpha, lbar_ref=alpha * float(np.mean(np.abs(samples)))
        ))
    return states


@dataclass
class SweepPointDetail:
    """Block-level error counts, for confidence intervals."""

    snr_db: float
    blocks: int
    per_block: np.ndarray   # (n_outer, blocks) info-bit errors per block
    scaling: list[ScalingState]


def run_ber_sweep(config: SystemConfig, return_details: bool = False):
    """Monte-Carlo sweep over the configured SNR grid.

    Returns one BerRecord per (SNR point, outer iteration).  Blocks are
    processed in fixed-size shards, optionally across worker processes;
    totals are independent of the worker count.
    """
    _get_code(config.n, config.rate, config.code_seed)  # warm the cache
    records: list[BerRecord] = []
    details: list[SweepPointDetail] = []
    for snr_index, snr_db in enumerate(config.snr_db):
        t0 = time.perf_counter()
        scaling = run_training_phase(config, snr_db, snr_index)
        shard_sizes = _shard_sizes(config.trials, config.shard_blocks)
        results = _run_shards(config, snr_index, shard_sizes, scaling)
        merged_bits = np.zeros(config.n_outer, dtype=np.int64)
        merged_frames = np.zeros(config.n_outer, dtype=np.int64)
        blocks = 0
        per_block_parts = []
        for res in results:
            merged_bits += res.bit_errors
            merged_frames += res.frame_errors
            blocks += res.blocks
            per_block_parts.append(res.per_block)
            if (config.error_budget is not None
                    and merged_bits[-1] >= config.error_budget):
                break
        seconds = time.perf_counter() - t0
        info_bits = round(config.n * config.rate)
        for it in range(config.n_outer):
            records.append(BerRecord(
                snr_db=snr_db, iteration=it + 1,
                bit_errors=int(merged_bits[it]),
                frame_errors=int(merged_frames[it]),
                bits=blocks * config.k * info_bits,
                frames=blocks * config.k,
                seconds=seconds,
            ))
        if return_details:
            details.append(SweepPointDetail(
                snr_db=snr_db, blocks=blocks,
                per_block=np.concatenate(per_block_parts, axis=1),
                scaling=scaling,
            ))
    if return_details:
        return records, details
    return records


def _shard_sizes(trials: int, shard_blocks: int) -> list[int]:
    full, rest = divmod(trials, shard_blocks)
    return [shard_blocks] * full + ([rest] if rest else [])


def _run_shards(config, snr_index, shard_sizes, scaling):
    """Yield shard results in shard order (generator, so an error-budget
    stop cancels the remaining work)."""
    if config.workers <= 1:
        def serial():
            for shard, size in enumerate(shard_sizes):
                yield _run_shard(config, snr_index, shard, size, scaling)
        return serial()

    def parallel():
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [
                pool.submit(_run_shard, config, snr_index, shard, size,
                            scaling)
                for shard, size in enumerate(shard_sizes)
            ]
            try:
                for fut in futures:
                    yield fut.result()
            finally:
                for fut in futures:
                    fut.cancel()
    return parallel()


def emit_plot_script(records, path, label: str | None = None) -> None:
    """Write a standalone matplotlib script rendering BER vs SNR.

    records may be a list of BerRecord (one labelled series set) or a
    mapping of label -> list of BerRecord; one curve is drawn per
    (label, iteration).
    """
    if not isinstance(records, dict):
        records = {label or "sweep": list(records)}
    series: dict[str, list[tuple[float, float]]] = {}
    for name, recs in records.items():
        for rec in recs:
            key = f"{name}, iteration {rec.iteration}"
            series.setdefault(key, []).append((rec.snr_db, rec.ber))
    lines = [
        "#!/usr/bin/env python3",
        '"""BER vs SNR curves (generated by onebit-idd)."""',
        "import matplotlib",
        'matplotlib.use("Agg")',
        "import matplotlib.pyplot as plt",
        "",
        "SERIES = {",
    ]
    for key, pts in series.items():
        lines.append(f"    {key!r}: {sorted(pts)!r},")
    lines += [
        "}",
        "",
        "fig, ax = plt.subplots(figsize=(7, 5))",
        "for name, pts in SERIES.items():",
        "    snr = [p[0] for p in pts]",
        "    ber = [max(p[1], 1e-12) for p in pts]",
        "    ax.semilogy(snr, ber, marker='o', label=name)",
        "ax.set_xlabel('SNR [dB]')",
        "ax.set_ylabel('BER')",
        "ax.grid(True, which='both', alpha=0.3)",
        "ax.legend(fontsize=8)",
        "fig.tight_layout()",
        "out = __file__.rsplit('.', 1)[0] + '.png'",
        "fig.savefig(out, dpi=150)",
        "print(f'wrote {out}')",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
