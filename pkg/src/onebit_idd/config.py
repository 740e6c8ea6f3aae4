"""Scenario configuration and result records for the simulator.

Configs serialize to a plain ``key = value`` text format; every key can
also be set from a command-line flag of the same name.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass

from .ldpc import QuantizerParams

CSV_HEADER = "snr_db,iteration,ber,fer,bit_errors,bits,frame_errors,frames,seconds"


@dataclass
class SystemConfig:
    """All scenario parameters for a Monte-Carlo run."""

    k: int = 12                  # single-antenna users
    m: int = 32                  # receive antennas
    snr_db: tuple[float, ...] = (-10.0, -8.0, -6.0, -4.0)
    trials: int = 1000           # fading blocks per SNR point
    seed: int = 0
    detector: str = "lra-mmse"   # lra-mmse | mmse-baseline
    csi: str = "perfect"         # perfect | blmmse
    tau: int = 70                # pilot symbols per block (blmmse)
    n: int = 512                 # code length
    rate: float = 0.5
    code_seed: int = 0
    quantizer: bool = True       # quasi-uniform message quantizer
    delta: float = 0.25
    growth: float = 1.3
    n_levels: int = 6
    offline_scaling: bool = True
    online_scaling: bool = True
    quantize_extrinsic: bool = True  # detector-bound extrinsic quantizer
    n_outer: int = 3             # outer detector<->decoder iterations
    inner_iters: int = 10        # SPA iterations per outer iteration
    # Conditional-mean model: the Bussgang-linearized pair is the default
    # because the noiseless-quantizer form loses its iterative gain once
    # noise flips a noticeable share of the quantized entries.
    mu_mode: str = "linearized"  # linearized | verbatim
    llr_clip: float = 30.0
    snr_definition: str = "per-user"  # per-user | sum-power
    training_frames: int = 100   # blocks for offline scaling training
    error_budget: int | None = 500   # early stop after this many bit errors
    shard_blocks: int = 50       # blocks per work shard
    workers: int = 1
    out: str = "ber.csv"
    plot: str | None = None

    def __post_init__(self):
        for name in ("k", "m", "trials", "tau", "n", "n_outer",
                     "inner_iters", "training_frames", "shard_blocks",
                     "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.m < self.k:
            raise ValueError("need at least as many antennas as users")
        if self.detector not in ("lra-mmse", "mmse-baseline"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.csi not in ("perfect", "blmmse"):
            raise ValueError(f"unknown csi mode {self.csi!r}")
        if self.snr_definition not in ("per-user", "sum-power"):
            raise ValueError(f"unknown snr definition {self.snr_definition!r}")
        if not all(-1e3 < s < 1e3 for s in self.snr_db):
            raise ValueError("snr grid entries must be finite")
        self.snr_db = tuple(float(s) for s in self.snr_db)

    def sigma_n2(self, snr_db: float) -> float:
        """Noise variance for one grid point under the configured SNR
        normalization (unit symbol energy)."""
        base = 10.0 ** (-snr_db / 10.0)
        if self.snr_definition == "sum-power":
            return self.k * base
        return base

    def quantizer_params(self) -> QuantizerParams | None:
        if not self.quantizer:
            return None
        return QuantizerParams(self.delta, self.growth, self.n_levels)

    def scaling_enabled(self) -> bool:
        return self.offline_scaling or self.online_scaling

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            for f in dataclasses.fields(self):
                fh.write(f"{f.name} = {_format_value(getattr(self, f.name))}\n")

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "SystemConfig":
        values: dict = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
        if overrides:
            values.update(overrides)
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict) -> "SystemConfig":
        hints = typing.get_type_hints(cls)
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name in values:
                v = values[f.name]
                kwargs[f.name] = (
                    _parse_value(v, hints[f.name]) if isinstance(v, str) else v
                )
        unknown = set(values) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(text: str, hint):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:  # Optional[...]
        if text.lower() in ("none", ""):
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _parse_value(text, inner)
    if origin is tuple:
        parts = [p for p in text.replace(",", " ").split() if p]
        return tuple(_parse_value(p, args[0]) for p in parts)
    if hint is bool:
        low = text.lower()
        if low in ("true", "on", "yes", "1"):
            return True
        if low in ("false", "off", "no", "0"):
            return False
        raise ValueError(f"cannot parse boolean from {text!r}")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text


@dataclass(frozen=True)
class BerRecord:
    """Error counts for one (SNR point, outer iteration) pair."""

    snr_db: float
    iteration: int
    bit_errors: int
    frame_errors: int
    bits: int
    frames: int
    seconds: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    def csv_row(self) -> str:
        return (
            f"{self.snr_db!r},{self.iteration},{self.ber!r},{self.fer!r},"
            f"{self.bit_errors},{self.bits},{self.frame_errors},"
            f"{self.frames},{self.seconds!r}"
        )


def write_csv(records, path) -> None:
    """Write records under the fixed header, one row per record."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def read_csv(path) -> list[BerRecord]:
    """Read records written by write_csv."""
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            (snr, it, _ber, _fer, berr, bits, ferr, frames, sec) = \
                line.strip().split(",")
            records.append(BerRecord(
                snr_db=float(snr), iteration=int(it), bit_errors=int(berr),
                frame_errors=int(ferr), bits=int(bits), frames=int(frames),
                seconds=float(sec),
            ))
    return records
