"""Command-line front end for BER sweeps.

Usage:
    onebit-idd --snr "-10,-8,-6" --trials 500 --out ber.csv
    onebit-idd --config sweep.cfg --detector mmse-baseline --plot ber.py

Every SystemConfig key is available as a flag of the same name; flags
override values from --config.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import SystemConfig, write_csv
from .simulate import emit_plot_script, run_ber_sweep

_ON_OFF = {"quantizer", "offline_scaling", "online_scaling",
           "quantize_extrinsic"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-idd",
        description="Monte-Carlo BER simulator for a 1-bit quantized "
                    "multiuser MIMO uplink with iterative detection and "
                    "decoding.",
    )
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--iterations", dest="n_outer",
                        help="outer detector/decoder iterations")
    parser.add_argument("--snr", dest="snr_db",
                        help="SNR grid in dB, e.g. '-10,-8,-6'")
    parser.add_argument("--scaling", choices=["on", "off"],
                        help="enable/disable both LLR scaling factors")
    for f in dataclasses.fields(SystemConfig):
        if f.name == "snr_db":
            continue
        if f.name in _ON_OFF:
            parser.add_argument(f"--{f.name}", choices=["on", "off"])
        else:
            parser.add_argument(f"--{f.name}")
    return parser


def config_from_args(argv) -> SystemConfig:
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config")
    scaling = args.pop("scaling")
    overrides = {k: v for k, v in args.items() if v is not None}
    if scaling is not None:
        overrides["offline_scaling"] = scaling
        overrides["online_scaling"] = scaling
    if config_path:
        return SystemConfig.from_file(config_path, overrides)
    return SystemConfig.from_strings(overrides)


def main(argv=None) -> int:
    try:
        config = config_from_args(argv if argv is not None else sys.argv[1:])
    except (ValueError, OSError) as exc:
        print(f"onebit-idd: {exc}", file=sys.stderr)
        return 2
    try:
        records = run_ber_sweep(config)
    except Exception as exc:  # surface a diagnostic, not a traceback
        print(f"onebit-idd: sweep failed: {exc}", file=sys.stderr)
        return 1
    write_csv(records, config.out)
    print(f"wrote {config.out} ({len(records)} records)")
    for rec in records:
        print(f"  snr {rec.snr_db:+6.1f} dB  iter {rec.iteration}  "
              f"ber {rec.ber:.3e}  fer {rec.fer:.3e}  "
              f"({rec.frames} frames)")
    if config.plot:
        label = f"{config.detector}/{config.csi}"
        emit_plot_script(records, config.plot, label=label)
        print(f"wrote {config.plot}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
