"""
Command-line front end.

Every experiment key can be set in a ``key = value`` file given with
``--config`` and overridden by the matching flag.  Metrics go to ``--out``
as CSV, or to standard output.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime
failures.
"""

import argparse
import logging
import re
import sys
from dataclasses import replace

from .eavesdropper import build_conditional_pdf, collect_phase_samples, write_pdf_csv
from .harness import (
    CSV_COLUMNS, DEFAULT_GAMMA_E_SWEEP, ConfigError, coerce_value, emit_csv, load_config, run_point, run_sweep_gamma_e,
    run_sweep_rho, run_table1,
)
from .precoders import PrecoderKind

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

SUBCOMMAND_DEFAULTS = {
    "point": {},
    "sweep-gamma-e": {"gamma_e_db": DEFAULT_GAMMA_E_SWEEP, "schemes": ("cd_partial", "cd_full", "icss", "fast_icss")},
    "sweep-rho": {"schemes": ("an_no_csi",), "rho": (0.0, 0.1, 0.3, 0.5, 0.7, 0.9), "p0_db": (10.0, 15.0, 20.0)},
    "table1": {"gamma_e_db": (-30.0,), "rho": (0.3,)},
    "phase-pdf": {"schemes": ("cd_full",), "gamma_e_db": (-15.0,)},
}

# flag name -> (config key, help)
KEY_FLAGS = {
    "--N": ("N", "transmit antennas"),
    "--K": ("K", "users"),
    "--M": ("M", "PSK order"),
    "--rho": ("rho", "eavesdropper channel correlation (comma list for sweeps)"),
    "--beta": ("beta", "users' large-scale gain"),
    "--beta-e": ("beta_e", "eavesdropper large-scale gain"),
    "--gamma0-db": ("gamma0_db", "users' SNR floor in dB"),
    "--gamma-e-db": ("gamma_e_db", "eavesdropper SNR ceiling in dB (comma list for sweeps)"),
    "--p0-db": ("p0_db", "power floor of the no-CSI scheme in dB (comma list for sweeps)"),
    "--schemes": ("schemes", "comma list of: " + ", ".join(k.value for k in PrecoderKind)),
    "--train-trials": ("train_trials", "eavesdropper training transmissions"),
    "--test-trials": ("test_trials", "test transmissions"),
    "--ser-trials": ("ser_trials", "user symbol detections per user"),
    "--bins": ("bins", "phase histogram bins"),
    "--seed": ("seed", "master seed"),
    "--threads": ("threads", "worker threads (results do not depend on it)"),
    "--out": ("out", "output CSV path (default: standard output)"),
    "--dump-trials": ("dump_trials", "append per-trial powers to this CSV"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value experiment file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    for flag, (key, text) in KEY_FLAGS.items():
        common.add_argument(flag, dest=key, help=text, default=None)

    parser = _Parser(prog="secure-slp", description="Secure symbol-level precoding simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("point", parents=[common], help="one operating point per scheme")
    sub.add_parser("sweep-gamma-e", parents=[common], help="sweep the eavesdropper SNR ceiling")
    sub.add_parser("sweep-rho", parents=[common], help="sweep correlation and power floor")
    sub.add_parser("table1", parents=[common], help="ICSS against zero-forcing for two antenna loads")
    pdf = sub.add_parser("phase-pdf", parents=[common], help="dump the eavesdropper's phase densities")
    pdf.add_argument("--mode", choices=("rotate_from_c1", "independent"), default="rotate_from_c1")
    return parser


def _config(args):
    overrides = {}
    for _, (key, _) in KEY_FLAGS.items():
        raw = getattr(args, key)
        if raw is not None:
            overrides[key] = coerce_value(key, raw)
    return load_config(args.config, SUBCOMMAND_DEFAULTS[args.command], **overrides)


def _write_records(records, path):
    if path:
        emit_csv(records, path)
    else:
        print(",".join(CSV_COLUMNS))
        for r in records:
            print(",".join(r.row()))


def _phase_pdf(cfg, mode):
    link = cfg.link(cfg.scalar("rho"), cfg.scalar("gamma_e_db"), cfg.scalar("p0_db"))
    samples = collect_phase_samples(cfg.scalar("schemes"), link, cfg.train_trials, cfg.seed, "train",
                                    fix_first=(mode == "rotate_from_c1"), threads=cfg.threads)
    pdf = build_conditional_pdf(samples, cfg.M, cfg.bins, mode)
    write_pdf_csv(pdf, cfg.out or sys.stdout)


_NUMBER_LIST = re.compile(r"^-\d[\d.eE+-]*(,\s*-?[\d.eE+-]+)*$")


def _join_negative_values(argv):
    # "--gamma-e-db -30,0" would otherwise be read as an unknown option
    out = []
    for tok in argv:
        if out and out[-1] in KEY_FLAGS and _NUMBER_LIST.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "phase-pdf":
            cfg.scalar("schemes")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "point":
            records = [run_point(cfg, s) for s in cfg.schemes]
        elif args.command == "sweep-gamma-e":
            records = run_sweep_gamma_e(cfg)
        elif args.command == "sweep-rho":
            records = run_sweep_rho(cfg)
        elif args.command == "table1":
            records = run_table1(replace(cfg, schemes=("icss", "zf")))
        else:
            _phase_pdf(cfg, args.mode)
            return EXIT_OK
        _write_records(records, cfg.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
