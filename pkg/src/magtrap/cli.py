"""
magtrap command line.

    magtrap modes     --k-min 0.01 --k-max 0.6 --steps 600 --out sweep.csv
    magtrap simulate  --k 0.1 --kick 1e-3 --t-final 628 --out traj.csv
    magtrap lifetime  --preset neutron --json report.json
    magtrap table
    magtrap check

Exit status: 0 on success, 1 when a check or the physics fails, 2 for
usage and I/O errors.
"""

import argparse
import json
import math
import sys
import warnings

from . import mode_analysis as ma
from . import quantum_lifetime as ql
from . import reporting
from .classical_dynamics import DEFAULT_DT, write_trajectory_csv
from .trap_model import PRESETS, InvalidConfigError, TrapConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _config(args):
    if getattr(args, "preset", None):
        return PRESETS[args.preset]
    return load_config(args.config)


def cmd_modes(args):
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if not 0 < args.k_min < args.k_max:
        raise UsageError("need 0 < --k-min < --k-max")
    rows = ma.sweep(args.k_min, args.k_max, args.steps)
    if args.out:
        ma.write_sweep_csv(rows, args.out)
    else:
        ma.write_sweep_csv(rows, sys.stdout)
    # with the CSV on stdout the summary goes to stderr
    stream = sys.stdout if args.out else sys.stderr
    K_c, w_c = ma.locate_double_root()
    flips = [r.K for a, r in zip(rows, rows[1:]) if a.stable != r.stable]
    print(f"K_c = {K_c:.10f}  (sqrt(4/27) = {math.sqrt(4 / 27):.10f})", file=stream)
    print(f"merge frequency = {w_c:.10f} omega_vib  (sqrt(3) = {ma.SQRT3:.10f})",
          file=stream)
    if flips:
        print(f"stability changes at K = {', '.join(f'{k:.4f}' for k in flips)}",
              file=stream)
    return EXIT_OK


def cmd_simulate(args):
    if (args.config is None) == (args.k is None):
        raise UsageError("give exactly one of --config or --k")
    cfg = load_config(args.config) if args.config else None
    traj, summary = reporting.simulate(K=args.k, cfg=cfg, kick=args.kick,
                                       t_final=args.t_final, dt=args.dt,
                                       rt=args.rt, rp=args.rp, mode=args.mode)
    if args.out:
        write_trajectory_csv(traj, args.out)
    text = json.dumps(summary, indent=2)
    if args.summary:
        reporting.write_json(summary, args.summary)
    print(text)
    return EXIT_OK


def cmd_lifetime(args):
    if args.k_with_units:
        K, t_vib = args.k_with_units
        cfg = TrapConfig.from_scaled(K, 2 * math.pi / t_vib)
    elif args.config or args.preset:
        cfg = _config(args)
    else:
        raise UsageError("give --config, --preset or --k-with-units")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = ql.lifetime(cfg)
    text = report.to_json(indent=2)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_table(args):
    rows = reporting.table_rows()
    print(reporting.format_table(rows))
    bad = reporting.table_mismatches(rows)
    for name, q, got, ref in bad:
        print(f"MISMATCH {name} {q}: computed {got:.3g}, reference {ref:.3g}")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_check(args):
    perturb = {}
    for item in args.perturb or []:
        name, _, value = item.partition("=")
        try:
            perturb[name] = float(value)
        except ValueError:
            raise UsageError(f"--perturb expects NAME=OFFSET, got {item!r}") from None
    try:
        results = reporting.run_checks(perturb)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:20s} {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}")
        return EXIT_FAIL
    return EXIT_OK


def build_parser():
    p = _Parser(prog="magtrap", description="Magnetic trap stability and lifetime tools.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    m = sub.add_parser("modes", help="sweep the spin-down mode spectrum over K")
    m.add_argument("--k-min", type=float, default=0.01)
    m.add_argument("--k-max", type=float, default=0.6)
    m.add_argument("--steps", type=int, default=600)
    m.add_argument("--out", help="CSV path (default: stdout)")
    m.set_defaults(func=cmd_modes)

    s = sub.add_parser("simulate", help="integrate the classical equations of motion")
    s.add_argument("--config", help="physical trap config file")
    s.add_argument("--k", type=float, help="adiabaticity K (scaled run)")
    s.add_argument("--kick", type=float, default=1e-3,
                   help="initial displacement and spin tilt (scaled)")
    s.add_argument("--mode", choices=ma.BRANCHES, help="start on this mode's eigenvector")
    s.add_argument("--t-final", type=float, default=200 * math.pi,
                   help="duration in units of 1/omega_vib")
    s.add_argument("--dt", type=float, default=DEFAULT_DT)
    s.add_argument("--rt", type=float, default=0.0,
                   help="translational friction (scaled with --k, g/s with --config)")
    s.add_argument("--rp", type=float, default=0.0,
                   help="precessional friction (scaled with --k, erg s with --config)")
    s.add_argument("--out", help="trajectory CSV path")
    s.add_argument("--summary", help="summary JSON path (always printed)")
    s.set_defaults(func=cmd_simulate)

    lt = sub.add_parser("lifetime", help="quantum escape lifetime report")
    src = lt.add_mutually_exclusive_group()
    src.add_argument("--config")
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--k-with-units", type=float, nargs=2, metavar=("K", "T_VIB_S"))
    lt.add_argument("--json", help="report JSON path (always printed)")
    lt.set_defaults(func=cmd_lifetime)

    t = sub.add_parser("table", help="order-of-magnitude table for the built-in presets")
    t.set_defaults(func=cmd_table)

    c = sub.add_parser("check", help="run the built-in self-checks")
    c.add_argument("--perturb", action="append", metavar="NAME=OFFSET",
                   help="inject an offset into a check (exercises the failure path)")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InvalidConfigError, ql.DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ql.NumericalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
