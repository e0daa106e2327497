"""Command-line entry point.

Exit codes: 0 success, 1 numerical failure (a comparison or gate failed),
2 configuration error.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, gridio
from .config import add_config_flags, load_config, overrides_from_args
from .errors import ConfigError, GateError, GridError, ParameterError

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

DUMP_KINDS = ("sg-field", "pauli-density", "dirac-charge", "dirac-current", "sphere-current")


def build_parser():
    ap = argparse.ArgumentParser(prog="sgspin", description="Stern-Gerlach electron models and checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="INI scenario file")
        add_config_flags(p)
        return p

    sim = common(sub.add_parser("simulate", help="run selected models once and compare to closed forms"))
    sim.set_defaults(func=cmd_simulate)
    sw = common(sub.add_parser("sweep", help="detector arrivals over a spin-angle sweep"))
    sw.set_defaults(func=cmd_sweep)
    t1 = common(sub.add_parser("table1", help="uniqueness/discreteness table for all four models"))
    t1.set_defaults(func=cmd_table1)
    acc = sub.add_parser("acceptance", help="run the acceptance criteria")
    acc.add_argument("--profile", choices=("fast", "full"), default="fast")
    acc.add_argument("--only", type=int, nargs="+", metavar="N", help="run just these criteria")
    acc.add_argument("--output-dir", default=None, help="where the Table 1 artifacts go")
    acc.add_argument("--json", default=None, help="write the results to this JSON file")
    acc.add_argument("--break-criterion", type=int, default=None, help=argparse.SUPPRESS)
    acc.set_defaults(func=cmd_acceptance)
    dump = common(sub.add_parser("dump-field", help="write a volumetric field to the binary grid format"))
    dump.add_argument("--kind", choices=DUMP_KINDS, default="sg-field")
    dump.add_argument("--slice-axis", type=int, choices=(0, 1, 2), default=1)
    dump.set_defaults(func=cmd_dump)
    ex = sub.add_parser("example-config", help="print a commented config with every key")
    ex.add_argument("path", nargs="?", default=None)
    ex.set_defaults(func=cmd_example)
    return ap


def _load(args):
    return load_config(args.config, overrides=overrides_from_args(args))


def cmd_simulate(args):
    from .runner import run
    cfg = _load(args)
    summary = run(cfg)
    for line in summary.report_lines():
        print(line)
    print(f"summary written to {Path(cfg.output_dir) / 'summary.json'}")
    return EXIT_OK if summary.passed else EXIT_NUMERIC


def cmd_sweep(args):
    from .runner import run_sweep
    cfg = _load(args)
    records, classes = run_sweep(cfg)
    for r in records:
        arr = ", ".join(f"z={z:.6g} w={w:.6f}" for z, w in r.arrivals)
        print(f"{r.model} theta={r.spin_prep[0]:.6f}: {arr}")
    for c in classes:
        print(f"{c.model}: unique={c.unique} discrete={c.discrete}")
    return EXIT_OK


def cmd_table1(args):
    from .runner import run_table1
    cfg = _load(args)
    text, checks = run_table1(cfg)
    print(text, end="")
    bad = [c["model"] for c in checks if not c["passed"]]
    if bad:
        print(f"table mismatch for: {', '.join(bad)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_acceptance(args):
    from .acceptance import run_acceptance
    results = run_acceptance(args.profile, only=args.only, break_criterion=args.break_criterion,
                             output_dir=args.output_dir, echo=print)
    failed = [r for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed ({total:.1f} s)")
    if args.json:
        gridio.write_json(args.json, [r.as_dict() for r in results])
    if failed:
        print("failing: " + ", ".join(f"criterion {r.number} ({r.title})" for r in failed),
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_dump(args):
    from . import dirac, pauli
    from .fields import Grid3, sample_field, sg_field
    from .sphere import SphereState, sphere_current_density
    cfg = _load(args)
    p = cfg.params()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = Grid3(cfg.dims, cfg.box_halfwidth())
    th, ph = cfg.spin_angles()
    if args.kind == "sg-field":
        values = sample_field(sg_field(p).b_at, g).values
    elif args.kind == "pauli-density":
        spec = pauli.GaussianPacketSpec.from_params(p, pauli.spin_amplitudes(th, ph))
        values = pauli.density(pauli.make_gaussian(spec, g, p)).values
    elif args.kind == "dirac-charge":
        values = dirac.charge_density(dirac.prepared_state("x_up_pre", p, g, theta=th, phi=ph)).values
    elif args.kind == "dirac-current":
        values = dirac.current_density(dirac.prepared_state("x_up_post", p, g, theta=th, phi=ph)).values
    else:
        g = Grid3(cfg.dims, 1.5 * p.R)
        s = SphereState.at_rest(cfg.spin_vector(), p)
        values = np.moveaxis(sphere_current_density(s, g.positions()), -1, 0)
    stem = out / args.kind
    gridio.write_grid(stem.with_suffix(".sgg"), g, values)
    scalar = values if values.ndim == 3 else np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    plane = gridio.slice_plane(scalar, axis=args.slice_axis)
    gridio.write_slice_text(stem.with_suffix(".slice.txt"), plane)
    gridio.write_pgm(stem.with_suffix(".pgm"), plane)
    print(f"wrote {stem.with_suffix('.sgg')} ({g.dims[0]}x{g.dims[1]}x{g.dims[2]}, "
          f"{1 if values.ndim == 3 else values.shape[0]} components)")
    return EXIT_OK


def cmd_example(args):
    from .config import write_example
    path = args.path or "/dev/stdout"
    write_example(path)
    return EXIT_OK


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateError, GridError, ParameterError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
