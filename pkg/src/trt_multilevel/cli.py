"""Command line entry point.

    trt-multilevel run <config> [--output-dir DIR] [--lmax N] [--dt DT] [--quiet]
    trt-multilevel oracle <config> [...]

Exit codes: 0 success, 1 configuration error, 2 non-convergence, 3 I/O error.
"""

import argparse
import logging
import sys
import time

from .config import ConfigError, load_config
from .driver import NonConvergenceError, reference_fixed_point, run
from .output import OutputError, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_IO = 0, 1, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="trt-multilevel", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("run", "multilevel solver"), ("oracle", "temperature-lagged reference solver")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="INI-style run configuration")
        p.add_argument("--output-dir", help="override [output] directory")
        p.add_argument("--lmax", type=int, help="override the cycle limit")
        p.add_argument("--dt", type=float, help="override the time step [sh]")
        p.add_argument("--quiet", action="store_true", help="no progress output")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        changes = {k: v for k, v in (("lmax", args.lmax), ("dt", args.dt), ("directory", args.output_dir)) if v is not None}
        if changes:
            cfg = cfg.replace(**changes)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(j, n, stats):
        if not args.quiet:
            print(f"step {j}/{n}  M_ti={stats.transport_iterations[-1]}  N_ti={stats.N_ti}", file=sys.stderr)

    t0 = time.perf_counter()
    try:
        if args.command == "run":
            result = run(cfg, progress=progress)
        else:
            result = reference_fixed_point(cfg)
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    try:
        paths = write_outputs(result, cfg)
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(f"done in {time.perf_counter() - t0:.1f} s, N_ti={result.stats.N_ti}, N_c={result.stats.N_c}")
        for p in paths:
            print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
