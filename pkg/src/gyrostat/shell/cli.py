"""Command line front end.

Exit codes: 0 success, 1 invalid input, 2 solver or fitting failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import spectral as S
from ..errors import FormatError, GyrostatError, SolverFailure, ValidationError, WindowEmpty
from ..stability import attainability, classify, fit_decay, fit_growth
from . import artifacts as io
from .experiments import PRESETS, run_preset, simulate
from .scenario import load_scenario

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def _triple(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not numbers: {text!r}") from None


def _grid(text: str):
    return tuple(int(round(x)) for x in _triple(text))


def _print_json(doc):
    print(json.dumps(io._clean(doc), indent=2))


# -- subcommands ------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    if args.out:
        sc = sc.replace(directory=args.out)
    res = simulate(sc)
    print(f"status: {res.series.status}, t = {res.series.rows[-1].t:.6g}, samples = {len(res.series.rows)}")
    for path in res.files:
        if path.suffix in (".csv", ".json", ".ckpt"):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    sc = load_scenario(args.scenario)
    setup = sc.setup()
    basis = S.stokes_modes(setup.cavity, setup.nu, args.modes)
    report = S.eigenspectrum(S.assemble_pencil(basis, setup), m_expected=setup.m)
    verdict = classify(*setup.inertia.moments, setup.omega0, deg_tol=setup.inertia.deg_tol)
    extra = {"case": verdict.case_id, "classify": verdict.verdict, "modes": args.modes, "mu1": float(basis.mu[0])}
    print(f"zero cluster: {report.zero_multiplicity} (expected {setup.m}), semisimple: {report.semisimple}")
    print(f"verdict: {report.verdict}; min Re (nonzero): {report.min_real:.6g}; {verdict}")
    if args.refine:
        lam = S.refine_spectrum(setup, report)
        extra["refined_min_real"] = float(lam[0].real)
        extra["refined_eigenvalues"] = [[float(z.real), float(z.imag)] for z in lam]
        print(f"full-grid slowest eigenvalue: {lam[0].real:.6g} {lam[0].imag:+.6g}i")
    out = Path(args.out or Path(sc.directory) / f"{sc.name}_eigreport.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_eigreport(report, out, extra)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    print(classify(*args.abc, args.axis, deg_tol=args.deg_tol))
    return EXIT_OK


def cmd_attain(args) -> int:
    print(attainability(args.E0, args.omega0, *args.abc, deg_tol=args.deg_tol))
    return EXIT_OK


def cmd_fit_decay(args) -> int:
    cols = io.read_timeseries(args.csv)
    for name in ("t", args.column):
        if name not in cols:
            raise ValidationError(f"column {name!r} not in {args.csv}; have {', '.join(cols)}")
    fitter = fit_growth if args.growth else fit_decay
    fit = fitter(cols["t"], cols[args.column], args.column)
    kind = "growth" if args.growth else "decay"
    print(f"{args.column}: {kind} rate {fit.rate:.6g}, R^2 {fit.r_squared:.6f}, "
          f"window [{fit.window[0]:.6g}, {fit.window[1]:.6g}], {fit.n_samples} samples")
    return EXIT_OK


def cmd_preset(args) -> int:
    overrides = {}
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.grid is not None:
        overrides["grid"] = args.grid
    res = run_preset(args.name, args.out, **overrides)
    _print_json(res.summary)
    return EXIT_OK


def cmd_checkpoint_info(args) -> int:
    ck = io.read_checkpoint(args.file)
    _print_json(io.checkpoint_summary(ck))
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors count as invalid input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gyrostat", description="Rigid body with a liquid-filled cavity.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate a scenario file")
    s.add_argument("scenario")
    s.add_argument("--out", help="output directory (overrides the scenario)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("spectrum", help="eigenanalysis of the linearization of a scenario")
    s.add_argument("scenario")
    s.add_argument("--modes", type=int, default=S.DEFAULT_MODES, help="number of Stokes modes")
    s.add_argument("--refine", action="store_true", help="refine the slowest eigenvalues on the full grid")
    s.add_argument("--out", help="JSON report path")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("classify", help="stability of a permanent rotation")
    s.add_argument("--abc", type=_triple, required=True, metavar="A,B,C")
    s.add_argument("--axis", type=_triple, required=True, metavar="X,Y,Z")
    s.add_argument("--deg-tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("attain", help="guaranteed terminal axis for given initial data")
    s.add_argument("--abc", type=_triple, required=True, metavar="A,B,C")
    s.add_argument("--omega0", type=_triple, required=True, metavar="X,Y,Z",
                   help="rotation I^-1 M(0) fixed by the angular momentum")
    s.add_argument("--E0", type=float, required=True, help="initial relative liquid energy")
    s.add_argument("--deg-tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_attain)

    s = sub.add_parser("fit-decay", help="exponential rate of a CSV column")
    s.add_argument("csv")
    s.add_argument("--column", required=True)
    s.add_argument("--growth", action="store_true", help="fit growth before saturation instead")
    s.set_defaults(func=cmd_fit_decay)

    s = sub.add_parser("preset", help=f"run a named experiment ({', '.join(PRESETS)})")
    s.add_argument("name")
    s.add_argument("--out", help="output directory")
    s.add_argument("--t-end", type=float)
    s.add_argument("--grid", type=_grid, metavar="NX,NY,NZ")
    s.set_defaults(func=cmd_preset)

    s = sub.add_parser("checkpoint-info", help="print the header of a checkpoint file")
    s.add_argument("file")
    s.set_defaults(func=cmd_checkpoint_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverFailure, WindowEmpty) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GyrostatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
