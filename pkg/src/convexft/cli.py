"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 evaluator error,
4 fit failure (no fit, or exponent outside tolerance), 5 check failure.
"""

import argparse
import json
import math
import sys

import numpy as np

from convexft import __version__
from convexft.checks import format_table, run_suite
from convexft.decay import (
    L2_AVERAGE,
    POINTWISE,
    SURFACE_AVERAGE,
    default_method,
    fit_exponent,
    resolving_ppo,
    scan,
)
from convexft.errors import BodySpecError, ConvexFTError, InsufficientData
from convexft.fourier import QUADRATURE, QuadratureSpec, ft, ft_many
from convexft.geometry import parse_body
from convexft.lattice import FAMILIES, HAAR, lattice_exponent_fit
from convexft.sphere import SphereScheme, is_radial

EXIT_OK, EXIT_CONFIG, EXIT_EVAL, EXIT_FIT, EXIT_CHECK = 0, 2, 3, 4, 5


class ConfigError(Exception):
    pass


def _vector(text, d, name):
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise ConfigError(f"--{name} must be comma-separated numbers, got {text!r}") from None
    if v.size != d:
        raise ConfigError(f"--{name} needs {d} components for a d={d} body, got {v.size}")
    return v


def _ppo(text):
    if text == "auto":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--ppo must be an integer or 'auto'") from None
    if v < 4:
        raise argparse.ArgumentTypeError("--ppo must be >= 4")
    return v


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError("must be > 0")
        return v

    return parse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="convexft", description="Fourier decay of convex bodies and lattice discrepancy.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, body=True):
        if body:
            sp.add_argument("--body", required=True, help="e.g. ball:d=2,r=1  box:d=3,h=.5,.5,.5  pball:d=2,p=4,r=1")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=_positive(int), default=1)
        sp.add_argument("--out", default=None, help="CSV output path (default: stdout)")
        sp.add_argument("--resonance-eps", type=_positive(float), default=1e-6)
        sp.add_argument("--quad-c", type=float, default=8.0, help="quadrature nodes per wavelength (>= 4)")
        sp.add_argument("--quad-h", type=_positive(float), default=0.05, help="maximum panel length")

    def window(sp, rmin, rmax):
        sp.add_argument("--rmin", type=_positive(float), default=rmin)
        sp.add_argument("--rmax", type=_positive(float), default=rmax)
        sp.add_argument("--ppo", type=_ppo, default="auto", help="points per octave or 'auto'")
        sp.add_argument("--fit", choices=("auto", "direct", "envelope"), default="auto")
        sp.add_argument("--tol", type=_positive(float), default=0.1)

    s = sub.add_parser("ft", help="evaluate the transform at one frequency")
    common(s)
    s.add_argument("--xi", required=True)

    s = sub.add_parser("avg-decay", help="spherical L2 average decay and exponent")
    common(s)
    window(s, 32.0, 1024.0)
    s.add_argument("--ndir", type=_positive(int), default=None)

    s = sub.add_parser("pointwise", help="pointwise decay along one direction")
    common(s)
    window(s, 32.0, 4096.0)
    s.add_argument("--omega", default=None, help="direction (default e_1)")

    s = sub.add_parser("surface", help="surface-measure average decay")
    common(s)
    window(s, 32.0, 1024.0)
    s.add_argument("--ndir", type=_positive(int), default=None)

    s = sub.add_parser("lattice", help="rotational L2 lattice discrepancy")
    common(s)
    s.add_argument("--tmin", type=_positive(float), default=64.0)
    s.add_argument("--tmax", type=_positive(float), default=2048.0)
    s.add_argument("--ppo", type=_ppo, default=8)
    s.add_argument("--nrot", type=_positive(int), default=64)
    s.add_argument("--family", choices=FAMILIES, default=HAAR)
    s.add_argument("--tol", type=_positive(float), default=0.1)

    s = sub.add_parser("check", help="run the invariant suite")
    s.add_argument("--quick", action="store_true", help="reduced sample sizes")
    s.add_argument("--only", action="append", default=None, help="substring of check names to run")
    s.add_argument("--out", default=None)
    return p


def _spec(args):
    if args.quad_c < 4:
        raise ConfigError("--quad-c must be >= 4")
    return QuadratureSpec(h=args.quad_h, c=args.quad_c, seed=args.seed)


def _config(args, **resolved):
    # the output path does not affect results, so identical runs give identical bytes
    cfg = {k: v for k, v in vars(args).items() if v is not None and k != "out"}
    cfg.update(resolved)
    cfg["version"] = __version__
    return cfg


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(args, line):
    print(line, file=sys.stdout if args.out else sys.stderr)


def _uses_quadrature(body):
    return ft_many(body, np.eye(body.dim)[:1])[2] == QUADRATURE


def auto_ppo(body, quantity, r_max):
    """Grid density: resolve oscillations when evaluation is cheap enough."""
    quad = _uses_quadrature(body)
    if quantity != POINTWISE and not is_radial(body):
        return 8 if quad else min(resolving_ppo(body, r_max), 128)
    full = resolving_ppo(body, r_max)
    return min(full, 512) if quad else full


def _decay_command(args, quantity, target, two_sided):
    body = parse_body(args.body)
    spec = _spec(args)
    if args.rmin >= args.rmax:
        raise ConfigError("--rmin must be < --rmax")
    omega = None
    if quantity == POINTWISE:
        omega = np.eye(body.dim)[0] if args.omega is None else _vector(args.omega, body.dim, "omega")
        if not np.any(omega):
            raise ConfigError("--omega must be nonzero")
        omega = omega / np.linalg.norm(omega)
    ppo = auto_ppo(body, quantity, args.rmax) if args.ppo == "auto" else args.ppo
    method = args.fit
    if method == "auto":
        method = default_method(quantity, body.dim, is_radial(body))
    n_dir = getattr(args, "ndir", None)
    series = scan(
        body,
        quantity,
        args.rmin,
        args.rmax,
        ppo,
        omega=omega,
        spec=spec,
        n_dir=n_dir,
        seed=args.seed,
        jobs=args.jobs,
        scheme=(lambda R: SphereScheme.default(body.dim, R, args.seed, n_dir, body)),
    )
    header = _config(args, ppo=ppo, fit=method, quantity=quantity, target=target)
    _emit(args, series.to_csv(header))
    failed = int((~series.ok).sum())
    if failed:
        _say(args, f"warning: {failed} grid point(s) failed and were skipped")
    try:
        fit = fit_exponent(series, method)
    except InsufficientData as exc:
        _say(args, f"fit failed: {exc}")
        return EXIT_FIT
    gap = fit.exponent - target
    passed = abs(gap) <= args.tol if two_sided else gap <= args.tol
    band = f"+-{args.tol:g}" if two_sided else f"<= target + {args.tol:g}"
    _say(
        args,
        f"exponent={fit.exponent:.4f} target={target:g} residual={fit.residual_rms:.4f} "
        f"stderr={fit.stderr:.4f} method={method} points={fit.n_points} [{band}] {'PASS' if passed else 'FAIL'}",
    )
    return EXIT_OK if passed else EXIT_FIT


def cmd_ft(args):
    body = parse_body(args.body)
    xi = _vector(args.xi, body.dim, "xi")
    val = ft(body, xi, _spec(args), args.resonance_eps)
    v = val.value
    sign = "+" if v.imag >= 0 else "-"
    line = f"value={v.real:.17g}{sign}{abs(v.imag):.17g}i method={val.method} error={val.error:.3g}"
    if args.out:
        _emit(args, "# " + json.dumps(_config(args), sort_keys=True) + "\n" + line + "\n")
    print(line)
    return EXIT_OK


def cmd_avg_decay(args):
    d = parse_body(args.body).dim
    return _decay_command(args, L2_AVERAGE, -(d + 1) / 2.0, True)


def cmd_pointwise(args):
    return _decay_command(args, POINTWISE, -1.0, False)


def cmd_surface(args):
    d = parse_body(args.body).dim
    return _decay_command(args, SURFACE_AVERAGE, -(d - 1) / 2.0, True)


def cmd_lattice(args):
    body = parse_body(args.body)
    if args.tmin >= args.tmax:
        raise ConfigError("--tmin must be < --tmax")
    d = body.dim
    target = d - 2 + 2.0 / (d + 1)
    fit, ens = lattice_exponent_fit(body, args.tmin, args.tmax, args.ppo, args.nrot, args.seed, args.family, args.jobs)
    header = _config(args, target=target)
    _emit(args, ens.to_csv(header))
    if args.out:
        with open(args.out.rsplit(".", 1)[0] + "_summary.csv", "w") as fh:
            fh.write(ens.summary_csv(header))
    passed = fit.exponent <= target + args.tol
    _say(
        args,
        f"exponent={fit.exponent:.4f} target<={target:.4f} residual={fit.residual_rms:.4f} "
        f"stderr={fit.stderr:.4f} points={fit.n_points} {'PASS' if passed else 'FAIL'}",
    )
    return EXIT_OK if passed else EXIT_FIT


def cmd_check(args):
    results = run_suite(quick=args.quick, only=args.only)
    table = format_table(results)
    print(table)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table + "\n")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed and results else EXIT_CHECK


COMMANDS = {
    "ft": cmd_ft,
    "avg-decay": cmd_avg_decay,
    "pointwise": cmd_pointwise,
    "surface": cmd_surface,
    "lattice": cmd_lattice,
    "check": cmd_check,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (BodySpecError, ConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvexFTError, ValueError, ArithmeticError) as exc:
        print(f"evaluation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
