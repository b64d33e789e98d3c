"""Command-line entry point: ``multiplier-lab <subcommand> ...``.

Exit codes: 0 every check passed, 1 a check failed, 2 usage error, 3 invalid input or config.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__

log = logging.getLogger("multiplier_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_SEED = 20240611


@dataclass
class CommandResult:
    exit_code: int
    payload: dict
    summary: str = ""


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- parsing helpers

def _csv(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise InputError(f"empty list {text!r}")
    return items


def _rationals(text: str) -> list[Fraction]:
    try:
        return [Fraction(t) for t in _csv(text)]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational list: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in _csv(text)]
    except ValueError as exc:
        raise InputError(f"not an integer list: {text!r}") from exc


def _reals(text: str) -> list[float]:
    out = []
    for t in _csv(text):
        try:
            out.append(float(Fraction(t)) if "/" in t else float(t))
        except (ValueError, ZeroDivisionError):
            if t.startswith("sqrt"):
                out.append(math.sqrt(float(t[4:].strip("()"))))
            else:
                raise InputError(f"not a real number: {t!r}")
    return out


def _matrix(text: str) -> list[list[float]]:
    return [_reals(row) for row in text.split(";") if row.strip()]


def _frac_str(v) -> str:
    return str(Fraction(v)) if isinstance(v, (int, Fraction)) else repr(float(v))


# ---------------------------------------------------------------- subcommands

def cmd_solve_hash(args) -> CommandResult:
    from .rational_core import lift_hash, solve_moment_orthogonal

    hv = solve_moment_orthogonal(_rationals(args.q), _ints(args.exponents), args.forbid)
    lifted = None
    if args.lift:
        lifted = [_frac_str(v) for v in lift_hash(hv, _reals(args.lift) if not _all_rational(args.lift)
                                                  else _rationals(args.lift))]
    checks = [{"exponent": e, "value": str(v), "kind": "forbidden" if e == hv.forbidden_exponent else "zero"}
              for e, v in hv.checks()]
    ok = hv.verify()
    payload = {"tilde": [str(v) for v in hv.tilde], "integer": [int(v) for v in hv.tilde.integerize()],
               "lifted": lifted, "checks": checks, "pass": ok}
    summary = f"tilde = ({', '.join(payload['tilde'])})  " + ("all moments verified" if ok else "CHECK FAILED")
    return CommandResult(EXIT_OK if ok else EXIT_FAIL, payload, summary)


def _all_rational(text: str) -> bool:
    try:
        _rationals(text)
        return True
    except InputError:
        return False


def cmd_bohr(args) -> CommandResult:
    from .bohr import enumerate_bohr

    freqs = _reals(args.freqs)
    if not 0 < args.rho <= 0.5:
        raise InputError("rho must lie in (0, 1/2]")
    b = enumerate_bohr(freqs, args.rho, args.N)
    payload = {"members": list(b.members), "size": len(b.members), "bound": b.bound, "pass": b.passes}
    shown = ", ".join(map(str, b.members[:20])) + (" ..." if len(b.members) > 20 else "")
    summary = f"{len(b.members)} members (bound {b.bound}): {shown}"
    return CommandResult(EXIT_OK if b.passes else EXIT_FAIL, payload, summary)


def cmd_check_gamma(args) -> CommandResult:
    from .subspace_lab import build_gamma_family, check_nondegenerate

    alpha = Fraction(args.alpha) if _all_rational(args.alpha) else float(args.alpha)
    q = _rationals(args.q)
    gamma = build_gamma_family(q, alpha, args.d, args.n)
    cert = check_nondegenerate(gamma)
    payload = {"pass": cert.passes, "failing_chain": list(cert.failing_chain) if cert.failing_chain else None,
               "chains_checked": cert.chains_checked, "exact": cert.exact,
               "normals": [[_frac_str(v) for v in row] for row in gamma.normals]}
    summary = "non-degenerate" if cert.passes else f"degenerate: chain {payload['failing_chain']}"
    return CommandResult(EXIT_OK if cert.passes else EXIT_FAIL, payload, summary)


def _build_symbol(args):
    from . import symbols

    kind = args.kind
    if kind == "carleson":
        alpha = _reals(args.alpha or "6,3,2")
        return symbols.make_carleson_region(alpha, args.M if args.M is not None else math.inf)
    if kind == "paraproduct":
        return symbols.make_paraproduct_symbol(args.K_max)
    if kind == "sgn-paraproduct":
        return symbols.make_trilinear_sgn_symbol(symbols.make_paraproduct_symbol(args.K_max))
    if kind == "localized":
        inner = symbols.make_sign_symbol(_reals(args.alpha or "1,1"))
        return symbols.make_localized(inner, _reals(args.loc_alpha or "1,0"), _reals(args.loc_beta or "0,1"))
    if kind == "riesz-pair":
        if not args.A_matrix or not args.B_matrix:
            raise InputError("riesz-pair needs --A-matrix and --B-matrix")
        return symbols.make_riesz_pair_symbol(_matrix(args.A_matrix), _matrix(args.B_matrix), args.d)
    raise InputError(f"unknown symbol kind {kind}")


def cmd_build_symbol(args) -> CommandResult:
    from .symbols import check_mikhlin, mikhlin_grid, prune_grid

    m = _build_symbol(args)
    payload = {"descriptor": m.descriptor(), "sup_norm": m.sup_norm}
    code = EXIT_OK
    summary = json.dumps(m.descriptor(), sort_keys=True)
    if args.mikhlin:
        if m.arity > 3:
            raise InputError("Mikhlin sampling is limited to arity <= 3")
        gamma = m.singular if m.singular is not None else "origin"
        full = mikhlin_grid(m.arity, args.r_min, args.r_max, args.radii, args.dirs, args.seed)
        grid = prune_grid(full, gamma)
        if len(grid) == 0:
            raise InputError("every sample point lies on the singular set")
        rep = check_mikhlin(m, gamma, args.order, grid)
        rep["dropped"] = int(len(full) - len(grid))
        payload["mikhlin"] = rep
        worst = max(rep["worst_constants"].values())
        summary += f"\nMikhlin constants up to order {args.order}: max {worst:.4g}"
        if not math.isfinite(worst):
            code = EXIT_FAIL
    return CommandResult(code, payload, summary)


def cmd_verify_kernel_lemma(args) -> CommandResult:
    from . import engine
    from .witnesses import Bump, GaussianBump

    alpha = _reals(args.alpha)
    beta = _reals(args.beta)
    if len(alpha) != len(beta):
        raise InputError("alpha and beta need the same length")
    phi = GaussianBump(args.sigma) if args.bump == "gaussian" else Bump(args.h)
    kern = engine.hilbert_kernel() if args.kernel == "hilbert" else engine.riesz_line_kernel(args.d)
    k0 = args.k0
    if k0 is None:
        k0 = engine.calibrate_k0(phi, alpha, beta, args.A, kern, kern, args.theta)
    rep = engine.verify_kernel_lemma(phi, alpha, beta, args.A, range(k0, args.kmax + 1), kern, kern, args.theta, k0)
    payload = rep.as_dict()
    bad = [r.k for r in rep.rows if not r.passes]
    summary = (f"D = {rep.D:.6g}, k in [{k0}, {args.kmax}]: "
               + ("all rows pass" if rep.passes else f"failing k: {bad[:10]}"))
    return CommandResult(EXIT_OK if rep.passes else EXIT_FAIL, payload, summary)


def cmd_run_blowup(args) -> CommandResult:
    from .harness import ExperimentConfig, run_blowup, write_outputs

    cfg = ExperimentConfig.load(args.config)
    out = args.out or cfg.output
    record = run_blowup(cfg)
    payload = record.to_dict()
    if out:
        payload["files"] = write_outputs(record, out, plot=args.plot or cfg.plot)
    lines = [f"N={n:<4d} R={r:.6g}" for n, r in zip(record.N, record.ratios)]
    if record.fit:
        lines.append(f"fit: slope {record.fit['slope']:.4g}, residual {record.fit['residual']:.3g}")
    lines += [f"{k}: {'pass' if v else 'FAIL'}" for k, v in record.checks.items()]
    return CommandResult(EXIT_OK if record.passes else EXIT_FAIL, payload, "\n".join(lines))


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--json", action="store_true", help="emit machine-readable JSON on stdout")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"seed for sampled grids (default {DEFAULT_SEED})")
    g.add_argument("--threads", type=int, default=None, help="worker threads (default: logical cores)")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="multiplier-lab",
                                     description="Hash vectors, Bohr sets, symbols, kernel checks and blow-up runs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>")
    sub.required = True

    p = sub.add_parser("solve-hash", parents=[common], help="solve a moment-orthogonality system exactly")
    p.add_argument("--q", required=True, help="distinct nonzero rationals, comma separated (e.g. 1,2,3 or 1/2,3)")
    p.add_argument("--exponents", required=True, help="exponents whose moments must vanish, comma separated")
    p.add_argument("--forbid", type=int, default=None, help="exponent whose moment must stay nonzero")
    p.add_argument("--lift", default=None, help="scale vector a; reports #_j = tilde_j / a_j^2")
    p.set_defaults(func=cmd_solve_hash)

    p = sub.add_parser("bohr", parents=[common], help="enumerate a Bohr set")
    p.add_argument("--freqs", required=True, help="frequencies, comma separated (fractions and sqrt(k) allowed)")
    p.add_argument("--rho", type=float, required=True, help="radius in (0, 1/2]")
    p.add_argument("--N", type=int, required=True, help="horizon")
    p.set_defaults(func=cmd_bohr)

    p = sub.add_parser("check-gamma", parents=[common], help="certify non-degeneracy of a subspace family")
    p.add_argument("--q", required=True, help="distinct nonzero rationals, comma separated")
    p.add_argument("--alpha", required=True, help="family parameter (rational or real)")
    p.add_argument("--d", type=int, required=True, help="number of normals")
    p.add_argument("--n", type=int, required=True, help="ambient dimension")
    p.set_defaults(func=cmd_check_gamma)

    p = sub.add_parser("build-symbol", parents=[common], help="construct a symbol and print its descriptor")
    p.add_argument("--kind", required=True, choices=["carleson", "paraproduct", "sgn-paraproduct", "localized",
                                                     "riesz-pair"])
    p.add_argument("--alpha", default=None, help="direction vector (carleson, localized inner sign)")
    p.add_argument("--M", type=float, default=None, help="frequency cutoff on the last variable (carleson)")
    p.add_argument("--K-max", dest="K_max", type=int, default=8, help="number of scales (paraproduct kinds)")
    p.add_argument("--loc-alpha", default=None, help="localization direction for the plateau (localized)")
    p.add_argument("--loc-beta", default=None, help="localization direction for the ramp (localized)")
    p.add_argument("--A-matrix", dest="A_matrix", default=None, help="rows separated by ';' (riesz-pair)")
    p.add_argument("--B-matrix", dest="B_matrix", default=None, help="rows separated by ';' (riesz-pair)")
    p.add_argument("--d", type=int, default=1, help="Riesz dimension (riesz-pair)")
    p.add_argument("--mikhlin", action="store_true", help="also sample Mikhlin constants")
    p.add_argument("--order", type=int, default=2, help="maximal derivative order for --mikhlin")
    p.add_argument("--r-min", dest="r_min", type=float, default=0.05, help="smallest sample radius")
    p.add_argument("--r-max", dest="r_max", type=float, default=2.0 ** 9, help="largest sample radius")
    p.add_argument("--radii", type=int, default=40, help="number of radii")
    p.add_argument("--dirs", type=int, default=64, help="number of directions")
    p.set_defaults(func=cmd_build_symbol)

    p = sub.add_parser("verify-kernel-lemma", parents=[common], help="check the kernel-block lower bound")
    p.add_argument("--A", type=float, required=True, help="block length")
    p.add_argument("--k0", type=int, default=None, help="first k (default: calibrated)")
    p.add_argument("--kmax", type=int, required=True, help="last k")
    p.add_argument("--alpha", required=True, help="t coefficients, comma separated")
    p.add_argument("--beta", required=True, help="s coefficients, comma separated")
    p.add_argument("--kernel", choices=["hilbert", "riesz"], default="hilbert")
    p.add_argument("--d", type=int, default=2, help="dimension for --kernel riesz")
    p.add_argument("--theta", type=float, default=0.5, help="margin in (0, 1)")
    p.add_argument("--bump", choices=["spline", "gaussian"], default="gaussian")
    p.add_argument("--h", type=float, default=0.5, help="spectral half-width of the spline bump")
    p.add_argument("--sigma", type=float, default=1.0, help="width of the gaussian bump")
    p.set_defaults(func=cmd_verify_kernel_lemma)

    p = sub.add_parser("run-blowup", parents=[common], help="run a blow-up experiment from a config file")
    p.add_argument("--config", required=True, help="JSON or YAML file with ExperimentConfig keys")
    p.add_argument("--out", default=None, help="output directory (overrides the config's output)")
    p.add_argument("--plot", action="store_true", help="also write ratios.svg")
    p.set_defaults(func=cmd_run_blowup)
    return parser


def dispatch(argv: list[str] | None = None) -> CommandResult:
    from . import engine
    from .harness import ConfigError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return CommandResult(code, {"error": "usage"}, "")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        return CommandResult(EXIT_INPUT, {"error": "--threads must be >= 1"}, "error: --threads must be >= 1")
    if args.threads is not None:
        engine.set_threads(args.threads)
    np.random.seed(args.seed % 2 ** 32)
    try:
        return args.func(args)
    except ConfigError as exc:
        return CommandResult(EXIT_INPUT, {"error": str(exc)}, f"invalid config: {exc}")
    except (InputError, ValueError, TypeError, ZeroDivisionError) as exc:
        return CommandResult(EXIT_INPUT, {"error": str(exc)}, f"error: {exc}")


def _dumps(payload) -> str:
    def default(o):
        if isinstance(o, Fraction):
            return str(o)
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, (set, frozenset, tuple)):
            return list(o)
        raise TypeError(type(o).__name__)
    return json.dumps(payload, default=default, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    res = dispatch(argv)
    wants_json = "--json" in argv
    if res.payload.get("error") == "usage":
        return res.exit_code
    if wants_json:
        print(_dumps(res.payload))
    elif res.summary:
        stream = sys.stderr if res.exit_code == EXIT_INPUT else sys.stdout
        print(res.summary, file=stream)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
