"""Command line entry point: ``resonances <subcommand> ...``.

Exit status: 0 success, 1 spectrum mismatch beyond tolerance, 2 invalid
input, 3 eigensolver non-convergence.
"""

from __future__ import annotations

import argparse
import cmath
import io
import math
import re
import sys
import warnings

import numpy as np

from . import report
from .analysis import (
    compactness_violation,
    correlate,
    generic_observable,
    hs_norm,
    unboundedness_witness,
)
from .blaschke import BlaschkeParam, alpha
from .eigensolver import EigensolverError
from .lattice import SpaceConfig, WeightFamily, block_indices, deg1, weight
from .operators import MapSpec, windowed_matrix
from .spectral import SpectrumMultiset, match, spectrum, theoretical_terms

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_EIGEN = 0, 1, 2, 3

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_POLAR = re.compile(rf"^(?P<r>{_NUM})@(?P<t>{_NUM})(?P<unit>rad|pi)$")


class UsageError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``RE+IMi``, ``r@THETArad`` or ``r@Xpi`` (angle in units of pi)."""
    s = text.strip().replace(" ", "")
    m = _POLAR.match(s)
    if m:
        r, t = float(m["r"]), float(m["t"])
        if m["unit"] == "pi":
            t *= math.pi
        return cmath.rect(r, t)
    if "@" in s:
        raise ValueError(f"polar value {text!r} needs an angle unit: r@THETArad or r@Xpi")
    if s and "j" not in s.lower():
        try:
            return complex(s[:-1] + "j" if s.endswith("i") else s)
        except ValueError:
            pass
    raise ValueError(f"cannot parse complex value {text!r}; use RE+IMi, r@THETArad or r@Xpi")


# -- argument collection -----------------------------------------------------------


def _add_map(p, maps=("b", "t", "tt", "bk", "tk")):
    p.add_argument("--map", choices=maps, default=maps[0])
    p.add_argument("--lambda", dest="lam", default="0.5")
    p.add_argument("--mu", default=None)
    p.add_argument("--K", type=int, default=None)


def _add_space(p, weights="deg1"):
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--weights", choices=["deg1", "symmetric", "degphi", "fr"], default=weights)


def _add_out(p):
    p.add_argument("--json", default=None, help="JSON output path ('-' for stdout)")
    p.add_argument("--csv", default=None, help="CSV output path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resonances", description="Resonances of explicit analytic Anosov torus maps.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="block spectra against the closed forms")
    _add_map(p)
    p.add_argument("--kmin", type=int, default=None)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--floor", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--svg", default=None)
    p.add_argument("--dump-matrix", default=None, help="write the dense window matrix (.csv or binary)")
    _add_out(p)

    p = sub.add_parser("hsnorm", help="Hilbert-Schmidt column sums")
    _add_map(p, ("b", "t", "bk", "tk", "tt"))
    _add_space(p)
    p.add_argument("--radius", type=int, default=30)
    p.add_argument("--order", type=int, default=60)
    _add_out(p)

    p = sub.add_parser("compactness", help="column ratios of T_lambda along n")
    p.add_argument("--lambda", dest="lam", default="0.5")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--nmax", type=int, default=100)
    p.add_argument("--order", type=int, default=60)
    p.add_argument("--threshold", type=float, default=None, help="also report an unboundedness witness")
    _add_space(p, weights="symmetric")
    _add_out(p)

    p = sub.add_parser("correlate", help="correlation decay for generic observables")
    _add_map(p)
    p.add_argument("--mmax", type=int, default=20)
    p.add_argument("--radius", type=int, default=40)
    p.add_argument("--order", type=int, default=60)
    p.add_argument("--drop-tol", type=float, default=1e-16)
    p.add_argument("--window", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", default=None)
    _add_out(p)

    p = sub.add_parser("coeffs", help="Taylor coefficients of a Blaschke power")
    p.add_argument("--lambda", dest="lam", default="0.5")
    p.add_argument("--power", type=int, default=1)
    p.add_argument("--order", type=int, default=20)
    _add_out(p)

    p = sub.add_parser("lattice", help="degree blocks and weights")
    p.add_argument("--kmin", type=int, default=-3)
    p.add_argument("--kmax", type=int, default=3)
    _add_space(p)
    _add_out(p)
    return ap


def _collect_map(args, errors):
    lam = mu = None
    try:
        lam = parse_complex(args.lam)
        BlaschkeParam(lam)
    except ValueError as exc:
        errors.append(f"--lambda: {exc}")
        lam = None
    kind = getattr(args, "map", "b")
    if kind == "tt":
        if args.mu is None:
            errors.append("--mu is required for --map tt")
        else:
            try:
                mu = parse_complex(args.mu)
                BlaschkeParam(mu)
            except ValueError as exc:
                errors.append(f"--mu: {exc}")
                mu = None
    elif getattr(args, "mu", None) is not None:
        errors.append(f"--mu only applies to --map tt, not {kind}")
    K = args.K if getattr(args, "K", None) is not None else 1
    if K < 1:
        errors.append(f"--K must be a positive integer, got {K}")
    if getattr(args, "K", None) not in (None, 1) and kind in ("b", "t"):
        errors.append(f"--K needs --map bk or tk, not {kind}")
    if errors or lam is None:
        return None, lam, mu
    if kind == "b":
        spec = MapSpec.B(lam)
    elif kind == "t":
        spec = MapSpec.T(lam)
    elif kind == "bk":
        spec = MapSpec.BK(lam, K)
    elif kind == "tk":
        spec = MapSpec.TK(lam, K)
    elif K == 1:
        spec = MapSpec.TT(lam, mu)
    else:
        spec = MapSpec.compose(MapSpec.TK(lam, K), MapSpec.TK(mu, K))
    return spec, lam, mu


def _collect_space(args, errors):
    family = {
        "deg1": WeightFamily.DEG1,
        "symmetric": WeightFamily.DEG1,
        "degphi": WeightFamily.DEGPHI,
        "fr": WeightFamily.SYMMETRIC_FR,
    }[args.weights]
    phi = args.phi
    if phi is None:
        phi = 1.0
    try:
        return SpaceConfig(a=args.a, phi=phi, weight_family=family)
    except ValueError as exc:
        errors.append(str(exc))
        return None


def _fail(errors):
    raise UsageError("invalid arguments: " + "; ".join(errors))


def _emit(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(args, obj):
    if args.json:
        _emit(args.json, report.dumps(obj))


def _emit_csv(args, header, rows, default_stdout=True):
    path = args.csv or ("-" if default_stdout and not args.json else None)
    if path:
        buf = io.StringIO()
        report.write_csv(buf, header, rows)
        _emit(path, buf.getvalue())


def _space_dict(cfg):
    if cfg is None:
        return {}
    return {"a": cfg.a, "phi": cfg.phi, "weights": cfg.weight_family.value}


# -- subcommands -----------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    errors = []
    spec, lam, mu = _collect_map(args, errors)
    kmin = -args.kmax if args.kmin is None else args.kmin
    if kmin > args.kmax:
        errors.append(f"empty degree range [{kmin}, {args.kmax}]")
    if max(abs(kmin), abs(args.kmax)) > 200:
        errors.append("degree range is capped at |k| <= 200")
    if not args.tol > 0:
        errors.append(f"--tol must be positive, got {args.tol}")
    if args.floor < 0:
        errors.append(f"--floor must be non-negative, got {args.floor}")
    if errors:
        _fail(errors)
    floor = args.floor
    computed = spectrum(spec, (kmin, args.kmax), modulus_floor=floor)
    computed_nz = computed.nonzero()
    kbound = max(abs(kmin), abs(args.kmax))
    try:
        terms = theoretical_terms(spec, kbound)
    except (ValueError, AttributeError):
        terms = None
    theoretical = None
    rep = None
    if terms is not None:
        items = [(v, mult, None) for v, mult, d in terms if kmin <= d <= args.kmax and v != 0]
        items = [it for it in items if abs(it[0]) >= floor]
        theoretical = SpectrumMultiset.from_values(items, floor)
        rep = match(computed_nz, theoretical, args.tol)
    if args.dump_matrix:
        A, _ = windowed_matrix(spec, kmin, args.kmax)
        if args.dump_matrix.endswith(".csv"):
            report.write_matrix_csv(args.dump_matrix, A)
        else:
            report.write_matrix_bin(args.dump_matrix, A)
    space = {"k_min": kmin, "k_max": args.kmax, "floor": floor}
    _emit_json(args, report.spectrum_report(spec, space, computed_nz, theoretical, rep))
    header, rows = report.spectrum_csv_rows(computed_nz, theoretical)
    _emit_csv(args, header, rows)
    if args.svg:
        from .plotting import write_spectrum_svg

        params = {"λ": lam} if mu is None else {"λ": lam, "μ": mu}
        write_spectrum_svg(args.svg, computed_nz, theoretical, params, title=spec.kind.name)
    if rep is not None and not rep.ok:
        sys.stderr.write(
            f"mismatch: {len(rep.missing_theoretical)} closed-form values unmatched, "
            f"{len(rep.spurious_computed)} computed values unmatched at tol {args.tol}\n"
        )
        for v in rep.missing_theoretical:
            sys.stderr.write(f"  missing {report.fmt(v.real)} {report.fmt(v.imag)}\n")
        for v in rep.spurious_computed:
            sys.stderr.write(f"  spurious {report.fmt(v.real)} {report.fmt(v.imag)}\n")
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_hsnorm(args) -> int:
    errors = []
    spec, _, _ = _collect_map(args, errors)
    cfg = _collect_space(args, errors)
    if args.radius < 0:
        errors.append(f"--radius must be non-negative, got {args.radius}")
    if args.order < 0:
        errors.append(f"--order must be non-negative, got {args.order}")
    if errors:
        _fail(errors)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = hs_norm(spec, cfg, args.radius, args.order)
    for note in res.warnings:
        sys.stderr.write(f"warning: {note}\n")
    rows = []
    for (m, n), v in sorted(res.per_column.items()):
        bound = math.exp(-res.delta * (abs(m) + abs(n))) if res.delta else float("nan")
        rows.append((m, n, v, bound))
    _emit_json(args, {
        "schema": report.SCHEMA,
        "map": spec.describe(),
        "space": _space_dict(cfg),
        "radius": args.radius,
        "value": res.value,
        "delta": res.delta,
        "bound_sum": res.bound,
        "within_bound": res.bound is None or res.value <= res.bound,
    })
    _emit_csv(args, ["m", "n", "ratio_sq", "delta_bound"], rows)
    return EXIT_OK


def cmd_compactness(args) -> int:
    errors = []
    try:
        lam = parse_complex(args.lam)
        BlaschkeParam(lam)
        if lam == 0:
            errors.append("--lambda must be non-zero")
    except ValueError as exc:
        errors.append(f"--lambda: {exc}")
    cfg = _collect_space(args, errors)
    if args.m < 1:
        errors.append(f"--m must be a positive integer, got {args.m}")
    if args.nmax < 1:
        errors.append(f"--nmax must be positive, got {args.nmax}")
    if errors:
        _fail(errors)
    ns = list(range(1, args.nmax + 1))
    symmetric = args.weights in ("symmetric", "deg1")
    ratios = compactness_violation(lam, args.m, ns, cfg, args.order, require_symmetric=symmetric)
    lower = abs(lam) ** args.m
    out = {
        "schema": report.SCHEMA,
        "lambda": {"re": lam.real, "im": lam.imag},
        "m": args.m,
        "space": _space_dict(cfg),
        "lower_bound": lower,
        "min_ratio": min(ratios),
    }
    if args.threshold is not None:
        if cfg.weight_family is not WeightFamily.DEGPHI:
            _fail(["--threshold needs --weights degphi"])
        m, n, r = unboundedness_witness(lam, cfg.a, cfg.phi, args.threshold)
        out["witness"] = {"m": m, "n": n, "ratio": r}
    _emit_json(args, out)
    _emit_csv(args, ["n", "ratio", "lower_bound"], [(n, r, lower) for n, r in zip(ns, ratios)])
    return EXIT_OK


def cmd_correlate(args) -> int:
    errors = []
    spec, lam, _ = _collect_map(args, errors)
    if args.mmax < 4:
        errors.append(f"--mmax must be at least 4, got {args.mmax}")
    if args.radius < 7:
        errors.append(f"--radius must cover the observables (>= 7), got {args.radius}")
    if args.window and not 0 <= args.window[0] < args.window[1] <= args.mmax:
        errors.append(f"--window {args.window} must lie inside [0, {args.mmax}]")
    if errors:
        _fail(errors)
    rng = np.random.default_rng(args.seed)
    f = generic_observable(rng)
    g = generic_observable(rng)
    fit = correlate(spec, f, g, args.mmax, args.radius, args.order, args.drop_tol, window=args.window)
    rows = [(m, v.real, v.imag, abs(v), t) for (m, v), t in zip(fit.rates, fit.tail_weights)]
    _emit_json(args, {
        "schema": report.SCHEMA,
        "map": spec.describe(),
        "seed": args.seed,
        "fitted_rate": fit.fitted_rate,
        "fitted_log_slope": fit.fitted_log_slope,
        "window": list(fit.window),
        "residual": fit.residual,
        "starved_steps": [m for (m, _), s in zip(fit.rates, fit.starved) if s],
    })
    _emit_csv(args, ["m", "re", "im", "abs", "tail_weight"], rows)
    if args.svg:
        from .plotting import write_decay_svg

        write_decay_svg(args.svg, fit)
    return EXIT_OK


def cmd_coeffs(args) -> int:
    errors = []
    try:
        lam = parse_complex(args.lam)
        BlaschkeParam(lam)
    except ValueError as exc:
        errors.append(f"--lambda: {exc}")
    if args.order < 0:
        errors.append(f"--order must be non-negative, got {args.order}")
    if errors:
        _fail(errors)
    a = alpha(lam, args.power, args.order)
    _emit_json(args, {
        "schema": report.SCHEMA,
        "lambda": {"re": lam.real, "im": lam.imag},
        "power": args.power,
        "coefficients": [{"k": k, "re": v.real, "im": v.imag} for k, v in enumerate(a)],
    })
    _emit_csv(args, ["k", "re", "im"], [(k, v.real, v.imag) for k, v in enumerate(a)])
    return EXIT_OK


def cmd_lattice(args) -> int:
    errors = []
    cfg = _collect_space(args, errors)
    if args.kmin > args.kmax:
        errors.append(f"empty degree range [{args.kmin}, {args.kmax}]")
    if errors:
        _fail(errors)
    rows = []
    for k in range(args.kmin, args.kmax + 1):
        for m, n in block_indices(k):
            rows.append((k, m, n, deg1((m, n)), weight((m, n), cfg)))
    _emit_json(args, {
        "schema": report.SCHEMA,
        "space": _space_dict(cfg),
        "blocks": [{"k": k, "m": m, "n": n, "weight": w} for k, m, n, _, w in rows],
    })
    _emit_csv(args, ["k", "m", "n", "deg1", "weight"], rows)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "hsnorm": cmd_hsnorm,
    "compactness": cmd_compactness,
    "correlate": cmd_correlate,
    "coeffs": cmd_coeffs,
    "lattice": cmd_lattice,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except EigensolverError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_EIGEN
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
