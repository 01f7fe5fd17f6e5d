"""Command-line entry point: ``freespec <command> [options]``.

Exit codes: 0 success, 2 unreadable input, 3 invalid dimensions or
arguments, 4 convolution/inversion failure, 5 too many combinations.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import DataMatrix, covariance, sample_gue, sample_lue
from .events import (PV_AMPLITUDE, WT_AMPLITUDE, decompose, scene_config,
                     signature, simulate_scene)
from .exceptions import (ConvolutionError, FreeSpecError, InversionError,
                         TooManyCombosError, UnreadableInputError)
from .freeconv import free_convolve_density, wishart_sum_reference
from .serialize import (decomposition_to_dict, density_to_dict, read_json,
                        read_matrix_csv, signature_from_dict, signature_to_dict,
                        transform_columns, transform_to_dict, write_json,
                        write_matrix_csv, write_table_csv)
from .spectral import (DEFAULT_BINS, LawSpec, eigenvalues, esd_histogram,
                       kolmogorov_distance, law_density, law_support)
from .xform import ContourSpec, GSource, r_contour

log = logging.getLogger("freespec")

EXIT_OK, EXIT_INPUT, EXIT_DIM, EXIT_CONV, EXIT_COMBOS = 0, 2, 3, 4, 5
DEFAULT_SEED = 0


class InputError(Exception):
    """Unreadable or missing input file."""


def _read_panel(path) -> DataMatrix:
    if not Path(path).is_file():
        raise InputError(f"cannot read input {path}")
    try:
        return read_matrix_csv(path)
    except (OSError, UnicodeDecodeError, UnreadableInputError) as exc:
        raise InputError(f"cannot read input {path}: {exc}") from None


def _read_signature(path, contour):
    if not Path(path).is_file():
        raise InputError(f"cannot read input {path}")
    if str(path).endswith(".csv"):
        return signature(_read_panel(path), contour, id=Path(path).stem)
    try:
        return signature_from_dict(read_json(path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read signature {path}: {exc}") from None


def _law(args) -> LawSpec:
    if args.law == "semicircle":
        return LawSpec.semicircle(args.sigma2)
    if args.law == "mp":
        return LawSpec.mp(args.c, args.sigma2)
    return LawSpec.wishart_sum(args.k, args.c, args.sigma2)


def _contour(args) -> ContourSpec:
    return ContourSpec(args.xmin, args.xmax, args.nodes, args.eps)


def _out_format(args):
    if args.format:
        return args.format
    return "csv" if str(args.out).endswith(".csv") else "json"


def _run_meta(args):
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "out", "config", "log_level") and not callable(v)}
    digest = hashlib.sha256(json.dumps(params, sort_keys=True, default=str).encode()).hexdigest()
    return {"version": __version__, "seed": args.seed, "config_digest": digest[:16],
            "command": args.command}


def _dims_from_law(args):
    n = args.n
    t = args.t if args.t else int(round(n / args.c))
    return n, t


def cmd_esd(args):
    meta = _run_meta(args)
    overlay = None
    if args.input:
        data = _read_panel(args.input)
        spec = eigenvalues(covariance(data, standardize=args.standardize))
        law = LawSpec.mp(spec.c, args.sigma2) if spec.c and spec.c <= 1 else None
        if data.n > data.t:
            raise FreeSpecError(f"panel has N={data.n} > T={data.t}")
    else:
        if args.law == "semicircle":
            spec = eigenvalues(sample_gue(args.n, args.seed))
        else:
            n, t = _dims_from_law(args)
            spec = eigenvalues(sample_lue(n, t, args.seed))
        law = _law(args)
    hist = esd_histogram(spec, args.bins)
    if law is not None and (args.overlay or not args.input):
        overlay = law_density(law, hist.grid)
        meta["law"] = law.kind
        meta["kolmogorov_distance"] = kolmogorov_distance(spec, law)
    meta["n"] = int(spec.n)
    if _out_format(args) == "csv":
        cols = {"grid": hist.grid, "density": hist.density}
        if overlay is not None:
            cols["overlay"] = overlay
        write_table_csv(args.out, cols)
    else:
        write_json(args.out, density_to_dict(hist, overlay, meta))
    return EXIT_OK


def cmd_transform(args):
    meta = _run_meta(args)
    contour = _contour(args)
    if args.input:
        data = _read_panel(args.input)
        g = GSource.empirical(eigenvalues(covariance(data, standardize=args.standardize)),
                              Path(args.input).stem)
    elif args.n:
        if args.law == "semicircle":
            g = GSource.empirical(eigenvalues(sample_gue(args.n, args.seed)), "gue")
        else:
            n, t = _dims_from_law(args)
            g = GSource.empirical(eigenvalues(sample_lue(n, t, args.seed)), "lue")
    else:
        g = GSource.analytic(_law(args), args.law)
    sig = r_contour(g, contour)
    if _out_format(args) == "csv":
        write_table_csv(args.out, transform_columns(sig))
    else:
        write_json(args.out, transform_to_dict(sig, meta))
    return EXIT_OK


def cmd_convolve(args):
    meta = _run_meta(args)
    if args.spectra:
        sources = [_read_signature(p, ContourSpec()).g for p in args.spectra]
        k = len(sources)
    else:
        k = args.k
        if args.analytic:
            src = GSource.analytic(LawSpec.mp(args.c))
            sources = [src] * k
        else:
            p = int(round(args.n / args.c))
            sources = [GSource.empirical(eigenvalues(sample_lue(args.n, p, args.seed + i)), f"w{i}")
                       for i in range(k)]
    if len(sources) < 2:
        raise FreeSpecError("convolution needs at least two sources")
    dens = free_convolve_density(*sources, eps_out=args.eps_out)
    meta["failed_nodes"] = len(dens.meta["failed_nodes"])
    meta["eps_out"] = dens.meta["eps_out"]
    overlay = None
    if args.overlay and not args.spectra:
        overlay = wishart_sum_reference(k, args.c, dens.grid)
        lo, hi = law_support(LawSpec.wishart_sum(k, args.c))
        pad = 0.05 * (hi - lo)
        inner = (dens.grid > lo + pad) & (dens.grid < hi - pad)
        meta["sup_error_interior"] = float(np.max(np.abs(dens.density - overlay)[inner]))
    if _out_format(args) == "csv":
        cols = {"grid": dens.grid, "density": dens.density}
        if overlay is not None:
            cols["overlay"] = overlay
        write_table_csv(args.out, cols)
    else:
        write_json(args.out, density_to_dict(dens, overlay, meta))
    return EXIT_OK


def cmd_simulate(args):
    cfg = scene_config(args.scene, seed=args.seed, pv_amplitude=args.pv_amplitude,
                       wt_amplitude=args.wt_amplitude, noise_sd=args.noise_sd,
                       n=args.n, t=args.t)
    log.info("scene %s with %d sources", args.scene, len(cfg.sources))
    write_matrix_csv(args.out, simulate_scene(cfg))
    return EXIT_OK


def cmd_signature(args):
    meta = _run_meta(args)
    data = _read_panel(args.input)
    sig = signature(data, _contour(args), id=args.id or Path(args.input).stem)
    write_json(args.out, signature_to_dict(sig, meta))
    return EXIT_OK


def cmd_decompose(args):
    meta = _run_meta(args)
    if not args.library:
        raise FreeSpecError("library is empty")
    contour = _contour(args)
    observed = _read_signature(args.observed, contour)
    library = [_read_signature(p, contour) for p in args.library]
    res = decompose(observed, library, args.k, real_only=args.real_only,
                    normalize=args.normalize, noise_floor=None if args.raw else "auto")
    write_json(args.out, decomposition_to_dict(res, meta))
    return EXIT_OK


def _add_law_args(p, default_law="mp"):
    p.add_argument("--law", choices=["semicircle", "mp", "free-wishart-sum"], default=default_law)
    p.add_argument("--c", type=float, default=1 / 3, help="ratio N/T")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--t", type=int, default=None)


def _add_contour_args(p):
    d = ContourSpec()
    p.add_argument("--xmin", type=float, default=d.x_min)
    p.add_argument("--xmax", type=float, default=d.x_max)
    p.add_argument("--nodes", type=int, default=d.nodes)
    p.add_argument("--eps", type=float, default=d.eps)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freespec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="64-bit seed (falls back to $SPECTRUM_SEED, then 0)")
    common.add_argument("--out", required=True)
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--config", default=None, help="INI file with option defaults")
    common.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("esd", parents=[common], help="empirical spectral density")
    _add_law_args(p)
    p.add_argument("--input")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--overlay", action="store_true")
    p.set_defaults(func=cmd_esd)

    p = sub.add_parser("transform", parents=[common], help="G and R along a contour")
    _add_law_args(p)
    _add_contour_args(p)
    p.add_argument("--input")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("convolve", parents=[common], help="free additive convolution")
    p.add_argument("--wishart-sum", action="store_true")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--analytic", action="store_true", help="use the closed-form M-P law per source")
    p.add_argument("--spectra", nargs="*", default=None, help="signature JSON files to convolve")
    p.add_argument("--eps-out", type=float, default=None)
    p.add_argument("--overlay", action="store_true")
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("simulate", parents=[common], help="synthetic sensor scene")
    p.add_argument("--scene", default="C", choices=["A", "B", "C", "0"])
    p.add_argument("--n", type=int, default=33)
    p.add_argument("--t", type=int, default=1440)
    p.add_argument("--pv-amplitude", type=float, default=PV_AMPLITUDE)
    p.add_argument("--wt-amplitude", type=float, default=WT_AMPLITUDE)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("signature", parents=[common], help="event signature of a panel")
    _add_contour_args(p)
    p.add_argument("--input", required=True)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("decompose", parents=[common], help="rank atom combinations")
    _add_contour_args(p)
    p.add_argument("--observed", required=True, help="panel CSV or signature JSON")
    p.add_argument("--library", nargs="*", default=[])
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--raw", action="store_true", help="no noise-floor correction")
    p.add_argument("--real-only", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_decompose)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from the [freespec] and [<command>] INI sections."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cp = configparser.ConfigParser()
    if not cp.read(args.config, encoding="utf-8"):
        raise InputError(f"cannot read config {args.config}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    values = {}
    for section in ("freespec", args.command):
        if cp.has_section(section):
            values.update(cp.items(section))
    types = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        action = types.get(dest)
        if action is None:
            continue
        if action.nargs in ("*", "+"):
            defaults[dest] = raw.split()
        elif action.type is not None:
            defaults[dest] = action.type(raw)
        elif action.const is not None or isinstance(action.default, bool):
            defaults[dest] = cp.BOOLEAN_STATES.get(raw.lower(), False)
        else:
            defaults[dest] = raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except InputError as exc:
        print(f"freespec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.seed is None:
        env = os.environ.get("SPECTRUM_SEED")
        args.seed = int(env) if env else DEFAULT_SEED
    meta = _run_meta(args)
    log.info("freespec %s %s seed=%d config=%s", meta["version"], args.command,
             args.seed, meta["config_digest"])
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except TooManyCombosError as exc:
        log.error("%s", exc)
        return EXIT_COMBOS
    except (ConvolutionError, InversionError) as exc:
        log.error("%s", exc)
        return EXIT_CONV
    except FreeSpecError as exc:
        log.error("%s", exc)
        return EXIT_DIM


if __name__ == "__main__":
    sys.exit(main())
