"""Command-line interface.

Subcommands: zeros | race | density | wass | construct | skewes | verify.
Long-form flags only.  A config file, when given, overrides flags, which
override defaults.  Exit codes: 0 pass, 1 invariant failure, 2 usage or
config error, 3 resource or coverage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .analysis import RunConfig, log_density, run_pipeline, skewes_search
from .chowla import (
    construct_q,
    construct_q_prime,
    load_certificate,
    save_certificate,
    verify_certificate,
)
from .errors import (
    ConfigError,
    CoverageError,
    RaceError,
    ResourceError,
    ZeroFileError,
)
from .primes import sieve
from .residues import characters, race_weight_qr_nr, race_weight_two_class
from .wasserstein import TorusOrbitSpec, kw_bound_table
from .zeros import ZeroStore, compute_zeros

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def default_cache_dir() -> Path | None:
    """Cache directory from PRIMERACE_CACHE, if set."""
    env = os.environ.get("PRIMERACE_CACHE")
    return Path(env) if env else None


def _weight_from_args(args):
    if getattr(args, "qr_nr", False):
        return race_weight_qr_nr(args.q)
    return race_weight_two_class(args.q, args.a, args.b)


def _cmd_zeros(args) -> int:
    store = ZeroStore()
    labels = args.label
    if not labels:
        labels = [
            chi.label
            for chi in characters(args.q)
            if not chi.is_principal and chi.conductor == chi.q
        ]
    for label in labels:
        chi = next(c for c in characters(args.q) if c.label == label)
        comp = compute_zeros(chi, args.T)
        store.add_computation(comp)
        flag = " (R-vM residual flagged)" if comp.rvm_flagged else ""
        print(f"q={args.q} label={label}: {len(comp.ordinates)} zeros up to T={args.T}{flag}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(f"# zeros up to T={args.T}\n")
            for q, label in store.keys():
                for gamma in store.ordinates(q, label):
                    fh.write(f"{q},{label},{gamma:.10f}\n")
        print(f"wrote {args.output}")
    cache_dir = args.cache_dir or default_cache_dir()
    if cache_dir:
        store.save_cache(cache_dir)
        print(f"cached under {cache_dir}")
    return EXIT_OK


def _cmd_race(args) -> int:
    config = RunConfig()
    for key in (
        "race",
        "q",
        "a",
        "b",
        "sieve_limit",
        "zero_source",
        "zero_T",
        "zero_path",
        "eli_A",
        "eli_L",
        "seed",
        "mc_samples",
        "output_dir",
    ):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if args.config:
        config = RunConfig.from_file(args.config, base=config)
    result = run_pipeline(config)
    for key in sorted(result.summary):
        print(f"{key}={result.summary[key]}")
    if not result.passed:
        print(f"invariant failures: {', '.join(result.invariant_failures)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_density(args) -> int:
    t = _weight_from_args(args)
    table = sieve(args.sieve_limit)
    est = log_density(table, t, math.log(args.sieve_limit))
    print(f"estimate={est.estimate:.12g}")
    print(f"skewes_hit={est.skewes_hit if est.skewes_hit is not None else 'none'}")
    print(f"sign_changes={';'.join(map(str, est.sign_changes)) or 'none'}")
    return EXIT_OK


def _cmd_wass(args) -> int:
    gammas = [float(v) for v in args.gammas.split(",")]
    spec = TorusOrbitSpec(gammas=gammas, x0=args.x0, X=args.X)
    hs = [int(v) for v in args.H.split(",")]
    sys.stdout.write(kw_bound_table(spec, hs))
    return EXIT_OK


def _cmd_construct(args) -> int:
    cert = construct_q(args.n, f_value=args.f_value, seed=args.seed, ceiling=args.ceiling)
    problems = verify_certificate(cert)
    if problems:
        print("certificate failed self-verification:", *problems, sep="\n  ", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"q_{args.n} = {cert.q} with {len(cert.factors)} factors (r_n={cert.r_n})")
    if args.output:
        save_certificate(cert, args.output)
        print(f"wrote {args.output}")
    if args.prime_variant:
        cert_p = construct_q_prime(cert, ceiling=args.ceiling)
        problems = verify_certificate(cert_p)
        if problems:
            print("q' certificate failed:", *problems, sep="\n  ", file=sys.stderr)
            return EXIT_INVARIANT
        print(f"q'_{args.n} = {cert_p.q}")
        if args.output:
            path = Path(args.output).with_suffix(".prime.cert")
            save_certificate(cert_p, path)
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_skewes(args) -> int:
    t = _weight_from_args(args)
    table = sieve(args.ceiling)
    result = skewes_search(table, t, args.ceiling)
    if result.found:
        print(f"x = {result.hit}")
    else:
        print(f"x > {result.lower_bound:.6g} (no crossing up to the ceiling)")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cert = load_certificate(args.certificate)
    problems = verify_certificate(cert)
    if problems:
        print("FAIL", *problems, sep="\n  ")
        return EXIT_INVARIANT
    print(f"OK: certificate for q = {cert.q} verifies")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primerace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zeros", help="compute zeros of Dirichlet L-functions")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--label", type=int, action="append", default=None)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--output", type=str, default=None)
    p.add_argument("--cache-dir", type=str, default=None)
    p.set_defaults(func=_cmd_zeros)

    p = sub.add_parser("race", help="run the full diagnostic pipeline")
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--race", choices=("two_class", "qr_nr"), default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--a", type=int, default=None)
    p.add_argument("--b", type=int, default=None)
    p.add_argument("--sieve-limit", dest="sieve_limit", type=int, default=None)
    p.add_argument("--zero-source", dest="zero_source", choices=("compute", "ingest"), default=None)
    p.add_argument("--zero-T", dest="zero_T", type=float, default=None)
    p.add_argument("--zero-path", dest="zero_path", type=str, default=None)
    p.add_argument("--eli-A", dest="eli_A", type=float, default=None)
    p.add_argument("--eli-L", dest="eli_L", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    p.add_argument("--output-dir", dest="output_dir", type=str, default=None)
    p.set_defaults(func=_cmd_race)

    p = sub.add_parser("density", help="exact logarithmic density of the lead set")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--b", type=int, default=3)
    p.add_argument("--qr-nr", dest="qr_nr", action="store_true")
    p.add_argument("--sieve-limit", dest="sieve_limit", type=int, default=10**6)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("wass", help="equidistribution upper-bound table")
    p.add_argument("--gammas", type=str, required=True, help="comma-separated frequencies")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--X", type=float, required=True)
    p.add_argument("--H", type=str, default="1,2,4,8")
    p.set_defaults(func=_cmd_wass)

    p = sub.add_parser("construct", help="build biased-modulus certificates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f-value", dest="f_value", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ceiling", type=int, default=10**6)
    p.add_argument("--prime-variant", dest="prime_variant", action="store_true")
    p.add_argument("--output", type=str, default=None)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("skewes", help="first sign change of the race")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--b", type=int, default=3)
    p.add_argument("--qr-nr", dest="qr_nr", action="store_true")
    p.add_argument("--ceiling", type=int, default=10**5)
    p.set_defaults(func=_cmd_skewes)

    p = sub.add_parser("verify", help="re-verify a construction certificate")
    p.add_argument("--certificate", type=str, required=True)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CoverageError, ResourceError) as exc:
        print(f"resource/coverage error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ZeroFileError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
