"""Command-line interface: ``condgof {test,fit,sample,power,type1}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

import numpy as np

from . import distributions as dist
from . import stats as st
from .conditional import (
    sample_conditional_binomial,
    sample_conditional_geometric,
    sample_conditional_negbinomial,
    sample_conditional_poisson,
    sample_conditional_powerseries_mh,
)
from .datasets import FIXTURES, load_fixture, read_dataset
from .engine import StudySpec, conditional_p_values, make_rng, run_power_study
from .errors import CondGofError, DegenerateSampleError, EstimationError, ParseError

log = logging.getLogger("condgof")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ESTIMATION = 3
EXIT_DEGENERATE = 4

ALTERNATIVES = {
    "pois": (1, lambda a: dist.Poisson(a[0])),
    "bin": (2, lambda a: dist.Binomial(int(a[0]), a[1])),
    "nb": (2, lambda a: dist.NegBinomial(int(a[0]), a[1])),
    "bg": (2, lambda a: dist.BetaGeometric.from_alpha_beta(a[0], a[1])),
    "dweibull": (2, lambda a: dist.DiscreteWeibull(a[0], a[1])),
    "geom": (1, lambda a: dist.Geometric(a[0])),
}


def parse_alternative(text: str):
    """``"bg:2,5"`` -> BetaGeometric with alpha=2, beta=5 (and so on)."""
    name, _, args = text.partition(":")
    name = name.strip().lower()
    if name not in ALTERNATIVES:
        raise ValueError(f"unknown alternative {name!r}; choose from {', '.join(ALTERNATIVES)}")
    arity, build = ALTERNATIVES[name]
    try:
        values = [float(a) for a in args.split(",") if a.strip()]
    except ValueError:
        raise ValueError(f"bad parameters in {text!r}") from None
    if len(values) != arity:
        raise ValueError(f"{name} takes {arity} parameter(s), got {len(values)}")
    return build(values)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(" ", "").split(",") if v]


# -- output helpers ----------------------------------------------------------


def _fmt_stat(v: float) -> str:
    return "nan" if v != v else f"{v:.6g}"


def _fmt_p(v: float) -> str:
    return f"{v:.3f}"


def _table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(headers)]
    fmt = lambda cells: "  ".join(str(c).rjust(w) for c, w in zip(cells, widths))
    lines = [fmt(headers), "  ".join("-" * w for w in widths)]
    lines += [fmt(r) for r in rows]
    return "\n".join(lines)


def _csv(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    return "\n".join([",".join(headers)] + [",".join(map(str, r)) for r in rows])


def _emit(args, headers, rows, records=None, preamble: str = "") -> None:
    if args.format == "json":
        print(json.dumps(records if records is not None else [dict(zip(headers, r)) for r in rows], indent=2))
    elif args.format == "csv":
        print(_csv(headers, rows))
    else:
        if preamble:
            print(preamble)
        print(_table(headers, rows))


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CONDGOF_SEED")
    if env:
        return int(env)
    seed = int(np.random.SeedSequence().entropy % (2**63))
    log.info("no seed given; using %d", seed)
    return seed


def _load_input(args):
    if args.fixture:
        return load_fixture(args.fixture)
    if args.input is None:
        raise ParseError("give a data file or --fixture")
    if args.input == "-":
        from .datasets import parse_dataset

        return parse_dataset(sys.stdin.read())
    return read_dataset(args.input)


# -- fitting report ----------------------------------------------------------

FAMILIES = ("geometric", "betageometric", "dweibull")


def _fit_family(sample, family):
    if family == "geometric":
        p = dist.fit_geometric(sample)
        return p, {"p": p.p}
    if family == "betageometric":
        res = dist.fit_betageometric(sample)
        return res.params, {"pi": res.params.pi, "theta": res.params.theta, "loglik": res.loglik}
    res = dist.fit_discrete_weibull(sample)
    return res.params, {"q": res.params.q, "beta": res.params.beta, "loglik": res.loglik}


def _expected_block(sample, families, lump):
    fitted = {}
    for fam in families:
        fitted[fam] = _fit_family(sample, fam)
    top = int(sample.values.max())
    o = sample.counts()
    if lump is not None:
        labels = [str(j) for j in range(lump)] + [f">={lump}"]
        obs = list(o[:lump]) + [int(o[lump:].sum())]
        obs += [0] * (len(labels) - len(obs))
        obs = obs[: len(labels)]
    else:
        labels = [str(j) for j in range(top + 1)]
        obs = list(o)
    cols = {}
    for fam, (params, _) in fitted.items():
        cols[fam] = dist.expected_frequencies(params, sample.n, top, lump=lump)
    rows = []
    for i, lab in enumerate(labels):
        rows.append([lab, str(obs[i])] + [f"{cols[f][i]:.1f}" for f in fitted])
    headers = ["value", "observed"] + [f"expected_{f}" for f in fitted]
    return fitted, headers, rows


# -- subcommands -------------------------------------------------------------


def cmd_test(args) -> int:
    sample = _load_input(args)
    seed = _resolve_seed(args)
    stats = st.parse_statistics(args.stats)
    if sample.t == 0:
        log.warning("all observations are zero; the conditional law is a point mass and every p-value is 1")
        if args.strict:
            return EXIT_DEGENERATE
    results = conditional_p_values(sample, stats, K=args.iterations, seed=seed)
    p_hat = sample.n / (sample.n + sample.t) if sample.t else float("nan")
    headers = ["statistic", "observed", "p_cond"]
    rows = [[s.label, _fmt_stat(r.observed), _fmt_p(r.p_cond)] for s, r in results.items()]
    preamble = f"n = {sample.n}  t = {sample.t}  p_hat = {p_hat:.4f}  K = {args.iterations}  seed = {seed}\n"
    if args.format == "json":
        payload = {
            "n": sample.n, "t": sample.t, "p_hat": p_hat, "K": args.iterations, "seed": seed,
            "results": [r.as_dict() for r in results.values()],
        }
        if args.expected:
            fams = FAMILIES if args.expected == "all" else (args.expected,)
            fitted, eh, er = _expected_block(sample, fams, args.lump)
            payload["fits"] = {f: v[1] for f, v in fitted.items()}
            payload["expected"] = [dict(zip(eh, r)) for r in er]
        print(json.dumps(payload, indent=2, default=float))
        return EXIT_OK
    _emit(args, headers, rows, preamble=preamble)
    if args.expected and sample.t > 0:
        fams = FAMILIES if args.expected == "all" else (args.expected,)
        fitted, eh, er = _expected_block(sample, fams, args.lump)
        print()
        _emit(args, eh, er)
    return EXIT_OK


def cmd_fit(args) -> int:
    sample = _load_input(args)
    if sample.t == 0:
        raise DegenerateSampleError("all observations are zero; no model can be fitted")
    fams = FAMILIES if args.family == "all" else (args.family,)
    fitted, eh, er = _expected_block(sample, fams, args.lump)
    if args.format == "json":
        print(json.dumps({
            "n": sample.n, "t": sample.t,
            "fits": {f: v[1] for f, v in fitted.items()},
            "expected": [dict(zip(eh, r)) for r in er],
        }, indent=2, default=float))
        return EXIT_OK
    prows = []
    for fam, (_, values) in fitted.items():
        for k, v in values.items():
            prows.append([fam, k, f"{v:.6g}"])
    _emit(args, ["family", "parameter", "estimate"], prows, preamble=f"n = {sample.n}  t = {sample.t}\n")
    print()
    _emit(args, eh, er)
    return EXIT_OK


def cmd_sample(args) -> int:
    rng = make_rng(_resolve_seed(args))
    fam = args.family
    if fam == "geometric":
        out = sample_conditional_geometric(args.n, args.t, rng, size=args.count)
    elif fam == "negbinomial":
        out = sample_conditional_negbinomial(_int_list(args.sizes), args.t, rng, size=args.count)
    elif fam == "poisson":
        out = sample_conditional_poisson(_float_list(args.weights), args.t, rng, size=args.count)
    elif fam == "binomial":
        out = sample_conditional_binomial(_int_list(args.sizes), args.t, rng, size=args.count)
    else:
        name, _, param = args.coef.partition(":")
        log_a = dist.log_coefficients(name, int(param) if param else None)
        chain = sample_conditional_powerseries_mh(
            log_a, args.n, args.t, rng, burn_in=args.burn_in, thin=args.thin
        )
        out = chain.sample(args.count)
        log.info("acceptance rate %.3f", chain.acceptance_rate)
    for row in np.atleast_2d(out):
        print(",".join(map(str, row.tolist())))
    return EXIT_OK


def _study_output(args, results, alphas) -> None:
    stats = results[0].spec.statistics
    if args.format == "json":
        print(json.dumps([row for r in results for row in r.rows(alphas)], indent=2))
        return
    if args.format == "csv":
        rows = [row for r in results for row in r.rows(alphas)]
        headers = list(rows[0])
        print(_csv(headers, [[f"{row[h]:.6g}" if isinstance(row[h], float) else row[h] for h in headers] for row in rows]))
        return
    for a in alphas:
        headers = ["alternative", "n"] + [s.label for s in stats]
        rows = []
        for r in results:
            rates, ses = r.rejection_rate(a), r.standard_error(a)
            rows.append([r.label, str(r.spec.n)] + [f"{rates[s]:.3f} ({ses[s]:.3f})" for s in stats])
        print(f"alpha = {a:g}  M = {results[0].spec.M}  K = {results[0].spec.K}")
        print(_table(headers, rows))
        degenerate = sum(r.degenerate for r in results)
        if degenerate:
            print(f"({degenerate} data sets with t = 0 counted as non-rejections)")
        print()


def _progress(args):
    if not args.progress:
        return None

    def report(done, total):
        print(f"\r{done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)

    return report


def cmd_power(args) -> int:
    seed = _resolve_seed(args)
    stats = st.parse_statistics(args.stats, default=st.STUDY_STATISTICS)
    results = []
    for alt_text in args.alt:
        alt = parse_alternative(alt_text)
        for n in args.n:
            spec = StudySpec(alt, n, args.alpha[0], args.M, args.K, stats, seed)
            results.append(run_power_study(spec, workers=args.workers, progress=_progress(args), label=alt_text))
    _study_output(args, results, args.alpha)
    return EXIT_OK


def cmd_type1(args) -> int:
    seed = _resolve_seed(args)
    stats = st.parse_statistics(args.stats, default=st.STUDY_STATISTICS)
    results = []
    for p in args.p:
        for n in args.n:
            spec = StudySpec(dist.Geometric(p), n, args.alpha[0], args.M, args.K, stats, seed)
            results.append(run_power_study(spec, workers=args.workers, progress=_progress(args), label=f"p={p:g}"))
    _study_output(args, results, args.alpha)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def _workers(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $CONDGOF_SEED, else random)")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--strict", action="store_true", help="treat degenerate data (t = 0) as an error")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("input", nargs="?", help="data file: raw integers or value,count rows ('-' for stdin)")
    data.add_argument("--fixture", choices=FIXTURES, help="use a bundled data set instead of a file")
    data.add_argument("--lump", type=int, default=None, help="lump expected frequencies at values >= LUMP")

    study = argparse.ArgumentParser(add_help=False)
    study.add_argument("--n", type=_positive, nargs="+", required=True)
    study.add_argument("--alpha", type=float, nargs="+", default=None)
    study.add_argument("--M", type=_positive, default=1000, help="outer data sets")
    study.add_argument("--K", type=_positive, default=1000, help="conditional draws per data set")
    study.add_argument("--stats", default=None)
    study.add_argument("--workers", type=_workers, default=None, help="processes (default: all cores)")
    study.add_argument("--progress", action="store_true")

    parser = argparse.ArgumentParser(prog="condgof", description="Exact conditional goodness-of-fit tests for the geometric distribution.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common, data], help="conditional p-values for a data set")
    p.add_argument("--stats", default=None, help="comma-separated statistics (default: all)")
    p.add_argument("-K", "--iterations", type=_positive, default=10_000)
    p.add_argument("--workers", type=_workers, default=None, help="accepted for symmetry; single tests run in-process")
    p.add_argument("--expected", choices=FAMILIES + ("all",), default=None,
                   help="also print fitted expected frequencies")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("fit", parents=[common, data], help="maximum likelihood fits")
    p.add_argument("--family", choices=FAMILIES + ("all",), default="all")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", parents=[common], help="draw conditional samples given the total")
    p.add_argument("--family", choices=("geometric", "negbinomial", "poisson", "binomial", "powerseries"), default="geometric")
    p.add_argument("--n", type=_positive, help="number of parts (geometric, powerseries)")
    p.add_argument("--t", type=int, required=True, help="the total")
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument("--sizes", help="comma-separated r_i (negbinomial) or m_i (binomial)")
    p.add_argument("--weights", help="comma-separated Poisson weights a_i")
    p.add_argument("--coef", default="poisson", help="power-series coefficients: geometric, poisson, binomial:M, negbinomial:R")
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=_positive, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("power", parents=[common, study], help="power study against alternatives")
    p.add_argument("--alt", nargs="+", required=True,
                   help="alternatives: pois:L bin:M,P nb:R,P bg:A,B dweibull:Q,BETA geom:P")
    p.set_defaults(func=cmd_power, default_alpha=[0.1])

    p = sub.add_parser("type1", parents=[common, study], help="type I error study under Geom(p)")
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_type1, default_alpha=[0.05])
    return parser


def _check_sample_args(args) -> None:
    fam = args.family
    if fam in ("geometric", "powerseries") and args.n is None:
        raise ParseError(f"--n is required for the {fam} family")
    if fam in ("negbinomial", "binomial") and not args.sizes:
        raise ParseError(f"--sizes is required for the {fam} family")
    if fam == "poisson" and not args.weights:
        raise ParseError("--weights is required for the poisson family")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="condgof: %(levelname)s: %(message)s",
    )
    if hasattr(args, "default_alpha") and args.alpha is None:
        args.alpha = args.default_alpha
    try:
        if args.command == "sample":
            _check_sample_args(args)
        return args.func(args)
    except EstimationError as exc:
        print(f"condgof: estimation failed: {exc}", file=sys.stderr)
        if exc.best is not None:
            print(f"condgof: best iterate {np.asarray(exc.best).tolist()} (loglik {exc.loglik})", file=sys.stderr)
        return EXIT_ESTIMATION
    except DegenerateSampleError as exc:
        print(f"condgof: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, ValueError, KeyError, OSError) as exc:
        print(f"condgof: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CondGofError as exc:
        print(f"condgof: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
