"""Command-line interface: ``winnerscurse {correct,simulate,weights}``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .bma import BRIDGE_METHODS, ModelPair, posterior_model_weights, prior_model_weights
from .io import (REPORT_COLUMNS, SUMMARY_COLUMNS, NotSignificantRecord, RecordError, build_row, format_json,
                 format_tsv, ingest, read_records, replicate_rows, summary_rows, write_atomic)
from .pipeline import BayesSettings, correct, derive_seed, with_seed
from .sampler import SCHEMES, ChainConfig, SpikeSlabPrior
from .simulation import ESTIMATORS, SimulationConfig, run_config, sample_size_table
from .stats import critical_value

EXIT_OK = 0
EXIT_SKIPPED = 2
EXIT_USAGE = 64


def _prior_arg(text):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from None
    if not (a > 0 and b > 0):
        raise argparse.ArgumentTypeError("Beta parameters must be positive")
    return a, b


def _probability(text):
    value = float(text)
    if not 0 < value < 0.5:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 0.5)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winnerscurse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="correct significant effects listed in a TSV file")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, help="report path; stdout when omitted")
    p.add_argument("--format", choices=("tsv", "json", "both"), default="tsv")
    p.add_argument("--alpha", type=_probability, help="override the per-row threshold")
    p.add_argument("--p-convention", choices=("one_sided", "two_sided"), help="override the per-row convention")
    p.add_argument("--prior", type=_prior_arg, action="append", default=[], metavar="A,B",
                   help="Beta prior on xi for the first, then the second model (default 8,0.5 and 0.5,8)")
    p.add_argument("--u-max", type=float, default=2.0)
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("--burnin", type=int, default=5000)
    p.add_argument("--proposal-sd", type=float, default=0.1)
    p.add_argument("--scheme", choices=SCHEMES, default="pseudo_prior")
    p.add_argument("--bridge", choices=BRIDGE_METHODS, default="optimal")
    p.add_argument("--rao-blackwell", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("simulate", help="run the factorial bias/RMSE study from a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("-o", "--output", type=Path, help="summary path; stdout when omitted")
    p.add_argument("--format", choices=("tsv", "json", "both"), default="tsv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, help="override the config's replicate count")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("weights", help="prior and posterior model weights")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--c", type=float, help="critical value")
    g.add_argument("--alpha", type=_probability)
    p.add_argument("--r", type=float, help="marginal likelihood ratio p(T|M1)/p(T|M2)")
    return parser


def _settings_from(args) -> BayesSettings:
    pair = None
    if args.prior:
        if len(args.prior) > 2:
            raise ValueError("--prior may be given at most twice")
        default = ModelPair.default(args.u_max)
        m1 = SpikeSlabPrior(*args.prior[0], args.u_max)
        m2 = SpikeSlabPrior(*args.prior[1], args.u_max) if len(args.prior) == 2 else default.m2_prior
        pair = ModelPair(m1, m2)
    chain = ChainConfig(args.iterations, args.burnin, args.proposal_sd, args.seed, args.scheme)
    return BayesSettings(chain=chain, u_max=args.u_max, pair=pair, bridge_method=args.bridge,
                         rao_blackwell=args.rao_blackwell)


def _emit(text_by_format, output, fmt, out):
    if output is None:
        out.write(text_by_format["json" if fmt == "json" else "tsv"])
        return
    if fmt == "both":
        write_atomic(output.with_suffix(".tsv"), text_by_format["tsv"])
        write_atomic(output.with_suffix(".json"), text_by_format["json"])
    else:
        write_atomic(output, text_by_format[fmt])


def cmd_correct(args, err=None, out=None) -> int:
    err, out = err or sys.stderr, out or sys.stdout
    settings = _settings_from(args)
    records, problems = read_records(args.input, alpha=args.alpha, p_convention=args.p_convention)
    skipped = [(line, f"malformed row: {msg}") for line, msg in problems]

    contexts = []
    for index, (line, record) in enumerate(records):
        try:
            contexts.append((index, record, ingest(record)))
        except NotSignificantRecord as exc:
            skipped.append((line, f"skipped: {exc}"))
        except RecordError as exc:
            skipped.append((line, f"malformed row: {exc}"))

    def job(item):
        index, record, ctx = item
        seed = derive_seed(args.seed, index)
        return build_row(record, correct(ctx, with_seed(settings, seed))).as_dict()

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        rows = list(pool.map(job, contexts))  # map keeps input order

    for line, msg in sorted(skipped):
        print(f"{args.input}:{line}: {msg}", file=err)

    chain = settings.chain
    meta = {
        "version": __version__, "seed": args.seed, "iterations": chain.iterations, "burn_in": chain.burn_in,
        "proposal_sd": chain.proposal_sd, "scheme": chain.scheme, "u_max": settings.u_max,
        "m1_prior": [settings.model_pair.m1_prior.a, settings.model_pair.m1_prior.b],
        "m2_prior": [settings.model_pair.m2_prior.a, settings.model_pair.m2_prior.b],
        "bridge": settings.bridge_method, "rao_blackwell": settings.rao_blackwell,
    }
    header = [f"{k}={json.dumps(v)}" for k, v in meta.items()]
    texts = {"tsv": format_tsv(rows, REPORT_COLUMNS, header), "json": format_json(rows, meta)}
    _emit(texts, args.output, args.format, out)
    return EXIT_SKIPPED if skipped else EXIT_OK


def load_simulation_config(path, replicates=None) -> SimulationConfig:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    if replicates is not None:
        data["replicates"] = replicates
    return SimulationConfig.from_dict(data)


def cmd_simulate(args, err=None, out=None) -> int:
    err, out = err or sys.stderr, out or sys.stdout
    config = load_simulation_config(args.config, args.replicates)
    meta = {"version": __version__, "seed": args.seed, "config": _jsonable(asdict(config))}
    header = [f"seed={args.seed}", f"version={__version__}", "config=" + json.dumps(meta["config"])]

    if config.mode == "sample_size":
        table = sample_size_table(config.mu, config.sigma, config.alphas, config.powers)
        rows = [{"alpha": a, "power": p, "n": n} for (a, p), n in table.items()]
        columns = ("alpha", "power", "n")
        texts = {"tsv": format_tsv(rows, columns, header), "json": format_json(rows, meta)}
        _emit(texts, args.output, args.format, out)
        return EXIT_OK

    tables = run_config(config, seed=args.seed, workers=args.workers)
    rows = list(summary_rows(tables))
    texts = {"tsv": format_tsv(rows, SUMMARY_COLUMNS, header), "json": format_json(rows, meta)}
    _emit(texts, args.output, args.format, out)
    if config.per_replicate and args.output is not None:
        reps = list(replicate_rows(tables, ESTIMATORS))
        columns = ("cell", "alpha", "power", "n", "seed", "t_obs") + ESTIMATORS
        path = args.output.with_name(args.output.stem + "_replicates.tsv")
        write_atomic(path, format_tsv(reps, columns, header))
    return EXIT_OK


def _jsonable(d):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def cmd_weights(args, err=None, out=None) -> int:
    err, out = err or sys.stderr, out or sys.stdout
    c = args.c if args.c is not None else critical_value(args.alpha)
    w1, w2 = prior_model_weights(c)
    print(f"c\t{c!r}", file=out)
    print(f"prior_m1\t{w1!r}\nprior_m2\t{w2!r}", file=out)
    if args.r is not None:
        p1, p2 = posterior_model_weights(args.r, c)
        print(f"posterior_m1\t{p1!r}\nposterior_m2\t{p2!r}", file=out)
    return EXIT_OK


COMMANDS = {"correct": cmd_correct, "simulate": cmd_simulate, "weights": cmd_weights}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"winnerscurse {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
