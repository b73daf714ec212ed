"""Command-line driver.

Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
runtime failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import pathlib
import sys
import time

from .datasets import write_csv
from .exceptions import ConfigError, ParameterError, RvdeError
from .harness import (
    DataSource,
    dump_json,
    estimator_from_config,
    fit_and_score,
    run_sweep,
    validate_config,
    write_sweep,
)

log = logging.getLogger("rvde")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--out", help="output directory (stdout when omitted, where possible)")
    common.add_argument("--seed", type=int, help="override the dataset seed")
    common.add_argument("--threads", type=int, default=1, help="worker cap")
    common.add_argument("--quiet", action="store_true")

    p = _Parser(prog="rvde", description="Radial Voronoi density estimation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen", parents=[common], help="write a synthetic train/test pair as CSV")
    sub.add_parser("fit-eval", parents=[common], help="fit one estimator and print test metrics")
    sub.add_parser("sample", parents=[common], help="draw samples from a fitted RVDE")
    sub.add_parser("modes", parents=[common], help="classify the modes of a fitted RVDE")
    sub.add_parser("sweep", parents=[common], help="run the bandwidth sweep benchmark")
    return p


def load_config(path, seed=None) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if seed is not None and isinstance(config, dict) and isinstance(config.get("dataset"), dict):
        if seed < 0:
            raise UsageError("--seed must be non-negative")
        config["dataset"]["seed"] = seed
    return validate_config(config)


def _out_dir(args, required=False):
    if args.out is None:
        if required:
            raise UsageError(f"'{args.command}' needs --out")
        return None
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_json(obj, args, name):
    out = _out_dir(args)
    if out is None:
        dump_json(obj, sys.stdout)
    else:
        with open(out / name, "w") as fh:
            dump_json(obj, fh)


def _fitted_rvde(config):
    est = config.get("estimator", {"estimator": "rvde"})
    if est["estimator"] != "rvde":
        raise ConfigError("this command needs the rvde estimator", "/estimator/estimator")
    source = DataSource(config["dataset"])
    train, _ = source.draw(0)
    return estimator_from_config(est, source.n).fit(train)


def cmd_gen(config, args):
    source = DataSource(config["dataset"])
    if source.spec is None:
        raise ConfigError("gen needs a synthetic dataset", "/dataset/dataset")
    train, test = source.draw(0)
    out = _out_dir(args, required=True)
    header = [f"x{i}" for i in range(source.n)]
    write_csv(out / "train.csv", train.points, header)
    write_csv(out / "test.csv", test.points, header)
    log.info("wrote %d train and %d test rows to %s", train.m, test.m, out)


def cmd_fit_eval(config, args):
    if "estimator" not in config:
        raise ConfigError("'estimator' section is required for this command", "")
    source = DataSource(config["dataset"])
    train, test = source.draw(0)
    model = estimator_from_config(config["estimator"], source.n)
    metrics = fit_and_score(model, train, test, source.true_log_density())
    result = {
        "estimator": config["estimator"]["estimator"],
        "kernel": str(model.kernel_),
        "alpha": getattr(model, "alpha_", None),
        "h": getattr(model, "bandwidth_", None),
        "m_train": train.m,
        "m_test": test.m,
        "seed": source.run_seed(0),
        **metrics,
    }
    result["total_sec"] = metrics["fit_sec"] + metrics["eval_sec"]
    _emit_json(result, args, "metrics.json")


def cmd_sample(config, args):
    model = _fitted_rvde(config)
    count = config.get("sample", {}).get("count", 1000)
    seed = config.get("seed", config["dataset"].get("seed", 0))
    X = model.sample(count, random_state=seed)
    header = [f"x{i}" for i in range(model.n_features_in_)]
    out = _out_dir(args)
    if out is None:
        print(",".join(header))
        for row in X:
            print(",".join(repr(float(v)) for v in row))
    else:
        write_csv(out / "samples.csv", X, header)


def cmd_modes(config, args):
    model = _fitted_rvde(config)
    result = model.modes().to_dict()
    result["alpha"] = model.alpha_
    _emit_json(result, args, "modes.json")


def cmd_sweep(config, args):
    out = _out_dir(args, required=True)
    t0 = time.perf_counter()

    def progress(row):
        log.info("%s h=%.4g run=%d loglik=%.4f %s", row["estimator"], row["h"], row["run"],
                 row["loglik_mean"], row["error"])

    result = run_sweep(config, threads=args.threads, progress=None if args.quiet else progress)
    write_sweep(result, out)
    log.info("sweep finished in %.1f s; results in %s", time.perf_counter() - t0, out)


COMMANDS = {
    "gen": cmd_gen,
    "fit-eval": cmd_fit_eval,
    "sample": cmd_sample,
    "modes": cmd_modes,
    "sweep": cmd_sweep,
}


def cli_main(argv=None) -> int:
    logging.basicConfig(format="%(message)s", stream=sys.stderr)
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        config = load_config(args.config, args.seed)
        COMMANDS[args.command](config, args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RvdeError, ParameterError, OSError, ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
