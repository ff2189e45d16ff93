"""Command line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.  All commands
are deterministic given config + seed; the ``--threads`` flag (fallback env
var ``RSM_THREADS``) caps the replication pool.
"""

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, estimator, evaluation, ingest, models, simulate
from .gmom import concentration_params, concentration_radius
from .contamination import ContaminationKind
from .exceptions import InputError, RobustSMError
from .models import Family, Support

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    return cfg


def _parse_family(name: str) -> Family:
    try:
        return Family(name)
    except ValueError as exc:
        valid = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown family {name!r}; expected one of: {valid}") from exc


def _spec_from_config(cfg: dict) -> simulate.ExperimentSpec:
    try:
        kind = cfg.get("contamination_kind", "pareto_cols")
        k_cfg = cfg.get("k", {"policy": "fixed", "values": [1]})
        return simulate.ExperimentSpec(
            m=int(cfg["m"]),
            n=int(cfg["n"]),
            kappa=int(cfg["kappa"]),
            family=_parse_family(cfg.get("family", "square_root")),
            weight_exponent=float(cfg.get("weight_exponent", 1.5)),
            epsilon=float(cfg.get("epsilon", 0.0)),
            contamination_kind=ContaminationKind(kind),
            contamination_intensity=float(cfg.get("contamination_intensity", 1.0)),
            k_policy=k_cfg.get("policy", "fixed"),
            k_values=tuple(k_cfg.get("values", [1])),
            beta_policy=cfg.get("beta", {}).get("policy", "zero"),
            beta_value=float(cfg.get("beta", {}).get("value", 0.0)),
            lambdas=tuple(cfg["lambdas"]) if "lambdas" in cfg else None,
            lambda_num=int(cfg.get("lambda_num", 30)),
            lambda_ratio=float(cfg.get("lambda_ratio", 1e-3)),
            replications=int(cfg["replications"]),
            seed=int(cfg.get("seed", 0)),
            burn_in=int(cfg.get("burn_in", models.DEFAULT_BURN_IN)),
            thin=int(cfg.get("thin", models.DEFAULT_THIN)),
        )
    except (KeyError, TypeError, ValueError, InputError) as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def _config_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write_manifest(path, config_path, seed, outputs, started, ended):
    manifest = {
        "config_hash": _config_hash(config_path),
        "seed": seed,
        "tool_version": __version__,
        "started": started,
        "ended": ended,
        "outputs": outputs,
    }
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    os.replace(tmp, path)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("RSM_THREADS")
    return max(1, int(env)) if env else 1


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    out_csv = args.output or cfg.get("output", "results.csv")
    rows, failures = simulate.run_experiment(spec, threads=_threads(args))
    simulate.results_to_csv(rows, out_csv, include_timings=args.timings)
    ended = datetime.datetime.now(datetime.timezone.utc).isoformat()
    manifest_path = out_csv + ".manifest.json"
    _write_manifest(manifest_path, args.config, spec.seed, [out_csv], started, ended)
    if failures:
        print(f"{len(failures)} replication(s) failed:", file=sys.stderr)
        for rep, msg in failures:
            print(f"  rep {rep}: {msg}", file=sys.stderr)
    print(out_csv)
    return EXIT_OK


def cmd_roc(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    rows, failures = simulate.run_experiment(spec, threads=_threads(args))
    table, aucs = evaluation.roc_table_from_results(
        rows,
        level=float(cfg.get("band_level", 0.95)),
        n_boot=int(cfg.get("bootstrap_resamples", 1000)),
        seed=spec.seed,
    )
    out_csv = args.output or cfg.get("output", "roc.csv")
    evaluation.write_roc_csv(table, out_csv)
    ended = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _write_manifest(out_csv + ".manifest.json", args.config, spec.seed, [out_csv], started, ended)
    for K, auc in sorted(aucs.items()):
        print(f"K={K}: AUC={auc:.4f}")
    print(out_csv)
    return EXIT_OK


def cmd_mse_k(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg)
    k_grid = cfg.get("k", {}).get("values")
    if not k_grid:
        raise ConfigError("msek requires a nonempty k.values grid")
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    table = evaluation.mse_vs_k(
        spec,
        k_grid,
        level=float(cfg.get("band_level", 0.95)),
        n_boot=int(cfg.get("bootstrap_resamples", 1000)),
        seed=spec.seed,
    )
    out_csv = args.output or cfg.get("output", "mse_k.csv")
    evaluation.write_mse_csv(table, out_csv)
    ended = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _write_manifest(out_csv + ".manifest.json", args.config, spec.seed, [out_csv], started, ended)
    print(out_csv)
    return EXIT_OK


def cmd_constants(args) -> int:
    params = concentration_params(args.delta, args.tau)
    payload = {
        "delta": params.delta,
        "tau": params.tau,
        "k_tau": params.k_tau,
        "c_tau": params.c_tau,
        "K": params.K,
        "n_c": params.n_c,
    }
    if args.n is not None and args.trace_sigma is not None:
        payload["radius"] = concentration_radius(params, args.n, args.trace_sigma)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_fit(args) -> int:
    family = _parse_family(args.family)
    support = (
        Support.NONNEG_ORTHANT if family is Family.SQUARE_ROOT else Support.REAL_LINE
    )
    if not os.path.exists(args.data):
        raise ConfigError(f"data file not found: {args.data}")
    dataset = ingest.load_csv(
        args.data,
        support=support,
        missing_policy=ingest.MissingPolicy.DROP_ROW if args.drop_missing else ingest.MissingPolicy.FAIL,
        zero_floor=args.zero_floor,
    )
    if args.K is not None:
        K = args.K
    elif args.epsilon is not None:
        K = estimator.choose_K(args.epsilon, dataset.n)
    else:
        K = 1
    cfg = estimator.EstimatorConfig(K=K, beta=args.beta, lam=args.lam or 0.0)
    result = ingest.fit(
        dataset,
        family,
        cfg,
        target_edges=args.target_edges,
        weight_exponent=args.weight_exponent,
    )
    payload = estimator.result_to_json_dict(result.result, dataset.m)
    payload.update(
        {
            "lambda": result.lam,
            "K": K,
            "beta": args.beta,
            "edge_count": result.achieved_edges,
            "target_reached": result.target_reached,
            "columns": dataset.columns,
        }
    )
    out_json = args.output + ".json"
    out_edges = args.output + ".edges.csv"
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    ingest.write_edges_csv(result, out_edges)
    if not result.target_reached:
        print(
            f"warning: target of {args.target_edges} edges unreachable; "
            f"achieved {result.achieved_edges}",
            file=sys.stderr,
        )
    print(out_json)
    print(out_edges)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustsm",
        description="Robust generalized score matching for pairwise exponential families",
    )
    parser.add_argument("--threads", type=int, default=None, help="replication pool size")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a simulation experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("roc", help="run an experiment and emit averaged ROC curves")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("msek", help="MSE versus block count K")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_mse_k)

    p = sub.add_parser("constants", help="concentration constants as JSON")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--trace-sigma", type=float, default=None, dest="trace_sigma")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("fit", help="fit a pairwise model to a CSV dataset")
    p.add_argument("data")
    p.add_argument("--family", default="square_root")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--target-edges", dest="target_edges", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--weight-exponent", type=float, default=1.5)
    p.add_argument("--zero-floor", type=float, default=None)
    p.add_argument("--drop-missing", action="store_true")
    p.add_argument("-o", "--output", default="fit")
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RobustSMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
