"""Command-line entry point

Exit codes: 0 success, 1 runtime error (JSON object on stderr), 2 flag error.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from artifacts.artifact_manager import ArtifactManager
from cli.report import RunReport, emit_report
from core.experiment_manager import FORECAST_METHODS, PSSE_METHODS, ExperimentManager, MethodResult
from estimators.forecasters import build_forecaster, load_forecaster
from estimators.network_estimators import FnnEstimator, ProxNetEstimator, load_estimator
from estimators.solver_estimators import GaussNewtonEstimator, ProxLinearEstimator
from grid.admittance import build_admittance
from grid.case_parser import format_matpower_case
from grid.cases import load_case
from grid.power_flow import newton_power_flow
from grid.serialization import grid_fingerprint, grid_to_json
from measurement.plan import default_plan, plan_to_json
from measurement.quadratic import build_measurement_matrices
from pipeline.dataset import NoiseConfig, generate_dataset, load_dataset, save_dataset, split_dataset
from pipeline.loads import ingest_load_csv, synth_load_series, write_load_csv
from pipeline.metrics import rmse
from utils.config import DEFAULT_CONFIG, load_config, save_config
from utils.errors import PsseError, SchemaMismatch
from utils.logger import setup_logger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

SOLVERS = ("prox-linear", "gauss-newton")


class UsageError(Exception):
    """Invalid or inconsistent command-line flags"""


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed")
    common.add_argument("--config", default=None, help="flat key: value config file (YAML or JSON)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--log-level", dest="log_level", default=None)
    common.add_argument("--plots", action="store_true", default=None, help="also render PNG figures")
    return common


def _problem_flags(parser, need_case=True):
    if need_case:
        parser.add_argument("--case", required=True, help="built-in case name or MATPOWER file")
    parser.add_argument("--data", required=True, help="dataset file written by gen-data")
    parser.add_argument("--train-size", dest="train_size", type=int, default=None)
    parser.add_argument("--test-size", dest="test_size", type=int, default=None)


def _training_flags(parser):
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    parser.add_argument("--loss", choices=("huber", "mse"), default=None)


def _report_flags(parser):
    parser.add_argument("--report-bus", dest="report_bus", type=int, default=None)
    parser.add_argument("--report-instance", dest="report_instance", type=int, default=None)
    parser.add_argument("--trace-window", dest="trace_window", type=int, default=None)


def _estimator_flags(parser):
    parser.add_argument("--estimator", choices=SOLVERS, default=None,
                        help="solver used when no --estimator-checkpoint is given")
    parser.add_argument("--estimator-checkpoint", dest="estimator_checkpoint", default=None)


def build_parser():
    common = _common_parser()
    parser = _Parser(prog="psse-net", description="Physics-aware state estimation and forecasting")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("parse-case", parents=[common], help="parse a MATPOWER case and write its grid JSON")
    p.add_argument("case")

    p = sub.add_parser("powerflow", parents=[common], help="solve the AC power flow of a case")
    p.add_argument("case")
    p.add_argument("--init", dest="pf_init", choices=("case", "flat"), default=None)
    p.add_argument("--tol", dest="pf_tol", type=float, default=None)
    p.add_argument("--max-iter", dest="pf_max_iter", type=int, default=None)

    p = sub.add_parser("gen-data", parents=[common], help="generate a measurement/state dataset")
    p.add_argument("case")
    p.add_argument("--loads", default=None, help="load CSV; synthetic profiles are used without it")
    p.add_argument("--column-map", dest="column_map", default=None, help="bus=column pairs, comma separated")
    p.add_argument("--time-column", dest="time_column", default="t")
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--profile", choices=("sinusoid", "random-walk"), default=None)
    p.add_argument("--include-injections", dest="include_injections", action="store_true", default=None)
    p.add_argument("--sigma-flow", dest="sigma_flow", type=float, default=None)
    p.add_argument("--sigma-mag", dest="sigma_mag", type=float, default=None)
    p.add_argument("--magnitude-noise", dest="magnitude_noise", action="store_true", default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("solve", parents=[common], help="run an iterative solver on dataset samples")
    p.add_argument("--case", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=SOLVERS, required=True)
    p.add_argument("--start", type=int, default=0, help="first sample index")
    p.add_argument("--samples", type=int, default=1, help="number of samples")
    p.add_argument("--weighted", action="store_true", help="weight Gauss-Newton by 1/sigma^2")
    p.add_argument("--outer-iters", dest="outer_iters", type=int, default=None)
    p.add_argument("--inner-iters", dest="inner_iters", type=int, default=None)

    p = sub.add_parser("train-psse", parents=[common], help="train the prox-linear net or an FNN baseline")
    _problem_flags(p)
    _training_flags(p)
    p.add_argument("--model", choices=("proxnet", "fnn"), required=True)
    p.add_argument("--layers", type=int, default=None, help="FNN hidden layers (default: first of fnn_layers)")
    p.add_argument("--net-init", dest="net_init", choices=("random", "solver"), default=None)
    p.add_argument("--activation", choices=("relu", "soft_threshold", "tanh", "linear"), default=None)
    p.add_argument("--blocks", dest="net_blocks", type=int, default=None)
    p.add_argument("--net-layers", dest="net_layers", type=int, default=None)

    p = sub.add_parser("eval-psse", parents=[common], help="evaluate estimators on the test split")
    _problem_flags(p)
    _report_flags(p)
    p.add_argument("--checkpoint", action="append", default=[], help="trained network (repeatable)")
    p.add_argument("--method", action="append", choices=SOLVERS, default=[], help="solver (repeatable)")

    p = sub.add_parser("train-forecast", parents=[common], help="train a one-step forecaster")
    _problem_flags(p, need_case=False)
    _training_flags(p)
    _estimator_flags(p)
    p.add_argument("--case", default=None, help="needed with --source estimated")
    p.add_argument("--model", choices=FORECAST_METHODS, required=True)
    p.add_argument("--source", dest="forecast_source", choices=("truth", "estimated"), default=None)
    p.add_argument("--window", type=int, default=None)

    p = sub.add_parser("eval-forecast", parents=[common], help="score forecasters on the test span")
    _problem_flags(p, need_case=False)
    _report_flags(p)
    _estimator_flags(p)
    p.add_argument("--case", default=None, help="needed with --source estimated")
    p.add_argument("--checkpoint", action="append", required=True, help="trained forecaster (repeatable)")
    p.add_argument("--source", dest="forecast_source", choices=("truth", "estimated"), default=None)
    p.add_argument("--window", type=int, default=None)

    p = sub.add_parser("monitor", parents=[common], help="closed-loop estimation with forecast imputation")
    _problem_flags(p)
    _report_flags(p)
    _estimator_flags(p)
    p.add_argument("--forecaster", required=True, help="trained forecaster checkpoint")
    p.add_argument("--missing-rate", dest="missing_rate", type=float, default=None)
    p.add_argument("--trials", type=int, default=1)

    p = sub.add_parser("bench", parents=[common], help="multi-run benchmark of every method")
    _problem_flags(p, need_case=False)
    _training_flags(p)
    _report_flags(p)
    _estimator_flags(p)
    p.add_argument("--case", default=None)
    p.add_argument("--task", choices=("psse", "forecast"), required=True)
    p.add_argument("--methods", nargs="+", default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--source", dest="forecast_source", choices=("truth", "estimated"), default=None)
    p.add_argument("--window", type=int, default=None)

    return parser


# helpers

def _overrides(args):
    return {k: v for k, v in vars(args).items() if k in DEFAULT_CONFIG and v is not None}


def _column_map(text):
    mapping = {}
    for pair in text.split(","):
        bus, sep, column = pair.partition("=")
        if not sep or not bus.strip().isdigit() or not column.strip():
            raise UsageError(f"--column-map entries must look like bus=column, got '{pair}'")
        mapping[int(bus)] = column.strip()
    return mapping


def _load_problem(args):
    """Grid, dataset and measurement model for commands that consume a dataset"""
    grid = load_case(args.case)
    dataset = load_dataset(args.data)
    if grid_fingerprint(grid) != dataset.grid_fingerprint:
        raise SchemaMismatch(f"dataset {args.data} was generated on a different grid than {args.case}",
                             expected=dataset.grid_fingerprint, found=grid_fingerprint(grid),
                             hint="pass the case the dataset was generated from")
    forms = build_measurement_matrices(build_admittance(grid), dataset.plan)
    return grid, dataset, forms


def _split(dataset, config):
    train_size = config.get("train_size")
    if train_size is None or train_size >= len(dataset):
        train_size = len(dataset) // 2
        logger.warning(f"train_size not usable for {len(dataset)} samples; splitting at {train_size}")
    return split_dataset(dataset, int(train_size), config.get("test_size"))


def _solver_estimator(method, forms, artifacts, config, weighted=False):
    if method == "prox-linear":
        return ProxLinearEstimator(forms, artifacts=artifacts, config=config)
    return GaussNewtonEstimator(forms, weighted=weighted, artifacts=artifacts, config=config)


def _psse_estimator(args, forms, artifacts, config):
    if args.estimator_checkpoint:
        return load_estimator(forms, args.estimator_checkpoint, artifacts=artifacts, config=config)
    return _solver_estimator(args.estimator or "gauss-newton", forms, artifacts, config)


def _forecast_inputs(args, config, artifacts, manager):
    """(dataset, input series) for forecasting; estimated series need a case and an estimator"""
    source = config.get("forecast_source", "truth")
    if source == "estimated":
        if not args.case:
            raise UsageError("--source estimated needs --case")
        _, dataset, forms = _load_problem(args)
        estimator = _psse_estimator(args, forms, artifacts, config)
        logger.info(f"Estimating {len(dataset)} states with {estimator.method} as forecaster inputs")
        return dataset, manager.estimated_series(estimator, dataset)
    return load_dataset(args.data), None


def _forecast_split(config, dataset):
    split = config.get("train_size")
    if split is None or split >= len(dataset):
        split = len(dataset) // 2
        logger.warning(f"train_size not usable for {len(dataset)} states; splitting at {split}")
    return int(split)


def _emit(report, artifacts, config):
    return emit_report(report, artifacts, bus=int(config.get("report_bus", 1)),
                       instance=int(config.get("report_instance", 0)),
                       trace_window=int(config.get("trace_window", 50)), plots=bool(config.get("plots", False)))


# commands

def cmd_parse_case(args, config, artifacts):
    grid = load_case(args.case)
    artifacts.save_text("grid.json", grid_to_json(grid) + "\n")
    artifacts.save_text("case.m", format_matpower_case(grid))
    print(f"{grid.name}: {grid.n_buses} buses, {grid.n_branches} branches, slack bus {grid.slack_index + 1}")
    return EXIT_OK


def cmd_powerflow(args, config, artifacts):
    grid = load_case(args.case)
    result = newton_power_flow(grid, tol=float(config["pf_tol"]), max_iter=int(config["pf_max_iter"]),
                               init=config["pf_init"])
    state = result.state
    artifacts.save_json("powerflow.json", {
        "case": grid.name,
        "iterations": result.iterations,
        "mismatch": result.mismatch,
        "state": state.values.tolist(),
        "magnitudes": state.magnitudes().tolist(),
        "angles": state.angles().tolist(),
    })
    print(f"{grid.name}: converged in {result.iterations} iterations (mismatch {result.mismatch:.3e})")
    return EXIT_OK


def cmd_gen_data(args, config, artifacts):
    grid = load_case(args.case)
    seed = int(config["seed"])
    if args.loads:
        if not args.column_map:
            raise UsageError("--loads needs --column-map")
        series = ingest_load_csv(args.loads, _column_map(args.column_map), time_column=args.time_column,
                                 subsample=config.get("subsample"), grid=grid)
        if config.get("length"):
            series = series.head(int(config["length"]))
    else:
        series = synth_load_series(grid, int(config["length"]), seed=seed, profile=config["profile"],
                                   amplitude=float(config["amplitude"]), period=float(config["period"]),
                                   noise=float(config["load_noise"]))
    plan = default_plan(grid, include_injections=bool(config["include_injections"]))
    dataset = generate_dataset(grid, series, plan, noise=NoiseConfig.from_config(config), seed=seed,
                               workers=int(config["workers"]), pf_tol=float(config["pf_tol"]),
                               pf_max_iter=int(config["pf_max_iter"]), pf_init=config["pf_init"])
    save_dataset(dataset, artifacts.path("data", "dataset.csv"))
    write_load_csv(series, artifacts.path("data", "loads.csv"))
    artifacts.save_text("grid.json", grid_to_json(grid) + "\n")
    artifacts.save_text(os.path.join("data", "plan.json"), plan_to_json(plan) + "\n")
    print(f"{len(dataset)} samples, {dataset.n_measurements} measurements, state dimension {2 * grid.n_buses}")
    return EXIT_OK


def cmd_solve(args, config, artifacts):
    _, dataset, forms = _load_problem(args)
    stop = min(args.start + args.samples, len(dataset))
    if args.start < 0 or args.start >= stop:
        raise UsageError(f"--start/--samples select no sample of {len(dataset)}")
    estimator = _solver_estimator(args.method, forms, artifacts, config, weighted=args.weighted)
    estimator.initialize()
    rows = []
    for j in range(args.start, stop):
        t, z, v = dataset.sample(j)
        v_hat = estimator.estimate(z)
        value = rmse(v_hat, v)
        trace = estimator.last_trace
        print(f"sample {j} (t={t}): rmse {value:.6e}")
        rows.append({"sample": j, "t": t.item() if hasattr(t, "item") else t, "rmse": value,
                     "estimate": v_hat.values.tolist(), "trace": trace.to_dict(include_timings=False)})
    artifacts.save_run_results(f"solve_{args.method}", {"method": args.method, "samples": rows})
    return EXIT_OK


def cmd_train_psse(args, config, artifacts):
    _, dataset, forms = _load_problem(args)
    train, _ = _split(dataset, config)
    if args.model == "proxnet":
        estimator = ProxNetEstimator(forms, artifacts=artifacts, config=config)
    else:
        layers = args.layers or int(config["fnn_layers"][0])
        estimator = FnnEstimator(forms, hidden_layers=layers, artifacts=artifacts, config=config)
    estimator.initialize()
    estimator.fit(train)
    name = estimator.method
    path = estimator.save(artifacts.path("checkpoints", f"{name}.json"))
    artifacts.save_run_results(f"train_{name}", {"method": name, "train_samples": len(train),
                                                 "history": estimator.history, "checkpoint": path})
    print(f"{name}: final training loss {estimator.history[-1]:.6e}" if estimator.history else f"{name}: no epochs")
    return EXIT_OK


def cmd_eval_psse(args, config, artifacts):
    if not args.checkpoint and not args.method:
        raise UsageError("eval-psse needs at least one --checkpoint or --method")
    _, dataset, forms = _load_problem(args)
    _, test = _split(dataset, config)
    manager = ExperimentManager(config, artifacts)
    estimators = [load_estimator(forms, path, artifacts=artifacts, config=config) for path in args.checkpoint]
    estimators += [_solver_estimator(method, forms, artifacts, config) for method in args.method]
    report = RunReport(task="eval-psse", config=config, seeds=[int(config["seed"])])
    for estimator in estimators:
        result = report.methods.setdefault(estimator.method, MethodResult(name=estimator.method))
        manager.score_estimator(estimator, test, result)
        if result.rmses:
            print(f"{estimator.method}: test RMSE {result.rmses[-1]:.6e} over {len(test)} samples")
    _emit(report, artifacts, config)
    return EXIT_OK


def cmd_train_forecast(args, config, artifacts):
    manager = ExperimentManager(config, artifacts)
    dataset, series = _forecast_inputs(args, config, artifacts, manager)
    split = _forecast_split(config, dataset)
    inputs = dataset.states if series is None else series
    forecaster = build_forecaster(args.model, artifacts=artifacts, config=config)
    forecaster.initialize()
    forecaster.fit(inputs[:split])
    path = forecaster.save(artifacts.path("checkpoints", f"{args.model}.json"))
    artifacts.save_run_results(f"train_forecast_{args.model}", {
        "method": args.model, "source": config.get("forecast_source", "truth"), "train_states": split,
        "history": getattr(forecaster, "history", []), "checkpoint": path})
    print(f"{args.model}: trained on {split} states ({config.get('forecast_source', 'truth')})")
    return EXIT_OK


def cmd_eval_forecast(args, config, artifacts):
    manager = ExperimentManager(config, artifacts)
    dataset, series = _forecast_inputs(args, config, artifacts, manager)
    split = _forecast_split(config, dataset)
    inputs = dataset.states if series is None else series
    forecasters = [load_forecaster(path, artifacts=artifacts, config=config) for path in args.checkpoint]
    start = split + max([int(config["window"])] + [f.window for f in forecasters])
    report = RunReport(task="eval-forecast", config=config, seeds=[int(config["seed"])])
    for forecaster in forecasters:
        result = report.methods.setdefault(forecaster.method, MethodResult(name=forecaster.method))
        manager.score_forecaster(forecaster, inputs, dataset, start, result)
        if result.rmses:
            print(f"{forecaster.method}: forecast RMSE {result.rmses[-1]:.6e}")
    _emit(report, artifacts, config)
    return EXIT_OK


def cmd_monitor(args, config, artifacts):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    _, dataset, forms = _load_problem(args)
    _, test = _split(dataset, config)
    manager = ExperimentManager(config, artifacts)
    estimator = _psse_estimator(args, forms, artifacts, config)
    estimator.initialize()
    forecaster = load_forecaster(args.forecaster, artifacts=artifacts, config=config)
    outcomes = manager.run_monitor(estimator, forecaster, test, trials=args.trials,
                                   missing_rate=float(config["missing_rate"]))
    if not outcomes:
        raise RuntimeError("every monitoring trial failed; see the log for details")

    report = RunReport(task="monitor", config=config, seeds=[o.seed for o in outcomes])
    for name in ("imputed", "zero-fill", "forecast"):
        report.methods[name] = MethodResult(name=name)
    for outcome in outcomes:
        report.methods["imputed"].add_run(outcome.imputed, outcome.truth, outcome.times)
        report.methods["zero-fill"].add_run(outcome.zero_filled, outcome.truth, outcome.times)
        report.methods["forecast"].add_run(outcome.forecasts, outcome.truth, outcome.times)
    improved = float(np.mean([o.improved for o in outcomes]))
    report.extra = {"estimator": estimator.method, "forecaster": forecaster.method,
                    "missing_rate": float(config["missing_rate"]), "improved_fraction": improved,
                    "trials": [o.to_dict() for o in outcomes]}
    print(f"imputation beat zero-fill in {improved:.0%} of {len(outcomes)} trial(s)")
    _emit(report, artifacts, config)
    return EXIT_OK


def cmd_bench(args, config, artifacts):
    manager = ExperimentManager(config, artifacts)
    runs = int(config["runs"])
    seeds = [int(config["seed"]) + r for r in range(runs)]
    if args.task == "psse":
        if not args.case:
            raise UsageError("bench --task psse needs --case")
        methods = args.methods or list(PSSE_METHODS)
        unknown = sorted(set(methods) - set(PSSE_METHODS))
        if unknown:
            raise UsageError(f"unknown PSSE methods {unknown}; choose from {PSSE_METHODS}")
        _, dataset, forms = _load_problem(args)
        results = manager.run_psse_bench(forms, dataset, methods)
    else:
        methods = args.methods or list(FORECAST_METHODS)
        unknown = sorted(set(methods) - set(FORECAST_METHODS))
        if unknown:
            raise UsageError(f"unknown forecasting methods {unknown}; choose from {FORECAST_METHODS}")
        dataset, series = _forecast_inputs(args, config, artifacts, manager)
        config = dict(config, train_size=_forecast_split(config, dataset))
        manager.config = config
        results = manager.run_forecast_bench(dataset, methods, series=series)

    report = RunReport(task=f"bench-{args.task}", methods=results, config=config, seeds=seeds,
                       extra={"errors": manager.get_status()["errors"]})
    for name, result in sorted(results.items()):
        metrics = result.metrics()
        mean = metrics["rmse"]["mean"]
        print(f"{name}: RMSE {mean:.6e} over {metrics['runs']} run(s)" if mean is not None
              else f"{name}: no successful run")
    _emit(report, artifacts, config)
    return EXIT_OK


COMMANDS = {
    "parse-case": cmd_parse_case,
    "powerflow": cmd_powerflow,
    "gen-data": cmd_gen_data,
    "solve": cmd_solve,
    "train-psse": cmd_train_psse,
    "eval-psse": cmd_eval_psse,
    "train-forecast": cmd_train_forecast,
    "eval-forecast": cmd_eval_forecast,
    "monitor": cmd_monitor,
    "bench": cmd_bench,
}


def _error_json(exc):
    if isinstance(exc, PsseError):
        return exc.to_dict()
    return {"error": exc.__class__.__name__, "message": str(exc), "details": {}}


def run_command(argv):
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": str(e), "details": {}}) + "\n")
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    artifacts = None
    try:
        config = load_config(args.config, _overrides(args))
        artifacts = ArtifactManager(args.out)
        setup_logger(config.get("log_level"), log_dir=artifacts.path("logs"))
        save_config(config, artifacts.path("config.yaml"))
        logger.info(f"Running {args.command} (seed {config['seed']}, output {artifacts.out_dir})")
        return COMMANDS[args.command](args, config, artifacts)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": "UsageError", "message": str(e), "details": {}}) + "\n")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=not isinstance(e, PsseError))
        sys.stderr.write(json.dumps(_error_json(e), sort_keys=True) + "\n")
        return EXIT_RUNTIME
    finally:
        if artifacts is not None:
            artifacts.flush()
