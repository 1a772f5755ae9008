"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 stationarity rejection
(including runaway simulations), 4 data error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .design import build_design
from .errors import ConfigError, DataError, SimulationRunawayError, StationarityError
from .estimators import adjacency_to_csv, estimate_from_json, estimate_to_dot, estimate_to_json
from .experiments import (
    PRESETS,
    ExperimentConfig,
    export_report,
    fit_method,
    ingest_spikes,
    preset_config,
    report_from_json,
    report_to_csv,
    report_to_json,
    run_experiment,
    stability_holdout,
)
from .lasso import PenaltyRule
from .network import (
    check_stationarity,
    make_block_network,
    make_orthogonal_block_network,
    spec_from_json,
    spec_to_json,
)
from .simulate import empirical_rates, save_events, simulate


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(exc, 2)
        except (StationarityError, SimulationRunawayError) as exc:
            _fail(exc, 3)
        except DataError as exc:
            _fail(exc, 4)
        except ValueError as exc:
            _fail(exc, 2)

    return wrapper


def _fail(exc, code):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _penalty_from_flags(penalty, c, budget):
    if penalty == "rate":
        return PenaltyRule.rate(c)
    if penalty == "edge_budget":
        return PenaltyRule.edge_budget(budget)
    if penalty == "time_split_cv":
        return PenaltyRule.time_split_cv()
    raise ConfigError(f"unknown penalty {penalty!r}")


@click.group()
def main():
    """Estimate causal connectivity in partially observed event networks."""


@main.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="Network spec JSON.")
@click.option("--topology", type=click.Choice(["confounded", "orthogonal"]), default="confounded")
@click.option("--p", type=int, default=20)
@click.option("--q", type=int, default=20)
@click.option("--block-size", type=int, default=5)
@click.option("--beta", type=float, default=0.12)
@click.option("--delta", type=float, default=0.10)
@click.option("--mu", type=float, default=0.05)
@click.option("--confounded-fraction", type=float, default=0.5)
@click.option("--horizon", type=float, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--floor", type=float, default=0.0)
@click.option("--out", type=click.Path(), required=True, help="Events CSV output.")
@click.option("--spec-out", type=click.Path(), default=None, help="Also write the spec JSON.")
@guarded
def simulate_cmd(spec_path, topology, p, q, block_size, beta, delta, mu,
                 confounded_fraction, horizon, seed, floor, out, spec_out):
    """Simulate event data from a network spec or a block topology."""
    if spec_path:
        spec = spec_from_json(Path(spec_path).read_text())
    elif topology == "confounded":
        spec = make_block_network(p, q, block_size, beta, delta, mu, confounded_fraction)
    else:
        spec = make_orthogonal_block_network(p, q, block_size, beta, delta, mu)
    ev = simulate(spec, horizon, seed, floor=floor)
    save_events(ev, out)
    if spec_out:
        Path(spec_out).write_text(spec_to_json(spec))
    report = check_stationarity(spec)
    click.echo(json.dumps({
        "events": int(ev.counts().sum()),
        "observed_mean_rate": float(np.mean(empirical_rates(ev)[: spec.p])),
        "lambda_max_omega": report.lambda_max_omega,
        "out": str(out),
    }, sort_keys=True))


@main.command("fit")
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--horizon", type=float, required=True)
@click.option("--time-unit", type=float, default=1.0)
@click.option("--bin-width", type=float, default=1.0)
@click.option("--kernel-rate", type=float, default=1.0)
@click.option("--method", type=click.Choice(["hp_trim", "naive", "hive_oracle", "hive_empirical"]),
              default="hp_trim")
@click.option("--penalty", type=click.Choice(["rate", "edge_budget", "time_split_cv"]), default="rate")
@click.option("--c", type=float, default=0.5, help="Rate-rule constant.")
@click.option("--budget", type=int, default=30, help="Edge budget.")
@click.option("--tau-select", type=float, default=None)
@click.option("--q", type=int, default=None, help="Latent dimension for hive_oracle.")
@click.option("--out-prefix", type=click.Path(), required=True)
@guarded
def fit_cmd(events_path, horizon, time_unit, bin_width, kernel_rate, method,
            penalty, c, budget, tau_select, q, out_prefix):
    """Fit one estimator to an events CSV; writes JSON, adjacency CSV, DOT."""
    ev = ingest_spikes(events_path, time_unit=time_unit, horizon=horizon)
    rates = np.full(ev.n_components, kernel_rate)
    reg = build_design(ev, rates, bin_width)
    est = fit_method(reg, method, _penalty_from_flags(penalty, c, budget), tau_select, q)
    Path(f"{out_prefix}.json").write_text(estimate_to_json(est))
    adjacency_to_csv(est, f"{out_prefix}.csv")
    Path(f"{out_prefix}.dot").write_text(estimate_to_dot(est))
    click.echo(json.dumps({
        "method": est.method, "lambda": est.lam, "tau_select": est.tau_select,
        "edges": len(est.edges), "q_used": est.q_used,
    }, sort_keys=True))


@main.command("experiment")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--seed", type=int, required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@guarded
def experiment_cmd(config_path, preset, seed, out_dir):
    """Run a replicated simulation study and write its reports."""
    if (config_path is None) == (preset is None):
        raise ConfigError("provide exactly one of --config or --preset")
    if preset:
        cfg = preset_config(preset, seed=seed)
        if PRESETS[preset]["long_running"]:
            click.echo(f"note: preset {preset} is a long-running configuration", err=True)
    else:
        cfg = ExperimentConfig.from_json(Path(config_path).read_text())
        cfg.seed = seed
    report = run_experiment(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report))
    (out / "report.csv").write_text(report_to_csv(report))
    dumps = out / "replicates"
    dumps.mkdir(exist_ok=True)
    by_rep = {}
    for row in report.replicates:
        by_rep.setdefault(row["replicate"], []).append(row)
    for rep, rows in sorted(by_rep.items()):
        (dumps / f"replicate_{rep:04d}.json").write_text(json.dumps(rows, indent=2, sort_keys=True))
    click.echo(json.dumps({"cells": len(report.cells), "out": str(out / 'report.json')}, sort_keys=True))


@main.command("ingest")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--time-unit", type=float, default=1.0)
@click.option("--horizon", type=float, required=True)
@click.option("--decimation", type=int, default=1)
@click.option("--out", type=click.Path(), required=True)
@click.option("--mapping-out", type=click.Path(), default=None)
@guarded
def ingest_cmd(input_path, time_unit, horizon, decimation, out, mapping_out):
    """Normalize a spike file into the canonical events CSV."""
    ev = ingest_spikes(input_path, time_unit=time_unit, horizon=horizon, decimation=decimation)
    save_events(ev, out)
    mapping = {
        "n_components": ev.n_components,
        "horizon": ev.horizon,
        "suggested_bin_width": time_unit * decimation,
        "labels": {str(k): v for k, v in (ev.component_labels or {}).items()},
    }
    if mapping_out:
        Path(mapping_out).write_text(json.dumps(mapping, indent=2, sort_keys=True))
    click.echo(json.dumps({"p": ev.n_components, "events": int(ev.counts().sum())}, sort_keys=True))


@main.command("holdout")
@click.option("--events", "events_path", type=click.Path(exists=True), required=True)
@click.option("--horizon", type=float, required=True)
@click.option("--time-unit", type=float, default=1.0)
@click.option("--bin-width", type=float, default=1.0)
@click.option("--kernel-rate", type=float, default=1.0)
@click.option("--hidden-ids", type=str, required=True, help="Comma-separated component ids to hide.")
@click.option("--method", type=click.Choice(["hp_trim", "naive", "hive_oracle", "hive_empirical"]),
              default="hp_trim")
@click.option("--penalty", type=click.Choice(["rate", "edge_budget", "time_split_cv"]), default="rate")
@click.option("--c", type=float, default=0.5)
@click.option("--budget", type=int, default=30)
@click.option("--tau-select", type=float, default=None)
@click.option("--q", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@guarded
def holdout_cmd(events_path, horizon, time_unit, bin_width, kernel_rate, hidden_ids,
                method, penalty, c, budget, tau_select, q, out):
    """Stability analysis: refit with some components treated as unobserved."""
    ev = ingest_spikes(events_path, time_unit=time_unit, horizon=horizon)
    try:
        hidden = [int(s) for s in hidden_ids.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad --hidden-ids: {exc}") from exc
    rates = np.full(ev.n_components, kernel_rate)
    report = stability_holdout(
        ev, hidden, method=method, penalty=_penalty_from_flags(penalty, c, budget),
        tau_select=tau_select, bin_width=bin_width, kernels=rates, q_oracle=q,
    )
    Path(out).write_text(json.dumps(report, indent=2, sort_keys=True))
    click.echo(json.dumps({"overlap_fraction": report["overlap_fraction"]}, sort_keys=True))


@main.command("export")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "dot"]), required=True)
@click.option("--out", type=click.Path(), required=True)
@guarded
def export_cmd(input_path, fmt, out):
    """Convert a stored report or estimate to another format."""
    text = Path(input_path).read_text()
    try:
        kind = json.loads(text).get("kind")
    except json.JSONDecodeError as exc:
        raise DataError(f"{input_path}: not a JSON document: {exc}") from exc
    if kind == "experiment_report":
        payload = report_from_json(text)
    elif kind == "network_estimate":
        payload = estimate_from_json(text)
    else:
        raise DataError(f"{input_path}: unrecognized document kind {kind!r}")
    export_report(payload, fmt, out)
    click.echo(json.dumps({"out": str(out), "format": fmt}, sort_keys=True))


if __name__ == "__main__":
    main()
