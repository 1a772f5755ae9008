"""Configuration-driven studies: simulate, fit, score, aggregate.

Replicates draw deterministic sub-streams from the master seed, so a rerun
with the same config is byte-identical, including the exported JSON (wall
clock timings are kept out of the canonical report for that reason and are
only available on the in-memory object).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ._kernels import derive_stream
from .design import build_design
from .errors import ConfigError, DataError
from .estimators import (
    METHODS,
    NetworkEstimate,
    edge_metrics,
    estimate_to_dot,
    estimate_to_json,
    fit_hive,
    fit_hp_trim,
    fit_naive,
)
from .lasso import PenaltyRule
from .network import NetworkSpec, make_block_network, make_orthogonal_block_network
from .simulate import EventData, simulate

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "PRESETS",
    "preset_config",
    "build_spec",
    "run_experiment",
    "report_to_json",
    "report_from_json",
    "report_to_csv",
    "export_report",
    "ingest_spikes",
    "stability_holdout",
    "fit_method",
]

TOPOLOGIES = ("confounded", "orthogonal")


@dataclass
class ExperimentConfig:
    topology: str
    p: int
    q: int
    block_size: int
    beta: float
    delta: float
    mu: float
    horizons: list[float]
    n_replicates: int
    methods: list[str]
    penalty: PenaltyRule
    seed: int
    tau_select: float | None = None
    bin_width: float = 1.0
    confounded_fraction: float = 0.5
    floor: float = 0.0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.n_replicates < 1:
            raise ConfigError("n_replicates must be at least 1")
        if not self.horizons:
            raise ConfigError("at least one horizon required")
        self.horizons = [float(h) for h in self.horizons]
        self.methods = list(self.methods)
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["penalty"] = {k: v for k, v in asdict(self.penalty).items()}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            doc = dict(doc)
            pen = doc.pop("penalty")
            return cls(penalty=PenaltyRule(**pen), **doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed experiment config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def _preset(topology, beta, delta, p, reps, methods, budget, long_running):
    return {
        "config": dict(
            topology=topology,
            p=p,
            q=p,
            block_size=5,
            beta=beta,
            delta=delta,
            mu=0.05,
            horizons=[1000.0, 5000.0],
            n_replicates=reps,
            methods=list(methods),
            penalty=PenaltyRule.edge_budget(budget),
            seed=0,
        ),
        "long_running": long_running,
    }


# desk presets run in minutes; paper-scale presets are hours-long jobs
PRESETS = {
    "fig2-desk": _preset("confounded", 0.12, 0.10, 20, 20,
                         ("hp_trim", "naive", "hive_oracle"), 80, False),
    "fig3-desk": _preset("orthogonal", 0.20, 0.18, 20, 20,
                         ("hp_trim", "naive", "hive_oracle", "hive_empirical"), 40, False),
    "fig2-paper": _preset("confounded", 0.12, 0.10, 100, 100,
                          ("hp_trim", "naive", "hive_oracle"), 400, True),
    "fig3-paper": _preset("orthogonal", 0.20, 0.18, 100, 100,
                          ("hp_trim", "naive", "hive_oracle", "hive_empirical"), 200, True),
}


def preset_config(name: str, seed: int | None = None, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name]["config"])
    params.update(overrides)
    if seed is not None:
        params["seed"] = seed
    return ExperimentConfig(**params)


def build_spec(cfg: ExperimentConfig) -> NetworkSpec:
    if cfg.topology == "confounded":
        return make_block_network(
            cfg.p, cfg.q, cfg.block_size, cfg.beta, cfg.delta, cfg.mu, cfg.confounded_fraction
        )
    return make_orthogonal_block_network(cfg.p, cfg.q, cfg.block_size, cfg.beta, cfg.delta, cfg.mu)


def fit_method(reg, method: str, penalty: PenaltyRule, tau_select=None, q_oracle=None) -> NetworkEstimate:
    """Dispatch one estimator by name."""
    if method == "hp_trim":
        return fit_hp_trim(reg, penalty, tau_select=tau_select)
    if method == "naive":
        return fit_naive(reg, penalty, tau_select=tau_select)
    if method == "hive_oracle":
        if q_oracle is None:
            raise ConfigError("hive_oracle requires the latent dimension q")
        return fit_hive(reg, penalty, q=int(q_oracle), tau_select=tau_select)
    if method == "hive_empirical":
        return fit_hive(reg, penalty, q=None, tau_select=tau_select)
    raise ConfigError(f"unknown method {method!r}")


@dataclass
class ExperimentReport:
    """Aggregated study results plus the per-replicate records they came from."""

    config: dict
    cells: list[dict]
    replicates: list[dict]
    runtime: dict = field(default_factory=dict)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the full replicate grid of a config.

    Per replicate r and horizon index h the simulation seed is
    ``derive_stream(cfg.seed, r, h)``; everything downstream is
    deterministic, so reruns reproduce the report exactly.
    """
    spec = build_spec(cfg)
    q_oracle = int(np.linalg.matrix_rank(spec.delta)) if spec.q else 0
    rows = []
    t_start = time.perf_counter()
    fit_seconds = {m: 0.0 for m in cfg.methods}
    for rep in range(cfg.n_replicates):
        for h_idx, horizon in enumerate(cfg.horizons):
            seed_rh = derive_stream(cfg.seed, rep, h_idx)
            ev = simulate(spec, horizon, seed_rh, floor=cfg.floor)
            reg = build_design(ev, spec.kernel, cfg.bin_width)
            for method in cfg.methods:
                t0 = time.perf_counter()
                est = fit_method(reg, method, cfg.penalty, cfg.tau_select, q_oracle)
                fit_seconds[method] += time.perf_counter() - t0
                met = edge_metrics(est, spec)
                rows.append(
                    {
                        "replicate": rep,
                        "horizon": float(horizon),
                        "method": method,
                        "seed": seed_rh,
                        "tp": met.tp,
                        "fp": met.fp,
                        "fn": met.fn,
                        "precision": met.precision,
                        "recall": met.recall,
                        "l1_error": met.l1_error,
                        "lambda": est.lam,
                        "tau_select": est.tau_select,
                        "q_used": est.q_used,
                    }
                )
    cells = _aggregate(rows, cfg)
    runtime = {"total_seconds": time.perf_counter() - t_start, "fit_seconds": fit_seconds}
    return ExperimentReport(config=cfg.to_dict(), cells=cells, replicates=rows, runtime=runtime)


def _aggregate(rows: list[dict], cfg: ExperimentConfig) -> list[dict]:
    def stats(vals):
        arr = np.array(vals, dtype=float)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), sd

    cells = []
    for method in cfg.methods:
        for horizon in cfg.horizons:
            sel = [r for r in rows if r["method"] == method and r["horizon"] == float(horizon)]
            cell = {"method": method, "horizon": float(horizon), "n_replicates": len(sel)}
            for key in ("tp", "fp", "l1_error"):
                mean, sd = stats([r[key] for r in sel])
                cell[f"{key}_mean"] = mean
                cell[f"{key}_sd"] = sd
            cells.append(cell)
    return cells


def report_to_json(report: ExperimentReport, include_runtime: bool = False) -> str:
    """Canonical JSON. Runtime is volatile and excluded unless asked for."""
    doc = {
        "kind": "experiment_report",
        "config": report.config,
        "cells": report.cells,
        "replicates": report.replicates,
    }
    if include_runtime:
        doc["runtime"] = report.runtime
    return json.dumps(doc, indent=2, sort_keys=True)


def report_from_json(text: str) -> ExperimentReport:
    doc = json.loads(text)
    if doc.get("kind") != "experiment_report":
        raise ConfigError("not an experiment report document")
    return ExperimentReport(
        config=doc["config"], cells=doc["cells"], replicates=doc["replicates"]
    )


def report_to_csv(report: ExperimentReport) -> str:
    """One row per (method, horizon) cell."""
    cols = ["method", "horizon", "n_replicates", "tp_mean", "tp_sd",
            "fp_mean", "fp_sd", "l1_error_mean", "l1_error_sd"]
    lines = [",".join(cols)]
    for cell in report.cells:
        lines.append(",".join(repr(cell[c]) if isinstance(cell[c], float) else str(cell[c]) for c in cols))
    return "\n".join(lines) + "\n"


def export_report(payload, fmt: str, path) -> None:
    """Write a report or estimate in the requested format.

    JSON and CSV accept reports; DOT is only defined for network
    estimates. Unsupported combinations raise :class:`ConfigError`.
    """
    fmt = fmt.lower()
    if isinstance(payload, ExperimentReport):
        if fmt == "json":
            text = report_to_json(payload)
        elif fmt == "csv":
            text = report_to_csv(payload)
        else:
            raise ConfigError(f"format {fmt!r} not supported for experiment reports")
    elif isinstance(payload, NetworkEstimate):
        if fmt == "json":
            text = estimate_to_json(payload)
        elif fmt == "dot":
            text = estimate_to_dot(payload)
        else:
            raise ConfigError(f"format {fmt!r} not supported for network estimates")
    else:
        raise ConfigError(f"cannot export object of type {type(payload).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def ingest_spikes(path, time_unit: float = 1.0, horizon: float = None, decimation: int = 1) -> EventData:
    """Read ``component_id,time`` records into EventData.

    Raw times are multiplied by ``time_unit`` (e.g. 1/30000 for sample
    indices of a 30 kHz recording) and must land in [0, horizon) in
    ascending order; offending lines are reported. Components are
    re-indexed densely (numeric order when all ids are numeric) with the
    mapping kept in ``component_labels``. ``decimation`` is validated here
    and used by the CLI to derive a default bin width of
    ``time_unit * decimation``; event times themselves are not coarsened.
    """
    if horizon is None or horizon <= 0:
        raise ConfigError("ingest requires a positive horizon")
    if time_unit <= 0:
        raise ConfigError("time_unit must be positive")
    if int(decimation) < 1:
        raise ConfigError("decimation must be a positive integer")

    ids, times, bad = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        prev = -np.inf
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1 and (len(parts) != 2 or not _is_number(parts[1])):
                continue  # header row
            if len(parts) != 2 or not _is_number(parts[1]):
                bad.append(f"line {lineno}: unparseable record {line!r}")
                continue
            t = float(parts[1]) * time_unit
            if t < 0:
                bad.append(f"line {lineno}: negative time {parts[1]}")
            elif t >= horizon:
                bad.append(f"line {lineno}: time {parts[1]} outside [0, horizon)")
            elif t < prev:
                bad.append(f"line {lineno}: times not ascending")
            else:
                prev = t
                ids.append(parts[0])
                times.append(t)
    if bad:
        shown = "; ".join(bad[:10]) + ("; ..." if len(bad) > 10 else "")
        raise DataError(f"{path}: {len(bad)} bad record(s): {shown}")
    if not ids:
        raise DataError(f"{path}: no events to fit (p = 0)")

    unique = sorted(set(ids), key=lambda s: (float(s) if _is_number(s) else np.inf, s))
    index = {cid: k for k, cid in enumerate(unique)}
    events = [[] for _ in unique]
    for cid, t in zip(ids, times):
        events[index[cid]].append(t)
    return EventData(
        n_components=len(unique),
        horizon=float(horizon),
        events=[np.array(t) for t in events],
        observed_ids=np.arange(len(unique)),
        component_labels={k: cid for cid, k in index.items()},
    )


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def stability_holdout(
    ev: EventData,
    hidden_ids,
    method: str = "hp_trim",
    penalty: PenaltyRule | None = None,
    tau_select: float | None = None,
    bin_width: float = 1.0,
    kernels=None,
    q_oracle: int | None = None,
) -> dict:
    """Compare edges fit on all components against a fit that hides some.

    Reports, over the retained sub-network, the fraction of edges of the
    reduced fit also present in the (restricted) full fit. Edge indices in
    the report are component ids of ``ev``, not positional.
    """
    penalty = penalty or PenaltyRule.rate()
    observed = [int(i) for i in ev.observed_ids]
    hidden = sorted(int(i) for i in hidden_ids)
    if any(h not in observed for h in hidden):
        raise ConfigError("hidden_ids must be a subset of the observed components")
    retained = [i for i in observed if i not in set(hidden)]
    if not retained:
        raise ConfigError("cannot hide every observed component")

    def edges_by_id(est, id_order):
        return {(id_order[i], id_order[j]) for i, j in est.edges}

    reg_full = build_design(ev, kernels, bin_width)
    est_full = fit_method(reg_full, method, penalty, tau_select, q_oracle)
    full_ids = edges_by_id(est_full, observed)

    reg_red = build_design(ev.restrict_observed(retained), kernels, bin_width)
    est_red = fit_method(reg_red, method, penalty, tau_select, q_oracle)
    red_ids = edges_by_id(est_red, retained)

    keep = set(retained)
    full_restricted = {e for e in full_ids if e[0] in keep and e[1] in keep}
    overlap = len(red_ids & full_restricted) / len(red_ids) if red_ids else 1.0
    return {
        "method": method,
        "hidden_ids": hidden,
        "retained_ids": retained,
        "n_edges_full": len(full_ids),
        "n_edges_full_restricted": len(full_restricted),
        "n_edges_reduced": len(red_ids),
        "edges_reduced": sorted(red_ids),
        "edges_full_restricted": sorted(full_restricted),
        "overlap_fraction": overlap,
    }
