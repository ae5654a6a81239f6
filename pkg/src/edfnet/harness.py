"""Experiment harness: configs, reports, and profile comparison.

A config file (YAML, schema in docs/config_schema.md) describes a
network, a conditioning protocol for the simulator, and prediction
options.  ``run_experiment`` runs one simulation per seed, pools
conditioned snapshots, builds empirical lead-time profile bands per
station, solves the frontier equations for the conditioning totals,
and lays the predicted profile over the empirical ones.

Reports are pure functions of (config, seeds): nothing time- or
machine-dependent enters them, so repeated runs export byte-identical
files.  The CSV flavour holds the per-station curves in the fixed
column order ``station,y,emp_min,emp_mean,emp_max,theory``; the YAML
flavour holds the full report and parses back to an equal object.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from . import dists
from .errors import (
    GridMismatch,
    NoSnapshots,
    ParseError,
    ValidationError,
)
from .frontier import (
    FrontierSolution,
    WeightedModel,
    count_model,
    normalize_by_intensity,
    predict_profile,
    solve_frontiers,
    work_model,
)
from .leadtime import LeadTimeDist, PiecewiseLinearCDF, PointMass, Uniform
from .simulator import (
    Condition,
    CountBands,
    ExactCounts,
    Snapshot,
    TotalCounts,
    behind_frontier_stats,
    conditional_sample,
    new_sim,
)
from .topology import ClassSpec, NetworkSpec, build_topology

__all__ = [
    "ExperimentConfig",
    "StationProfile",
    "ProfileReport",
    "SEED_ENV_VAR",
    "CSV_HEADER",
    "parse_config",
    "config_from_dict",
    "config_to_dict",
    "run_experiment",
    "empirical_bands",
    "compare_profiles",
    "export_report",
    "parse_report",
    "read_profile_csv",
]

SEED_ENV_VAR = "EDFNET_SEED"
CSV_HEADER = ("station", "y", "emp_min", "emp_mean", "emp_max", "theory")


# -------- configuration --------

@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkSpec
    seeds: Tuple[int, ...]
    condition: Optional[Condition]
    threshold: float
    snapshot_count: int
    horizon_cap: float
    preemptive: bool
    weight_kind: str         # "count" or "work"
    normalize: bool
    grid: Tuple[float, ...]


def default_seed() -> int:
    """Seed used when neither config nor flags provide one; the
    environment variable EDFNET_SEED overrides the built-in 0."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def parse_config(path: Union[str, "os.PathLike[str]"]) -> ExperimentConfig:
    """Load and validate a config file.  ParseError carries the YAML
    location on malformed input; ValidationError names the offending
    field on schema violations."""
    with open(path, "r") as handle:
        text = handle.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"{path}: invalid YAML{where}: {exc}")
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: top level must be a mapping")
    return config_from_dict(raw)


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise ValidationError(f"{where}: missing required field '{key}'")
    return mapping[key]


def _reject_unknown(mapping: Mapping, allowed: Sequence[str], where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}: unknown fields {unknown}")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: expected an integer, got {value!r}")
    return value


def _lead_from_dict(d, where: str) -> LeadTimeDist:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected a mapping with a 'kind'")
    kind = _require(d, "kind", where)
    try:
        if kind == "point":
            _reject_unknown(d, ("kind", "value"), where)
            return PointMass(_as_float(_require(d, "value", where), where))
        if kind == "uniform":
            _reject_unknown(d, ("kind", "lo", "hi"), where)
            return Uniform(_as_float(_require(d, "lo", where), where),
                           _as_float(_require(d, "hi", where), where))
        if kind == "piecewise":
            _reject_unknown(d, ("kind", "knots"), where)
            knots = _require(d, "knots", where)
            return PiecewiseLinearCDF([(float(a), float(b)) for a, b in knots])
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{where}: {exc}")
    raise ValidationError(f"{where}: unknown lead-time kind {kind!r}")


def _lead_to_dict(dist: LeadTimeDist) -> Dict:
    if isinstance(dist, PointMass):
        return {"kind": "point", "value": dist.value}
    if isinstance(dist, Uniform):
        return {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, PiecewiseLinearCDF):
        return {"kind": "piecewise", "knots": [list(p) for p in dist.knots]}
    raise TypeError(f"cannot serialize {type(dist).__name__}")


def _law_from_dict(d, where: str) -> dists.SamplingLaw:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected a mapping with a 'kind'")
    kind = _require(d, "kind", where)
    try:
        if kind == "exponential":
            _reject_unknown(d, ("kind", "rate"), where)
            return dists.Exponential(_as_float(_require(d, "rate", where), where))
        if kind == "deterministic":
            _reject_unknown(d, ("kind", "value"), where)
            return dists.Deterministic(_as_float(_require(d, "value", where), where))
        if kind == "uniform":
            _reject_unknown(d, ("kind", "lo", "hi"), where)
            return dists.Uniform(_as_float(_require(d, "lo", where), where),
                                 _as_float(_require(d, "hi", where), where))
        if kind == "sequence":
            _reject_unknown(d, ("kind", "values", "then"), where)
            values = [float(v) for v in _require(d, "values", where)]
            then = _as_float(d["then"], where) if "then" in d else math.inf
            return dists.Sequence(tuple(values), then)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{where}: {exc}")
    raise ValidationError(f"{where}: unknown sampling-law kind {kind!r}")


def _law_to_dict(law: dists.SamplingLaw) -> Dict:
    if isinstance(law, dists.Exponential):
        return {"kind": "exponential", "rate": law.rate}
    if isinstance(law, dists.Deterministic):
        return {"kind": "deterministic", "value": law.value}
    if isinstance(law, dists.Uniform):
        return {"kind": "uniform", "lo": law.lo, "hi": law.hi}
    if isinstance(law, dists.Sequence):
        out = {"kind": "sequence", "values": list(law.values)}
        if math.isfinite(law.then):
            out["then"] = law.then
        return out
    raise TypeError(f"cannot serialize {type(law).__name__}")


def _network_from_dict(d, where: str = "network") -> NetworkSpec:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected a mapping")
    _reject_unknown(d, ("stations", "classes"), where)
    stations = _as_int(_require(d, "stations", where), f"{where}.stations")
    raw_classes = _require(d, "classes", where)
    if not isinstance(raw_classes, list) or not raw_classes:
        raise ValidationError(f"{where}.classes: expected a nonempty list")
    classes = []
    for idx, entry in enumerate(raw_classes):
        cw = f"{where}.classes[{idx}]"
        if not isinstance(entry, dict):
            raise ValidationError(f"{cw}: expected a mapping")
        _reject_unknown(entry, ("id", "route", "arrival_rate", "service_rates",
                                "lead_time", "interarrival", "service_laws"), cw)
        cid = _as_int(_require(entry, "id", cw), f"{cw}.id")
        route = _require(entry, "route", cw)
        if not isinstance(route, list):
            raise ValidationError(f"{cw}.route: expected a list of station ids")
        rate = _as_float(_require(entry, "arrival_rate", cw), f"{cw}.arrival_rate")
        lead = _lead_from_dict(_require(entry, "lead_time", cw), f"{cw}.lead_time")
        service = entry.get("service_rates", 1.0)
        if isinstance(service, dict):
            service = {_as_int(k, f"{cw}.service_rates"): _as_float(v, f"{cw}.service_rates")
                       for k, v in service.items()}
        else:
            service = _as_float(service, f"{cw}.service_rates")
        gap_law = None
        if "interarrival" in entry:
            gap_law = _law_from_dict(entry["interarrival"], f"{cw}.interarrival")
        service_laws = None
        if "service_laws" in entry:
            raw = entry["service_laws"]
            if not isinstance(raw, dict):
                raise ValidationError(f"{cw}.service_laws: expected a mapping")
            service_laws = {_as_int(k, f"{cw}.service_laws"):
                            _law_from_dict(v, f"{cw}.service_laws[{k}]")
                            for k, v in raw.items()}
        try:
            classes.append(ClassSpec(
                id=cid, route=tuple(int(j) for j in route), arrival_rate=rate,
                lead_time=lead, service_rates=service,
                interarrival=gap_law, service_laws=service_laws))
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"{cw}: {exc}")
    try:
        return NetworkSpec(station_count=stations, classes=tuple(classes))
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{where}: {exc}")


def _network_to_dict(net: NetworkSpec) -> Dict:
    classes = []
    for c in net.classes:
        entry: Dict = {
            "id": c.id,
            "route": list(c.route),
            "arrival_rate": c.arrival_rate,
            "lead_time": _lead_to_dict(c.lead_time),
        }
        if isinstance(c.service_rates, Mapping):
            entry["service_rates"] = {int(k): float(v)
                                      for k, v in sorted(c.service_rates.items())}
        else:
            entry["service_rates"] = float(c.service_rates)
        if c.interarrival is not None:
            entry["interarrival"] = _law_to_dict(c.interarrival)
        if c.service_laws is not None:
            entry["service_laws"] = {int(k): _law_to_dict(v)
                                     for k, v in sorted(c.service_laws.items())}
        classes.append(entry)
    return {"stations": net.station_count, "classes": classes}


def _condition_from_dict(d, where: str) -> Condition:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected a mapping with a 'kind'")
    kind = _require(d, "kind", where)
    if kind == "exact":
        _reject_unknown(d, ("kind", "targets"), where)
        targets = _require(d, "targets", where)
        return ExactCounts({_as_int(j, where): tuple(_as_int(v, where) for v in vec)
                            for j, vec in targets.items()})
    if kind == "total":
        _reject_unknown(d, ("kind", "targets"), where)
        targets = _require(d, "targets", where)
        return TotalCounts({_as_int(j, where): _as_int(v, where)
                            for j, v in targets.items()})
    if kind == "band":
        _reject_unknown(d, ("kind", "bands"), where)
        bands = _require(d, "bands", where)
        out = {}
        for j, pair in bands.items():
            lo, hi = (_as_int(v, where) for v in pair)
            if lo > hi:
                raise ValidationError(f"{where}: band [{lo}, {hi}] is empty")
            out[_as_int(j, where)] = (lo, hi)
        return CountBands(out)
    raise ValidationError(f"{where}: unknown condition kind {kind!r}")


def _condition_to_dict(cond: Condition) -> Dict:
    if isinstance(cond, ExactCounts):
        return {"kind": "exact",
                "targets": {int(j): list(v) for j, v in sorted(cond.targets.items())}}
    if isinstance(cond, TotalCounts):
        return {"kind": "total",
                "targets": {int(j): int(v) for j, v in sorted(cond.targets.items())}}
    if isinstance(cond, CountBands):
        return {"kind": "band",
                "bands": {int(j): list(v) for j, v in sorted(cond.bands.items())}}
    raise TypeError(f"cannot serialize {type(cond).__name__}")


def _grid_from_dict(d, net: NetworkSpec, where: str) -> Tuple[float, ...]:
    if d is None:
        hi = max(c.lead_time.upper_support for c in net.classes)
        return tuple(np.linspace(0.0, 1.05 * hi, 211))
    if isinstance(d, list):
        grid = [_as_float(v, where) for v in d]
    elif isinstance(d, dict):
        _reject_unknown(d, ("lo", "hi", "points"), where)
        lo = _as_float(_require(d, "lo", where), where)
        hi = _as_float(_require(d, "hi", where), where)
        pts = _as_int(_require(d, "points", where), where)
        if pts < 2 or not lo < hi:
            raise ValidationError(f"{where}: need lo < hi and points >= 2")
        grid = list(np.linspace(lo, hi, pts))
    else:
        raise ValidationError(f"{where}: expected a list or lo/hi/points mapping")
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError(f"{where}: grid must be strictly increasing, length >= 2")
    return tuple(float(v) for v in grid)


def config_from_dict(raw: Mapping) -> ExperimentConfig:
    _reject_unknown(raw, ("network", "experiment", "prediction"), "config")
    net = _network_from_dict(_require(raw, "network", "config"))

    exp = raw.get("experiment") or {}
    if not isinstance(exp, dict):
        raise ValidationError("experiment: expected a mapping")
    _reject_unknown(exp, ("seeds", "condition", "threshold", "snapshots",
                          "horizon_cap", "preemptive"), "experiment")
    if "seeds" in exp:
        seeds = tuple(_as_int(s, "experiment.seeds") for s in exp["seeds"])
        if not seeds:
            raise ValidationError("experiment.seeds: must not be empty")
    else:
        seeds = (default_seed(),)
    condition = None
    if "condition" in exp:
        condition = _condition_from_dict(exp["condition"], "experiment.condition")
    threshold = _as_float(exp.get("threshold", 1.0), "experiment.threshold")
    if not threshold > 0:
        raise ValidationError("experiment.threshold: must be positive")
    snapshots = _as_int(exp.get("snapshots", 50), "experiment.snapshots")
    if snapshots < 1:
        raise ValidationError("experiment.snapshots: must be at least 1")
    horizon = _as_float(exp.get("horizon_cap", 1e6), "experiment.horizon_cap")
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValidationError("experiment.horizon_cap: must be positive and finite")
    preemptive = exp.get("preemptive", False)
    if not isinstance(preemptive, bool):
        raise ValidationError("experiment.preemptive: expected true/false")

    pred = raw.get("prediction") or {}
    if not isinstance(pred, dict):
        raise ValidationError("prediction: expected a mapping")
    _reject_unknown(pred, ("weights", "normalize", "grid"), "prediction")
    weight_kind = pred.get("weights", "count")
    if weight_kind not in ("count", "work"):
        raise ValidationError(f"prediction.weights: expected 'count' or 'work', "
                              f"got {weight_kind!r}")
    normalize = pred.get("normalize", True)
    if not isinstance(normalize, bool):
        raise ValidationError("prediction.normalize: expected true/false")
    grid = _grid_from_dict(pred.get("grid"), net, "prediction.grid")

    return ExperimentConfig(
        network=net, seeds=seeds, condition=condition, threshold=threshold,
        snapshot_count=snapshots, horizon_cap=horizon, preemptive=preemptive,
        weight_kind=weight_kind, normalize=normalize, grid=grid)


def config_to_dict(cfg: ExperimentConfig) -> Dict:
    out: Dict = {"network": _network_to_dict(cfg.network)}
    exp: Dict = {
        "seeds": list(cfg.seeds),
        "threshold": cfg.threshold,
        "snapshots": cfg.snapshot_count,
        "horizon_cap": cfg.horizon_cap,
        "preemptive": cfg.preemptive,
    }
    if cfg.condition is not None:
        exp["condition"] = _condition_to_dict(cfg.condition)
    out["experiment"] = exp
    out["prediction"] = {
        "weights": cfg.weight_kind,
        "normalize": cfg.normalize,
        "grid": list(cfg.grid),
    }
    return out


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


# -------- empirical bands and comparison --------

def empirical_bands(
    snapshots: Sequence[Snapshot], j: int, grid: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise min/mean/max of the per-snapshot lead-time CDFs.

    Each snapshot's station content defines one empirical CDF on the
    grid; a snapshot with nothing at the station counts as the
    constant CDF 1 (all of nothing is below every level).
    """
    if len(snapshots) == 0:
        raise NoSnapshots(f"no snapshots to build bands for station {j}")
    pts = np.asarray(grid, dtype=float)
    curves = np.empty((len(snapshots), len(pts)))
    for i, snap in enumerate(snapshots):
        leads = np.sort(np.asarray(snap.leads(j), dtype=float))
        if len(leads) == 0:
            curves[i] = 1.0
        else:
            curves[i] = np.searchsorted(leads, pts, side="right") / len(leads)
    return curves.min(axis=0), curves.mean(axis=0), curves.max(axis=0)


def compare_profiles(
    grid: Sequence[float], a: Sequence[float], b: Sequence[float]
) -> Tuple[float, float]:
    """(sup distance, span-normalized L1 distance) between two curves.

    The L1 part is the trapezoidal integral of |a - b| over the grid
    divided by the grid span, so both numbers are scale-free and
    comparable.  GridMismatch when the lengths disagree.
    """
    pts = np.asarray(grid, dtype=float)
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if len(av) != len(pts) or len(bv) != len(pts):
        raise GridMismatch(f"curve lengths {len(av)}, {len(bv)} do not match "
                           f"grid length {len(pts)}")
    if len(pts) < 2:
        raise GridMismatch("need at least two grid points")
    diff = np.abs(av - bv)
    sup = float(diff.max())
    steps = np.diff(pts)
    area = float(np.sum(0.5 * (diff[1:] + diff[:-1]) * steps))
    return sup, area / float(pts[-1] - pts[0])


# -------- reports --------

@dataclass(frozen=True)
class StationProfile:
    station: int
    emp_min: Tuple[float, ...]
    emp_mean: Tuple[float, ...]
    emp_max: Tuple[float, ...]
    theory: Tuple[float, ...]
    sup_distance: float
    l1_distance: float
    behind_fraction_by_seed: Tuple[float, ...]
    behind_fraction_mean: float


@dataclass(frozen=True)
class ProfileReport:
    grid: Tuple[float, ...]
    stations: Tuple[StationProfile, ...]
    loads: Tuple[float, ...]
    frontiers: Tuple[float, ...]
    permutation: Tuple[int, ...]
    weight_kind: str
    normalized: bool
    seeds: Tuple[int, ...]
    snapshot_count: int
    partial: bool
    sim_time: float          # total simulated duration, summed over seeds
    config_digest: str

    def station(self, j: int) -> StationProfile:
        for sp in self.stations:
            if sp.station == j:
                return sp
        raise KeyError(j)


def _conditioning_loads(condition: Condition, station_count: int) -> List[float]:
    if isinstance(condition, ExactCounts):
        totals = {j: float(sum(vec)) for j, vec in condition.targets.items()}
    elif isinstance(condition, TotalCounts):
        totals = {j: float(v) for j, v in condition.targets.items()}
    elif isinstance(condition, CountBands):
        totals = {j: 0.5 * (lo + hi) for j, (lo, hi) in condition.bands.items()}
    else:
        raise ValidationError(f"unsupported condition {type(condition).__name__}")
    missing = [j for j in range(1, station_count + 1) if j not in totals]
    if missing:
        raise ValidationError(
            f"condition must cover every station for prediction; missing {missing}")
    return [totals[j] for j in range(1, station_count + 1)]


def prediction_model(cfg: ExperimentConfig) -> WeightedModel:
    topo = build_topology(cfg.network)
    model = count_model(topo) if cfg.weight_kind == "count" else work_model(topo)
    if cfg.normalize:
        model = normalize_by_intensity(model)
    return model


def theory_cdf(model: WeightedModel, solution: FrontierSolution, j: int,
               grid: Sequence[float]) -> np.ndarray:
    """Predicted lead-time CDF at a station on a grid.

    The predicted mass above level y, divided by the predicted station
    total, gives the complementary CDF; a station predicted empty gets
    the constant CDF 1, mirroring the empirical convention.
    """
    total = predict_profile(model, solution, j, -math.inf)
    if total <= 0.0:
        return np.ones(len(grid))
    return np.array([1.0 - predict_profile(model, solution, j, y) / total
                     for y in grid])


def run_experiment(cfg: ExperimentConfig) -> ProfileReport:
    """Simulate, pool conditioned snapshots, and score the prediction.

    Each seed contributes an equal share of the snapshot quota
    (rounded up).  Seeds whose horizon expires early leave the report
    flagged partial; with no snapshots at all the bands are undefined
    and NoSnapshots is raised.
    """
    if cfg.condition is None:
        raise ValidationError("experiment.condition is required to run an experiment")
    J = cfg.network.station_count
    loads = _conditioning_loads(cfg.condition, J)
    quota = -(-cfg.snapshot_count // len(cfg.seeds))  # ceil division

    pool: List[Snapshot] = []
    behind: Dict[int, List[float]] = {j: [] for j in range(1, J + 1)}
    partial = False
    sim_time = 0.0
    for seed in cfg.seeds:
        sim = new_sim(cfg.network, seed=seed, preemptive=cfg.preemptive)
        result = conditional_sample(
            sim, cfg.condition, threshold=cfg.threshold,
            count=quota, horizon_cap=cfg.horizon_cap)
        pool.extend(result.snapshots)
        partial = partial or result.exhausted
        sim_time += sim.clock
        for j in range(1, J + 1):
            behind[j].append(behind_frontier_stats(sim, j).time_avg_fraction)
    if not pool:
        raise NoSnapshots("horizon expired before any snapshot was taken")

    model = prediction_model(cfg)
    solution = solve_frontiers(model, loads)
    stations = []
    for j in range(1, J + 1):
        lo, mean, hi = empirical_bands(pool, j, cfg.grid)
        theory = theory_cdf(model, solution, j, cfg.grid)
        sup, l1 = compare_profiles(cfg.grid, mean, theory)
        stations.append(StationProfile(
            station=j,
            emp_min=tuple(float(v) for v in lo),
            emp_mean=tuple(float(v) for v in mean),
            emp_max=tuple(float(v) for v in hi),
            theory=tuple(float(v) for v in theory),
            sup_distance=float(sup),
            l1_distance=float(l1),
            behind_fraction_by_seed=tuple(float(v) for v in behind[j]),
            behind_fraction_mean=float(np.mean(behind[j])),
        ))
    return ProfileReport(
        grid=tuple(float(v) for v in cfg.grid),
        stations=tuple(stations),
        loads=tuple(float(v) for v in loads),
        frontiers=tuple(float(v) for v in solution.frontiers),
        permutation=solution.permutation,
        weight_kind=cfg.weight_kind,
        normalized=cfg.normalize,
        seeds=cfg.seeds,
        snapshot_count=len(pool),
        partial=partial,
        sim_time=float(sim_time),
        config_digest=config_hash(cfg),
    )


# -------- export / import --------

def report_to_dict(report: ProfileReport) -> Dict:
    return {
        "grid": list(report.grid),
        "stations": [
            {
                "station": sp.station,
                "emp_min": list(sp.emp_min),
                "emp_mean": list(sp.emp_mean),
                "emp_max": list(sp.emp_max),
                "theory": list(sp.theory),
                "sup_distance": sp.sup_distance,
                "l1_distance": sp.l1_distance,
                "behind_fraction_by_seed": list(sp.behind_fraction_by_seed),
                "behind_fraction_mean": sp.behind_fraction_mean,
            }
            for sp in report.stations
        ],
        "loads": list(report.loads),
        "frontiers": list(report.frontiers),
        "permutation": list(report.permutation),
        "weight_kind": report.weight_kind,
        "normalized": report.normalized,
        "seeds": list(report.seeds),
        "snapshot_count": report.snapshot_count,
        "partial": report.partial,
        "sim_time": report.sim_time,
        "config_digest": report.config_digest,
    }


def report_from_dict(raw: Mapping) -> ProfileReport:
    try:
        stations = tuple(
            StationProfile(
                station=int(sp["station"]),
                emp_min=tuple(float(v) for v in sp["emp_min"]),
                emp_mean=tuple(float(v) for v in sp["emp_mean"]),
                emp_max=tuple(float(v) for v in sp["emp_max"]),
                theory=tuple(float(v) for v in sp["theory"]),
                sup_distance=float(sp["sup_distance"]),
                l1_distance=float(sp["l1_distance"]),
                behind_fraction_by_seed=tuple(float(v)
                                              for v in sp["behind_fraction_by_seed"]),
                behind_fraction_mean=float(sp["behind_fraction_mean"]),
            )
            for sp in raw["stations"]
        )
        return ProfileReport(
            grid=tuple(float(v) for v in raw["grid"]),
            stations=stations,
            loads=tuple(float(v) for v in raw["loads"]),
            frontiers=tuple(float(v) for v in raw["frontiers"]),
            permutation=tuple(int(v) for v in raw["permutation"]),
            weight_kind=str(raw["weight_kind"]),
            normalized=bool(raw["normalized"]),
            seeds=tuple(int(v) for v in raw["seeds"]),
            snapshot_count=int(raw["snapshot_count"]),
            partial=bool(raw["partial"]),
            sim_time=float(raw["sim_time"]),
            config_digest=str(raw["config_digest"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed report: {exc}")


def render_report_csv(report: ProfileReport) -> str:
    """CSV text for a report; formatting is repr-exact and stable."""
    lines = []
    if report.partial:
        lines.append("# partial=true")
    lines.append(",".join(CSV_HEADER))
    for sp in report.stations:
        for y, a, b, c, t in zip(report.grid, sp.emp_min, sp.emp_mean,
                                 sp.emp_max, sp.theory):
            lines.append(f"{sp.station},{y!r},{a!r},{b!r},{c!r},{t!r}")
    return "\n".join(lines) + "\n"


def render_report_yaml(report: ProfileReport) -> str:
    return yaml.safe_dump(report_to_dict(report), sort_keys=True,
                          default_flow_style=False)


def export_report(
    report: ProfileReport,
    csv_path: Optional[str] = None,
    yaml_path: Optional[str] = None,
) -> None:
    """Write the CSV and/or YAML renderings; byte-identical for equal
    reports.  A partial report carries a '# partial=true' comment line
    above the CSV header and a partial flag in the YAML."""
    if csv_path is not None:
        with open(csv_path, "w", newline="") as handle:
            handle.write(render_report_csv(report))
    if yaml_path is not None:
        with open(yaml_path, "w") as handle:
            handle.write(render_report_yaml(report))


def parse_report(yaml_path: str) -> ProfileReport:
    with open(yaml_path, "r") as handle:
        text = handle.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"{yaml_path}: invalid YAML{where}: {exc}")
    if not isinstance(raw, dict):
        raise ValidationError(f"{yaml_path}: top level must be a mapping")
    return report_from_dict(raw)


def read_profile_csv(path: str) -> Tuple[Dict[int, Dict[str, List[float]]], bool]:
    """Read an exported profile CSV back into per-station columns.

    Returns (stations, partial) where stations[j] maps each column
    name (y, emp_min, emp_mean, emp_max, theory) to its values in file
    order.  The header must match the export format exactly.
    """
    stations: Dict[int, Dict[str, List[float]]] = {}
    partial = False
    with open(path, "r", newline="") as handle:
        rows = []
        for line in handle:
            if line.startswith("#"):
                if "partial=true" in line:
                    partial = True
                continue
            rows.append(line)
    reader = csv.reader(rows)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise ParseError(f"{path}: empty file")
    if header != CSV_HEADER:
        raise ParseError(f"{path}: header {header} does not match {CSV_HEADER}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"{path}: line {lineno}: expected "
                             f"{len(CSV_HEADER)} fields, got {len(row)}")
        try:
            j = int(row[0])
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}")
        cols = stations.setdefault(j, {name: [] for name in CSV_HEADER[1:]})
        for name, v in zip(CSV_HEADER[1:], values):
            cols[name].append(v)
    if not stations:
        raise ParseError(f"{path}: no data rows")
    return stations, partial
