"""Frontier equations: from observed loads to lead-time frontiers.

Under deadline-ordered service, the customers present at a station
stack up behind a moving *frontier*: the lead time of the most urgent
customer the station has ever served.  In a critically loaded network
the station's load pins the frontier vector down exactly: the load seen
at station j equals a weighted sum over visiting classes of integrated
lead-time tails, clipped between the station's own frontier and the
smallest frontier among the class's upstream stations.

``frontier_loads`` evaluates that map; ``solve_frontiers`` inverts it
station by station, placing at each stage the station whose stage-local
inverse is largest.  ``predict_profile`` turns a solved frontier vector
into the predicted queue mass with lead time above any level, which is
what the experiment harness compares against simulated profiles.

All of this is exact piecewise-polynomial arithmetic: integrated tails
of the supported lead-time laws are piecewise quadratic, so stage
inverses are found by a breakpoint scan plus a closed-form segment
solve, with bisection only as a guarded fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    NegativeWorkload,
    NoConsistentRegion,
    SolverDivergence,
    ZeroIntensity,
)
from .leadtime import LeadTimeDist, PointMass
from .topology import (
    ClassSpec,
    NetworkSpec,
    Topology,
    build_topology,
    in_frontier_domain,
    reach_sets,
    traffic_intensity,
)

__all__ = [
    "WeightedModel",
    "FrontierSolution",
    "TwoStationSolution",
    "count_model",
    "work_model",
    "normalize_by_intensity",
    "frontier_loads",
    "solve_frontiers",
    "predict_profile",
    "two_station_closed_form",
]


# -------- weighted models --------

@dataclass(frozen=True)
class WeightedModel:
    """A topology plus one positive weight per (class, station) visit.

    With weights equal to arrival rates the frontier map returns
    customer counts; with arrival rate over service rate it returns
    workloads.  ``normalized`` records whether station weights have
    been divided by the station's traffic intensity (the finite-load
    correction used on prediction paths).
    """

    topology: Topology
    weights: Mapping[Tuple[int, int], float]
    kind: str = "custom"
    normalized: bool = False

    def __post_init__(self):
        topo = self.topology
        w = dict(self.weights)
        for j in topo.spec.stations:
            for k in topo.visiting[j]:
                if (k, j) not in w:
                    raise ValueError(f"missing weight for class {k} at station {j}")
                if not w[(k, j)] > 0.0:
                    raise ZeroIntensity(
                        f"weight for class {k} at station {j} must be positive, "
                        f"got {w[(k, j)]!r}")
        object.__setattr__(self, "weights", w)


def count_model(topo: Topology) -> WeightedModel:
    """Weights = arrival rates: the map returns queue counts."""
    w = {(c.id, j): c.arrival_rate for c in topo.spec.classes for j in c.route}
    return WeightedModel(topo, w, kind="count")


def work_model(topo: Topology) -> WeightedModel:
    """Weights = arrival rate / service rate: the map returns workloads."""
    w = {(c.id, j): c.arrival_rate / c.service_rate(j)
         for c in topo.spec.classes for j in c.route}
    return WeightedModel(topo, w, kind="work")


def normalize_by_intensity(model: WeightedModel) -> WeightedModel:
    """Divide each station's weights by that station's offered load.

    At critical load the intensity is 1 and this is a no-op; below it,
    the division compensates for the gap so that predicted totals match
    observed ones.
    """
    topo = model.topology
    rho = {j: traffic_intensity(topo, j) for j in topo.spec.stations}
    for j, r in rho.items():
        if not r > 0.0:
            raise ZeroIntensity(f"station {j} has zero offered load")
    w = {(k, j): wv / rho[j] for (k, j), wv in model.weights.items()}
    return WeightedModel(topo, w, kind=model.kind, normalized=True)


# -------- the load map --------

def _upstream_floor(topo: Topology, k: int, j: int, values) -> float:
    """Smallest frontier among the stations class k clears before j.

    ``values`` is indexed by station-1; an entering class has no
    upstream stations and the floor is +infinity (whose integrated
    tail is zero).
    """
    ups = topo.upstream[(k, j)]
    if not ups:
        return math.inf
    return min(values[i - 1] for i in ups)


def frontier_loads(model: WeightedModel, y: Sequence[float]) -> np.ndarray:
    """Station loads produced by a frontier vector.

    Entry j-1 of the result is the weighted tail mass at station j:
    each visiting class contributes its integrated tail at the
    station's frontier minus the tail at the class's upstream floor,
    clipped at zero (work the class has already carried past its
    upstream stations cannot sit here).
    """
    topo = model.topology
    vals = [float(v) for v in y]
    if len(vals) != topo.station_count:
        raise ValueError(f"expected {topo.station_count} frontier values, got {len(vals)}")
    out = np.zeros(topo.station_count)
    for j in topo.spec.stations:
        total = 0.0
        for k in topo.visiting[j]:
            dist = topo.lead_dist(k)
            tail = dist.integrated_tail(vals[j - 1])
            tail -= dist.integrated_tail(_upstream_floor(topo, k, j, vals))
            if tail > 0.0:
                total += model.weights[(k, j)] * tail
        out[j - 1] = total
    return out


# -------- staged inversion --------

@dataclass(frozen=True)
class FrontierSolution:
    """Result of inverting the load map.

    frontiers     one value per station (position j-1 is station j)
    permutation   the station order the stages were solved in
    stage_bounds  the upper endpoint of each stage inverse's range;
                  the stage value equals the bound when its load is 0
    residual      max abs difference between the map at the solution
                  and the requested loads
    loads         the requested loads, echoed
    """

    frontiers: Tuple[float, ...]
    permutation: Tuple[int, ...]
    stage_bounds: Tuple[float, ...]
    residual: float
    loads: Tuple[float, ...]


class _StageTerm(NamedTuple):
    weight: float
    dist: LeadTimeDist
    cap: float    # tail already drained by upstream stations
    cut: float    # lead level above which the term vanishes


def _stage_terms(model: WeightedModel, j: int, classes: FrozenSet[int],
                 assigned: Dict[int, float]) -> List[_StageTerm]:
    topo = model.topology
    terms = []
    for k in sorted(classes):
        dist = topo.lead_dist(k)
        ups = topo.upstream[(k, j)]
        floor = min(assigned[i] for i in ups) if ups else math.inf
        terms.append(_StageTerm(
            weight=model.weights[(k, j)],
            dist=dist,
            cap=dist.integrated_tail(floor),
            cut=min(dist.upper_support, floor),
        ))
    return terms


def _stage_value(terms: List[_StageTerm], y: float) -> float:
    total = 0.0
    for w, dist, cap, cut in terms:
        if y < cut:
            total += w * (dist.integrated_tail(y) - cap)
    return total


def _stage_inverse(terms: List[_StageTerm], target: float) -> Tuple[float, float]:
    """Solve the stage equation for one station.

    The stage function is continuous, zero at the bound (the largest
    cut), and strictly increasing as the lead level moves down, so the
    preimage of any nonnegative target is a single point.  Returns
    (solution, bound).
    """
    bound = max(t.cut for t in terms)
    if target == 0.0:
        return bound, bound

    points = {bound}
    for t in terms:
        points.add(t.cut)
        for b in t.dist.breakpoints():
            if b < t.cut:
                points.add(b)
    points = sorted(p for p in points if p <= bound)

    hi, val_hi = bound, 0.0
    for p in reversed(points[:-1]):
        val_p = _stage_value(terms, p)
        if val_p >= target:
            return _solve_segment(terms, p, val_p, hi, val_hi, target), bound
        hi, val_hi = p, val_p

    # below the lowest breakpoint every term is active and every
    # integrated tail has slope -1, so the stage function is linear
    slope = sum(t.weight for t in terms)
    return hi - (target - val_hi) / slope, bound


def _solve_segment(terms: List[_StageTerm], lo: float, val_lo: float,
                   hi: float, val_hi: float, target: float) -> float:
    """Root of the stage function on one polynomial piece.

    On a piece the function is an exact quadratic, so fitting it
    through three points and solving is exact up to roundoff; a
    bisection fallback guards the degenerate cases.
    """
    if val_lo == target:
        return lo
    if val_hi == target:
        return hi
    width = hi - lo
    if width <= 1e-12:
        return hi if abs(val_hi - target) <= abs(val_lo - target) else lo

    mid = 0.5 * (lo + hi)
    val_mid = _stage_value(terms, mid)
    d1 = (val_mid - val_lo) / (mid - lo)
    d2 = ((val_hi - val_mid) / (hi - mid) - d1) / (hi - lo)
    # quadratic in d = y - lo:  d2*d^2 + (d1 - d2*(mid-lo))*d + (val_lo - target)
    a = d2
    b = d1 - d2 * (mid - lo)
    c = val_lo - target

    candidates = []
    if a == 0.0:
        if b != 0.0:
            candidates.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        root = math.sqrt(max(disc, 0.0))
        q = -0.5 * (b + math.copysign(root, b))
        candidates.append(q / a)
        if q != 0.0:
            candidates.append(c / q)

    slack = 1e-9 * max(width, 1.0)
    best = None
    for d in candidates:
        if -slack <= d <= width + slack:
            y = min(max(lo + d, lo), hi)
            err = abs(_stage_value(terms, y) - target)
            if best is None or err < best[0]:
                best = (err, y)
    if best is not None and best[0] <= 1e-9 * max(1.0, abs(target)):
        return best[1]

    # fallback: plain bisection on the bracket
    a_, b_ = lo, hi
    for _ in range(200):
        m = 0.5 * (a_ + b_)
        if _stage_value(terms, m) >= target:
            a_ = m
        else:
            b_ = m
        if b_ - a_ <= 1e-13 * max(1.0, abs(m)):
            break
    y = 0.5 * (a_ + b_)
    if abs(_stage_value(terms, y) - target) > 1e-6 * max(1.0, abs(target)):
        raise SolverDivergence(
            f"stage solve failed on [{lo}, {hi}] for target {target}")
    return y


def solve_frontiers(model: WeightedModel, loads: Sequence[float]) -> FrontierSolution:
    """Invert the load map: find the frontier vector producing ``loads``.

    Stations are placed one stage at a time.  At each stage every
    still-unplaced station reachable through the placed ones gets a
    stage-local inverse of its own load; the station with the largest
    value (ties to the smallest station id) is placed next.  The
    resulting vector lies in the invertible domain, reproduces the
    loads, and is the componentwise smallest such vector.
    """
    topo = model.topology
    vec = [float(v) for v in loads]
    if len(vec) != topo.station_count:
        raise ValueError(f"expected {topo.station_count} loads, got {len(vec)}")
    for j, v in enumerate(vec, start=1):
        if not math.isfinite(v) or v < 0.0:
            raise NegativeWorkload(f"load at station {j} must be finite and >= 0, got {v}")

    assigned: Dict[int, float] = {}
    order: List[int] = []
    bounds: List[float] = []
    for _ in range(topo.station_count):
        reach, reachable = reach_sets(topo, order)
        best = None
        for j in sorted(reachable):
            terms = _stage_terms(model, j, reach[j], assigned)
            y_j, b_j = _stage_inverse(terms, vec[j - 1])
            if best is None or y_j > best[1]:
                best = (j, y_j, b_j)
        assert best is not None, "connected network must stay extendable"
        order.append(best[0])
        assigned[best[0]] = best[1]
        bounds.append(best[2])

    y = tuple(assigned[j] for j in topo.spec.stations)
    residual = float(np.max(np.abs(frontier_loads(model, y) - np.array(vec))))
    scale = max(1.0, max(vec, default=1.0))
    if residual > 1e-6 * scale:
        raise SolverDivergence(f"inversion residual {residual} for loads {vec}")
    if in_frontier_domain(topo, y, tuple(order)) is None:
        raise SolverDivergence(f"solution {y} left its own domain piece {order}")
    return FrontierSolution(
        frontiers=y,
        permutation=tuple(order),
        stage_bounds=tuple(bounds),
        residual=residual,
        loads=tuple(vec),
    )


# -------- profile prediction --------

def predict_profile(
    model: WeightedModel,
    solution: Union[FrontierSolution, Sequence[float]],
    j: int,
    y: float,
) -> float:
    """Predicted queue mass at station j with lead time above y.

    Below the station frontier the prediction saturates at the station
    total, so evaluating at -inf (or anything at most the frontier)
    gives the predicted station load.
    """
    topo = model.topology
    fr = solution.frontiers if isinstance(solution, FrontierSolution) else solution
    vals = [float(v) for v in fr]
    if len(vals) != topo.station_count:
        raise ValueError(f"expected {topo.station_count} frontier values, got {len(vals)}")
    if j not in topo.visiting:
        raise ValueError(f"station {j} is not in the network")
    level = max(float(y), vals[j - 1])
    total = 0.0
    for k in topo.visiting[j]:
        dist = topo.lead_dist(k)
        tail = dist.integrated_tail(level)
        tail -= dist.integrated_tail(_upstream_floor(topo, k, j, vals))
        if tail > 0.0:
            total += model.weights[(k, j)] * tail
    return total


# -------- two-station closed forms --------

class TwoStationSolution(NamedTuple):
    region: str
    frontiers: Tuple[float, float]


def _crossing_spec(rates: Sequence[float], tops: Sequence[float]) -> NetworkSpec:
    routes = [(1, 2), (2, 1), (1,), (2,)]
    classes = tuple(
        ClassSpec(id=i + 1, route=routes[i], arrival_rate=rates[i],
                  lead_time=PointMass(tops[i]))
        for i in range(4)
    )
    return NetworkSpec(station_count=2, classes=classes)


def two_station_closed_form(
    rates: Sequence[float],
    deadlines: Sequence[float],
    q1: float,
    q2: float,
    *,
    atol: float = 1e-8,
) -> TwoStationSolution:
    """Closed-form frontiers for the two-station crossing network.

    The network has four classes: class 1 runs station 1 then 2,
    class 2 runs station 2 then 1, and classes 3 and 4 visit only
    stations 1 and 2 respectively.  Each class k has a fixed deadline
    ``deadlines[k-1]``; the values must be nonincreasing in k.

    Depending on where the frontier pair falls relative to the four
    deadlines and to its own ordering, different clip terms in the
    load equations are active, and each activity pattern linearizes
    the equations.  The eight resulting candidate solutions are
    labelled I..VIII.  Every candidate is checked for self-consistency
    (it must land in the invertible domain and reproduce (q1, q2)
    through the exact load map); the first consistent one is returned.
    Raises NoConsistentRegion if none survives, which for valid inputs
    indicates a numerical tolerance problem rather than a modelling
    one.
    """
    if len(rates) != 4 or len(deadlines) != 4:
        raise ValueError("need exactly four rates and four deadlines")
    l1, l2, l3, l4 = (float(v) for v in rates)
    d1, d2, d3, d4 = (float(v) for v in deadlines)
    for i, lv in enumerate((l1, l2, l3, l4), start=1):
        if not lv > 0.0:
            raise ZeroIntensity(f"rate of class {i} must be positive, got {lv!r}")
    if not (d1 >= d2 >= d3 >= d4):
        raise ValueError(f"deadlines must be nonincreasing by class, got {deadlines!r}")
    if q1 < 0.0 or q2 < 0.0:
        raise NegativeWorkload(f"queue levels must be >= 0, got ({q1}, {q2})")

    f1 = {
        "top_only": d1 - q1 / l1,
        "with_crossing": (l1 * d1 + l2 * d2 - q2 - q1) / (l1 + l2),
        "with_local": (l1 * d1 + l3 * d3 - q1) / (l1 + l3),
        "all_three": (l1 * d1 + l2 * d2 + l3 * d3 - q1 - q2) / (l1 + l2 + l3),
        "chained": (l1 * d1 + l3 * d3 - q1) / (l1 + l2 + l3)
        + l2 * (l2 * d2 + l4 * d4 - q2) / ((l1 + l2 + l3) * (l2 + l4)),
    }
    f2 = {
        "top_only": d2 - q2 / l2,
        "handoff": (l1 * d1 - q2 - q1) / l1,
        "with_local": (l2 * d2 + l4 * d4 - q2) / (l2 + l4),
        "shared": (l1 * d1 + l2 * d2 - q2 - q1) / (l1 + l2),
        "shared_local": (l1 * d1 + l2 * d2 + l4 * d4 - q2 - q1) / (l1 + l2 + l4),
        "chained": l1 * (l1 * d1 + l3 * d3 - q1) / ((l1 + l2) * (l1 + l3))
        + (l2 * d2 - q2) / (l1 + l2),
        "chained_local": l1 * (l1 * d1 + l3 * d3 - q1) / ((l1 + l3) * (l1 + l2 + l4))
        + (l2 * d2 + l4 * d4 - q2) / (l1 + l2 + l4),
    }
    candidates = [
        ("I", f1["top_only"], f2["handoff"]),
        ("II", f1["with_crossing"], f2["top_only"]),
        ("III", f1["top_only"], f2["shared"]),
        ("IV", f1["top_only"], f2["shared_local"]),
        ("V", f1["all_three"], f2["top_only"]),
        ("VI", f1["with_local"], f2["chained"]),
        ("VII", f1["chained"], f2["with_local"]),
        ("VIII", f1["with_local"], f2["chained_local"]),
    ]

    model = count_model(build_topology(_crossing_spec((l1, l2, l3, l4),
                                                      (d1, d2, d3, d4))))
    scale = max(1.0, q1, q2)
    for region, a, b in candidates:
        if in_frontier_domain(model.topology, (a, b), atol=atol * scale) is None:
            continue
        back = frontier_loads(model, (a, b))
        if abs(back[0] - q1) <= atol * scale and abs(back[1] - q2) <= atol * scale:
            return TwoStationSolution(region, (a, b))
    raise NoConsistentRegion(
        f"no closed-form region reproduces loads ({q1}, {q2})")
