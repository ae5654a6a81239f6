"""Network description and route combinatorics.

A network is a set of stations 1..J and a set of customer classes
1..K.  Each class follows a fixed acyclic route (no station is visited
twice) and carries an initial lead-time distribution.  From the routes
we derive the station-level sets that every other module consumes:
which classes visit a station, which of them enter the network there,
and which stations a class has already cleared when it reaches a given
station.

The solver visits stations in an order it discovers stage by stage; a
station is *reachable* at a stage when at least one class reaches it
using only already-ordered stations.  Orders built this way are the
admissible permutations, and each one carves out a piece of the domain
on which the frontier map is invertible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from . import dists
from .errors import (
    ClassDoesNotVisitStation,
    DisconnectedNetwork,
    EmptyStation,
    NetworkTooLarge,
    RouteRepeatsStation,
)
from .leadtime import LeadTimeDist

__all__ = [
    "ClassSpec",
    "NetworkSpec",
    "Topology",
    "build_topology",
    "upstream_set",
    "reach_sets",
    "admissible_permutations",
    "in_frontier_domain",
    "traffic_intensity",
]

# enumeration of admissible permutations is factorial in the worst
# case; refuse outright rather than hang on big networks
MAX_ENUMERABLE_STATIONS = 10


@dataclass(frozen=True)
class ClassSpec:
    """One customer class.

    ``service_rates`` may be a single float (same rate at every station
    on the route) or a mapping from station id to rate.  ``interarrival``
    and ``service_laws`` optionally override the sampling laws used by
    the simulator; they default to exponential with the declared rates.
    Scripted laws (e.g. ``dists.Sequence``) have no defined mean and are
    accepted as-is; for laws with a mean, it must match the declared
    rate's reciprocal.
    """

    id: int
    route: Tuple[int, ...]
    arrival_rate: float
    lead_time: LeadTimeDist
    service_rates: Union[float, Mapping[int, float]] = 1.0
    interarrival: Optional[dists.SamplingLaw] = None
    service_laws: Optional[Mapping[int, dists.SamplingLaw]] = None

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id < 1:
            raise ValueError(f"class id must be a positive integer, got {self.id!r}")
        route = tuple(int(j) for j in self.route)
        object.__setattr__(self, "route", route)
        if len(route) == 0:
            raise ValueError(f"class {self.id}: route must visit at least one station")
        if any(j < 1 for j in route):
            raise ValueError(f"class {self.id}: station ids must be positive")
        if not self.arrival_rate > 0.0:
            raise ValueError(f"class {self.id}: arrival rate must be positive")
        if self.interarrival is not None:
            _check_rate(self.interarrival, self.arrival_rate,
                        f"class {self.id} interarrival")
        for j in route:
            mu = self.service_rate(j)
            if not mu > 0.0:
                raise ValueError(f"class {self.id}: service rate at station {j} "
                                 f"must be positive, got {mu!r}")
            law = self.service_law(j)
            if law is not None:
                _check_rate(law, mu, f"class {self.id} service at station {j}")

    def service_rate(self, j: int) -> float:
        if isinstance(self.service_rates, Mapping):
            try:
                return float(self.service_rates[j])
            except KeyError:
                raise ValueError(f"class {self.id}: no service rate for station {j}")
        return float(self.service_rates)

    def service_law(self, j: int) -> Optional[dists.SamplingLaw]:
        if self.service_laws is None:
            return None
        return self.service_laws.get(j)


def _check_rate(law: dists.SamplingLaw, rate: float, what: str) -> None:
    mean = law.mean
    if mean is None:
        return
    if abs(mean - 1.0 / rate) > 1e-9 * max(1.0, 1.0 / rate):
        raise ValueError(f"{what}: law mean {mean} contradicts rate {rate}")


@dataclass(frozen=True)
class NetworkSpec:
    """Stations 1..station_count plus one ClassSpec per class."""

    station_count: int
    classes: Tuple[ClassSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if self.station_count < 1:
            raise ValueError("need at least one station")
        ids = [c.id for c in self.classes]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise ValueError(f"class ids must be 1..K without gaps, got {sorted(ids)}")

    @property
    def stations(self) -> range:
        return range(1, self.station_count + 1)

    def class_by_id(self, k: int) -> ClassSpec:
        for c in self.classes:
            if c.id == k:
                return c
        raise KeyError(k)


@dataclass(frozen=True)
class Topology:
    """Validated network with all derived route sets.

    visiting[j]      classes whose route passes through station j
    entry_classes[j] classes whose route *starts* at station j
    entry_stations   stations where at least one class enters
    upstream[(k, j)] stations class k clears before reaching j
    """

    spec: NetworkSpec
    visiting: Mapping[int, FrozenSet[int]]
    entry_classes: Mapping[int, FrozenSet[int]]
    entry_stations: FrozenSet[int]
    upstream: Mapping[Tuple[int, int], FrozenSet[int]]

    @property
    def station_count(self) -> int:
        return self.spec.station_count

    def route(self, k: int) -> Tuple[int, ...]:
        return self.spec.class_by_id(k).route

    def lead_dist(self, k: int) -> LeadTimeDist:
        return self.spec.class_by_id(k).lead_time


def build_topology(spec: NetworkSpec) -> Topology:
    """Validate a NetworkSpec and derive its route sets.

    Raises RouteRepeatsStation if any route revisits a station,
    EmptyStation if some station is on no route, and
    DisconnectedNetwork if the undirected graph whose edges are
    consecutive route hops does not connect all stations.
    """
    J = spec.station_count
    for c in spec.classes:
        if len(set(c.route)) != len(c.route):
            raise RouteRepeatsStation(f"class {c.id} route {c.route} repeats a station")
        for j in c.route:
            if j > J:
                raise ValueError(f"class {c.id} route visits station {j}, "
                                 f"but the network has only {J}")

    visiting: Dict[int, set] = {j: set() for j in spec.stations}
    entry: Dict[int, set] = {j: set() for j in spec.stations}
    upstream: Dict[Tuple[int, int], FrozenSet[int]] = {}
    for c in spec.classes:
        entry[c.route[0]].add(c.id)
        for pos, j in enumerate(c.route):
            visiting[j].add(c.id)
            upstream[(c.id, j)] = frozenset(c.route[:pos])

    for j in spec.stations:
        if not visiting[j]:
            raise EmptyStation(f"station {j} is visited by no class")

    # connectivity over the undirected hop graph
    adjacency: Dict[int, set] = {j: set() for j in spec.stations}
    for c in spec.classes:
        for a, b in zip(c.route, c.route[1:]):
            adjacency[a].add(b)
            adjacency[b].add(a)
    seen = {1}
    stack = [1]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if len(seen) != J:
        missing = sorted(set(spec.stations) - seen)
        raise DisconnectedNetwork(f"stations {missing} are not connected to station 1")

    return Topology(
        spec=spec,
        visiting={j: frozenset(v) for j, v in visiting.items()},
        entry_classes={j: frozenset(v) for j, v in entry.items()},
        entry_stations=frozenset(j for j in spec.stations if entry[j]),
        upstream=upstream,
    )


def upstream_set(topo: Topology, k: int, j: int) -> FrozenSet[int]:
    """Stations class k passes through strictly before station j.

    Empty for a class entering at j; ClassDoesNotVisitStation if j is
    not on the route of k at all.
    """
    try:
        return topo.upstream[(k, j)]
    except KeyError:
        raise ClassDoesNotVisitStation(f"class {k} does not visit station {j}")


def reach_sets(
    topo: Topology, prefix: Sequence[int]
) -> Tuple[Dict[int, FrozenSet[int]], FrozenSet[int]]:
    """Classes reaching each station through an ordered prefix.

    Given a sequence of already-ordered stations, returns a pair
    ``(reach_classes, reachable)`` where ``reach_classes[j]`` holds the
    classes whose entire upstream portion at j lies inside the prefix,
    and ``reachable`` is the set of stations outside the prefix with at
    least one such class (the candidates for the next position).
    """
    prefix = list(prefix)
    pset = set(prefix)
    if len(pset) != len(prefix):
        raise ValueError(f"prefix {prefix} repeats a station")
    for j in prefix:
        if j not in topo.visiting:
            raise ValueError(f"prefix station {j} is not in the network")
    reach: Dict[int, FrozenSet[int]] = {}
    for j in topo.spec.stations:
        reach[j] = frozenset(
            k for k in topo.visiting[j] if topo.upstream[(k, j)] <= pset
        )
    reachable = frozenset(j for j in topo.spec.stations
                          if j not in pset and reach[j])
    return reach, reachable


def admissible_permutations(topo: Topology) -> List[Tuple[int, ...]]:
    """All station orders the staged solver could produce.

    A permutation is admissible when every position is reachable given
    the stations placed before it.  Enumeration is exhaustive and
    factorial in the worst case, so networks with more than
    MAX_ENUMERABLE_STATIONS stations are refused.
    """
    J = topo.station_count
    if J > MAX_ENUMERABLE_STATIONS:
        raise NetworkTooLarge(
            f"refusing to enumerate permutations of {J} stations "
            f"(limit {MAX_ENUMERABLE_STATIONS})")
    out: List[Tuple[int, ...]] = []

    def extend(prefix: List[int]) -> None:
        if len(prefix) == J:
            out.append(tuple(prefix))
            return
        _, reachable = reach_sets(topo, prefix)
        for j in sorted(reachable):
            prefix.append(j)
            extend(prefix)
            prefix.pop()

    extend([])
    return out


def in_frontier_domain(
    topo: Topology,
    y: Sequence[float],
    perm: Optional[Sequence[int]] = None,
    *,
    atol: float = 1e-9,
) -> Optional[Tuple[int, ...]]:
    """Witness permutation if the vector lies in the invertible domain.

    ``y`` lists one frontier value per station (position i is station
    i+1).  A permutation witnesses membership when the values are
    nonincreasing along it and each value is at most the largest lead
    upper support among the classes reaching that station through the
    earlier ones.  With ``perm`` given, only that order is checked.
    Returns the witnessing permutation, or None.  Comparisons allow a
    slack of ``atol`` so that solver output on a piece boundary is not
    rejected for roundoff.
    """
    if len(y) != topo.station_count:
        raise ValueError(f"expected {topo.station_count} values, got {len(y)}")
    candidates = [tuple(perm)] if perm is not None else admissible_permutations(topo)
    for pi in candidates:
        if _in_piece(topo, y, pi, atol):
            return pi
    return None


def _in_piece(topo: Topology, y: Sequence[float], pi: Tuple[int, ...],
              atol: float) -> bool:
    if sorted(pi) != list(topo.spec.stations):
        raise ValueError(f"{pi} is not a permutation of the stations")
    vals = [y[j - 1] for j in pi]
    if any(a < b - atol for a, b in zip(vals, vals[1:])):
        return False
    for m, j in enumerate(pi):
        reach, reachable = reach_sets(topo, pi[:m])
        if j not in reachable:
            return False
        bound = max(topo.lead_dist(k).upper_support for k in reach[j])
        if y[j - 1] > bound + atol:
            return False
    return True


def traffic_intensity(topo: Topology, j: int) -> float:
    """Offered load at a station: sum over visiting classes of
    arrival rate divided by service rate there."""
    if j not in topo.visiting:
        raise ValueError(f"station {j} is not in the network")
    spec = topo.spec
    return sum(spec.class_by_id(k).arrival_rate / spec.class_by_id(k).service_rate(j)
               for k in topo.visiting[j])
