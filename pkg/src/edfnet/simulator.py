"""Event-level simulation of deadline-ordered service networks.

Customers arrive per class through renewal streams, carry an absolute
deadline (arrival time plus a draw from the class lead-time law), and
are served at each station on their route in earliest-deadline-first
order, ties broken by arrival index to the system and then class id.
Service is non-preemptive by default; with ``preemptive=True`` a more
urgent arrival suspends the current job and the remainder is served
later (preempt-resume).  Transfers between stations are instantaneous.
Late customers (negative lead time) stay in the system and keep their
priority; nothing is dropped.

Each station tracks a per-class *frontier*: the largest absolute
deadline it has ever admitted to service, seeded with a phantom value
equal to the class's largest possible lead (as if a maximally patient
customer had entered service at time zero).  The lead-time frontier at
time t is that stored deadline minus t.  Customers whose deadline is
strictly below the station's overall frontier are "behind" it; their
count and residual work are tracked continuously since they measure
how far the system deviates from the idealized profile ordering.

Everything is deterministic given the seed: every (class, purpose)
pair draws from its own generator derived from the seed, and
simultaneous events are ordered departures-first, then by station id,
then by scheduling order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import dists
from .errors import ClassDoesNotVisitStation, EventCapExceeded
from .leadtime import LeadTimeDist
from .topology import NetworkSpec, Topology, build_topology

__all__ = [
    "SimState",
    "Snapshot",
    "SampleResult",
    "BehindStats",
    "ExactCounts",
    "TotalCounts",
    "CountBands",
    "new_sim",
    "run_until",
    "conditional_sample",
    "snapshot_profiles",
    "frontier",
    "station_frontier",
    "workload",
    "netput",
    "idleness",
    "utilization",
    "queue_length",
    "class_counts",
    "mean_queue_length",
    "behind_frontier_stats",
]

_DEPART = 0
_ARRIVE = 1


class _Customer:
    __slots__ = ("class_id", "arrival_index", "arrival_time", "deadline",
                 "route", "route_pos", "service_times", "remaining")

    def __init__(self, class_id, arrival_index, arrival_time, deadline,
                 route, service_times):
        self.class_id = class_id
        self.arrival_index = arrival_index
        self.arrival_time = arrival_time
        self.deadline = deadline
        self.route = route
        self.route_pos = 0
        self.service_times = service_times
        self.remaining = service_times[0]

    def key(self):
        return (self.deadline, self.arrival_index, self.class_id)


class _Station:
    __slots__ = ("sid", "pending", "pending_work", "pending_behind",
                 "pending_behind_work", "serving", "serving_dep",
                 "serving_behind", "token", "max_by_class", "max_admitted",
                 "class_counts", "present", "busy_time", "idle_time",
                 "arrived_work", "arrivals_by_class", "departures_by_class",
                 "int_present", "int_behind", "int_behind_work")

    def __init__(self, sid: int, n_classes: int):
        self.sid = sid
        self.pending: List[tuple] = []
        self.pending_work = 0.0
        self.pending_behind = 0
        self.pending_behind_work = 0.0
        self.serving: Optional[_Customer] = None
        self.serving_dep = math.inf
        self.serving_behind = False
        self.token = 0
        self.max_by_class = [-math.inf] * (n_classes + 1)
        self.max_admitted = -math.inf
        self.class_counts = [0] * (n_classes + 1)
        self.present = 0
        self.busy_time = 0.0
        self.idle_time = 0.0
        self.arrived_work = 0.0
        self.arrivals_by_class = [0] * (n_classes + 1)
        self.departures_by_class = [0] * (n_classes + 1)
        self.int_present = 0.0
        self.int_behind = 0.0
        self.int_behind_work = 0.0

    def current_workload(self, now: float) -> float:
        w = self.pending_work
        if self.serving is not None:
            w += self.serving_dep - now
        return w


class SimState:
    """One simulation run; construct through new_sim()."""

    def __init__(self, spec: NetworkSpec, *, seed: int, preemptive: bool = False):
        if not isinstance(seed, int) or seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
        self.topology: Topology = build_topology(spec)
        self.spec = spec
        self.seed = seed
        self.preemptive = preemptive
        self.clock = 0.0
        self.events_processed = 0
        self._heap: List[tuple] = []
        self._seq = 0
        self._arrival_counter = 0
        K = len(spec.classes)
        self.n_classes = K
        self.stations: List[Optional[_Station]] = [None] + [
            _Station(j, K) for j in spec.stations]
        for c in spec.classes:
            st_ids = c.route
            for j in st_ids:
                self.stations[j].max_by_class[c.id] = c.lead_time.upper_support
        for j in spec.stations:
            st = self.stations[j]
            st.max_admitted = max(st.max_by_class[1:])

        # one independent generator per (class, purpose); purposes are
        # 1=interarrival, 2=lead time, 3=service at a given station
        self._draw_gap: Dict[int, Callable[[], float]] = {}
        self._draw_lead: Dict[int, Callable[[], float]] = {}
        self._draw_service: Dict[Tuple[int, int], Callable[[], float]] = {}
        for c in spec.classes:
            gap_law = c.interarrival or dists.Exponential(c.arrival_rate)
            self._draw_gap[c.id] = gap_law.sampler(self._stream(1, c.id, 0))
            self._draw_lead[c.id] = _lead_sampler(c.lead_time, self._stream(2, c.id, 0))
            for j in c.route:
                law = c.service_law(j) or dists.Exponential(c.service_rate(j))
                self._draw_service[(c.id, j)] = law.sampler(self._stream(3, c.id, j))

        for c in spec.classes:
            first = self._draw_gap[c.id]()
            if math.isfinite(first):
                self._push(first, _ARRIVE, c.route[0], c.id)

    def _stream(self, purpose: int, k: int, j: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, purpose, k, j)))

    # -------- event queue --------

    def _push(self, time: float, kind: int, station: int, payload: int) -> None:
        self._seq += 1
        heappush(self._heap, (time, kind, station, self._seq, payload))

    def _next_time(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def _step(self) -> None:
        """Pop and process one event, advancing the clock to it."""
        time, kind, station, _, payload = heappop(self._heap)
        self._advance(time)
        if kind == _DEPART:
            self._handle_departure(station, payload)
        else:
            self._handle_arrival(payload)
        self.events_processed += 1

    def _advance(self, t: float) -> None:
        """Integrate the time-weighted accumulators up to t."""
        dt = t - self.clock
        if dt <= 0.0:
            self.clock = t if dt == 0.0 else self.clock
            return
        for st in self.stations[1:]:
            if st.serving is None:
                st.idle_time += dt
                continue
            st.busy_time += dt
            st.int_present += st.present * dt
            behind = st.pending_behind
            work = st.pending_behind_work * dt
            if st.serving_behind:
                behind += 1
                work += (st.serving_dep - self.clock) * dt - 0.5 * dt * dt
            st.int_behind += behind * dt
            st.int_behind_work += work
        self.clock = t

    # -------- event handlers --------

    def _handle_arrival(self, class_id: int) -> None:
        cspec = self.spec.class_by_id(class_id)
        self._arrival_counter += 1
        lead = self._draw_lead[class_id]()
        services = tuple(self._draw_service[(class_id, j)]() for j in cspec.route)
        cust = _Customer(class_id, self._arrival_counter, self.clock,
                         self.clock + lead, cspec.route, services)
        gap = self._draw_gap[class_id]()
        if math.isfinite(gap):
            self._push(self.clock + gap, _ARRIVE, cspec.route[0], class_id)
        self._enter_station(cust, cspec.route[0])

    def _handle_departure(self, sid: int, token: int) -> None:
        st = self.stations[sid]
        if token != st.token:
            return  # superseded by a preemption
        cust = st.serving
        st.serving = None
        st.serving_behind = False
        st.serving_dep = math.inf
        st.token += 1
        st.class_counts[cust.class_id] -= 1
        st.present -= 1
        st.departures_by_class[cust.class_id] += 1
        if st.pending:
            _, _, _, nxt = heappop(st.pending)
            st.pending_work -= nxt.remaining
            if nxt.deadline < st.max_admitted:
                st.pending_behind -= 1
                st.pending_behind_work -= nxt.remaining
            self._start_service(st, nxt)
        cust.route_pos += 1
        if cust.route_pos < len(cust.route):
            cust.remaining = cust.service_times[cust.route_pos]
            self._enter_station(cust, cust.route[cust.route_pos])

    def _enter_station(self, cust: _Customer, sid: int) -> None:
        st = self.stations[sid]
        st.arrived_work += cust.remaining
        st.class_counts[cust.class_id] += 1
        st.present += 1
        st.arrivals_by_class[cust.class_id] += 1
        if st.serving is None:
            self._start_service(st, cust)
        elif self.preemptive and cust.key() < st.serving.key():
            self._suspend(st)
            self._start_service(st, cust)
        else:
            heappush(st.pending, (cust.deadline, cust.arrival_index,
                                  cust.class_id, cust))
            st.pending_work += cust.remaining
            if cust.deadline < st.max_admitted:
                st.pending_behind += 1
                st.pending_behind_work += cust.remaining

    def _start_service(self, st: _Station, cust: _Customer) -> None:
        st.serving = cust
        st.token += 1
        st.serving_dep = self.clock + cust.remaining
        st.serving_behind = cust.deadline < st.max_admitted
        if cust.deadline > st.max_by_class[cust.class_id]:
            st.max_by_class[cust.class_id] = cust.deadline
            if cust.deadline > st.max_admitted:
                # the frontier only moves when everything more urgent
                # has already cleared, so nothing can be behind it now
                assert st.pending_behind == 0
                st.max_admitted = cust.deadline
        self._push(st.serving_dep, _DEPART, st.sid, st.token)

    def _suspend(self, st: _Station) -> None:
        cust = st.serving
        cust.remaining = st.serving_dep - self.clock
        st.serving = None
        st.serving_behind = False
        st.serving_dep = math.inf
        st.token += 1  # invalidates the scheduled departure
        heappush(st.pending, (cust.deadline, cust.arrival_index,
                              cust.class_id, cust))
        st.pending_work += cust.remaining
        if cust.deadline < st.max_admitted:
            st.pending_behind += 1
            st.pending_behind_work += cust.remaining


# -------- snapshots and sampling --------

@dataclass(frozen=True)
class Snapshot:
    """Per-station (class id, lead time) pairs at one instant."""

    time: float
    stations: Mapping[int, Tuple[Tuple[int, float], ...]]

    def leads(self, j: int) -> Tuple[float, ...]:
        return tuple(lead for _, lead in self.stations[j])


@dataclass(frozen=True)
class SampleResult:
    snapshots: Tuple[Snapshot, ...]
    exhausted: bool  # True when the horizon ran out short of the quota


@dataclass(frozen=True)
class BehindStats:
    count: int
    work: float
    fraction: float
    time_avg_fraction: float
    behind_count_integral: float
    present_count_integral: float
    behind_work_integral: float


@dataclass(frozen=True)
class ExactCounts:
    """Condition: per-class queue vector at each listed station."""

    targets: Mapping[int, Tuple[int, ...]]

    def holds(self, sim: SimState) -> bool:
        for j, vec in self.targets.items():
            if sim.stations[j].class_counts[1:] != list(vec):
                return False
        return True


@dataclass(frozen=True)
class TotalCounts:
    """Condition: total customer count at each listed station."""

    targets: Mapping[int, int]

    def holds(self, sim: SimState) -> bool:
        for j, n in self.targets.items():
            if sim.stations[j].present != n:
                return False
        return True


@dataclass(frozen=True)
class CountBands:
    """Condition: total count within [lo, hi] at each listed station."""

    bands: Mapping[int, Tuple[int, int]]

    def holds(self, sim: SimState) -> bool:
        for j, (lo, hi) in self.bands.items():
            if not lo <= sim.stations[j].present <= hi:
                return False
        return True


Condition = Union[ExactCounts, TotalCounts, CountBands]


def _lead_sampler(dist: LeadTimeDist, rng: np.random.Generator) -> Callable[[], float]:
    buf = dist.sample(rng, 512)
    pos = 0

    def draw() -> float:
        nonlocal buf, pos
        if pos == 512:
            buf = dist.sample(rng, 512)
            pos = 0
        v = buf[pos]
        pos += 1
        return float(v)

    return draw


def _take_snapshot(sim: SimState) -> Snapshot:
    now = sim.clock
    stations = {}
    for st in sim.stations[1:]:
        pairs = [(c.class_id, c.deadline - now) for _, _, _, c in st.pending]
        if st.serving is not None:
            pairs.append((st.serving.class_id, st.serving.deadline - now))
        pairs.sort(key=lambda p: (p[1], p[0]))
        stations[st.sid] = tuple(pairs)
    return Snapshot(time=now, stations=stations)


# -------- public operations --------

def new_sim(spec: NetworkSpec, *, seed: int, preemptive: bool = False) -> SimState:
    """Build a simulation at time zero with empty queues."""
    return SimState(spec, seed=seed, preemptive=preemptive)


def run_until(
    sim: SimState,
    until: Union[float, Callable[[SimState], bool]],
    *,
    max_events: Optional[int] = None,
    on_event: Optional[Callable[[SimState], None]] = None,
) -> int:
    """Advance the simulation to a time, or until a predicate holds.

    With a float, every event at or before that time is processed and
    the clock then advances to exactly that time.  With a callable, the
    predicate is evaluated after each event (and once up front); when
    it returns True the run stops at the current event's time.
    ``max_events`` bounds the number of events processed in this call
    and raises EventCapExceeded beyond it.  Returns the number of
    events processed.
    """
    done = 0
    if callable(until):
        if until(sim):
            return 0
        while True:
            if not sim._heap:
                raise EventCapExceeded("event queue ran dry before the predicate held")
            if max_events is not None and done >= max_events:
                raise EventCapExceeded(f"predicate still false after {done} events")
            sim._step()
            done += 1
            if on_event is not None:
                on_event(sim)
            if until(sim):
                return done
    t = float(until)
    if t < sim.clock:
        raise ValueError(f"cannot run backwards to {t} from {sim.clock}")
    while sim._heap and sim._heap[0][0] <= t:
        if max_events is not None and done >= max_events:
            raise EventCapExceeded(f"more than {done} events before time {t}")
        sim._step()
        done += 1
        if on_event is not None:
            on_event(sim)
    sim._advance(t)
    return done


def conditional_sample(
    sim: SimState,
    condition: Condition,
    *,
    threshold: float,
    count: int,
    horizon_cap: float,
) -> SampleResult:
    """Snapshots taken each time conditioned local time fills a quota.

    Local time accumulates whenever the condition holds at all its
    stations simultaneously; it persists across excursions away from
    the conditioning set.  Each time the accumulated amount reaches
    ``threshold`` a snapshot of every station's (class, lead) content
    is recorded and the accumulator resets.  The run never passes
    ``horizon_cap``; if the quota of ``count`` snapshots is not met by
    then, the partial list is returned with ``exhausted=True``.
    """
    if not threshold > 0.0:
        raise ValueError(f"threshold must be positive, got {threshold!r}")
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count!r}")
    if not (math.isfinite(horizon_cap) and horizon_cap >= sim.clock):
        raise ValueError(f"horizon_cap must be finite and >= current time")

    snaps: List[Snapshot] = []
    acc = 0.0
    while True:
        t_next = sim._next_time()
        boundary = min(t_next, horizon_cap)
        if boundary > sim.clock and condition.holds(sim):
            while len(snaps) < count:
                t_hit = sim.clock + (threshold - acc)
                if t_hit <= boundary:
                    sim._advance(t_hit)
                    acc = 0.0
                    snaps.append(_take_snapshot(sim))
                else:
                    acc += boundary - sim.clock
                    break
            if len(snaps) >= count:
                return SampleResult(tuple(snaps), False)
        if t_next <= horizon_cap:
            sim._step()
        else:
            sim._advance(horizon_cap)
            return SampleResult(tuple(snaps), len(snaps) < count)


def snapshot_profiles(sim: SimState) -> Snapshot:
    """Current per-station (class id, lead time) content."""
    return _take_snapshot(sim)


def frontier(sim: SimState, k: int, j: int) -> float:
    """Lead-time frontier of class k at station j right now."""
    st = sim.stations[j] if 1 <= j < len(sim.stations) else None
    if st is None or k not in sim.topology.visiting[j]:
        raise ClassDoesNotVisitStation(f"class {k} does not visit station {j}")
    return st.max_by_class[k] - sim.clock


def station_frontier(sim: SimState, j: int) -> float:
    """Largest class frontier at station j right now."""
    return sim.stations[j].max_admitted - sim.clock


def workload(sim: SimState, j: int) -> float:
    """Residual work sitting at station j (pending plus in service)."""
    return sim.stations[j].current_workload(sim.clock)


def netput(sim: SimState, j: int) -> float:
    """Work arrived at station j minus elapsed time; workload equals
    this plus the accumulated idleness."""
    return sim.stations[j].arrived_work - sim.clock


def idleness(sim: SimState, j: int) -> float:
    return sim.stations[j].idle_time


def utilization(sim: SimState, j: int) -> float:
    return sim.stations[j].busy_time / sim.clock if sim.clock > 0 else 0.0


def queue_length(sim: SimState, j: int) -> int:
    """Customers at station j, including the one in service."""
    return sim.stations[j].present


def class_counts(sim: SimState, j: int) -> Tuple[int, ...]:
    """Per-class customer counts at station j (index k-1 is class k)."""
    return tuple(sim.stations[j].class_counts[1:])


def mean_queue_length(sim: SimState, j: int) -> float:
    return sim.stations[j].int_present / sim.clock if sim.clock > 0 else 0.0


def behind_frontier_stats(sim: SimState, j: int) -> BehindStats:
    """How much of station j sits strictly behind its frontier.

    Instantaneous count/work/fraction refer to the current instant;
    the time-averaged fraction is the ratio of the time integral of
    the behind count to the time integral of the total count (zero
    when the station has never held anyone).
    """
    st = sim.stations[j]
    count = st.pending_behind + (1 if st.serving_behind else 0)
    work = st.pending_behind_work
    if st.serving_behind:
        work += st.serving_dep - sim.clock
    fraction = count / st.present if st.present else 0.0
    avg = st.int_behind / st.int_present if st.int_present > 0.0 else 0.0
    return BehindStats(
        count=count,
        work=work,
        fraction=fraction,
        time_avg_fraction=avg,
        behind_count_integral=st.int_behind,
        present_count_integral=st.int_present,
        behind_work_integral=st.int_behind_work,
    )
