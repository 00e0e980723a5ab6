"""Congestion-triggered vehicle rerouting around the signalized junction.

Every detector window, arms whose inbound density exceeds a threshold are
flagged.  For each flagged arm, vehicles still on its approach edge that
have not been diverted before and are heading for the junction estimate a
door-to-destination time for the current route and for the best few
alternatives, all under the same congestion model:

* edge weights are free-flow traversal times, surcharged on every flagged
  arm's inbound edges in proportion to the measured density;
* any route that crosses a flagged stop line additionally pays that arm's
  expected stop-line wait (accrued waiting per queued vehicle there).

Because the stop-line wait charges the bottleneck rather than the vehicle,
a big queue never makes "take a different exit through the same jam" look
attractive; the first estimates to win are the bypass routes that double
back at the inner node and travel the diagonals.

A vehicle switches only when its current-route estimate is strictly worse
than the best alternative; ties stay.  Switching rewrites the route tail in
place and marks the vehicle so it is never diverted twice.  Every
comparison, switch or stay, is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .roadnet import enumerate_routes, free_flow_weights
from .simcore import ARM_ORDER, DetectorReading, Simulation, Vehicle

SURCHARGE_RATE = 2.0  # seconds of penalty per estimated vehicle on the edge
DEFAULT_DENSITY_THRESHOLD = 0.05
DEFAULT_MAX_ALTERNATIVES = 4


@dataclass(frozen=True)
class RerouteDecision:
    """One stay-or-switch comparison for one vehicle at one window."""

    time: int
    vehicle: str
    old_route: tuple[str, ...]
    new_route: tuple[str, ...]
    decision: str  # "switch" or "stay"
    u_twt: float
    alternative_times: tuple[float, ...]

    @property
    def best_alternative(self) -> float | None:
        return self.alternative_times[0] if self.alternative_times else None


def flagged_arms(readings: dict[str, DetectorReading],
                 threshold: float) -> list[str]:
    """Arms whose inbound density strictly exceeds the threshold."""
    return [arm for arm in ARM_ORDER
            if arm in readings and readings[arm].density > threshold]


def expected_arm_wait(sim: Simulation, arm: str) -> float:
    """Mean accrued waiting per currently queued vehicle (0 if no queue)."""
    queue = sim.arm_queue(arm)
    if queue == 0:
        return 0.0
    return sim.arm_wait(arm) / queue


def surcharged_weights(sim: Simulation, readings: dict[str, DetectorReading],
                       flagged: list[str]) -> dict[str, float]:
    """Free-flow traversal times plus a congestion surcharge on flagged arms.

    The surcharge per inbound edge is density x length x SURCHARGE_RATE:
    density x length estimates the vehicles occupying the edge, and each is
    charged as a fixed clearance cost.
    """
    weights = dict(free_flow_weights(sim.net))
    for arm in flagged:
        density = readings[arm].density
        quad = sim.arms[arm]
        for eid in (quad.approach_in, quad.junction_in):
            weights[eid] += density * sim.net.edges[eid].length * SURCHARGE_RATE
    return weights


def stop_line_waits(sim: Simulation, flagged: list[str]) -> dict[str, float]:
    """Expected stop-line wait keyed by the flagged arm's junction edge."""
    return {sim.arms[arm].junction_in: expected_arm_wait(sim, arm)
            for arm in flagged}


def candidate_vehicles(sim: Simulation, arm: str) -> list[Vehicle]:
    """Divertable vehicles: on the flagged arm's approach edge, never
    diverted before, and still routed through that arm's junction edge.
    Ordered front of queue first (then lane, then id) for determinism."""
    quad = sim.arms[arm]
    junction_edge = quad.junction_in
    picked = [v for v in sim.vehicles_on_edge(quad.approach_in)
              if not v.rerouted and junction_edge in v.remaining_route]
    picked.sort(key=lambda v: (-v.pos, v.lane, v.id))
    return picked


def tail_time(tail: tuple[str, ...], base: float, weights: dict[str, float],
              waits: dict[str, float]) -> float:
    """Door-to-destination estimate for one route tail: the unfinished part
    of the current edge, every remaining edge at full weight, and the
    stop-line wait of every flagged junction edge the tail crosses."""
    total = base + sum(weights[eid] for eid in tail)
    total += sum(wait for eid, wait in waits.items() if eid in tail)
    return total


def evaluate_vehicle(sim: Simulation, vehicle: Vehicle,
                     weights: dict[str, float], waits: dict[str, float],
                     max_alternatives: int) -> RerouteDecision:
    """Compare staying on the current route against the best alternatives,
    and rewrite the vehicle's route if switching wins strictly."""
    net = sim.net
    edge = net.edges[vehicle.edge_id]
    old_remaining = vehicle.remaining_route
    current_tail = vehicle.route[vehicle.route_idx + 1:]
    base = (edge.length - vehicle.pos) / edge.length * weights[vehicle.edge_id]
    u_twt = tail_time(current_tail, base, weights, waits)

    destination = net.edges[vehicle.route[-1]].to_node
    options = []
    for route in enumerate_routes(net, edge.to_node, destination, weights,
                                  k=max_alternatives):
        if route.edges == current_tail:
            continue
        options.append((tail_time(route.edges, base, weights, waits),
                        route.edges, route))
    options.sort(key=lambda item: (item[0], item[1]))
    alternative_times = tuple(t for t, _, _ in options)

    if options and u_twt > options[0][0]:
        best = options[0][2]
        sim.replace_route_suffix(vehicle, best.edges)
        vehicle.rerouted = True
        decision = "switch"
    else:
        decision = "stay"
    return RerouteDecision(
        time=sim.clock,
        vehicle=vehicle.id,
        old_route=old_remaining,
        new_route=vehicle.remaining_route,
        decision=decision,
        u_twt=u_twt,
        alternative_times=alternative_times,
    )


def apply_rerouting(sim: Simulation, readings: dict[str, DetectorReading],
                    threshold: float = DEFAULT_DENSITY_THRESHOLD,
                    max_alternatives: int = DEFAULT_MAX_ALTERNATIVES,
                    ) -> list[RerouteDecision]:
    """One full pass: flag arms, build the cost model, evaluate candidates."""
    flagged = flagged_arms(readings, threshold)
    if not flagged:
        return []
    weights = surcharged_weights(sim, readings, flagged)
    waits = stop_line_waits(sim, flagged)
    decisions: list[RerouteDecision] = []
    for arm in flagged:
        for vehicle in candidate_vehicles(sim, arm):
            decisions.append(evaluate_vehicle(sim, vehicle, weights, waits,
                                              max_alternatives))
    return decisions


class CongestionMonitor:
    """Boundary hook: polls detectors each window and applies rerouting.

    Collects every RerouteDecision it makes in `decisions`.
    """

    def __init__(self, density_threshold: float = DEFAULT_DENSITY_THRESHOLD,
                 max_alternatives: int = DEFAULT_MAX_ALTERNATIVES):
        if density_threshold < 0:
            raise ValueError("density_threshold must be >= 0")
        if max_alternatives < 1:
            raise ValueError("max_alternatives must be >= 1")
        self.density_threshold = density_threshold
        self.max_alternatives = max_alternatives
        self.decisions: list[RerouteDecision] = []

    def __call__(self, sim: Simulation) -> list[RerouteDecision]:
        readings = sim.read_detectors()
        new = apply_rerouting(sim, readings, self.density_threshold,
                              self.max_alternatives)
        self.decisions.extend(new)
        return new
