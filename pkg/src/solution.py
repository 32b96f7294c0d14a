"""
Candidate solutions: K depot-rooted open routes plus the unvisited set.

Routes hold customer ids only; position t of route k (1-based) is
`routes[k][t - 1]` and position 0 is the depot. Per route the prefix arrays are

    vsd[t] = sum_{s<=t} d(x_{s-1}, x_s)        (arrival time at position t)
    wsd[t] = sum_{s<=t} s * d(x_{s-1}, x_s)

The surrogate objective sum_k sum_i p(x_i) - sum_k sum_i vsd_k[i] is cached.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from src.instance import Instance

logger = logging.getLogger(__name__)

Arc = Tuple[int, int]

TOLERANCE = 1e-9


def tolerance(value: float) -> float:
    return TOLERANCE * (1.0 + abs(value))


class Solution:
    """
    A mutable solution bound to one instance. Mutations go through the move
    engine or through `set_routes`, both of which refresh prefixes and the
    cached surrogate and bump `version`.
    """

    __slots__ = ("instance", "routes", "unvisited", "vsd", "wsd", "surrogate", "version")

    def __init__(self, instance: Instance, routes: Sequence[Sequence[int]] = None):
        self.instance = instance
        self.routes: List[List[int]] = [[] for _ in range(instance.servers)]
        self.unvisited: Set[int] = set(instance.customers)
        self.vsd: List[List[float]] = [[0.0] for _ in range(instance.servers)]
        self.wsd: List[List[float]] = [[0.0] for _ in range(instance.servers)]
        self.surrogate = 0.0
        self.version = 0
        if routes is not None:
            self.set_routes(routes)

    def set_routes(self, routes: Sequence[Sequence[int]]) -> "Solution":
        """Replace all routes; the unvisited set becomes the complement."""
        self.routes = [list(route) for route in routes]
        visited = {c for route in self.routes for c in route}
        self.unvisited = set(self.instance.customers) - visited
        return rebuild_prefixes(self)

    def copy(self) -> "Solution":
        clone = Solution.__new__(Solution)
        clone.instance = self.instance
        clone.routes = [list(r) for r in self.routes]
        clone.unvisited = set(self.unvisited)
        clone.vsd = [list(v) for v in self.vsd]
        clone.wsd = [list(w) for w in self.wsd]
        clone.surrogate = self.surrogate
        clone.version = self.version
        return clone

    def locate(self, customer: int) -> Optional[Tuple[int, int]]:
        """(route, position) of a visited customer, None when unvisited."""
        for k, route in enumerate(self.routes):
            if customer in route:
                return k, route.index(customer) + 1
        return None

    @property
    def visited(self) -> Set[int]:
        return {c for route in self.routes for c in route}

    def touch(self) -> None:
        self.version += 1

    def __repr__(self) -> str:
        routes = ", ".join("(0" + "".join(f",{c}" for c in r) + ")" for r in self.routes)
        return f"Solution([{routes}], surrogate={self.surrogate:.6g})"


def route_prefixes(instance: Instance, route: Sequence[int]) -> Tuple[List[float], List[float]]:
    d = instance.dist
    vsd = [0.0]
    wsd = [0.0]
    prev = 0
    for t, customer in enumerate(route, start=1):
        step = d[prev][customer]
        vsd.append(vsd[-1] + step)
        wsd.append(wsd[-1] + t * step)
        prev = customer
    return vsd, wsd


def refresh_route(sol: Solution, k: int) -> None:
    sol.vsd[k], sol.wsd[k] = route_prefixes(sol.instance, sol.routes[k])


def rebuild_prefixes(sol: Solution) -> Solution:
    """Recompute every route's prefix arrays and the cached surrogate from scratch."""
    for k in range(len(sol.routes)):
        refresh_route(sol, k)
    sol.surrogate = objective_surrogate(sol)
    sol.touch()
    return sol


def route_surrogate(instance: Instance, route: Sequence[int]) -> float:
    d = instance.dist
    m = len(route)
    total = 0.0
    prev = 0
    for t, customer in enumerate(route, start=1):
        total += instance.prize[customer] - (m - t + 1) * d[prev][customer]
        prev = customer
    return total


def route_true(instance: Instance, route: Sequence[int]) -> float:
    d = instance.dist
    total = 0.0
    latency = 0.0
    prev = 0
    for customer in route:
        latency += d[prev][customer]
        total += max(instance.prize[customer] - latency, 0.0)
        prev = customer
    return total


def objective_true(sol: Solution) -> float:
    """Sum of clipped revenues max(p_i - l(i), 0) over visited customers."""
    return sum(route_true(sol.instance, route) for route in sol.routes)


def objective_surrogate(sol: Solution) -> float:
    """Unclipped revenue: sum of profits minus sum of (m_k - i + 1) * d(x_{i-1}, x_i)."""
    return sum(route_surrogate(sol.instance, route) for route in sol.routes)


def negative_revenues(sol: Solution) -> List[Tuple[int, float]]:
    """(customer, p_i - l(i)) for every visited customer with negative revenue."""
    d = sol.instance.dist
    found = []
    for route in sol.routes:
        latency = 0.0
        prev = 0
        for customer in route:
            latency += d[prev][customer]
            revenue = sol.instance.prize[customer] - latency
            if revenue < -tolerance(latency):
                found.append((customer, revenue))
            prev = customer
    return found


def arc_set(sol: Solution) -> FrozenSet[Arc]:
    """Directed arcs of all routes, depot-out arcs included."""
    arcs = set()
    for route in sol.routes:
        prev = 0
        for customer in route:
            arcs.add((prev, customer))
            prev = customer
    return frozenset(arcs)


def arc_similarity(a: Iterable[Arc], b: Iterable[Arc]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def similarity(a: Solution, b: Solution) -> float:
    """Jaccard index of the two solutions' arc sets; 1.0 when both are empty."""
    return arc_similarity(arc_set(a), arc_set(b))


def pairwise_similarities(arc_sets: Sequence[FrozenSet[Arc]]) -> List[float]:
    return [arc_similarity(a, b) for a, b in combinations(arc_sets, 2)]


class Violation(str, Enum):
    DUPLICATE_CUSTOMER = "duplicate-customer"
    UNKNOWN_CUSTOMER = "unknown-customer"
    MISSING_CUSTOMER = "missing-customer"
    WRONG_ROUTE_COUNT = "wrong-route-count"
    STALE_CACHE = "stale-cache"


@dataclass(frozen=True)
class Verdict:
    violation: Optional[Violation] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.violation is None

    def __str__(self) -> str:
        return "OK" if self.ok else f"{self.violation.value}: {self.detail}"


def validate_routes(
    instance: Instance, routes: Sequence[Sequence[int]], unvisited: Iterable[int]
) -> Verdict:
    if len(routes) != instance.servers:
        return Verdict(
            Violation.WRONG_ROUTE_COUNT,
            f"expected {instance.servers} routes, got {len(routes)}",
        )
    seen: Dict[int, str] = {}
    places = [(f"route {k}", c) for k, route in enumerate(routes) for c in route]
    places += [("unvisited", c) for c in unvisited]
    for place, customer in places:
        if not isinstance(customer, int) or not 1 <= customer <= instance.n:
            return Verdict(Violation.UNKNOWN_CUSTOMER, f"customer {customer} in {place}")
        if customer in seen:
            return Verdict(
                Violation.DUPLICATE_CUSTOMER,
                f"customer {customer} in {seen[customer]} and {place}",
            )
        seen[customer] = place
    missing = sorted(set(instance.customers) - set(seen))
    if missing:
        return Verdict(Violation.MISSING_CUSTOMER, f"customers {missing} are nowhere")
    return Verdict()


def validate_solution(sol: Solution) -> Verdict:
    """Partition, route count and cache consistency; the first violation found."""
    verdict = validate_routes(sol.instance, sol.routes, sol.unvisited)
    if not verdict.ok:
        return verdict
    for k, route in enumerate(sol.routes):
        vsd, wsd = route_prefixes(sol.instance, route)
        cached_v, cached_w = sol.vsd[k], sol.wsd[k]
        if len(cached_v) != len(vsd) or len(cached_w) != len(wsd) or any(
            abs(a - b) > tolerance(b) for a, b in zip(cached_v + cached_w, vsd + wsd)
        ):
            return Verdict(Violation.STALE_CACHE, f"prefix arrays of route {k}")
    fresh = objective_surrogate(sol)
    if abs(sol.surrogate - fresh) > tolerance(fresh):
        return Verdict(
            Violation.STALE_CACHE, f"cached surrogate {sol.surrogate} != {fresh}"
        )
    return Verdict()


def solution_document(sol: Solution, seed: int = None, mode: str = None) -> dict:
    return {
        "instance_name": sol.instance.name,
        "objective_true": objective_true(sol),
        "objective_surrogate": objective_surrogate(sol),
        "routes": [list(route) for route in sol.routes],
        "unvisited": sorted(sol.unvisited),
        "seed": seed,
        "mode": mode,
    }


def save_solution(
    sol: Solution, path: Union[str, Path], seed: int = None, mode: str = None
) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(solution_document(sol, seed, mode), f, indent=2)


def read_solution_document(path: Union[str, Path]) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    for key in ("instance_name", "routes"):
        if key not in document:
            raise ValueError(f"{path}: solution document lacks '{key}'")
    return document


def solution_from_document(instance: Instance, document: dict) -> Tuple[Solution, Verdict]:
    """Build a solution from a document; the verdict covers the stored routes as written."""
    routes = document["routes"]
    unvisited = document.get("unvisited")
    if unvisited is None:
        listed = {c for route in routes for c in route}
        unvisited = [c for c in instance.customers if c not in listed]
    verdict = validate_routes(instance, routes, unvisited)
    if instance.name != document["instance_name"]:
        logger.warning(
            "solution is for instance '%s', checking against '%s'",
            document["instance_name"],
            instance.name,
        )
    sol = Solution(instance)
    if verdict.ok:
        sol.set_routes(routes)
    return sol, verdict
