"""
Exact reference solver and gain cross-checks for small instances.

exact_solve enumerates every subset of customers and every ordering of each
subset as a single route, then combines disjoint subsets into at most K routes.
"""

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import List, Tuple

from src.errors import SizeGuardError
from src.instance import Instance
from src.moves import Move, MoveEngine
from src.solution import Solution, objective_true, route_true, tolerance

logger = logging.getLogger(__name__)

MAX_EXACT_SIZE = 10


@dataclass
class OracleResult:
    optimum: float
    witness: Solution
    enumerated: int

    def to_dict(self) -> dict:
        return {
            "instance_name": self.witness.instance.name,
            "optimum": self.optimum,
            "routes": [list(r) for r in self.witness.routes],
            "unvisited": sorted(self.witness.unvisited),
            "enumerated": self.enumerated,
        }

    def certified(self) -> bool:
        return abs(objective_true(self.witness) - self.optimum) <= tolerance(self.optimum)


def _best_orders(instance: Instance) -> Tuple[List[float], List[Tuple[int, ...]], int]:
    """Per subset bitmask, the best single-route value and its ordering."""
    size = 1 << instance.n
    value = [0.0] * size
    order: List[Tuple[int, ...]] = [()] * size
    enumerated = 0
    for mask in range(1, size):
        members = [c for c in instance.customers if mask >> (c - 1) & 1]
        best = 0.0
        best_order: Tuple[int, ...] = ()
        for perm in permutations(members):
            enumerated += 1
            v = route_true(instance, perm)
            if v > best:
                best = v
                best_order = perm
        value[mask] = best
        order[mask] = best_order
    return value, order, enumerated


def _subset_layers(value: List[float], n: int, layers: int) -> Tuple[List[List[int]], float, int]:
    """
    Layer k, entry T: best total of at most k+1 routes over disjoint subsets of T.
    choice[k][T] is the subset given to route k, 0 for an empty route; strict
    comparison keeps routes empty unless a subset strictly helps.
    """
    full = (1 << n) - 1
    choice = [[0] * (full + 1) for _ in range(layers)]
    prev = [0.0] * (full + 1)
    examined = 0
    for k in range(layers):
        layer = [0.0] * (full + 1)
        for T in range(full + 1):
            top = prev[T]
            pick = 0
            S = T
            while S:
                examined += 1
                candidate = value[S] + prev[T ^ S]
                if candidate > top:
                    top = candidate
                    pick = S
                S = (S - 1) & T
            layer[T] = top
            choice[k][T] = pick
        prev = layer
    return choice, prev[full], examined


def exact_solve(instance: Instance) -> OracleResult:
    """Maximum clipped objective over all solutions; n is guarded by MAX_EXACT_SIZE."""
    if instance.n > MAX_EXACT_SIZE:
        raise SizeGuardError(
            f"exact solver accepts at most {MAX_EXACT_SIZE} customers, got {instance.n}"
        )
    value, order, enumerated = _best_orders(instance)

    routes: List[List[int]] = [[] for _ in range(instance.servers)]
    optimum = 0.0
    # routes beyond n are necessarily empty and interchangeable
    layers = min(instance.servers, instance.n)
    if layers:
        choice, optimum, examined = _subset_layers(value, instance.n, layers)
        enumerated += examined
        T = (1 << instance.n) - 1
        for k in range(layers - 1, -1, -1):
            S = choice[k][T]
            routes[layers - 1 - k] = list(order[S])
            T ^= S

    witness = Solution(instance, routes)
    logger.debug("exact optimum of %s: %.6f (%d candidates)", instance.name, optimum, enumerated)
    return OracleResult(optimum=optimum, witness=witness, enumerated=enumerated)


def check_gain(engine: MoveEngine, sol: Solution, move: Move) -> float:
    """Absolute difference between the constant-time gain and clone-and-recompute."""
    return abs(engine.fast_gain(sol, move) - engine.naive_gain(sol, move))
