"""
Hybrid memetic search: population initialization, arc-based and route-based
crossover, perturbation, pool update and the main loop.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.instance import Instance
from src.moves import MoveEngine
from src.solution import (
    Arc,
    Solution,
    arc_set,
    objective_surrogate,
    objective_true,
    negative_revenues,
    tolerance,
)
from src.solver_props import Mode, SolverConfig
from src.vns import EPSILON, vns

logger = logging.getLogger(__name__)

POOL_RETRIES = 10
DIVERSIFY_ATTEMPTS = 100


def random_construct(instance: Instance, rng: np.random.Generator) -> Solution:
    """
    Random giant tour of all customers cut into K consecutive routes whose sizes
    differ by at most one, the longer routes first.
    """
    tour = [int(c) + 1 for c in rng.permutation(instance.n)]
    size, extra = divmod(instance.n, instance.servers)
    routes = []
    start = 0
    for k in range(instance.servers):
        length = size + (1 if k < extra else 0)
        routes.append(tour[start : start + length])
        start += length
    return Solution(instance, routes)


def greedy_construct(instance: Instance, q: int, rng: np.random.Generator) -> Solution:
    """
    Repeatedly append one remaining customer to the tail of one route, chosen
    uniformly among the q (customer, route) pairs of largest surrogate gain.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    d = instance.dist
    p = instance.prize
    K = instance.servers
    routes: List[List[int]] = [[] for _ in range(K)]
    tail = [0] * K
    arrival = [0.0] * K
    remaining = list(instance.customers)
    while remaining:
        scored = sorted(
            (-(p[v] - arrival[k] - d[tail[k]][v]), v, k)
            for v in remaining
            for k in range(K)
        )
        _, v, k = scored[int(rng.integers(min(q, len(scored))))]
        routes[k].append(v)
        arrival[k] += d[tail[k]][v]
        tail[k] = v
        remaining.remove(v)
    return Solution(instance, routes)


def spert(sol: Solution, st: int, rng: np.random.Generator) -> Solution:
    """
    Perturb in place: `st` random intra-route relocations, then every unvisited
    customer appended to the tail of a random route.
    """
    routes = [list(r) for r in sol.routes]
    for _ in range(st):
        occupied = [k for k, r in enumerate(routes) if r]
        if not occupied:
            break
        route = routes[occupied[int(rng.integers(len(occupied)))]]
        customer = route.pop(int(rng.integers(len(route))))
        route.insert(int(rng.integers(len(route) + 1)), customer)
    pending = sorted(sol.unvisited)
    for idx in rng.permutation(len(pending)):
        routes[int(rng.integers(len(routes)))].append(pending[idx])
    return sol.set_routes(routes)


def _find(routes: List[List[int]], customer: int) -> Tuple[int, int]:
    for k, route in enumerate(routes):
        if customer in route:
            return k, route.index(customer)
    raise KeyError(customer)


def select_half_arcs(
    donor_arcs: Iterable[Arc], rng: np.random.Generator
) -> List[Arc]:
    """floor(|arcs| / 2) arcs drawn uniformly without replacement, in draw order."""
    pool = sorted(donor_arcs)
    count = len(pool) // 2
    if not count:
        return []
    return [pool[int(idx)] for idx in rng.choice(len(pool), size=count, replace=False)]


def merge_arcs(
    sol: Solution,
    arcs: Sequence[Arc],
    frozen: Iterable[int],
    rng: np.random.Generator,
) -> Solution:
    """
    Insert each arc (a, b) into `sol` in place. Endpoints already placed by
    earlier arcs, and the endpoints in `frozen`, are never moved again. The
    depot is always present and never frozen.
    """
    routes = [list(r) for r in sol.routes]
    placed = {c for r in routes for c in r}
    frozen = set(frozen)
    K = len(routes)

    for a, b in arcs:
        if a == 0:
            if b not in placed:
                routes[int(rng.integers(K))].insert(0, b)
                placed.add(b)
            elif b not in frozen:
                k, idx = _find(routes, b)
                del routes[k][idx]
                routes[int(rng.integers(K))].insert(0, b)
        elif a not in placed and b not in placed:
            routes[int(rng.integers(K))].extend((a, b))
            placed.update((a, b))
        elif b not in placed:
            k, idx = _find(routes, a)
            routes[k].insert(idx + 1, b)
            placed.add(b)
        elif a not in placed:
            k, idx = _find(routes, b)
            routes[k].insert(idx, a)
            placed.add(a)
        elif b not in frozen:
            k, idx = _find(routes, b)
            del routes[k][idx]
            k, idx = _find(routes, a)
            routes[k].insert(idx + 1, b)
        elif a not in frozen:
            k, idx = _find(routes, a)
            del routes[k][idx]
            k, idx = _find(routes, b)
            routes[k].insert(idx, a)
        frozen.update(c for c in (a, b) if c)

    return sol.set_routes(routes)


def abx(pa: Solution, pb: Solution, rng: np.random.Generator) -> Solution:
    """
    Arc-based crossover: a copy of `pa` absorbing half of the arcs of `pb` that
    `pa` lacks, with the endpoints of the arcs both parents share protected.
    """
    arcs_a = arc_set(pa)
    arcs_b = arc_set(pb)
    frozen = {c for arc in arcs_a & arcs_b for c in arc if c}
    picked = select_half_arcs(arcs_b - arcs_a, rng)
    return merge_arcs(pa.copy(), picked, frozen, rng)


def rbx(pa: Solution, pb: Solution, rng: np.random.Generator) -> Solution:
    """
    Route-based crossover: a copy of `pa` with one random route replaced by a
    random route of `pb`; transplanted customers are deleted elsewhere.
    """
    K = len(pa.routes)
    target = int(rng.integers(K))
    donor = list(pb.routes[int(rng.integers(K))])
    moved = set(donor)
    routes = [[c for c in r if c not in moved] for r in pa.routes]
    routes[target] = donor
    return pa.copy().set_routes(routes)


class Population:
    """Fixed-size pool of solutions with pairwise distinct arc sets."""

    def __init__(self, members: Sequence[Solution] = ()):
        self.members: List[Solution] = []
        self.arcs: List[FrozenSet[Arc]] = []
        for sol in members:
            self.members.append(sol)
            self.arcs.append(arc_set(sol))

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, idx: int) -> Solution:
        return self.members[idx]

    def contains(self, arcs: FrozenSet[Arc]) -> bool:
        return arcs in self.arcs

    def admit(self, sol: Solution) -> None:
        self.members.append(sol)
        self.arcs.append(arc_set(sol))

    def best(self) -> Solution:
        return max(self.members, key=lambda s: s.surrogate)

    def worst_index(self) -> int:
        scores = [s.surrogate for s in self.members]
        return scores.index(min(scores))

    def update(self, cand: Solution) -> bool:
        """Replace the worst member with `cand` if it is new and better; True on replacement."""
        arcs = arc_set(cand)
        if self.contains(arcs):
            return False
        worst = self.worst_index()
        if cand.surrogate <= self.members[worst].surrogate + EPSILON:
            return False
        self.members[worst] = cand
        self.arcs[worst] = arcs
        return True


def pool_update(pop: Population, cand: Solution) -> Population:
    """Offer `cand` to `pop`; see `Population.update`."""
    pop.update(cand)
    return pop


def init_pool(
    instance: Instance,
    cfg: SolverConfig,
    rng: np.random.Generator,
    engine: MoveEngine = None,
    deadline: Optional[float] = None,
) -> Population:
    """
    ceil(nump/2) random and floor(nump/2) greedy constructions, each improved by
    VNS. A member whose arc set is already pooled is rebuilt up to POOL_RETRIES
    times, then diversified (see `_diversify`). A duplicate is admitted only when
    diversification fails too, which happens when the instance has fewer
    distinct solutions than `nump`.
    """
    engine = engine or MoveEngine(instance, cfg.eval)
    pop = Population()
    n_random = math.ceil(cfg.nump / 2)
    for idx in range(cfg.nump):
        for _ in range(POOL_RETRIES + 1):
            if idx < n_random:
                sol = random_construct(instance, rng)
            else:
                sol = greedy_construct(instance, cfg.q, rng)
            vns(sol, engine, rng, cfg.improvement, deadline)
            if not pop.contains(arc_set(sol)):
                break
        else:
            logger.debug("pool member %d duplicated after %d rebuilds", idx, POOL_RETRIES)
            if not _diversify(sol, pop, cfg.st, rng):
                logger.warning("pool member %d admitted as a duplicate", idx)
        pop.admit(sol)
    return pop


def _diversify(sol: Solution, pop: Population, st: int, rng: np.random.Generator) -> bool:
    """
    Perturb `sol` in place until its arc set is new to `pop`. The first
    POOL_RETRIES attempts use `spert` alone; later ones also leave a random
    subset of customers unvisited. False when every attempt was a duplicate.
    """
    for attempt in range(DIVERSIFY_ATTEMPTS):
        spert(sol, st, rng)
        if attempt >= POOL_RETRIES:
            routes = [[c for c in r if rng.random() < 0.5] for r in sol.routes]
            sol.set_routes(routes)
        if not pop.contains(arc_set(sol)):
            return True
    return False


@dataclass
class RunReport:
    """
    Outcome of one solver run.

    Attributes:
      instance_name: Name of the solved instance.
      seed: Seed of the run.
      mode: Main-loop variant.
      eval: Gain evaluation strategy.
      best_true: Clipped objective of the best solution.
      best_surrogate: Unclipped objective of the best solution, used for all comparisons.
      routes: Routes of the best solution.
      unvisited: Customers the best solution leaves out.
      time_to_best: Seconds from start until the best solution was found.
      visited: Neighbor solutions evaluated.
      iterations: Main-loop generations completed.
      t_max: Wall-clock budget in seconds.
      elapsed: Seconds the run took.
    """

    instance_name: str
    seed: int
    mode: str
    eval: str
    best_true: float
    best_surrogate: float
    routes: List[List[int]]
    unvisited: List[int]
    time_to_best: float
    visited: int
    iterations: int
    t_max: float
    elapsed: float
    best: Optional[Solution] = field(default=None, repr=False, compare=False)

    TIMING_FIELDS = ("time_to_best", "elapsed")

    @property
    def discrepancy(self) -> bool:
        """True when the best solution still holds a negative revenue."""
        return abs(self.best_true - self.best_surrogate) > tolerance(self.best_true)

    def to_dict(self, include_timing: bool = True) -> dict:
        document = {
            "instance_name": self.instance_name,
            "seed": self.seed,
            "mode": self.mode,
            "eval": self.eval,
            "best_true": self.best_true,
            "best_surrogate": self.best_surrogate,
            "discrepancy": self.discrepancy,
            "routes": self.routes,
            "unvisited": self.unvisited,
            "visited": self.visited,
            "iterations": self.iterations,
            "t_max": self.t_max,
            "time_to_best": round(self.time_to_best, 3),
            "elapsed": round(self.elapsed, 3),
        }
        if not include_timing:
            for key in self.TIMING_FIELDS:
                document.pop(key)
        return document


def ehsa_solve(instance: Instance, cfg: SolverConfig) -> RunReport:
    """
    Run the memetic search until the time budget (or the generation cap) is
    spent and report the best solution by surrogate objective.
    """
    start = time.perf_counter()
    budget = cfg.budget_for(instance.n)
    deadline = start + budget
    rng = np.random.default_rng(cfg.seed)
    engine = MoveEngine(instance, cfg.eval)
    logger.info(
        "solving %s (n=%d, K=%d) mode=%s eval=%s seed=%d budget=%.1fs",
        instance.name,
        instance.n,
        instance.servers,
        cfg.mode.value,
        cfg.eval.value,
        cfg.seed,
        budget,
    )

    pop = init_pool(instance, cfg, rng, engine, deadline)
    best = pop.best().copy()
    time_to_best = min(time.perf_counter() - start, budget)

    generations = 0
    while time.perf_counter() < deadline:
        if cfg.max_generations is not None and generations >= cfg.max_generations:
            break
        generations += 1

        if cfg.mode is Mode.ILS:
            sol = pop[int(rng.integers(len(pop)))].copy()
        else:
            a, b = (int(x) for x in rng.choice(len(pop), size=2, replace=False))
            crossover = abx if cfg.mode is Mode.EHSA else rbx
            sol = crossover(pop[a], pop[b], rng)

        local_best = sol.copy()
        stall = 0
        while stall < cfg.limi:
            vns(sol, engine, rng, cfg.improvement, deadline)
            if sol.surrogate > local_best.surrogate + EPSILON:
                local_best = sol.copy()
                stall = 0
                now = time.perf_counter() - start
                if local_best.surrogate > best.surrogate + EPSILON and now <= budget:
                    best = local_best.copy()
                    time_to_best = now
                    logger.info(
                        "generation %d: new best %.4f at %.2fs", generations, best.surrogate, now
                    )
            else:
                stall += 1
            if time.perf_counter() >= deadline:
                break
            spert(sol, cfg.st, rng)

        pool_update(pop, local_best)

    elapsed = time.perf_counter() - start
    best_true = objective_true(best)
    best_surrogate = objective_surrogate(best)
    if negative_revenues(best):
        logger.warning(
            "best solution of %s holds negative revenues: true %.4f, surrogate %.4f",
            instance.name,
            best_true,
            best_surrogate,
        )
    logger.info(
        "finished %s seed=%d: best %.4f after %d generations, %d neighbors",
        instance.name,
        cfg.seed,
        best_surrogate,
        generations,
        engine.visited,
    )
    return RunReport(
        instance_name=instance.name,
        seed=cfg.seed,
        mode=cfg.mode.value,
        eval=cfg.eval.value,
        best_true=best_true,
        best_surrogate=best_surrogate,
        routes=[list(r) for r in best.routes],
        unvisited=sorted(best.unvisited),
        time_to_best=time_to_best,
        visited=engine.visited,
        iterations=generations,
        t_max=budget,
        elapsed=elapsed,
        best=best,
    )
