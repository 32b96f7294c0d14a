import logging
import time
from enum import Enum
from typing import Optional

import numpy as np

from src.moves import MoveEngine, MoveKind
from src.solution import Solution, objective_surrogate
from src.solver_props import Improvement

logger = logging.getLogger(__name__)

# strict improvement threshold, avoids cycling on floating plateaus
EPSILON = 1e-9


class NeighborhoodId(str, Enum):
    N1 = "N1"
    N2 = "N2"
    N3 = "N3"
    N4 = "N4"
    N5 = "N5"
    N6 = "N6"
    N7 = "N7"
    NADD = "NAdd"
    NDROP = "NDrop"

    @property
    def kind(self) -> MoveKind:
        return NEIGHBORHOOD_MOVES[self]


NEIGHBORHOOD_MOVES = {
    NeighborhoodId.N1: MoveKind.SWAP,
    NeighborhoodId.N2: MoveKind.INSERT,
    NeighborhoodId.N3: MoveKind.TWO_OPT,
    NeighborhoodId.N4: MoveKind.OR_OPT,
    NeighborhoodId.N5: MoveKind.INTER_SWAP,
    NeighborhoodId.N6: MoveKind.INTER_INSERT,
    NeighborhoodId.N7: MoveKind.INTER_TWO_OPT,
    NeighborhoodId.NADD: MoveKind.ADD,
    NeighborhoodId.NDROP: MoveKind.DROP,
}

ROUTING_NEIGHBORHOODS = (
    NeighborhoodId.N1,
    NeighborhoodId.N2,
    NeighborhoodId.N3,
    NeighborhoodId.N4,
    NeighborhoodId.N5,
    NeighborhoodId.N6,
    NeighborhoodId.N7,
)


def expired(deadline: Optional[float]) -> bool:
    return deadline is not None and time.perf_counter() >= deadline


def local_search(
    sol: Solution,
    nb: NeighborhoodId,
    engine: MoveEngine,
    rng: np.random.Generator = None,
    improvement: Improvement = Improvement.BEST,
    deadline: Optional[float] = None,
) -> Solution:
    """
    Hill-climb `sol` in place within one neighborhood until no move gains more
    than EPSILON. Sweeps are best-improvement unless `improvement` is FIRST.
    """
    kind = NeighborhoodId(nb).kind
    first = improvement is Improvement.FIRST
    applied = 0
    while not expired(deadline):
        move = engine.best_move(sol, kind, threshold=EPSILON, first=first)
        if move is None:
            break
        engine.apply(sol, move)
        applied += 1
    if applied:
        logger.debug("%s: %d moves, surrogate %.6f", kind.value, applied, sol.surrogate)
    return sol


def vns(
    sol: Solution,
    engine: MoveEngine,
    rng: np.random.Generator,
    improvement: Improvement = Improvement.BEST,
    deadline: Optional[float] = None,
) -> Solution:
    """
    Variable neighborhood search, in place. Each round starts from the Add
    neighborhood, then visits N1..N7 in random order with a Drop pass after
    each; rounds repeat while the surrogate strictly improves.
    """
    while True:
        before = sol.surrogate
        pending = list(ROUTING_NEIGHBORHOODS)
        local_search(sol, NeighborhoodId.NADD, engine, rng, improvement, deadline)
        while pending:
            nb = pending.pop(int(rng.integers(len(pending))))
            local_search(sol, nb, engine, rng, improvement, deadline)
            local_search(sol, NeighborhoodId.NDROP, engine, rng, improvement, deadline)
        if sol.surrogate <= before + EPSILON or expired(deadline):
            break
    # resynchronise the incrementally maintained cache
    sol.surrogate = objective_surrogate(sol)
    return sol
