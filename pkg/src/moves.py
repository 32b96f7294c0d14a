"""
Neighborhood moves: constant-time gain evaluation, naive recomputation and application.

Position conventions (route positions are 1-based, 0 is the depot):

  swap            (k, i, j)        exchange positions i and j
  insert          (k, i, j)        remove position i, reinsert after slot j of the
                                   shortened route (0 <= j <= m-1; j = i-1 is identity)
  two-opt         (k, i, j)        edges are named by their trailing position, edge t
                                   joins x_{t-1} and x_t; removes edges i and j
                                   (i + 2 <= j) and reverses x_i..x_{j-1}; j = m+1 is
                                   the open end of the path, i.e. a tail reversal
  or-opt          (k, i, h, j)     block x_i..x_{i+h-1}, h in {2, 3}, moved after slot j
                                   of the shortened route, never reversed
  inter-swap      (a, i, b, j)     exchange x_i^a and x_j^b
  inter-insert    (a, i, b, j)     move x_i^a after slot j of route b (0 <= j <= m_b)
  inter-two-opt   (a, i, b, j)     cut after positions i and j and exchange the tails
  add             (v, k, j)        insert unvisited v after slot j of route k
  drop            (k, j)           remove position j

All gains are surrogate deltas f(after) - f(before).
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Set, Tuple

from src.errors import MoveError, StaleMoveError
from src.instance import Instance
from src.solution import Solution, objective_surrogate, refresh_route, route_surrogate
from src.solver_props import Evaluation

logger = logging.getLogger(__name__)


class MoveKind(str, Enum):
    SWAP = "swap"
    INSERT = "insert"
    TWO_OPT = "two-opt"
    OR_OPT = "or-opt"
    INTER_SWAP = "inter-swap"
    INTER_INSERT = "inter-insert"
    INTER_TWO_OPT = "inter-two-opt"
    ADD = "add"
    DROP = "drop"


OR_OPT_BLOCKS = (2, 3)


@dataclass(frozen=True)
class Move:
    """
    One neighborhood action. `route_b` is only used by the inter-route kinds,
    `h` by or-opt and `v` by add. `stamp` is the solution version the gain was
    evaluated against, -1 when not evaluated.
    """

    kind: MoveKind
    route_a: int = 0
    i: int = 0
    j: int = 0
    route_b: int = 0
    h: int = 1
    v: int = 0
    gain: float = 0.0
    stamp: int = -1

    @classmethod
    def from_args(cls, kind: MoveKind, args: Tuple[int, ...]) -> "Move":
        """Build a move from the positional arguments of the matching gain_* method."""
        if kind in (MoveKind.SWAP, MoveKind.INSERT, MoveKind.TWO_OPT):
            k, i, j = args
            return cls(kind, route_a=k, i=i, j=j)
        if kind is MoveKind.OR_OPT:
            k, i, h, j = args
            return cls(kind, route_a=k, i=i, h=h, j=j)
        if kind in (MoveKind.INTER_SWAP, MoveKind.INTER_INSERT, MoveKind.INTER_TWO_OPT):
            a, i, b, j = args
            return cls(kind, route_a=a, i=i, route_b=b, j=j)
        if kind is MoveKind.ADD:
            v, k, j = args
            return cls(kind, route_a=k, j=j, v=v)
        k, j = args
        return cls(kind, route_a=k, j=j)

    def args(self) -> Tuple[int, ...]:
        kind = self.kind
        if kind in (MoveKind.SWAP, MoveKind.INSERT, MoveKind.TWO_OPT):
            return self.route_a, self.i, self.j
        if kind is MoveKind.OR_OPT:
            return self.route_a, self.i, self.h, self.j
        if kind in (MoveKind.INTER_SWAP, MoveKind.INTER_INSERT, MoveKind.INTER_TWO_OPT):
            return self.route_a, self.i, self.route_b, self.j
        if kind is MoveKind.ADD:
            return self.v, self.route_a, self.j
        return self.route_a, self.j


def check_move(sol: Solution, move: Move) -> None:
    """Raise MoveError unless the move's positions are legal for `sol`."""
    routes = sol.routes
    kind = move.kind

    def route(k: int) -> List[int]:
        if not 0 <= k < len(routes):
            raise MoveError(f"{kind.value}: route {k} out of range")
        return routes[k]

    def position(k: int, t: int, low: int = 1, extra: int = 0) -> None:
        m = len(route(k))
        if not low <= t <= m + extra:
            raise MoveError(
                f"{kind.value}: position {t} outside [{low}, {m + extra}] of route {k}"
            )

    if kind is MoveKind.SWAP:
        position(move.route_a, move.i)
        position(move.route_a, move.j)
    elif kind is MoveKind.INSERT:
        position(move.route_a, move.i)
        position(move.route_a, move.j, low=0, extra=-1)
    elif kind is MoveKind.TWO_OPT:
        position(move.route_a, move.i)
        position(move.route_a, move.j, extra=1)
        if move.j < move.i + 2:
            raise MoveError(
                f"two-opt: edges {move.i} and {move.j} are adjacent or out of order"
            )
    elif kind is MoveKind.OR_OPT:
        if move.h not in OR_OPT_BLOCKS:
            raise MoveError(f"or-opt: block length {move.h} not in {OR_OPT_BLOCKS}")
        position(move.route_a, move.i)
        position(move.route_a, move.i + move.h - 1)
        position(move.route_a, move.j, low=0, extra=-move.h)
    elif kind in (MoveKind.INTER_SWAP, MoveKind.INTER_INSERT, MoveKind.INTER_TWO_OPT):
        if move.route_a == move.route_b:
            raise MoveError(f"{kind.value}: needs two different routes")
        if kind is MoveKind.INTER_SWAP:
            position(move.route_a, move.i)
            position(move.route_b, move.j)
        elif kind is MoveKind.INTER_INSERT:
            position(move.route_a, move.i)
            position(move.route_b, move.j, low=0)
        else:
            position(move.route_a, move.i, low=0)
            position(move.route_b, move.j, low=0)
    elif kind is MoveKind.ADD:
        if move.v not in sol.unvisited:
            raise MoveError(f"add: customer {move.v} is already visited or unknown")
        position(move.route_a, move.j, low=0)
    else:
        position(move.route_a, move.j)


def mutate_routes(routes: List[List[int]], unvisited: Set[int], move: Move) -> Tuple[int, ...]:
    """Apply the move to plain route lists; returns the indices of touched routes."""
    kind = move.kind
    k, i, j = move.route_a, move.i, move.j
    if kind is MoveKind.SWAP:
        r = routes[k]
        r[i - 1], r[j - 1] = r[j - 1], r[i - 1]
        return (k,)
    if kind is MoveKind.INSERT:
        r = routes[k]
        r.insert(j, r.pop(i - 1))
        return (k,)
    if kind is MoveKind.TWO_OPT:
        r = routes[k]
        r[i - 1 : j - 1] = r[i - 1 : j - 1][::-1]
        return (k,)
    if kind is MoveKind.OR_OPT:
        r = routes[k]
        block = r[i - 1 : i - 1 + move.h]
        del r[i - 1 : i - 1 + move.h]
        r[j:j] = block
        return (k,)
    b = move.route_b
    if kind is MoveKind.INTER_SWAP:
        ra, rb = routes[k], routes[b]
        ra[i - 1], rb[j - 1] = rb[j - 1], ra[i - 1]
        return k, b
    if kind is MoveKind.INTER_INSERT:
        routes[b].insert(j, routes[k].pop(i - 1))
        return k, b
    if kind is MoveKind.INTER_TWO_OPT:
        ra, rb = routes[k], routes[b]
        routes[k], routes[b] = ra[:i] + rb[j:], rb[:j] + ra[i:]
        return k, b
    if kind is MoveKind.ADD:
        routes[k].insert(j, move.v)
        unvisited.discard(move.v)
        return (k,)
    unvisited.add(routes[k].pop(j - 1))
    return (k,)


def apply_move(sol: Solution, move: Move) -> Solution:
    """
    Mutate `sol` in place: routes, affected prefixes and the cached surrogate,
    which is incremented by `move.gain`.
    """
    if move.stamp != sol.version:
        raise StaleMoveError(
            f"{move.kind.value} evaluated at version {move.stamp}, solution is at {sol.version}"
        )
    check_move(sol, move)
    for k in mutate_routes(sol.routes, sol.unvisited, move):
        refresh_route(sol, k)
    sol.surrogate += move.gain
    sol.touch()
    return sol


class MoveEngine:
    """
    Evaluates and applies moves against solutions of one instance. Holds no
    solution state; `visited` counts the gain evaluations made by searches.
    """

    def __init__(self, instance: Instance, evaluation: Evaluation = Evaluation.FAST):
        self.instance = instance
        self.evaluation = Evaluation(evaluation)
        self.d = instance.dist
        self.p = instance.prize
        self.visited = 0
        self._fast = {
            MoveKind.SWAP: self._swap,
            MoveKind.INSERT: self._insert,
            MoveKind.TWO_OPT: self._two_opt,
            MoveKind.OR_OPT: self._or_opt,
            MoveKind.INTER_SWAP: self._inter_swap,
            MoveKind.INTER_INSERT: self._inter_insert,
            MoveKind.INTER_TWO_OPT: self._inter_two_opt,
            MoveKind.ADD: self._add,
            MoveKind.DROP: self._drop,
        }

    # -- closed forms, no bounds checks ------------------------------------

    def _removal_cost(self, route, vsd, wsd, i: int, h: int) -> Tuple[float, float]:
        """
        Latency change from cutting the block x_i..x_{i+h-1} out of a route, and
        the bridging distance d(x_{i-1}, x_{i+h}) (0.0 when the block is the tail).
        """
        d = self.d
        m = len(route)
        end = i + h - 1
        prev = route[i - 2] if i > 1 else 0
        cost = -h * vsd[i - 1] - (m + 1) * (vsd[end] - vsd[i - 1]) + (wsd[end] - wsd[i - 1])
        if end < m:
            nxt = route[end]
            bridge = d[prev][nxt]
            cost -= (m - end) * (d[route[end - 1]][nxt] - bridge)
            return cost, bridge
        return cost, 0.0

    def _insertion_cost(self, route, vsd, j: int, c: int) -> float:
        """Latency change from inserting customer c after slot j of an intact route."""
        d = self.d
        m = len(route)
        prev = route[j - 1] if j else 0
        cost = vsd[j] + (m - j + 1) * d[prev][c]
        if j < m:
            nxt = route[j]
            cost += (m - j) * (d[c][nxt] - d[prev][nxt])
        return cost

    def _block_move_cost(self, route, vsd, wsd, i: int, h: int, j: int) -> float:
        d = self.d
        m = len(route)
        end = i + h - 1
        first = route[i - 1]
        last = route[end - 1]
        cost, bridge = self._removal_cost(route, vsd, wsd, i, h)

        # slot j of the shortened route, positions >= i are shifted by h
        m2 = m - h
        if j < i:
            anchor = route[j - 1] if j else 0
            anchor_time = vsd[j]
        else:
            anchor = route[j + h - 1]
            anchor_time = vsd[j + h] - vsd[end + 1] + vsd[i - 1] + bridge
        inner = vsd[end] - vsd[i]
        weighted = (wsd[end] - wsd[i]) - i * inner

        span = m2 + h - j
        cost += h * anchor_time + span * d[anchor][first] + span * inner - weighted
        if j < m2:
            nxt = route[j] if j + 1 < i else route[j + h]
            cost += (m2 - j) * (d[last][nxt] - d[anchor][nxt])
        return cost

    def _swap(self, sol: Solution, k: int, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i > j:
            i, j = j, i
        d = self.d
        route = sol.routes[k]
        m = len(route)
        a = route[i - 1]
        b = route[j - 1]
        pa = route[i - 2] if i > 1 else 0
        gain = (m - i + 1) * (d[pa][a] - d[pa][b])
        if j < m:
            nb = route[j]
            gain += (m - j) * (d[b][nb] - d[a][nb])
        if j > i + 1:
            na = route[i]
            pb = route[j - 2]
            gain += (m - i) * (d[a][na] - d[b][na]) + (m - j + 1) * (d[pb][b] - d[pb][a])
        return gain

    def _insert(self, sol: Solution, k: int, i: int, j: int) -> float:
        if j == i - 1:
            return 0.0
        return -self._block_move_cost(sol.routes[k], sol.vsd[k], sol.wsd[k], i, 1, j)

    def _or_opt(self, sol: Solution, k: int, i: int, h: int, j: int) -> float:
        if j == i - 1:
            return 0.0
        return -self._block_move_cost(sol.routes[k], sol.vsd[k], sol.wsd[k], i, h, j)

    def _two_opt(self, sol: Solution, k: int, i: int, j: int) -> float:
        d = self.d
        route = sol.routes[k]
        vsd = sol.vsd[k]
        wsd = sol.wsd[k]
        m = len(route)
        prev = route[i - 2] if i > 1 else 0
        head = route[i - 1]
        tail = route[j - 2]
        # reversed inner edge t moves from coefficient m-t+1 to m-(i+j-t)+1
        cost = (m - i + 1) * (d[prev][tail] - d[prev][head])
        cost += 2 * (wsd[j - 1] - wsd[i]) - (i + j) * (vsd[j - 1] - vsd[i])
        if j <= m:
            nxt = route[j - 1]
            cost += (m - j + 1) * (d[head][nxt] - d[tail][nxt])
        return -cost

    def _inter_swap(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        d = self.d
        ra = sol.routes[a]
        rb = sol.routes[b]
        ma = len(ra)
        mb = len(rb)
        x = ra[i - 1]
        y = rb[j - 1]
        px = ra[i - 2] if i > 1 else 0
        py = rb[j - 2] if j > 1 else 0
        gain = (ma - i + 1) * (d[px][x] - d[px][y]) + (mb - j + 1) * (d[py][y] - d[py][x])
        if i < ma:
            nx = ra[i]
            gain += (ma - i) * (d[x][nx] - d[y][nx])
        if j < mb:
            ny = rb[j]
            gain += (mb - j) * (d[y][ny] - d[x][ny])
        return gain

    def _inter_insert(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        ra = sol.routes[a]
        removal, _ = self._removal_cost(ra, sol.vsd[a], sol.wsd[a], i, 1)
        return -removal - self._insertion_cost(sol.routes[b], sol.vsd[b], j, ra[i - 1])

    def _inter_two_opt(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        # every node of a moved tail shifts its arrival time by the same amount
        d = self.d
        ra = sol.routes[a]
        rb = sol.routes[b]
        va = sol.vsd[a]
        vb = sol.vsd[b]
        tail_a = len(ra) - i
        tail_b = len(rb) - j
        cost = 0.0
        if tail_a:
            anchor = rb[j - 1] if j else 0
            cost += tail_a * (vb[j] + d[anchor][ra[i]] - va[i + 1])
        if tail_b:
            anchor = ra[i - 1] if i else 0
            cost += tail_b * (va[i] + d[anchor][rb[j]] - vb[j + 1])
        return -cost

    def _add(self, sol: Solution, v: int, k: int, j: int) -> float:
        return self.p[v] - self._insertion_cost(sol.routes[k], sol.vsd[k], j, v)

    def _drop(self, sol: Solution, k: int, j: int) -> float:
        route = sol.routes[k]
        removal, _ = self._removal_cost(route, sol.vsd[k], sol.wsd[k], j, 1)
        return -self.p[route[j - 1]] - removal

    # -- public evaluation --------------------------------------------------

    def _checked(self, sol: Solution, kind: MoveKind, *args: int) -> float:
        move = Move.from_args(kind, args)
        check_move(sol, move)
        return self._fast[kind](sol, *args)

    def gain_swap(self, sol: Solution, k: int, i: int, j: int) -> float:
        return self._checked(sol, MoveKind.SWAP, k, i, j)

    def gain_insert(self, sol: Solution, k: int, i: int, j: int) -> float:
        return self._checked(sol, MoveKind.INSERT, k, i, j)

    def gain_two_opt(self, sol: Solution, k: int, i: int, j: int) -> float:
        return self._checked(sol, MoveKind.TWO_OPT, k, i, j)

    def gain_or_opt(self, sol: Solution, k: int, i: int, h: int, j: int) -> float:
        return self._checked(sol, MoveKind.OR_OPT, k, i, h, j)

    def gain_inter_swap(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        return self._checked(sol, MoveKind.INTER_SWAP, a, i, b, j)

    def gain_inter_insert(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        return self._checked(sol, MoveKind.INTER_INSERT, a, i, b, j)

    def gain_inter_two_opt(self, sol: Solution, a: int, i: int, b: int, j: int) -> float:
        return self._checked(sol, MoveKind.INTER_TWO_OPT, a, i, b, j)

    def gain_add(self, sol: Solution, v: int, k: int, j: int) -> float:
        return self._checked(sol, MoveKind.ADD, v, k, j)

    def gain_drop(self, sol: Solution, k: int, j: int) -> float:
        return self._checked(sol, MoveKind.DROP, k, j)

    def fast_gain(self, sol: Solution, move: Move) -> float:
        check_move(sol, move)
        return self._fast[move.kind](sol, *move.args())

    def naive_gain(self, sol: Solution, move: Move) -> float:
        """Clone the routes, apply the move and recompute the surrogate from scratch."""
        check_move(sol, move)
        routes = [list(r) for r in sol.routes]
        unvisited = set(sol.unvisited)
        mutate_routes(routes, unvisited, move)
        after = sum(route_surrogate(self.instance, r) for r in routes)
        return after - objective_surrogate(sol)

    def gain(self, sol: Solution, move: Move) -> float:
        if self.evaluation is Evaluation.NAIVE:
            return self.naive_gain(sol, move)
        return self.fast_gain(sol, move)

    def evaluate(self, sol: Solution, move: Move) -> Move:
        """The move with its gain and evaluation stamp filled in."""
        self.visited += 1
        return replace(move, gain=self.gain(sol, move), stamp=sol.version)

    def apply(self, sol: Solution, move: Move) -> Solution:
        return apply_move(sol, move)

    # -- neighborhood scans -------------------------------------------------

    def candidates(self, sol: Solution, kind: MoveKind) -> Iterator[Tuple[int, ...]]:
        """Legal, non-identity argument tuples in lexicographic (route, position) order."""
        routes = sol.routes
        K = len(routes)
        if kind is MoveKind.SWAP:
            for k, route in enumerate(routes):
                m = len(route)
                for i in range(1, m):
                    for j in range(i + 1, m + 1):
                        yield k, i, j
        elif kind is MoveKind.INSERT:
            for k, route in enumerate(routes):
                m = len(route)
                for i in range(1, m + 1):
                    for j in range(m):
                        if j != i - 1:
                            yield k, i, j
        elif kind is MoveKind.TWO_OPT:
            for k, route in enumerate(routes):
                m = len(route)
                for i in range(1, m):
                    for j in range(i + 2, m + 2):
                        yield k, i, j
        elif kind is MoveKind.OR_OPT:
            for k, route in enumerate(routes):
                m = len(route)
                for h in OR_OPT_BLOCKS:
                    for i in range(1, m - h + 2):
                        for j in range(m - h + 1):
                            if j != i - 1:
                                yield k, i, h, j
        elif kind is MoveKind.INTER_SWAP:
            for a in range(K):
                for b in range(a + 1, K):
                    for i in range(1, len(routes[a]) + 1):
                        for j in range(1, len(routes[b]) + 1):
                            yield a, i, b, j
        elif kind is MoveKind.INTER_INSERT:
            for a in range(K):
                for b in range(K):
                    if a == b:
                        continue
                    for i in range(1, len(routes[a]) + 1):
                        for j in range(len(routes[b]) + 1):
                            yield a, i, b, j
        elif kind is MoveKind.INTER_TWO_OPT:
            for a in range(K):
                for b in range(a + 1, K):
                    ma, mb = len(routes[a]), len(routes[b])
                    for i in range(ma + 1):
                        for j in range(mb + 1):
                            if (i, j) != (0, 0) and (i, j) != (ma, mb):
                                yield a, i, b, j
        elif kind is MoveKind.ADD:
            for v in sorted(sol.unvisited):
                for k, route in enumerate(routes):
                    for j in range(len(route) + 1):
                        yield v, k, j
        else:
            for k, route in enumerate(routes):
                for j in range(1, len(route) + 1):
                    yield k, j

    def _evaluator(self, kind: MoveKind) -> Callable[..., float]:
        if self.evaluation is Evaluation.FAST:
            return self._fast[kind]

        def naive(sol, *args):
            return self.naive_gain(sol, Move.from_args(kind, args))

        return naive

    def best_move(
        self, sol: Solution, kind: MoveKind, threshold: float = 0.0, first: bool = False
    ) -> Optional[Move]:
        """
        The highest-gain move of `kind` whose gain exceeds `threshold`, ties to the
        earliest candidate; with `first`, the earliest such move.
        """
        evaluator = self._evaluator(kind)
        best_gain = threshold
        best_args = None
        count = 0
        for args in self.candidates(sol, kind):
            count += 1
            g = evaluator(sol, *args)
            if g > best_gain:
                best_gain = g
                best_args = args
                if first:
                    break
        self.visited += count
        if best_args is None:
            return None
        return replace(Move.from_args(kind, best_args), gain=best_gain, stamp=sol.version)
