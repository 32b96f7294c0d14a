import pytest

import numpy as np

from src.errors import MoveError, StaleMoveError
from src.instance import gen_instance, line_instance
from src.memetic import random_construct
from src.moves import Move, MoveEngine, MoveKind, apply_move, check_move
from src.solution import Solution, objective_surrogate, rebuild_prefixes, validate_solution
from src.solver_props import Evaluation


def random_partial_solution(seed: int, n: int = 12, k: int = 3) -> Solution:
    """A random solution on a random instance with two customers left unvisited."""
    instance = gen_instance(n, k, seed=seed)
    rng = np.random.default_rng(seed)
    sol = random_construct(instance, rng)
    routes = [list(r) for r in sol.routes]
    routes[0].pop()
    routes[-1].pop(0)
    return sol.set_routes(routes)


class TestGainExamples:
    """Hand-checked gains on the line instances."""

    def test_swap_adjacent(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        assert sol.surrogate == 26
        assert MoveEngine(l3a).gain_swap(sol, 0, 1, 2) == pytest.approx(4)

    def test_swap_identity(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        assert MoveEngine(l3a).gain_swap(sol, 0, 2, 2) == 0

    def test_swap_non_adjacent(self, l3a):
        sol = Solution(l3a, [[1, 2, 3]])
        after = Solution(l3a, [[3, 2, 1]]).surrogate
        assert MoveEngine(l3a).gain_swap(sol, 0, 1, 3) == pytest.approx(after - 30)

    def test_insert(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        assert MoveEngine(l3a).gain_insert(sol, 0, 1, 1) == pytest.approx(4)

    def test_insert_same_slot(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        assert MoveEngine(l3a).gain_insert(sol, 0, 2, 1) == 0

    def test_insert_single_customer_route(self, l3a):
        sol = Solution(l3a, [[2]])
        assert MoveEngine(l3a).gain_insert(sol, 0, 1, 0) == 0

    def test_two_opt(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        assert MoveEngine(l3a).gain_two_opt(sol, 0, 1, 3) == pytest.approx(4)

    def test_two_opt_coincident_points(self):
        instance = line_instance("dot", [5, 5, 5, 5], [9, 9, 9, 9])
        sol = Solution(instance, [[1, 2, 3, 4]])
        assert MoveEngine(instance).gain_two_opt(sol, 0, 2, 5) == 0

    def test_or_opt(self, l3a):
        sol = Solution(l3a, [[3, 1, 2]])
        assert sol.surrogate == 22
        assert MoveEngine(l3a).gain_or_opt(sol, 0, 2, 2, 0) == pytest.approx(8)

    def test_or_opt_own_slot(self, l3a):
        sol = Solution(l3a, [[3, 1, 2]])
        assert MoveEngine(l3a).gain_or_opt(sol, 0, 2, 2, 1) == 0

    def test_inter_swap(self, l3a_two):
        sol = Solution(l3a_two, [[1], [2, 3]])
        assert sol.surrogate == 30
        assert MoveEngine(l3a_two).gain_inter_swap(sol, 0, 1, 1, 2) == pytest.approx(-2)

    def test_inter_swap_twins(self):
        instance = line_instance("twins", [4, 4], [7, 7], servers=2)
        sol = Solution(instance, [[1], [2]])
        assert MoveEngine(instance).gain_inter_swap(sol, 0, 1, 1, 1) == 0

    def test_inter_insert(self, l3a_two):
        sol = Solution(l3a_two, [[1], [2, 3]])
        assert MoveEngine(l3a_two).gain_inter_insert(sol, 0, 1, 1, 2) == pytest.approx(-4)

    def test_inter_two_opt(self, l3a_two):
        sol = Solution(l3a_two, [[1], [2, 3]])
        engine = MoveEngine(l3a_two)
        move = engine.evaluate(sol, Move(MoveKind.INTER_TWO_OPT, route_a=0, i=0, route_b=1, j=1))
        assert move.gain == pytest.approx(-2)
        engine.apply(sol, move)
        assert sol.routes == [[3], [2, 1]]

    def test_inter_two_opt_empty_tails(self, l3a_two):
        sol = Solution(l3a_two, [[1], [2, 3]])
        assert MoveEngine(l3a_two).gain_inter_two_opt(sol, 0, 1, 1, 2) == 0

    def test_add(self, l3a):
        sol = Solution(l3a, [[1, 2]])
        assert sol.surrogate == 27
        assert MoveEngine(l3a).gain_add(sol, 3, 0, 2) == pytest.approx(3)

    def test_add_worthless_customer(self):
        instance = line_instance("free", [1, 2, 3], [10, 20, 0])
        sol = Solution(instance, [[1, 2]])
        assert MoveEngine(instance).gain_add(sol, 3, 0, 2) <= 0

    def test_drop(self, l3b):
        sol = Solution(l3b, [[1, 2, 3]])
        assert MoveEngine(l3b).gain_drop(sol, 0, 3) == pytest.approx(1)

    def test_drop_break_even(self):
        instance = line_instance("even", [4], [4])
        sol = Solution(instance, [[1]])
        assert MoveEngine(instance).gain_drop(sol, 0, 1) == 0


class TestFastMatchesNaive:
    """The constant-time gains agree with clone-and-recompute on every legal move."""

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("kind", list(MoveKind))
    def test_all_candidates(self, seed, kind):
        sol = random_partial_solution(seed)
        engine = MoveEngine(sol.instance)
        scale = 1.0 + abs(sol.surrogate)
        count = 0
        for args in engine.candidates(sol, kind):
            move = Move.from_args(kind, args)
            assert engine.fast_gain(sol, move) == pytest.approx(
                engine.naive_gain(sol, move), abs=1e-9 * scale
            ), f"{kind.value}{args}"
            count += 1
        assert count > 0

    @pytest.mark.parametrize("seed", range(4))
    def test_or_opt_long_route(self, seed):
        instance = gen_instance(10, 1, seed=seed)
        sol = Solution(instance, [list(range(1, 11))])
        engine = MoveEngine(instance)
        for i in range(1, 9):
            for j in range(8):
                move = Move(MoveKind.OR_OPT, route_a=0, i=i, h=3, j=j)
                assert engine.fast_gain(sol, move) == pytest.approx(
                    engine.naive_gain(sol, move), abs=1e-9
                )

    def test_naive_engine_reports_same_best_move(self):
        sol = random_partial_solution(11)
        fast = MoveEngine(sol.instance, Evaluation.FAST).best_move(sol, MoveKind.INSERT)
        naive = MoveEngine(sol.instance, Evaluation.NAIVE).best_move(sol, MoveKind.INSERT)
        assert fast.gain == pytest.approx(naive.gain)


class CountingList(list):
    """A list that counts element reads."""

    reads = 0

    def __getitem__(self, idx):
        CountingList.reads += 1
        return super().__getitem__(idx)


class TestConstantTime:
    """Gain evaluation reads a bounded number of elements whatever the route length."""

    @staticmethod
    def reads_for(length: int, kind: MoveKind, args) -> int:
        instance = gen_instance(2 * length, 2, seed=0)
        sol = Solution(instance, [list(range(1, length + 1)), list(range(length + 1, 2 * length))])
        engine = MoveEngine(instance)
        sol.routes = [CountingList(r) for r in sol.routes]
        sol.vsd = [CountingList(v) for v in sol.vsd]
        sol.wsd = [CountingList(w) for w in sol.wsd]
        engine.d = CountingList(CountingList(row) for row in engine.d)
        CountingList.reads = 0
        engine._fast[kind](sol, *args)
        return CountingList.reads

    @pytest.mark.parametrize(
        "kind,args",
        [
            (MoveKind.SWAP, (0, 3, 7)),
            (MoveKind.INSERT, (0, 3, 7)),
            (MoveKind.TWO_OPT, (0, 3, 7)),
            (MoveKind.OR_OPT, (0, 3, 3, 7)),
            (MoveKind.INTER_SWAP, (0, 3, 1, 5)),
            (MoveKind.INTER_INSERT, (0, 3, 1, 5)),
            (MoveKind.INTER_TWO_OPT, (0, 3, 1, 5)),
            (MoveKind.ADD, (None, 0, 5)),
            (MoveKind.DROP, (0, 5)),
        ],
    )
    def test_reads_do_not_grow(self, kind, args):
        if kind is MoveKind.ADD:
            short = self.reads_for(20, kind, (40, 0, 5))
            long = self.reads_for(400, kind, (800, 0, 5))
        else:
            short = self.reads_for(20, kind, args)
            long = self.reads_for(400, kind, args)
        assert short == long
        assert long <= 60


class TestApply:
    """Test suite for move application."""

    def test_apply_updates_caches(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        engine = MoveEngine(l3a)
        move = engine.evaluate(sol, Move(MoveKind.SWAP, route_a=0, i=1, j=2))
        engine.apply(sol, move)
        assert sol.routes == [[1, 2, 3]]
        assert sol.surrogate == pytest.approx(30)
        assert sol.vsd[0] == [0, 1, 2, 3]
        assert validate_solution(sol).ok

    @pytest.mark.parametrize(
        "forward,inverse",
        [
            (Move(MoveKind.INSERT, route_a=0, i=2, j=3), Move(MoveKind.INSERT, route_a=0, i=4, j=1)),
            (
                Move(MoveKind.INTER_INSERT, route_a=0, i=2, route_b=1, j=1),
                Move(MoveKind.INTER_INSERT, route_a=1, i=2, route_b=0, j=1),
            ),
            (Move(MoveKind.SWAP, route_a=1, i=1, j=3), Move(MoveKind.SWAP, route_a=1, i=1, j=3)),
            (Move(MoveKind.TWO_OPT, route_a=0, i=1, j=4), Move(MoveKind.TWO_OPT, route_a=0, i=1, j=4)),
            (Move(MoveKind.DROP, route_a=0, j=2), Move(MoveKind.ADD, route_a=0, j=1, v=None)),
        ],
    )
    def test_inverse_restores(self, forward, inverse):
        instance = gen_instance(9, 2, seed=3)
        sol = Solution(instance, [[1, 2, 3, 4, 5], [6, 7, 8, 9]])
        before = sol.copy()
        engine = MoveEngine(instance)
        if forward.kind is MoveKind.DROP:
            inverse = Move(MoveKind.ADD, route_a=0, j=1, v=sol.routes[0][1])
        engine.apply(sol, engine.evaluate(sol, forward))
        assert validate_solution(sol).ok
        engine.apply(sol, engine.evaluate(sol, inverse))
        assert sol.routes == before.routes
        assert sol.unvisited == before.unvisited
        for restored, original in zip(sol.vsd, before.vsd):
            assert restored == pytest.approx(original)
        assert sol.surrogate == pytest.approx(before.surrogate)

    def test_stale_move(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        engine = MoveEngine(l3a)
        stale = engine.evaluate(sol, Move(MoveKind.SWAP, route_a=0, i=1, j=2))
        engine.apply(sol, engine.evaluate(sol, Move(MoveKind.DROP, route_a=0, j=3)))
        with pytest.raises(StaleMoveError):
            engine.apply(sol, stale)

    def test_unevaluated_move_is_stale(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        with pytest.raises(StaleMoveError):
            MoveEngine(l3a).apply(sol, Move(MoveKind.SWAP, route_a=0, i=1, j=2))

    def test_apply_move_matches_rebuild(self, l3a):
        sol = Solution(l3a, [[1, 2]])
        move = MoveEngine(l3a).evaluate(sol, Move(MoveKind.ADD, route_a=0, j=2, v=3))
        apply_move(sol, move)
        assert sol.unvisited == set()
        rebuilt = rebuild_prefixes(sol.copy())
        assert sol.vsd[0] == pytest.approx(rebuilt.vsd[0])
        assert sol.wsd[0] == pytest.approx(rebuilt.wsd[0])
        assert sol.surrogate == pytest.approx(rebuilt.surrogate)

    def test_visited_counter(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        engine = MoveEngine(l3a)
        engine.best_move(sol, MoveKind.SWAP)
        assert engine.visited == 3


class TestCheckMove:
    """Test suite for illegal move positions."""

    @pytest.mark.parametrize(
        "move,message",
        [
            (Move(MoveKind.SWAP, route_a=0, i=0, j=2), "position 0 outside"),
            (Move(MoveKind.SWAP, route_a=2, i=1, j=2), "route 2 out of range"),
            (Move(MoveKind.TWO_OPT, route_a=0, i=1, j=2), "adjacent"),
            (Move(MoveKind.OR_OPT, route_a=0, i=1, h=4, j=0), "block length 4"),
            (Move(MoveKind.INTER_SWAP, route_a=0, i=1, route_b=0, j=2), "two different routes"),
            (Move(MoveKind.ADD, route_a=0, j=0, v=1), "already visited"),
            (Move(MoveKind.DROP, route_a=1, j=1), "outside"),
        ],
    )
    def test_illegal(self, l3a_two, move, message):
        sol = Solution(l3a_two, [[1, 2, 3], []])
        with pytest.raises(MoveError, match=message):
            check_move(sol, move)

    def test_gain_methods_check(self, l3a):
        sol = Solution(l3a, [[1, 2, 3]])
        with pytest.raises(MoveError):
            MoveEngine(l3a).gain_drop(sol, 0, 4)

    def test_surrogate_unchanged_by_evaluation(self, l3a):
        sol = Solution(l3a, [[2, 1, 3]])
        MoveEngine(l3a).naive_gain(sol, Move(MoveKind.SWAP, route_a=0, i=1, j=2))
        assert sol.routes == [[2, 1, 3]]
        assert objective_surrogate(sol) == 26
