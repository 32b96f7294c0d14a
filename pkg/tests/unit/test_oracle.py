import pytest

from src.errors import SizeGuardError
from src.instance import gen_instance, line_instance
from src.memetic import ehsa_solve
from src.moves import Move, MoveEngine, MoveKind
from src.oracle import MAX_EXACT_SIZE, check_gain, exact_solve
from src.solution import Solution, objective_true
from src.solver_props import SolverConfig


class TestExactSolve:
    """Test suite for the exhaustive reference solver."""

    def test_zero_profits(self):
        instance = line_instance("zero", [1, 2], [0, 0], servers=2)
        result = exact_solve(instance)
        assert result.optimum == 0
        assert result.witness.routes == [[], []]

    def test_single_customer(self):
        instance = line_instance("one", [2], [5])
        result = exact_solve(instance)
        assert result.optimum == pytest.approx(3)
        assert result.witness.routes == [[1]]

    def test_line_instance(self, l3a):
        result = exact_solve(l3a)
        assert result.optimum == pytest.approx(30)
        assert result.witness.routes == [[1, 2, 3]]
        assert result.certified()

    def test_clipped_line_instance(self, l3b):
        """Clipping makes the third customer worthless rather than harmful."""
        result = exact_solve(l3b)
        assert result.optimum == pytest.approx(27)
        assert result.certified()

    @pytest.mark.parametrize("seed", range(3))
    def test_witness_is_certified(self, seed):
        instance = gen_instance(6, 2, seed=seed)
        result = exact_solve(instance)
        assert result.certified()
        assert objective_true(result.witness) == pytest.approx(result.optimum)

    def test_more_servers_than_customers(self):
        instance = line_instance("wide", [1, 2], [10, 20], servers=4)
        result = exact_solve(instance)
        assert len(result.witness.routes) == 4
        assert result.optimum == pytest.approx(27)

    def test_size_guard(self):
        instance = gen_instance(MAX_EXACT_SIZE + 1, 2, seed=0)
        with pytest.raises(SizeGuardError, match="at most 10 customers"):
            exact_solve(instance)

    def test_to_dict(self, l3a):
        document = exact_solve(l3a).to_dict()
        assert document["instance_name"] == "L3a"
        assert document["routes"] == [[1, 2, 3]]
        assert document["unvisited"] == []

    @pytest.mark.parametrize("seed", range(3))
    def test_heuristic_never_beats_optimum(self, seed):
        instance = gen_instance(7, 2, seed=seed)
        optimum = exact_solve(instance).optimum
        report = ehsa_solve(instance, SolverConfig(t_max=5, max_generations=3, nump=4, seed=seed))
        assert report.best_true <= optimum + 1e-9 * (1 + optimum)

    def test_heuristic_reaches_optimum(self):
        """One-second runs find the exact optimum on tiny instances, at most one miss in 21."""
        misses = []
        for seed in range(21):
            n, k = 4 + seed % 4, 1 + seed % 3
            instance = gen_instance(n, k, seed=seed)
            optimum = exact_solve(instance).optimum
            report = ehsa_solve(instance, SolverConfig(t_max=1, seed=seed))
            if abs(report.best_true - optimum) > 1e-9 * (1 + abs(optimum)):
                misses.append((instance.name, report.best_true, optimum))
        assert len(misses) <= 1, misses


class TestCheckGain:
    """Test suite for the fast against naive cross-check."""

    @pytest.mark.parametrize(
        "move",
        [
            Move(MoveKind.SWAP, route_a=0, i=2, j=2),
            Move(MoveKind.INSERT, route_a=0, i=2, j=1),
            Move(MoveKind.OR_OPT, route_a=0, i=1, h=2, j=0),
        ],
    )
    def test_identity_moves(self, l3a, move):
        sol = Solution(l3a, [[2, 1, 3]])
        assert check_gain(MoveEngine(l3a), sol, move) == 0

    def test_corrupted_cache_detected(self, l3a):
        sol = Solution(l3a, [[1, 2]])
        sol.vsd[0][2] += 5
        move = Move(MoveKind.ADD, route_a=0, j=2, v=3)
        assert check_gain(MoveEngine(l3a), sol, move) == pytest.approx(5)
