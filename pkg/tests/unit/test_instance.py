import math
import pytest
import tempfile
from pathlib import Path

import numpy as np

from src.errors import InstanceFormatError, InstanceValidationError
from src.instance import (
    check_metric,
    format_instance,
    gen_instance,
    load_instance,
    parse_instance,
    profit_bounds,
    save_instance,
)

LINE_COORD = """\
MTRPP 1
NAME line3
SIZE 3
SERVERS 1
PROFITS 10 20 6
EDGE COORD
0 0 0
1 1 0
2 2 0
3 3 0
"""

MATRIX_TEMPLATE = """\
MTRPP 1
NAME m2
SIZE 2
SERVERS {servers}
PROFITS 5 5
EDGE MATRIX
0 1 2
1 0 {d12}
2 {d21} 0
"""


class TestParseInstance:
    """Test suite for the canonical instance format."""

    def test_coord_file(self):
        instance = parse_instance(LINE_COORD)
        assert instance.name == "line3"
        assert instance.n == 3
        assert instance.servers == 1
        assert instance.profits == (10.0, 20.0, 6.0)
        assert instance.distances[0, 3] == 3.0
        assert instance.metric

    def test_comments_and_blank_lines_are_ignored(self):
        text = "# header comment\n\n" + LINE_COORD.replace("SIZE 3", "SIZE 3  # customers")
        assert parse_instance(text).n == 3

    def test_matrix_file(self):
        instance = parse_instance(MATRIX_TEMPLATE.format(servers=2, d12=1.5, d21=1.5))
        assert instance.coords is None
        assert instance.distances[1, 2] == 1.5
        assert instance.servers == 2

    def test_asymmetric_matrix_raises(self):
        """Test that d(1,2) != d(2,1) is rejected."""
        with pytest.raises(InstanceValidationError, match="asymmetric"):
            parse_instance(MATRIX_TEMPLATE.format(servers=1, d12=1.5, d21=2.5))

    def test_zero_servers_raises(self):
        with pytest.raises(InstanceValidationError, match="servers must be >= 1"):
            parse_instance(MATRIX_TEMPLATE.format(servers=0, d12=1, d21=1))

    def test_negative_profit_raises(self):
        with pytest.raises(InstanceValidationError, match="negative profit"):
            parse_instance(LINE_COORD.replace("PROFITS 10 20 6", "PROFITS 10 -20 6"))

    def test_bad_number_reports_line(self):
        """Test that format errors carry the 1-based line number."""
        with pytest.raises(InstanceFormatError, match="line 5: expected a real number") as e:
            parse_instance(LINE_COORD.replace("PROFITS 10 20 6", "PROFITS 10 x 6"))
        assert e.value.line == 5

    @pytest.mark.parametrize(
        "old,new,message",
        [
            ("MTRPP 1", "MTRPP 2", "unsupported format version"),
            ("PROFITS 10 20 6", "PROFITS 10 20", "PROFITS needs 3 values"),
            ("EDGE COORD", "EDGE POLAR", "EDGE must be COORD or MATRIX"),
            ("3 3 0\n", "", "needs 4 lines"),
            ("1 1 0", "5 1 0", "expected node id 1"),
        ],
    )
    def test_format_errors(self, old, new, message):
        with pytest.raises(InstanceFormatError, match=message):
            parse_instance(LINE_COORD.replace(old, new))

    def test_missing_record(self):
        text = LINE_COORD.replace("SERVERS 1\n", "")
        with pytest.raises(InstanceFormatError, match="missing SERVERS record"):
            parse_instance(text)

    def test_save_and_load(self):
        """Test that a generated instance survives a write and a read unchanged."""
        instance = gen_instance(8, 2, seed=5)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "gen.txt"
            save_instance(instance, path)
            loaded = load_instance(path)
        assert loaded.name == instance.name
        assert loaded.profits == instance.profits
        assert np.array_equal(loaded.distances, instance.distances)

    def test_matrix_written_without_coords(self):
        instance = parse_instance(MATRIX_TEMPLATE.format(servers=1, d12=1.5, d21=1.5))
        assert "EDGE MATRIX" in format_instance(instance)

    def test_instance_is_read_only(self):
        instance = parse_instance(LINE_COORD)
        with pytest.raises(ValueError):
            instance.distances[0, 1] = 9.0

    def test_evaluation_tables_are_read_only(self):
        instance = parse_instance(LINE_COORD)
        assert instance.dist[1][2] == 1.0
        assert instance.prize == (0.0, 10.0, 20.0, 6.0)
        with pytest.raises(TypeError):
            instance.dist[0][1] = 9.0
        with pytest.raises(TypeError):
            instance.prize[1] = 0.0


class TestGenInstance:
    """Test suite for random instance generation."""

    def test_deterministic(self):
        a = gen_instance(50, 2, coord_range=100, seed=7)
        b = gen_instance(50, 2, coord_range=100, seed=7)
        assert format_instance(a) == format_instance(b)

    def test_seed_changes_instance(self):
        assert format_instance(gen_instance(20, 2, seed=1)) != format_instance(
            gen_instance(20, 2, seed=2)
        )

    @pytest.mark.parametrize("n,k,seed", [(50, 2, 7), (30, 5, 3), (10, 1, 0)])
    def test_profit_lower_bound(self, n, k, seed):
        """Test that every profit covers the direct trip from the depot."""
        instance = gen_instance(n, k, seed=seed)
        for customer in instance.customers:
            assert instance.profit(customer) >= math.ceil(instance.distances[0, customer])

    def test_profit_upper_bound(self):
        """Test the shared upper bound against a direct recomputation of the mean edge."""
        instance = gen_instance(200, 4, coord_range=100, seed=1)
        d = instance.distances
        total = sum(d[i, j] for i in range(201) for j in range(i + 1, 201))
        upper = math.ceil((200 / 4) * total / (201 * 200 / 2))
        for customer in instance.customers:
            if customer not in instance.clamped:
                assert instance.profit(customer) <= upper
        assert instance.metric

    def test_profits_are_integers(self):
        instance = gen_instance(20, 2, seed=4)
        assert all(p == int(p) for p in instance.profits)

    def test_inverted_bounds_are_clamped(self):
        """Test that a large fleet on few customers clamps profits to the lower bound."""
        instance = gen_instance(2, 1000, seed=0)
        lower, upper = profit_bounds(instance.distances, 2, 1000)
        assert upper < lower.max()
        assert instance.clamped
        for customer in instance.clamped:
            assert instance.profit(customer) == lower[customer - 1]

    @pytest.mark.parametrize(
        "kwargs,message",
        [
            ({"n": 0, "k": 1}, "n must be >= 1"),
            ({"n": 5, "k": 0}, "k must be >= 1"),
            ({"n": 5, "k": 1, "coord_range": 0}, "coord_range must be > 0"),
        ],
    )
    def test_invalid_arguments(self, kwargs, message):
        with pytest.raises(ValueError, match=message):
            gen_instance(**kwargs)


class TestCheckMetric:
    """Test suite for the triangle inequality check."""

    def test_euclidean_is_metric(self):
        assert check_metric(gen_instance(15, 2, seed=2).distances)

    def test_shortcut_violation(self):
        d = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
        assert not check_metric(d)

    def test_sampled_check_on_large_matrix(self):
        d = gen_instance(40, 2, seed=9).distances
        assert check_metric(d, samples=500)

    def test_parsed_instance_records_metric_flag(self):
        instance = parse_instance(MATRIX_TEMPLATE.format(servers=1, d12=0.5, d21=0.5))
        assert not instance.metric
