import pytest

from src.instance import line_instance

L3A_PROFITS = (10, 20, 6)
L3B_PROFITS = (10, 20, 2)


@pytest.fixture
def l3a():
    """Customers 1, 2, 3 at coordinates 1, 2, 3 on a line, one server."""
    return line_instance("L3a", [1, 2, 3], L3A_PROFITS)


@pytest.fixture
def l3a_two():
    """L3a geometry with two servers."""
    return line_instance("L3a", [1, 2, 3], L3A_PROFITS, servers=2)


@pytest.fixture
def l3b():
    return line_instance("L3b", [1, 2, 3], L3B_PROFITS)
