"""
MTRPP instances: data model, canonical text format and random generation.

Canonical format, one record per line, `#` starts a comment::

    MTRPP 1
    NAME <name>
    SIZE <n>
    SERVERS <K>
    UB <real>                  (optional)
    PROFITS <p_1 ... p_n>
    EDGE COORD|MATRIX
    <n+1 lines "id x y", depot first>  or  <n+1 rows of n+1 reals>
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import InstanceFormatError, InstanceValidationError

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"
METRIC_SAMPLES = 10_000
METRIC_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Instance:
    """
    Immutable problem data. Index 0 of `distances` and `coords` is the depot,
    customer `i` has profit `profits[i - 1]`.
    """

    name: str
    servers: int
    profits: Tuple[float, ...]
    distances: np.ndarray
    coords: Optional[np.ndarray] = None
    ub: Optional[float] = None
    metric: bool = False
    clamped: Tuple[int, ...] = ()
    """Customers whose generated profit bounds were inverted and clamped to the lower bound."""

    dist: Tuple[Tuple[float, ...], ...] = field(init=False, repr=False)
    prize: Tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        distances = np.array(self.distances, dtype=np.float64)
        distances.setflags(write=False)
        object.__setattr__(self, "distances", distances)
        object.__setattr__(self, "profits", tuple(float(p) for p in self.profits))
        if self.coords is not None:
            coords = np.array(self.coords, dtype=np.float64)
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)
        validate_instance(self)
        # plain tuples for the evaluation hot paths
        object.__setattr__(self, "dist", tuple(map(tuple, distances.tolist())))
        object.__setattr__(self, "prize", (0.0, *self.profits))

    @property
    def n(self) -> int:
        return len(self.profits)

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def profit(self, customer: int) -> float:
        return self.prize[customer]


def euclidean_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def validate_instance(instance: Instance) -> None:
    """Raise InstanceValidationError naming the first violated invariant."""
    n = len(instance.profits)
    d = instance.distances
    if instance.servers < 1:
        raise InstanceValidationError(
            f"servers must be >= 1, got {instance.servers}"
        )
    if d.shape != (n + 1, n + 1):
        raise InstanceValidationError(
            f"distance matrix must be {n + 1}x{n + 1}, got {d.shape[0]}x{d.shape[1]}"
        )
    if not np.all(np.isfinite(d)):
        raise InstanceValidationError("distance matrix contains non-finite values")
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise InstanceValidationError(f"negative distance d({i},{j}) = {d[i, j]}")
    if np.any(np.diag(d) != 0):
        i = int(np.flatnonzero(np.diag(d) != 0)[0])
        raise InstanceValidationError(f"nonzero diagonal d({i},{i}) = {d[i, i]}")
    asym = np.argwhere(d != d.T)
    if len(asym):
        i, j = asym[0]
        raise InstanceValidationError(
            f"asymmetric distances d({i},{j}) = {d[i, j]} != d({j},{i}) = {d[j, i]}"
        )
    for idx, p in enumerate(instance.profits, start=1):
        if p < 0 or not math.isfinite(p):
            raise InstanceValidationError(f"negative profit p_{idx} = {p}")
    if instance.coords is not None:
        if instance.coords.shape != (n + 1, 2):
            raise InstanceValidationError(
                f"coords must hold {n + 1} planar points, got shape {instance.coords.shape}"
            )
        if not np.array_equal(euclidean_matrix(instance.coords), d):
            raise InstanceValidationError(
                "distances disagree with the Euclidean distances of coords"
            )


def check_metric(
    distances: np.ndarray, samples: int = METRIC_SAMPLES, seed: int = 0
) -> bool:
    """
    True when d(a,c) <= d(a,b) + d(b,c) holds on the checked triples: every triple
    when there are at most `samples` of them, else `samples` random ones.
    """
    size = distances.shape[0]
    if size < 3:
        return True
    if size**3 <= samples:
        lhs = distances[:, None, :]
        rhs = distances[:, :, None] + distances[None, :, :]
        return bool(np.all(lhs <= rhs + METRIC_TOLERANCE))
    rng = np.random.default_rng(seed)
    a, b, c = rng.integers(0, size, size=(3, samples))
    return bool(
        np.all(distances[a, c] <= distances[a, b] + distances[b, c] + METRIC_TOLERANCE)
    )


def _records(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _real(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f"expected a real number, got '{token}'", line)


def _count(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"expected an integer, got '{token}'", line)


def parse_instance(text: str) -> Instance:
    """Parse the canonical text format; see the module docstring."""
    records = list(_records(text))
    header = {}
    body_start = None
    edge = None
    for idx, (line, tokens) in enumerate(records):
        key = tokens[0].upper()
        if key == "EDGE":
            if len(tokens) != 2 or tokens[1].upper() not in ("COORD", "MATRIX"):
                raise InstanceFormatError("EDGE must be COORD or MATRIX", line)
            edge = tokens[1].upper()
            body_start = idx + 1
            break
        if key in header:
            raise InstanceFormatError(f"duplicate {key} record", line)
        header[key] = (line, tokens[1:])

    for key in ("MTRPP", "SIZE", "SERVERS", "PROFITS"):
        if key not in header:
            raise InstanceFormatError(f"missing {key} record")
    if edge is None:
        raise InstanceFormatError("missing EDGE record")

    line, version = header["MTRPP"]
    if version != [FORMAT_VERSION]:
        raise InstanceFormatError(f"unsupported format version {' '.join(version)}", line)
    line, tokens = header["SIZE"]
    n = _count(tokens[0], line) if tokens else None
    if n is None or n < 0:
        raise InstanceFormatError("SIZE must be a non-negative integer", line)
    line, tokens = header["SERVERS"]
    if len(tokens) != 1:
        raise InstanceFormatError("SERVERS takes one value", line)
    servers = _count(tokens[0], line)
    line, tokens = header["PROFITS"]
    if len(tokens) != n:
        raise InstanceFormatError(f"PROFITS needs {n} values, got {len(tokens)}", line)
    profits = [_real(t, line) for t in tokens]
    name = " ".join(header["NAME"][1]) if "NAME" in header else "unnamed"
    ub = None
    if "UB" in header:
        line, tokens = header["UB"]
        ub = _real(tokens[0], line) if tokens else None

    body = records[body_start:]
    if len(body) < n + 1:
        raise InstanceFormatError(
            f"EDGE {edge} needs {n + 1} lines, got {len(body)}"
        )
    if len(body) > n + 1:
        raise InstanceFormatError("unexpected trailing records", body[n + 1][0])

    coords = None
    if edge == "COORD":
        coords = np.zeros((n + 1, 2))
        for expected, (line, tokens) in enumerate(body):
            if len(tokens) != 3:
                raise InstanceFormatError("COORD lines are 'id x y'", line)
            if _count(tokens[0], line) != expected:
                raise InstanceFormatError(f"expected node id {expected}", line)
            coords[expected] = (_real(tokens[1], line), _real(tokens[2], line))
        distances = euclidean_matrix(coords)
    else:
        distances = np.zeros((n + 1, n + 1))
        for row, (line, tokens) in enumerate(body):
            if len(tokens) != n + 1:
                raise InstanceFormatError(
                    f"MATRIX rows need {n + 1} values, got {len(tokens)}", line
                )
            distances[row] = [_real(t, line) for t in tokens]

    metric = check_metric(distances)
    return Instance(
        name=name,
        servers=servers,
        profits=tuple(profits),
        distances=distances,
        coords=coords,
        ub=ub,
        metric=metric,
    )


def load_instance(path: Union[str, Path]) -> Instance:
    """Read and validate an instance file."""
    path = Path(path)
    instance = parse_instance(path.read_text())
    logger.debug(
        "loaded %s: n=%d K=%d metric=%s", instance.name, instance.n, instance.servers, instance.metric
    )
    return instance


def _fmt(value: float) -> str:
    return repr(float(value))


def format_instance(instance: Instance) -> str:
    lines = [
        f"MTRPP {FORMAT_VERSION}",
        f"NAME {instance.name}",
        f"SIZE {instance.n}",
        f"SERVERS {instance.servers}",
    ]
    if instance.ub is not None:
        lines.append(f"UB {_fmt(instance.ub)}")
    lines.append("PROFITS " + " ".join(_fmt(p) for p in instance.profits))
    if instance.coords is not None:
        lines.append("EDGE COORD")
        for idx, (x, y) in enumerate(instance.coords):
            lines.append(f"{idx} {_fmt(x)} {_fmt(y)}")
    else:
        lines.append("EDGE MATRIX")
        for row in instance.distances:
            lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(format_instance(instance))


def profit_bounds(distances: np.ndarray, n: int, k: int) -> Tuple[np.ndarray, int]:
    """Per-customer lower bounds ceil(d(0,i)) and the shared upper bound."""
    lower = np.ceil(distances[0, 1:]).astype(np.int64)
    if n == 0:
        return lower, 0
    mean = distances[np.triu_indices(n + 1, k=1)].mean()
    upper = int(math.ceil((n / k) * mean))
    return lower, upper


def gen_instance(
    n: int, k: int, coord_range: float = 100.0, seed: int = 0, name: str = None
) -> Instance:
    """
    Random Euclidean instance with the depot and n customers uniform in
    [0, coord_range]^2 and integer profits uniform in [ceil(d(0,i)), ub], where
    ub = ceil((n/k) * mean edge length). A pure function of its arguments.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if coord_range <= 0:
        raise ValueError(f"coord_range must be > 0, got {coord_range}")

    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, coord_range, size=(n + 1, 2))
    distances = euclidean_matrix(coords)
    lower, upper = profit_bounds(distances, n, k)

    profits = []
    clamped = []
    for customer, low in enumerate(lower, start=1):
        if low > upper:
            profits.append(float(low))
            clamped.append(customer)
        else:
            profits.append(float(rng.integers(low, upper, endpoint=True)))
    if clamped:
        logger.warning(
            "profit bounds inverted for %d customers, clamped to lower bound", len(clamped)
        )

    return Instance(
        name=name or f"gen-n{n}-k{k}-s{seed}",
        servers=k,
        profits=tuple(profits),
        distances=distances,
        coords=coords,
        metric=check_metric(distances),
        clamped=tuple(clamped),
    )


def line_instance(
    name: str, positions: Sequence[float], profits: Sequence[float], servers: int = 1
) -> Instance:
    """Customers on a line, depot at coordinate 0."""
    coords = np.array([[0.0, 0.0], *[[float(x), 0.0] for x in positions]])
    return Instance(
        name=name,
        servers=servers,
        profits=tuple(profits),
        distances=euclidean_matrix(coords),
        coords=coords,
        metric=True,
    )
