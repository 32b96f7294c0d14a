from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, Mapping, Optional


class Mode(str, Enum):
    """Main-loop variant: arc-based crossover, no crossover, or route-based crossover."""

    EHSA = "ehsa"
    ILS = "ils"
    EHSA_RBX = "ehsa-rbx"


class Evaluation(str, Enum):
    """How move gains are computed: constant-time formulas or clone-and-recompute."""

    FAST = "fast"
    NAIVE = "naive"


class Improvement(str, Enum):
    """Move acceptance inside one local search sweep."""

    BEST = "best"
    FIRST = "first"


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# context key -> dataclass field
CONTEXT_KEYS = {
    "LIMI": "limi",
    "ST": "st",
    "NUMP": "nump",
    "Q": "q",
    "MODE": "mode",
    "EVAL": "eval",
    "IMPROVEMENT": "improvement",
    "TIME_LIMIT": "t_max",
    "TIME_LIMIT_FACTOR": "time_limit_factor",
    "MAX_GENERATIONS": "max_generations",
    "RUNS": "runs",
    "SEED": "seed",
    "LOG_LEVEL": "log_level",
}


@dataclass(frozen=True)
class SolverConfig:
    """
    Holds onto the parameters of one solver run.

    Attributes:
      limi: Consecutive non-improving VNS+perturbation rounds before the inner loop ends.
      st: Number of random intra-route relocations performed by the perturbation.
      nump: Population size.
      q: Candidate list width of the greedy construction.
      t_max: Wall-clock budget in seconds, None for `time_limit_factor` seconds per customer.
      seed: Seed of the run's random generator.
      mode: Main-loop variant.
      eval: Gain evaluation strategy.
      improvement: Best- or first-improvement local search.
      max_generations: Optional cap on main-loop generations.
      time_limit_factor: Seconds per customer when `t_max` is None.
      runs: Independent runs per instance.
      log_level: Logging level name.
    """

    limi: int = 2
    """Consecutive non-improving VNS+perturbation rounds before the inner loop ends."""

    st: int = 11
    """Number of random intra-route relocations performed by the perturbation."""

    nump: int = 10
    """Population size."""

    q: int = 3
    """Candidate list width of the greedy construction."""

    t_max: Optional[float] = None
    """Wall-clock budget in seconds."""

    seed: int = 0
    mode: Mode = Mode.EHSA
    eval: Evaluation = Evaluation.FAST
    improvement: Improvement = Improvement.BEST
    max_generations: Optional[int] = None
    time_limit_factor: float = 2.0
    runs: int = 1
    log_level: str = "INFO"

    def __post_init__(self):
        # coerce plain strings coming from YAML or argparse
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "eval", Evaluation(self.eval))
        object.__setattr__(self, "improvement", Improvement(self.improvement))
        object.__setattr__(self, "log_level", str(self.log_level).upper())

        if self.limi < 1:
            raise ValueError(f"limi must be >= 1, got {self.limi}")
        if self.st < 0:
            raise ValueError(f"st must be >= 0, got {self.st}")
        if self.nump < 2:
            raise ValueError(f"nump must be >= 2, got {self.nump}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.time_limit_factor <= 0:
            raise ValueError(
                f"time_limit_factor must be > 0, got {self.time_limit_factor}"
            )
        if self.max_generations is not None and self.max_generations < 1:
            raise ValueError(
                f"max_generations must be >= 1, got {self.max_generations}"
            )
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.log_level not in LOG_LEVELS:
            raise ValueError(
                f"log_level must be one of {', '.join(LOG_LEVELS)}, got {self.log_level}"
            )

    @classmethod
    def from_context(
        cls, context: Mapping[str, Any], **overrides: Any
    ) -> "SolverConfig":
        """
        Build a config from a merged context mapping (see `load_context_config`).

        Keyword overrides use field names and win over context values; None is ignored.
        """
        values = {}
        for key, value in context.items():
            if key in CONTEXT_KEYS:
                values[CONTEXT_KEYS[key]] = value
        known = {f.name for f in fields(cls)}
        for name, value in overrides.items():
            if name not in known:
                raise ValueError(f"Unknown solver option '{name}'")
            if value is not None:
                values[name] = value
        return cls(**values)

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, seed=seed)

    def budget_for(self, n: int) -> float:
        """Seconds allotted to a run on an instance with `n` customers."""
        if self.t_max is not None:
            return float(self.t_max)
        return self.time_limit_factor * n
