"""
Experiment harness: repeated runs, benchmark suites, ablations and similarity analysis.
"""

import csv
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np
import yaml

from src.instance import Instance, load_instance
from src.memetic import RunReport, ehsa_solve
from src.solution import arc_set, pairwise_similarities, solution_from_document
from src.solver_props import Evaluation, Mode, SolverConfig

logger = logging.getLogger(__name__)

THREADS_ENV = "MTRPP_THREADS"
MATCH_TOLERANCE = 1e-6

BENCH_COLUMNS = [
    "instance",
    "n",
    "servers",
    "runs",
    "best",
    "best_true",
    "average",
    "tavg",
    "visited",
    "discrepancies",
    "best_known",
    "ub",
    "delta_pct",
    "outcome",
    "error",
]

ABLATION_VARIANTS = (
    (Mode.EHSA, Evaluation.FAST),
    (Mode.EHSA, Evaluation.NAIVE),
    (Mode.ILS, Evaluation.FAST),
    (Mode.EHSA_RBX, Evaluation.FAST),
)

ABLATION_COLUMNS = [
    "instance",
    "n",
    "servers",
    "mode",
    "eval",
    "runs",
    "best",
    "average",
    "tavg",
    "visited",
    "fast_naive_ratio",
]


def thread_count() -> int:
    """Worker processes allowed by MTRPP_THREADS; 0 or unset means sequential."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got '{raw}'")
    return max(value, 0)


def _map(fn: Callable, items: Sequence, threads: int) -> List:
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(fn, items))
    return [fn(item) for item in items]


def derive_seeds(seed: int, runs: int) -> List[int]:
    """Independent per-run seeds, a pure function of (seed, runs)."""
    return [
        int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(runs)
    ]


def _solve_one(job) -> RunReport:
    instance, cfg = job
    return ehsa_solve(instance, cfg)


def solve_runs(
    instance: Instance, cfg: SolverConfig, runs: int = None, threads: int = 0
) -> List[RunReport]:
    runs = runs or cfg.runs
    jobs = [(instance, cfg.with_seed(s)) for s in derive_seeds(cfg.seed, runs)]
    return _map(_solve_one, jobs, threads)


@dataclass
class Aggregate:
    """
    Summary of repeated runs on one instance. `best` and `average` use the
    surrogate objective; `best_true` is the best clipped objective and
    `discrepancies` counts runs whose best solution kept a negative revenue.
    """

    instance_name: str
    runs: int
    best: float
    average: float
    tavg: float
    visited: float
    t_max: float
    best_true: float
    discrepancies: int

    @classmethod
    def from_reports(cls, reports: Sequence[RunReport]) -> "Aggregate":
        scores = [r.best_surrogate for r in reports]
        return cls(
            instance_name=reports[0].instance_name,
            runs=len(reports),
            best=max(scores),
            average=statistics.fmean(scores),
            tavg=statistics.fmean(r.time_to_best for r in reports),
            visited=statistics.fmean(r.visited for r in reports),
            t_max=reports[0].t_max,
            best_true=max(r.best_true for r in reports),
            discrepancies=sum(1 for r in reports if r.discrepancy),
        )

    def to_dict(self) -> dict:
        return {
            "instance_name": self.instance_name,
            "runs": self.runs,
            "best": self.best,
            "average": self.average,
            "tavg": round(self.tavg, 3),
            "visited": self.visited,
            "t_max": self.t_max,
            "best_true": self.best_true,
            "discrepancies": self.discrepancies,
        }


def classify(best: float, best_known: float) -> str:
    """win / match / fail of a best objective against a literature value (maximization)."""
    if abs(best - best_known) <= MATCH_TOLERANCE * (1 + abs(best_known)):
        return "match"
    return "win" if best > best_known else "fail"


def improvement(best: float, best_known: float) -> Optional[float]:
    """(best - best_known) / best_known, None when undefined."""
    if not best_known:
        return None
    return (best - best_known) / best_known


@dataclass
class BenchEntry:
    """
    One manifest line.

    Attributes:
      instance: Path of the instance file.
      runs: Independent runs, None for the config value.
      time_limit: Per-run budget override in seconds.
      ub: Literature upper bound, reporting only.
      best_known: Best-known objective used for delta and win/match/fail.
    """

    instance: str
    runs: Optional[int] = None
    time_limit: Optional[float] = None
    ub: Optional[float] = None
    best_known: Optional[float] = None


@dataclass
class BenchManifest:
    entries: List[BenchEntry] = field(default_factory=list)
    output: Optional[str] = None


def load_manifest(path: Union[str, Path]) -> BenchManifest:
    """
    Read a YAML manifest::

        output: results/bench.csv
        entries:
          - instance: instances/a.txt
            runs: 10
            best_known: 2114.0
    """
    path = Path(path)
    with open(path, "r") as f:
        raw = yaml.safe_load(f) or {}
    entries = []
    for idx, item in enumerate(raw.get("entries") or []):
        if isinstance(item, str):
            item = {"instance": item}
        try:
            entry = BenchEntry(**item)
        except TypeError as e:
            raise ValueError(f"{path}: entry {idx}: {e}")
        # instance paths are relative to the manifest
        instance_path = Path(entry.instance)
        if not instance_path.is_absolute():
            instance_path = path.parent / instance_path
        entry.instance = str(instance_path)
        entries.append(entry)
    return BenchManifest(entries=entries, output=raw.get("output"))


def check_manifest(manifest: BenchManifest) -> None:
    missing = [e.instance for e in manifest.entries if not Path(e.instance).exists()]
    if missing:
        raise FileNotFoundError(f"manifest references missing instances: {missing}")


def _bench_entry(job) -> dict:
    entry, cfg = job
    row = {key: "" for key in BENCH_COLUMNS}
    row["instance"] = entry.instance
    row["best_known"] = entry.best_known
    row["ub"] = entry.ub
    try:
        instance = load_instance(entry.instance)
        if entry.time_limit is not None:
            cfg = replace(cfg, t_max=entry.time_limit)
        reports = solve_runs(instance, cfg, runs=entry.runs)
        agg = Aggregate.from_reports(reports)
    except Exception as e:
        logger.warning("bench entry %s failed: %s", entry.instance, e)
        row["error"] = f"{type(e).__name__}: {e}"
        return row
    row.update(
        instance=instance.name,
        n=instance.n,
        servers=instance.servers,
        runs=agg.runs,
        best=agg.best,
        best_true=agg.best_true,
        average=agg.average,
        tavg=agg.tavg,
        visited=agg.visited,
        discrepancies=agg.discrepancies,
    )
    if row["ub"] is None:
        row["ub"] = instance.ub
    if entry.best_known is not None:
        # literature values score the clipped objective
        delta = improvement(agg.best_true, entry.best_known)
        row["delta_pct"] = None if delta is None else 100.0 * delta
        row["outcome"] = classify(agg.best_true, entry.best_known)
    return row


def run_bench(manifest: BenchManifest, cfg: SolverConfig, threads: int = 0) -> List[dict]:
    """One row per manifest entry; a failing entry yields a row with `error` set."""
    check_manifest(manifest)
    return _map(_bench_entry, [(entry, cfg) for entry in manifest.entries], threads)


def _ablation_instance(job) -> List[dict]:
    instance, cfg, runs = job
    rows = []
    visited = {}
    for mode, evaluation in ABLATION_VARIANTS:
        variant = replace(cfg, mode=mode, eval=evaluation)
        agg = Aggregate.from_reports(solve_runs(instance, variant, runs=runs))
        visited[(mode, evaluation)] = agg.visited
        rows.append(
            {
                "instance": instance.name,
                "n": instance.n,
                "servers": instance.servers,
                "mode": mode.value,
                "eval": evaluation.value,
                "runs": agg.runs,
                "best": agg.best,
                "average": agg.average,
                "tavg": agg.tavg,
                "visited": agg.visited,
            }
        )
    naive = visited[(Mode.EHSA, Evaluation.NAIVE)]
    ratio = visited[(Mode.EHSA, Evaluation.FAST)] / naive if naive else None
    for row in rows:
        row["fast_naive_ratio"] = ratio
    return rows


def run_ablation(
    instances: Sequence[Instance], cfg: SolverConfig, runs: int = None, threads: int = 0
) -> List[dict]:
    """Every ablation variant on every instance with the same seeds and budget."""
    jobs = [(instance, cfg, runs or cfg.runs) for instance in instances]
    return [row for rows in _map(_ablation_instance, jobs, threads) for row in rows]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(rows: Iterable[dict], columns: Sequence[str], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})


@dataclass
class SimilarityReport:
    instance_name: str
    solutions: int
    pairs: int
    sim_max: float
    sim_min: float
    sim_avg: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def similarity_report(instance: Instance, documents: Sequence[dict]) -> SimilarityReport:
    """Max, min and mean arc similarity over all pairs of the given solutions."""
    if len(documents) < 2:
        raise ValueError(f"similarity needs at least 2 solutions, got {len(documents)}")
    names = {doc["instance_name"] for doc in documents}
    if names != {instance.name}:
        raise ValueError(f"solutions belong to different instances: {sorted(names)}")
    arc_sets = []
    for doc in documents:
        sol, verdict = solution_from_document(instance, doc)
        if not verdict.ok:
            raise ValueError(f"invalid solution: {verdict}")
        arc_sets.append(arc_set(sol))
    sims = pairwise_similarities(arc_sets)
    return SimilarityReport(
        instance_name=instance.name,
        solutions=len(documents),
        pairs=len(sims),
        sim_max=max(sims),
        sim_min=min(sims),
        sim_avg=statistics.fmean(sims),
    )
