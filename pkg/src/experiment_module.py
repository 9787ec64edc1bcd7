"""
Randomized tightness experiment: sample balanced hypergraphs, compare d_T
with the minimized matching bound, aggregate discrepancies, and search for
surplus-3 hypergraphs of degree 0.
"""

import csv
import io
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Iterator, Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, model_validator

from src import __version__
from src.degree_algo import DegreeTimeoutError, cross_ratio_degree, degree_with_choice
from src.hypergraph_module import (
    Hypergraph,
    all_hypergraphs,
    edges_from_plain_list,
    edges_to_plain_list,
    random_hypergraph,
)
from src.matching_module import min_matching_bound, surplus

logger = logging.getLogger(__name__)

# ---------------- Configuration ----------------
SCRIPT_DIR = Path(__file__).resolve().parent
CONFIG_PATH = SCRIPT_DIR.parent / "config" / "experiment_configuration.json"
THREADS_ENV = "XRATIO_THREADS"

CSV_HEADER = ["counter", "instance_seed", "n", "edges", "degree", "min_bound",
              "delta", "surplus", "degree_micros", "bound_micros"]

# SplitMix64 constants
MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB

SEARCH_ATTEMPTS_PER_SAMPLE = 200


class TheoremViolationError(AssertionError):
    """Raised when a sampled instance breaks the matching bound or the surplus criterion"""
    pass


class ChoiceDisagreementError(TheoremViolationError):
    """Raised when a degree-0 hit does not survive the recheck under another pivot"""
    pass


class AttemptsExhaustedError(RuntimeError):
    """Raised when max_attempts runs out before enough samples are accepted"""

    def __init__(self, message, records, summary):
        super().__init__(message)
        self.records = records
        self.summary = summary


class ExperimentConfig(BaseModel):
    """Validated experiment parameters"""
    n: int = Field(10, ge=5)
    samples: int = Field(300, ge=1)
    seed: int = Field(1, ge=0, le=MASK64)
    filter: Literal["bound_positive", "none"] = "bound_positive"
    max_attempts: int = 100_000
    parallelism: int = Field(1, ge=1)
    timeout: float = Field(60.0, gt=0)
    histogram: Literal["text", "svg", "png"] | None = None
    timings: bool = True

    @model_validator(mode="after")
    def _attempts_cover_samples(self):
        if self.max_attempts < self.samples:
            raise ValueError(f"max_attempts ({self.max_attempts}) must be >= samples ({self.samples})")
        return self


def load_experiment_config(path: Path | str = CONFIG_PATH, **overrides) -> ExperimentConfig:
    """
    Load defaults from JSON, apply non-None overrides, then let
    XRATIO_THREADS (environment or .env) set the worker count.
    """
    data = {}
    path = Path(path)
    if path.exists():
        with path.open("r") as f:
            data = json.load(f)
    data.update({k: v for k, v in overrides.items() if v is not None})

    load_dotenv()
    threads = os.getenv(THREADS_ENV)
    if threads and overrides.get("parallelism") is None:
        data["parallelism"] = int(threads)
    return ExperimentConfig(**data)


def mix_seed(seed: int, counter: int) -> int:
    """SplitMix64 finalizer of seed + (counter + 1) * golden gamma"""
    z = (seed + (counter + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ExperimentRecord:
    """One sampled hypergraph; degree and delta are None when the degree timed out"""
    counter: int
    instance_seed: int
    n: int
    edges: str
    degree: int | None
    min_bound: int
    delta: int | None
    surplus: int
    degree_micros: int
    bound_micros: int

    @property
    def skipped(self) -> bool:
        return self.degree is None

    @property
    def hypergraph(self) -> Hypergraph:
        return edges_from_plain_list(self.n, self.edges)

    def to_row(self) -> list:
        return ["" if v is None else v for v in asdict(self).values()]

    @classmethod
    def from_row(cls, row: dict) -> "ExperimentRecord":
        def opt(value):
            return None if value == "" else int(value)
        return cls(
            counter=int(row["counter"]),
            instance_seed=int(row["instance_seed"]),
            n=int(row["n"]),
            edges=row["edges"],
            degree=opt(row["degree"]),
            min_bound=int(row["min_bound"]),
            delta=opt(row["delta"]),
            surplus=int(row["surplus"]),
            degree_micros=int(row["degree_micros"]),
            bound_micros=int(row["bound_micros"]),
        )


@dataclass(frozen=True)
class ExperimentSummary:
    accepted: int
    tight_fraction: float
    mean_degree: float
    delta_histogram: dict[int, int]
    wall_time: float
    attempts: int = 0
    skipped: int = 0
    acceptance_rate: float = 0.0
    mean_min_bound: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        data = asdict(self)
        data["delta_histogram"] = {str(k): v for k, v in sorted(self.delta_histogram.items())}
        data["version"] = __version__
        return data


@dataclass(frozen=True)
class Counterexample:
    """Surplus-3 hypergraph whose degree is 0"""
    counter: int
    instance_seed: int
    hypergraph: Hypergraph

    def to_dict(self) -> dict:
        return {"counter": self.counter, "instance_seed": self.instance_seed,
                "n": self.hypergraph.n, "edges": [list(e) for e in self.hypergraph.edges]}


# ---------------- Single instance ----------------

@dataclass(frozen=True)
class _Outcome:
    counter: int
    status: Literal["accepted", "rejected", "timeout"]
    record: ExperimentRecord | None


def _evaluate(task: tuple[int, int, int, str, float, bool]) -> _Outcome:
    n, seed, counter, filter_mode, timeout, timings = task
    instance_seed = mix_seed(seed, counter)
    h = random_hypergraph(n, instance_seed)

    start = time.perf_counter()
    report = min_matching_bound(h)
    bound_micros = int((time.perf_counter() - start) * 1e6)
    if filter_mode == "bound_positive" and report.min_bound == 0:
        return _Outcome(counter, "rejected", None)

    if (report.min_bound > 0) != (report.surplus == 3):
        raise TheoremViolationError(
            f"Surplus criterion fails on counter {counter}: min bound {report.min_bound}, "
            f"surplus {report.surplus}, {h}")

    start = time.perf_counter()
    try:
        degree = cross_ratio_degree(h, timeout=timeout)
    except DegreeTimeoutError:
        degree = None
    degree_micros = int((time.perf_counter() - start) * 1e6)

    if degree is not None and degree > report.min_bound:
        raise TheoremViolationError(
            f"Degree {degree} exceeds matching bound {report.min_bound} on counter {counter}: {h}")

    record = ExperimentRecord(
        counter=counter,
        instance_seed=instance_seed,
        n=n,
        edges=edges_to_plain_list(h),
        degree=degree,
        min_bound=report.min_bound,
        delta=None if degree is None else degree - report.min_bound,
        surplus=report.surplus,
        degree_micros=degree_micros if timings else 0,
        bound_micros=bound_micros if timings else 0,
    )
    return _Outcome(counter, "timeout" if degree is None else "accepted", record)


def _tasks(cfg: ExperimentConfig) -> Iterator[tuple[int, int, int, str, float, bool]]:
    for counter in range(cfg.max_attempts):
        yield cfg.n, cfg.seed, counter, cfg.filter, cfg.timeout, cfg.timings


# ---------------- Aggregation ----------------

def summarize(records: list[ExperimentRecord], wall_time: float = 0.0,
              attempts: int | None = None, config: dict | None = None) -> ExperimentSummary:
    """Summary statistics from records alone (skipped rows are counted separately)"""
    done = [r for r in records if not r.skipped]
    histogram: dict[int, int] = {}
    degree_total = 0
    bound_total = 0
    for r in done:
        histogram[-r.delta] = histogram.get(-r.delta, 0) + 1
        degree_total += r.degree
        bound_total += r.min_bound
    accepted = len(done)
    attempts = attempts if attempts is not None else (max((r.counter for r in records), default=-1) + 1)
    return ExperimentSummary(
        accepted=accepted,
        tight_fraction=histogram.get(0, 0) / accepted if accepted else 0.0,
        mean_degree=degree_total / accepted if accepted else 0.0,
        delta_histogram=dict(sorted(histogram.items())),
        wall_time=wall_time,
        attempts=attempts,
        skipped=len(records) - accepted,
        acceptance_rate=accepted / attempts if attempts else 0.0,
        mean_min_bound=bound_total / accepted if accepted else 0.0,
        config=config or {},
    )


def run_experiment(cfg: ExperimentConfig) -> tuple[list[ExperimentRecord], ExperimentSummary]:
    """
    Sample until cfg.samples instances are accepted.

    Instance i uses seed mix_seed(cfg.seed, i); outcomes are consumed in
    counter order, so results do not depend on cfg.parallelism.

    Raises:
        TheoremViolationError: If any instance has degree above its bound
        AttemptsExhaustedError: If max_attempts runs out (carries partial results)
    """
    start = time.perf_counter()
    records: list[ExperimentRecord] = []
    accepted = 0
    attempts = 0
    logger.info("Running experiment n=%d, samples=%d, seed=%d, filter=%s, workers=%d",
                cfg.n, cfg.samples, cfg.seed, cfg.filter, cfg.parallelism)

    pool = Pool(cfg.parallelism) if cfg.parallelism > 1 else None
    try:
        outcomes = pool.imap(_evaluate, _tasks(cfg), chunksize=4) if pool else map(_evaluate, _tasks(cfg))
        for outcome in outcomes:
            attempts += 1
            if outcome.record is not None:
                records.append(outcome.record)
            if outcome.status == "accepted":
                accepted += 1
                if accepted % 50 == 0:
                    logger.info("Accepted %d/%d after %d attempts", accepted, cfg.samples, attempts)
            elif outcome.status == "timeout":
                logger.warning("Degree timed out on counter %d; row skipped", outcome.counter)
            if accepted >= cfg.samples:
                break
    finally:
        if pool:
            pool.terminate()
            pool.join()

    summary = summarize(records, time.perf_counter() - start, attempts, cfg.model_dump())
    if accepted < cfg.samples:
        raise AttemptsExhaustedError(
            f"Only {accepted}/{cfg.samples} samples accepted after {attempts} attempts",
            records, summary)
    logger.info("Accepted %d samples from %d attempts (acceptance rate %.3f)",
                accepted, attempts, summary.acceptance_rate)
    return records, summary


# ---------------- Files ----------------

def _atomic_write(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def records_to_csv(records: list[ExperimentRecord]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(r.to_row() for r in records)
    return buffer.getvalue().encode("utf-8")


def write_records_csv(records: list[ExperimentRecord], path: Path | str):
    _atomic_write(Path(path), records_to_csv(records))


def read_records_csv(path: Path | str) -> list[ExperimentRecord]:
    with Path(path).open("r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"Unexpected CSV header {reader.fieldnames}")
        return [ExperimentRecord.from_row(row) for row in reader]


def write_summary_json(summary: ExperimentSummary, path: Path | str):
    _atomic_write(Path(path), json.dumps(summary.to_dict(), indent=4).encode("utf-8"))


def write_bytes_atomic(data: bytes, path: Path | str):
    _atomic_write(Path(path), data)


# ---------------- Counterexample search ----------------

def _confirm_zero_degree(h: Hypergraph) -> bool:
    """
    Independent recheck: surplus 3 and degree 0 under a different top-level pivot.

    Raises:
        ChoiceDisagreementError: If the forced pivot gives a nonzero degree
    """
    if surplus(h) != 3 or cross_ratio_degree(h) != 0:
        return False
    last = h.edges[-1]
    forced = degree_with_choice(h, last, last[2:])
    if forced != 0:
        raise ChoiceDisagreementError(
            f"Degree depends on the pivot for {h}: 0 by default, {forced} with pivot {list(last)}")
    return True


def search_sigma3_zero_degree(n: int, samples: int, seed: int,
                              timeout: float | None = None) -> list[Counterexample]:
    """
    Examine `samples` random surplus-3 hypergraphs and return those of degree 0.

    Sampling stops after SEARCH_ATTEMPTS_PER_SAMPLE * samples draws, so the
    search always terminates. An empty result is the expected outcome.

    Raises:
        ChoiceDisagreementError: If a degree-0 hit changes under a forced pivot
    """
    if n < 5:
        raise ValueError(f"Search needs n >= 5, got {n}")
    found = []
    examined = 0
    for counter in range(SEARCH_ATTEMPTS_PER_SAMPLE * samples):
        if examined >= samples:
            break
        instance_seed = mix_seed(seed, counter)
        h = random_hypergraph(n, instance_seed)
        if surplus(h) != 3:
            continue
        examined += 1
        try:
            degree = cross_ratio_degree(h, timeout=timeout)
        except DegreeTimeoutError:
            logger.warning("Degree timed out on search counter %d", counter)
            continue
        if degree == 0 and _confirm_zero_degree(h):
            logger.warning("Surplus-3 hypergraph with degree 0: %s", h)
            found.append(Counterexample(counter, instance_seed, h))
    logger.info("Examined %d surplus-3 hypergraphs, found %d with degree 0", examined, len(found))
    return found


def exhaustive_search(n: int) -> list[Hypergraph]:
    """Every balanced edge multiset on [1, n] with surplus 3 and degree 0"""
    return [h for h in all_hypergraphs(n) if surplus(h) == 3 and _confirm_zero_degree(h)]
