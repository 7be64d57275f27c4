"""Batch experiment harness: parameter sweeps with seeded replicate runs.

Two canonical sweeps mirror the reported result tables: link failure
probability over five decades at fixed q, and population size via
q in 3..7 at fixed failure probability.  Every run is an independent
full-budget evolution; summaries are mean and sample standard deviation
over the replicates, and every emitted file embeds the config that
produced it.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .engine import (
    Evolution,
    GaConfig,
    GenerationRecord,
    convergence_time,
    population_size,
)

SUMMARY_FORMAT = "evonet.sweep-summary"
SUMMARY_VERSION = 1

TABLE1_FAILURE_PROBS = (0.1, 0.01, 0.001, 0.0001, 0.00001)
TABLE2_Q_VALUES = (3, 4, 5, 6, 7)


class SweepVariable(Enum):
    LINK_FAILURE_PROB = "link_failure_prob"
    POPULATION_SIZE_Q = "q"


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    values: tuple
    runs_per_value: int = 5
    base_config: GaConfig = GaConfig()

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.runs_per_value < 1:
            raise ValueError("runs_per_value must be >= 1")

    def display_value(self, value) -> float | int:
        """Row key for a swept value; q sweeps are keyed by the population
        size they induce, matching how the results are tabulated."""
        if self.variable is SweepVariable.POPULATION_SIZE_Q:
            return population_size(int(value))
        return value

    def config_for(self, value, run_index: int) -> GaConfig:
        base = self.base_config
        return replace(
            base,
            **{self.variable.value: value},
            seed=base.seed + run_index,
        )


def table1_spec(base: GaConfig = GaConfig(), runs_per_value: int = 5) -> SweepSpec:
    return SweepSpec(SweepVariable.LINK_FAILURE_PROB, TABLE1_FAILURE_PROBS, runs_per_value, base)


def table2_spec(base: GaConfig = GaConfig(), runs_per_value: int = 5) -> SweepSpec:
    return SweepSpec(SweepVariable.POPULATION_SIZE_Q, TABLE2_Q_VALUES, runs_per_value, base)


@dataclass(frozen=True)
class RunResult:
    value: float | int
    run_index: int
    config: GaConfig
    records: tuple[GenerationRecord, ...]

    @property
    def convergence(self) -> tuple[int, bool]:
        return convergence_time(list(self.records), budget=self.config.generations)

    @property
    def max_fitness(self) -> float:
        return max(r.best_scores.fitness for r in self.records)

    @property
    def final(self) -> GenerationRecord:
        return self.records[-1]


@dataclass(frozen=True)
class SweepSummaryRow:
    value: float | int
    convergence_time: tuple[float, float]  # (mean, sd) over replicates
    max_fitness: tuple[float, float]
    final_cost: tuple[float, float]
    final_pleiotropy: tuple[float, float]
    final_redundancy: tuple[float, float]
    unconverged_runs: int

    def to_doc(self) -> dict:
        def pair(p):
            return {"mean": p[0], "sd": p[1]}

        return {
            "value": self.value,
            "convergence_time": pair(self.convergence_time),
            "max_fitness": pair(self.max_fitness),
            "final_cost": pair(self.final_cost),
            "final_pleiotropy": pair(self.final_pleiotropy),
            "final_redundancy": pair(self.final_redundancy),
            "unconverged_runs": self.unconverged_runs,
        }


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepSummaryRow, ...]
    runs: tuple[RunResult, ...]


def mean_sd(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation; a single sample has sd 0."""
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


def summarize_runs(spec: SweepSpec, value, runs: list[RunResult]) -> SweepSummaryRow:
    convergences = [r.convergence for r in runs]
    return SweepSummaryRow(
        value=spec.display_value(value),
        convergence_time=mean_sd([float(c[0]) for c in convergences]),
        max_fitness=mean_sd([r.max_fitness for r in runs]),
        final_cost=mean_sd([r.final.best_scores.cost for r in runs]),
        final_pleiotropy=mean_sd([r.final.best_scores.pleiotropy for r in runs]),
        final_redundancy=mean_sd([r.final.best_scores.redundancy for r in runs]),
        unconverged_runs=sum(1 for c in convergences if not c[1]),
    )


def execute_run(cfg: GaConfig) -> tuple[GenerationRecord, ...]:
    """One full-budget evolution with its own placement and rng, both
    derived from cfg.seed."""
    return tuple(Evolution(cfg).run_to_end())


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None) -> SweepResult:
    """Execute every (value, replicate) run and summarize per value.

    When out_dir is given, each run's trace lands in
    traces/<value>/run-<k>.csv as soon as the run finishes (so an aborted
    sweep preserves a partial archive), and the summary is written as both
    summary.csv and summary.json at the end.
    """
    out = Path(out_dir) if out_dir is not None else None
    rows: list[SweepSummaryRow] = []
    all_runs: list[RunResult] = []
    for value in spec.values:
        value_runs: list[RunResult] = []
        for k in range(spec.runs_per_value):
            cfg = spec.config_for(value, k)
            result = RunResult(value, k, cfg, execute_run(cfg))
            value_runs.append(result)
            all_runs.append(result)
            if out is not None:
                trace_path = out / "traces" / format_value(spec.display_value(value)) / f"run-{k}.csv"
                trace_path.parent.mkdir(parents=True, exist_ok=True)
                trace_path.write_text(render_trace_csv(result.records, cfg))
        rows.append(summarize_runs(spec, value, value_runs))
    result = SweepResult(spec, tuple(rows), tuple(all_runs))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(emit_tables(result, "csv"))
        (out / "summary.json").write_text(emit_tables(result, "json"))
    return result


def format_value(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:g}"


def config_header_lines(cfg: GaConfig) -> list[str]:
    blob = json.dumps(cfg.to_doc(), sort_keys=True, separators=(", ", ": "))
    return [f"# config: {blob}", f"# seed: {cfg.seed}"]


def render_trace_csv(records, cfg: GaConfig) -> str:
    """Per-generation trace of the elite's scores, one row per generation."""
    lines = config_header_lines(cfg)
    lines.append("generation,best_fitness,best_cost,pleiotropy,redundancy,converged")
    for r in records:
        s = r.best_scores
        lines.append(
            f"{r.generation},{s.fitness!r},{s.cost!r},{s.pleiotropy!r},"
            f"{s.redundancy!r},{'true' if r.converged else 'false'}"
        )
    return "\n".join(lines) + "\n"


_COLUMNS = ("convergence_time", "max_fitness", "final_cost", "final_pleiotropy", "final_redundancy")


def emit_tables(result: SweepResult, fmt: str) -> str:
    """Render the summary rows.

    csv: readable table, six significant digits, mean and sd columns.
    json: full-precision structured document that parses back to the exact
    row values.
    """
    spec = result.spec
    if fmt == "csv":
        value_label = (
            "population_size"
            if spec.variable is SweepVariable.POPULATION_SIZE_Q
            else spec.variable.value
        )
        lines = config_header_lines(spec.base_config)
        lines.append(f"# variable: {spec.variable.value}, runs_per_value: {spec.runs_per_value}")
        header = [value_label]
        for col in _COLUMNS:
            header += [f"{col}_mean", f"{col}_sd"]
        header.append("unconverged_runs")
        lines.append(",".join(header))
        for row in result.rows:
            cells = [format_value(row.value)]
            for col in _COLUMNS:
                mean, sd = getattr(row, col)
                cells += [f"{mean:.6g}", f"{sd:.6g}"]
            cells.append(str(row.unconverged_runs))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "format": SUMMARY_FORMAT,
            "version": SUMMARY_VERSION,
            "variable": spec.variable.value,
            "runs_per_value": spec.runs_per_value,
            "base_config": spec.base_config.to_doc(),
            "rows": [row.to_doc() for row in result.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_summary_json(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != SUMMARY_FORMAT:
        raise ValueError(f"not a sweep summary (format={doc.get('format')!r})")
    if doc.get("version") != SUMMARY_VERSION:
        raise ValueError(f"unsupported summary version {doc.get('version')!r}")
    return doc
