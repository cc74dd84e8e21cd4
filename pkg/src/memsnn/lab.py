"""Experiment harness: repeats, per-generation statistics, Welch t-tests,
and CSV emission.

A run sweeps synapse kinds over independent repeats.  Repeat ``r`` of every
kind uses RNG seed ``base_seed XOR r``, so kinds face common random numbers
while repeats stay independent; repeats may execute in parallel worker
processes and are always reduced in (kind, repeat) order, which keeps every
output byte-identical for a given configuration.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _scipy_stats

from .config import DEFAULT_SETTINGS, Settings
from .evolve import (Genome, Population, ga_generation, genome_to_json,
                     make_population, site_count)
from .tasks import OBJECTIVES, make_evaluator


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    mean_nodes: float
    mean_connectivity_pct: float
    mean_mu: float
    mean_psi: float
    mean_omega: float
    mean_tau: float
    solved_yet: bool


@dataclass
class RepeatResult:
    kind: str
    repeat: int
    series: list[GenerationStats]
    gens_to_solve: int | None  # None when the budget never produced a solver
    generations: int
    best_fitness: float
    final_mean_fitness: float
    best_genome_json: str

    @property
    def censored_gens_to_solve(self) -> int:
        return self.generations if self.gens_to_solve is None else self.gens_to_solve


@dataclass
class TTestRow:
    metric: str
    kind_a: str
    kind_b: str
    t: float
    p: float


@dataclass
class ExperimentConfig:
    task: str
    kinds: tuple[str, ...]
    generations: int
    repeats: int
    base_seed: int
    settings: Settings = DEFAULT_SETTINGS
    workers: int = 1

    def validate(self) -> None:
        if self.task not in OBJECTIVES:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.kinds:
            raise ValueError("at least one synapse kind is required")
        for kind in self.kinds:
            if kind not in ("unipolar", "bipolar", "constant"):
                raise ValueError(f"unknown synapse kind {kind!r}")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")


@dataclass
class ExperimentReport:
    task: str
    kinds: tuple[str, ...]
    generations: int
    repeats: int
    base_seed: int
    results: dict[str, list[RepeatResult]] = field(default_factory=dict)
    ttests: list[TTestRow] = field(default_factory=list)


def connected_node_count(genome: Genome) -> int:
    """Neurons of any layer touched by at least one enabled connection."""
    touched = set()
    for (pl, pi, ql, qi) in genome.connections:
        touched.add((pl, pi))
        touched.add((ql, qi))
    return len(touched)


def connectivity_pct(genome: Genome) -> float:
    """Enabled share of the genome's possible connection sites, percent."""
    possible = site_count(genome.n_hidden)
    if possible == 0:
        return 0.0
    return 100.0 * len(genome.connections) / possible


def summarize_generation(pop: Population) -> GenerationStats:
    members = pop.members
    fits = np.array([g.fitness for g in members], dtype=np.float64)
    best = fits.max() if pop.objective == "maximize" else fits.min()
    rates = np.array([g.rates.as_tuple() for g in members], dtype=np.float64)
    return GenerationStats(
        generation=pop.generation,
        best_fitness=float(best),
        mean_fitness=float(fits.mean()),
        mean_nodes=float(np.mean([connected_node_count(g) for g in members])),
        mean_connectivity_pct=float(np.mean([connectivity_pct(g)
                                             for g in members])),
        mean_mu=float(rates[:, 0].mean()),
        mean_psi=float(rates[:, 1].mean()),
        mean_omega=float(rates[:, 2].mean()),
        mean_tau=float(rates[:, 3].mean()),
        solved_yet=any(g.solved for g in members),
    )


def welch_t_test(sample_a, sample_b) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-tailed p-value.

    Degenerate zero-variance pairs return p=1 for equal means and p=0
    otherwise.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    se2 = va / a.size + vb / b.size
    diff = a.mean() - b.mean()
    if se2 == 0.0:
        if diff == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, diff), 0.0
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / ((va / a.size) ** 2 / (a.size - 1)
                     + (vb / b.size) ** 2 / (b.size - 1))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df))
    return float(t), p


def run_repeat(task: str, kind: str, repeat: int, base_seed: int,
               generations: int, settings: Settings) -> RepeatResult:
    """One full GA run for (task, kind, repeat)."""
    rng = np.random.default_rng(base_seed ^ repeat)
    objective = OBJECTIVES[task]
    evaluator = make_evaluator(task, settings, rng)
    pop = make_population(kind, settings.pop_size, objective, rng, settings)
    for genome in pop.members:
        result = evaluator(genome)
        genome.fitness = float(result.f)
        genome.solved = bool(result.solved)
    pop.refresh_best()
    gens_to_solve = 0 if any(g.solved for g in pop.members) else None

    series: list[GenerationStats] = []
    for gen in range(1, generations + 1):
        ga_generation(pop, evaluator, rng, settings)
        stats = summarize_generation(pop)
        if gens_to_solve is None and stats.solved_yet:
            gens_to_solve = gen
        stats.solved_yet = gens_to_solve is not None and gens_to_solve <= gen
        series.append(stats)

    best = pop.best_genome
    return RepeatResult(
        kind=kind, repeat=repeat, series=series,
        gens_to_solve=gens_to_solve, generations=generations,
        best_fitness=float(pop.best_fitness),
        final_mean_fitness=series[-1].mean_fitness,
        best_genome_json=genome_to_json(best) if best is not None else "",
    )


def _repeat_job(args):
    return run_repeat(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Sweep kinds x repeats, then cross-kind significance tests."""
    config.validate()
    jobs = [(config.task, kind, rep, config.base_seed, config.generations,
             config.settings)
            for kind in config.kinds for rep in range(config.repeats)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_repeat_job, jobs))
    else:
        outcomes = [_repeat_job(job) for job in jobs]

    report = ExperimentReport(task=config.task, kinds=config.kinds,
                              generations=config.generations,
                              repeats=config.repeats,
                              base_seed=config.base_seed)
    for outcome in outcomes:
        report.results.setdefault(outcome.kind, []).append(outcome)
    for kind in report.results:
        report.results[kind].sort(key=lambda r: r.repeat)

    if config.repeats >= 2:
        metrics = {
            "best_fitness": lambda r: r.best_fitness,
            "mean_fitness": lambda r: r.final_mean_fitness,
            "gens_to_solve": lambda r: float(r.censored_gens_to_solve),
        }
        for i, kind_a in enumerate(config.kinds):
            for kind_b in config.kinds[i + 1:]:
                for name, get in metrics.items():
                    t, p = welch_t_test(
                        [get(r) for r in report.results[kind_a]],
                        [get(r) for r in report.results[kind_b]])
                    report.ttests.append(TTestRow(metric=name, kind_a=kind_a,
                                                  kind_b=kind_b, t=t, p=p))
    return report


# ---------------------------------------------------------------------------
# report emission


GENERATION_CSV_HEADER = ("kind,repeat,gen,best_f,avg_f,nodes,"
                         "connectivity_pct,mu,psi,omega,tau,solved")


def generation_csv_lines(report: ExperimentReport) -> list[str]:
    lines = [GENERATION_CSV_HEADER]
    for kind in report.kinds:
        for rep in report.results[kind]:
            for s in rep.series:
                lines.append(
                    f"{kind},{rep.repeat},{s.generation},{s.best_fitness!r},"
                    f"{s.mean_fitness!r},{s.mean_nodes!r},"
                    f"{s.mean_connectivity_pct!r},{s.mean_mu!r},"
                    f"{s.mean_psi!r},{s.mean_omega!r},{s.mean_tau!r},"
                    f"{int(s.solved_yet)}")
    return lines


def _mean_sd(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    # population standard deviation, matching the reported (+/- sd) style
    return float(arr.mean()), float(arr.std(ddof=0))


def summary_rows(report: ExperimentReport) -> list[dict]:
    rows = []
    for kind in report.kinds:
        reps = report.results[kind]
        final = [r.series[-1] for r in reps]
        best_m, best_s = _mean_sd([r.best_fitness for r in reps])
        avg_m, avg_s = _mean_sd([s.mean_fitness for s in final])
        gts_m, gts_s = _mean_sd([r.censored_gens_to_solve for r in reps])
        nodes_m, nodes_s = _mean_sd([s.mean_nodes for s in final])
        conn_m, conn_s = _mean_sd([s.mean_connectivity_pct for s in final])
        mu_m, mu_s = _mean_sd([s.mean_mu for s in final])
        psi_m, psi_s = _mean_sd([s.mean_psi for s in final])
        om_m, om_s = _mean_sd([s.mean_omega for s in final])
        tau_m, tau_s = _mean_sd([s.mean_tau for s in final])
        rows.append({
            "kind": kind,
            "best_fit_mean": best_m, "best_fit_sd": best_s,
            "avg_fit_mean": avg_m, "avg_fit_sd": avg_s,
            "gens_to_solve_mean": gts_m, "gens_to_solve_sd": gts_s,
            "solved_repeats": sum(r.gens_to_solve is not None for r in reps),
            "nodes_mean": nodes_m, "nodes_sd": nodes_s,
            "connectivity_mean": conn_m, "connectivity_sd": conn_s,
            "mu_mean": mu_m, "mu_sd": mu_s,
            "psi_mean": psi_m, "psi_sd": psi_s,
            "omega_mean": om_m, "omega_sd": om_s,
            "tau_mean": tau_m, "tau_sd": tau_s,
        })
    return rows


def summary_csv_lines(report: ExperimentReport) -> list[str]:
    rows = summary_rows(report)
    if not rows:
        return []
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            row[k] if isinstance(row[k], str) else repr(row[k]) if
            isinstance(row[k], float) else str(row[k]) for k in header))
    return lines


def ttest_csv_lines(report: ExperimentReport) -> list[str]:
    lines = ["metric,kind_a,kind_b,t,p,significant"]
    for row in report.ttests:
        lines.append(f"{row.metric},{row.kind_a},{row.kind_b},{row.t!r},"
                     f"{row.p!r},{int(row.p < 0.05)}")
    return lines


def format_summary_table(report: ExperimentReport) -> str:
    """Readable fixed-width table of the headline per-kind statistics."""
    rows = summary_rows(report)
    out = [f"task={report.task} generations={report.generations} "
           f"repeats={report.repeats} seed={report.base_seed}"]
    out.append(f"{'kind':<10}{'best fit':>18}{'avg fit':>18}"
               f"{'gens to solve':>18}{'solved':>8}{'nodes':>14}"
               f"{'connectivity %':>16}")
    for r in rows:
        out.append(
            f"{r['kind']:<10}"
            f"{r['best_fit_mean']:>10.1f} ({r['best_fit_sd']:.1f})"
            f"{r['avg_fit_mean']:>10.1f} ({r['avg_fit_sd']:.1f})"
            f"{r['gens_to_solve_mean']:>10.2f} ({r['gens_to_solve_sd']:.2f})"
            f"{r['solved_repeats']:>8}"
            f"{r['nodes_mean']:>8.2f} ({r['nodes_sd']:.2f})"
            f"{r['connectivity_mean']:>9.2f} ({r['connectivity_sd']:.2f})")
    if report.ttests:
        out.append("")
        out.append(f"{'metric':<16}{'pair':<24}{'t':>12}{'p':>12}  sig")
        for row in report.ttests:
            out.append(f"{row.metric:<16}"
                       f"{row.kind_a + ' vs ' + row.kind_b:<24}"
                       f"{row.t:>12.4f}{row.p:>12.5f}"
                       f"  {'*' if row.p < 0.05 else ''}")
    return "\n".join(out)
