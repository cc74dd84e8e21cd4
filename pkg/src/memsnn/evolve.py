"""Genome encoding and the steady-state GA with self-adaptive rates.

A genome is a variable-length hidden layer (signs only), a set of enabled
connection sites with weights, and four per-genome mutation rates that are
themselves log-normally mutated on inheritance.  Memristive genomes carry no
evolvable weights: their devices always start trials at the kind's fixed
initial state, so those networks must rely on in-trial plasticity.

Each generation clones and mutates two fitness-proportionally selected
parents, evaluates the children, and deletes the two worst members.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_SETTINGS, Settings
from .neuro import Layer, N_INPUTS, N_OUTPUTS, Site
from .synapse import SynapseKind

KIND_NAMES = {SynapseKind.UNIPOLAR: "unipolar",
              SynapseKind.BIPOLAR: "bipolar",
              SynapseKind.CONSTANT: "constant"}
KINDS_BY_NAME = {v: k for k, v in KIND_NAMES.items()}

_LAYER_NAMES = {Layer.INPUT: "in", Layer.HIDDEN: "hid", Layer.OUTPUT: "out"}
_LAYERS_BY_NAME = {v: int(k) for k, v in _LAYER_NAMES.items()}


@dataclass
class MutationRates:
    mu: float    # constant-connection weight perturbation rate
    psi: float   # node addition/removal event rate
    omega: float # probability the node event is an addition
    tau: float   # per-site connection toggle rate

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu, self.psi, self.omega, self.tau)


@dataclass
class Genome:
    kind: SynapseKind
    hidden_signs: list[int]
    connections: dict[Site, float]
    rates: MutationRates
    fitness: float | None = None
    solved: bool = False
    age: int = 0

    @property
    def n_hidden(self) -> int:
        return len(self.hidden_signs)

    def clone(self) -> "Genome":
        return Genome(kind=self.kind,
                      hidden_signs=list(self.hidden_signs),
                      connections=dict(self.connections),
                      rates=copy.copy(self.rates),
                      fitness=None, solved=False, age=0)


def all_sites(n_hidden: int) -> list[Site]:
    """Every legal connection site, in canonical (sorted-tuple) order."""
    sites: list[Site] = []
    for i in range(N_INPUTS):
        for j in range(n_hidden):
            sites.append((int(Layer.INPUT), i, int(Layer.HIDDEN), j))
    for i in range(n_hidden):
        for j in range(n_hidden):
            if j != i:
                sites.append((int(Layer.HIDDEN), i, int(Layer.HIDDEN), j))
        for j in range(N_OUTPUTS):
            sites.append((int(Layer.HIDDEN), i, int(Layer.OUTPUT), j))
    return sites


def site_count(n_hidden: int) -> int:
    return n_hidden * n_hidden + 7 * n_hidden


def neuron_sites(n_hidden: int, idx: int) -> list[Site]:
    """Sites incident to hidden neuron `idx` (layer size already includes it)."""
    sites: list[Site] = []
    for i in range(N_INPUTS):
        sites.append((int(Layer.INPUT), i, int(Layer.HIDDEN), idx))
    for j in range(n_hidden):
        if j != idx:
            sites.append((int(Layer.HIDDEN), idx, int(Layer.HIDDEN), j))
            sites.append((int(Layer.HIDDEN), j, int(Layer.HIDDEN), idx))
    for j in range(N_OUTPUTS):
        sites.append((int(Layer.HIDDEN), idx, int(Layer.OUTPUT), j))
    sites.sort()
    return sites


def init_weight(kind: SynapseKind, rng: np.random.Generator,
                settings: Settings) -> float:
    """Weight stored for a newly enabled connection."""
    if kind == SynapseKind.UNIPOLAR:
        return settings.w_lrs
    if kind == SynapseKind.BIPOLAR:
        return settings.w_bipolar_init
    return float(rng.uniform(0.0, 1.0))


def init_genome(kind: SynapseKind | str, rng: np.random.Generator,
                settings: Settings = DEFAULT_SETTINGS) -> Genome:
    """Random genome: full-size hidden layer, each site enabled with P=0.5,
    each hidden neuron excitatory with P=0.5, rates uniform in [0, 0.5]."""
    if isinstance(kind, str):
        kind = KINDS_BY_NAME[kind]
    signs = [1 if rng.uniform() < settings.excitatory_p else -1
             for _ in range(settings.hidden_init)]
    connections: dict[Site, float] = {}
    for site in all_sites(settings.hidden_init):
        if rng.uniform() < settings.init_connect_p:
            connections[site] = init_weight(kind, rng, settings)
    rates = MutationRates(*(float(rng.uniform(0.0, settings.rate_seed_max))
                            for _ in range(4)))
    return Genome(kind=kind, hidden_signs=signs, connections=connections,
                  rates=rates)


def mutate_rates(rates: MutationRates, rng: np.random.Generator,
                 lo: float = 0.001, hi: float = 1.0) -> MutationRates:
    """Each rate is scaled by exp(N(0,1)) independently, then clamped."""
    new = [min(hi, max(lo, r * math.exp(rng.normal())))
           for r in rates.as_tuple()]
    return MutationRates(*new)


def _remap_hidden(connections: dict[Site, float], fn) -> dict[Site, float]:
    out: dict[Site, float] = {}
    for (pl, pi, ql, qi), w in connections.items():
        npi = fn(pi) if pl == Layer.HIDDEN else pi
        nqi = fn(qi) if ql == Layer.HIDDEN else qi
        if npi is None or nqi is None:
            continue
        out[(pl, npi, ql, nqi)] = w
    return out


def mutate_genome(genome: Genome, rng: np.random.Generator,
                  settings: Settings = DEFAULT_SETTINGS) -> Genome:
    """Return a mutated copy: rates first, then constant-weight perturbation,
    per-site connection toggles, and at most one node addition/removal."""
    child = genome.clone()
    child.rates = mutate_rates(child.rates, rng,
                               settings.rate_floor, settings.rate_ceil)
    mu, psi, omega, tau = child.rates.as_tuple()

    if child.kind == SynapseKind.CONSTANT:
        step = settings.weight_step
        for site in sorted(child.connections):
            if rng.uniform() < mu:
                w = child.connections[site] + rng.uniform(-step, step)
                child.connections[site] = min(1.0, max(0.0, w))

    for site in all_sites(child.n_hidden):
        if rng.uniform() < tau:
            if site in child.connections:
                del child.connections[site]
            else:
                child.connections[site] = init_weight(child.kind, rng,
                                                      settings)

    if rng.uniform() < psi:
        if rng.uniform() < omega:
            _add_hidden_neuron(child, rng, settings)
        elif child.n_hidden > 0:
            _remove_hidden_neuron(child, rng)
    return child


def _add_hidden_neuron(child: Genome, rng: np.random.Generator,
                       settings: Settings) -> None:
    pos = int(rng.integers(0, child.n_hidden + 1))
    sign = 1 if rng.uniform() < settings.excitatory_p else -1
    child.connections = _remap_hidden(child.connections,
                                      lambda i: i + 1 if i >= pos else i)
    child.hidden_signs.insert(pos, sign)
    for site in neuron_sites(child.n_hidden, pos):
        if rng.uniform() < settings.init_connect_p:
            child.connections[site] = init_weight(child.kind, rng, settings)


def _remove_hidden_neuron(child: Genome, rng: np.random.Generator) -> None:
    victim = int(rng.integers(0, child.n_hidden))
    child.hidden_signs.pop(victim)
    child.connections = _remap_hidden(
        child.connections,
        lambda i: None if i == victim else (i - 1 if i > victim else i))


@dataclass
class Population:
    """Fixed-size population plus bookkeeping for steady-state replacement."""

    members: list[Genome]
    objective: str  # "maximize" or "minimize"
    generation: int = 0
    next_age: int = 0
    best_fitness: float | None = None
    best_genome: Genome | None = None

    def __post_init__(self):
        for g in self.members:
            g.age = self.next_age
            self.next_age += 1

    @property
    def size(self) -> int:
        return len(self.members)

    def _better(self, a: float, b: float) -> bool:
        return a > b if self.objective == "maximize" else a < b

    def note_evaluated(self, genome: Genome) -> None:
        if genome.fitness is None:
            raise ValueError("genome has no fitness")
        if self.best_fitness is None or self._better(genome.fitness,
                                                     self.best_fitness):
            self.best_fitness = genome.fitness
            self.best_genome = genome

    def refresh_best(self) -> None:
        for g in self.members:
            self.note_evaluated(g)


def make_population(kind, n: int, objective: str, rng: np.random.Generator,
                    settings: Settings = DEFAULT_SETTINGS) -> Population:
    return Population(members=[init_genome(kind, rng, settings)
                               for _ in range(n)],
                      objective=objective)


def selection_score(fitness: float, objective: str,
                    max_fitness: float = 8000.0) -> float:
    """Fitness-proportionate score, floored at 1.

    Minimisation is mapped through (max_fitness - f + 1) so the best (lowest)
    fitness gets the largest share.
    """
    if objective == "minimize":
        score = max_fitness - fitness + 1.0
    else:
        score = fitness
    return max(score, 1.0)


def select_parent(pop: Population, rng: np.random.Generator,
                  max_fitness: float = 8000.0) -> Genome:
    """Roulette-wheel draw over selection scores."""
    scores = [selection_score(g.fitness, pop.objective, max_fitness)
              for g in pop.members]
    total = sum(scores)
    if total <= 0.0:
        return pop.members[int(rng.integers(0, len(pop.members)))]
    pick = rng.uniform(0.0, total)
    acc = 0.0
    for g, s in zip(pop.members, scores):
        acc += s
        if pick < acc:
            return g
    return pop.members[-1]


def ga_generation(pop: Population, evaluator, rng: np.random.Generator,
                  settings: Settings = DEFAULT_SETTINGS) -> Population:
    """One steady-state generation: two children in, two worst out.

    The evaluator maps a genome to a trial result with `.f` and `.solved`;
    if it raises, the population is left untouched.
    """
    parents = [select_parent(pop, rng, settings.tmaze_max_fitness),
               select_parent(pop, rng, settings.tmaze_max_fitness)]
    children = [mutate_genome(p, rng, settings) for p in parents]
    for child in children:
        result = evaluator(child)
        child.fitness = float(result.f)
        child.solved = bool(result.solved)
    for child in children:
        child.age = pop.next_age
        pop.next_age += 1
        pop.members.append(child)
        pop.note_evaluated(child)
    # drop the two worst; among ties the oldest goes first
    if pop.objective == "maximize":
        order = sorted(range(len(pop.members)),
                       key=lambda i: (pop.members[i].fitness,
                                      pop.members[i].age))
    else:
        order = sorted(range(len(pop.members)),
                       key=lambda i: (-pop.members[i].fitness,
                                      pop.members[i].age))
    doomed = set(order[:2])
    pop.members = [g for i, g in enumerate(pop.members) if i not in doomed]
    pop.generation += 1
    return pop


# ---------------------------------------------------------------------------
# serialization


def genome_to_dict(genome: Genome) -> dict:
    conns = []
    for site in sorted(genome.connections):
        pl, pi, ql, qi = site
        conns.append({"pre": [_LAYER_NAMES[Layer(pl)], pi],
                      "post": [_LAYER_NAMES[Layer(ql)], qi],
                      "w": genome.connections[site]})
    return {
        "kind": KIND_NAMES[genome.kind],
        "neurons": list(genome.hidden_signs),
        "connections": conns,
        "rates": {"mu": genome.rates.mu, "psi": genome.rates.psi,
                  "omega": genome.rates.omega, "tau": genome.rates.tau},
        "fitness": genome.fitness,
        "solved": genome.solved,
    }


def genome_from_dict(data: dict) -> Genome:
    connections: dict[Site, float] = {}
    for row in data["connections"]:
        pl, pi = row["pre"]
        ql, qi = row["post"]
        site = (_LAYERS_BY_NAME[pl], int(pi), _LAYERS_BY_NAME[ql], int(qi))
        if site in connections:
            raise ValueError(f"duplicate connection site {site}")
        connections[site] = float(row["w"])
    rates = MutationRates(mu=float(data["rates"]["mu"]),
                          psi=float(data["rates"]["psi"]),
                          omega=float(data["rates"]["omega"]),
                          tau=float(data["rates"]["tau"]))
    return Genome(kind=KINDS_BY_NAME[data["kind"]],
                  hidden_signs=[int(s) for s in data["neurons"]],
                  connections=connections, rates=rates,
                  fitness=data.get("fitness"),
                  solved=bool(data.get("solved", False)))


def genome_to_json(genome: Genome) -> str:
    return json.dumps(genome_to_dict(genome), indent=2)


def genome_from_json(text: str) -> Genome:
    return genome_from_dict(json.loads(text))
