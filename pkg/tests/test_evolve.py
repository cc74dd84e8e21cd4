"""Genome initialisation statistics, mutation operators, selection, and the
steady-state generation loop."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from memsnn.config import DEFAULT_SETTINGS
from memsnn.evolve import (Genome, MutationRates, Population, all_sites,
                           ga_generation, genome_from_json, genome_to_json,
                           init_genome, make_population, mutate_genome,
                           mutate_rates, select_parent, selection_score,
                           site_count)
from memsnn.neuro import Layer, N_INPUTS, N_OUTPUTS
from memsnn.synapse import SynapseKind

IN, HID, OUT = int(Layer.INPUT), int(Layer.HIDDEN), int(Layer.OUTPUT)


class StubRng:
    """Scripted stand-in for a numpy Generator."""

    def __init__(self, uniforms=(), normals=(), integers=()):
        self._uniform = list(uniforms)
        self._normal = list(normals)
        self._integers = list(integers)

    def uniform(self, lo=0.0, hi=1.0, size=None):
        v = self._uniform.pop(0) if self._uniform else 0.999999
        return lo + (hi - lo) * v

    def normal(self):
        return self._normal.pop(0) if self._normal else 0.0

    def integers(self, lo, hi=None):
        return self._integers.pop(0) if self._integers else lo


def validate_genome(g: Genome) -> None:
    h = g.n_hidden
    assert all(s in (-1, 1) for s in g.hidden_signs)
    seen = set()
    for site, w in g.connections.items():
        assert site not in seen
        seen.add(site)
        pl, pi, ql, qi = site
        assert (pl, ql) in ((IN, HID), (HID, HID), (HID, OUT))
        if pl == IN:
            assert 0 <= pi < N_INPUTS
        else:
            assert 0 <= pi < h
        if ql == HID:
            assert 0 <= qi < h
        else:
            assert 0 <= qi < N_OUTPUTS
        if (pl, ql) == (HID, HID):
            assert pi != qi
        assert 0.0 <= w <= 1.0


class TestSites:
    def test_count_formula(self):
        assert site_count(9) == 144
        assert site_count(0) == 0
        assert len(all_sites(9)) == 144

    def test_sites_sorted_and_unique(self):
        sites = all_sites(5)
        assert sites == sorted(sites)
        assert len(set(sites)) == len(sites)


class TestInitGenome:
    def test_unipolar_weights_fixed(self):
        rng = np.random.default_rng(0)
        g = init_genome("unipolar", rng)
        assert all(w == 0.9 for w in g.connections.values())

    def test_bipolar_weights_fixed(self):
        rng = np.random.default_rng(0)
        g = init_genome("bipolar", rng)
        assert all(w == 0.5 for w in g.connections.values())

    def test_constant_weights_uniform(self):
        rng = np.random.default_rng(0)
        g = init_genome("constant", rng)
        ws = list(g.connections.values())
        assert len(set(ws)) == len(ws)  # continuous draws never tie
        assert all(0.0 <= w <= 1.0 for w in ws)

    def test_structure(self):
        rng = np.random.default_rng(1)
        g = init_genome("unipolar", rng)
        assert g.n_hidden == 9
        validate_genome(g)
        for r in g.rates.as_tuple():
            assert 0.0 <= r <= 0.5

    def test_enable_and_sign_statistics(self):
        rng = np.random.default_rng(123)
        enabled = 0
        excit = 0
        n = 300
        for _ in range(n):
            g = init_genome("unipolar", rng)
            enabled += len(g.connections)
            excit += sum(s == 1 for s in g.hidden_signs)
        assert enabled / (n * 144) == pytest.approx(0.5, abs=0.02)
        assert excit / (n * 9) == pytest.approx(0.5, abs=0.05)


class TestMutateRates:
    def test_zero_draw_is_identity(self):
        rates = MutationRates(0.1, 0.2, 0.3, 0.4)
        out = mutate_rates(rates, StubRng(normals=[0, 0, 0, 0]))
        assert out.as_tuple() == rates.as_tuple()

    def test_unit_draw_scales_by_e(self):
        out = mutate_rates(MutationRates(0.1, 0.1, 0.1, 0.1),
                           StubRng(normals=[1, 0, 0, 0]))
        assert out.mu == pytest.approx(0.1 * math.e, rel=1e-12)

    def test_clamp_at_one(self):
        out = mutate_rates(MutationRates(0.9, 0.1, 0.1, 0.1),
                           StubRng(normals=[2, 0, 0, 0]))
        assert out.mu == 1.0

    def test_clamp_at_floor(self):
        out = mutate_rates(MutationRates(0.01, 0.1, 0.1, 0.1),
                           StubRng(normals=[-8, 0, 0, 0]))
        assert out.mu == 0.001

    def test_log_walk_is_unbiased(self):
        rng = np.random.default_rng(77)
        base = MutationRates(0.03, 0.03, 0.03, 0.03)
        deltas = []
        for _ in range(20000):
            out = mutate_rates(base, rng)
            deltas.append(math.log(out.mu) - math.log(base.mu))
        assert abs(np.mean(deltas)) < 0.05

    def test_rates_stay_in_range(self):
        rng = np.random.default_rng(4)
        rates = MutationRates(0.25, 0.25, 0.25, 0.25)
        for _ in range(500):
            rates = mutate_rates(rates, rng)
            for r in rates.as_tuple():
                assert 0.001 <= r <= 1.0


class TestMutateGenome:
    def test_quiet_mutation_changes_only_rates(self):
        rng = np.random.default_rng(0)
        g = init_genome("constant", rng)
        # uniforms default to ~1.0: every probability check fails
        child = mutate_genome(g, StubRng(normals=[0, 0, 0, 0]))
        assert child.connections == g.connections
        assert child.hidden_signs == g.hidden_signs

    def test_memristor_weights_never_perturbed(self):
        rng = np.random.default_rng(9)
        g = init_genome("unipolar", rng)
        g.rates = MutationRates(1000.0, 0.2, 0.5, 0.2)
        for _ in range(30):
            g = mutate_genome(g, rng)
            assert all(w == 0.9 for w in g.connections.values())

    def test_constant_weight_step_bounded(self):
        rng = np.random.default_rng(10)
        g = init_genome("constant", rng)
        g.rates = MutationRates(1000.0, 0.001, 0.5, 0.001)
        for _ in range(20):
            child = mutate_genome(g, rng)
            common = set(g.connections) & set(child.connections)
            assert common  # toggles are rare at tau=0.001
            for site in common:
                assert abs(child.connections[site]
                           - g.connections[site]) <= 0.1 + 1e-12
                assert 0.0 <= child.connections[site] <= 1.0
            g = child

    def test_structure_valid_under_heavy_mutation(self):
        rng = np.random.default_rng(11)
        for kind in ("unipolar", "bipolar", "constant"):
            g = init_genome(kind, rng)
            g.rates = MutationRates(0.5, 0.8, 0.5, 0.3)
            for _ in range(60):
                g = mutate_genome(g, rng)
                validate_genome(g)

    def test_node_removal_skipped_when_empty(self):
        rng = np.random.default_rng(12)
        g = init_genome("constant", rng)
        g.hidden_signs = []
        g.connections = {}
        g.rates = MutationRates(0.001, 1000.0, 0.001, 0.001)
        # psi fires every time, omega ~0.001 selects removal: must not raise
        for _ in range(50):
            g = mutate_genome(g, rng)
            validate_genome(g)

    def test_node_addition_grows_layer(self):
        rng = np.random.default_rng(13)
        g = init_genome("constant", rng)
        g.rates = MutationRates(0.001, 1000.0, 1000.0, 0.001)
        child = mutate_genome(g, rng)
        assert child.n_hidden == 10
        validate_genome(child)

    def test_parent_untouched(self):
        rng = np.random.default_rng(14)
        g = init_genome("constant", rng)
        snapshot = (dict(g.connections), list(g.hidden_signs),
                    g.rates.as_tuple())
        mutate_genome(g, rng)
        assert (g.connections, g.hidden_signs, g.rates.as_tuple()) == snapshot


@dataclass
class FakeResult:
    f: float
    solved: bool = False


def evaluated_population(fitnesses, objective="maximize"):
    members = []
    for f in fitnesses:
        g = Genome(kind=SynapseKind.CONSTANT, hidden_signs=[1],
                   connections={}, rates=MutationRates(0.1, 0.1, 0.1, 0.1),
                   fitness=float(f))
        members.append(g)
    pop = Population(members=members, objective=objective)
    pop.refresh_best()
    return pop


class TestSelection:
    def test_proportional_maximize(self):
        pop = evaluated_population([3000.0, 1000.0])
        rng = np.random.default_rng(0)
        first = sum(select_parent(pop, rng) is pop.members[0]
                    for _ in range(20000))
        assert first / 20000 == pytest.approx(0.75, abs=0.01)

    def test_minimize_transform(self):
        assert selection_score(8000.0, "minimize") == 1.0
        assert selection_score(4000.0, "minimize") == 4001.0
        pop = evaluated_population([8000.0, 4000.0], objective="minimize")
        rng = np.random.default_rng(1)
        second = sum(select_parent(pop, rng) is pop.members[1]
                     for _ in range(20000))
        assert second / 20000 == pytest.approx(4001 / 4002, abs=0.005)

    def test_single_member(self):
        pop = evaluated_population([5.0])
        rng = np.random.default_rng(2)
        assert select_parent(pop, rng) is pop.members[0]

    def test_score_floor(self):
        assert selection_score(0.5, "maximize") == 1.0
        assert selection_score(-100.0, "maximize") == 1.0


class TestGaGeneration:
    def evaluator(self, value=1.0, solved=False):
        return lambda genome: FakeResult(f=value, solved=solved)

    def test_size_invariant(self):
        rng = np.random.default_rng(3)
        pop = make_population("constant", 20, "maximize", rng)
        for g in pop.members:
            g.fitness = float(rng.uniform(0, 100))
        pop.refresh_best()
        for _ in range(30):
            ga_generation(pop, self.evaluator(50.0), rng)
            assert pop.size == 20

    def test_best_monotone_maximize(self):
        rng = np.random.default_rng(4)
        pop = make_population("constant", 15, "maximize", rng)
        for g in pop.members:
            g.fitness = float(rng.uniform(0, 100))
        pop.refresh_best()
        best = max(g.fitness for g in pop.members)
        for _ in range(40):
            ga_generation(pop, lambda g: FakeResult(float(rng.uniform(0, 120))),
                          rng)
            new_best = max(g.fitness for g in pop.members)
            assert new_best >= best
            best = new_best

    def test_best_monotone_minimize(self):
        rng = np.random.default_rng(5)
        pop = make_population("constant", 15, "minimize", rng)
        for g in pop.members:
            g.fitness = float(rng.uniform(100, 8000))
        pop.refresh_best()
        best = min(g.fitness for g in pop.members)
        for _ in range(40):
            ga_generation(pop,
                          lambda g: FakeResult(float(rng.uniform(100, 8000))),
                          rng)
            new_best = min(g.fitness for g in pop.members)
            assert new_best <= best
            best = new_best

    def test_worse_children_leave_population_unchanged(self):
        rng = np.random.default_rng(6)
        pop = evaluated_population([10.0, 20.0, 30.0, 40.0])
        before = list(pop.members)
        ga_generation(pop, self.evaluator(1.0), rng)
        assert pop.members == before

    def test_tie_break_removes_oldest(self):
        rng = np.random.default_rng(7)
        pop = evaluated_population([5.0, 5.0, 5.0])
        oldest_two = pop.members[:2]
        ga_generation(pop, self.evaluator(5.0), rng)
        for old in oldest_two:
            assert old not in pop.members

    def test_evaluator_failure_leaves_population_intact(self):
        rng = np.random.default_rng(8)
        pop = evaluated_population([1.0, 2.0, 3.0])
        before = list(pop.members)

        def boom(genome):
            raise RuntimeError("sensor fire")

        with pytest.raises(RuntimeError):
            ga_generation(pop, boom, rng)
        assert pop.members == before
        assert pop.size == 3


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(20)
        for kind in ("unipolar", "bipolar", "constant"):
            g = init_genome(kind, rng)
            g.fitness = 123.5
            g.solved = True
            back = genome_from_json(genome_to_json(g))
            assert back.kind == g.kind
            assert back.hidden_signs == g.hidden_signs
            assert back.connections == g.connections
            assert back.rates.as_tuple() == g.rates.as_tuple()
            assert back.fitness == g.fitness and back.solved == g.solved

    def test_stable_field_order(self):
        rng = np.random.default_rng(21)
        g = init_genome("constant", rng)
        text = genome_to_json(g)
        assert text == genome_to_json(genome_from_json(text))
        assert text.index('"kind"') < text.index('"neurons"')
        assert text.index('"neurons"') < text.index('"connections"')
        assert text.index('"connections"') < text.index('"rates"')

    def test_duplicate_sites_rejected(self):
        rng = np.random.default_rng(22)
        g = init_genome("constant", rng)
        data = genome_to_json(g)
        import json as _json
        payload = _json.loads(data)
        payload["connections"].append(payload["connections"][0])
        with pytest.raises(ValueError):
            genome_from_json(_json.dumps(payload))
