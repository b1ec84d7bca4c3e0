import math
import random

import pytest

from posboot.errors import ParamError
from posboot.game import (
    GeneratorParams,
    e_r,
    generate_scenario,
    metric_registry,
    run_game,
    run_trial,
    sample_valuations,
)
from posboot.ledger import effective_stakes
from posboot.metrics import cnorm, scaled_stake

E1_PARAMS = GeneratorParams(
    n=7,
    sybil_fraction=2.0 / 7.0,
    valuation_dist="fixed:12,5,5,5,5",
    transfer_fraction=5.0 / 6.0,
    min_edge_weight=1.0,
)


def make_scenario(seed=0, **overrides):
    params = GeneratorParams(**overrides) if overrides else GeneratorParams()
    return generate_scenario(params, random.Random(seed))


class TestGenerator:
    def test_reproduces_e1(self):
        scenario = generate_scenario(E1_PARAMS, random.Random(1))
        graph = scenario.attacked.graph
        assert sorted(zip(graph.players, graph.stakes)) == [
            ("p1", 2.0), ("p2", 5.0), ("p3", 5.0), ("p4", 5.0),
            ("p5", 5.0), ("p6", 5.0), ("p7", 5.0),
        ]
        assert graph.edge_map() == {("p1", "p2"): 5.0, ("p1", "p3"): 5.0}
        assert scenario.attacked.valuations.theta_hat == graph.stakes

    def test_single_recipient_full_split_doubles_sink_ratio(self):
        # one fresh identity receiving the whole moved amount: with reported
        # valuations equal to stakes, the sink's effective stake is twice
        # its stake under the inflow-minus-outflow convention
        params = GeneratorParams(
            n=4, sybil_fraction=0.25, valuation_dist="fixed:10,3,3",
            transfer_fraction=0.5, min_edge_weight=0.1,
        )
        scenario = generate_scenario(params, random.Random(3))
        graph = scenario.attacked.graph
        omega = dict(zip(graph.players, effective_stakes(graph, "paper")))
        stake = dict(zip(graph.players, graph.stakes))
        assert omega["p2"] == pytest.approx(2 * stake["p2"])

    def test_clean_state_scores_zero(self):
        for seed in range(20):
            scenario = make_scenario(seed)
            clean = scenario.clean
            beta = scaled_stake(
                effective_stakes(clean.graph, "paper"), clean.valuations.theta_hat
            )
            assert cnorm(beta) == 0.0

    def test_attacked_scores_above_sink_bound(self):
        for seed in range(50):
            scenario = make_scenario(seed)
            graph = scenario.attacked.graph
            theta_hat = scenario.attacked.valuations.theta_hat
            value = cnorm(scaled_stake(effective_stakes(graph, "paper"), theta_hat))
            w_min = min(e.weight for e in graph.edges)
            assert value >= w_min / (graph.n * max(theta_hat)) - 1e-12

    def test_attacked_edges_meet_minimum(self):
        scenario = make_scenario(4)
        total = sum(scenario.attacked.graph.stakes)
        assert all(e.weight >= 0.01 * total for e in scenario.attacked.graph.edges)

    def test_shared_players_and_stakes(self):
        scenario = make_scenario(5)
        assert scenario.clean.graph.players == scenario.attacked.graph.players
        assert scenario.clean.graph.stakes == scenario.attacked.graph.stakes
        assert scenario.clean.graph.edges == ()

    def test_infeasible_params(self):
        with pytest.raises(ParamError):
            generate_scenario(GeneratorParams(n=8, sybil_fraction=0.0), random.Random(0))
        with pytest.raises(ParamError):
            generate_scenario(GeneratorParams(n=2), random.Random(0))
        with pytest.raises(ParamError):
            generate_scenario(GeneratorParams(n=8, sybil_fraction=1.0), random.Random(0))

    def test_min_edge_weight_infeasible(self):
        with pytest.raises(ParamError, match="min edge weight"):
            generate_scenario(
                GeneratorParams(n=8, min_edge_weight=1e9), random.Random(0)
            )

    def test_deterministic_stream(self):
        a = generate_scenario(GeneratorParams(), random.Random(12))
        b = generate_scenario(GeneratorParams(), random.Random(12))
        assert a == b

    def test_sample_valuations_specs(self):
        rng = random.Random(0)
        assert all(1 <= v <= 10 for v in sample_valuations("uniform:1,10", 100, rng))
        assert all(v > 0 for v in sample_valuations("lognormal:0,0.5", 100, rng))
        assert sample_valuations("fixed:1,2,3", 3, rng) == [1.0, 2.0, 3.0]
        with pytest.raises(ParamError):
            sample_valuations("fixed:1,2", 3, rng)
        with pytest.raises(ParamError):
            sample_valuations("cauchy:0,1", 3, rng)


class TestErasure:
    def test_e1_clean_matches_fixture(self):
        scenario = generate_scenario(E1_PARAMS, random.Random(1))
        clean = e_r(scenario.attacked)
        assert clean.graph.edges == ()
        assert clean.graph.stakes == scenario.attacked.graph.stakes

    def test_idempotent(self):
        scenario = make_scenario(8)
        once = e_r(scenario.attacked)
        assert e_r(once) == once


class TestTrials:
    def test_cnorm_separates_e1(self):
        scenario = generate_scenario(E1_PARAMS, random.Random(1))
        registry = metric_registry()
        result = run_trial(scenario, registry["cnorm"], random.Random(0))
        assert result.correct
        values = sorted([result.v_a, result.v_b])
        assert values[0] == pytest.approx(0.0, abs=1e-12)
        assert values[1] == pytest.approx(8.0 / 7.0, abs=1e-9)

    @pytest.mark.parametrize("name", ["gini", "entropy", "nakamoto"])
    def test_baselines_tie_exactly(self, name):
        registry = metric_registry()
        for seed in range(10):
            scenario = make_scenario(seed)
            result = run_trial(scenario, registry[name], random.Random(seed))
            assert result.v_a == result.v_b

    def test_metric_error_marks_trial_failed(self):
        def broken(state):
            raise RuntimeError("boom")

        scenario = make_scenario(0)
        result = run_trial(scenario, broken, random.Random(0))
        assert not result.correct
        assert math.isnan(result.v_a)


class TestGame:
    def test_cnorm_wins_everything(self):
        result = run_game("cnorm", 20, GeneratorParams(), seed=7)
        assert result.successes == 20
        assert result.all_correct

    def test_constant_metric_is_coin_flip(self):
        wins = 0
        games = 400
        for seed in range(games):
            result = run_game(lambda s: 1.0, 1, GeneratorParams(), seed=seed)
            wins += result.successes
        assert wins / games == pytest.approx(0.5, abs=0.08)

    def test_gini_games_rarely_sweep(self):
        sweeps = sum(
            run_game("gini", 10, GeneratorParams(), seed=seed).all_correct
            for seed in range(60)
        )
        # each game is 10 fair coin flips: sweep probability 2^-10
        assert sweeps <= 2

    def test_seed_reproducibility(self):
        a = run_game("cnorm", 5, GeneratorParams(), seed=3)
        b = run_game("cnorm", 5, GeneratorParams(), seed=3)
        assert a.per_trial_values == b.per_trial_values

    def test_unknown_metric(self):
        with pytest.raises(ParamError, match="valid:"):
            run_game("hhi", 5, GeneratorParams(), seed=0)

    def test_kappa_must_be_positive(self):
        with pytest.raises(ParamError):
            run_game("cnorm", 0, GeneratorParams(), seed=0)
