"""Metric-robustness game: can a metric tell a stake-hiding system apart
from its edge-free twin?

A challenger builds a pair of systems with identical players and current
stakes: one produced by an attacker splitting stake across extra identities
(leaving transfer edges behind), and one with the edge history erased. The
pair is shuffled and a descriptor must point at the attacked slot using
only the metric's two values. Edge-blind metrics see identical values and
are reduced to coin flips; the transfer-aware score separates the pair on
every draw.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import ParamError
from .ledger import (
    GENESIS,
    PosGraph,
    TransferRecord,
    build_graph,
    effective_stakes,
    eliminate_cycles,
)
from .metrics import (
    ValuationProfile,
    cnorm,
    entropy,
    gini,
    nakamoto,
    scaled_stake,
    stake_fractions,
)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class SystemState:
    graph: PosGraph
    valuations: ValuationProfile


@dataclass(frozen=True)
class Scenario:
    attacked: SystemState
    clean: SystemState
    attacked_slot: int  # 0 or 1: which shuffled slot holds the attacked system

    def slots(self) -> tuple[SystemState, SystemState]:
        if self.attacked_slot == 0:
            return self.attacked, self.clean
        return self.clean, self.attacked


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for the attacked-system generator.

    The generator draws private valuations for the real players, allocates
    genesis stake proportionally, then has the largest holder split part of
    its stake to freshly created identities via transfers (a star of
    out-edges, so the graph is a DAG by construction). Reported valuations
    are set equal to the post-transfer stakes. This is one concrete choice
    of attacked-system distribution; it is echoed in result metadata.
    """

    n: int = 8
    sybil_fraction: float = 0.25
    min_edge_weight: float | None = None  # None: 1% of total stake
    transfer_fraction: float = 0.5
    valuation_dist: str = "uniform:1,10"

    def describe(self) -> dict:
        return {
            "n": self.n,
            "sybil_fraction": self.sybil_fraction,
            "min_edge_weight": self.min_edge_weight,
            "transfer_fraction": self.transfer_fraction,
            "valuation_dist": self.valuation_dist,
            "pattern": "largest-holder star split to fresh identities",
        }


def sample_valuations(spec: str, k: int, rng: random.Random) -> list[float]:
    """Draw k positive valuations from a "name:params" distribution spec."""
    name, _, arg = spec.partition(":")
    params = [float(x) for x in arg.split(",")] if arg else []
    if name == "uniform":
        lo, hi = params
        if not (0 < lo <= hi):
            raise ParamError(f"uniform bounds must be positive, got {params}")
        return [rng.uniform(lo, hi) for _ in range(k)]
    if name == "lognormal":
        mu, sigma = params
        return [rng.lognormvariate(mu, sigma) for _ in range(k)]
    if name == "fixed":
        if len(params) != k:
            raise ParamError(f"fixed distribution needs {k} values, got {len(params)}")
        if any(v <= 0 for v in params):
            raise ParamError("fixed valuations must be positive")
        return list(params)
    raise ParamError(f"unknown valuation distribution {spec!r}")


def generate_scenario(
    params: GeneratorParams,
    rng: random.Random,
) -> Scenario:
    """Build one shuffled (attacked, clean) pair.

    Raises ParamError when the requested split is infeasible: fewer than
    one sybil identity, no real players left, or a per-edge transfer below
    the minimum edge weight.
    """
    n = params.n
    if n < 3:
        raise ParamError("need at least 3 players")
    k = math.ceil(params.sybil_fraction * n)
    if k < 1:
        raise ParamError(f"sybil_fraction {params.sybil_fraction} yields no sybil identities")
    if k > n - 1:
        raise ParamError(f"{k} sybil identities leave no real players out of {n}")
    if not (0 < params.transfer_fraction < 1):
        raise ParamError("transfer_fraction must lie in (0,1)")

    real = n - k
    drawn = sample_valuations(params.valuation_dist, real, rng)
    attacker = max(range(real), key=lambda i: (drawn[i], -i))

    # player layout: attacker first, then its fresh identities, then the rest
    genesis = [drawn[attacker]] + [0.0] * k + [v for i, v in enumerate(drawn) if i != attacker]
    players = tuple(f"p{i + 1}" for i in range(n))

    total = sum(genesis)
    min_edge = params.min_edge_weight if params.min_edge_weight is not None else 0.01 * total
    if min_edge <= 0:
        raise ParamError("min_edge_weight must be positive")
    moved = params.transfer_fraction * genesis[0]
    slice_w = moved / k
    if slice_w < min_edge:
        raise ParamError(
            f"per-edge transfer {slice_w:.4g} below min edge weight {min_edge:.4g}; "
            "lower sybil_fraction or min_edge_weight"
        )

    records = [
        TransferRecord(0, GENESIS, players[i], g) for i, g in enumerate(genesis) if g > 0
    ]
    records += [TransferRecord(1, players[0], players[1 + j], slice_w) for j in range(k)]
    attacked_graph = eliminate_cycles(build_graph(records))
    assert all(e.weight >= min_edge for e in attacked_graph.edges) and attacked_graph.edges

    # reported valuations track post-transfer stakes; the metric sees these
    theta_hat = attacked_graph.stakes
    valuations = ValuationProfile(theta=theta_hat, theta_hat=theta_hat)
    attacked = SystemState(attacked_graph, valuations)
    return Scenario(
        attacked=attacked,
        clean=e_r(attacked),
        attacked_slot=rng.randrange(2),
    )


def e_r(state: SystemState) -> SystemState:
    """Erase transfer history: same players, stakes, and valuations, no edges."""
    return SystemState(state.graph.without_edges(), state.valuations)


def metric_registry(convention: str = "paper", tau_th: float = 1.0 / 3.0):
    """Named metric functions over a SystemState.

    cnorm reads the transfer graph through effective stakes at reported
    valuations; the baselines read only current stake fractions.
    """
    return {
        "cnorm": lambda s: cnorm(
            scaled_stake(effective_stakes(s.graph, convention), s.valuations.theta_hat)
        ),
        "gini": lambda s: gini(stake_fractions(s.graph)),
        "entropy": lambda s: entropy(stake_fractions(s.graph)),
        "nakamoto": lambda s: float(nakamoto(stake_fractions(s.graph), tau_th)),
    }


@dataclass(frozen=True)
class TrialResult:
    correct: bool
    v_a: float
    v_b: float


@dataclass
class GameResult:
    metric_name: str
    trials: int
    successes: int
    per_trial_values: list[tuple[float, float]] = field(default_factory=list)

    @property
    def all_correct(self) -> bool:
        return self.successes == self.trials

    def to_json(self) -> dict:
        return {
            "metric": self.metric_name,
            "trials": self.trials,
            "successes": self.successes,
            "all_correct": self.all_correct,
        }


def run_trial(scenario: Scenario, metric, rng: random.Random) -> TrialResult:
    """Evaluate the metric on both slots and guess that the larger value is
    the attacked system; exact ties are resolved by a seeded coin flip. A
    metric evaluation error counts as a failed trial."""
    slot_a, slot_b = scenario.slots()
    try:
        v_a = metric(slot_a)
        v_b = metric(slot_b)
    except Exception:
        return TrialResult(correct=False, v_a=float("nan"), v_b=float("nan"))
    if abs(v_a - v_b) < TIE_TOL:
        guess = rng.randrange(2)
    else:
        guess = 0 if v_a > v_b else 1
    return TrialResult(correct=guess == scenario.attacked_slot, v_a=v_a, v_b=v_b)


def run_game(
    metric,
    kappa: int,
    params: GeneratorParams,
    seed: int,
    metric_name: str | None = None,
    convention: str = "paper",
    tau_th: float = 1.0 / 3.0,
) -> GameResult:
    """Play kappa independent trials; the game counts as won only if every
    trial is guessed correctly. metric may be a registry name or a callable
    on SystemState. Identical seeds reproduce identical trial streams."""
    if kappa < 1:
        raise ParamError("kappa must be >= 1")
    if isinstance(metric, str):
        registry = metric_registry(convention=convention, tau_th=tau_th)
        if metric not in registry:
            raise ParamError(
                f"unknown metric {metric!r}; valid: {', '.join(sorted(registry))}"
            )
        metric_name = metric
        metric = registry[metric_name]
    elif metric_name is None:
        metric_name = getattr(metric, "__name__", "custom")

    master = random.Random(seed)
    result = GameResult(metric_name=metric_name, trials=kappa, successes=0)
    for _ in range(kappa):
        trial_rng = random.Random(master.getrandbits(64))
        scenario = generate_scenario(params, trial_rng)
        outcome = run_trial(scenario, metric, trial_rng)
        result.successes += outcome.correct
        result.per_trial_values.append((outcome.v_a, outcome.v_b))
    return result
