"""Centralization metrics over stake distributions and transfer graphs.

The headline score, cnorm, is half the L1 distance between the scaled-stake
vector and the uniform vector: 0 means every player holds effective stake
exactly proportional to its valuation. Gini, entropy, and the minimum
controlling set size (nakamoto) are the conventional baselines; they see
only the current stake distribution, never the transfer history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateProfileError, MetricDomainError
from .ledger import PosGraph, effective_stakes

DEGENERATE_REL_TOL = 1e-9


@dataclass(frozen=True)
class ValuationProfile:
    """Private valuations theta and reported valuations theta_hat, aligned
    with a player list."""

    theta: tuple[float, ...]
    theta_hat: tuple[float, ...]

    def __post_init__(self):
        if len(self.theta) != len(self.theta_hat):
            raise ValueError("theta and theta_hat length mismatch")
        if any(t < 0 for t in self.theta_hat):
            raise ValueError("theta_hat must be non-negative")

    @property
    def n(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class MetricReport:
    cnorm: float
    cnorm_worstcase: float
    gini: float
    entropy: float
    nakamoto: int
    convention: str
    tau_th: float

    def to_json(self) -> dict:
        return {
            "cnorm": round(self.cnorm, 6),
            "cnorm_worstcase": round(self.cnorm_worstcase, 6),
            "gini": round(self.gini, 6),
            "entropy": round(self.entropy, 6),
            "nakamoto": self.nakamoto,
            "convention": self.convention,
            "tau_th": round(self.tau_th, 6),
        }


def scaled_stake(omega, theta) -> list[float]:
    """Normalize per-unit-valuation stakes omega_i/theta_i to sum to 1.

    Raises DegenerateProfileError when the signed sum of ratios is
    negligible relative to their magnitudes, since the normalization is
    then meaningless.
    """
    if len(omega) != len(theta):
        raise ValueError("omega and theta length mismatch")
    if any(t <= 0 for t in theta):
        raise MetricDomainError("theta must be strictly positive")
    ratios = [o / t for o, t in zip(omega, theta)]
    total = sum(ratios)
    scale = sum(abs(r) for r in ratios)
    if scale == 0 or abs(total) < DEGENERATE_REL_TOL * scale:
        raise DegenerateProfileError(
            f"sum of omega/theta is degenerate ({total} vs magnitude {scale})"
        )
    return [r / total for r in ratios]


def cnorm(beta) -> float:
    """Half the L1 deviation of scaled stakes from the uniform 1/n vector."""
    n = len(beta)
    if n == 0:
        raise MetricDomainError("empty profile")
    target = 1.0 / n
    return 0.5 * sum(abs(b - target) for b in beta)


def cnorm_at(graph: PosGraph, theta, convention: str = "paper") -> float:
    """cnorm of a graph evaluated at the given valuations."""
    return cnorm(scaled_stake(effective_stakes(graph, convention), theta))


def cnorm_worstcase(
    graph: PosGraph,
    theta_box,
    grid: int = 5,
    convention: str = "paper",
    max_passes: int = 8,
) -> tuple[float, tuple[float, ...]]:
    """Bounded search for the largest cnorm over a box of valuation profiles.

    theta_box is one (lo, hi) interval per player, both strictly positive.
    A full Cartesian grid is exponential in n, so the search is a
    deterministic coordinate ascent over per-player log-spaced grids,
    started from the box's geometric midpoint; the result is therefore at
    least the score at that midpoint. Profiles whose ratio sum triggers
    the degenerate-profile guard are skipped.
    """
    n = graph.n
    if len(theta_box) != n:
        raise ValueError("theta_box length must match player count")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    for lo, hi in theta_box:
        if not (0 < lo <= hi):
            raise ValueError(f"invalid interval ({lo}, {hi})")

    omega = effective_stakes(graph, convention)
    grids = [
        [math.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * k / (grid - 1)) for k in range(grid)]
        if hi > lo
        else [lo]
        for lo, hi in theta_box
    ]

    def evaluate(theta) -> float | None:
        try:
            return cnorm(scaled_stake(omega, theta))
        except DegenerateProfileError:
            return None

    current = [math.sqrt(lo * hi) for lo, hi in theta_box]
    best = evaluate(current)
    for _ in range(max_passes):
        improved = False
        for i in range(n):
            keep = current[i]
            best_val = keep
            for cand in grids[i]:
                current[i] = cand
                score = evaluate(current)
                if score is not None and (best is None or score > best + 1e-15):
                    best = score
                    best_val = cand
                    improved = True
            current[i] = best_val
        if not improved:
            break
    if best is None:
        raise MetricDomainError("no feasible profile in the search box")
    return best, tuple(current)


def stake_fractions(graph: PosGraph) -> list[float]:
    """Current stakes normalized to sum to 1."""
    total = sum(graph.stakes)
    if total <= 0:
        raise MetricDomainError("total stake must be positive")
    return [c / total for c in graph.stakes]


def _check_shares(shares, require_unit_sum: bool) -> None:
    if any(s < 0 for s in shares):
        raise MetricDomainError("shares must be non-negative")
    if require_unit_sum and abs(sum(shares) - 1.0) > 1e-9:
        raise MetricDomainError(f"shares must sum to 1, got {sum(shares)}")


def entropy(shares) -> float:
    """Shannon entropy of the share vector, normalized to [0, 1] by log n."""
    n = len(shares)
    if n < 2:
        raise MetricDomainError("entropy needs at least 2 players")
    _check_shares(shares, require_unit_sum=True)
    acc = 0.0
    for s in shares:
        if s > 0:
            acc -= s * math.log(s)
    return acc / math.log(n)


def gini(shares) -> float:
    """Mean absolute pairwise share difference, halved: sum|b_i-b_j|/(2n)."""
    n = len(shares)
    if n == 0:
        raise MetricDomainError("empty share vector")
    _check_shares(shares, require_unit_sum=False)
    # sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i) over ascending order
    ordered = sorted(shares)
    pair_sum = 2.0 * sum((2 * (i + 1) - n - 1) * x for i, x in enumerate(ordered))
    return pair_sum / (2.0 * n)


def nakamoto(shares, tau_th: float) -> int:
    """Size of the smallest player set whose shares strictly exceed tau_th.

    Greedy accumulation over descending shares is optimal here: any set of
    size k has share sum at most the top-k sum.
    """
    if not (0 < tau_th < 1):
        raise MetricDomainError(f"tau_th must lie in (0,1), got {tau_th}")
    _check_shares(shares, require_unit_sum=True)
    cum = 0.0
    for count, s in enumerate(sorted(shares, reverse=True), start=1):
        cum += s
        if cum > tau_th:
            return count
    raise MetricDomainError(f"total share {cum} never exceeds tau_th={tau_th}")


def proportionality_epsilon_bound(alpha: float, beta_delta: float) -> float:
    """Proportionality bound implied by a centralization score of alpha:
    beta_max / beta_delta <= 1 + 2*alpha/beta_delta."""
    if beta_delta <= 0:
        raise MetricDomainError("beta_delta must be positive")
    return 2.0 * alpha / beta_delta


@dataclass(frozen=True)
class DecentralizationCheck:
    satisfied: bool
    epsilon_bound: float
    participation_ok: bool
    proportionality_ok: bool
    ratio: float
    beta_max: float
    beta_delta: float

    def to_json(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "epsilon_bound": round(self.epsilon_bound, 6),
            "participation_ok": self.participation_ok,
            "proportionality_ok": self.proportionality_ok,
            "ratio": round(self.ratio, 6),
            "beta_max": round(self.beta_max, 6),
            "beta_delta": round(self.beta_delta, 6),
        }


def percentile_rank(n: int, delta: float) -> int:
    """1-based descending rank of the delta-percentile player:
    ceil((1 - delta/100) * n), clamped to [1, n]."""
    rank = math.ceil((1.0 - delta / 100.0) * n)
    return min(max(rank, 1), n)


def check_decentralization(
    beta,
    joined: int,
    total: int,
    tau: float,
    delta: float,
    epsilon: float | None = None,
) -> DecentralizationCheck:
    """Participation + proportionality check on a scaled-stake vector.

    Participation holds when joined/total >= tau. Proportionality compares
    beta_max/beta_delta against 1 + epsilon; when epsilon is omitted the
    bound 2*cnorm(beta)/beta_delta is used, which the proportionality
    ratio can never exceed.
    """
    if not (0 < tau <= 1):
        raise MetricDomainError(f"tau must lie in (0,1], got {tau}")
    if not (0 <= delta <= 100):
        raise MetricDomainError(f"delta must lie in [0,100], got {delta}")
    n = len(beta)
    if n == 0:
        raise MetricDomainError("empty profile")
    ordered = sorted(beta, reverse=True)
    beta_max = ordered[0]
    beta_delta = ordered[percentile_rank(n, delta) - 1]
    if beta_delta <= 0:
        raise MetricDomainError(f"beta_delta={beta_delta} <= 0, bound undefined")
    alpha = cnorm(beta)
    bound = proportionality_epsilon_bound(alpha, beta_delta)
    ratio = beta_max / beta_delta
    participation_ok = total > 0 and joined / total >= tau
    proportionality_ok = ratio <= 1.0 + (bound if epsilon is None else epsilon)
    return DecentralizationCheck(
        satisfied=participation_ok and proportionality_ok,
        epsilon_bound=bound,
        participation_ok=participation_ok,
        proportionality_ok=proportionality_ok,
        ratio=ratio,
        beta_max=beta_max,
        beta_delta=beta_delta,
    )
