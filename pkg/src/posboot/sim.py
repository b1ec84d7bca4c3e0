"""Round-based work-to-stake bootstrap simulation with dynamic arrival.

Miners arrive over time, mine for stop_t rounds (one stake reward per
round, won with probability proportional to mining power), then the chain
switches to stake-proportional payouts. Each round records the joined
count and the centralization score of the current stake distribution,
evaluated against valuations equal to mining power (the truthful
baseline). No transfers occur in-simulation, so the per-round graph is
edgeless and both effective-stake conventions coincide.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParamError

MIN_POWER = 0.01


def parse_dist(spec: str) -> tuple[str, list[float]]:
    name, _, arg = spec.partition(":")
    try:
        params = [float(x) for x in arg.split(",")] if arg else []
    except ValueError:
        raise ParamError(f"bad distribution spec {spec!r}") from None
    return name.strip(), params


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    stop_t: int = 1000
    total_rounds: int = 1000
    r_b: float = 10.0
    chi: float = 1.0  # analyzer-side mining cost; does not move in-sim stake
    arrival: str = "chisq:3,12.8"  # df, scale; round = ceil(scale * X), min 1
    power_dist: str = "normal:7,3"
    pos_payout: str = "deterministic"  # or "stochastic"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ParamError("need at least 2 miners")
        if not 0 <= self.stop_t <= self.total_rounds:
            raise ParamError(
                f"stop_t={self.stop_t} must lie in [0, total_rounds={self.total_rounds}]"
            )
        if self.r_b <= 0:
            raise ParamError("r_b must be positive")
        if self.pos_payout not in ("deterministic", "stochastic"):
            raise ParamError(f"unknown pos_payout {self.pos_payout!r}")
        parse_dist(self.arrival)
        parse_dist(self.power_dist)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "stop_t": self.stop_t,
            "total_rounds": self.total_rounds,
            "r_b": self.r_b,
            "chi": self.chi,
            "arrival": self.arrival,
            "power_dist": self.power_dist,
            "pos_payout": self.pos_payout,
            "seed": self.seed,
        }


def sample_arrivals(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Per-miner arrival rounds: ceil(scale * X) clipped to round 1."""
    name, params = parse_dist(config.arrival)
    if name != "chisq":
        raise ParamError(f"unsupported arrival distribution {name!r}")
    df, scale = params
    if df <= 0 or scale < 0:
        raise ParamError(f"bad arrival parameters df={df}, scale={scale}")
    draws = np.ceil(scale * rng.chisquare(df, config.n))
    return np.maximum(draws, 1).astype(np.int64)


def sample_powers(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Per-miner mining power, strictly positive.

    Normal draws are resampled until above MIN_POWER; the uniform lower
    bound is clamped to MIN_POWER; exponential draws pass through.
    """
    name, params = parse_dist(config.power_dist)
    if name == "normal":
        mu, sigma = params
        powers = rng.normal(mu, sigma, config.n)
        bad = powers <= MIN_POWER
        while bad.any():
            powers[bad] = rng.normal(mu, sigma, int(bad.sum()))
            bad = powers <= MIN_POWER
        return powers
    if name == "uniform":
        lo, hi = params
        lo = max(lo, MIN_POWER)
        if hi <= lo:
            raise ParamError(f"uniform bounds collapse after clamping: ({lo}, {hi})")
        return rng.uniform(lo, hi, config.n)
    if name in ("exp", "exponential"):
        (lam,) = params
        if lam <= 0:
            raise ParamError("exponential rate must be positive")
        return rng.exponential(1.0 / lam, config.n)
    raise ParamError(f"unsupported power distribution {name!r}")


def _omega_of(stakes: np.ndarray, powers: np.ndarray) -> float:
    """Half-L1 distance of scaled stakes from uniform; before any stake
    exists the distribution is maximally degenerate, scored 1 - 1/n (the
    supremum over non-negative profiles)."""
    n = stakes.shape[0]
    x = stakes / powers
    total = x.sum()
    if total == 0.0:
        return 1.0 - 1.0 / n
    return float(0.5 * np.abs(x / total - 1.0 / n).sum())


@dataclass
class SimTrajectory:
    config: SimConfig
    rounds: np.ndarray  # shape (R,)
    joined: np.ndarray  # shape (R,)
    omega: np.ndarray  # shape (R,)
    stakes_by_round: np.ndarray  # shape (R, n)
    powers: np.ndarray
    arrivals: np.ndarray

    @property
    def final_stakes(self) -> np.ndarray:
        return self.stakes_by_round[-1]

    def records(self):
        for t, j, om in zip(self.rounds, self.joined, self.omega):
            yield int(t), int(j), float(om)


def run(config: SimConfig) -> SimTrajectory:
    """Simulate total_rounds rounds; same seed, same trajectory.

    Mining phase (rounds 1..stop_t): if anyone has joined, one winner is
    drawn with probability power/total joined power and gains r_b; rounds
    with nobody joined mint nothing and consume no randomness.

    Stake phase (rounds stop_t+1..): deterministic mode grows every stake
    by the common factor 1 + r_b/total, which leaves scaled stakes
    unchanged, so the score recorded at stop_t is carried forward
    unchanged; stochastic mode draws one stake-proportional winner per
    round and rescores.
    """
    rng = np.random.default_rng(config.seed)
    arrivals = sample_arrivals(config, rng)
    powers = sample_powers(config, rng)
    n = config.n

    stakes = np.zeros(n)
    joined_mask = np.zeros(n, dtype=bool)
    joined_idx = np.empty(0, dtype=np.int64)
    cum_power = np.empty(0)

    rounds = np.arange(1, config.total_rounds + 1, dtype=np.int64)
    joined_counts = np.zeros_like(rounds)
    omegas = np.zeros(config.total_rounds)
    stakes_by_round = np.zeros((config.total_rounds, n))

    frozen_omega: float | None = None
    for t in rounds:
        newly = (~joined_mask) & (arrivals <= t)
        if newly.any():
            joined_mask |= newly
            joined_idx = np.flatnonzero(joined_mask)
            cum_power = np.cumsum(powers[joined_idx])

        if t <= config.stop_t:
            if joined_idx.size:
                u = rng.random() * cum_power[-1]
                winner = joined_idx[np.searchsorted(cum_power, u, side="right")]
                stakes[winner] += config.r_b
            omega = _omega_of(stakes, powers)
        else:
            total = stakes.sum()
            if config.pos_payout == "deterministic":
                if frozen_omega is None:
                    # growing every stake by a common factor leaves scaled
                    # stakes unchanged, so the stop-round score holds exactly
                    frozen_omega = (
                        omegas[config.stop_t - 1]
                        if config.stop_t >= 1
                        else _omega_of(stakes, powers)
                    )
                if total > 0:
                    stakes *= 1.0 + config.r_b / total
                omega = frozen_omega
            else:
                if total > 0:
                    u = rng.random() * total
                    winner = int(np.searchsorted(np.cumsum(stakes), u, side="right"))
                    stakes[winner] += config.r_b
                omega = _omega_of(stakes, powers)

        i = t - 1
        joined_counts[i] = int(joined_mask.sum())
        omegas[i] = omega
        stakes_by_round[i] = stakes

    return SimTrajectory(
        config=config,
        rounds=rounds,
        joined=joined_counts,
        omega=omegas,
        stakes_by_round=stakes_by_round,
        powers=powers,
        arrivals=arrivals,
    )


def first_round_below(trajectory: SimTrajectory, z: float) -> int | None:
    """Earliest round whose score is <= z; None if never within the horizon."""
    if not 0 < z <= 1:
        raise ParamError(f"z must lie in (0,1], got {z}")
    hits = np.flatnonzero(trajectory.omega <= z)
    return int(trajectory.rounds[hits[0]]) if hits.size else None


@dataclass(frozen=True)
class SweepRow:
    z: float
    mean_round: float  # nan when no seed reached z
    std_round: float
    seeds_reached: int


def sweep(config: SimConfig, z_list, num_seeds: int = 10) -> list[SweepRow]:
    """Mean and sample std of the first round at or below each z, across
    num_seeds trajectories seeded config.seed, config.seed+1, ...

    z_list must be non-empty and strictly descending.
    """
    z_values = list(z_list)
    if not z_values:
        raise ParamError("z_list must be non-empty")
    if any(b >= a for a, b in zip(z_values, z_values[1:])):
        raise ParamError("z_list must be strictly descending")
    trajectories = [run(replace(config, seed=config.seed + i)) for i in range(num_seeds)]
    out = []
    for z in z_values:
        found = [first_round_below(tr, z) for tr in trajectories]
        found = [r for r in found if r is not None]
        if found:
            mean = float(np.mean(found))
            std = float(np.std(found, ddof=1)) if len(found) > 1 else 0.0
        else:
            mean = float("nan")
            std = float("nan")
        out.append(SweepRow(z=z, mean_round=mean, std_round=std, seeds_reached=len(found)))
    return out


# --- file formats ---

TRAJECTORY_HEADER = ["round", "joined", "omega"]
SWEEP_HEADER = ["z", "mean_round", "std", "seeds"]


def write_trajectory(trajectory: SimTrajectory, csv_path) -> None:
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for t, j, om in trajectory.records():
            writer.writerow([t, j, repr(om)])


def trajectory_sidecar(trajectory: SimTrajectory) -> dict:
    return {
        "schema": 1,
        "config": trajectory.config.to_json(),
        "final_stakes": [float(s) for s in trajectory.final_stakes],
    }


def read_trajectory(csv_path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a round,joined,omega file; raises ParamError naming the file
    on schema mismatch."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRAJECTORY_HEADER:
            raise ParamError(f"{csv_path}: expected header {','.join(TRAJECTORY_HEADER)}")
        rows = [(int(r[0]), int(r[1]), float(r[2])) for r in reader if r]
    rounds = np.array([r[0] for r in rows], dtype=np.int64)
    joined = np.array([r[1] for r in rows], dtype=np.int64)
    omega = np.array([r[2] for r in rows])
    return rounds, joined, omega


def write_sweep(rows, csv_path) -> None:
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([row.z, repr(row.mean_round), repr(row.std_round), row.seeds_reached])
