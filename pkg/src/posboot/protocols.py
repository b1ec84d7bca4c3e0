"""Closed-form incentive analyzers for stake-bootstrapping protocols.

The utility model is reward minus a centralization penalty:
b * theta_hat - omega * g(theta), with g non-decreasing. The analyzers
plug protocol-specific rewards into that model and decide individual
rationality (participating beats abstaining) and incentive compatibility
(truthful reporting beats deviating), returning the profitable deviation
as a witness when a check fails.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParamError


def linear_penalty(theta):
    """Default centralization-cost shape g(theta) = theta."""
    return theta


def utility(theta_hat, b, omega_value, g, theta):
    """b * theta_hat - omega * g(theta). Arithmetic is type-polymorphic, so
    Fractions flow through exactly."""
    return b * theta_hat - omega_value * g(theta)


@dataclass(frozen=True)
class UtilityParams:
    """Bundled utility-model inputs: reward coefficient b, current
    centralization score, and the penalty shape g (non-decreasing)."""

    b: float
    omega_value: float
    g: object = linear_penalty

    @classmethod
    def from_protocol(cls, r_b, b_spent, gamma, omega_value, g=linear_penalty):
        """Fold the protocol constants into b = (r_b - b_spent) * gamma."""
        return cls(b=(r_b - b_spent) * gamma, omega_value=omega_value, g=g)

    def evaluate(self, theta_hat, theta):
        return utility(theta_hat, self.b, self.omega_value, self.g, theta)


@dataclass(frozen=True)
class AirdropCheck:
    honest_utility: float
    sybil_utility: float
    is_ic: bool


def airdrop_ic_check(b_airdrop, k_sybils: int, omega_value=0.0, g=linear_penalty, theta=1.0) -> AirdropCheck:
    """Fixed per-identity rewards under k forged identities.

    Forged identities carry no on-chain link to their owner, so the
    centralization penalty is unchanged while the reward multiplies by k;
    honesty can only hold for k <= 1 or zero reward.
    """
    if k_sybils < 1:
        raise ParamError("k_sybils must be >= 1")
    if b_airdrop < 0:
        raise ParamError("b_airdrop must be >= 0")
    penalty = omega_value * g(theta)
    honest = b_airdrop - penalty
    sybil = b_airdrop * k_sybils - penalty
    return AirdropCheck(honest, sybil, is_ic=honest >= sybil)


@dataclass(frozen=True)
class PobParams:
    """Burn a units of the old token (worth d each) for b_tokens new tokens
    (worth e each); gamma scales value into utility units."""

    a: float
    b_tokens: float
    d: float
    e: float
    gamma: float = 1.0

    def __post_init__(self):
        if min(self.a, self.b_tokens, self.d, self.e, self.gamma) <= 0:
            raise ParamError("all burn parameters must be positive")


@dataclass(frozen=True)
class PobCheck:
    participate_utility: float
    abstain_utility: float
    is_ir: bool


def pob_ir_check(params: PobParams, omega_value=0.0, g=linear_penalty, theta=1.0) -> PobCheck:
    """Burning under a one-way peg: the new token's value is capped at the
    burned value (b*e <= a*d), so participating nets at most zero before
    the centralization penalty. Inputs exceeding the cap are rejected as
    an invalid market."""
    value_gap = params.b_tokens * params.e - params.a * params.d
    if value_gap > 0:
        raise ParamError(
            f"b*e={params.b_tokens * params.e} exceeds a*d={params.a * params.d}; "
            "violates the one-way peg"
        )
    penalty = omega_value * g(theta)
    participate = value_gap * params.gamma * theta - penalty
    abstain = -penalty
    return PobCheck(participate, abstain, is_ir=participate > abstain)


@dataclass(frozen=True)
class W2sbParams:
    """Work-to-stake bootstrap economy: per-miner power m, per-unit-power
    round cost chi, block reward r_b."""

    m: tuple[float, ...]
    chi: float
    r_b: float

    def __post_init__(self):
        if len(self.m) < 1 or any(mi <= 0 for mi in self.m):
            raise ParamError("mining powers must be positive")
        if self.chi < 0 or self.r_b < 0:
            raise ParamError("chi and r_b must be >= 0")

    @property
    def total(self):
        return sum(self.m)

    @property
    def m_min(self):
        return min(self.m)


def w2sb_conditions(params: W2sbParams) -> tuple[bool, bool]:
    """(ir_ok, ic_ok): mining at truthful power is profitable when
    chi*M/r_b <= 1, and over-reporting is unprofitable when
    chi*M/r_b >= 1 - m_min/M."""
    if params.r_b <= 0:
        raise ParamError("r_b must be positive for the condition ratio")
    ratio = params.chi * params.total / params.r_b
    ir_ok = ratio <= 1
    ic_ok = ratio >= 1 - params.m_min / params.total
    return ir_ok, ic_ok


def w2sb_deviation_utility(params: W2sbParams, i: int, a, direction: str):
    """Expected utility change for miner i shifting power by a.

    direction="down" (power m_i - a):
        (a/(M-a)) * ((M-a)*chi - r_b)
    direction="up" (power m_i + a):
        (a*r_b/(M+a)) * (1 - m_i/M - chi*(M+a)/r_b)
    Both are negative whenever the participation and truthfulness
    conditions hold.
    """
    if not 0 <= i < len(params.m):
        raise ParamError(f"miner index {i} out of range")
    if a <= 0:
        raise ParamError("deviation a must be positive")
    m_i = params.m[i]
    M = params.total
    if direction == "down":
        if a >= m_i:
            raise ParamError(f"downward deviation {a} >= miner power {m_i}")
        return (a / (M - a)) * ((M - a) * params.chi - params.r_b)
    if direction == "up":
        if params.r_b <= 0:
            raise ParamError("r_b must be positive")
        return (a * params.r_b / (M + a)) * (1 - m_i / M - params.chi * (M + a) / params.r_b)
    raise ParamError(f"direction must be 'up' or 'down', got {direction!r}")


def w2sb_find_profitable_deviation(
    params: W2sbParams, grid: int = 24
) -> tuple[int, float, str, float] | None:
    """Search both deviation directions for a strictly profitable move.

    Returns (miner index, a, direction, utility gain) or None. Upward
    gains, when they exist, occur for a below
    (r_b/chi)*(1 - m_i/M) - M, so that point's midpoint is probed along
    with a geometric grid.
    """
    M = params.total
    best = None
    for i, m_i in enumerate(params.m):
        candidates = [m_i * k / (grid + 1) for k in range(1, grid + 1)]
        for a in candidates:
            gain = w2sb_deviation_utility(params, i, a, "down")
            if gain > 0 and (best is None or gain > best[3]):
                best = (i, a, "down", gain)
        up_candidates = [M * (2.0 ** (k - grid // 2)) for k in range(grid)]
        if params.chi > 0:
            a_max = (params.r_b / params.chi) * (1 - m_i / M) - M
            if a_max > 0:
                up_candidates.append(a_max / 2)
        for a in up_candidates:
            gain = w2sb_deviation_utility(params, i, a, "up")
            if gain > 0 and (best is None or gain > best[3]):
                best = (i, a, "up", gain)
    return best


def round_count_lower_bound(psi_t0, t0, r_b, chi, z, x):
    """Rounds needed before the centralization score of a work-to-stake
    bootstrap can fall to z, given fraction psi_t0 of players joined by
    round t0 and tail mass x < z: psi*t0*r_b/((z-x)*chi) + t0."""
    if not 0 < psi_t0 <= 1:
        raise ParamError(f"psi_t0 must lie in (0,1], got {psi_t0}")
    if t0 < 0:
        raise ParamError("t0 must be >= 0")
    if chi <= 0:
        raise ParamError("chi must be positive")
    if r_b < 0:
        raise ParamError("r_b must be >= 0")
    if not 0 < x < z <= 1:
        raise ParamError(f"need 0 < x < z <= 1, got x={x}, z={z}")
    return psi_t0 * t0 * r_b / ((z - x) * chi) + t0
