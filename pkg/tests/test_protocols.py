import random
from fractions import Fraction

import pytest

from posboot.errors import ParamError
from posboot.protocols import (
    PobParams,
    UtilityParams,
    W2sbParams,
    airdrop_ic_check,
    linear_penalty,
    pob_ir_check,
    round_count_lower_bound,
    utility,
    w2sb_conditions,
    w2sb_deviation_utility,
    w2sb_find_profitable_deviation,
)


def sample_satisfying(rng):
    """Random economy meeting both the participation and truthfulness
    conditions: ratio chi*M/r_b drawn inside [1 - m_min/M, 1]."""
    n = rng.randint(2, 10)
    m = tuple(rng.uniform(0.5, 10.0) for _ in range(n))
    M = sum(m)
    lo = 1 - min(m) / M
    ratio = rng.uniform(lo, 1.0)
    r_b = rng.uniform(1.0, 10.0)
    return W2sbParams(m=m, chi=ratio * r_b / M, r_b=r_b)


def sample_violating(rng):
    """Random economy violating the truthfulness condition (ratio below
    1 - m_min/M) while keeping participation profitable."""
    while True:
        n = rng.randint(2, 10)
        m = tuple(rng.uniform(0.5, 10.0) for _ in range(n))
        M = sum(m)
        hi = 1 - min(m) / M
        if hi < 0.02:
            continue
        ratio = rng.uniform(0.01, hi * 0.98)
        r_b = rng.uniform(1.0, 10.0)
        return W2sbParams(m=m, chi=ratio * r_b / M, r_b=r_b)


class TestUtility:
    def test_abstain_in_flat_system(self):
        assert utility(0.0, 2.0, 0.0, linear_penalty, 5.0) == 0.0

    def test_plugin(self):
        assert utility(3.0, 2.0, 0.5, linear_penalty, 4.0) == pytest.approx(4.0)

    def test_zero_score_ignores_theta(self):
        for theta in (0.0, 1.0, 100.0):
            assert utility(3.0, 2.0, 0.0, linear_penalty, theta) == pytest.approx(6.0)

    def test_params_fold_protocol_constants(self):
        params = UtilityParams.from_protocol(r_b=5.0, b_spent=1.0, gamma=0.5, omega_value=0.5)
        assert params.b == pytest.approx(2.0)
        assert params.evaluate(theta_hat=3.0, theta=4.0) == pytest.approx(4.0)


class TestAirdrop:
    def test_three_identities(self):
        check = airdrop_ic_check(10.0, 3, omega_value=0.0)
        assert (check.honest_utility, check.sybil_utility) == (10.0, 30.0)
        assert not check.is_ic

    def test_single_identity_degenerate(self):
        assert airdrop_ic_check(10.0, 1).is_ic

    def test_zero_reward(self):
        check = airdrop_ic_check(0.0, 5)
        assert check.honest_utility == check.sybil_utility
        assert check.is_ic

    @pytest.mark.parametrize("k", [2, 3, 10, 100])
    def test_never_ic_with_positive_reward(self, k):
        assert not airdrop_ic_check(1.0, k).is_ic


class TestPob:
    def test_losing_burn(self):
        params = PobParams(a=1.0, b_tokens=1.0, d=2.0, e=1.0, gamma=1.0)
        check = pob_ir_check(params, omega_value=0.0, theta=5.0)
        assert check.participate_utility == pytest.approx(-5.0)
        assert check.abstain_utility == 0.0
        assert not check.is_ir

    def test_boundary_peg_still_fails_strictly(self):
        params = PobParams(a=1.0, b_tokens=2.0, d=2.0, e=1.0)
        check = pob_ir_check(params, theta=3.0)
        assert check.participate_utility == pytest.approx(check.abstain_utility)
        assert not check.is_ir

    def test_zero_theta(self):
        params = PobParams(a=1.0, b_tokens=1.0, d=2.0, e=1.0)
        check = pob_ir_check(params, theta=0.0)
        assert check.participate_utility == check.abstain_utility

    def test_peg_violation_rejected(self):
        with pytest.raises(ParamError, match="one-way peg"):
            pob_ir_check(PobParams(a=1.0, b_tokens=3.0, d=1.0, e=1.0))

    def test_never_ir_under_strict_peg(self):
        rng = random.Random(0)
        for _ in range(200):
            a, d = rng.uniform(0.5, 5), rng.uniform(0.5, 5)
            e = rng.uniform(0.5, 5)
            b = rng.uniform(0.1, 0.999) * a * d / e
            check = pob_ir_check(
                PobParams(a=a, b_tokens=b, d=d, e=e, gamma=rng.uniform(0.5, 2)),
                theta=rng.uniform(0.1, 10),
            )
            assert not check.is_ir


class TestW2sbConditions:
    def test_boundary_economy(self):
        params = W2sbParams(m=(1.0, 1.0, 1.0, 1.0), chi=1.0, r_b=4.0)
        assert w2sb_conditions(params) == (True, True)

    def test_cheap_mining_invites_overreporting(self):
        params = W2sbParams(m=(1.0, 1.0, 1.0, 1.0), chi=0.5, r_b=4.0)
        assert w2sb_conditions(params) == (True, False)

    def test_free_mining(self):
        params = W2sbParams(m=(1.0, 1.0), chi=0.0, r_b=4.0)
        ir_ok, ic_ok = w2sb_conditions(params)
        assert ir_ok and not ic_ok


class TestW2sbDeviation:
    def test_down_example(self):
        params = W2sbParams(m=(1.0, 1.0, 1.0, 1.0), chi=1.0, r_b=4.0)
        value = w2sb_deviation_utility(params, 0, 0.5, "down")
        assert value == pytest.approx((0.5 / 3.5) * (3.5 - 4.0))

    def test_up_example_with_violated_condition(self):
        params = W2sbParams(m=(1.0, 1.0, 1.0, 1.0), chi=0.5, r_b=4.0)
        assert w2sb_deviation_utility(params, 0, 1.0, "up") == pytest.approx(0.1)

    def test_vanishing_deviation(self):
        params = W2sbParams(m=(2.0, 3.0), chi=0.3, r_b=2.0)
        for direction in ("up", "down"):
            assert abs(w2sb_deviation_utility(params, 0, 1e-9, direction)) < 1e-8

    def test_down_requires_a_below_power(self):
        params = W2sbParams(m=(1.0, 2.0), chi=0.1, r_b=1.0)
        with pytest.raises(ParamError):
            w2sb_deviation_utility(params, 0, 1.0, "down")

    def test_satisfying_economies_never_profit(self):
        rng = random.Random(17)
        for _ in range(1000):
            params = sample_satisfying(rng)
            i = rng.randrange(len(params.m))
            a_down = rng.uniform(1e-6, params.m[i] * 0.999)
            a_up = rng.uniform(1e-6, 3 * params.total)
            assert w2sb_deviation_utility(params, i, a_down, "down") <= 0
            assert w2sb_deviation_utility(params, i, a_up, "up") <= 0

    def test_violating_economies_have_profitable_up_move(self):
        rng = random.Random(23)
        for _ in range(1000):
            params = sample_violating(rng)
            found = w2sb_find_profitable_deviation(params)
            assert found is not None
            i, a, direction, gain = found
            assert direction == "up" and gain > 0
            assert w2sb_deviation_utility(params, i, a, direction) == gain

    def test_no_witness_in_satisfying_economy(self):
        params = W2sbParams(m=(1.0, 1.0, 1.0, 1.0), chi=1.0, r_b=4.0)
        assert w2sb_find_profitable_deviation(params) is None


class TestTheorem3Bound:
    def test_reference_plugin_exact_fraction(self):
        value = round_count_lower_bound(Fraction(9, 10), 10, 10, 1, Fraction(1, 2), Fraction(1, 10))
        assert value == 235

    def test_reference_plugin_float(self):
        assert round_count_lower_bound(0.9, 10, 10, 1, 0.5, 0.1) == pytest.approx(235.0, abs=1e-9)

    def test_no_reward(self):
        assert round_count_lower_bound(0.9, 10, 0.0, 1.0, 0.5, 0.1) == 10

    def test_doubling_chi_halves_first_term(self):
        t0 = 10
        lo = round_count_lower_bound(0.9, t0, 10, 2.0, 0.5, 0.1) - t0
        hi = round_count_lower_bound(0.9, t0, 10, 1.0, 0.5, 0.1) - t0
        assert hi == pytest.approx(2 * lo)

    def test_monotone_in_z(self):
        values = [round_count_lower_bound(0.9, 10, 10, 1, z, 0.05) for z in (0.9, 0.7, 0.5, 0.3, 0.1)]
        assert values == sorted(values)

    def test_monotone_in_reward_cost_ratio(self):
        base = round_count_lower_bound(0.9, 10, 5, 1, 0.5, 0.1)
        assert round_count_lower_bound(0.9, 10, 10, 1, 0.5, 0.1) > base
        assert round_count_lower_bound(0.9, 10, 5, 2, 0.5, 0.1) < base

    def test_invalid_target(self):
        with pytest.raises(ParamError):
            round_count_lower_bound(0.9, 10, 10, 1, 0.1, 0.5)
        with pytest.raises(ParamError):
            round_count_lower_bound(0.9, 10, 10, 0.0, 0.5, 0.1)
        with pytest.raises(ParamError):
            round_count_lower_bound(1.5, 10, 10, 1, 0.5, 0.1)
