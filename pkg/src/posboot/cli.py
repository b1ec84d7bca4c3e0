"""Command-line front end: metrics, game, simulate, check, bound.

Every subcommand is deterministic given --seed (or the POSBOOT_SEED
environment variable), writes machine-readable JSON with a schema field,
and uses whole-file atomic writes. Exit codes: 0 success, 2 usage or
parse errors, 3 domain errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys

from . import game as game_mod
from . import metrics as metrics_mod
from . import protocols, sim
from .errors import DegenerateProfileError, LedgerError, MetricDomainError, ParamError
from .ledger import (
    build_graph,
    effective_stakes,
    eliminate_cycles,
    graph_to_json,
    read_ledger_file,
    write_json_atomic,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3

VALUATIONS_HEADER = ["player", "theta_hat", "theta"]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _default_seed() -> int:
    env = os.environ.get("POSBOOT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"POSBOOT_SEED must be an integer, got {env!r}", EXIT_USAGE) from None


def read_valuations_file(path, players) -> metrics_mod.ValuationProfile:
    """Parse player,theta_hat,theta rows covering exactly the given players."""
    values: dict[str, tuple[float, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != VALUATIONS_HEADER:
            raise CliError(
                f"{path}: line 1: expected header {','.join(VALUATIONS_HEADER)}", EXIT_USAGE
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise CliError(f"{path}: line {lineno}: expected 3 fields", EXIT_USAGE)
            try:
                values[row[0].strip()] = (float(row[1]), float(row[2]))
            except ValueError as exc:
                raise CliError(f"{path}: line {lineno}: {exc}", EXIT_USAGE) from None
    missing = [p for p in players if p not in values]
    if missing:
        raise CliError(f"{path}: missing valuations for players: {', '.join(missing)}", EXIT_USAGE)
    return metrics_mod.ValuationProfile(
        theta=tuple(values[p][1] for p in players),
        theta_hat=tuple(values[p][0] for p in players),
    )


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"{flag}: expected comma-separated numbers, got {text!r}", EXIT_USAGE) from None


def cmd_metrics(args) -> int:
    try:
        records = read_ledger_file(args.ledger)
    except LedgerError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    try:
        graph = eliminate_cycles(build_graph(records))
    except LedgerError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    profile = read_valuations_file(args.valuations, graph.players)

    omega = effective_stakes(graph, args.convention)
    beta = metrics_mod.scaled_stake(omega, profile.theta_hat)
    shares = (
        metrics_mod.stake_fractions(graph) if args.baselines_on == "stake" else beta
    )
    box = [(args.box[0] * th, args.box[1] * th) for th in profile.theta_hat]
    omega_star, theta_star = metrics_mod.cnorm_worstcase(
        graph, box, grid=args.grid, convention=args.convention
    )
    report = metrics_mod.MetricReport(
        cnorm=metrics_mod.cnorm(beta),
        cnorm_worstcase=omega_star,
        gini=metrics_mod.gini(shares),
        entropy=metrics_mod.entropy(shares),
        nakamoto=metrics_mod.nakamoto(shares, args.tau_th),
        convention=args.convention,
        tau_th=args.tau_th,
    )
    verdict = metrics_mod.check_decentralization(
        beta,
        joined=graph.n,
        total=args.total_players or graph.n,
        tau=args.tau,
        delta=args.delta,
        epsilon=args.epsilon,
    )
    payload = {
        "schema": 1,
        "n": graph.n,
        "report": report.to_json(),
        "worstcase_theta": [round(t, 6) for t in theta_star],
        "decentralization": {
            "tau": args.tau,
            "delta": args.delta,
            "epsilon": args.epsilon,
            **verdict.to_json(),
        },
    }
    if args.out:
        write_json_atomic(args.out, payload)
    if args.export_graph:
        write_json_atomic(args.export_graph, {"schema": 1, **graph_to_json(graph)})
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_game(args) -> int:
    if args.trials < 1:
        raise CliError("--trials must be >= 1", EXIT_USAGE)
    if args.repetitions < 1:
        raise CliError("--repetitions must be >= 1", EXIT_USAGE)
    names = [m.strip() for m in args.metric.split(",") if m.strip()]
    valid = sorted(game_mod.metric_registry())
    for name in names:
        if name not in valid:
            raise CliError(f"unknown metric {name!r}; valid: {', '.join(valid)}", EXIT_USAGE)
    params = game_mod.GeneratorParams(
        n=args.players,
        sybil_fraction=args.sybil_fraction,
        min_edge_weight=args.min_edge_weight,
        transfer_fraction=args.transfer_fraction,
    )
    seed = args.seed if args.seed is not None else _default_seed()
    master = random.Random(seed)
    games = []
    summary_rows = []
    for name in names:
        dk1 = 0
        trial_successes = 0
        for _ in range(args.repetitions):
            result = game_mod.run_game(
                name, args.trials, params, seed=master.getrandbits(64),
                convention=args.convention, tau_th=args.tau_th,
            )
            dk1 += result.all_correct
            trial_successes += result.successes
            games.append(result.to_json())
        summary_rows.append(
            {
                "metric": name,
                "kappa": args.trials,
                "games": args.repetitions,
                "dk1": dk1,
                "trial_success_rate": trial_successes / (args.trials * args.repetitions),
            }
        )
    payload = {
        "schema": 1,
        "seed": seed,
        "generator": params.describe(),
        "games": games,
        "summary": summary_rows,
    }
    if args.out:
        write_json_atomic(args.out, payload)
    print(f"{'metric':<10} {'kappa':>6} {'games':>6} {'D_k=1':>6} {'trial rate':>11}")
    for row in summary_rows:
        print(
            f"{row['metric']:<10} {row['kappa']:>6} {row['games']:>6} "
            f"{row['dk1']:>6} {row['trial_success_rate']:>11.4f}"
        )
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        config = sim.SimConfig(
            n=args.players,
            stop_t=args.stop,
            total_rounds=args.rounds,
            r_b=args.rb,
            chi=args.chi,
            arrival=args.arrival,
            power_dist=args.dist,
            pos_payout=args.pos,
            seed=seed,
        )
    except ParamError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None

    trajectory = sim.run(config)
    csv_path = f"{args.out}.csv"
    sim.write_trajectory(trajectory, csv_path)
    write_json_atomic(f"{args.out}.json", sim.trajectory_sidecar(trajectory))
    written = [csv_path, f"{args.out}.json"]

    for z in _parse_float_list(args.below, "--below") if args.below else []:
        hit = sim.first_round_below(trajectory, z)
        print(f"first round with omega <= {z}: {hit if hit is not None else 'never'}")

    if args.sweep:
        z_list = _parse_float_list(args.sweep, "--sweep")
        try:
            rows = sim.sweep(config, z_list, num_seeds=args.sweep_seeds)
        except ParamError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
        sweep_path = f"{args.out}_sweep.csv"
        sim.write_sweep(rows, sweep_path)
        written.append(sweep_path)
        for row in rows:
            print(
                f"z={row.z}: mean_round={row.mean_round:.1f} std={row.std_round:.1f} "
                f"({row.seeds_reached}/{args.sweep_seeds} seeds)"
            )
    print("wrote: " + " ".join(written))
    return EXIT_OK


def cmd_check(args) -> int:
    g = protocols.linear_penalty
    if args.protocol == "airdrop":
        check = protocols.airdrop_ic_check(
            args.reward, args.sybils, omega_value=args.omega, g=g, theta=args.theta
        )
        checks = {"ic": check.is_ic}
        witness = None if check.is_ic else {
            "k_sybils": args.sybils,
            "honest_utility": check.honest_utility,
            "sybil_utility": check.sybil_utility,
        }
        params = {"reward": args.reward, "sybils": args.sybils}
    elif args.protocol == "pob":
        pob = protocols.PobParams(a=args.a, b_tokens=args.b, d=args.d, e=args.e, gamma=args.gamma)
        check = protocols.pob_ir_check(pob, omega_value=args.omega, g=g, theta=args.theta)
        checks = {"ir": check.is_ir}
        witness = None if check.is_ir else {
            "participate_utility": check.participate_utility,
            "abstain_utility": check.abstain_utility,
        }
        params = {"a": args.a, "b": args.b, "d": args.d, "e": args.e, "gamma": args.gamma}
    else:  # w2sb
        powers = _parse_float_list(args.powers, "--powers")
        w = protocols.W2sbParams(m=tuple(powers), chi=args.chi, r_b=args.rb)
        ir_ok, ic_ok = protocols.w2sb_conditions(w)
        checks = {"ir": ir_ok, "ic": ic_ok}
        witness = None
        if not (ir_ok and ic_ok):
            found = protocols.w2sb_find_profitable_deviation(w)
            if found:
                i, a, direction, gain = found
                witness = {"miner": i, "a": a, "direction": direction, "gain": gain}
        params = {"powers": powers, "chi": args.chi, "rb": args.rb}

    payload = {
        "schema": 1,
        "protocol": args.protocol,
        "params": params,
        "checks": checks,
        "witness": witness,
    }
    if args.out:
        write_json_atomic(args.out, payload)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.z <= args.x:
        raise CliError(f"--z must exceed --x, got z={args.z} x={args.x}", EXIT_USAGE)
    bound = protocols.round_count_lower_bound(args.psi, args.t0, args.rb, args.chi, args.z, args.x)
    payload = {
        "schema": 1,
        "psi": args.psi,
        "t0": args.t0,
        "rb": args.rb,
        "chi": args.chi,
        "z": args.z,
        "x": args.x,
        "t_lower": bound,
    }
    if args.out:
        write_json_atomic(args.out, payload)
    print(f"T_lower = {bound}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posboot",
        description="Stake-bootstrapping analysis: transfer-graph metrics, "
        "metric-robustness games, incentive checks, and bootstrap simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="score a ledger + valuations file")
    p.add_argument("--ledger", required=True, help="delimited file: round,from,to,amount")
    p.add_argument("--valuations", required=True, help="delimited file: player,theta_hat,theta")
    p.add_argument("--convention", choices=["paper", "undo"], default="paper")
    p.add_argument("--tau-th", type=float, default=1.0 / 3.0, dest="tau_th",
                   help="control threshold for the minimum controlling set (default 1/3)")
    p.add_argument("--tau", type=float, default=1.0, help="required participation fraction")
    p.add_argument("--delta", type=float, default=50.0, help="percentile for the stake-ratio check")
    p.add_argument("--epsilon", type=float, default=None,
                   help="proportionality tolerance; defaults to the derived bound")
    p.add_argument("--total-players", type=int, default=None,
                   help="population size for the participation check (default: ledger players)")
    p.add_argument("--baselines-on", choices=["stake", "scaled"], default="stake")
    p.add_argument("--box", type=float, nargs=2, default=[0.5, 2.0],
                   metavar=("LO", "HI"), help="worst-case search box as multiples of theta_hat")
    p.add_argument("--grid", type=int, default=5, help="grid points per player in the search")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.add_argument("--export-graph", default=None, help="write the netted graph JSON here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("game", help="run the metric-distinguishing game")
    p.add_argument("--metric", default="cnorm",
                   help="comma-separated metric names (cnorm, gini, entropy, nakamoto)")
    p.add_argument("--trials", type=int, default=20, help="trials per game (kappa)")
    p.add_argument("--repetitions", type=int, default=1, help="number of games per metric")
    p.add_argument("--players", type=int, default=8)
    p.add_argument("--sybil-fraction", type=float, default=0.25, dest="sybil_fraction")
    p.add_argument("--transfer-fraction", type=float, default=0.5, dest="transfer_fraction")
    p.add_argument("--min-edge-weight", type=float, default=None, dest="min_edge_weight",
                   help="minimum attacked-edge weight (default: 1%% of total stake)")
    p.add_argument("--convention", choices=["paper", "undo"], default="paper")
    p.add_argument("--tau-th", type=float, default=1.0 / 3.0, dest="tau_th")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("simulate", help="run the work-to-stake bootstrap simulation")
    p.add_argument("--dist", default="normal:7,3", help="power distribution, e.g. normal:7,3")
    p.add_argument("--players", type=int, default=1000)
    p.add_argument("--stop", type=int, default=1000, help="mining-phase stopping round")
    p.add_argument("--rounds", type=int, default=1000, help="total simulated rounds")
    p.add_argument("--rb", type=float, default=10.0, help="per-round stake reward")
    p.add_argument("--chi", type=float, default=1.0, help="per-unit-power round cost (metadata)")
    p.add_argument("--arrival", default="chisq:3,12.8", help="arrival spec: chisq:df,scale")
    p.add_argument("--pos", choices=["deterministic", "stochastic"], default="deterministic")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="trajectory", help="output path prefix")
    p.add_argument("--below", default=None, help="comma-separated z values to report")
    p.add_argument("--sweep", default=None, help="comma-separated descending z values")
    p.add_argument("--sweep-seeds", type=int, default=10, dest="sweep_seeds")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="incentive checks for a bootstrapping protocol")
    p.add_argument("--protocol", choices=["airdrop", "pob", "w2sb"], required=True)
    p.add_argument("--reward", type=float, default=1.0, help="airdrop per-identity reward")
    p.add_argument("--sybils", type=int, default=2, help="airdrop forged-identity count")
    p.add_argument("--a", type=float, default=1.0, help="pob burned amount")
    p.add_argument("--b", type=float, default=1.0, help="pob granted amount")
    p.add_argument("--d", type=float, default=1.0, help="pob old-token price")
    p.add_argument("--e", type=float, default=1.0, help="pob new-token price")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--powers", default="1,1", help="w2sb per-miner powers, comma-separated")
    p.add_argument("--chi", type=float, default=1.0, help="w2sb per-unit-power cost")
    p.add_argument("--rb", type=float, default=1.0, help="w2sb block reward")
    p.add_argument("--omega", type=float, default=0.0, help="centralization score in the utility")
    p.add_argument("--theta", type=float, default=1.0, help="private valuation in the utility")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bound", help="rounds needed to reach a target score")
    p.add_argument("--psi", type=float, required=True, help="joined fraction by round t0")
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--rb", type=float, required=True)
    p.add_argument("--chi", type=float, required=True)
    p.add_argument("--z", type=float, required=True, help="target score")
    p.add_argument("--x", type=float, required=True, help="tail mass, x < z")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (LedgerError, DegenerateProfileError, MetricDomainError, ParamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
