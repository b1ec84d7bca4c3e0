"""Transfer-ledger ingestion and the stake-transfer graph.

The ledger is an abstract transfer log: minting rows (from the GENESIS
sentinel) set player balances, transfer rows move stake between players.
Pairwise flows are netted into a single directed edge per pair, and cycles
are cancelled so the resulting graph is a DAG whose per-node net flow is
unchanged.
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
import tempfile
from dataclasses import dataclass

from .errors import LedgerError

GENESIS = "GENESIS"


@dataclass(frozen=True)
class TransferRecord:
    round: int
    src: str  # player id, or GENESIS for minting rows
    dst: str
    amount: float

    def __post_init__(self):
        if self.round < 0:
            raise LedgerError(f"negative round {self.round}")
        if not (math.isfinite(self.amount) and self.amount >= 0):
            raise LedgerError(f"amount must be finite and >= 0, got {self.amount}")
        if self.src == self.dst:
            raise LedgerError(f"self-transfer {self.src}->{self.dst}")
        if self.dst == GENESIS:
            raise LedgerError("GENESIS cannot receive stake")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: float


@dataclass(frozen=True)
class PosGraph:
    """Directed stake-transfer graph: node weights are current stakes,
    edge weights are netted positive flows. Immutable; at most one of
    (i->j, j->i) carries weight."""

    players: tuple[str, ...]
    stakes: tuple[float, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if len(self.players) != len(self.stakes):
            raise LedgerError("players and stakes length mismatch")
        seen = set()
        for e in self.edges:
            if e.src == e.dst:
                raise LedgerError(f"self-loop on {e.src}")
            if e.weight <= 0:
                raise LedgerError(f"non-positive edge weight {e.src}->{e.dst}")
            key = frozenset((e.src, e.dst))
            if key in seen:
                raise LedgerError(f"both directions present for pair {e.src},{e.dst}")
            seen.add(key)

    @property
    def n(self) -> int:
        return len(self.players)

    def index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.players)}

    def stake_of(self, player: str) -> float:
        return self.stakes[self.index()[player]]

    def edge_map(self) -> dict[tuple[str, str], float]:
        return {(e.src, e.dst): e.weight for e in self.edges}

    def without_edges(self) -> "PosGraph":
        return PosGraph(self.players, self.stakes, ())

    def is_acyclic(self) -> bool:
        return _topological_order(self) is not None


def ingest(records) -> tuple[dict[str, float], dict[tuple[str, str], float]]:
    """Replay records in round order and net pairwise flows.

    Returns (stakes per player, netted flows keyed by (src, dst)). For each
    unordered pair at most one direction survives with the absolute net;
    equal opposing flows cancel to no edge. Minting rows set balances and
    never create flows. A transfer whose sender balance cannot cover the
    amount is rejected.
    """
    stakes: dict[str, float] = {}
    gross: dict[tuple[str, str], float] = {}
    ordered = sorted(enumerate(records), key=lambda kv: (kv[1].round, kv[0]))
    for pos, rec in ordered:
        if rec.src == GENESIS:
            stakes[rec.dst] = stakes.get(rec.dst, 0.0) + rec.amount
            continue
        have = stakes.get(rec.src)
        if have is None:
            raise LedgerError(f"record {pos}: unknown sender {rec.src!r} with no prior balance")
        if rec.amount > have + 1e-12:
            raise LedgerError(
                f"record {pos}: overdraft, {rec.src} holds {have} but sends {rec.amount}"
            )
        stakes[rec.src] = have - rec.amount
        stakes[rec.dst] = stakes.get(rec.dst, 0.0) + rec.amount
        gross[(rec.src, rec.dst)] = gross.get((rec.src, rec.dst), 0.0) + rec.amount

    flows: dict[tuple[str, str], float] = {}
    for (a, b), w_ab in gross.items():
        if (b, a) in flows or (a, b) in flows:
            continue
        w_ba = gross.get((b, a), 0.0)
        net = w_ab - w_ba
        if net > 0:
            flows[(a, b)] = net
        elif net < 0:
            flows[(b, a)] = -net
        # net == 0: no connection
    return stakes, flows


def build_graph(records) -> PosGraph:
    """Ingest records and assemble the graph, players in first-appearance order."""
    players: list[str] = []
    seen = set()
    for rec in records:
        for p in (rec.src, rec.dst):
            if p != GENESIS and p not in seen:
                seen.add(p)
                players.append(p)
    stakes, flows = ingest(records)
    edges = tuple(
        Edge(a, b, w) for (a, b), w in sorted(flows.items()) if w > 0
    )
    return PosGraph(
        players=tuple(players),
        stakes=tuple(stakes.get(p, 0.0) for p in players),
        edges=edges,
    )


def _topological_order(graph: PosGraph) -> list[int] | None:
    """Kahn's algorithm; None if the edge set has a cycle."""
    idx = graph.index()
    indeg = [0] * graph.n
    nexts: list[list[int]] = [[] for _ in range(graph.n)]
    for e in graph.edges:
        nexts[idx[e.src]].append(idx[e.dst])
        indeg[idx[e.dst]] += 1
    ready = [i for i in range(graph.n) if indeg[i] == 0]
    order = []
    while ready:
        i = ready.pop()
        order.append(i)
        for j in nexts[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return order if len(order) == graph.n else None


def _find_cycle(adj: dict[str, dict[str, float]], node_order: list[str]) -> list[str] | None:
    """Iterative DFS; returns one directed cycle as a node list, or None."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {u: WHITE for u in node_order}
    parent: dict[str, str] = {}
    for root in node_order:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, list[str]]] = [(root, list(adj.get(root, {})))]
        color[root] = GRAY
        while stack:
            u, children = stack[-1]
            if children:
                v = children.pop(0)
                if color[v] == GRAY:
                    # back edge u -> v closes a cycle v -> ... -> u
                    cycle = [u]
                    while cycle[-1] != v:
                        cycle.append(parent[cycle[-1]])
                    cycle.reverse()
                    return cycle
                if color[v] == WHITE:
                    color[v] = GRAY
                    parent[v] = u
                    stack.append((v, list(adj.get(v, {}))))
            else:
                color[u] = BLACK
                stack.pop()
    return None


def eliminate_cycles(graph: PosGraph, order_seed: int | None = None) -> PosGraph:
    """Cancel directed cycles until the edge set is a DAG.

    Each detected cycle has its minimum edge weight subtracted from every
    edge on it, which zeroes at least one edge; zero-weight edges are
    dropped. Per-node net flow (in minus out) is preserved exactly, so any
    detection order yields the same effective stakes. The default order is
    deterministic (player order, neighbors sorted); pass order_seed to
    shuffle detection order, e.g. to check order-independence.
    """
    adj: dict[str, dict[str, float]] = {}
    for e in graph.edges:
        adj.setdefault(e.src, {})[e.dst] = e.weight

    rng = random.Random(order_seed) if order_seed is not None else None
    idx = graph.index()

    def ordering() -> list[str]:
        nodes = list(graph.players)
        if rng is not None:
            rng.shuffle(nodes)
            for u in adj:
                items = list(adj[u].items())
                rng.shuffle(items)
                adj[u] = dict(items)
        else:
            for u in adj:
                adj[u] = dict(sorted(adj[u].items(), key=lambda kv: idx[kv[0]]))
        return nodes

    while True:
        cycle = _find_cycle(adj, ordering())
        if cycle is None:
            break
        pairs = [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]
        w_min = min(adj[u][v] for u, v in pairs)
        for u, v in pairs:
            w = adj[u][v] - w_min
            if w > 0:
                adj[u][v] = w
            else:
                del adj[u][v]

    edges = tuple(
        Edge(u, v, w)
        for u in sorted(adj, key=idx.get)
        for v, w in sorted(adj[u].items(), key=lambda kv: idx[kv[0]])
    )
    return PosGraph(graph.players, graph.stakes, edges)


def effective_stakes(graph: PosGraph, convention: str = "paper") -> list[float]:
    """Per-player stake adjusted by netted transfer flows.

    convention="paper": stake + inflow - outflow (net receivers gain; a
    heavy net sender can go negative).
    convention="undo":  stake + outflow - inflow (transfers are reversed,
    recovering the pre-redistribution allocation).
    Both conserve total stake.
    """
    if convention not in ("paper", "undo"):
        raise ValueError(f"unknown convention {convention!r}")
    idx = graph.index()
    inflow = [0.0] * graph.n
    outflow = [0.0] * graph.n
    for e in graph.edges:
        outflow[idx[e.src]] += e.weight
        inflow[idx[e.dst]] += e.weight
    if convention == "paper":
        return [c + i - o for c, i, o in zip(graph.stakes, inflow, outflow)]
    return [c + o - i for c, i, o in zip(graph.stakes, inflow, outflow)]


# --- file formats ---

LEDGER_HEADER = ["round", "from", "to", "amount"]


def read_ledger_file(path) -> list[TransferRecord]:
    """Parse a delimited ledger file with header round,from,to,amount.

    Raises LedgerError mentioning the 1-based line number on malformed rows.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LedgerError(f"{path}: empty file") from None
        if [h.strip() for h in header] != LEDGER_HEADER:
            raise LedgerError(f"{path}: line 1: expected header {','.join(LEDGER_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise LedgerError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            try:
                rec = TransferRecord(
                    round=int(row[0]), src=row[1].strip(), dst=row[2].strip(),
                    amount=float(row[3]),
                )
            except (ValueError, LedgerError) as exc:
                raise LedgerError(f"{path}: line {lineno}: {exc}") from None
            records.append(rec)
    return records


def write_ledger_file(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_HEADER)
        for rec in records:
            writer.writerow([rec.round, rec.src, rec.dst, repr(rec.amount)])


def graph_to_json(graph: PosGraph) -> dict:
    return {
        "players": list(graph.players),
        "stakes": list(graph.stakes),
        "edges": [{"from": e.src, "to": e.dst, "weight": e.weight} for e in graph.edges],
    }


def graph_from_json(obj: dict) -> PosGraph:
    return PosGraph(
        players=tuple(obj["players"]),
        stakes=tuple(float(s) for s in obj["stakes"]),
        edges=tuple(Edge(e["from"], e["to"], float(e["weight"])) for e in obj["edges"]),
    )


def write_json_atomic(path, obj) -> None:
    """Whole-file atomic JSON write (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
