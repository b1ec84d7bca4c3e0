import pytest

from posboot.ledger import (
    GENESIS,
    Edge,
    PosGraph,
    TransferRecord,
    build_graph,
    eliminate_cycles,
)

# Seven-player fixture used throughout: one large holder splits 10 units of
# its genesis allocation across two fresh identities, leaving final stakes
# {2,5,5,5,5,5,5} and two weight-5 edges.
E1_RECORDS = [
    TransferRecord(0, GENESIS, "p1", 12.0),
    TransferRecord(0, GENESIS, "p4", 5.0),
    TransferRecord(0, GENESIS, "p5", 5.0),
    TransferRecord(0, GENESIS, "p6", 5.0),
    TransferRecord(0, GENESIS, "p7", 5.0),
    TransferRecord(1, "p1", "p2", 5.0),
    TransferRecord(1, "p1", "p3", 5.0),
]

E1_THETA = {"p1": 2.0, "p2": 5.0, "p3": 5.0, "p4": 5.0, "p5": 5.0, "p6": 5.0, "p7": 5.0}


@pytest.fixture
def e1_graph():
    return eliminate_cycles(build_graph(E1_RECORDS))


@pytest.fixture
def e1_theta(e1_graph):
    return tuple(E1_THETA[p] for p in e1_graph.players)


def random_cyclic_graph(rng, min_cycles=1):
    """Random netted graph containing at least min_cycles simple cycles
    (counted with networkx as an independent oracle). Stakes cover each
    node's outflow so effective stakes stay positive."""
    import networkx as nx

    while True:
        n = rng.randint(4, 9)
        players = tuple(f"p{i}" for i in range(n))
        edges = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    pair = (
                        (players[i], players[j])
                        if rng.random() < 0.5
                        else (players[j], players[i])
                    )
                    edges[pair] = rng.uniform(0.5, 5.0)
        found = 0
        for _ in nx.simple_cycles(nx.DiGraph(list(edges))):
            found += 1
            if found >= min_cycles:
                break
        if found < min_cycles:
            continue
        out = {p: 0.0 for p in players}
        for (a, _), w in edges.items():
            out[a] += w
        stakes = tuple(out[p] + rng.uniform(1.0, 10.0) for p in players)
        return PosGraph(players, stakes, tuple(Edge(a, b, w) for (a, b), w in edges.items()))


def net_flow(graph):
    flow = {p: 0.0 for p in graph.players}
    for e in graph.edges:
        flow[e.dst] += e.weight
        flow[e.src] -= e.weight
    return flow
