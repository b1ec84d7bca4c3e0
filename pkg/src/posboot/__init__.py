"""Stake-bootstrapping analysis toolkit.

Builds a netted, acyclic stake-transfer graph from a ledger, scores its
centralization (transfer-aware half-L1 score plus Gini/entropy/minimum
controlling set baselines), plays a distinguishing game that measures a
metric's power to detect hidden stake splitting, checks bootstrapping
protocols for individual rationality and incentive compatibility in
closed form, and simulates a work-to-stake bootstrap round by round.
"""

from .errors import (
    DegenerateProfileError,
    LedgerError,
    MetricDomainError,
    ParamError,
    PosbootError,
)
from .ledger import (
    GENESIS,
    Edge,
    PosGraph,
    TransferRecord,
    build_graph,
    effective_stakes,
    eliminate_cycles,
    ingest,
)
from .metrics import (
    DecentralizationCheck,
    MetricReport,
    ValuationProfile,
    check_decentralization,
    cnorm,
    cnorm_worstcase,
    entropy,
    gini,
    nakamoto,
    scaled_stake,
    stake_fractions,
)

__version__ = "0.1.0"
