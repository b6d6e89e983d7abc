"""Deterministic multi-node simulation of entangled commitment networks."""

from .engine import (
    Equivocate,
    ForkHistory,
    MetricsRecord,
    Simulation,
    WithholdReceipt,
    measure_latency,
)
from .topology import (
    Topology,
    bfs_distances,
    centralized,
    chain,
    fan,
    federated,
    interoperated,
    ring,
    validate_topology,
)

__all__ = [
    "Equivocate",
    "ForkHistory",
    "MetricsRecord",
    "Simulation",
    "Topology",
    "WithholdReceipt",
    "bfs_distances",
    "centralized",
    "chain",
    "fan",
    "federated",
    "interoperated",
    "measure_latency",
    "ring",
    "validate_topology",
]
