"""Concurrent B-skiplist: fixed-size nodes, one-pass top-down inserts,
hand-over-hand reader-writer locking, plus a YCSB-style benchmark harness."""
from .index import AuditReport, BSkipList, Counters, KeyDomainError
from .locking import LockMode, LockTracer, RWLock, hoh_advance, mode_for
from .node import MAX_KEY, MIN_KEY, PLUS_INF, Node
from .promotion import HeightSampler, PromotionParams, sample_height

__all__ = [
    "AuditReport",
    "BSkipList",
    "Counters",
    "HeightSampler",
    "KeyDomainError",
    "LockMode",
    "LockTracer",
    "MAX_KEY",
    "MIN_KEY",
    "Node",
    "PLUS_INF",
    "PromotionParams",
    "RWLock",
    "hoh_advance",
    "mode_for",
    "sample_height",
]

__version__ = "0.1.0"
