"""Hyperset model of semi-structured web-like databases and its query system.

Data lives as distributed systems of flat set equations (XML-WDB files);
queries reduce over the equations, with equality decided by bisimulation,
optionally accelerated by per-file approximations and a background engine.
"""

from .names import Element, EquationSystem, SetName
from .bisim import FactStore, bisimilar, naive_bisimulation
from .store import SessionStore

__all__ = [
    "Element", "EquationSystem", "SetName",
    "FactStore", "bisimilar", "naive_bisimulation",
    "SessionStore",
]
