"""Numerics for non-topological Chern-Simons-Higgs condensates on a flat torus."""
from .config import RunConfig
from .errors import CondensateError
from .torus_core import PeriodicField, Torus, VortexConfig

__all__ = ["CondensateError", "PeriodicField", "RunConfig", "Torus", "VortexConfig"]
