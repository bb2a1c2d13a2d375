"""Barrier-pair funnel synthesis and planning for planar manipulators."""

__version__ = "0.1.0"

from . import config, dynamics, executor, ldi, logic, planner, sdp, synthesis, viz, world

__all__ = [
    "__version__",
    "config",
    "dynamics",
    "executor",
    "ldi",
    "logic",
    "planner",
    "sdp",
    "synthesis",
    "viz",
    "world",
]
