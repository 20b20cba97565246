"""Numeric tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    membership: float = 1e-9  # generator/constraint residual for point membership
    lp_feasibility: float = 1e-9  # primal feasibility passed to the LP backend
    vertex_dedup: float = 1e-7  # absolute distance below which vertices merge
    vertex_chord: float = 1e-9  # relative (to 1 + diameter) chord distance ending the edge search
    confidence_clamp: float = 1e-9  # confidences above 1 + this are rejected


TOL = Tolerances()
