"""Dynamic approximate maximum independent sets of intervals and squares."""

from geomis.geometry import (
    CellId,
    Interval,
    QuadrantLabel,
    QuadRoot,
    RationalKey,
    Square,
    key_between,
)

__all__ = [
    "CellId",
    "Interval",
    "QuadrantLabel",
    "QuadRoot",
    "RationalKey",
    "Square",
    "key_between",
]
