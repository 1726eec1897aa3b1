"""Dataset-dependent quantities that parametrize the search space."""

from __future__ import annotations

import math
from dataclasses import dataclass


class ContextError(ValueError):
    """Raised when a dataset context violates its preconditions."""


@dataclass(frozen=True)
class DatasetContext:
    """Label count ``L`` and attribute count ``A`` of the target dataset."""

    L: int
    A: int

    def __post_init__(self):
        for name, value, least in (("L", self.L, 2), ("A", self.A, 1)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ContextError(f"{name} must be an integer, got {value!r}")
            if value < least:
                raise ContextError(f"{name} must be >= {least}, got {value}")

    @property
    def n_attributes(self) -> int:
        return self.A


def round_half_up(x: float) -> int:
    """Round to the nearest integer, ties away from zero for positive input."""
    return int(math.floor(x + 0.5))
