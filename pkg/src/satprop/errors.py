"""Shared exception types."""


class CapacityError(RuntimeError):
    """A brute-force enumeration or graph build exceeds its size guard."""


class DegeneracyError(RuntimeError):
    """A message, belief, or distribution normalised to zero mass."""
