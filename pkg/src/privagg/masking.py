"""Modular masking arithmetic for the chained secure-sum protocol.

All values are residues in the additive ring of integers modulo ``m``.  An
aggregation round starts from a random initial mask, folds one private value
per node into the running masked total, and recovers the aggregate at the end
by subtracting the mask.  As long as the true sum of the folded values stays
below ``m``, the recovered value is exact, and each intermediate value is a
uniformly distributed residue whenever the initial mask was drawn uniformly.

Values are plain Python integers, so moduli well beyond 2**62 work without
any overflow concern.
"""

from __future__ import annotations


def _check_modulus(m: int) -> None:
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")


def _check_residue(name: str, value: int, m: int) -> None:
    if not 0 <= value < m:
        raise ValueError(f"{name} must be in [0, {m}), got {value}")


def mask_initial(x: int, r: int, m: int) -> int:
    """Fold the first private value into a fresh random mask: (r + x) mod m."""
    _check_modulus(m)
    _check_residue("private value", x, m)
    _check_residue("initial mask", r, m)
    return (r + x) % m


def chain_add(prev: int, x: int, m: int) -> int:
    """Fold one more private value into the running masked total."""
    _check_modulus(m)
    _check_residue("masked value", prev, m)
    _check_residue("private value", x, m)
    return (prev + x) % m


def unmask(final: int, r: int, m: int) -> int:
    """Strip the initial mask off a completed chain: (final - r) mod m.

    Equals the true sum of all folded private values whenever that sum is
    below ``m``.
    """
    _check_modulus(m)
    _check_residue("masked value", final, m)
    _check_residue("initial mask", r, m)
    return (final - r) % m


def collusion_recover(r_i: int, r_prev: int, m: int) -> int:
    """Difference of two consecutive chain values: (r_i - r_prev) mod m.

    Anyone who observes both the masked value entering a node and the masked
    value leaving it learns that node's private contribution exactly; this is
    the quantity every attack analysis in this package computes.
    """
    _check_modulus(m)
    _check_residue("masked value", r_i, m)
    _check_residue("masked value", r_prev, m)
    return (r_i - r_prev) % m
