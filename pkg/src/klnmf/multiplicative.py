"""Multiplicative updates: alternating surrogate minimization for the KL objective.

Each half-update multiplies a factor entrywise by a data-to-product ratio
aggregated through the other factor, then clamps below at epsilon. Column
updates of H (and row updates of W) are mutually independent given the other
factor, and the implementation reduces them with a fixed summation order
(one matrix product), so results never depend on any parallel scheduling.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError
from .objective import support_ratio


def mu_update_H(V, W, H, WH, epsilon, col_sums_W=None) -> np.ndarray:
    """One multiplicative update of H with W fixed, clamped below at epsilon."""
    colsums = W.sum(axis=0) if col_sums_W is None else col_sums_W
    zero = np.flatnonzero(colsums <= 0)
    if zero.size:
        raise DegenerateInputError(
            f"column {zero[0]} of W has zero sum; the multiplicative update "
            "cannot move the corresponding row of H (zero locking)"
        )
    ratio = support_ratio(V, WH)
    Hnew = H * (W.T @ ratio) / colsums[:, None]
    if epsilon > 0:
        np.maximum(Hnew, epsilon, out=Hnew)
    return Hnew


def mu_update_W(V, W, H, WH, epsilon, row_sums_H=None) -> np.ndarray:
    """One multiplicative update of W with H fixed, clamped below at epsilon."""
    rowsums = H.sum(axis=1) if row_sums_H is None else row_sums_H
    zero = np.flatnonzero(rowsums <= 0)
    if zero.size:
        raise DegenerateInputError(
            f"row {zero[0]} of H has zero sum; the multiplicative update "
            "cannot move the corresponding column of W (zero locking)"
        )
    ratio = support_ratio(V, WH)
    Wnew = W * (ratio @ H.T) / rowsums[None, :]
    if epsilon > 0:
        np.maximum(Wnew, epsilon, out=Wnew)
    return Wnew


def mu_step(V, state, epsilon, h_first: bool = True):
    """One full alternating multiplicative sweep, in place on ``state``.

    The second half-update uses the refreshed product of the first, and the
    product cache is recomputed from scratch after each half (no incremental
    drift). The objective never increases. At epsilon = 0 the update of H
    makes the product match the column sums of the data exactly, and the
    update of W its row sums.
    """
    if h_first:
        state.H = mu_update_H(V, state.W, state.H, state.WH, epsilon, state.col_sums_W)
        state.row_sums_H = state.H.sum(axis=1)
        state.WH = state.W @ state.H
        state.W = mu_update_W(V, state.W, state.H, state.WH, epsilon, state.row_sums_H)
        state.col_sums_W = state.W.sum(axis=0)
        state.WH = state.W @ state.H
    else:
        state.W = mu_update_W(V, state.W, state.H, state.WH, epsilon, state.row_sums_H)
        state.col_sums_W = state.W.sum(axis=0)
        state.WH = state.W @ state.H
        state.H = mu_update_H(V, state.W, state.H, state.WH, epsilon, state.col_sums_W)
        state.row_sums_H = state.H.sum(axis=1)
        state.WH = state.W @ state.H
    return state


def mu_majorizer(h, h_ref, v, W) -> float:
    """Evaluate the separable surrogate that the multiplicative update minimizes.

    For a single column subproblem (data column v, dictionary W), the
    surrogate at point h with reference h_ref equals the column objective
    when h == h_ref and dominates it everywhere else. Terms with v == 0
    contribute only their product entry; weights with W == 0 contribute
    nothing (0 * log 0 = 0).
    """
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    h_ref = np.asarray(h_ref, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    W = np.asarray(W, dtype=np.float64)

    Wh = W @ h
    Wh_ref = W @ h_ref
    total = float(Wh.sum())
    pos = np.flatnonzero(v > 0)
    for i in pos:
        if Wh_ref[i] <= 0:
            raise ValueError(
                f"reference product vanishes at data row {i}; surrogate undefined"
            )
        support = np.flatnonzero(W[i] > 0)
        args = W[i, support] * h[support]
        if np.any(args <= 0):
            raise ValueError(
                f"log of nonpositive argument in surrogate at data row {i}"
            )
        weights = W[i, support] * h_ref[support] / Wh_ref[i]
        inner = float(weights @ (np.log(args) - np.log(weights)))
        vi = float(v[i])
        total += vi * math.log(vi) - vi * inner - vi
    return total
