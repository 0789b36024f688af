"""The extended-valued KL objective and its first-order quantities.

All logarithms are natural (the objective is the Poisson negative
log-likelihood up to constants), with the conventions 0*log(0) = 0 and
a*log(0) = -inf for a > 0.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, NonDifferentiableError, ShapeError
from .matrices import as_matrix_array

#: Relative-error denominators smaller than this are treated as degenerate.
NORMALIZER_FLOOR = 1e-12


class ExtendedObjective:
    """KL objective value in [0, +inf] with the infinite state explicit.

    Values are built through :meth:`finite` / :meth:`infinite`; the infinite
    state is detected before any logarithm is taken, so IEEE infinities never
    arise from summation. Comparisons order the infinite state above every
    finite value. Finite values may be slightly negative (round-off only).
    """

    __slots__ = ("_value",)

    def __init__(self, value: float):
        value = float(value)
        if math.isnan(value):
            raise ValueError("objective value cannot be NaN")
        if value == -math.inf:
            raise ValueError("objective value cannot be -inf")
        self._value = value

    @classmethod
    def finite(cls, value: float) -> "ExtendedObjective":
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"finite objective required, got {value}")
        return cls(value)

    @classmethod
    def infinite(cls) -> "ExtendedObjective":
        return cls(math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self._value)

    @property
    def value(self) -> float:
        if not self.is_finite:
            raise ValueError("objective is +infinity; check is_finite first")
        return self._value

    def as_float(self) -> float:
        """The value with the infinite state mapped to IEEE +inf."""
        return self._value

    def __eq__(self, other):
        if isinstance(other, ExtendedObjective):
            return self._value == other._value
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExtendedObjective):
            return self._value < other._value
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, ExtendedObjective):
            return self._value <= other._value
        return NotImplemented

    def __hash__(self):
        return hash(self._value)

    def __repr__(self):
        if not self.is_finite:
            return "ExtendedObjective(+inf)"
        return f"ExtendedObjective({self._value!r})"


class RelativeError(NamedTuple):
    """Relative error value plus a flag for a degenerate normalizer.

    When ``degenerate`` is set the value is the raw (unnormalized) objective.
    """

    value: float
    degenerate: bool


def _check_conforming(V, W, H):
    m, n = V.shape
    if W.shape[0] != m or H.shape[1] != n or W.shape[1] != H.shape[0]:
        raise ShapeError(
            f"shapes do not conform: V={V.shape}, W={W.shape}, H={H.shape}"
        )


def support_ratio(V: np.ndarray, WH: np.ndarray) -> np.ndarray:
    """V / WH on the support of V, exact zeros elsewhere.

    Raises NonDifferentiableError if WH vanishes where V is positive.
    """
    mask = V > 0
    bad = mask & (WH <= 0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise NonDifferentiableError(
            f"product is 0 at ({i}, {j}) where the data is positive"
        )
    out = np.zeros_like(V)
    np.divide(V, WH, out=out, where=mask)
    return out


def kl_divergence(V, W, H) -> ExtendedObjective:
    """Sum over entries of WH - V*log(WH) + V*log(V) - V.

    Entries with V == 0 contribute exactly their WH term; the result is the
    infinite state as soon as V > 0 meets WH == 0.
    """
    V = as_matrix_array(V)
    W = as_matrix_array(W)
    H = as_matrix_array(H)
    _check_conforming(V, W, H)
    return _kl_of_product(V, W @ H)


def _kl_of_product(V: np.ndarray, WH: np.ndarray) -> ExtendedObjective:
    mask = V > 0
    v = V[mask]
    wh = WH[mask]
    if wh.size and float(wh.min()) <= 0.0:
        return ExtendedObjective.infinite()
    total = float(WH.sum())
    if v.size:
        total += float(v @ np.log(v / wh)) - float(v.sum())
    return ExtendedObjective.finite(total)


def kl_normalizer(V) -> float:
    """Sum of V * log(V / row_mean) with 0*log(0) = 0.

    This is the denominator used to turn objectives into relative errors; it
    is 0 for row-uniform data, which callers must guard.
    """
    V = as_matrix_array(V)
    n = V.shape[1]
    row_means = V.sum(axis=1, keepdims=True) / n
    mask = V > 0
    v = V[mask]
    if not v.size:
        return 0.0
    means = np.broadcast_to(row_means, V.shape)[mask]
    return float(v @ np.log(v / means))


def relative_error(V, W, H) -> RelativeError:
    """KL objective divided by the data normalizer.

    An infinite objective propagates as an infinite relative error; a
    near-zero normalizer (|.| < NORMALIZER_FLOOR) yields the raw objective
    with the degenerate flag set.
    """
    V = as_matrix_array(V)
    obj = kl_divergence(V, W, H)
    if not obj.is_finite:
        return RelativeError(math.inf, False)
    denom = kl_normalizer(V)
    if abs(denom) < NORMALIZER_FLOOR:
        return RelativeError(obj.value, True)
    return RelativeError(obj.value / denom, False)


def optimal_scale(V, W, H) -> float:
    """The multiplier of W that minimizes the objective along alpha * WH.

    Equals sum(V) / sum(WH); the pair is scaled exactly when this is 1.
    """
    V = as_matrix_array(V)
    W = as_matrix_array(W)
    H = as_matrix_array(H)
    _check_conforming(V, W, H)
    total_wh = float(W.sum(axis=0) @ H.sum(axis=1))
    if total_wh <= 0:
        raise DegenerateInputError("product sums to zero; optimal scale undefined")
    return float(V.sum()) / total_wh


def grad_W(V, W, H) -> np.ndarray:
    """Entrywise partial derivatives of the objective with respect to W.

    grad[i, k] = sum_j H[k, j] - sum_{j: V[i,j] > 0} V[i, j] H[k, j] / WH[i, j].
    """
    V = as_matrix_array(V)
    W = as_matrix_array(W)
    H = as_matrix_array(H)
    _check_conforming(V, W, H)
    ratio = support_ratio(V, W @ H)
    return H.sum(axis=1)[None, :] - ratio @ H.T


def grad_H(V, W, H) -> np.ndarray:
    """Entrywise partial derivatives with respect to H (transpose symmetry)."""
    V = as_matrix_array(V)
    W = as_matrix_array(W)
    H = as_matrix_array(H)
    _check_conforming(V, W, H)
    ratio = support_ratio(V, W @ H)
    return W.sum(axis=0)[:, None] - W.T @ ratio


def kkt_residual(V, W, H, epsilon: float = 0.0) -> float:
    """Largest violation of the first-order optimality system at (W, H).

    Each entry x with partial derivative g contributes
    max(-g, |(x - epsilon) * g|): the first term penalizes a descent
    direction into the feasible region, the second a nonzero derivative away
    from the bound. The result is 0 iff every entry satisfies both
    conditions exactly; non-differentiable points return +inf.
    """
    try:
        gw = grad_W(V, W, H)
        gh = grad_H(V, W, H)
    except NonDifferentiableError:
        return math.inf
    W = as_matrix_array(W)
    H = as_matrix_array(H)

    def worst(x, g):
        return max(float(np.max(-g)), float(np.max(np.abs((x - epsilon) * g))))

    return max(worst(W, gw), worst(H, gh), 0.0)


def perturbation_bound(V, rank: int, epsilon: float) -> float:
    """Allowed excess of the bounded-factor optimum over the unbounded one.

    Returns (min(n + m*rank, m + n*rank) * sqrt(sum(V)) + m*n*epsilon) * epsilon
    for an m-by-n data matrix.
    """
    V = as_matrix_array(V)
    m, n = V.shape
    nu = float(V.sum())
    return (min(n + m * rank, m + n * rank) * math.sqrt(nu) + m * n * epsilon) * epsilon


class KLObjective:
    """Precomputed pieces of the objective for one data matrix.

    Lets the solver driver evaluate the objective from a cached product in
    O(mn) and convert it to a relative error without recomputing masks or
    the normalizer at every sweep.
    """

    def __init__(self, V):
        V = as_matrix_array(V)
        self.V = V
        self.mask = V > 0
        self._v = V[self.mask]
        self._const = float(self._v @ np.log(self._v)) - float(self._v.sum()) if self._v.size else 0.0
        self.normalizer = kl_normalizer(V)
        self.degenerate_normalizer = abs(self.normalizer) < NORMALIZER_FLOOR

    def of_product(self, WH: np.ndarray) -> ExtendedObjective:
        wh = WH[self.mask]
        if wh.size and float(wh.min()) <= 0.0:
            return ExtendedObjective.infinite()
        total = float(WH.sum()) + self._const
        if wh.size:
            total -= float(self._v @ np.log(wh))
        return ExtendedObjective.finite(total)

    def relative(self, objective: ExtendedObjective) -> float:
        if not objective.is_finite:
            return math.inf
        if self.degenerate_normalizer:
            return objective.value
        return objective.value / self.normalizer
