"""Interval Gaussian elimination.

Propagates elementwise confidence intervals for a nonnegative coefficient
matrix and right-hand side through the forward sweep and back-substitution
of Gaussian elimination, so that the resulting box provably contains the
exact solution whenever the inputs contain the true system.

Two modes:

* ``strict``  - the textbook update rules; aborts as soon as any
  off-diagonal lower bound goes negative (or a diagonal / rhs lower bound
  is nonpositive).  All intermediate bounds stay nonnegative, so plain
  endpoint formulas are sound.
* ``relaxed`` (default) - tolerates negative off-diagonal lower bounds by
  taking min/max over all endpoint sign combinations of each product and
  quotient.  Slightly wider intervals, far fewer spurious aborts.

No row pivoting: a nonpositive pivot lower bound is an abort, never a swap
(interval bounds after a swap are not well defined here).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STRICT = "strict"
RELAXED = "relaxed"
_MODES = (STRICT, RELAXED)


@dataclass
class IntervalMatrix:
    """Elementwise interval [lo, hi] around a K x K matrix."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 2:
            raise ValueError("lo/hi must be matrices of the same shape")
        if self.lo.shape[0] != self.lo.shape[1] or self.lo.shape[0] < 2:
            raise ValueError("matrix must be square with K >= 2")
        if np.any(self.lo > self.hi):
            raise ValueError("lo must be <= hi elementwise")

    @property
    def k(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def exact(cls, a) -> "IntervalMatrix":
        a = np.asarray(a, dtype=float)
        return cls(a.copy(), a.copy())


@dataclass
class IntervalVector:
    """Elementwise interval [lo, hi] around a K-vector."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("lo/hi must be vectors of the same shape")
        if np.any(self.lo > self.hi):
            raise ValueError("lo must be <= hi elementwise")

    @classmethod
    def exact(cls, v) -> "IntervalVector":
        v = np.asarray(v, dtype=float)
        return cls(v.copy(), v.copy())


@dataclass
class WeightBox:
    """Per-label interval [lo_k, hi_k] around the importance weights.

    Lower bounds may be negative; consumers clamp them to 0 when used as
    sampling probabilities.  ``envelope_b`` is max_k hi_k, the common upper
    bound used for rejection sampling and the conservative risk inflation.
    """

    lo: np.ndarray
    hi: np.ndarray
    envelope_b: float

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise ValueError("lo must be <= hi elementwise")
        if np.any(self.hi <= 0):
            raise ValueError("weight upper bounds must be positive")
        if abs(self.envelope_b - float(self.hi.max())) > 1e-12:
            raise ValueError("envelope_b must equal max(hi)")

    @classmethod
    def from_bounds(cls, lo, hi) -> "WeightBox":
        hi = np.asarray(hi, dtype=float)
        return cls(lo=np.asarray(lo, dtype=float), hi=hi, envelope_b=float(hi.max()))

    def contains(self, w) -> bool:
        w = np.asarray(w, dtype=float)
        return bool(np.all(self.lo <= w) and np.all(w <= self.hi))

    def clamped_lo(self) -> np.ndarray:
        return np.clip(self.lo, 0.0, None)


@dataclass(frozen=True)
class Aborted:
    """Elimination gave up: a positivity condition failed at `step`."""

    step: int
    reason: str


def _check_positivity(c_lo, q_lo, mode, step):
    k = c_lo.shape[0]
    diag = np.diag(c_lo)
    if np.any(diag <= 0):
        i = int(np.argmax(diag <= 0))
        return Aborted(step, f"diagonal lower bound c[{i},{i}] <= 0")
    if np.any(q_lo <= 0):
        i = int(np.argmax(q_lo <= 0))
        return Aborted(step, f"rhs lower bound q[{i}] <= 0")
    if mode == STRICT:
        off = c_lo - np.diag(diag)
        if np.any(off < 0):
            i, j = np.unravel_index(int(np.argmin(off)), (k, k))
            return Aborted(step, f"off-diagonal lower bound c[{i},{j}] < 0")
    return None


def _ratio_bounds(num_lo, num_hi, den_lo, den_hi):
    """Min/max of (a * b) / d over a*b in [num products], d in [den_lo, den_hi] > 0.

    `num_lo`, `num_hi` here are already the product-endpoint candidates;
    this helper just forms all quotient combinations.
    """
    cands = np.stack(
        [num_lo / den_lo, num_lo / den_hi, num_hi / den_lo, num_hi / den_hi]
    )
    return cands.min(axis=0), cands.max(axis=0)


def _prod_bounds(a_lo, a_hi, b_lo, b_hi):
    cands = np.stack([a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi])
    return cands.min(axis=0), cands.max(axis=0)


def forward_sweep(c: IntervalMatrix, q: IntervalVector, mode: str = RELAXED):
    """Run the elimination phase; returns (c_lo, c_hi, q_lo, q_hi) or Aborted."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    K = c.k
    c_lo, c_hi = c.lo.copy(), c.hi.copy()
    q_lo, q_hi = q.lo.copy(), q.hi.copy()

    for t in range(K - 1):
        bad = _check_positivity(c_lo, q_lo, mode, t)
        if bad is not None:
            return bad
        k = t
        piv_lo, piv_hi = c_lo[k, k], c_hi[k, k]
        rows = slice(k + 1, K)
        if mode == STRICT:
            # All bounds nonnegative here, so endpoint formulas are exact.
            sub_lo = np.outer(c_hi[rows, k], c_hi[k, rows]) / piv_lo
            sub_hi = np.outer(c_lo[rows, k], c_lo[k, rows]) / piv_hi
            new_c_lo = c_lo[rows, rows] - sub_lo
            new_c_hi = c_hi[rows, rows] - sub_hi
            qsub_lo = c_hi[rows, k] * q_hi[k] / piv_lo
            qsub_hi = c_lo[rows, k] * q_lo[k] / piv_hi
            new_q_lo = q_lo[rows] - qsub_lo
            new_q_hi = q_hi[rows] - qsub_hi
        else:
            p_lo, p_hi = _prod_bounds(
                c_lo[rows, k][:, None],
                c_hi[rows, k][:, None],
                c_lo[k, rows][None, :],
                c_hi[k, rows][None, :],
            )
            r_lo, r_hi = _ratio_bounds(p_lo, p_hi, piv_lo, piv_hi)
            new_c_lo = c_lo[rows, rows] - r_hi
            new_c_hi = c_hi[rows, rows] - r_lo
            qp_lo, qp_hi = _prod_bounds(c_lo[rows, k], c_hi[rows, k], q_lo[k], q_hi[k])
            qr_lo, qr_hi = _ratio_bounds(qp_lo, qp_hi, piv_lo, piv_hi)
            new_q_lo = q_lo[rows] - qr_hi
            new_q_hi = q_hi[rows] - qr_lo

        c_lo[rows, rows] = new_c_lo
        c_hi[rows, rows] = new_c_hi
        q_lo[rows] = new_q_lo
        q_hi[rows] = new_q_hi
        # Exact elimination zeroes the pivot column below the diagonal.
        c_lo[rows, k] = 0.0
        c_hi[rows, k] = 0.0

    bad = _check_positivity(c_lo, q_lo, mode, K - 1)
    if bad is not None:
        return bad
    return c_lo, c_hi, q_lo, q_hi


def back_substitute(c_lo, c_hi, q_lo, q_hi, mode: str = RELAXED):
    """Back-substitution on the eliminated interval system.

    Relaxed mode uses sign-aware interval products and quotients so the
    bounds stay valid even when earlier weight lower bounds went negative;
    strict mode uses the plain endpoint formulas (valid there because all
    intermediate bounds are nonnegative and weight intervals stay positive
    in the regimes where strict mode survives the sweep).
    """
    K = c_lo.shape[0]
    w_lo = np.zeros(K)
    w_hi = np.zeros(K)
    for i in range(K - 1, -1, -1):
        tail = slice(i + 1, K)
        if mode == STRICT:
            s_lo = float(c_lo[i, tail] @ w_lo[tail])
            s_hi = float(c_hi[i, tail] @ w_hi[tail])
            w_lo[i] = (q_lo[i] - s_hi) / c_hi[i, i]
            w_hi[i] = (q_hi[i] - s_lo) / c_lo[i, i]
        else:
            t_lo, t_hi = _prod_bounds(c_lo[i, tail], c_hi[i, tail], w_lo[tail], w_hi[tail])
            s_lo, s_hi = float(t_lo.sum()), float(t_hi.sum())
            num_lo = q_lo[i] - s_hi
            num_hi = q_hi[i] - s_lo
            w_lo[i] = num_lo / (c_hi[i, i] if num_lo >= 0 else c_lo[i, i])
            w_hi[i] = num_hi / (c_lo[i, i] if num_hi >= 0 else c_hi[i, i])
    return w_lo, w_hi


def interval_gauss_elim(c: IntervalMatrix, q: IntervalVector, mode: str = RELAXED):
    """Solve the interval system, returning a WeightBox or Aborted.

    Guarantee: if the true (C, q) lie inside the input intervals and no
    abort occurs, the exact solution C^-1 q lies in the returned box.
    """
    swept = forward_sweep(c, q, mode)
    if isinstance(swept, Aborted):
        return swept
    w_lo, w_hi = back_substitute(*swept, mode=mode)
    if np.any(w_hi <= 0):
        i = int(np.argmax(w_hi <= 0))
        return Aborted(c.k - 1, f"nonpositive weight upper bound w[{i}]")
    return WeightBox.from_bounds(w_lo, w_hi)
