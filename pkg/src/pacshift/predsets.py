"""Prediction-set calibrators and evaluation.

All calibrators return a threshold tau; the prediction set for a row is
every label whose score is at least tau.  A row's own score at exactly tau
counts as covered, so the empirical error of tau on a table counts rows
with true-label score strictly below tau.

Calibrators:

* ``ps_threshold``   - unshifted PAC threshold from the binomial tail bound.
* ``psw_threshold``  - worst-case threshold over a weight box: the minimum,
  over all weight vectors in the box, of the PAC threshold computed on the
  rejection-sampled source.  Computed exactly via a per-label breakpoint /
  dynamic-programming scheme (acceptance patterns are piecewise constant in
  the weights, so finitely many cells cover the box).
* ``psc_threshold``  - conservative baseline: inflate the error budget by
  the envelope bound b and calibrate unweighted.
* ``psr_threshold``  - rejection sampling with plug-in weights, ignoring
  their uncertainty (no guarantee under shift).
* ``wcp_threshold``  - weighted split-conformal quantile with plug-in
  weights, targeting marginal coverage only (no test-point correction
  term; approximate by design).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .binomial import NO_FEASIBLE_K, RiskParams, binom_k
from .intervals import Aborted, WeightBox
from .tables import ScoreTable

CALIBRATED = "calibrated"
FULL_SET = "full_set"
ABORTED = "aborted"


@dataclass(frozen=True)
class ThresholdResult:
    """Calibrated tau, or a full-set / aborted sentinel."""

    tau: float
    status: str

    def __post_init__(self):
        if (self.status == FULL_SET) != (self.tau == -math.inf):
            raise ValueError("status is full_set iff tau is -inf")


def full_set_result() -> ThresholdResult:
    return ThresholdResult(tau=-math.inf, status=FULL_SET)


def aborted_result() -> ThresholdResult:
    return ThresholdResult(tau=math.nan, status=ABORTED)


@dataclass
class AcceptanceRandomness:
    """The uniform draws V used by rejection sampling, one per source row."""

    v: np.ndarray
    seed: int

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if np.any((self.v < 0) | (self.v > 1)):
            raise ValueError("acceptance uniforms must lie in [0, 1]")

    @classmethod
    def draw(cls, m: int, seed: int) -> "AcceptanceRandomness":
        rng = np.random.default_rng(seed)
        return cls(v=rng.uniform(size=m), seed=seed)


def ps_threshold(src: ScoreTable, rp: RiskParams) -> ThresholdResult:
    """Largest tau whose empirical error count stays within the binomial bound.

    Candidates are the observed true-label scores; the answer is the
    (k+1)-th smallest where k is the binomial tail inversion.  Returns a
    full set when no error count is admissible.
    """
    scores = np.sort(src.true_scores())
    k = binom_k(src.n, rp)
    if k is NO_FEASIBLE_K:
        return full_set_result()
    return ThresholdResult(tau=float(scores[k]), status=CALIBRATED)


def rejection_sample(
    src: ScoreTable, v: AcceptanceRandomness, w: np.ndarray, b: float
) -> np.ndarray:
    """Indices of source rows accepted with probability w[y_i] / b.

    Row i is accepted iff v_i <= w[y_i] / b.  Negative weights are clamped
    to zero (never accept).
    """
    if b <= 0:
        raise ValueError("envelope b must be positive")
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    if np.any(w > b * (1 + 1e-12)):
        raise ValueError("weights must not exceed the envelope b")
    if len(v.v) != src.n:
        raise ValueError("need one uniform per source row")
    return np.flatnonzero(v.v <= w[src.labels] / b)


def _per_label_acceptance(src, v, box):
    """Per-label acceptance structure for the worst-case minimization.

    For label k, acceptance under any w_k in the box is a prefix of the
    label's rows sorted by v.  Returns, per label, the achievable prefix
    lengths (respecting ties in v * b) and the v-sorted true-label scores.
    """
    b = box.envelope_b
    w_lo = box.clamped_lo()
    w_hi = box.hi
    s_true = src.true_scores()
    thresholds = v.v * b
    per_label = []
    for k in range(src.k):
        idx = np.flatnonzero(src.labels == k)
        tk = thresholds[idx]
        order = np.argsort(tk, kind="stable")
        tk = tk[order]
        sk = s_true[idx][order]
        a_min = int(np.searchsorted(tk, w_lo[k], side="right"))
        a_max = int(np.searchsorted(tk, w_hi[k], side="right"))
        achievable = [a_min]
        for a in range(a_min + 1, a_max + 1):
            # Tied v values accept together; only tie-group boundaries count.
            if a == len(tk) or tk[a] > tk[a - 1]:
                achievable.append(a)
        per_label.append((np.array(achievable, dtype=int), sk))
    return per_label


def psw_threshold(
    src: ScoreTable, v: AcceptanceRandomness, box: WeightBox | Aborted, rp: RiskParams
) -> ThresholdResult:
    """min over w in the box of the PAC threshold on the rejection-sampled source.

    A candidate tau is attainable iff for every feasible acceptance pattern
    the accepted error count stays within the binomial bound at the
    accepted sample size.  Per label the feasible patterns are v-sorted
    prefixes between two breakpoint counts; a DP over labels gives the
    worst total error for each total accepted count, and a binary search
    over the (monotone) candidate grid finds the largest attainable tau.
    """
    if isinstance(box, Aborted):
        return aborted_result()
    if not src.is_labeled:
        raise ValueError("source table must be labeled")
    per_label = _per_label_acceptance(src, v, box)

    n_max = sum(int(acc[-1]) for acc, _ in per_label)
    kbin = np.empty(n_max + 1, dtype=np.int64)
    for n in range(n_max + 1):
        res = binom_k(n, rp)
        kbin[n] = -1 if res is NO_FEASIBLE_K else res

    def fails(tau: float) -> bool:
        # dp[N] = worst (max) total error count over patterns of total size N;
        # -1 marks unreachable sizes.
        dp = np.full(n_max + 1, -1, dtype=np.int64)
        dp[0] = 0
        for acc, sk in per_label:
            errs = np.concatenate(([0], np.cumsum(sk < tau)))
            new_dp = np.full(n_max + 1, -1, dtype=np.int64)
            for a in acc:
                e = errs[a]
                seg = dp[: n_max + 1 - a]
                shifted = np.where(seg < 0, -1, seg + e)
                np.maximum(new_dp[a:], shifted, out=new_dp[a:])
            dp = new_dp
        reachable = dp >= 0
        return bool(np.any(reachable & ((kbin < 0) | (dp > kbin))))

    candidates = np.unique(src.true_scores())
    # fails() is monotone in tau: raising tau only adds errors.
    if fails(candidates[0]):
        return full_set_result()
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fails(candidates[mid]):
            hi = mid - 1
        else:
            lo = mid
    return ThresholdResult(tau=float(candidates[lo]), status=CALIBRATED)


def psc_threshold(
    src: ScoreTable, box: WeightBox | Aborted, rp: RiskParams
) -> ThresholdResult:
    """Conservative threshold: unweighted calibration at error budget eps / b."""
    if isinstance(box, Aborted):
        return aborted_result()
    eps = min(rp.epsilon / box.envelope_b, 1.0 - 1e-15)
    return ps_threshold(src, RiskParams(epsilon=eps, delta=rp.delta))


def psr_threshold(
    src: ScoreTable, v: AcceptanceRandomness, pointw: np.ndarray, rp: RiskParams
) -> ThresholdResult:
    """Rejection-sample with plug-in weights, then calibrate unweighted."""
    w = np.clip(np.asarray(pointw, dtype=float), 0.0, None)
    b = float(w.max())
    if b <= 0:
        return full_set_result()
    idx = rejection_sample(src, v, w, b)
    return ps_threshold(src.subset(idx), rp)


def wcp_threshold(src: ScoreTable, pointw: np.ndarray, eps: float) -> ThresholdResult:
    """Weighted empirical quantile: largest tau with weighted error mass <= eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    pointw = np.asarray(pointw, dtype=float)
    u = pointw[src.labels]
    total = u.sum()
    if total <= 0:
        raise ValueError("all weights are zero")
    order = np.argsort(src.true_scores(), kind="stable")
    s = src.true_scores()[order]
    cum = np.concatenate(([0.0], np.cumsum(u[order])))
    vals, first = np.unique(s, return_index=True)
    below = cum[first]  # weight mass strictly below each distinct score
    ok = below <= eps * total
    return ThresholdResult(tau=float(vals[ok][-1]), status=CALIBRATED)


def evaluate_set(result: ThresholdResult, test: ScoreTable) -> tuple[float, float]:
    """Prediction-set error and average size on a labeled test table.

    Full sets (and aborted calibrations, which degrade to full sets) have
    error 0 and size K.
    """
    if result.status != CALIBRATED:
        return 0.0, float(test.k)
    err = int(np.count_nonzero(test.true_scores() < result.tau))
    sizes = int(np.count_nonzero(test.scores >= result.tau))
    return err / test.n, sizes / test.n
